import logging
import os
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns

from contamination import ContaminationReport
from segment import ScoreMatrix

logger = logging.getLogger(__name__)


def roc_points(scores: Sequence[float], labels: Sequence[int]) -> Tuple[List[float], List[float]]:
    """(false positive rates, true positive rates), one point per distinct score, descending."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    fpr, tpr = [0.0], [0.0]
    for cut in sorted(set(scores.tolist()), reverse=True):
        predicted = scores >= cut
        tpr.append(float((predicted & (labels == 1)).sum()) / n_pos)
        fpr.append(float((predicted & (labels == 0)).sum()) / n_neg)
    return fpr, tpr


class AlignmentVisualizer:
    def __init__(self, output_dir: str = "charts"):
        self.output_dir = output_dir

        sns.set_theme(style="whitegrid")
        sns.set_palette("husl")

        os.makedirs(self.output_dir, exist_ok=True)

    def _save(self, filename: str) -> str:
        path = os.path.join(self.output_dir, filename)
        plt.tight_layout()
        plt.savefig(path, dpi=150, bbox_inches="tight")
        plt.close()
        logger.info("chart saved to %s", path)
        return path

    def plot_score_matrix(
        self,
        matrix: ScoreMatrix,
        chunk_labels: Optional[Sequence[str]] = None,
        sentence_labels: Optional[Sequence[str]] = None,
        filename: str = "score_matrix.png",
    ) -> str:
        """Heatmap of chunk x claim-sentence scores with the column maxima marked"""
        rows, cols = matrix.values.shape
        plt.figure(figsize=(max(6, 1.2 * cols + 2), max(4, 0.6 * rows + 2)))
        ax = sns.heatmap(
            matrix.values,
            vmin=0.0,
            vmax=1.0,
            annot=rows * cols <= 100,
            fmt=".2f",
            cmap="viridis",
            xticklabels=list(sentence_labels) if sentence_labels else [f"S{j}" for j in range(cols)],
            yticklabels=list(chunk_labels) if chunk_labels else [f"C{i}" for i in range(rows)],
        )
        best = matrix.values.argmax(axis=0)
        for j, i in enumerate(best):
            ax.add_patch(plt.Rectangle((j, i), 1, 1, fill=False, edgecolor="red", linewidth=2))

        plt.title(f"Alignment scores ({matrix.head.value} head)", fontsize=14, fontweight="bold")
        plt.xlabel("Claim sentence")
        plt.ylabel("Context chunk")
        return self._save(filename)

    def plot_roc_curve(self, scores: Sequence[float], labels: Sequence[int], auc: float,
                       filename: str = "roc_curve.png") -> str:
        fpr, tpr = roc_points(scores, labels)

        plt.figure(figsize=(7, 7))
        plt.plot(fpr, tpr, marker="o", linewidth=2, label=f"AUC = {auc:.3f}")
        plt.plot([0, 1], [0, 1], linestyle="--", color="gray", alpha=0.7)
        plt.xlim(0, 1)
        plt.ylim(0, 1)
        plt.xlabel("False positive rate")
        plt.ylabel("True positive rate")
        plt.title("Unanswerable detection ROC", fontsize=14, fontweight="bold")
        plt.legend(loc="lower right")
        return self._save(filename)

    def plot_threshold_sweep(self, sweep: Sequence[Tuple[float, float]], chosen: Optional[float] = None,
                             filename: str = "threshold_sweep.png") -> str:
        thresholds = [tau for tau, _ in sweep]
        f1s = [f1 for _, f1 in sweep]

        plt.figure(figsize=(10, 6))
        plt.step(thresholds, f1s, where="post", linewidth=2, color="navy")
        plt.scatter(thresholds, f1s, s=30, color="navy", alpha=0.7)
        if chosen is not None:
            plt.axvline(chosen, color="red", linestyle="--", label=f"chosen = {chosen:.3f}")
            plt.legend()
        plt.xlabel("Unanswerable threshold")
        plt.ylabel("Mean F1")
        plt.title("Dev F1 by threshold", fontsize=14, fontweight="bold")
        plt.grid(True, alpha=0.3)
        return self._save(filename)

    def plot_contamination(self, report: ContaminationReport, metric_name: str,
                           filename: str = "contamination.png") -> str:
        """Full, clean and dirty metric bars; suppressed subsets are drawn as empty labels"""
        names = ["full", "clean", "dirty"]
        values = [report.metric_full, report.metric_clean, report.metric_dirty]

        plt.figure(figsize=(8, 6))
        heights = [value if value is not None else 0.0 for value in values]
        bars = plt.bar(names, heights, color=["steelblue", "seagreen", "indianred"], alpha=0.8)
        for bar, value in zip(bars, values):
            label = f"{value:.3f}" if value is not None else "n/a"
            plt.text(bar.get_x() + bar.get_width() / 2, bar.get_height(), label,
                     ha="center", va="bottom", fontweight="bold")

        plt.ylabel(metric_name)
        plt.title(f"Contamination at n={report.n} ({report.dirty_fraction:.1%} dirty)",
                  fontsize=14, fontweight="bold")
        return self._save(filename)
