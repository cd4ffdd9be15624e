import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Tuple, Union

import pandas as pd

from errors import ParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Record keys that never carry example text
NON_TEXT_KEYS = frozenset({"id", "schema", "task", "label", "qa_prediction"})


def read_jsonl(path: PathLike) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield (line number, object) for every non-blank line of a UTF-8 JSONL file."""
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=line_no, path=str(path)) from e
            if not isinstance(record, dict):
                raise ParseError("each line must hold a JSON object", line=line_no, path=str(path))
            yield line_no, record


def write_jsonl(rows: Iterable[Dict[str, Any]], path: PathLike) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    logger.info("wrote %d rows to %s", count, path)
    return count


def dump_json(data: Any) -> str:
    # repr-based float formatting keeps full double precision
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)


def save_json(data: Any, filename: PathLike):
    with open(filename, "w", encoding="utf-8") as f:
        f.write(dump_json(data) + "\n")
    logger.info("saved %s", filename)


def record_text(record: Dict[str, Any]) -> str:
    """All text fields of a record joined in field order, lists flattened."""
    parts: List[str] = []
    for key, value in record.items():
        if key in NON_TEXT_KEYS:
            continue
        if isinstance(value, str):
            parts.append(value)
        elif isinstance(value, list):
            parts.extend(item for item in value if isinstance(item, str))
    return " ".join(parts)


def create_report_table(reports: List[Dict[str, Any]]) -> pd.DataFrame:
    """One row per report, one column per metric."""
    rows = []
    for report in reports:
        row = {"dataset": report["dataset"], "examples": report["example_count"]}
        row.update(report["metrics"])
        rows.append(row)
    return pd.DataFrame(rows)


def export_to_csv(reports: List[Dict[str, Any]], filename: PathLike):
    df = create_report_table(reports)
    df.to_csv(filename, index=False)
    logger.info("report table saved to %s", filename)
