import hashlib
import logging
import sqlite3
import threading
from typing import Dict, List, Optional

from core import AlignmentScore, PairScorer, Span, TextPair

logger = logging.getLogger(__name__)


def pair_key(pair: TextPair) -> str:
    return hashlib.sha256(f"{pair.x1}\x00{pair.x2}".encode("utf-8")).hexdigest()


class ScoreCache:
    """SQLite store of AlignmentScores keyed by scorer fingerprint and pair hash."""

    def __init__(self, db_path: str = "score_cache.db"):
        self.db_path = db_path
        self._lock = threading.Lock()
        self.init_database()

    def _connect(self) -> sqlite3.Connection:
        return sqlite3.connect(self.db_path)

    def init_database(self):
        """Initialize SQLite database with tables"""
        conn = self._connect()
        cursor = conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS scores (
                scorer TEXT NOT NULL,
                pair_hash TEXT NOT NULL,
                p3_aligned REAL,
                p3_contradict REAL,
                p3_neutral REAL,
                pbin_aligned REAL,
                pbin_not_aligned REAL,
                reg REAL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                PRIMARY KEY (scorer, pair_hash)
            )
        ''')

        conn.commit()
        conn.close()
        logger.debug("score cache initialized: %s", self.db_path)

    def get(self, scorer: str, pair: TextPair) -> Optional[AlignmentScore]:
        with self._lock:
            conn = self._connect()
            cursor = conn.cursor()
            cursor.execute('''
                SELECT p3_aligned, p3_contradict, p3_neutral, pbin_aligned, pbin_not_aligned, reg
                FROM scores WHERE scorer = ? AND pair_hash = ?
            ''', (scorer, pair_key(pair)))
            row = cursor.fetchone()
            conn.close()

        if row is None:
            return None
        return AlignmentScore(p3=(row[0], row[1], row[2]), pbin=(row[3], row[4]), reg=row[5])

    def put(self, scorer: str, pair: TextPair, score: AlignmentScore):
        with self._lock:
            conn = self._connect()
            cursor = conn.cursor()
            cursor.execute('''
                INSERT OR REPLACE INTO scores
                (scorer, pair_hash, p3_aligned, p3_contradict, p3_neutral, pbin_aligned, pbin_not_aligned, reg)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            ''', (scorer, pair_key(pair), *score.p3, *score.pbin, score.reg))
            conn.commit()
            conn.close()

    def get_cache_info(self) -> Dict:
        """Get information about the cache"""
        conn = self._connect()
        cursor = conn.cursor()

        cursor.execute('SELECT COUNT(*) FROM scores')
        entries = cursor.fetchone()[0]

        cursor.execute('SELECT scorer, COUNT(*) FROM scores GROUP BY scorer ORDER BY scorer')
        per_scorer = {row[0]: row[1] for row in cursor.fetchall()}

        cursor.execute('SELECT MAX(created_at) FROM scores')
        last_updated = cursor.fetchone()[0]

        conn.close()

        return {
            'entries': entries,
            'scorers': per_scorer,
            'last_updated': last_updated,
        }

    def clear(self, scorer: Optional[str] = None):
        with self._lock:
            conn = self._connect()
            if scorer is None:
                conn.execute('DELETE FROM scores')
            else:
                conn.execute('DELETE FROM scores WHERE scorer = ?', (scorer,))
            conn.commit()
            conn.close()


class CachedScorer(PairScorer):
    """Wraps a scorer so repeated pairs are read back from the cache."""

    def __init__(self, inner: PairScorer, cache: ScoreCache):
        self.inner = inner
        self.cache = cache
        self.name = inner.name
        self.max_tokens = inner.max_tokens
        self.special_tokens = inner.special_tokens
        self.single_flight = inner.single_flight
        self.hits = 0
        self.misses = 0
        self._counter_lock = threading.Lock()

    def token_spans(self, text: str) -> List[Span]:
        return self.inner.token_spans(text)

    def count_pair_tokens(self, pair: TextPair) -> int:
        return self.inner.count_pair_tokens(pair)

    def fingerprint(self) -> str:
        return self.inner.fingerprint()

    def _score(self, pair: TextPair) -> AlignmentScore:
        key = self.fingerprint()
        cached = self.cache.get(key, pair)
        if cached is not None:
            with self._counter_lock:
                self.hits += 1
            return cached
        with self._counter_lock:
            self.misses += 1
        score = self.inner.score(pair)
        self.cache.put(key, pair, score)
        return score
