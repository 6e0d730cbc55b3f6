"""Word-similarity benchmark evaluation with Spearman's rank correlation.

Model similarity is the cosine of the two word vectors. Records with an
out-of-vocabulary word are excluded and counted rather than substituted,
so coverage stays visible in every report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import get_logger, kv_line
from .embeddings import VectorSpace, cosine
from .errors import ValidationError

log = get_logger(__name__)

FORMATS = ("plain3col", "simlex_tsv")


@dataclass
class SimilarityDataset:
    """Benchmark word pairs with gold human ratings."""

    name: str
    records: list  # (word1, word2, gold_score)

    def __post_init__(self):
        seen = set()
        for w1, w2, score in self.records:
            key = (w1, w2) if w1 <= w2 else (w2, w1)
            if key in seen:
                raise ValidationError(f"duplicate pair {key!r} in dataset {self.name}")
            seen.add(key)
            if not np.isfinite(score):
                raise ValidationError(f"non-finite score for pair ({w1}, {w2})")

    @property
    def words(self) -> set:
        out = set()
        for w1, w2, _ in self.records:
            out.add(w1)
            out.add(w2)
        return out


def load_similarity_dataset(
    path, fmt: str = "plain3col", score_column: str = "SimLex999", name: str | None = None
) -> SimilarityDataset:
    """Parse a benchmark file.

    plain3col: "word1 word2 score" per line. simlex_tsv: tab-separated
    with a header row naming word1, word2 and the score column
    (score_column selects it).
    """
    if fmt not in FORMATS:
        raise ValidationError(f"unknown dataset format {fmt!r}")
    records = []
    with open(path, encoding="utf-8") as handle:
        if fmt == "plain3col":
            for lineno, line in enumerate(handle, start=1):
                fields = line.split()
                if not fields:
                    continue
                if len(fields) != 3:
                    raise ValidationError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
                try:
                    records.append((fields[0], fields[1], float(fields[2])))
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: non-numeric score") from None
        else:
            header = handle.readline().rstrip("\n").split("\t")
            try:
                c1 = header.index("word1")
                c2 = header.index("word2")
                cs = header.index(score_column)
            except ValueError:
                raise ValidationError(
                    f"{path}: header must contain word1, word2 and {score_column!r}"
                ) from None
            for lineno, line in enumerate(handle, start=2):
                if not line.strip():
                    continue
                fields = line.rstrip("\n").split("\t")
                if len(fields) <= max(c1, c2, cs):
                    raise ValidationError(f"{path}:{lineno}: short row")
                try:
                    records.append((fields[c1], fields[c2], float(fields[cs])))
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: non-numeric score") from None
    return SimilarityDataset(name=name or str(path), records=records)


def average_ranks(values) -> np.ndarray:
    """Fractional ranks (1-based); tied values share the average of the
    rank positions they occupy."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(xs, ys) -> float:
    """Pearson correlation of average ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValidationError("inputs must be 1-d and of equal length")
    if len(xs) < 2:
        raise ValidationError("need at least 2 observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = np.sum(dx * dx)
    vy = np.sum(dy * dy)
    if vx == 0.0 or vy == 0.0:
        raise ValidationError("rank correlation undefined for a constant list")
    return float(np.sum(dx * dy) / np.sqrt(vx * vy))


def evaluate_similarity(space: VectorSpace, ds: SimilarityDataset) -> dict:
    """Spearman correlation of cosine similarities against gold ratings.

    Returns {rho, pairs_used, pairs_total, coverage}; pairs with an
    out-of-vocabulary word are excluded and counted.
    """
    gold = []
    model = []
    for w1, w2, score in ds.records:
        if w1 not in space or w2 not in space:
            continue
        gold.append(score)
        model.append(cosine(space.vector(w1), space.vector(w2)))
    if len(gold) < 2:
        raise ValidationError(f"fewer than 2 usable pairs in dataset {ds.name}")
    report = {
        "rho": spearman_rho(model, gold),
        "pairs_used": len(gold),
        "pairs_total": len(ds.records),
        "coverage": len(gold) / len(ds.records),
    }
    log.info(kv_line(event="similarity_eval", dataset=ds.name, **report))
    return report
