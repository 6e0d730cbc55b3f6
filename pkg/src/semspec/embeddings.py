"""Word vector spaces: text-format I/O, normalization, cosine similarity.

A vector space is an ordered vocabulary plus a dense float64 matrix with
one row per token. Files are line-oriented UTF-8: ``token v1 v2 ... vd``,
optionally preceded by a ``n d`` header line (word2vec text convention;
GloVe files carry no header).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import get_logger, kv_line
from .errors import ValidationError

log = get_logger(__name__)

SAVE_DECIMALS = 6


class VectorSpace:
    """Immutable vocabulary-indexed matrix of word vectors.

    Every token appears exactly once; ``index`` maps token to row.
    Mutation happens only by constructing a new space, so instances are
    safe to share read-only across workers.
    """

    def __init__(self, words: list[str], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValidationError("matrix must be 2-dimensional")
        n, d = matrix.shape
        if n < 1 or d < 1:
            raise ValidationError("vector space needs at least one word and one dimension")
        if len(words) != n:
            raise ValidationError(f"{len(words)} tokens for {n} matrix rows")
        if not np.all(np.isfinite(matrix)):
            raise ValidationError("matrix contains non-finite entries")
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != n:
            raise ValidationError("duplicate tokens in vocabulary")
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self.index[token]]

    def subset(self, tokens) -> "VectorSpace":
        """Restriction to ``tokens``, preserving this space's row order."""
        keep = [w for w in self.words if w in tokens]
        if not keep:
            raise ValidationError("subset selects no tokens")
        rows = [self.index[w] for w in keep]
        return VectorSpace(keep, self.matrix[rows].copy())


@dataclass(frozen=True)
class SeenVocab:
    """Tokens present both in the constraints and in the vector space."""

    tokens: frozenset

    def __contains__(self, token: str) -> bool:
        return token in self.tokens

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0])
        int(fields[1])
    except ValueError:
        return False
    return True


def load_embeddings(path, header_policy: str = "auto") -> VectorSpace:
    """Load a text-format vector space.

    header_policy: "auto" treats a first line with exactly two integer
    fields as a header, "require" demands one, "forbid" parses every
    line as a record. Duplicate tokens keep the first occurrence; the
    number dropped is reported on the diagnostic stream.
    """
    if header_policy not in ("auto", "require", "forbid"):
        raise ValidationError(f"unknown header_policy {header_policy!r}")
    words: list[str] = []
    rows: list[np.ndarray] = []
    index: dict[str, int] = {}
    dim = None
    duplicates = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if lineno == 1:
                if header_policy == "require" and not _is_header(fields):
                    raise ValidationError(f"{path}: expected 'n d' header on line 1")
                if header_policy in ("auto", "require") and _is_header(fields):
                    continue
            token, values = fields[0], fields[1:]
            if not values:
                raise ValidationError(f"{path}:{lineno}: no vector values for {token!r}")
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValidationError(
                    f"{path}:{lineno}: dimensionality {vec.shape[0]} != {dim}"
                )
            if token in index:
                duplicates += 1
                continue
            index[token] = len(words)
            words.append(token)
            rows.append(vec)
    if not words:
        raise ValidationError(f"{path}: no vector records found")
    if duplicates:
        log.warning(kv_line(event="duplicate_tokens_dropped", path=str(path), count=duplicates))
    return VectorSpace(words, np.vstack(rows))


def save_embeddings(space: VectorSpace, path, with_header: bool = False) -> None:
    """Write the space in text format, values rounded to 6 decimals.

    Round trip: load(save(space)) reproduces tokens, order, and values
    to within 1e-6.
    """
    with open(path, "w", encoding="utf-8") as handle:
        if with_header:
            handle.write(f"{len(space)} {space.dim}\n")
        fmt = f"%.{SAVE_DECIMALS}f"
        for word, row in zip(space.words, space.matrix):
            handle.write(word + " " + " ".join(fmt % v for v in row) + "\n")


def unit_normalize(space: VectorSpace) -> VectorSpace:
    """Return a new space with every row scaled to Euclidean norm 1."""
    norms = np.linalg.norm(space.matrix, axis=1)
    zero = np.where(norms == 0.0)[0]
    if zero.size:
        bad = ", ".join(space.words[i] for i in zero[:5])
        raise ValidationError(f"zero-norm vector for token(s): {bad}")
    return VectorSpace(space.words, space.matrix / norms[:, None])


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine undefined for zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
