"""Initial specialization of the seen-word subspace.

Mini-batch margin optimization over synonym (attract) and antonym
(repel) pairs. Per batch, each pair member gets a negative example: the
most cosine-similar vector in the combined batch pool, excluding the
pair itself. Attract terms push pairs to be closer than their negatives
by a margin; repel terms push them farther apart. An L2 distance
regularizer anchors each touched word to its starting vector.

Updates are plain subgradient steps on the batch cost, applied only to
the vectors appearing in the batch; all other rows are untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet
from .diagnostics import get_logger, kv_line
from .embeddings import SeenVocab, VectorSpace
from .errors import ValidationError

log = get_logger(__name__)


@dataclass
class ArConfig:
    delta_att: float = 0.6
    delta_rep: float = 0.0
    lambda_reg: float = 1e-9
    k1: int = 50
    k2: int = 50
    epochs: int = 5
    update_rule: str = "sgd"
    learning_rate: float = 0.05
    normalize_first: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValidationError("batch sizes k1, k2 must be >= 1")
        if self.lambda_reg < 0:
            raise ValidationError("lambda_reg must be >= 0")
        if not (math.isfinite(self.delta_att) and math.isfinite(self.delta_rep)):
            raise ValidationError("margins must be finite")
        if self.update_rule != "sgd":
            raise ValidationError(f"unsupported update rule {self.update_rule!r}")


def select_negative_examples(pool: np.ndarray, pair_indices: np.ndarray):
    """Pick per-member negatives from the batch pool.

    pool holds the 2(k1+k2) batch vectors, pair_indices is (k, 2) rows
    of (left, right) positions into the pool. For each member the
    negative is the pool vector with maximal cosine similarity to it,
    excluding both members of its own pair; ties resolve to the smallest
    pool index. Returns (neg_left, neg_right) index arrays.
    """
    pool = np.asarray(pool, dtype=np.float64)
    pair_indices = np.asarray(pair_indices, dtype=np.intp)
    if pool.shape[0] < 3:
        raise ValidationError("negative selection needs a pool of at least 3 vectors")
    norms = np.linalg.norm(pool, axis=1)
    if np.any(norms == 0.0):
        raise ValidationError("zero-norm vector in negative-example pool")
    unit = pool / norms[:, None]
    sims = unit @ unit.T
    left, right = pair_indices[:, 0], pair_indices[:, 1]
    sims_left = sims[left].copy()
    sims_right = sims[right].copy()
    rows = np.arange(pair_indices.shape[0])
    for excl in (left, right):
        sims_left[rows, excl] = -np.inf
        sims_right[rows, excl] = -np.inf
    return np.argmax(sims_left, axis=1), np.argmax(sims_right, axis=1)


def attract_cost(x_l, x_r, t_l, t_r, delta_att: float) -> float:
    """Hinge cost pulling synonym pairs closer than their negatives."""
    x_l, x_r, t_l, t_r = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (x_l, x_r, t_l, t_r))
    if x_l.shape[0] == 0:
        return 0.0
    dot_pair = np.sum(x_l * x_r, axis=1)
    left = np.maximum(0.0, delta_att + np.sum(x_l * t_l, axis=1) - dot_pair)
    right = np.maximum(0.0, delta_att + np.sum(x_r * t_r, axis=1) - dot_pair)
    return float(np.sum(left) + np.sum(right))


def repel_cost(x_l, x_r, t_l, t_r, delta_rep: float) -> float:
    """Hinge cost pushing antonym pairs farther apart than their negatives."""
    x_l, x_r, t_l, t_r = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (x_l, x_r, t_l, t_r))
    if x_l.shape[0] == 0:
        return 0.0
    dot_pair = np.sum(x_l * x_r, axis=1)
    left = np.maximum(0.0, delta_rep + dot_pair - np.sum(x_l * t_l, axis=1))
    right = np.maximum(0.0, delta_rep + dot_pair - np.sum(x_r * t_r, axis=1))
    return float(np.sum(left) + np.sum(right))


def regularization_cost(current: np.ndarray, original: np.ndarray, lambda_reg: float) -> float:
    """Sum of lambda * ||x - x0||_2 over the distinct batch words.

    Euclidean norm of the displacement, not its square; callers pass one
    row per distinct word.
    """
    current = np.atleast_2d(np.asarray(current, dtype=np.float64))
    original = np.atleast_2d(np.asarray(original, dtype=np.float64))
    if current.shape != original.shape:
        raise ValidationError("current/original shape mismatch")
    if current.shape[0] == 0:
        return 0.0
    return float(lambda_reg * np.sum(np.linalg.norm(current - original, axis=1)))


def total_cost(ba, br, reg_current, reg_original, config: ArConfig) -> float:
    """Batch cost: attract + repel + regularization.

    ba and br are (x_l, x_r, t_l, t_r) tuples of stacked batch vectors;
    either may hold empty arrays.
    """
    return (
        attract_cost(*ba, config.delta_att)
        + repel_cost(*br, config.delta_rep)
        + regularization_cost(reg_current, reg_original, config.lambda_reg)
    )


def _accumulate_pair_grads(grads, pool, pairs, negs_l, negs_r, delta, attract: bool):
    """Subgradients of the hinge terms, accumulated per pool row.

    Gradients flow into pair members and their negatives alike; hinge
    terms contribute only where the margin is violated.
    """
    for (li, ri), ti_l, ti_r in zip(pairs, negs_l, negs_r):
        xl, xr = pool[li], pool[ri]
        tl, tr = pool[ti_l], pool[ti_r]
        dot_pair = xl @ xr
        if attract:
            if delta + xl @ tl - dot_pair > 0.0:
                grads[li] = grads.get(li, 0.0) + (tl - xr)
                grads[ti_l] = grads.get(ti_l, 0.0) + xl
                grads[ri] = grads.get(ri, 0.0) - xl
            if delta + xr @ tr - dot_pair > 0.0:
                grads[ri] = grads.get(ri, 0.0) + (tr - xl)
                grads[ti_r] = grads.get(ti_r, 0.0) + xr
                grads[li] = grads.get(li, 0.0) - xr
        else:
            if delta + dot_pair - xl @ tl > 0.0:
                grads[li] = grads.get(li, 0.0) + (xr - tl)
                grads[ri] = grads.get(ri, 0.0) + xl
                grads[ti_l] = grads.get(ti_l, 0.0) - xl
            if delta + dot_pair - xr @ tr > 0.0:
                grads[li] = grads.get(li, 0.0) + xr
                grads[ri] = grads.get(ri, 0.0) + (xl - tr)
                grads[ti_r] = grads.get(ti_r, 0.0) - xr


def batch_cost_and_grads(pool, pairs_a, pairs_r, negs_a, negs_r, originals, config: ArConfig):
    """Cost components of one batch and subgradients per pool row.

    pool holds the current batch vectors, originals their anchor values
    (same indexing). Returns ((attract, repel, reg), grads) with grads a
    dict mapping pool row to the gradient vector.
    """
    pool = np.asarray(pool, dtype=np.float64)
    grads: dict[int, np.ndarray] = {}

    def gather(pairs, negs):
        if len(pairs) == 0:
            empty = np.empty((0, pool.shape[1]))
            return empty, empty, empty, empty
        idx = np.asarray(pairs)
        nl, nr = np.asarray(negs[0]), np.asarray(negs[1])
        return pool[idx[:, 0]], pool[idx[:, 1]], pool[nl], pool[nr]

    cost_a = attract_cost(*gather(pairs_a, negs_a), config.delta_att)
    cost_r = repel_cost(*gather(pairs_r, negs_r), config.delta_rep)
    if len(pairs_a):
        _accumulate_pair_grads(grads, pool, pairs_a, negs_a[0], negs_a[1], config.delta_att, True)
    if len(pairs_r):
        _accumulate_pair_grads(grads, pool, pairs_r, negs_r[0], negs_r[1], config.delta_rep, False)

    distinct = sorted(set(np.asarray(pairs_a).ravel()) | set(np.asarray(pairs_r).ravel())) if (
        len(pairs_a) or len(pairs_r)
    ) else []
    cost_reg = 0.0
    if distinct:
        rows = np.asarray(distinct, dtype=np.intp)
        disp = pool[rows] - originals[rows]
        norms = np.linalg.norm(disp, axis=1)
        cost_reg = float(config.lambda_reg * np.sum(norms))
        for row, displacement, norm in zip(rows, disp, norms):
            if norm > 0.0:
                grads[row] = grads.get(row, 0.0) + config.lambda_reg * displacement / norm
    return (cost_a, cost_r, cost_reg), grads


def run_attract_repel(
    space: VectorSpace,
    cs: ConstraintSet,
    seen: SeenVocab,
    config: ArConfig,
    cost_log: list | None = None,
) -> VectorSpace:
    """Specialize the seen-word subspace; returns it as a new space.

    Constraints must be restricted to the space vocabulary beforehand
    and the synonym set must be nonempty. Each epoch shuffles both pair
    lists with the seeded generator and walks them in joint mini-batches
    of k1 synonym and k2 antonym pairs (final partial batches included).
    The input space is never mutated; with zero epochs the seen subset
    is returned as-is. When cost_log is given, one dict of cost
    components is appended per epoch.
    """
    if not cs.synonyms:
        raise ValidationError("attract set is empty; nothing to specialize")
    missing = [t for t in cs.tokens if t not in space]
    if missing:
        raise ValidationError(f"constraint tokens missing from space: {missing[:5]}")
    if config.epochs == 0:
        return space.subset(seen.tokens)

    seen_words = [w for w in space.words if w in seen]
    mat = space.matrix.copy()
    seen_rows = np.array([space.index[w] for w in seen_words], dtype=np.intp)
    if config.normalize_first:
        norms = np.linalg.norm(mat[seen_rows], axis=1)
        if np.any(norms == 0.0):
            bad = seen_words[int(np.where(norms == 0.0)[0][0])]
            raise ValidationError(f"zero-norm vector for token {bad!r}")
        mat[seen_rows] = mat[seen_rows] / norms[:, None]
    originals = mat.copy()

    syn = sorted(cs.synonyms)
    ant = sorted(cs.antonyms)
    rng = np.random.default_rng(config.seed)
    n_steps = max(
        math.ceil(len(syn) / config.k1), math.ceil(len(ant) / config.k2) if ant else 0
    )

    for epoch in range(config.epochs):
        syn_order = rng.permutation(len(syn))
        ant_order = rng.permutation(len(ant)) if ant else np.empty(0, dtype=np.intp)
        totals = np.zeros(3)
        for step in range(n_steps):
            batch_a = [syn[i] for i in syn_order[step * config.k1 : (step + 1) * config.k1]]
            batch_r = [ant[i] for i in ant_order[step * config.k2 : (step + 1) * config.k2]]
            pairs = batch_a + batch_r
            if not pairs:
                continue
            pool_rows = np.array(
                [space.index[w] for pair in pairs for w in pair], dtype=np.intp
            )
            if pool_rows.shape[0] < 3:
                log.warning(kv_line(event="batch_skipped", reason="pool_too_small", step=step))
                continue
            pool = mat[pool_rows]
            pool_originals = originals[pool_rows]
            pair_idx = np.arange(2 * len(pairs)).reshape(-1, 2)
            idx_a, idx_r = pair_idx[: len(batch_a)], pair_idx[len(batch_a) :]
            negs_a = select_negative_examples(pool, idx_a) if len(batch_a) else (np.empty(0, dtype=np.intp),) * 2
            negs_r = select_negative_examples(pool, idx_r) if len(batch_r) else (np.empty(0, dtype=np.intp),) * 2
            costs, grads = batch_cost_and_grads(
                pool, idx_a, idx_r, negs_a, negs_r, pool_originals, config
            )
            totals += costs
            # The same word may occupy several pool slots; fold slot
            # gradients back onto space rows before updating.
            row_grads: dict[int, np.ndarray] = {}
            for slot, grad in grads.items():
                row = pool_rows[slot]
                row_grads[row] = row_grads.get(row, 0.0) + grad
            touched = sorted(row_grads)
            for row in touched:
                mat[row] = mat[row] - config.learning_rate * row_grads[row]
            if config.normalize_first and touched:
                rows = np.asarray(touched, dtype=np.intp)
                mat[rows] = mat[rows] / np.linalg.norm(mat[rows], axis=1)[:, None]
        components = {
            "epoch": epoch,
            "attract": float(totals[0]),
            "repel": float(totals[1]),
            "reg": float(totals[2]),
            "total": float(totals.sum()),
        }
        if cost_log is not None:
            cost_log.append(components)
        log.info(kv_line(event="attract_repel_epoch", **components))
    return VectorSpace(seen_words, mat[seen_rows].copy())
