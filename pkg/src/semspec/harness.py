"""Synthetic fixtures with known ground truth.

Two task families: clustered vocabularies (synonyms within a cluster,
antonyms across clusters) for specialization tests, and random
orthogonal linear maps for mapping-recovery tests where the best
achievable mapping error is exactly zero. Tasks are fully reproducible
from their seed and serialize through the standard embeddings and
constraints formats.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .constraints import ConstraintSet, canonical
from .embeddings import VectorSpace
from .errors import ValidationError
from .evaluation import SimilarityDataset
from .postspec import MappingPairs


@dataclass
class SynthTask:
    space: VectorSpace
    constraints: ConstraintSet
    truth: np.ndarray | None  # orthogonal map, targets = x @ truth.T
    planted_structure: str
    seed: int


def make_cluster_task(
    n_clusters: int,
    words_per_cluster: int,
    dim: int,
    noise: float,
    seed: int,
    antonym_pairs: int | None = None,
    antonym_sampling: str = "similar",
) -> SynthTask:
    """Clustered vocabulary: centroids uniform on the unit sphere, member
    vectors are the centroid plus Gaussian noise.

    Synonyms are all within-cluster pairs. Antonyms are sampled
    cross-cluster pairs (default count: one per word); with the default
    "similar" sampling they are drawn from the most cosine-similar
    cross-cluster candidates, planting the distributionally-confusable
    antonyms a repel margin actually has to separate. "uniform" samples
    all cross-cluster pairs alike.
    """
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    if n_clusters < 2 or words_per_cluster < 2:
        raise ValidationError("need at least 2 clusters of 2 words")
    if antonym_sampling not in ("similar", "uniform"):
        raise ValidationError(f"unknown antonym_sampling {antonym_sampling!r}")
    rng = np.random.default_rng(seed)
    centroids = rng.normal(size=(n_clusters, dim))
    centroids /= np.linalg.norm(centroids, axis=1)[:, None]

    words = []
    rows = []
    cluster_of = {}
    for c in range(n_clusters):
        for w in range(words_per_cluster):
            token = f"c{c}w{w}"
            words.append(token)
            cluster_of[token] = c
            rows.append(centroids[c] + noise * rng.normal(size=dim))
    space = VectorSpace(words, np.vstack(rows))

    synonyms = set()
    for c in range(n_clusters):
        members = [f"c{c}w{w}" for w in range(words_per_cluster)]
        for a, b in combinations(members, 2):
            synonyms.add(canonical(a, b))

    n_ant = antonym_pairs if antonym_pairs is not None else n_clusters * words_per_cluster
    unit = space.matrix / np.linalg.norm(space.matrix, axis=1)[:, None]
    cross = [
        (float(unit[space.index[a]] @ unit[space.index[b]]), canonical(a, b))
        for a, b in combinations(words, 2)
        if cluster_of[a] != cluster_of[b]
    ]
    n_ant = min(n_ant, len(cross))
    if antonym_sampling == "similar":
        cross.sort(key=lambda item: (-item[0], item[1]))
        candidates = cross[: 2 * n_ant]
    else:
        candidates = sorted(cross, key=lambda item: item[1])
    chosen = rng.choice(len(candidates), size=n_ant, replace=False)
    antonyms = {candidates[i][1] for i in chosen}
    cs = ConstraintSet(synonyms=synonyms, antonyms=antonyms, source_tag="external")
    return SynthTask(
        space=space,
        constraints=cs,
        truth=None,
        planted_structure=f"{n_clusters} clusters x {words_per_cluster} words, noise={noise}",
        seed=seed,
    )


def make_linear_task(n_words: int, dim: int, seed: int) -> SynthTask:
    """Random unit vectors with a planted orthogonal target map.

    The map Q comes from the QR factorization of a Gaussian matrix with
    the sign convention that makes R's diagonal positive; targets are
    x @ Q.T and the zero-error solution is known.
    """
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    mat = rng.normal(size=(n_words, dim))
    mat /= np.linalg.norm(mat, axis=1)[:, None]
    words = [f"w{i}" for i in range(n_words)]
    space = VectorSpace(words, mat)
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    q = q * np.sign(np.diag(r))[None, :]
    return SynthTask(
        space=space,
        constraints=ConstraintSet(),
        truth=q,
        planted_structure=f"orthogonal map on {n_words} unit vectors",
        seed=seed,
    )


def linear_mapping_pairs(task: SynthTask) -> MappingPairs:
    """Aligned (x, Qx) rows for a linear task."""
    if task.truth is None:
        raise ValidationError("task carries no ground-truth map")
    inputs = task.space.matrix
    return MappingPairs(list(task.space.words), inputs.copy(), inputs @ task.truth.T)


def planted_benchmark(task: SynthTask, name: str = "planted") -> SimilarityDataset:
    """Gold similarity dataset for a cluster task: within-cluster pairs
    score 1, the task's cross-cluster antonym pairs score 0."""
    records = [(a, b, 1.0) for a, b in sorted(task.constraints.synonyms)]
    records += [(a, b, 0.0) for a, b in sorted(task.constraints.antonyms)]
    return SimilarityDataset(name=name, records=records)
