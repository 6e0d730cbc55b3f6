"""Global specialization mapping learned with adversarial losses.

A generator network G maps original vectors toward their specialized
counterparts; a discriminator / critic D tries to tell generated vectors
from genuinely specialized ones. The generator objective combines mean
squared mapping error with an adversarial loss in one of three modes:

- "gan": logistic cross-entropy losses over D's probabilities,
- "wgan": score-difference losses with critic weight clipping,
- "wgan_gp": score-difference losses with a gradient penalty on
  interpolated inputs instead of clipping.

The critic's score-difference objective (mean real score minus mean
fake score) is maximized during critic updates; the loss values
returned by wgan_losses report that same quantity, so the logged
critic loss grows as separation improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import get_logger, kv_line
from .embeddings import SeenVocab, VectorSpace
from .errors import DivergenceError, ValidationError
from .neuralnet import (
    Mlp,
    clip_parameters,
    make_optimizer,
    mlp_backward,
    mlp_forward,
    mlp_init,
    optimizer_step,
    penalty_param_grads,
)

log = get_logger(__name__)

MODES = ("gan", "wgan", "wgan_gp")
LOG_FLOOR = 1e-12

# Optimizer defaults per mode when the config does not name one.
MODE_OPTIMIZERS = {"gan": "sgd", "wgan": "rmsprop", "wgan_gp": "adam"}
OPTIMIZER_LRS = {"sgd": 0.1, "rmsprop": 1e-3, "adam": 1e-3}


@dataclass
class PostSpecConfig:
    mode: str = "wgan_gp"
    alpha: float = 1.0
    lambda_gp: float = 10.0
    clip_c: float = 0.01
    n_critic: int = 5
    batch_size: int = 128
    epochs: int = 10
    gen_hidden: tuple = (512, 512)
    critic_hidden: tuple = (512, 512)
    leaky_slope: float = 0.2
    gen_optimizer: str | None = None
    gen_lr: float | None = None
    critic_optimizer: str | None = None
    critic_lr: float | None = None
    map_policy: str = "unseen_only"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.alpha < 0 or self.lambda_gp < 0:
            raise ValidationError("alpha and lambda_gp must be >= 0")
        if self.mode == "wgan" and self.clip_c <= 0:
            raise ValidationError("clip_c must be > 0 in wgan mode")
        if self.n_critic < 1:
            raise ValidationError("n_critic must be >= 1")
        if self.map_policy not in ("unseen_only", "all_words"):
            raise ValidationError(f"unknown map_policy {self.map_policy!r}")

    def resolved_optimizer(self, network: str) -> tuple[str, float]:
        explicit = self.gen_optimizer if network == "generator" else self.critic_optimizer
        kind = explicit or MODE_OPTIMIZERS[self.mode]
        lr = self.gen_lr if network == "generator" else self.critic_lr
        return kind, lr if lr is not None else OPTIMIZER_LRS[kind]


@dataclass
class MappingPairs:
    """Aligned (original, specialized) vector rows for the seen words."""

    tokens: list[str]
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.shape != self.targets.shape:
            raise ValidationError("inputs and targets must have identical shape")
        if len(self.tokens) != self.inputs.shape[0]:
            raise ValidationError("token list does not match row count")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def make_mapping_pairs(original: VectorSpace, specialized: VectorSpace) -> MappingPairs:
    """Align rows by token; every specialized word must exist in the
    original space."""
    missing = [w for w in specialized.words if w not in original]
    if missing:
        raise ValidationError(f"specialized tokens missing from original space: {missing[:5]}")
    rows = [original.index[w] for w in specialized.words]
    return MappingPairs(list(specialized.words), original.matrix[rows].copy(), specialized.matrix.copy())


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _scores(d: Mlp, batch: np.ndarray):
    out, cache = mlp_forward(d, batch)
    return out[:, 0], cache


def gan_losses(d: Mlp, generated: np.ndarray, real: np.ndarray) -> tuple[float, float]:
    """Cross-entropy losses; D outputs logits, probabilities are formed
    here via the logistic function with log arguments floored at 1e-12.

    The generator loss sums -log P(spec=1 | generated) and
    -log P(spec=0 | real); the discriminator loss swaps the labels.
    """
    generated = np.atleast_2d(generated)
    real = np.atleast_2d(real)
    if generated.shape[0] == 0 or real.shape[0] == 0:
        raise ValidationError("empty batch")
    p_fake = _sigmoid(_scores(d, generated)[0])
    p_real = _sigmoid(_scores(d, real)[0])
    loss_g = -np.sum(np.log(np.maximum(p_fake, LOG_FLOOR))) - np.sum(
        np.log(np.maximum(1.0 - p_real, LOG_FLOOR))
    )
    loss_d = -np.sum(np.log(np.maximum(1.0 - p_fake, LOG_FLOOR))) - np.sum(
        np.log(np.maximum(p_real, LOG_FLOOR))
    )
    return float(loss_g), float(loss_d)


def wgan_losses(d: Mlp, generated: np.ndarray, real: np.ndarray) -> tuple[float, float]:
    """Score-difference losses: L_G = -mean D(generated) and
    L_D = mean D(real) - mean D(generated), the critic objective that
    critic updates maximize."""
    generated = np.atleast_2d(generated)
    real = np.atleast_2d(real)
    if generated.shape[0] == 0 or real.shape[0] == 0:
        raise ValidationError("empty batch")
    fake_scores = _scores(d, generated)[0]
    real_scores = _scores(d, real)[0]
    loss_g = -float(np.mean(fake_scores))
    loss_d = float(np.mean(real_scores) - np.mean(fake_scores))
    return loss_g, loss_d


def gradient_penalty_term(
    d: Mlp, real: np.ndarray, generated: np.ndarray, lambda_gp: float, rng: np.random.Generator
):
    """Penalty lambda * mean((||grad_x D(x_hat)||_2 - 1)^2) on random
    interpolates x_hat = eps*real + (1-eps)*generated, eps ~ U(0,1) per
    row, plus the critic parameter gradients of that penalty."""
    real = np.atleast_2d(np.asarray(real, dtype=np.float64))
    generated = np.atleast_2d(np.asarray(generated, dtype=np.float64))
    if real.shape != generated.shape:
        raise ValidationError("real and generated batches must have equal shape")
    n = real.shape[0]
    eps = rng.uniform(0.0, 1.0, size=(n, 1))
    x_hat = eps * real + (1.0 - eps) * generated
    penalties, grads = penalty_param_grads(d, x_hat)
    scale = lambda_gp / n
    scaled = [(dw * scale, db * scale) for dw, db in grads]
    return float(lambda_gp * np.mean(penalties)), scaled


def generator_objective(
    g: Mlp, d: Mlp, inputs: np.ndarray, targets: np.ndarray, config: PostSpecConfig
):
    """Mean squared mapping loss plus alpha times the mode's adversarial
    generator loss; returns the value and generator parameter gradients.

    The adversarial gradient flows through the critic into the generator
    via the critic's input gradients. The critic itself is fixed.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if inputs.shape[0] != targets.shape[0]:
        raise ValidationError("inputs and targets row counts differ")
    n = inputs.shape[0]
    if n == 0:
        raise ValidationError("empty batch")
    produced, cache_g = mlp_forward(g, inputs)
    diff = produced - targets
    l2 = float(np.sum(diff * diff) / n)
    upstream = 2.0 * diff / n

    adv = 0.0
    if config.alpha > 0.0:
        scores, cache_d = _scores(d, produced)
        if config.mode == "gan":
            p_fake = _sigmoid(scores)
            p_real = _sigmoid(_scores(d, targets)[0])
            adv = float(
                -np.sum(np.log(np.maximum(p_fake, LOG_FLOOR)))
                - np.sum(np.log(np.maximum(1.0 - p_real, LOG_FLOOR)))
            )
            d_scores = (p_fake - 1.0)[:, None]
        else:
            adv = -float(np.mean(scores))
            d_scores = np.full((n, 1), -1.0 / n)
        _, input_grad = mlp_backward(d, cache_d, d_scores)
        upstream = upstream + config.alpha * input_grad
    value = l2 + config.alpha * adv
    param_grads, _ = mlp_backward(g, cache_g, upstream)
    return value, param_grads


def _critic_step_grads(
    d: Mlp, real: np.ndarray, fake: np.ndarray, config: PostSpecConfig, rng: np.random.Generator
):
    """Critic loss values and descent gradients for one update.

    In gan mode the discriminator minimizes its cross-entropy loss. In
    the Wasserstein modes the critic ascends mean(D(real)) -
    mean(D(fake)), implemented as descent on the negation, with the
    gradient penalty added in wgan_gp mode.
    """
    n, m = fake.shape[0], real.shape[0]
    fake_scores, cache_f = _scores(d, fake)
    real_scores, cache_r = _scores(d, real)
    penalty = 0.0
    if config.mode == "gan":
        p_fake = _sigmoid(fake_scores)
        p_real = _sigmoid(real_scores)
        loss_d = float(
            -np.sum(np.log(np.maximum(1.0 - p_fake, LOG_FLOOR)))
            - np.sum(np.log(np.maximum(p_real, LOG_FLOOR)))
        )
        grads_f, _ = mlp_backward(d, cache_f, p_fake[:, None])
        grads_r, _ = mlp_backward(d, cache_r, (p_real - 1.0)[:, None])
        grads = [(fw + rw, fb + rb) for (fw, fb), (rw, rb) in zip(grads_f, grads_r)]
    else:
        loss_d = float(np.mean(real_scores) - np.mean(fake_scores))
        grads_f, _ = mlp_backward(d, cache_f, np.full((n, 1), 1.0 / n))
        grads_r, _ = mlp_backward(d, cache_r, np.full((m, 1), -1.0 / m))
        grads = [(fw + rw, fb + rb) for (fw, fb), (rw, rb) in zip(grads_f, grads_r)]
        if config.mode == "wgan_gp":
            penalty, gp_grads = gradient_penalty_term(d, real, fake, config.lambda_gp, rng)
            grads = [(w + gw, b + gb) for (w, b), (gw, gb) in zip(grads, gp_grads)]
    return loss_d, penalty, grads


def _guard_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DivergenceError(f"non-finite {name} ({value}); training aborted")


def build_generator(dim: int, config: PostSpecConfig, rng: np.random.Generator) -> Mlp:
    sizes = [dim, *config.gen_hidden, dim]
    acts = ["leaky_relu"] * len(config.gen_hidden) + ["identity"]
    return mlp_init(sizes, acts, rng, leaky_slope=config.leaky_slope)


def build_critic(dim: int, config: PostSpecConfig, rng: np.random.Generator) -> Mlp:
    sizes = [dim, *config.critic_hidden, 1]
    acts = ["leaky_relu"] * len(config.critic_hidden) + ["identity"]
    return mlp_init(sizes, acts, rng, leaky_slope=config.leaky_slope)


def train_post_specializer(
    pairs: MappingPairs, config: PostSpecConfig, monitor=None
) -> Mlp:
    """Train the mapping generator on aligned vector pairs.

    Per generator batch the critic takes n_critic updates on
    independently sampled real/fake batches (clipped to [-clip_c,
    clip_c] in wgan mode, penalized in wgan_gp mode), then the generator
    takes one update on the aligned batch. Aborts with DivergenceError
    on any non-finite loss. monitor, when given, is called with a dict
    after every critic and generator step.
    """
    if len(pairs) == 0:
        raise ValidationError("no mapping pairs to train on")
    rng = np.random.default_rng(config.seed)
    g = build_generator(pairs.dim, config, rng)
    d = build_critic(pairs.dim, config, rng)
    g_kind, g_lr = config.resolved_optimizer("generator")
    d_kind, d_lr = config.resolved_optimizer("critic")
    g_opt = make_optimizer(g_kind, g, lr=g_lr)
    d_opt = make_optimizer(d_kind, d, lr=d_lr)

    n = len(pairs)
    batch = min(config.batch_size, n)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_stats = {"loss_g": 0.0, "loss_d": 0.0, "penalty": 0.0, "l2": 0.0, "batches": 0}
        for start in range(0, n, batch):
            gen_idx = order[start : start + batch]
            for _ in range(config.n_critic):
                fake_idx = rng.integers(0, n, size=batch)
                real_idx = rng.integers(0, n, size=batch)
                fake = mlp_forward(g, pairs.inputs[fake_idx])[0]
                loss_d, penalty, grads = _critic_step_grads(
                    d, pairs.targets[real_idx], fake, config, rng
                )
                _guard_finite("critic loss", loss_d + penalty)
                d, d_opt = optimizer_step(d_opt, d, grads)
                if config.mode == "wgan":
                    d = clip_parameters(d, config.clip_c)
                if monitor is not None:
                    monitor({"kind": "critic", "loss_d": loss_d, "penalty": penalty, "critic": d})
            x = pairs.inputs[gen_idx]
            y = pairs.targets[gen_idx]
            value, g_grads = generator_objective(g, d, x, y, config)
            _guard_finite("generator objective", value)
            produced = mlp_forward(g, x)[0]
            l2 = float(np.mean(np.sum((produced - y) ** 2, axis=1)))
            g, g_opt = optimizer_step(g_opt, g, g_grads)
            if monitor is not None:
                monitor({"kind": "generator", "objective": value, "l2": l2})
            epoch_stats["loss_d"] += loss_d
            epoch_stats["penalty"] += penalty
            epoch_stats["loss_g"] += value
            epoch_stats["l2"] += l2
            epoch_stats["batches"] += 1
        b = max(epoch_stats["batches"], 1)
        log.info(
            kv_line(
                event="postspec_epoch",
                epoch=epoch,
                loss_g=epoch_stats["loss_g"] / b,
                loss_d=epoch_stats["loss_d"] / b,
                penalty=epoch_stats["penalty"] / b,
                mapping_l2=epoch_stats["l2"] / b,
            )
        )
    return g


def apply_global_mapping(
    space: VectorSpace,
    g: Mlp,
    seen: SeenVocab,
    specialized_seen: VectorSpace,
    policy: str = "unseen_only",
) -> VectorSpace:
    """Specialize the full vocabulary with the trained generator.

    "unseen_only" keeps the initially specialized vectors for seen words
    and maps only the rest through G; "all_words" maps every row. The
    output vocabulary and row order match the input space exactly.
    """
    if policy not in ("unseen_only", "all_words"):
        raise ValidationError(f"unknown map policy {policy!r}")
    if g.in_dim != space.dim:
        raise ValidationError(f"generator in_dim {g.in_dim} != space dim {space.dim}")
    if policy == "all_words":
        mapped = mlp_forward(g, space.matrix)[0]
        return VectorSpace(list(space.words), mapped)
    missing = [w for w in space.words if w in seen and w not in specialized_seen]
    if missing:
        raise ValidationError(f"seen tokens missing from specialized space: {missing[:5]}")
    out = np.empty_like(space.matrix)
    unseen_rows = [i for i, w in enumerate(space.words) if w not in seen]
    for i, w in enumerate(space.words):
        if w in seen:
            out[i] = specialized_seen.vector(w)
    if unseen_rows:
        rows = np.asarray(unseen_rows, dtype=np.intp)
        out[rows] = mlp_forward(g, space.matrix[rows])[0]
    return VectorSpace(list(space.words), out)
