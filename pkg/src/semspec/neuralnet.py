"""Dense feed-forward networks with hand-derived gradients.

Provides exact reverse-mode gradients for parameters and inputs, a
double-backpropagation path for the critic gradient penalty (restricted
to piecewise-linear activations, where activation second derivatives
vanish almost everywhere and the computation is exact), SGD / RMSProp /
Adam update rules, and a central finite-difference checker.

All math is float64. Forward passes are deterministic and training with
a fixed seed is bit-reproducible on one platform.

Conventions: inputs are batches of shape (n, in_dim); layer weights have
shape (out, in); pre-activations are z = x @ W.T + b.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

ACTIVATIONS = ("relu", "leaky_relu", "tanh", "identity")
PIECEWISE_LINEAR = ("relu", "leaky_relu", "identity")


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str
    slope: float = 0.0  # leaky_relu negative-side slope

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class Mlp:
    layers: list[Layer]

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def copy(self) -> "Mlp":
        return Mlp(
            [
                Layer(l.weights.copy(), l.bias.copy(), l.activation, l.slope)
                for l in self.layers
            ]
        )


def _check_activation(name: str) -> None:
    if name not in ACTIVATIONS:
        raise ValidationError(f"unknown activation {name!r}")


def _activate(z: np.ndarray, layer: Layer) -> np.ndarray:
    if layer.activation == "relu":
        return np.maximum(z, 0.0)
    if layer.activation == "leaky_relu":
        return np.where(z > 0.0, z, layer.slope * z)
    if layer.activation == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, layer: Layer) -> np.ndarray:
    """Pointwise derivative of the activation at pre-activation z."""
    if layer.activation == "relu":
        return (z > 0.0).astype(np.float64)
    if layer.activation == "leaky_relu":
        return np.where(z > 0.0, 1.0, layer.slope)
    if layer.activation == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


def mlp_init(sizes, activations, rng: np.random.Generator, leaky_slope: float = 0.2) -> Mlp:
    """Build an MLP with Glorot-uniform weights and zero biases.

    sizes is the dimension chain [in, h1, ..., out]; activations has one
    entry per layer. Deterministic for a fixed generator state.
    """
    sizes = list(sizes)
    activations = list(activations)
    if len(sizes) < 2:
        raise ValidationError("need at least an input and an output size")
    if len(activations) != len(sizes) - 1:
        raise ValidationError(
            f"{len(sizes) - 1} layers but {len(activations)} activations"
        )
    if any(s < 1 for s in sizes):
        raise ValidationError("layer sizes must be >= 1")
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
        _check_activation(act)
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        bias = np.zeros(fan_out)
        layers.append(Layer(weights, bias, act, leaky_slope if act == "leaky_relu" else 0.0))
    return Mlp(layers)


def mlp_forward(m: Mlp, x: np.ndarray):
    """Affine-then-activation composition; returns (output, cache).

    The cache holds per-layer (input, pre-activation) pairs and is
    consumed by mlp_backward.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != m.in_dim:
        raise ValidationError(f"input width {x.shape[1]} != network in_dim {m.in_dim}")
    cache = []
    a = x
    for layer in m.layers:
        z = a @ layer.weights.T + layer.bias
        cache.append((a, z))
        a = _activate(z, layer)
    return a, cache


def mlp_backward(m: Mlp, cache, upstream: np.ndarray):
    """Reverse-mode gradients of a scalar loss through the network.

    upstream is dLoss/dOutput with the output's batch shape. Returns
    (param_grads, input_grad) where param_grads is a per-layer list of
    (dW, db) and input_grad enables chaining networks (critic into
    generator).
    """
    if len(cache) != len(m.layers):
        raise ValidationError("cache does not match network depth")
    delta = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if delta.shape != (cache[-1][1].shape[0], m.out_dim):
        raise ValidationError(
            f"upstream shape {delta.shape} does not match output "
            f"({cache[-1][1].shape[0]}, {m.out_dim})"
        )
    param_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(m.layers)
    for k in range(len(m.layers) - 1, -1, -1):
        layer = m.layers[k]
        a_in, z = cache[k]
        gamma = delta * _activation_grad(z, layer)
        param_grads[k] = (gamma.T @ a_in, gamma.sum(axis=0))
        delta = gamma @ layer.weights
    return param_grads, delta


def mlp_input_grads(m: Mlp, x: np.ndarray) -> np.ndarray:
    """Per-example gradient of the scalar output with respect to the input."""
    if m.out_dim != 1:
        raise ValidationError("input gradients are defined for scalar-output networks")
    out, cache = mlp_forward(m, x)
    _, input_grad = mlp_backward(m, cache, np.ones_like(out))
    return input_grad


def penalty_param_grads(d: Mlp, x_hat: np.ndarray):
    """Per-example penalties (||grad_x D(x_hat)||_2 - 1)^2 and the exact
    parameter gradients of their sum.

    Requires piecewise-linear activations throughout so the activation
    masks are locally constant and the input gradient is a product of
    weight matrices and masks; differentiating that product through the
    weights is then exact. Bias gradients are identically zero because
    the input gradient does not depend on biases between mask switches.
    """
    for layer in d.layers:
        if layer.activation not in PIECEWISE_LINEAR:
            raise ValidationError(
                f"gradient penalty requires piecewise-linear activations, got {layer.activation!r}"
            )
    if d.out_dim != 1:
        raise ValidationError("gradient penalty critic must have scalar output")
    x_hat = np.atleast_2d(np.asarray(x_hat, dtype=np.float64))
    n = x_hat.shape[0]

    # First pass: masks, then the input gradient g per example.
    masks = []
    a = x_hat
    for layer in d.layers:
        z = a @ layer.weights.T + layer.bias
        masks.append(_activation_grad(z, layer))
        a = _activate(z, layer)
    gammas = [None] * len(d.layers)
    delta = np.ones((n, 1))
    for k in range(len(d.layers) - 1, -1, -1):
        gammas[k] = delta * masks[k]
        delta = gammas[k] @ d.layers[k].weights
    g = delta  # (n, in_dim)

    norms = np.linalg.norm(g, axis=1)
    penalties = (norms - 1.0) ** 2

    # Second pass: differentiate sum((||g|| - 1)^2) through the chain
    # g = W_1^T M_1 ... W_L^T M_L 1 with the masks held fixed.
    safe = np.where(norms > 0.0, norms, 1.0)
    u = (2.0 * (norms - 1.0) / safe)[:, None] * g
    grads = []
    e = u
    for k, layer in enumerate(d.layers):
        grads.append((gammas[k].T @ e, np.zeros_like(layer.bias)))
        e = (e @ layer.weights.T) * masks[k]
    return penalties, grads


@dataclass
class OptimizerState:
    """Update-rule hyperparameters plus per-parameter accumulators."""

    kind: str  # sgd | rmsprop | adam
    lr: float
    decay: float = 0.9  # rmsprop
    beta1: float = 0.9  # adam
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    slots: list = field(default_factory=list)


def make_optimizer(kind: str, m: Mlp, lr: float, **kwargs) -> OptimizerState:
    if kind not in ("sgd", "rmsprop", "adam"):
        raise ValidationError(f"unknown optimizer {kind!r}")
    state = OptimizerState(kind=kind, lr=lr, **kwargs)
    if kind == "rmsprop":
        state.slots = [
            {"v_w": np.zeros_like(l.weights), "v_b": np.zeros_like(l.bias)} for l in m.layers
        ]
    elif kind == "adam":
        state.slots = [
            {
                "m_w": np.zeros_like(l.weights),
                "m_b": np.zeros_like(l.bias),
                "v_w": np.zeros_like(l.weights),
                "v_b": np.zeros_like(l.bias),
            }
            for l in m.layers
        ]
    return state


def _check_grad_shapes(m: Mlp, grads) -> None:
    if len(grads) != len(m.layers):
        raise ValidationError("gradient list does not match network depth")
    for layer, (dw, db) in zip(m.layers, grads):
        if dw.shape != layer.weights.shape or db.shape != layer.bias.shape:
            raise ValidationError("gradient shapes do not match parameters")


def optimizer_step(state: OptimizerState, m: Mlp, grads) -> tuple[Mlp, OptimizerState]:
    """Apply one update; returns a new network and advanced state."""
    _check_grad_shapes(m, grads)
    t = state.step + 1
    new_layers = []
    new_slots = []
    for k, (layer, (dw, db)) in enumerate(zip(m.layers, grads)):
        if state.kind == "sgd":
            w = layer.weights - state.lr * dw
            b = layer.bias - state.lr * db
        elif state.kind == "rmsprop":
            slot = state.slots[k]
            v_w = state.decay * slot["v_w"] + (1.0 - state.decay) * dw * dw
            v_b = state.decay * slot["v_b"] + (1.0 - state.decay) * db * db
            w = layer.weights - state.lr * dw / (np.sqrt(v_w) + state.eps)
            b = layer.bias - state.lr * db / (np.sqrt(v_b) + state.eps)
            new_slots.append({"v_w": v_w, "v_b": v_b})
        else:  # adam
            slot = state.slots[k]
            m_w = state.beta1 * slot["m_w"] + (1.0 - state.beta1) * dw
            m_b = state.beta1 * slot["m_b"] + (1.0 - state.beta1) * db
            v_w = state.beta2 * slot["v_w"] + (1.0 - state.beta2) * dw * dw
            v_b = state.beta2 * slot["v_b"] + (1.0 - state.beta2) * db * db
            c1 = 1.0 - state.beta1**t
            c2 = 1.0 - state.beta2**t
            w = layer.weights - state.lr * (m_w / c1) / (np.sqrt(v_w / c2) + state.eps)
            b = layer.bias - state.lr * (m_b / c1) / (np.sqrt(v_b / c2) + state.eps)
            new_slots.append({"m_w": m_w, "m_b": m_b, "v_w": v_w, "v_b": v_b})
        new_layers.append(Layer(w, b, layer.activation, layer.slope))
    new_state = replace(state, step=t, slots=new_slots if new_slots else state.slots)
    return Mlp(new_layers), new_state


def clip_parameters(m: Mlp, bound: float) -> Mlp:
    """Clamp every weight and bias into [-bound, bound]."""
    if bound <= 0:
        raise ValidationError("clip bound must be positive")
    return Mlp(
        [
            Layer(
                np.clip(l.weights, -bound, bound),
                np.clip(l.bias, -bound, bound),
                l.activation,
                l.slope,
            )
            for l in m.layers
        ]
    )


def finite_diff_check(loss_fn, m: Mlp, h: float = 1e-5, tol: float = 1e-5) -> dict:
    """Compare analytic parameter gradients against central differences.

    loss_fn(mlp) must return (scalar_value, param_grads). Every
    parameter entry is perturbed by +-h. Differences below 1e-10 are
    treated as exact so that parameters with genuinely zero gradients do
    not trip the relative test.
    """
    _, analytic = loss_fn(m)
    _check_grad_shapes(m, analytic)
    max_rel = 0.0
    n_params = 0
    for k, layer in enumerate(m.layers):
        for attr, grad in (("weights", analytic[k][0]), ("bias", analytic[k][1])):
            arr = getattr(layer, attr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                n_params += 1
                probe = m.copy()
                target = getattr(probe.layers[k], attr)
                orig = target[idx]
                target[idx] = orig + h
                plus = loss_fn(probe)[0]
                target[idx] = orig - h
                minus = loss_fn(probe)[0]
                target[idx] = orig
                numeric = (plus - minus) / (2.0 * h)
                a = grad[idx]
                diff = abs(a - numeric)
                if diff <= 1e-10:
                    continue
                rel = diff / max(abs(a) + abs(numeric), 1e-8)
                max_rel = max(max_rel, rel)
    return {"max_rel_err": max_rel, "pass": max_rel < tol, "n_params": n_params}


def save_checkpoint(m: Mlp, path) -> None:
    """Textual checkpoint: shapes, activations, row-major parameters.

    %.17g serialization makes the round trip exact for float64.
    """
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"layers {len(m.layers)}\n")
        for layer in m.layers:
            handle.write(
                f"layer {layer.out_dim} {layer.in_dim} {layer.activation} {layer.slope!r}\n"
            )
            for row in layer.weights:
                handle.write(" ".join("%.17g" % v for v in row) + "\n")
            handle.write(" ".join("%.17g" % v for v in layer.bias) + "\n")


def load_checkpoint(path) -> Mlp:
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    pos = 0
    head = lines[pos].split()
    if len(head) != 2 or head[0] != "layers":
        raise ValidationError(f"{path}: bad checkpoint header")
    n_layers = int(head[1])
    pos += 1
    layers = []
    for _ in range(n_layers):
        fields = lines[pos].split()
        if len(fields) != 5 or fields[0] != "layer":
            raise ValidationError(f"{path}: bad layer header at line {pos + 1}")
        out_dim, in_dim = int(fields[1]), int(fields[2])
        activation, slope = fields[3], float(fields[4])
        _check_activation(activation)
        pos += 1
        weights = np.empty((out_dim, in_dim))
        for r in range(out_dim):
            weights[r] = np.array([float(v) for v in lines[pos].split()])
            pos += 1
        bias = np.array([float(v) for v in lines[pos].split()])
        pos += 1
        if bias.shape != (out_dim,) or weights.shape != (out_dim, in_dim):
            raise ValidationError(f"{path}: parameter block shape mismatch")
        layers.append(Layer(weights, bias, activation, slope))
    return Mlp(layers)
