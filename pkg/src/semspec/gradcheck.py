"""Finite-difference verification suites.

Bundles the gradient checks the package must pass: network backward
passes over every activation, the batch specialization cost with respect
to its vectors, the generator objective in all three adversarial modes,
and the gradient-penalty parameter gradients. The CLI and the acceptance
tests run the same suite.
"""

from __future__ import annotations

import numpy as np

from .attract_repel import ArConfig, batch_cost_and_grads, select_negative_examples
from .neuralnet import Mlp, finite_diff_check, mlp_backward, mlp_forward, mlp_init, penalty_param_grads
from .postspec import PostSpecConfig, generator_objective


def array_fd_check(f, x0: np.ndarray, analytic: np.ndarray, h: float = 1e-5, tol: float = 1e-5) -> dict:
    """Central-difference check of a scalar function of an array."""
    x0 = np.asarray(x0, dtype=np.float64)
    max_rel = 0.0
    it = np.nditer(x0, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        probe = x0.copy()
        probe[idx] = x0[idx] + h
        plus = f(probe)
        probe[idx] = x0[idx] - h
        minus = f(probe)
        numeric = (plus - minus) / (2.0 * h)
        a = analytic[idx]
        diff = abs(a - numeric)
        if diff <= 1e-10:
            continue
        max_rel = max(max_rel, diff / max(abs(a) + abs(numeric), 1e-8))
    return {"max_rel_err": max_rel, "pass": max_rel < tol, "n_params": int(x0.size)}


def _quadratic_loss(m: Mlp, x: np.ndarray, target: np.ndarray):
    out, cache = mlp_forward(m, x)
    diff = out - target
    grads, _ = mlp_backward(m, cache, diff)
    return 0.5 * float(np.sum(diff * diff)), grads


def check_mlp_activations(tol: float = 1e-5, corrupt: bool = False) -> list[dict]:
    """Backward pass vs finite differences, one net per activation."""
    reports = []
    for act in ("relu", "leaky_relu", "tanh", "identity"):
        rng = np.random.default_rng(11)
        m = mlp_init([4, 6, 5, 3], [act, act, "identity"], rng)
        x = rng.normal(size=(5, 4))
        target = rng.normal(size=(5, 3))

        def loss_fn(net, x=x, target=target):
            value, grads = _quadratic_loss(net, x, target)
            if corrupt:
                grads = [(dw * 1.1, db) for dw, db in grads]
            return value, grads

        report = finite_diff_check(loss_fn, m, h=1e-5, tol=tol)
        report["name"] = f"mlp_backward[{act}]"
        report["tol"] = tol
        reports.append(report)
    return reports


def check_specialization_cost(tol: float = 1e-5) -> dict:
    """Batch margin-cost subgradients vs finite differences over the
    batch vectors, with the negative selection held fixed."""
    rng = np.random.default_rng(5)
    dim = 4
    pool0 = rng.normal(size=(8, dim))
    pool0 /= np.linalg.norm(pool0, axis=1)[:, None]
    originals = pool0 + 0.1 * rng.normal(size=pool0.shape)
    pairs_a = np.array([[0, 1], [2, 3]])
    pairs_r = np.array([[4, 5], [6, 7]])
    config = ArConfig(delta_att=0.6, delta_rep=0.0, lambda_reg=1e-3, k1=2, k2=2)
    negs_a = select_negative_examples(pool0, pairs_a)
    negs_r = select_negative_examples(pool0, pairs_r)

    def cost(pool):
        costs, _ = batch_cost_and_grads(pool, pairs_a, pairs_r, negs_a, negs_r, originals, config)
        return sum(costs)

    _, grad_map = batch_cost_and_grads(pool0, pairs_a, pairs_r, negs_a, negs_r, originals, config)
    analytic = np.zeros_like(pool0)
    for slot, grad in grad_map.items():
        analytic[slot] += grad
    report = array_fd_check(cost, pool0, analytic, h=1e-6, tol=tol)
    report["name"] = "specialization_batch_cost"
    report["tol"] = tol
    return report


def check_generator_objective(tol: float = 1e-5) -> list[dict]:
    """Generator-objective gradients for all three adversarial modes."""
    reports = []
    for mode in ("gan", "wgan", "wgan_gp"):
        rng = np.random.default_rng(23)
        g = mlp_init([4, 6, 4], ["leaky_relu", "identity"], rng)
        d = mlp_init([4, 6, 1], ["leaky_relu", "identity"], rng)
        x = rng.normal(size=(6, 4))
        targets = rng.normal(size=(6, 4))
        config = PostSpecConfig(mode=mode, alpha=0.7, epochs=1, batch_size=6, seed=0)

        def loss_fn(net, d=d, x=x, targets=targets, config=config):
            return generator_objective(net, d, x, targets, config)

        report = finite_diff_check(loss_fn, g, h=1e-6, tol=tol)
        report["name"] = f"generator_objective[{mode}]"
        report["tol"] = tol
        reports.append(report)
    return reports


def check_penalty_grads(tol: float = 1e-4) -> dict:
    """Gradient-penalty parameter gradients vs finite differences."""
    rng = np.random.default_rng(31)
    d = mlp_init([4, 8, 1], ["relu", "identity"], rng)
    x_hat = rng.normal(size=(6, 4))

    def loss_fn(net):
        penalties, grads = penalty_param_grads(net, x_hat)
        return float(np.sum(penalties)), grads

    report = finite_diff_check(loss_fn, d, h=1e-6, tol=tol)
    report["name"] = "gradient_penalty_params"
    report["tol"] = tol
    return report


def run_all(corrupt: bool = False) -> list[dict]:
    """Run every suite; corrupt deliberately breaks the first suite's
    gradients to prove the checker catches errors."""
    reports = []
    reports.extend(check_mlp_activations(corrupt=corrupt))
    reports.append(check_specialization_cost())
    reports.extend(check_generator_objective())
    reports.append(check_penalty_grads())
    return reports
