"""Finite-difference verification of the analytic gradients.

Central differences in double precision on a random subsample of parameter
entries, run for both objectives: plain cross entropy and the reward-
weighted variant with a fixed alternating delta pattern.
"""

from __future__ import annotations

import numpy as np

from .network import Seq2SeqModel, batch_loss, loss_and_grads, make_batch

__all__ = ["grad_check"]

_DELTA_CYCLE = (0.5, -0.5, 0.0)


def _weighted_items(items: list[tuple]) -> list[tuple]:
    out = []
    for sources, target in items:
        deltas = [_DELTA_CYCLE[i % 3] for i in range(len(target))]
        out.append((sources, target, deltas))
    return out


def _max_rel_error(model: Seq2SeqModel, items: list[tuple], epsilon: float,
                   samples_per_array: int, rng: np.random.Generator, floor: float) -> float:
    batch = make_batch(model, items)
    _, grads = loss_and_grads(model, batch)
    worst = 0.0
    for name in sorted(model.params):
        param = model.params[name]
        flat = param.reshape(-1)
        gflat = grads[name].reshape(-1)
        k = min(samples_per_array, flat.size)
        for idx in rng.choice(flat.size, size=k, replace=False):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            up = batch_loss(model, batch)
            flat[idx] = orig - epsilon
            down = batch_loss(model, batch)
            flat[idx] = orig
            numeric = (up - down) / (2.0 * epsilon)
            analytic = gflat[idx]
            denom = max(abs(analytic), abs(numeric), floor)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def grad_check(model: Seq2SeqModel, items: list[tuple[tuple[str, ...], str]],
               epsilon: float = 5e-5, samples_per_array: int = 8, seed: int = 0,
               floor: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    Checks the supervised objective and the delta-weighted objective on the
    same (sources, target) items.  Requires dropout to be disabled so the
    loss is a deterministic function of the parameters.

    ``floor`` bounds the comparison denominator from below: central
    differences carry absolute noise around machine_eps * |loss| / epsilon
    (~1e-10 here), so gradient entries far below the floor cannot be
    resolved relatively and are compared against the floor instead.
    """
    if model.config.dropout > 0:
        raise ValueError("grad_check requires dropout == 0")
    rng = np.random.default_rng(seed)
    supervised = _max_rel_error(model, items, epsilon, samples_per_array, rng, floor)
    weighted = _max_rel_error(model, _weighted_items(items), epsilon, samples_per_array, rng, floor)
    return max(supervised, weighted)
