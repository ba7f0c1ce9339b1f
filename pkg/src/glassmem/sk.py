"""Sherrington-Kirkpatrick networks: minima statistics and memory capacity.

Couplings are iid standard normal on the off-diagonal (symmetrized, zero
diagonal). A local minimum counts as a memory when its single-flip recall
probability exceeds the threshold; capacity is the number of memories per
disorder realization.
"""

from __future__ import annotations

import numpy as np

from .dynamics import (
    SD,
    DynamicsKind,
    enumerate_minima,
    relax_batch,
)
from .rng import as_rng, spawn_rngs
from .spins import apply_errors_batch

__all__ = [
    "sample_sk",
    "classify_minima",
    "network_capacity",
    "sk_capacity",
    "memory_fraction",
]

EXHAUSTIVE_LIMIT = 20  # past this, minima come from random restarts


def sample_sk(n: int, rng=None) -> np.ndarray:
    """Random symmetric coupling matrix, J_ij ~ N(0, 1) for i < j, zero diagonal."""
    gen = as_rng(rng)
    J = gen.standard_normal((n, n))
    J = np.triu(J, 1)
    return J + J.T


def classify_minima(J: np.ndarray, minima: np.ndarray, kind: DynamicsKind = SD,
                    threshold: float = 0.5, trials: int = 100,
                    rng=None) -> np.ndarray:
    """Boolean mask: which minima have e = 1 recall probability > threshold.

    SD relaxation of a single-flip corruption is deterministic up to
    measure-zero ties, so for SD the n corruptions of each minimum are
    relaxed once and the exact fraction m/n is used. Stochastic rules
    (MH, SD_RATE) are estimated from `trials` sampled corruptions each.
    All corruptions across all minima are relaxed in one batch.
    """
    minima = np.asarray(minima, dtype=float)
    if minima.size == 0:
        return np.zeros(0, dtype=bool)
    m, n = minima.shape
    gen = as_rng(rng)
    if kind.variant == "sd":
        corrupted = np.repeat(minima, n, axis=0)
        corrupted[np.arange(m * n), np.tile(np.arange(n), m)] *= -1.0
        per = n
    else:
        corrupted = np.concatenate(
            [apply_errors_batch(s, 1, trials, gen) for s in minima], axis=0)
        per = trials
    finals = relax_batch(J, corrupted, kind, gen)
    hits = (finals == np.repeat(minima, per, axis=0)).all(axis=1)
    frac = hits.reshape(m, per).mean(axis=1)
    return frac > threshold


def network_capacity(J: np.ndarray, kind: DynamicsKind = SD,
                     threshold: float = 0.5, trials: int = 100, rng=None,
                     starts: int = 54_000) -> int:
    """Memory count of one coupling matrix by explicit minima enumeration."""
    n = J.shape[0]
    mode = "exhaustive" if n <= EXHAUSTIVE_LIMIT else "restart"
    gen = as_rng(rng)
    minima = enumerate_minima(J, mode=mode, starts=starts, rng=gen)
    return int(classify_minima(J, minima, kind, threshold, trials, gen).sum())


def sk_capacity(n: int, kind: DynamicsKind = SD, threshold: float = 0.5,
                realizations: int = 1000, trials: int = 100, rng=None,
                starts: int = 54_000) -> tuple[float, float]:
    """Mean and std (over disorder) of the SK memory count at size n."""
    counts = np.empty(realizations)
    for i, sub in enumerate(spawn_rngs(rng, realizations)):
        J = sample_sk(n, sub)
        counts[i] = network_capacity(J, kind, threshold, trials, sub, starts)
    std = float(counts.std(ddof=1)) if realizations > 1 else 0.0
    return float(counts.mean()), std


def memory_fraction(n: int, kind: DynamicsKind = SD, threshold: float = 0.5,
                    realizations: int = 200, trials: int = 100, rng=None,
                    starts: int = 54_000) -> tuple[float, float]:
    """Mean fraction of local minima that are memories, with its stderr.

    Realizations with no minima found contribute nothing (they do not
    occur for the exhaustive path: every symmetric J has at least one
    minimum).
    """
    fracs = []
    mode = "exhaustive" if n <= EXHAUSTIVE_LIMIT else "restart"
    for sub in spawn_rngs(rng, realizations):
        J = sample_sk(n, sub)
        minima = enumerate_minima(J, mode=mode, starts=starts, rng=sub)
        if minima.shape[0] == 0:
            continue
        mask = classify_minima(J, minima, kind, threshold, trials, sub)
        fracs.append(mask.mean())
    fracs = np.asarray(fracs)
    mean = float(fracs.mean())
    stderr = float(fracs.std(ddof=1) / np.sqrt(fracs.size)) if fracs.size > 1 else 0.0
    return mean, stderr
