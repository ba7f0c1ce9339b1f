"""Hopfield networks with Hebbian couplings.

J_ij = sum_p xi_i^p xi_j^p for binary patterns xi^p, diagonal excluded.
A pattern counts as stored when a single-spin-flip corruption relaxes
back to it with probability above threshold (default 0.5) under MH
dynamics.
"""

from __future__ import annotations

import numpy as np

from .dynamics import MH, DynamicsKind, recall_probability
from .rng import as_rng, spawn_rngs
from .spins import random_spins

__all__ = ["hebbian", "stored_memory_count", "capacity_sweep"]


def hebbian(patterns: np.ndarray) -> np.ndarray:
    """Hebbian coupling matrix of a (P, n) array of binary patterns.

    Entries are integers of the same parity as P with |J_ij| <= P;
    the diagonal (which would be the constant P) is zeroed.
    """
    patterns = np.asarray(patterns, dtype=float)
    if patterns.ndim == 1:
        patterns = patterns[None, :]
    if not np.all(np.abs(patterns) == 1.0):
        raise ValueError("patterns must be +-1 binary")
    J = patterns.T @ patterns
    np.fill_diagonal(J, 0.0)
    return J


def stored_memory_count(patterns: np.ndarray, trials: int = 100,
                        threshold: float = 0.5, kind: DynamicsKind = MH,
                        rng=None) -> int:
    """Number of distinct patterns recalled from one flipped spin.

    Builds the Hebbian matrix of all patterns, then tests each distinct
    pattern with recall_probability(e=1); duplicates count once.
    """
    patterns = np.asarray(patterns, dtype=float)
    if patterns.ndim == 1:
        patterns = patterns[None, :]
    J = hebbian(patterns)
    gen = as_rng(rng)
    distinct = np.unique(patterns, axis=0)
    count = 0
    for xi in distinct:
        if recall_probability(J, xi, 1, trials, kind, gen) > threshold:
            count += 1
    return count


def capacity_sweep(n: int, p_values, realizations: int = 1000,
                   trials: int = 100, threshold: float = 0.5,
                   kind: DynamicsKind = MH, rng=None) -> list[dict]:
    """Mean stored-pattern count vs number of embedded patterns P.

    For each P, draws `realizations` independent sets of P random
    patterns and averages stored_memory_count. Returns one record per P:
    {"n", "p", "mean", "std", "realizations"}.
    """
    rows = []
    p_values = list(p_values)
    streams = spawn_rngs(rng, len(p_values))
    for p, stream in zip(p_values, streams):
        per_real = spawn_rngs(stream, realizations)
        counts = np.empty(realizations)
        for i, sub in enumerate(per_real):
            patterns = random_spins(n, sub, trials=p)
            counts[i] = stored_memory_count(patterns, trials, threshold, kind, sub)
        rows.append({
            "n": n,
            "p": int(p),
            "mean": float(counts.mean()),
            "std": float(counts.std(ddof=1)) if realizations > 1 else 0.0,
            "realizations": realizations,
        })
    return rows
