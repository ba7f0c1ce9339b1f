"""Zero-temperature single-spin-flip relaxation dynamics.

Three update rules, all of which only ever accept flips that strictly
lower the Ising energy (zero-energy flips are rejected, which guarantees
termination at an exact local minimum):

  * MH      - flip a site chosen uniformly among those with Delta-E < 0.
              This is the rejection-free form of zero-temperature
              Metropolis-Hastings: proposing sites uniformly at random and
              accepting iff Delta-E < 0 makes the next accepted flip
              uniform over the flippable set, which is what is sampled
              here directly.
  * SD      - steepest descent: flip the site with the most negative
              Delta-E (ties broken per DynamicsKind.tie_break).
  * SD_RATE - flip a site with probability proportional to -Delta-E among
              the sites with Delta-E < 0.

All kernels are batched over a trial axis; a single relaxation is the
one-row case of the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import as_rng
from .spins import (
    apply_errors_batch,
    delta_energy_all,
    ising_energy,
    random_spins,
    require_coupling,
    zero_diagonal,
)

__all__ = [
    "DynamicsKind",
    "MH",
    "SD",
    "SD_RATE",
    "relax",
    "relax_batch",
    "is_local_min",
    "enumerate_minima",
    "recall_probability",
    "single_flip_recall_exact",
]

_VARIANTS = ("mh", "sd", "sd_rate")
_TIE_BREAKS = ("uniform", "lowest_index")


@dataclass(frozen=True)
class DynamicsKind:
    """Relaxation rule: variant in {mh, sd, sd_rate} plus SD tie-break."""

    variant: str = "mh"
    tie_break: str = "uniform"

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown dynamics variant {self.variant!r}")
        if self.tie_break not in _TIE_BREAKS:
            raise ValueError(f"unknown tie break {self.tie_break!r}")

    @property
    def deterministic(self) -> bool:
        """True when relaxation consumes no randomness (SD, lowest index)."""
        return self.variant == "sd" and self.tie_break == "lowest_index"


MH = DynamicsKind("mh")
SD = DynamicsKind("sd")
SD_RATE = DynamicsKind("sd_rate")


# ---------------------------------------------------------------------------
# site selection (shared by every relaxation path)
# ---------------------------------------------------------------------------

def _select_sites(dE: np.ndarray, neg: np.ndarray, kind: DynamicsKind, rng) -> np.ndarray:
    """Pick one site per row. Every row must contain at least one True in neg."""
    rows, n = dE.shape
    if kind.variant == "mh":
        keys = rng.random((rows, n))
        keys[~neg] = -1.0  # valid keys are in (0, 1); masked sites never win
        return np.argmax(keys, axis=1)
    if kind.variant == "sd":
        if kind.tie_break == "lowest_index":
            return np.argmin(dE, axis=1)  # first occurrence = lowest index
        dmin = dE.min(axis=1, keepdims=True)
        ties = dE == dmin
        keys = rng.random((rows, n))
        keys[~ties] = -1.0
        return np.argmax(keys, axis=1)
    # sd_rate: P(k) proportional to -Delta-E_k on the negative set
    w = np.where(neg, -dE, 0.0)
    c = np.cumsum(w, axis=1)
    u = rng.random(rows) * c[:, -1]
    k = np.minimum((c <= u[:, None]).sum(axis=1), n - 1)
    # float-boundary guard: the inversion must land on a Delta-E < 0 site
    ok = neg[np.arange(rows), k]
    if not ok.all():
        last_neg = n - 1 - np.argmax(neg[:, ::-1], axis=1)
        k = np.where(ok, k, last_neg)
    return k


def relax_batch(J: np.ndarray, states: np.ndarray, kind: DynamicsKind = MH,
                rng=None) -> np.ndarray:
    """Relax each row of `states` to a local minimum of the Ising energy.

    Returns a new (trials, n) array. Rows are independent trials; the
    loop runs until every row has no strictly-negative single-flip move.
    """
    J = require_coupling(J)
    Jod = zero_diagonal(J)
    gen = as_rng(rng)
    S = np.array(states, dtype=float, copy=True)
    if S.ndim == 1:
        S = S[None, :]
    H = S @ Jod
    alive = np.arange(S.shape[0])
    while alive.size:
        dE = 2.0 * S[alive] * H[alive]
        neg = dE < 0.0
        has_move = neg.any(axis=1)
        if not has_move.all():
            alive = alive[has_move]
            if alive.size == 0:
                break
            dE = dE[has_move]
            neg = neg[has_move]
        k = _select_sites(dE, neg, kind, gen)
        s_new = -S[alive, k]
        S[alive, k] = s_new
        # h_j += 2 J_jk s_k(new); row k of Jod has a zero diagonal so h_k
        # is untouched, as it must be (a site does not couple to itself)
        H[alive] += 2.0 * s_new[:, None] * Jod[k]
    return S


def relax(J: np.ndarray, s0: np.ndarray, kind: DynamicsKind = MH, rng=None,
          trace: bool = False):
    """Relax one configuration; with trace=True also return the flip log.

    The trace is a list of (step, site, delta_e, energy_after) tuples with
    energy accumulated from the accepted Delta-E values.
    """
    if not trace:
        return relax_batch(J, np.asarray(s0, dtype=float)[None, :], kind, rng)[0]
    J = require_coupling(J)
    gen = as_rng(rng)
    s = np.array(s0, dtype=float, copy=True)
    energy = ising_energy(J, s)
    log = []
    step = 0
    while True:
        dE = delta_energy_all(J, s)[None, :]
        neg = dE < 0.0
        if not neg.any():
            return s, log
        k = int(_select_sites(dE, neg, kind, gen)[0])
        step += 1
        energy += dE[0, k]
        log.append((step, k, float(dE[0, k]), float(energy)))
        s[k] = -s[k]


def is_local_min(J: np.ndarray, s: np.ndarray) -> bool:
    """True when no single flip strictly lowers the energy.

    Zero-energy flips do not disqualify a minimum, mirroring the dynamics'
    rejection of zero-energy moves.
    """
    return not bool((delta_energy_all(J, s) < 0.0).any())


# ---------------------------------------------------------------------------
# minima enumeration
# ---------------------------------------------------------------------------

def enumerate_minima(J: np.ndarray, mode: str = "exhaustive", starts: int = 54_000,
                     kind: DynamicsKind = SD, rng=None,
                     chunk: int = 1 << 15) -> np.ndarray:
    """All (exhaustive) or sampled (restart) local minima, one per +-s pair.

    Exhaustive mode scans the half-space with the first spin fixed at +1,
    which visits each canonical representative exactly once; it refuses
    n > 24. Restart mode relaxes `starts` random configurations under
    `kind` and returns the distinct canonicalized endpoints. Rows are
    sorted lexicographically so the output order is reproducible.
    """
    J = require_coupling(J)
    n = J.shape[0]
    Jod = zero_diagonal(J)
    found = []
    if mode == "exhaustive":
        if n > 24:
            raise ValueError("exhaustive enumeration supported only for n <= 24")
        total = 1 << (n - 1)
        shifts = np.arange(n - 1, dtype=np.uint64)
        for lo in range(0, total, chunk):
            codes = np.arange(lo, min(lo + chunk, total), dtype=np.uint64)
            S = np.empty((codes.size, n))
            S[:, 0] = 1.0
            S[:, 1:] = 1.0 - 2.0 * ((codes[:, None] >> shifts) & 1)
            stable = (S * (S @ Jod) >= 0.0).all(axis=1)
            if stable.any():
                found.append(S[stable])
    elif mode == "restart":
        gen = as_rng(rng)
        for lo in range(0, starts, chunk):
            S0 = random_spins(n, gen, trials=min(chunk, starts - lo))
            S = relax_batch(J, S0, kind, gen)
            S *= np.sign(S[:, :1])  # canonical sign: first entry +1
            found.append(S)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not found:
        return np.empty((0, n))
    minima = np.unique(np.concatenate(found, axis=0), axis=0)
    return minima[np.lexsort(minima.T[::-1])]


# ---------------------------------------------------------------------------
# recall
# ---------------------------------------------------------------------------

def recall_probability(J: np.ndarray, memory: np.ndarray, e: int, trials: int,
                       kind: DynamicsKind = MH, rng=None,
                       twin_tolerant: bool = False) -> float:
    """Fraction of corrupted copies that relax back to `memory`.

    Each trial flips e distinct uniformly-chosen sites and relaxes.
    Success requires the exact sign pattern of `memory`; only with
    twin_tolerant=True does the global flip -memory also count.
    """
    memory = np.asarray(memory, dtype=float)
    gen = as_rng(rng)
    corrupted = apply_errors_batch(memory, e, trials, gen)
    finals = relax_batch(J, corrupted, kind, gen)
    hits = (finals == memory).all(axis=1)
    if twin_tolerant:
        hits |= (finals == -memory).all(axis=1)
    return float(hits.mean()) if trials else 0.0


def single_flip_recall_exact(J: np.ndarray, memory: np.ndarray,
                             kind: DynamicsKind = SD, rng=None,
                             twin_tolerant: bool = False) -> float:
    """Exact e = 1 recall probability: enumerate all n single-flip corruptions.

    For a deterministic rule (SD with lowest-index tie-break, or SD on
    generic couplings where exact Delta-E ties never occur) this equals
    m/n with m the number of corruptions that relax back, no sampling
    involved.
    """
    memory = np.asarray(memory, dtype=float)
    n = memory.size
    corrupted = np.tile(memory, (n, 1))
    corrupted[np.arange(n), np.arange(n)] *= -1.0
    finals = relax_batch(J, corrupted, kind, rng)
    hits = (finals == memory).all(axis=1)
    if twin_tolerant:
        hits |= (finals == -memory).all(axis=1)
    return float(hits.mean())
