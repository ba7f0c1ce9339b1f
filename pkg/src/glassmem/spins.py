"""Spin configurations, coupling matrices, energies.

Conventions used across the whole package:

  * a spin configuration is a length-n float vector, either binary
    (every entry exactly +1 or -1) or a normalized measured mode
    (sum of squares = 1, e.g. transverse spin projections),
  * a coupling matrix is a real symmetric n x n array,
  * the Ising energy is E(s) = -(1/2) * sum_{i != j} J_ij s_i s_j.

The i = j terms are excluded everywhere: for binary spins a diagonal adds
a configuration-independent constant, and cavity-mediated matrices carry a
physical positive diagonal that must not bias flip decisions.
"""

from __future__ import annotations

import numpy as np

from .rng import as_rng

__all__ = [
    "ising_energy",
    "delta_energy",
    "delta_energy_all",
    "local_fields",
    "overlap_distance",
    "apply_errors",
    "apply_errors_batch",
    "flip_sites",
    "random_spins",
    "normalize",
    "canonicalize",
    "is_binary",
    "require_binary",
    "require_coupling",
    "zero_diagonal",
    "save_spin_config",
    "load_spin_config",
    "save_coupling",
    "load_coupling",
]


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def is_binary(s: np.ndarray, tol: float = 0.0) -> bool:
    """True if every entry is +1 or -1 (within tol)."""
    s = np.asarray(s)
    return bool(np.all(np.abs(np.abs(s) - 1.0) <= tol))


def require_binary(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("spin configuration must be a non-empty 1-d vector")
    if not is_binary(s):
        raise ValueError("spin configuration must have entries +1/-1")
    return s


def require_coupling(J) -> np.ndarray:
    """Validate a coupling matrix: square, real, symmetric."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("coupling matrix must be square")
    if not np.allclose(J, J.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(J).max(initial=0.0))):
        raise ValueError("coupling matrix must be symmetric")
    return J


def zero_diagonal(J: np.ndarray) -> np.ndarray:
    """Copy of J with the diagonal set to zero."""
    J = np.array(J, dtype=float, copy=True)
    np.fill_diagonal(J, 0.0)
    return J


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def local_fields(J: np.ndarray, s: np.ndarray) -> np.ndarray:
    """h_k = sum_{j != k} J_kj s_j, the field each spin sees from the rest."""
    J = np.asarray(J, dtype=float)
    s = np.asarray(s, dtype=float)
    return J @ s - np.diag(J) * s


def ising_energy(J: np.ndarray, s: np.ndarray) -> float:
    """E(s) = -(1/2) sum_{i != j} J_ij s_i s_j."""
    s = np.asarray(s, dtype=float)
    return -0.5 * float(s @ local_fields(J, s))


def delta_energy(J: np.ndarray, s: np.ndarray, k: int) -> float:
    """Energy change of flipping spin k: Delta-E_k = 2 s_k sum_{j != k} J_kj s_j."""
    J = np.asarray(J, dtype=float)
    s = np.asarray(s, dtype=float)
    h_k = float(J[k] @ s) - float(J[k, k]) * float(s[k])
    return 2.0 * float(s[k]) * h_k


def delta_energy_all(J: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Vector of single-flip energy changes for every site at once."""
    s = np.asarray(s, dtype=float)
    return 2.0 * s * local_fields(J, s)


# ---------------------------------------------------------------------------
# overlap metric
# ---------------------------------------------------------------------------

def overlap_distance(a: np.ndarray, b: np.ndarray, tol: float = 1e-6) -> float:
    """Spin-flip distance d(a, b) = (n/2) * (1 - |a . b|) between unit vectors.

    Both arguments must be normalized (sum of squares 1 within `tol`);
    binary patterns are compared after dividing by sqrt(n). For two binary
    patterns differing in k sites the distance is exactly k, so one unit of
    distance means one spin flip. The absolute value makes d blind to a
    global sign flip, matching how configurations are grouped.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("configurations must be 1-d vectors of equal length")
    for v in (a, b):
        norm2 = float(v @ v)
        if abs(norm2 - 1.0) > tol:
            raise ValueError("configurations must be normalized to unit length "
                             f"(got sum of squares {norm2!r})")
    n = a.size
    return 0.5 * n * (1.0 - abs(float(a @ b)))


def normalize(s: np.ndarray) -> np.ndarray:
    """Rescale to unit length (binary patterns become +-1/sqrt(n))."""
    s = np.asarray(s, dtype=float)
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return s / norm


# ---------------------------------------------------------------------------
# corruptions and related utilities
# ---------------------------------------------------------------------------

def flip_sites(s: np.ndarray, sites) -> np.ndarray:
    """Copy of s with the given sites sign-flipped."""
    out = np.array(s, dtype=float, copy=True)
    out[np.asarray(sites, dtype=int)] *= -1.0
    return out


def apply_errors(s: np.ndarray, e: int, rng) -> np.ndarray:
    """Flip e distinct sites chosen uniformly at random.

    e = 0 returns an unchanged copy. e must satisfy 0 <= e <= n.
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    if not 0 <= e <= n:
        raise ValueError(f"error count e={e} outside [0, {n}]")
    if e == 0:
        return s.copy()
    sites = as_rng(rng).choice(n, size=e, replace=False)
    return flip_sites(s, sites)


def apply_errors_batch(s: np.ndarray, e: int, trials: int, rng) -> np.ndarray:
    """(trials, n) array of independent e-flip corruptions of s.

    Each row flips a uniformly random e-subset of sites; rows are iid.
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    if not 0 <= e <= n:
        raise ValueError(f"error count e={e} outside [0, {n}]")
    out = np.tile(s, (trials, 1))
    if e == 0 or trials == 0:
        return out
    # argpartition of iid uniforms picks a uniform random e-subset per row
    keys = as_rng(rng).random((trials, n))
    sites = np.argpartition(keys, e - 1, axis=1)[:, :e]
    rows = np.repeat(np.arange(trials), e)
    out[rows, sites.ravel()] *= -1.0
    return out


def random_spins(n: int, rng, trials: int | None = None) -> np.ndarray:
    """Uniform random binary configuration(s): shape (n,) or (trials, n)."""
    gen = as_rng(rng)
    shape = (n,) if trials is None else (trials, n)
    return 2.0 * gen.integers(0, 2, size=shape).astype(float) - 1.0


def canonicalize(s: np.ndarray) -> np.ndarray:
    """Fix the global sign so the first nonzero entry is positive.

    Used to count a configuration and its global flip as one attractor.
    """
    s = np.asarray(s, dtype=float)
    nz = np.flatnonzero(s)
    if nz.size == 0:
        return s.copy()
    return s * np.sign(s[nz[0]])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_spin_config(path, s: np.ndarray) -> None:
    """Write one line of comma-separated signed values."""
    s = np.asarray(s, dtype=float)
    if is_binary(s):
        text = ",".join(str(int(v)) for v in s)
    else:
        # repr round-trips float64 exactly
        text = ",".join(repr(float(v)) for v in s)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def load_spin_config(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        line = fh.readline().strip()
    if not line:
        raise ValueError(f"{path}: empty spin configuration file")
    return np.array([float(tok) for tok in line.split(",")], dtype=float)


def save_coupling(path, J: np.ndarray) -> None:
    """Write a coupling matrix: .npy binary (shape header) or dense CSV.

    Both formats round-trip float64 bit-exactly; CSV uses %.17g which is
    guaranteed lossless for IEEE doubles.
    """
    J = require_coupling(J)
    path = str(path)
    if path.endswith(".npy"):
        np.save(path, J)
    else:
        np.savetxt(path, J, fmt="%.17g", delimiter=",")


def load_coupling(path) -> np.ndarray:
    path = str(path)
    if path.endswith(".npy"):
        J = np.load(path)
    else:
        J = np.loadtxt(path, delimiter=",", ndmin=2)
    return require_coupling(J)
