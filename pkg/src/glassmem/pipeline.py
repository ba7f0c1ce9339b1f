"""Discovery and measurement pipeline for network memories.

The pipeline treats a network as a black-box "oracle": stimulus pattern
in, relaxed sign pattern out. Memories are found by relaxing random
stimuli, grouping the outputs by overlap distance with average-linkage
clustering, screening each group's reference pattern for reliable
zero-error recall, and then measuring basin sizes with an adaptive
corruption schedule fitted by a1*(1 - tanh(a2*e - a3)). Capacity is the
number of screened candidates whose fitted basin reaches one spin flip,
with uncertainty from resampling the basin estimates.

Sign bookkeeping: attractors come in +-s pairs (the dynamics and the
distance are blind to a global flip), so sampled outputs are
canonicalized (first nonzero entry positive) before counting, and recall
acceptance compares canonical patterns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import minimize
from scipy.spatial.distance import squareform

from . import dynamics as dyn
from .rng import as_rng
from .spins import apply_errors, canonicalize, flip_sites

DEFAULT_CUT = 1.0
DEFAULT_NOISE_FLOOR = 0.21
ADAPTIVE_WIDTH = 1.5          # spin flips; proposal distribution scale
BASIN_ERR_DEFAULT = 0.3       # spin flips; used when the bootstrap degenerates


class NetworkOracle(Protocol):
    """Recall interface: stimulus sign pattern in, output pattern out."""

    n: int

    def recall(self, stimulus: np.ndarray, rng) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# Oracle adapters


@dataclass
class RelaxOracle:
    """Zero-temperature relaxation of an Ising network as an oracle."""

    J: np.ndarray
    kind: "dyn.DynamicsKind" = dyn.SD

    def __post_init__(self):
        self.n = int(self.J.shape[0])

    def recall(self, stimulus: np.ndarray, rng) -> np.ndarray:
        return dyn.relax(self.J, stimulus, self.kind, rng)


@dataclass
class IdentityOracle:
    """Returns the stimulus unchanged (plumbing tests)."""

    n: int

    def recall(self, stimulus: np.ndarray, rng) -> np.ndarray:
        return np.array(stimulus, dtype=float, copy=True)


class SemiclassicalOracle:
    """Recall through the driven-network simulation.

    Each recall draws a fresh noise realization and transverse seed from
    the rng it is given. Bulk capacity runs pass SimParams with a
    loosened integrator tolerance; sign outcomes are tolerance-invariant
    (asserted by the simulation tests).
    """

    def __init__(self, plan, params=None, noise=None, cavity=None, rng=None,
                 record: bool = False):
        from .cavity import CavityParams
        from .semiclassical import NoiseModel, SimParams, run_recall_trial

        self.plan = plan
        self.params = params or SimParams()
        self.noise = noise or NoiseModel.none()
        self.cavity = cavity or CavityParams()
        self.record = record
        self._run = run_recall_trial
        self.n = len(plan)

    def recall(self, stimulus: np.ndarray, rng) -> np.ndarray:
        res = self._run(self.plan, np.asarray(stimulus, dtype=float),
                        params=self.params, noise=self.noise, rng=rng,
                        cavity=self.cavity, record=self.record)
        return res.signs.astype(float)


# ---------------------------------------------------------------------------
# Attractor sampling


def default_sample_count(n: int) -> int:
    """Sampling depth by network size: 400/200/100/50 for n of at least
    16/12/8/below."""
    if n >= 16:
        return 400
    if n >= 12:
        return 200
    if n >= 8:
        return 100
    return 50


def sample_attractors(oracle: NetworkOracle, samples: Optional[int] = None,
                      rng=None) -> np.ndarray:
    """Relax `samples` uniformly random stimuli through the oracle.

    Returns the raw outputs, one row per sample, in draw order.
    """
    gen = as_rng(rng)
    n = oracle.n
    if samples is None:
        samples = default_sample_count(n)
    if samples < 1:
        raise ValueError("samples must be at least 1")
    out = np.empty((samples, n))
    for i in range(samples):
        stim = gen.choice(np.array([-1.0, 1.0]), size=n)
        out[i] = oracle.recall(stim, gen)
    return out


# ---------------------------------------------------------------------------
# Clustering


@dataclass
class ClusterTree:
    """Average-linkage merge tree over sampled configurations.

    merges follows scipy's linkage layout: each row (a, b, height, size)
    joins clusters a and b at the stored average overlap distance.
    Heights are kept exactly as computed; flat clusters are formed by
    cutting on node height.
    """

    merges: np.ndarray   # (m-1, 4) scipy linkage matrix
    n_leaves: int

    def cut(self, height: float) -> np.ndarray:
        """Flat cluster labels (0-based) at the given height."""
        if self.n_leaves == 1:
            return np.zeros(1, dtype=int)
        return fcluster(self.merges, t=height, criterion="distance") - 1

    def to_json(self, path) -> None:
        doc = {"n_leaves": self.n_leaves,
               "merges": [[int(a), int(b), float(h), int(c)]
                          for a, b, h, c in self.merges]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)


@dataclass
class Candidate:
    """One attractor candidate from clustering.

    reference is the canonicalized most frequent member pattern; accept
    holds the canonical patterns of the reference's sub-noise-floor group
    (distinct measurements of the same configuration). count is the
    number of samples that landed in the candidate's cluster.
    """

    reference: np.ndarray
    count: int
    members: np.ndarray        # (k, n) distinct canonical member patterns
    member_counts: np.ndarray  # (k,)
    accept: np.ndarray         # (j, n) canonical accept patterns

    @property
    def n(self) -> int:
        return self.reference.shape[0]

    def matches(self, output: np.ndarray, strict: bool = False) -> bool:
        """Recall acceptance: exact canonical match to the reference, or
        (unless strict) to any member of the sub-noise-floor group."""
        out = canonicalize(np.asarray(output, dtype=float))
        if np.array_equal(out, self.reference):
            return True
        if strict:
            return False
        return bool((self.accept == out).all(axis=1).any())


def _pairwise_overlap_distance(rows: np.ndarray) -> np.ndarray:
    """Condensed matrix of d(a,b) = (n/2)(1 - |a.b|) over normalized rows.

    Batch form of spins.overlap_distance: rows are normalized to unit
    length first, so +-1 patterns differing in k sites sit at distance
    exactly k, and continuous measured configurations are handled too.
    """
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("configurations must be nonzero")
    unit = rows / norms
    g = np.abs(unit @ unit.T)
    d = 0.5 * rows.shape[1] * (1.0 - g)
    np.fill_diagonal(d, 0.0)
    d[d < 0] = 0.0
    return squareform(d, checks=False)


def build_tree(configs: np.ndarray, method: str = "average") -> ClusterTree:
    """Average-linkage tree on the overlap distance between all configs."""
    rows = np.asarray(configs, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("configs must be a nonempty (m, n) array")
    if rows.shape[0] == 1:
        return ClusterTree(merges=np.zeros((0, 4)), n_leaves=1)
    z = linkage(_pairwise_overlap_distance(rows), method=method)
    return ClusterTree(merges=z, n_leaves=rows.shape[0])


def _group_patterns(rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical unique patterns, their counts, and per-row indices."""
    canon = np.stack([canonicalize(r) for r in rows])
    uniq, inverse, counts = np.unique(canon, axis=0, return_inverse=True,
                                      return_counts=True)
    return uniq, counts, np.asarray(inverse).reshape(-1)


def cluster_candidates(configs: np.ndarray, cut: float = DEFAULT_CUT,
                       noise_floor: float = DEFAULT_NOISE_FLOOR,
                       method: str = "average"
                       ) -> Tuple[List[Candidate], ClusterTree]:
    """Group sampled outputs into attractor candidates.

    The tree is cut at `cut` to form candidate clusters (singletons
    included); within each cluster the most frequently sampled pattern is
    the reference, and the members that merge with it below `noise_floor`
    form the accept group of equivalent measurements. Candidates are
    ordered by decreasing sample count.
    """
    rows = np.asarray(configs, dtype=float)
    tree = build_tree(rows, method=method)
    labels = tree.cut(cut)
    noise_labels = tree.cut(noise_floor)

    candidates = []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        members, counts, inverse = _group_patterns(rows[idx])
        best = int(np.argmax(counts))
        reference = members[best]
        # sub-noise-floor group of the rows carrying the reference pattern
        ref_rows = idx[inverse == best]
        ref_noise = noise_labels[ref_rows[0]]
        accept_rows = idx[noise_labels[idx] == ref_noise]
        accept = np.unique(np.stack([canonicalize(r)
                                     for r in rows[accept_rows]]), axis=0)
        candidates.append(Candidate(reference=reference, count=idx.size,
                                    members=members, member_counts=counts,
                                    accept=accept))
    candidates.sort(key=lambda c: (-c.count, c.reference.tobytes()))
    return candidates, tree


# ---------------------------------------------------------------------------
# Screening


@dataclass
class ScreenResult:
    passed: bool
    p0: float
    trials: List[Tuple[int, bool]] = field(default_factory=list)


def _as_candidate(ref) -> Candidate:
    if isinstance(ref, Candidate):
        return ref
    pattern = canonicalize(np.asarray(ref, dtype=float))
    return Candidate(reference=pattern, count=1, members=pattern[None, :],
                     member_counts=np.array([1]), accept=pattern[None, :])


def screen_candidate(oracle: NetworkOracle, candidate, trials: int = 30,
                     pass_threshold: float = 0.75, rng=None,
                     strict: bool = False) -> ScreenResult:
    """Zero-error recall check: present the reference itself `trials`
    times; pass when the success fraction reaches `pass_threshold`."""
    cand = _as_candidate(candidate)
    gen = as_rng(rng)
    log = []
    hits = 0
    for _ in range(trials):
        out = oracle.recall(cand.reference.copy(), gen)
        ok = cand.matches(out, strict=strict)
        hits += ok
        log.append((0, bool(ok)))
    p0 = hits / trials if trials else 0.0
    return ScreenResult(passed=p0 >= pass_threshold, p0=p0, trials=log)


# ---------------------------------------------------------------------------
# tanh recall-curve fitting


def _tanh_model(e: np.ndarray, a1: float, a2: float, a3: float) -> np.ndarray:
    return a1 * (1.0 - np.tanh(a2 * e - a3))


def _fit_loss(theta, e, y, w):
    r = y - _tanh_model(e, *theta)
    return float(np.sum(w * r * r))


def _gauss_newton(e, y, w, theta0, max_iter=100, tol=1e-8):
    """Damped Gauss-Newton for the 3-parameter tanh recall curve."""
    a1, a2, a3 = theta0
    mu = 1e-3
    loss = _fit_loss((a1, a2, a3), e, y, w)
    for _ in range(max_iter):
        u = a2 * e - a3
        th = np.tanh(u)
        sech2 = 1.0 - th * th
        f = a1 * (1.0 - th)
        r = y - f
        jac = np.stack([1.0 - th, -a1 * sech2 * e, a1 * sech2], axis=1)
        jw = jac * w[:, None]
        g = jw.T @ r
        h = jw.T @ jac
        step_ok = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(h + mu * np.eye(3), g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            trial = (a1 + delta[0], a2 + delta[1], a3 + delta[2])
            if not np.all(np.isfinite(trial)):
                mu *= 10.0
                continue
            new_loss = _fit_loss(trial, e, y, w)
            if new_loss <= loss:
                rel = np.max(np.abs(delta) /
                             (np.abs(np.array([a1, a2, a3])) + 1e-12))
                a1, a2, a3 = trial
                loss = new_loss
                mu = max(mu * 0.3, 1e-12)
                step_ok = True
                if rel < tol:
                    return (a1, a2, a3), loss, True
                break
            mu *= 10.0
        if not step_ok:
            return (a1, a2, a3), loss, True  # stalled at a local optimum
    return (a1, a2, a3), loss, True


def fit_recall_curve(e: np.ndarray, p: np.ndarray, weights: np.ndarray,
                     e_max: int):
    """Weighted least-squares fit of a1*(1 - tanh(a2*e - a3)).

    Multistart damped Gauss-Newton over a3 in {0..e_max} with a
    derivative-free simplex fallback. Returns (a1, a2, a3), loss, ok.
    """
    e = np.asarray(e, dtype=float)
    p = np.asarray(p, dtype=float)
    w = np.asarray(weights, dtype=float)
    best = None
    p0 = p[np.argmin(e)]
    a1_start = max(0.3, min(1.0, 0.5 * p0 + 0.25))
    for a3_start in range(0, e_max + 1):
        theta0 = (a1_start, 1.0, float(a3_start))
        theta, loss, ok = _gauss_newton(e, p, w, theta0)
        if ok and np.isfinite(loss):
            if best is None or loss < best[1]:
                best = (theta, loss)
    if best is None or not np.isfinite(best[1]):
        res = minimize(_fit_loss, x0=np.array([a1_start, 1.0, 1.0]),
                       args=(e, p, w), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12,
                                "maxiter": 4000})
        if res.success and np.isfinite(res.fun):
            best = (tuple(res.x), float(res.fun))
    if best is None:
        return None, math.inf, False
    return best[0], best[1], True


def basin_from_fit(a1: float, a2: float, a3: float, threshold: float) -> float:
    """Error count where the fitted curve crosses `threshold`.

    b = (a3 + atanh(1 - threshold/a1)) / a2 when a1 exceeds the
    threshold; otherwise 0 (the fitted plateau never reaches it).
    Negative crossings clamp to 0.
    """
    if not np.isfinite(a1) or a1 <= threshold:
        return 0.0
    if a2 == 0.0:
        return 0.0
    arg = 1.0 - threshold / a1
    b = (a3 + math.atanh(arg)) / a2
    return max(0.0, float(b))


def _interp_crossing(e: np.ndarray, p: np.ndarray, threshold: float) -> float:
    """Monotone linear interpolation fallback for the threshold crossing."""
    order = np.argsort(e)
    e = e[order]
    p = np.minimum.accumulate(p[order])  # enforce monotone decay
    if p[0] < threshold:
        return 0.0
    for k in range(1, e.size):
        if p[k] < threshold:
            e0, e1 = e[k - 1], e[k]
            p0, p1 = p[k - 1], p[k]
            if p0 == p1:
                return float(e0)
            return float(e0 + (p0 - threshold) * (e1 - e0) / (p0 - p1))
    return float(e[-1])


@dataclass
class RecallCurve:
    """Recall-vs-error data, tanh fit and basin estimate for one memory."""

    points: List[Tuple[int, float, int]]       # (e, success fraction, trials)
    a1: float
    a2: float
    a3: float
    basin: float
    basin_err: float
    residual: float                            # weighted SSE of the fit
    fallback: bool = False                     # linear-interpolation basin
    raw_trials: List[Tuple[int, bool]] = field(default_factory=list)

    def curve(self, e) -> np.ndarray:
        return _tanh_model(np.asarray(e, dtype=float), self.a1, self.a2,
                           self.a3)


def _grouped(trials: Sequence[Tuple[int, bool]]):
    """Aggregate raw (e, hit) trials into per error count fractions."""
    agg = {}
    for e, hit in trials:
        tot, hits = agg.get(e, (0, 0))
        agg[e] = (tot + 1, hits + bool(hit))
    es = np.array(sorted(agg), dtype=float)
    fr = np.array([agg[e][1] / agg[e][0] for e in sorted(agg)])
    w = np.array([agg[e][0] for e in sorted(agg)], dtype=float)
    return es, fr, w


def _fit_and_basin(trials, e_max: int, threshold: float):
    es, fr, w = _grouped(trials)
    if es.size < 2:
        return None
    theta, loss, ok = fit_recall_curve(es, fr, w, e_max)
    if not ok:
        return None
    basin = basin_from_fit(*theta, threshold)
    return theta, loss, basin


def estimate_basin(oracle: NetworkOracle, candidate, p0_trials: int = 30,
                   adaptive_trials: int = 30, threshold: float = 0.5,
                   rng=None, strict: bool = False, bootstrap: int = 100,
                   zero_error_trials: Optional[Sequence[Tuple[int, bool]]]
                   = None) -> RecallCurve:
    """Adaptive basin-size measurement for one screened candidate.

    Runs p0_trials zero-error recalls (or reuses the screening stage's
    via `zero_error_trials`), then adaptive_trials corrupted recalls
    whose error counts chase the current basin estimate: the first is
    uniform on [1, n/2]; afterwards e is drawn from P(e) proportional
    to 1/((e - b)^2 + 1.5^2) over integers [1, n/2] with b the basin
    refitted from all data so far. The final curve is fitted by
    weighted least squares and the basin read off at `threshold`;
    basin_err is the standard deviation over `bootstrap` resamples of
    the trial list (0.3 flips when degenerate). If every fit diverges
    the basin falls back to a monotone linear interpolation of the
    measured fractions and the curve is flagged.
    """
    cand = _as_candidate(candidate)
    gen = as_rng(rng)
    n = cand.n
    e_max = max(1, n // 2)
    trials: List[Tuple[int, bool]] = []

    def run(e: int) -> None:
        stim = cand.reference.copy() if e == 0 else apply_errors(
            cand.reference, e, gen)
        out = oracle.recall(stim, gen)
        trials.append((e, cand.matches(out, strict=strict)))

    if zero_error_trials is not None:
        trials.extend((0, bool(hit)) for _, hit in zero_error_trials)
    else:
        for _ in range(p0_trials):
            run(0)

    b_cur: Optional[float] = None
    e_grid = np.arange(1, e_max + 1, dtype=float)
    for k in range(adaptive_trials):
        if k == 0 or b_cur is None:
            e_next = int(gen.integers(1, e_max + 1))
        else:
            b_prop = min(max(b_cur, 0.0), float(e_max))
            pmf = 1.0 / ((e_grid - b_prop) ** 2 + ADAPTIVE_WIDTH ** 2)
            pmf /= pmf.sum()
            e_next = int(gen.choice(e_grid, p=pmf))
        run(e_next)
        fit = _fit_and_basin(trials, e_max, threshold)
        if fit is not None:
            b_cur = fit[2]

    final = _fit_and_basin(trials, e_max, threshold)
    es, fr, w = _grouped(trials)
    if final is None:
        basin = _interp_crossing(es, fr, threshold)
        theta = (float("nan"),) * 3
        loss = float("nan")
        fallback = True
    else:
        theta, loss, basin = final
        fallback = False

    # bootstrap over trials, resampled with replacement
    boots = []
    trial_arr = np.array(trials, dtype=float)
    for _ in range(bootstrap):
        take = gen.integers(0, len(trials), size=len(trials))
        rs = [tuple(trial_arr[i]) for i in take]
        rs = [(int(e), bool(h)) for e, h in rs]
        fit = _fit_and_basin(rs, e_max, threshold)
        if fit is not None:
            boots.append(fit[2])
    if len(boots) >= 10:
        err = float(np.std(boots))
        if not np.isfinite(err) or err == 0.0:
            err = BASIN_ERR_DEFAULT
    else:
        err = BASIN_ERR_DEFAULT

    points = [(int(e), float(f), int(c)) for e, f, c in zip(es, fr, w)]
    return RecallCurve(points=points, a1=theta[0], a2=theta[1], a3=theta[2],
                       basin=float(basin), basin_err=err,
                       residual=float(loss), fallback=fallback,
                       raw_trials=trials)


# ---------------------------------------------------------------------------
# Capacity


@dataclass
class MemoryRecord:
    """Per-candidate pipeline results."""

    reference: np.ndarray
    count: int
    p0: float
    screened: bool
    basin: float = 0.0
    basin_err: float = 0.0
    volume: float = 0.0
    volume_err: float = 0.0
    curve: Optional[RecallCurve] = None
    exact_p1: Optional[float] = None

    @property
    def is_memory(self) -> bool:
        return self.screened and self.basin >= 1.0


@dataclass
class CapacityResult:
    """Pipeline capacity with bootstrap statistics.

    count is the point estimate (screened candidates with basin >= 1);
    mean/err summarize the bootstrap distribution obtained by perturbing
    each basin with its own error bar (truncated at zero) and recounting.
    """

    count: int
    mean: float
    err: float
    records: List[MemoryRecord]
    n_samples: int
    threshold: float

    @property
    def memories(self) -> List[MemoryRecord]:
        return [r for r in self.records if r.is_memory]


def bootstrap_capacity(basins: np.ndarray, errs: np.ndarray, rng,
                       draws: int = 1000) -> Tuple[float, float]:
    """Mean and std of the memory count under Gaussian basin noise.

    Each draw perturbs every basin by its own sigma, truncates at zero,
    and counts basins of at least one flip.
    """
    gen = as_rng(rng)
    if basins.size == 0:
        return 0.0, 0.0
    noise = gen.normal(0.0, 1.0, size=(draws, basins.size)) * errs[None, :]
    sampled = np.maximum(0.0, basins[None, :] + noise)
    counts = (sampled >= 1.0).sum(axis=1)
    return float(counts.mean()), float(counts.std())


def exact_single_flip_recall(oracle: NetworkOracle, candidate,
                             strict: bool = False, rng=None) -> float:
    """Exact e=1 recall for a deterministic oracle: try all n single-flip
    corruptions once and return the success fraction."""
    cand = _as_candidate(candidate)
    gen = as_rng(rng)
    hits = 0
    for k in range(cand.n):
        out = oracle.recall(flip_sites(cand.reference, [k]), gen)
        hits += cand.matches(out, strict=strict)
    return hits / cand.n


def capacity(oracle: NetworkOracle, rng=None, n_samples: Optional[int] = None,
             cut: float = DEFAULT_CUT,
             noise_floor: float = DEFAULT_NOISE_FLOOR,
             screen_trials: int = 30, pass_threshold: float = 0.75,
             adaptive_trials: int = 30,
             threshold: float = 0.5, bootstrap_draws: int = 1000,
             strict: bool = False, exact_single_flip: bool = False,
             configs: Optional[np.ndarray] = None) -> CapacityResult:
    """Full pipeline: sample, cluster, screen, measure basins, count.

    The screening recalls double as each memory's zero-error data, so a
    screened candidate costs screen_trials + adaptive_trials recalls.
    With exact_single_flip the memory criterion switches to the exact
    e = 1 recall fraction over all n corruptions exceeding `threshold`
    (valid for deterministic oracles); basins are still estimated for
    reporting. Pass `configs` to reuse previously sampled outputs.
    """
    gen = as_rng(rng)
    if configs is None:
        configs = sample_attractors(oracle, samples=n_samples, rng=gen)
    n_total = configs.shape[0]
    candidates, _ = cluster_candidates(configs, cut=cut,
                                       noise_floor=noise_floor)

    records = []
    for cand in candidates:
        screen = screen_candidate(oracle, cand, trials=screen_trials,
                                  pass_threshold=pass_threshold, rng=gen,
                                  strict=strict)
        rec = MemoryRecord(reference=cand.reference, count=cand.count,
                           p0=screen.p0, screened=screen.passed)
        if screen.passed:
            # the screening stage's zero-error recalls double as the
            # fit's e = 0 data: 30 + 30 trials per memory
            curve = estimate_basin(oracle, cand,
                                   adaptive_trials=adaptive_trials,
                                   threshold=threshold, rng=gen,
                                   strict=strict,
                                   zero_error_trials=screen.trials)
            rec.curve = curve
            rec.basin = curve.basin
            rec.basin_err = curve.basin_err
            if exact_single_flip:
                rec.exact_p1 = exact_single_flip_recall(oracle, cand,
                                                        strict=strict,
                                                        rng=gen)
            vol, verr = basin_volume(cand.count, n_total, oracle.n, rng=gen)
            rec.volume = vol
            rec.volume_err = verr
        records.append(rec)

    if exact_single_flip:
        flags = np.array([r.screened and (r.exact_p1 or 0.0) > threshold
                          for r in records])
        count = int(flags.sum())
        mean, err = float(count), 0.0
    else:
        basins = np.array([r.basin for r in records if r.screened])
        errs = np.array([r.basin_err for r in records if r.screened])
        count = int(sum(r.is_memory for r in records))
        mean, err = bootstrap_capacity(basins, errs, gen,
                                       draws=bootstrap_draws)
    return CapacityResult(count=count, mean=mean, err=err, records=records,
                          n_samples=n_total, threshold=threshold)


# ---------------------------------------------------------------------------
# Basin volumes and sample-depth extrapolation


def basin_volume(count: int, total: int, n: int, rng=None,
                 bootstrap: int = 1000) -> Tuple[float, float]:
    """Configuration-space volume 2^n * N_i / N_total with bootstrap err.

    The error resamples the attractor sample list: N_i ~ Binomial(total,
    count/total) per replicate.
    """
    if total <= 0:
        raise ValueError("total sample count must be positive")
    if count < 0 or count > total:
        raise ValueError("count must lie in [0, total]")
    scale = 2.0 ** n / total
    vol = scale * count
    gen = as_rng(rng)
    draws = gen.binomial(total, count / total, size=bootstrap)
    err = float(np.std(draws * scale))
    return float(vol), err


@dataclass
class SampleScaling:
    """Distinct-memory counts vs sampling depth and the 1/m extrapolation."""

    sizes: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    slope: float
    intercept: float
    fraction_found: float


def capacity_vs_samples(configs: np.ndarray, labels: Optional[np.ndarray] = None,
                        bootstrap_reps: int = 500,
                        sizes: Optional[Sequence[int]] = None,
                        rng=None) -> SampleScaling:
    """Bootstrap the distinct-memory count at reduced sampling depths.

    Each config carries a label (distinct canonical patterns by default;
    pass candidate ids to group by cluster, with negative labels ignored).
    For every subsample size m the count of distinct non-negative labels
    in a resample (with replacement) is averaged over bootstrap_reps
    draws; a linear fit of count vs 1/m extrapolates to infinite depth.
    """
    rows = np.asarray(configs, dtype=float)
    m_total = rows.shape[0]
    if labels is None:
        _, _, labels = _group_patterns(rows)
    labels = np.asarray(labels)
    gen = as_rng(rng)
    if sizes is None:
        raw = [m_total, m_total // 2, m_total // 4, m_total // 8,
               m_total // 16]
        sizes = sorted({s for s in raw if s >= 5})
    sizes = np.array(sorted(sizes), dtype=int)

    means = np.empty(sizes.size)
    stds = np.empty(sizes.size)
    for i, m in enumerate(sizes):
        counts = np.empty(bootstrap_reps)
        for r in range(bootstrap_reps):
            take = gen.integers(0, m_total, size=m)
            lab = labels[take]
            counts[r] = np.unique(lab[lab >= 0]).size
        means[i] = counts.mean()
        stds[i] = counts.std()

    x = 1.0 / sizes
    slope, intercept = np.polyfit(x, means, 1)
    frac = float(means[-1] / intercept) if intercept > 0 else float("nan")
    return SampleScaling(sizes=sizes, means=means, stds=stds,
                         slope=float(slope), intercept=float(intercept),
                         fraction_found=frac)
