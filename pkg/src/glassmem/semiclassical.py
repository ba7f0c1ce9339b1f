"""Time-domain simulation of recall trials in the cavity-coupled spin network.

Each site i carries a classical Bloch vector (Sx_i, Sy_i, Sz_i) of length
S = 1/2 and a 2D position r_i (um) relaxing overdamped in the total energy
landscape. With h_i = f(r_i) + 2 g(t) sum_j J(r_i, r_j) Sx_j the equations
of motion are

    dSx_i/dt = -omega_z Sy_i
    dSy_i/dt = +omega_z Sx_i + h_i Sz_i
    dSz_i/dt = -h_i Sy_i
    dr_i/dt  = -(1/c_d) dE/dr_i

which is Larmor precession about the instantaneous field (h_i, 0, omega_z);
the spin length |S_i| is an exact invariant. The energy is

    E = omega_z sum_i Sz_i - g sum_ij J_ij Sx_i Sx_j - sum_i f(r_i) Sx_i
        + (E_trap/2) sum_i |r_i - r_i^0|^2 / w_t^2

in hbar = 1 units (rad/ms). Reported breakdowns are divided by omega_z*S.

The pump ramps exponentially to p = g/g_c = 4 at t_end; the stimulus f is a
weighted sum of coupling profiles centered on the nominal site positions,
cosine-ramped on, held, and cosine-ramped off before the measurement time.
Site-resolved noise enters through jittered trap centers and through the
per-beam amplitude/phase factors of the stimulus weights.

The default inverse mobility ``c_d`` is set so that the calibrated trap
stiffness reproduces micron-scale position deviations within the 8 ms
window; see SimParams for the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _simcore
from .cavity import CavityParams, SitePlan, coupling, grad_coupling

TWO_PI = 2.0 * math.pi

#: Trap energy scale (rad/ms) calibrated so the mean site deviation at the
#: end of a noise-free trial is 1.32 um (see calibrate_trap_energy). At a
#: quarter of this stiffness the same trials deviate by about 1.9 um.
DEFAULT_TRAP_ENERGY = 400.0

#: Default target for trap-energy calibration (um).
DEFAULT_DEVIATION_TARGET = 1.32


class IntegrationError(RuntimeError):
    """Adaptive integration failed (step underflow or step budget)."""


@dataclass(frozen=True)
class SimParams:
    """Schedules, mechanics and integrator settings for one trial.

    Times in ms, rates in rad/ms, lengths in um. stim_amp is the peak
    stimulus amplitude in units of omega_z. c_d is the inverse mobility of
    the overdamped positional dynamics in hbar/um^2: velocities are
    (1/c_d) times energy gradients. The literature quotes hbar/(0.002 um^2)
    for this constant, but with per-site spin length S = 1/2 that value
    makes the spin-position force immeasurably weak (sub-0.05 um deviations
    even with the trap off, far from the ~1.3 um operating point), so the
    default is hbar/(0.5 um^2). That choice leaves the free-drift ceiling
    near 2.2 um, so the calibrated trap stiffness sits in the
    partially-relaxed regime that also reproduces the ~1.45x deviation
    growth observed when the trap energy is quartered.
    """

    omega_z: float = TWO_PI * 7.5
    pump_final: float = 4.0
    pump_tau: float = 2.0
    t_end: float = 8.0
    stim_amp: float = 0.5
    t_stim_up: float = 1.6
    t_stim_hold: float = 5.0
    t_stim_off: float = 7.0
    c_d: float = 2.0
    e_trap: float = DEFAULT_TRAP_ENERGY
    w_t: float = 20.0
    spin: float = 0.5
    seed_scale: float = 1e-4
    rtol: float = 1e-8
    atol: float = 1e-10
    elastic: bool = True
    lazy: bool = False
    stale_tol: float = 1e-3
    max_steps: int = 400_000
    trace_cap: int = 32_768

    def __post_init__(self):
        for name in ("omega_z", "pump_tau", "t_end", "c_d", "w_t", "spin",
                     "rtol", "atol", "stale_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("pump_final", "stim_amp", "e_trap", "seed_scale"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (0.0 < self.t_stim_up <= self.t_stim_hold <= self.t_stim_off
                <= self.t_end):
            raise ValueError("stimulus ramp times must satisfy "
                             "0 < up <= hold <= off <= t_end")


@dataclass(frozen=True)
class NoiseModel:
    """Per-channel noise magnitudes for one trial draw.

    trap_sigma jitters the trap centers (and with them the initial
    positions, since atoms start at their trap minima). The stimulus
    weights become s_m * A_m * cos(phi_trans + phi_m) with A_m normal
    around 1, phi_m normal around 0, and phi_trans uniform on [0, 2pi)
    when transverse_phase is set.
    """

    trap_sigma: float = 0.0
    amp_sigma: float = 0.0
    phase_sigma: float = 0.0
    transverse_phase: bool = False

    def __post_init__(self):
        if min(self.trap_sigma, self.amp_sigma, self.phase_sigma) < 0:
            raise ValueError("noise sigmas must be non-negative")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def trap_only(cls, sigma: float = 0.5) -> "NoiseModel":
        return cls(trap_sigma=sigma)

    @classmethod
    def stimulus_only(cls, amp_sigma: float = 0.1, phase_sigma: float = 0.3
                      ) -> "NoiseModel":
        return cls(amp_sigma=amp_sigma, phase_sigma=phase_sigma,
                   transverse_phase=True)

    @classmethod
    def full(cls, trap_sigma: float = 0.5, amp_sigma: float = 0.1,
             phase_sigma: float = 0.3) -> "NoiseModel":
        return cls(trap_sigma=trap_sigma, amp_sigma=amp_sigma,
                   phase_sigma=phase_sigma, transverse_phase=True)

    @property
    def any_stimulus(self) -> bool:
        return (self.amp_sigma > 0 or self.phase_sigma > 0
                or self.transverse_phase)


@dataclass(frozen=True)
class TrialSetup:
    """One realized noise draw: beam geometry, weights and trap centers."""

    beams: np.ndarray    # (n, 2) nominal beam positions (um)
    weights: np.ndarray  # (n,) signed beam weights
    traps: np.ndarray    # (n, 2) realized trap centers (um)

    @property
    def n(self) -> int:
        return self.beams.shape[0]


@dataclass
class NetworkState:
    """Bloch vectors plus positions and trap centers for every site."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    pos: np.ndarray   # (n, 2)
    trap: np.ndarray  # (n, 2)

    @property
    def n(self) -> int:
        return self.sx.shape[0]

    def spin_lengths(self) -> np.ndarray:
        return np.sqrt(self.sx ** 2 + self.sy ** 2 + self.sz ** 2)

    def copy(self) -> "NetworkState":
        return NetworkState(self.sx.copy(), self.sy.copy(), self.sz.copy(),
                            self.pos.copy(), self.trap.copy())


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy terms in units of omega_z * S (transverse splitting, Ising,
    stimulus and trap contributions)."""

    transverse: float
    ising: float
    stimulus: float
    trap: float

    @property
    def total(self) -> float:
        return self.transverse + self.ising + self.stimulus + self.trap


@dataclass
class Trajectory:
    """Accepted integrator steps: times, spins, positions and energies.

    energy rows hold (transverse, ising, stimulus, trap) in omega_z*S
    units; columns of sx/sy/sz/pos follow site order.
    """

    t: np.ndarray        # (m,)
    sx: np.ndarray       # (m, n)
    sy: np.ndarray       # (m, n)
    sz: np.ndarray       # (m, n)
    pos: np.ndarray      # (m, n, 2)
    energy: np.ndarray   # (m, 4)


@dataclass
class TrialResult:
    """Outcome of one recall trial."""

    signs: np.ndarray              # (n,) +-1 from sign(Sx) at t_end
    state: NetworkState            # final state
    setup: TrialSetup              # realized noise draw
    seed_signs: np.ndarray         # (n,) +-1 transverse seed signs
    energy: EnergyBreakdown        # final breakdown, omega_z*S units
    n_steps: int                   # accepted integrator steps
    trajectory: Optional[Trajectory] = None

    @property
    def deviations(self) -> np.ndarray:
        """Final |r_i - r_i^0| per site (um)."""
        return np.linalg.norm(self.state.pos - self.state.trap, axis=1)


# ---------------------------------------------------------------------------
# Schedules and derived couplings


def pump_ratio(t, params: SimParams):
    """p(t) = g(t)/g_c: exponential approach to pump_final at t_end."""
    return params.pump_final * np.exp((np.asarray(t, float) - params.t_end)
                                      / params.pump_tau)


def stimulus_envelope(t, params: SimParams):
    """Absolute stimulus prefactor a(t) in rad/ms.

    Cosine ramp 0 -> t_stim_up, hold at stim_amp*omega_z until
    t_stim_hold, cosine ramp down to zero at t_stim_off.
    """
    t = np.asarray(t, dtype=float)
    peak = params.stim_amp * params.omega_z
    up = 0.5 * (1.0 - np.cos(np.pi * t / params.t_stim_up))
    width = params.t_stim_off - params.t_stim_hold
    if width > 0:
        down = 0.5 * (1.0 + np.cos(np.pi * (t - params.t_stim_hold) / width))
    else:
        down = np.zeros_like(t)
    shape = np.where(t <= 0.0, 0.0,
                     np.where(t < params.t_stim_up, up,
                              np.where(t <= params.t_stim_hold, 1.0,
                                       np.where(t < params.t_stim_off, down,
                                                0.0))))
    return peak * shape


def critical_coupling(j_matrix: np.ndarray, params: SimParams,
                      cavity: CavityParams) -> float:
    """Threshold coupling g_c from 2 S g_c lambda_max = omega_z (1 + kappa^2/delta_c^2).

    lambda_max is the largest eigenvalue of the trap-center coupling
    matrix. Above g_c the normal state is dynamically unstable toward
    transverse ordering along the corresponding eigenvector.
    """
    lam_max = float(np.linalg.eigvalsh(j_matrix)[-1])
    if lam_max <= 0:
        raise ValueError("coupling matrix has no positive eigenvalue")
    ratio = 1.0 + (cavity.kappa / cavity.delta_c) ** 2
    return params.omega_z * ratio / (2.0 * params.spin * lam_max)


# ---------------------------------------------------------------------------
# Trial assembly


def draw_setup(plan: SitePlan, stimulus_signs: np.ndarray, noise: NoiseModel,
               rng: Optional[np.random.Generator]) -> TrialSetup:
    """Realize one noise draw. Draw order: trap jitter, then stimulus
    amplitudes, phases and the global transverse phase."""
    signs = np.asarray(stimulus_signs, dtype=float)
    n = len(plan)
    if signs.shape != (n,):
        raise ValueError(f"stimulus_signs must have shape ({n},)")
    if noise != NoiseModel.none() and rng is None:
        raise ValueError("rng is required when noise is enabled")

    traps = plan.positions.copy()
    if noise.trap_sigma > 0:
        traps = traps + rng.normal(0.0, noise.trap_sigma, size=(n, 2))

    weights = signs.copy()
    if noise.any_stimulus:
        amps = np.ones(n)
        phases = np.zeros(n)
        if noise.amp_sigma > 0:
            amps = rng.normal(1.0, noise.amp_sigma, size=n)
        if noise.phase_sigma > 0:
            phases = rng.normal(0.0, noise.phase_sigma, size=n)
        phi_trans = rng.uniform(0.0, TWO_PI) if noise.transverse_phase else 0.0
        weights = signs * amps * np.cos(phi_trans + phases)

    return TrialSetup(beams=plan.positions.copy(), weights=weights,
                      traps=traps)


def initial_state(setup: TrialSetup, seed_signs: np.ndarray,
                  params: SimParams) -> NetworkState:
    """Normal state with a small transverse symmetry-breaking seed.

    Sx_i = seed_signs_i * seed_scale * S, Sy = 0, Sz = -sqrt(S^2 - Sx^2),
    so the spin length is exactly S. Positions start at the trap centers.
    """
    s = params.spin
    sx = np.asarray(seed_signs, dtype=float) * params.seed_scale * s
    if np.any(np.abs(sx) >= s):
        raise ValueError("seed perturbation exceeds the spin length")
    sz = -np.sqrt(s * s - sx * sx)
    return NetworkState(sx=sx, sy=np.zeros(setup.n), sz=sz,
                        pos=setup.traps.copy(), trap=setup.traps.copy())


# ---------------------------------------------------------------------------
# Reference (numpy) physics: energies and derivatives


def _stimulus_field(points: np.ndarray, setup: TrialSetup,
                    cavity: CavityParams) -> np.ndarray:
    """Unit-amplitude stimulus profile sum_m w_m J(r, b_m) at points."""
    jrb = coupling(points[:, None, :], setup.beams[None, :, :], cavity)
    return jrb @ setup.weights


def total_energy(state: NetworkState, t: float, setup: TrialSetup,
                 params: SimParams, cavity: CavityParams,
                 g_c: Optional[float] = None) -> EnergyBreakdown:
    """Per-term energy breakdown in omega_z*S units at time t."""
    if g_c is None:
        jtrap = coupling(setup.beams[:, None, :], setup.beams[None, :, :],
                         cavity)
        g_c = critical_coupling(jtrap, params, cavity)
    g = float(pump_ratio(t, params)) * g_c
    a = float(stimulus_envelope(t, params))

    J = coupling(state.pos[:, None, :], state.pos[None, :, :], cavity)
    e_trans = params.omega_z * state.sz.sum()
    e_ising = -g * state.sx @ J @ state.sx
    e_stim = -a * _stimulus_field(state.pos, setup, cavity) @ state.sx
    dev2 = ((state.pos - state.trap) ** 2).sum()
    e_trap = 0.5 * params.e_trap * dev2 / params.w_t ** 2

    scale = params.omega_z * params.spin
    return EnergyBreakdown(transverse=e_trans / scale, ising=e_ising / scale,
                           stimulus=e_stim / scale, trap=e_trap / scale)


def eom_rhs(state: NetworkState, t: float, setup: TrialSetup,
            params: SimParams, cavity: CavityParams,
            g_c: Optional[float] = None):
    """Reference derivative (dsx, dsy, dsz, dpos) of the trial EOM.

    Plain numpy implementation used for testing and cross-validation; the
    integrator runs a compiled replica of the same expressions.
    """
    if g_c is None:
        jtrap = coupling(setup.beams[:, None, :], setup.beams[None, :, :],
                         cavity)
        g_c = critical_coupling(jtrap, params, cavity)
    g = float(pump_ratio(t, params)) * g_c
    a = float(stimulus_envelope(t, params))

    pos = state.pos
    J = coupling(pos[:, None, :], pos[None, :, :], cavity)
    f = a * _stimulus_field(pos, setup, cavity)
    h = f + 2.0 * g * (J @ state.sx)

    dsx = -params.omega_z * state.sy
    dsy = params.omega_z * state.sx + h * state.sz
    dsz = -h * state.sy

    if params.elastic:
        dj_r, _ = grad_coupling(pos[:, None, :], pos[None, :, :], cavity)
        ising_pull = 2.0 * g * state.sx[:, None] * np.einsum(
            "ikc,k->ic", dj_r, state.sx)
        djb, _ = grad_coupling(pos[:, None, :], setup.beams[None, :, :],
                               cavity)
        stim_pull = a * state.sx[:, None] * np.einsum(
            "ibc,b->ic", djb, setup.weights)
        trap_pull = -(params.e_trap / params.w_t ** 2) * (pos - state.trap)
        dpos = (ising_pull + stim_pull + trap_pull) / params.c_d
    else:
        dpos = np.zeros_like(pos)
    return dsx, dsy, dsz, dpos


# ---------------------------------------------------------------------------
# Compiled integration


def _pars_vector(params: SimParams, g_c: float) -> np.ndarray:
    pars = np.empty(_simcore.N_PARS)
    pars[_simcore.PAR_OMEGA_Z] = params.omega_z
    pars[_simcore.PAR_G_C] = g_c
    pars[_simcore.PAR_PUMP_FINAL] = params.pump_final
    pars[_simcore.PAR_PUMP_TAU] = params.pump_tau
    pars[_simcore.PAR_T_END] = params.t_end
    pars[_simcore.PAR_STIM_PEAK] = params.stim_amp * params.omega_z
    pars[_simcore.PAR_T_UP] = params.t_stim_up
    pars[_simcore.PAR_T_HOLD] = params.t_stim_hold
    pars[_simcore.PAR_T_OFF] = params.t_stim_off
    pars[_simcore.PAR_INV_CD] = 1.0 / params.c_d
    pars[_simcore.PAR_TRAP_K] = params.e_trap / params.w_t ** 2
    pars[_simcore.PAR_ELASTIC] = 1.0 if params.elastic else 0.0
    pars[_simcore.PAR_LAZY] = 1.0 if params.lazy else 0.0
    pars[_simcore.PAR_STALE] = params.stale_tol
    return pars


def compiled_rhs(state: NetworkState, t: float, setup: TrialSetup,
                 params: SimParams, cavity: CavityParams, g_c: float):
    """Single derivative evaluation through the compiled kernels.

    Exposed for equivalence testing against eom_rhs.
    """
    n = setup.n
    y = np.concatenate([state.sx, state.sy, state.sz,
                        state.pos[:, 0], state.pos[:, 1]])
    dy = np.empty_like(y)
    pars = _pars_vector(params, g_c)
    amp, c_sum, c_dot, wgt = _simcore.kernel_constants(
        cavity.gamma, cavity.w0, cavity.eta, cavity.detuning_weight)
    kw = dict(J=np.empty((n, n)), dJx=np.empty((n, n)), dJy=np.empty((n, n)),
              F=np.empty(n), dFx=np.empty(n), dFy=np.empty(n),
              pos_ref=np.full((n, 2), np.nan))
    _simcore._rhs(t, y, dy, pars, amp, c_sum, c_dot, wgt,
                  setup.beams[:, 0].copy(), setup.beams[:, 1].copy(),
                  setup.weights, setup.traps[:, 0].copy(),
                  setup.traps[:, 1].copy(), **kw)
    dpos = np.stack([dy[3 * n:4 * n], dy[4 * n:5 * n]], axis=1)
    return dy[0:n], dy[n:2 * n], dy[2 * n:3 * n], dpos


def simulate(state: NetworkState, setup: TrialSetup, params: SimParams,
             cavity: CavityParams, g_c: float, record: bool = False):
    """Integrate the trial EOM from t=0 to t_end.

    Returns (final NetworkState, Trajectory or None, accepted steps).
    Raises IntegrationError on step underflow or step-budget exhaustion,
    reporting the failure time.
    """
    n = setup.n
    y = np.concatenate([state.sx, state.sy, state.sz,
                        state.pos[:, 0], state.pos[:, 1]])
    pars = _pars_vector(params, g_c)
    amp, c_sum, c_dot, wgt = _simcore.kernel_constants(
        cavity.gamma, cavity.w0, cavity.eta, cavity.detuning_weight)
    breakpoints = np.array([params.t_stim_up, params.t_stim_hold,
                            params.t_stim_off])
    cap = params.trace_cap if record else 0
    trace_t = np.empty(cap)
    trace_y = np.empty((cap, 5 * n))

    status, naccept, ntr = _simcore.integrate(
        y, 0.0, params.t_end, pars, amp, c_sum, c_dot, wgt,
        setup.beams[:, 0].copy(), setup.beams[:, 1].copy(), setup.weights,
        setup.traps[:, 0].copy(), setup.traps[:, 1].copy(),
        breakpoints, params.rtol, params.atol, params.max_steps,
        trace_t, trace_y)
    if status == _simcore.STATUS_STEP_UNDERFLOW:
        t_fail = trace_t[ntr - 1] if ntr else float("nan")
        raise IntegrationError(
            f"step size underflow near t = {t_fail:.6f} ms "
            f"(rtol={params.rtol:g}, atol={params.atol:g})")
    if status == _simcore.STATUS_MAX_STEPS:
        raise IntegrationError(
            f"step budget {params.max_steps} exhausted before t_end")

    final = NetworkState(
        sx=y[0:n].copy(), sy=y[n:2 * n].copy(), sz=y[2 * n:3 * n].copy(),
        pos=np.stack([y[3 * n:4 * n], y[4 * n:5 * n]], axis=1),
        trap=setup.traps.copy())

    traj = None
    if record and ntr > 0:
        tt = trace_t[:ntr].copy()
        yy = trace_y[:ntr]
        pos = np.stack([yy[:, 3 * n:4 * n], yy[:, 4 * n:5 * n]], axis=2)
        traj = Trajectory(t=tt, sx=yy[:, 0:n].copy(), sy=yy[:, n:2 * n].copy(),
                          sz=yy[:, 2 * n:3 * n].copy(), pos=pos,
                          energy=_trace_energies(tt, yy, n, setup, params,
                                                 cavity, g_c))
    return final, traj, naccept


def _trace_energies(tt: np.ndarray, yy: np.ndarray, n: int, setup: TrialSetup,
                    params: SimParams, cavity: CavityParams,
                    g_c: float) -> np.ndarray:
    """Per-term energies (omega_z*S units) along a recorded trajectory.

    Processed in row chunks to bound the (chunk, n, n) kernel temporaries.
    """
    m = tt.shape[0]
    out = np.empty((m, 4))
    scale = params.omega_z * params.spin
    for start in range(0, m, 1024):
        sl = slice(start, min(start + 1024, m))
        sx = yy[sl, 0:n]
        sz = yy[sl, 2 * n:3 * n]
        pos = np.stack([yy[sl, 3 * n:4 * n], yy[sl, 4 * n:5 * n]], axis=2)
        g = pump_ratio(tt[sl], params) * g_c
        a = stimulus_envelope(tt[sl], params)

        J = coupling(pos[:, :, None, :], pos[:, None, :, :], cavity)
        e_ising = -g * np.einsum("mij,mi,mj->m", J, sx, sx)
        jrb = coupling(pos[:, :, None, :], setup.beams[None, None, :, :],
                       cavity)
        f_unit = np.einsum("mib,b->mi", jrb, setup.weights)
        e_stim = -a * np.einsum("mi,mi->m", f_unit, sx)
        e_trans = params.omega_z * sz.sum(axis=1)
        dev2 = ((pos - setup.traps[None, :, :]) ** 2).sum(axis=(1, 2))
        e_trap = 0.5 * params.e_trap * dev2 / params.w_t ** 2
        out[sl, 0] = e_trans
        out[sl, 1] = e_ising
        out[sl, 2] = e_stim
        out[sl, 3] = e_trap
    return out / scale


# ---------------------------------------------------------------------------
# Public trial drivers


def run_recall_trial(plan: SitePlan, stimulus_signs: np.ndarray,
                     params: Optional[SimParams] = None,
                     noise: Optional[NoiseModel] = None,
                     rng: Optional[np.random.Generator] = None,
                     cavity: Optional[CavityParams] = None,
                     seed_signs: Optional[np.ndarray] = None,
                     record: bool = True) -> TrialResult:
    """Run one recall trial and return the measured sign configuration.

    Draws the noise realization (trap jitter, then stimulus amplitude and
    phase factors), then the transverse seed signs unless seed_signs is
    given, integrates from the seeded normal state to t_end, and reads out
    sign(Sx_i). Per-term energy traces ride along when record is True.
    """
    params = params or SimParams()
    noise = noise or NoiseModel.none()
    cavity = cavity or CavityParams()

    setup = draw_setup(plan, stimulus_signs, noise, rng)
    if seed_signs is None:
        if rng is None:
            raise ValueError("rng is required to draw seed signs")
        seed_signs = rng.choice(np.array([-1.0, 1.0]), size=len(plan))
    else:
        seed_signs = np.asarray(seed_signs, dtype=float)
        if seed_signs.shape != (len(plan),) or np.any(np.abs(seed_signs) != 1.0):
            raise ValueError("seed_signs must be +-1 per site")

    jtrap = coupling(plan.positions[:, None, :], plan.positions[None, :, :],
                     cavity)
    g_c = critical_coupling(jtrap, params, cavity)

    state0 = initial_state(setup, seed_signs, params)
    final, traj, naccept = simulate(state0, setup, params, cavity, g_c,
                                    record=record)
    signs = np.where(final.sx >= 0, 1, -1).astype(np.int8)
    energy = total_energy(final, params.t_end, setup, params, cavity, g_c=g_c)
    return TrialResult(signs=signs, state=final, setup=setup,
                       seed_signs=seed_signs.astype(np.int8), energy=energy,
                       n_steps=naccept, trajectory=traj)


def mean_trap_deviation(plan: SitePlan, params: SimParams,
                        n_trials: int = 20,
                        rng: Optional[np.random.Generator] = None,
                        cavity: Optional[CavityParams] = None,
                        stimulus_sets: Optional[np.ndarray] = None,
                        seed_sets: Optional[np.ndarray] = None) -> float:
    """Mean final |r_i - r_i^0| (um) over sites and noise-free trials.

    Stimulus patterns are random unless explicit stimulus/seed sign sets
    are supplied (used by the calibration loop so every trap-energy probe
    sees identical trials).
    """
    cavity = cavity or CavityParams()
    if stimulus_sets is None:
        if rng is None:
            raise ValueError("rng required without explicit stimulus_sets")
        stimulus_sets = rng.choice(np.array([-1.0, 1.0]),
                                   size=(n_trials, len(plan)))
        seed_sets = rng.choice(np.array([-1.0, 1.0]), size=(n_trials, len(plan)))
    devs = []
    for stim, seed in zip(stimulus_sets, seed_sets):
        res = run_recall_trial(plan, stim, params=params,
                               noise=NoiseModel.none(), cavity=cavity,
                               seed_signs=seed, record=False)
        devs.append(res.deviations.mean())
    return float(np.mean(devs))


def calibrate_trap_energy(plan: SitePlan, params: Optional[SimParams] = None,
                          target: float = DEFAULT_DEVIATION_TARGET,
                          n_trials: int = 20,
                          rng: Optional[np.random.Generator] = None,
                          cavity: Optional[CavityParams] = None,
                          rel_tol: float = 0.02,
                          bracket: tuple = (25.0, 6400.0)) -> float:
    """Bisect E_trap so the mean trial deviation matches target (um).

    Deviation decreases monotonically with trap stiffness; the search uses
    common random numbers (one fixed set of n_trials noise-free trials,
    random stimuli) and bisects in log E_trap. Raises RuntimeError when
    even the bracket endpoints cannot straddle the target.
    """
    if target <= 0:
        raise ValueError("target deviation must be positive")
    params = params or SimParams()
    cavity = cavity or CavityParams()
    rng = rng or np.random.default_rng(0)
    stim = rng.choice(np.array([-1.0, 1.0]), size=(n_trials, len(plan)))
    seeds = rng.choice(np.array([-1.0, 1.0]), size=(n_trials, len(plan)))

    def dev_at(e_trap: float) -> float:
        p = replace(params, e_trap=e_trap)
        return mean_trap_deviation(plan, p, cavity=cavity,
                                   stimulus_sets=stim, seed_sets=seeds)

    lo, hi = bracket
    d_lo = dev_at(lo)
    if d_lo < target:
        raise RuntimeError(
            f"bracket failure: softest trap E_trap={lo} reaches only "
            f"{d_lo:.3f} um < target {target} um")
    d_hi = dev_at(hi)
    grew = 0
    while d_hi > target:
        hi *= 4.0
        grew += 1
        if grew > 6:
            raise RuntimeError("bracket failure: deviation does not drop "
                               f"below {target} um by E_trap={hi}")
        d_hi = dev_at(hi)

    for _ in range(60):
        mid = math.sqrt(lo * hi)
        d_mid = dev_at(mid)
        if abs(d_mid - target) <= rel_tol * target:
            return mid
        if d_mid > target:
            lo = mid
        else:
            hi = mid
    raise RuntimeError("bisection failed to converge")


def network_capacity_sim(plan: SitePlan, params: Optional[SimParams] = None,
                         noise: Optional[NoiseModel] = None,
                         rng: Optional[np.random.Generator] = None,
                         cavity: Optional[CavityParams] = None,
                         n_samples: int = 400, **pipeline_kwargs):
    """Memory capacity of the simulated network (bootstrap mean, err).

    Runs the discovery/screening/basin pipeline with run_recall_trial as
    the oracle. Extra keyword arguments pass through to
    pipeline.capacity.
    """
    from .pipeline import SemiclassicalOracle, capacity

    params = params or SimParams()
    noise = noise or NoiseModel.none()
    cavity = cavity or CavityParams()
    rng = rng or np.random.default_rng(0)
    oracle = SemiclassicalOracle(plan=plan, params=params, noise=noise,
                                 cavity=cavity, rng=rng)
    return capacity(oracle, rng=rng, n_samples=n_samples, **pipeline_kwargs)
