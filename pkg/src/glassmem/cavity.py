"""Photon-mediated couplings in a near-degenerate confocal cavity.

The interaction between ensembles trapped at midplane positions r and r'
is a sum over one degenerate mode family (index eta) of Hermite-Gauss
modes, each weighted by its detuned response. Smearing each pointlike
ensemble into a Gaussian of rms radius sigma_A resums the family into a
modified Mehler kernel

    G'(r, r', t) = (1+g)^2 / (4 (1 - g^2 t^2))
                   * exp[ -(1+g) / (2 (1 - g^2 t^2))
                          * ( (1 + g t^2)(r^2 + r'^2)
                              - 2 (1+g) t (r . r') ) / w0^2 ]

with g = (1 - 2 sigma_A^2/w0^2) / (1 + 2 sigma_A^2/w0^2), evaluated at
the seven roots of unity t_k = exp(2 pi i k / 7):

    J(r, r') = D^2/(D^2 + kappa^2) * [ G'(r, r', 1) / 7
               + (2/7) sum_{k=1..3} Re( e^{-i eta 2 pi k / 7} G'(r, r', t_k) ) ]

All lengths are in micrometers; the coupling is dimensionless (the pump
energy scale multiplies it elsewhere). The delta-function part of the
bare mode sum only ever appears through its smoothed closed form above.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

__all__ = [
    "CavityParams",
    "SitePlan",
    "j1_plan",
    "mehler_kernel",
    "coupling",
    "coupling_matrix",
    "grad_coupling",
    "stimulus_field",
    "stimulus_profile",
    "grad_stimulus",
    "coupling_mode_sum",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CavityParams:
    """Cavity and ensemble geometry.

    w0, sigma_a in micrometers; delta_c (pump-cavity detuning) and kappa
    (field decay rate) in rad/ms. Only their ratio enters the coupling.
    eta selects which of the seven interleaved mode families mediates
    the interaction.
    """

    w0: float = 34.8
    sigma_a: float = 5.2
    eta: int = 0
    delta_c: float = -TWO_PI * 2.0e4   # -2 pi x 20 MHz
    kappa: float = TWO_PI * 140.0      # 2 pi x 140 kHz

    def __post_init__(self):
        if self.w0 <= 0 or self.sigma_a <= 0:
            raise ValueError("w0 and sigma_a must be positive")
        if not 0 <= int(self.eta) <= 6:
            raise ValueError("eta must be an integer in 0..6")
        if self.delta_c == 0:
            raise ValueError("delta_c must be nonzero")

    @property
    def gamma(self) -> float:
        q = 2.0 * self.sigma_a**2 / self.w0**2
        return (1.0 - q) / (1.0 + q)

    @property
    def detuning_weight(self) -> float:
        """D^2 / (D^2 + kappa^2), the dispersive response prefactor."""
        d2 = self.delta_c**2
        return d2 / (d2 + self.kappa**2)


@dataclass(frozen=True)
class SitePlan:
    """Nominal trap positions, shape (n, 2), micrometers."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def grid(cls, xs, ys) -> "SitePlan":
        """Rectangular grid, row-major over ys with x varying fastest."""
        pts = [(x, y) for y in ys for x in xs]
        return cls(np.array(pts, dtype=float))

    @classmethod
    def from_json(cls, path) -> "SitePlan":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(np.array(data["positions"], dtype=float))

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"positions": self.positions.tolist()}, fh, indent=1)
            fh.write("\n")


def j1_plan() -> SitePlan:
    """The bundled 16-site 4x4 plan used throughout the examples."""
    ref = resources.files("glassmem").joinpath("data/j1.json")
    with resources.as_file(ref) as path:
        return SitePlan.from_json(path)


# ---------------------------------------------------------------------------
# closed-form kernel
# ---------------------------------------------------------------------------

def _as_points(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of 2")
    return r


def mehler_kernel(r, rp, t, params: CavityParams = CavityParams()):
    """Gaussian-smoothed mode-family generating kernel G'(r, r', t).

    r and rp broadcast against each other over leading axes; t may be
    complex (the roots of unity used by `coupling`). Returns complex
    values of the broadcast shape.
    """
    r = _as_points(r)
    rp = _as_points(rp)
    g = params.gamma
    w2 = params.w0**2
    t = complex(t)
    denom = 1.0 - (g * t) ** 2
    amp = (1.0 + g) ** 2 / (4.0 * denom)
    b = (1.0 + g) / (2.0 * denom)
    r2 = (r * r).sum(axis=-1)
    rp2 = (rp * rp).sum(axis=-1)
    dot = (r * rp).sum(axis=-1)
    expo = -b * ((1.0 + g * t * t) * (r2 + rp2) - 2.0 * (1.0 + g) * t * dot) / w2
    return amp * np.exp(expo)


_ROOTS = np.exp(2j * np.pi * np.arange(1, 4) / 7.0)


def coupling(r, rp, params: CavityParams = CavityParams()):
    """Dimensionless ensemble-ensemble coupling J(r, r')."""
    r = _as_points(r)
    rp = _as_points(rp)
    total = np.real(mehler_kernel(r, rp, 1.0, params)) / 7.0
    for k, t in enumerate(_ROOTS, start=1):
        phase = np.exp(-2j * np.pi * params.eta * k / 7.0)
        total = total + (2.0 / 7.0) * np.real(phase * mehler_kernel(r, rp, t, params))
    return params.detuning_weight * total


def coupling_matrix(plan, params: CavityParams = CavityParams()) -> np.ndarray:
    """Symmetric J matrix over a SitePlan or an (n, 2) position array.

    The diagonal J(r_i, r_i) is physical (self-interaction through the
    cavity) and is kept.
    """
    pos = plan.positions if isinstance(plan, SitePlan) else _as_points(plan)
    J = coupling(pos[:, None, :], pos[None, :, :], params)
    return 0.5 * (J + J.T)  # symmetric up to float noise; make it exact


def grad_coupling(r, rp, params: CavityParams = CavityParams()):
    """Analytic gradients (dJ/dr, dJ/dr') of the closed-form coupling.

    Each returned array has the broadcast shape + (2,). The kernel is a
    Gaussian in (r, r'), so each t-term differentiates to G' times a
    linear form in the coordinates.
    """
    r = _as_points(r)
    rp = _as_points(rp)
    g = params.gamma
    w2 = params.w0**2

    def term_grads(t, weight):
        t = complex(t)
        denom = 1.0 - (g * t) ** 2
        b = (1.0 + g) / (2.0 * denom)
        G = mehler_kernel(r, rp, t, params)
        cr = -b * 2.0 * (1.0 + g * t * t) / w2
        cx = b * 2.0 * (1.0 + g) * t / w2
        dr = G[..., None] * (cr * r + cx * rp)
        drp = G[..., None] * (cr * rp + cx * r)
        return np.real(weight * dr), np.real(weight * drp)

    dr, drp = term_grads(1.0, 1.0 / 7.0)
    for k, t in enumerate(_ROOTS, start=1):
        phase = (2.0 / 7.0) * np.exp(-2j * np.pi * params.eta * k / 7.0)
        a, b2 = term_grads(t, phase)
        dr = dr + a
        drp = drp + b2
    w = params.detuning_weight
    return w * dr, w * drp


# ---------------------------------------------------------------------------
# stimulus fields
# ---------------------------------------------------------------------------

def stimulus_profile(points, plan, weights, params: CavityParams = CavityParams()):
    """f(r) = sum_m weights_m J(r, b_m) for beam centers b_m from the plan."""
    pos = plan.positions if isinstance(plan, SitePlan) else _as_points(plan)
    pts = _as_points(points)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (pos.shape[0],):
        raise ValueError("one weight per beam required")
    Jrb = coupling(pts[..., None, :], pos, params)
    return Jrb @ weights


def stimulus_field(points, plan, signs, amp: float, phase: float = 0.0,
                   params: CavityParams = CavityParams()):
    """Stimulus landscape amp * cos(phase) * sum_i s_i J(r, r_i^0)."""
    signs = np.asarray(signs, dtype=float)
    return stimulus_profile(points, plan, amp * np.cos(phase) * signs, params)


def grad_stimulus(points, plan, weights, params: CavityParams = CavityParams()):
    """Gradient of stimulus_profile with respect to the evaluation point."""
    pos = plan.positions if isinstance(plan, SitePlan) else _as_points(plan)
    pts = _as_points(points)
    weights = np.asarray(weights, dtype=float)
    dr, _ = grad_coupling(pts[..., None, :], pos, params)
    return np.einsum("...mc,m->...c", dr, weights)


# ---------------------------------------------------------------------------
# independent route: truncated Hermite-Gauss mode sum
# ---------------------------------------------------------------------------

def _smoothed_mode_overlaps(coords: np.ndarray, params: CavityParams,
                            max_order: int, quad_nodes: int) -> np.ndarray:
    """u_l(c) = integral of N(x; c, sigma_A^2) xi_l(x) dx for l = 0..max_order.

    xi_l(x) = H_l(sqrt(2) x / w0) exp(-x^2/w0^2) / sqrt(2^l l!) is the 1-d
    mode profile in the normalization whose Mehler resummation gives G'.
    The Gaussian weight of the integrand is combined exactly with the
    mode envelope, after which Gauss-Hermite quadrature integrates the
    remaining degree-l polynomial exactly.
    """
    coords = np.asarray(coords, dtype=float)
    w0 = params.w0
    sig2 = params.sigma_a**2
    a = 0.5 / sig2 + 1.0 / w0**2
    bcoef = coords / sig2
    mean = bcoef / (2.0 * a)
    lognorm = bcoef**2 / (4.0 * a) - coords**2 / (2.0 * sig2)
    prefac = np.exp(lognorm) / np.sqrt(2.0 * np.pi * sig2) / np.sqrt(a)

    nodes, weights = np.polynomial.hermite.hermgauss(quad_nodes)
    x = mean[..., None] + nodes / np.sqrt(a)      # (..., q)
    z = np.sqrt(2.0) * x / w0
    # normalized Hermite recurrence: hn+1 = z*hn*sqrt(2/(n+1)) - hn-1*sqrt(n/(n+1))
    h_prev = np.ones_like(z)
    vals = [np.sum(weights * h_prev, axis=-1)]
    h_cur = z * np.sqrt(2.0)
    for n in range(1, max_order + 1):
        vals.append(np.sum(weights * h_cur, axis=-1))
        h_next = z * h_cur * np.sqrt(2.0 / (n + 1)) - h_prev * np.sqrt(n / (n + 1.0))
        h_prev, h_cur = h_cur, h_next
    u = np.stack(vals, axis=0)                     # (max_order+1, ...)
    return u * prefac


def coupling_mode_sum(r, rp, params: CavityParams = CavityParams(),
                      max_order: int = 70, quad_nodes: int = 160):
    """J(r, r') summed mode by mode over the eta family with l+m <= max_order.

    This is the independent cross-check of `coupling`: each Hermite-Gauss
    mode is smoothed over the ensemble by Gaussian-weighted quadrature
    and the family sum is truncated instead of resummed. Agreement with
    the closed form is limited only by the truncation.
    """
    r = _as_points(r)
    rp = _as_points(rp)
    shape = np.broadcast_shapes(r.shape, rp.shape)
    r = np.broadcast_to(r, shape)
    rp = np.broadcast_to(rp, shape)
    ux = _smoothed_mode_overlaps(r[..., 0], params, max_order, quad_nodes)
    uy = _smoothed_mode_overlaps(r[..., 1], params, max_order, quad_nodes)
    vx = _smoothed_mode_overlaps(rp[..., 0], params, max_order, quad_nodes)
    vy = _smoothed_mode_overlaps(rp[..., 1], params, max_order, quad_nodes)
    ax = ux * vx                                   # (L+1, ...): per-order x factor
    by = uy * vy
    total = np.zeros(shape[:-1])
    for s in range(params.eta, max_order + 1, 7):
        orders = np.arange(s + 1)
        total = total + np.sum(ax[orders] * by[s - orders], axis=0)
    return params.detuning_weight * total
