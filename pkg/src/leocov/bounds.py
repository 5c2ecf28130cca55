"""Lower bounds on the conditional SINR coverage probability.

Two bounds are provided for a user at the north pole whose serving satellite
sits at spherical distance ``r0``:

* :func:`coverage_lb_nakagami` - Chernoff bound on the aggregate interference,
  integrated over the serving link's Nakagami-m fading.
* :func:`coverage_lb_rayleigh` - closed form for Rayleigh fading (``m = 1``).

In both, the interference sum over the visible cap is replaced by its
worst case under ``(sigma, rho, nu)`` shot-noise regulation,
``A[w] = sigma*w(0) + rho*int_0^rmax w(r) dr + 2*nu*int_0^rmax w(r) r dr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaincc, gammaln

from .curves import CoverageCurve, db_to_linear
from .exceptions import DomainError, InvalidArgumentError
from .geometry import GeometryConfig, max_visible_spherical_radius, path_loss
from .point_process import RegulationParams

SPEED_OF_LIGHT = 299792458.0

_SCAN_POINTS = 64
_GOLDEN_REL_WIDTH = 1e-10
_TAIL_MASS = 1e-9
_GRADED_LEVELS = 40
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ChannelParams:
    """Fading shape ``m``, path-loss exponent, normalised interferer gain and noise."""

    m: int = 2
    alpha: float = 2.0
    gbar: float = 0.1
    wbar: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InvalidArgumentError(f"m must be a positive integer, got {self.m}")
        if not self.alpha >= 2:
            raise InvalidArgumentError(f"alpha must be >= 2, got {self.alpha}")
        if not 0 < self.gbar <= 1:
            raise InvalidArgumentError(f"gbar must lie in (0, 1], got {self.gbar}")
        if not self.wbar >= 0:
            raise InvalidArgumentError(f"wbar must be >= 0, got {self.wbar}")


@dataclass(frozen=True)
class LinkBudget:
    tx_power_w: float
    main_lobe_gain: float
    side_lobe_gain: float
    rx_gain: float
    carrier_hz: float
    noise_w: float
    light_speed_m_s: float = SPEED_OF_LIGHT

    def __post_init__(self):
        positive = ("tx_power_w", "main_lobe_gain", "side_lobe_gain", "rx_gain", "carrier_hz")
        for name in positive:
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.noise_w >= 0:
            raise InvalidArgumentError(f"noise_w must be >= 0, got {self.noise_w}")
        if self.side_lobe_gain > self.main_lobe_gain:
            raise InvalidArgumentError("side_lobe_gain must not exceed main_lobe_gain")


def normalize_link_budget(budget: LinkBudget) -> tuple[float, float]:
    """Return ``(gbar, wbar)``: side/main lobe gain ratio and noise relative to the serving link."""
    g0 = (
        budget.main_lobe_gain
        * budget.rx_gain
        * budget.light_speed_m_s**2
        / (4.0 * math.pi * budget.carrier_hz) ** 2
    )
    return budget.side_lobe_gain / budget.main_lobe_gain, budget.noise_w / (budget.tx_power_w * g0)


@lru_cache(maxsize=None)
def _gauss_legendre(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def a_ell_tilde(
    weight: Callable[[np.ndarray], np.ndarray], params: RegulationParams, r_max: float, nodes: int = 64
):
    """Worst-case shot noise ``A[weight]`` over a cap of radius ``r_max``.

    ``weight`` receives a 1-D array of radii and may return an array whose last
    axis runs over them; leading axes are carried through, so one call can
    evaluate a whole family of weights.
    """
    if nodes < 16:
        raise InvalidArgumentError(f"nodes must be >= 16, got {nodes}")
    if params.sigma < 0 or params.nu < 0:
        raise InvalidArgumentError(f"invalid regulation parameters {params}")
    if r_max < 0:
        raise InvalidArgumentError(f"r_max must be >= 0, got {r_max}")
    at_zero = np.asarray(weight(np.zeros(1)), dtype=float)[..., 0]
    total = params.sigma * at_zero
    if r_max == 0 or (params.rho == 0 and params.nu == 0):
        return total if total.ndim else float(total)
    x, w = _gauss_legendre(nodes)
    half = 0.5 * r_max
    r = half * (x + 1.0)
    vals = np.asarray(weight(r), dtype=float)
    total = total + params.rho * half * (vals @ w) + 2.0 * params.nu * half * ((vals * r) @ w)
    return total if total.ndim else float(total)


def s_star(ch: ChannelParams, cfg: GeometryConfig) -> float:
    """Upper end of the Chernoff parameter range, ``m / (gbar * l(0))``."""
    return ch.m / (ch.gbar * path_loss(0.0, ch.alpha, cfg))


def ell_tilde_nakagami(r, s, ch: ChannelParams, cfg: GeometryConfig):
    """``-m * log(1 - s*gbar*l(r)/m)``, the log-Laplace transform of one Nakagami interferer."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s >= s_star(ch, cfg)):
        raise DomainError(f"s must lie in [0, s*) = [0, {s_star(ch, cfg)}), got {s}")
    out = -ch.m * np.log1p(-s * ch.gbar * np.asarray(path_loss(r, ch.alpha, cfg)) / ch.m)
    return float(out) if np.ndim(out) == 0 else out


def _exponent_offset(s, r0, ch, cfg, params, r_max, nodes):
    """``A[l~(., s)] - l~(r0, s)``, vectorised over ``s``."""
    s = np.asarray(s, dtype=float)
    k = ch.gbar / ch.m

    def weight(r):
        loss = np.asarray(path_loss(r, ch.alpha, cfg))
        return -ch.m * np.log1p(-k * s[..., None] * loss)

    serving = -ch.m * np.log1p(-k * s * path_loss(r0, ch.alpha, cfg))
    return a_ell_tilde(weight, params, r_max, nodes) - serving


def _check_common(theta, r0, cfg):
    if not theta > 0:
        raise InvalidArgumentError(f"theta must be positive, got {theta}")
    if not r0 >= 0:
        raise InvalidArgumentError(f"r0 must be >= 0, got {r0}")


def chernoff_exponent(s, x, theta, r0, ch: ChannelParams, cfg: GeometryConfig, params: RegulationParams, nodes=64):
    """Exponent ``A - l~(r0) - s*(x*l(r0)/theta - wbar)`` of the Chernoff bound."""
    _check_common(theta, r0, cfg)
    r_max = max_visible_spherical_radius(cfg)
    if r0 > r_max:
        raise InvalidArgumentError(f"r0={r0} lies outside the visible cap (r_max={r_max})")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s >= s_star(ch, cfg)):
        raise DomainError(f"s must lie in [0, s*), got {s}")
    tilt = x * path_loss(r0, ch.alpha, cfg) / theta - ch.wbar
    out = _exponent_offset(s, r0, ch, cfg, params, r_max, nodes) - s * tilt
    return float(out) if np.ndim(out) == 0 else out


def _minimize_tilted(offset, tilts, s_hi, width):
    """Minimise ``offset(s) - tilt*s`` over ``[0, s_hi]`` for every entry of ``tilts`` at once.

    A coarse uniform scan selects a bracket around the best grid point, then a
    golden-section search narrows it. No convexity is assumed; the scan value
    at ``s = 0`` is always a candidate.
    """
    tilts = np.asarray(tilts, dtype=float)
    grid = np.linspace(0.0, s_hi, _SCAN_POINTS)
    base = np.asarray(offset(grid))
    vals = base[None, :] - tilts[:, None] * grid[None, :]
    k = np.argmin(vals, axis=1)
    rows = np.arange(len(tilts))
    best_val = vals[rows, k].copy()
    best_s = grid[k].copy()

    def f(s):
        return np.asarray(offset(s)) - tilts * s

    a = grid[np.maximum(k - 1, 0)]
    b = grid[np.minimum(k + 1, _SCAN_POINTS - 1)]
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while np.max(b - a) > width:
        left = fc <= fd
        # left: keep [a, d]; right: keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INV_GOLDEN * (b - a)
        new_d = a + _INV_GOLDEN * (b - a)
        probe = np.where(left, new_c, new_d)
        fp = f(probe)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    for cand_s, cand_v in ((c, fc), (d, fd)):
        better = cand_v < best_val
        best_val = np.where(better, cand_v, best_val)
        best_s = np.where(better, cand_s, best_s)
    return best_s, np.minimum(best_val, 0.0)


def minimize_exponent(x, theta, r0, ch: ChannelParams, cfg: GeometryConfig, params: RegulationParams, nodes=64):
    """Infimum over ``s`` in ``[0, s*)`` of :func:`chernoff_exponent`; returns ``(s_opt, value)`` with value <= 0."""
    _check_common(theta, r0, cfg)
    r_max = max_visible_spherical_radius(cfg)
    if r0 > r_max:
        raise InvalidArgumentError(f"r0={r0} lies outside the visible cap (r_max={r_max})")
    sst = s_star(ch, cfg)
    tilt = x * path_loss(r0, ch.alpha, cfg) / theta - ch.wbar

    def offset(s):
        return _exponent_offset(s, r0, ch, cfg, params, r_max, nodes)

    s_opt, val = _minimize_tilted(offset, np.array([tilt]), sst * (1 - 1e-9), _GOLDEN_REL_WIDTH * sst)
    return float(s_opt[0]), float(val[0])


def _fading_pdf(x, m):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        logf = m * math.log(m) - gammaln(m) + (m - 1) * np.log(x) - m * x
    return np.where(x > 0, np.exp(logf), 1.0 if m == 1 else 0.0)


def fading_tail_cutoff(m: int, mass: float = _TAIL_MASS) -> float:
    """Smallest power of two ``x`` with ``P(h > x) < mass`` for unit-mean Gamma(m) fading."""
    x = 1.0
    while gammaincc(m, m * x) >= mass:
        x *= 2.0
    return x


def _composite_nodes(edges, panel_nodes):
    x, w = _gauss_legendre(panel_nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _require_regulated(params):
    if params.sigma < 1:
        raise InvalidArgumentError(
            f"sigma must be >= 1 so the serving satellite is counted in the cap, got {params.sigma}"
        )


def coverage_lb_nakagami(
    theta: float,
    r0: float,
    ch: ChannelParams,
    cfg: GeometryConfig,
    params: RegulationParams,
    nodes: int = 64,
    panels: int = 128,
    panel_nodes: int = 8,
) -> float:
    """Chernoff-type lower bound on the coverage probability under Nakagami-m fading.

    Integrates ``f_h(x) * (1 - exp(inf_s exponent(s, x)))^+`` over serving-link
    power ``x`` from ``wbar*theta/l(r0)`` to the point where the Gamma tail
    mass drops below 1e-9. The range is split where the exponent's slope at
    ``s = 0`` changes sign, so that the composite Gauss-Legendre panels never
    straddle the kink of the positive part.
    """
    _check_common(theta, r0, cfg)
    _require_regulated(params)
    r_max = max_visible_spherical_radius(cfg)
    if r0 > r_max:
        return 0.0
    loss0 = path_loss(r0, ch.alpha, cfg)
    lo = ch.wbar * theta / loss0
    hi = fading_tail_cutoff(ch.m)
    if lo >= hi:
        return 0.0
    sst = s_star(ch, cfg)

    def offset(s):
        return _exponent_offset(s, r0, ch, cfg, params, r_max, nodes)

    # d/ds of the exponent at s=0 is gbar*(A[l] - l(r0)) - tilt
    slope0 = ch.gbar * (a_ell_tilde(lambda r: path_loss(r, ch.alpha, cfg), params, r_max, nodes) - loss0)
    kink = theta * (slope0 + ch.wbar) / loss0
    kink = min(max(kink, lo), hi)
    # past the kink the integrand climbs on a length scale proportional to theta,
    # so uniform panels are refined by panels shrinking geometrically onto the kink
    edges = np.linspace(kink, hi, panels + 1)
    edges = np.union1d(edges, kink + (hi - kink) * 2.0 ** -np.arange(1, _GRADED_LEVELS + 1))
    if kink > lo:
        edges = np.union1d(np.linspace(lo, kink, panels + 1), edges)
    x, w = _composite_nodes(edges, panel_nodes)
    tilts = x * loss0 / theta - ch.wbar
    _, inf_val = _minimize_tilted(offset, tilts, sst * (1 - 1e-9), _GOLDEN_REL_WIDTH * sst)
    integrand = _fading_pdf(x, ch.m) * np.maximum(0.0, -np.expm1(inf_val))
    return float(min(1.0, max(0.0, integrand @ w)))


def coverage_lb_rayleigh(
    theta: float, r0: float, ch: ChannelParams, cfg: GeometryConfig, params: RegulationParams, nodes: int = 64
) -> float:
    """Closed-form lower bound on the coverage probability under Rayleigh fading."""
    _check_common(theta, r0, cfg)
    if ch.m != 1:
        raise InvalidArgumentError(f"the Rayleigh bound needs m = 1, got m = {ch.m}")
    _require_regulated(params)
    r_max = max_visible_spherical_radius(cfg)
    if r0 > r_max:
        return 0.0
    loss0 = path_loss(r0, ch.alpha, cfg)

    def weight(r):
        return np.log1p(theta * ch.gbar * np.asarray(path_loss(r, ch.alpha, cfg)) / loss0)

    serving = math.log1p(theta * ch.gbar)
    a = a_ell_tilde(weight, params, r_max, nodes)
    return float(min(1.0, max(0.0, math.exp(serving - theta * ch.wbar / loss0 - a))))


BOUNDS = {"rayleigh": coverage_lb_rayleigh, "nakagami": coverage_lb_nakagami}


def coverage_curve(thetas_db, evaluator, r0, ch, cfg, params, **kwargs) -> CoverageCurve:
    """Evaluate a bound on every grid threshold (dB, power ratio).

    ``evaluator`` is ``"rayleigh"``, ``"nakagami"`` or a callable with the
    signature of :func:`coverage_lb_rayleigh`.
    """
    thetas_db = np.asarray(thetas_db, dtype=float).reshape(-1)
    if np.any(np.diff(thetas_db) <= 0):
        raise InvalidArgumentError("theta grid must be strictly increasing")
    fn = BOUNDS[evaluator] if isinstance(evaluator, str) else evaluator
    probs = [fn(float(t), r0, ch, cfg, params, **kwargs) for t in db_to_linear(thetas_db)]
    return CoverageCurve(thetas_db, np.array(probs))
