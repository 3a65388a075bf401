"""The δ-energy functional and the pressure-term majorant.

With ``w = |v|^{3/2-δ}`` the ledger holds

    sup_term   = max_{t1<=s<=t} ∫ |v(s)|^{3-2δ}
    grad_term  = ∫∫ |∇w|^2
    mixed_term = ∫∫ |∇v|^2 |v|^{1-2δ}

over the whole box. Space integrals are plain cell sums, time integrals use
the piecewise-linear convention of :mod:`nsreg.localq`. ``|v|^s`` at ``v = 0``
is 0, so ``w`` is finite everywhere and the usual stencil applies to it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateNorm, DomainError, WindowOutOfDomain
from .localq import pl_integral, pl_max, slice_window


@dataclass(frozen=True)
class EnergyLedger:
    delta: float
    t1: float
    t: float
    sup_term: float
    grad_term: float
    mixed_term: float
    E_delta: float

    def as_dict(self):
        return asdict(self)


def _check_window(grid, t1, t):
    tol = 1e-9 * max(1.0, grid.t_final - grid.t0)
    if not t1 <= t:
        raise WindowOutOfDomain(f"window [{t1}, {t}] is reversed")
    if t1 < grid.t0 - tol or t > grid.t_final + tol:
        raise WindowOutOfDomain(f"window [{t1}, {t}] leaves [{grid.t0}, {grid.t_final}]")


def _check_delta(delta):
    if not 0 < delta < 0.5:
        raise DomainError(f"delta={delta} must lie in (0, 1/2)")


def _fsum(a):
    return math.fsum(np.ravel(a).tolist())


def _grad_sq_scalar(f, spacing):
    hx, hy, hz = spacing
    gz, gy, gx = np.gradient(f, hz, hy, hx)
    return gx * gx + gy * gy + gz * gz


def energy_slices(v, delta, js):
    """Per-slice ∫|v|^{3-2δ}, ∫|∇w|^2 and ∫|∇v|^2|v|^{1-2δ} at time indices js."""
    g = v.grid
    dv = g.cell_volume
    s = 1.5 - delta
    out = np.zeros((3, len(js)))
    for n, j in enumerate(js):
        m = v.abs_slice(j)
        w = m ** s
        out[0, n] = _fsum(m ** (3 - 2 * delta)) * dv
        out[1, n] = _fsum(_grad_sq_scalar(w, g.spacing[:3])) * dv
        out[2, n] = _fsum(v.grad_sq_slice(j) * m ** (1 - 2 * delta)) * dv
    return out


def energy_functional(v, delta: float, t1: float, t: float) -> EnergyLedger:
    _check_delta(delta)
    g = v.grid
    _check_window(g, t1, t)
    js = slice_window(g, t1, t)
    times = g.times()[js]
    vals = energy_slices(v, delta, js)
    sup_term = pl_max(times, vals[0], t1, t)
    grad_term = pl_integral(times, vals[1], t1, t)
    mixed_term = pl_integral(times, vals[2], t1, t)
    return EnergyLedger(delta, t1, t, sup_term, grad_term, mixed_term, sup_term + grad_term)


@dataclass(frozen=True)
class PressureBound:
    I: float
    majorant: float
    ratio: float
    passed: bool
    pressure_norm: float
    gradient_norm: float
    velocity_norm: float
    exponents: dict

    def as_dict(self):
        return asdict(self)


def _lp(vals, p, dv):
    """Spatial L^p norm of one slice; p may be inf."""
    if math.isinf(p):
        return float(np.max(np.abs(vals)))
    return (_fsum(np.abs(vals) ** p) * dv) ** (1.0 / p)


def _time_norm(times, norms, r, t1, t):
    """L^r over [t1, t] of the piecewise-linear interpolant of norms**r."""
    if math.isinf(r):
        return pl_max(times, norms, t1, t)
    powered = np.asarray(norms) ** r
    return pl_integral(times, powered, t1, t) ** (1.0 / r)


def pressure_term_bound(v, pi, tuple_, t1: float, t: float) -> PressureBound:
    """Compare I = ∫∫|π||∇w||v|^{1/2-δ} with its Hoelder majorant (constant 1).

    The majorant is ‖π‖^θ_{L^r_t L^p_x} ‖∇w‖_{L^2} ‖w‖^κ_{L^{μκ}_t L^{λκ}_x}
    with κ = (5/2 - 2θ - δ)/(3/2 - δ), all over the window [t1, t].
    """
    if tuple_.theta is None or tuple_.lam is None or tuple_.mu is None:
        raise DomainError("tuple needs theta, lambda and mu; run select_theta first")
    if pi.grid != v.grid:
        raise DomainError("velocity and pressure must share a grid")
    delta, theta = tuple_.delta, tuple_.theta
    _check_delta(delta)
    g = v.grid
    _check_window(g, t1, t)
    s = 1.5 - delta
    kappa = (2.5 - 2 * theta - delta) / s
    x_idx = tuple_.lam * kappa
    t_idx = tuple_.mu * kappa
    js = slice_window(g, t1, t)
    times = g.times()[js]
    dv = g.cell_volume
    integrand, p_norm, gw_sq, w_norm = [], [], [], []
    for j in js:
        m = v.abs_slice(j)
        w = m ** s
        gw2 = _grad_sq_scalar(w, g.spacing[:3])
        p = pi.values[j]
        integrand.append(_fsum(np.abs(p) * np.sqrt(gw2) * m ** (0.5 - delta)) * dv)
        p_norm.append(_lp(p, tuple_.p, dv))
        gw_sq.append(_fsum(gw2) * dv)
        w_norm.append(_lp(w, x_idx, dv))
    I = pl_integral(times, integrand, t1, t)
    pn = _time_norm(times, p_norm, tuple_.r, t1, t)
    gn = math.sqrt(pl_integral(times, gw_sq, t1, t))
    wn = _time_norm(times, w_norm, t_idx, t1, t)
    majorant = pn ** theta * gn * wn ** kappa
    if majorant > 0:
        ratio = I / majorant
    elif I == 0:
        ratio = 0.0
    else:
        raise DegenerateNorm(f"majorant vanishes while I = {I}")
    exps = {"theta": theta, "kappa": kappa, "p": tuple_.p, "r": tuple_.r,
            "space_index": "inf" if math.isinf(x_idx) else x_idx,
            "time_index": "inf" if math.isinf(t_idx) else t_idx}
    return PressureBound(I, majorant, ratio, math.isfinite(ratio), pn, gn, wn, exps)
