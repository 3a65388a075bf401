"""Scale-invariant local quantities over parabolic cylinders.

For a cylinder ``Q(z0, r) = B(x0, r) x (t0 - r^2, t0)`` every quantity is a
time integral of per-slice ball integrals::

    A   = max_t (1/r) ∫_B |v|^2
    E   = (1/r)     ∫∫_Q |∇v|^2
    C   = (1/r^2)   ∫∫_Q |v|^3
    S   = (1/r^2)   ∫∫_Q | |v|^2 - [|v|^2]_B | |v|
    D   = (1/r^2)   ∫∫_Q |π - [π]_B|^{3/2}
    B_q = r^{q-3}   ∫∫_Q |∇v|^2 |v|^{q-2}

Ball integrals weight each cell by a linear ramp of one mean spacing across
the sphere (``clip="ramp"``), or by centre membership (``clip="center"``).
Time integrals are exact integrals of the piecewise-linear interpolant of
the slice values, and the supremum in A is the maximum of that interpolant
on the closed window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CylinderOutOfDomain, DomainError, QOutOfRange
from .exponents import Q_MARGIN

DOMAIN_TOL = 1e-9
CLIP_MODES = ("ramp", "center")
QUANTITIES = ("A", "E", "C", "S", "D", "Bq", "gv")


@dataclass(frozen=True)
class ParabolicCylinder:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 4:
            raise DomainError("cylinder center needs (x, y, z, t)")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError(f"cylinder radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def x0(self):
        return self.center[:3]

    @property
    def t0(self):
        return self.center[3]


@dataclass(frozen=True)
class LocalQuantities:
    r: float
    q: float
    A: float
    E: float
    C: float
    S: float
    Bq: float
    D: Optional[float] = None
    calE: Optional[float] = None

    def as_dict(self):
        return {"r": self.r, "A": self.A, "E": self.E, "C": self.C, "S": self.S,
                "D": self.D, "Bq": self.Bq, "calE": self.calE}


def check_q(q):
    if not (2.0 + Q_MARGIN <= q <= 3.0 - Q_MARGIN):
        raise QOutOfRange(f"q={q} must lie in (2, 3)")


def check_in_domain(grid, cyl: ParabolicCylinder):
    lo, hi = grid.box_lo, grid.box_hi
    x0 = np.array(cyl.x0)
    r = cyl.radius
    tol = DOMAIN_TOL * max(1.0, float(np.max(np.abs(hi - lo))))
    if np.any(x0 - r < lo - tol) or np.any(x0 + r > hi + tol):
        raise CylinderOutOfDomain(f"ball B({tuple(x0)}, {r}) leaves the box "
                                  f"{tuple(lo)}..{tuple(hi)}")
    ttol = DOMAIN_TOL * max(1.0, grid.t_final - grid.t0)
    if cyl.t0 - r * r < grid.t0 - ttol or cyl.t0 > grid.t_final + ttol:
        raise CylinderOutOfDomain(f"time window [{cyl.t0 - r * r}, {cyl.t0}] leaves "
                                  f"[{grid.t0}, {grid.t_final}]")


def ball_weights(grid, x0, r, clip="ramp"):
    """Per-cell weights of B(x0, r) on the smallest index box containing them.

    Returns ``(slices, weights)`` where ``weights`` has shape (nz, ny, nx) of
    the sub-box. Ramp weights are ``clip(1/2 - (d - r)/w, 0, 1)`` with ``w``
    the mean spacing, so a ball's weighted volume converges at second order.
    """
    if clip not in CLIP_MODES:
        raise DomainError(f"unknown clip mode {clip!r}")
    w = grid.mean_spacing
    reach = r + 0.5 * w if clip == "ramp" else r
    idx, coords = [], []
    for i, n in enumerate((grid.nx, grid.ny, grid.nz)):
        h, o = grid.spacing[i], grid.origin[i]
        lo = max(0, int(math.floor((x0[i] - reach - o) / h - 0.5)))
        hi = min(n, int(math.ceil((x0[i] + reach - o) / h + 0.5)))
        idx.append(slice(lo, hi))
        coords.append(o + (np.arange(lo, hi) + 0.5) * h - x0[i])
    dx, dy, dz = coords
    d = np.sqrt(dz[:, None, None] ** 2 + dy[None, :, None] ** 2 + dx[None, None, :] ** 2)
    if clip == "ramp":
        wts = np.clip(0.5 - (d - r) / w, 0.0, 1.0)
    else:
        wts = (d < r).astype(float)
    return (idx[2], idx[1], idx[0]), wts


def _fsum(a):
    return math.fsum(np.ravel(a).tolist())


def slice_window(grid, a, b):
    """Time indices whose samples are needed to interpolate on [a, b]."""
    ht, t0 = grid.ht, grid.t0
    j0 = max(0, int(math.floor((a - t0) / ht + 1e-9)))
    j1 = min(grid.nt - 1, int(math.ceil((b - t0) / ht - 1e-9)))
    return list(range(j0, max(j0, j1) + 1))


def pl_integral(times, vals, a, b):
    """Exact integral over [a, b] of the piecewise-linear interpolant of (times, vals)."""
    if b <= a:
        return 0.0
    if len(times) == 1:
        return float(vals[0]) * (b - a)
    inner = [(t, v) for t, v in zip(times, vals) if a < t < b]
    pts = [(a, float(np.interp(a, times, vals)))] + inner + [(b, float(np.interp(b, times, vals)))]
    return math.fsum(0.5 * (t1 - t0) * (v0 + v1) for (t0, v0), (t1, v1) in zip(pts, pts[1:]))


def pl_max(times, vals, a, b):
    """Maximum over [a, b] of the piecewise-linear interpolant of (times, vals)."""
    cand = [float(np.interp(a, times, vals)), float(np.interp(b, times, vals))]
    cand += [v for t, v in zip(times, vals) if a <= t <= b]
    return max(cand)


def slice_integrals(v, pi, cyl, q, which=QUANTITIES, clip="ramp"):
    """Per-slice ball integrals for the requested quantities.

    Returns ``(times, {name: array})``. Names: ``A`` (∫|v|^2), ``E``
    (∫|∇v|^2), ``C`` (∫|v|^3), ``S``, ``D``, ``Bq`` (∫|∇v|^2|v|^{q-2}) and
    ``gv`` (∫|∇v||v|).
    """
    grid = v.grid
    sl, w = ball_weights(grid, cyl.x0, cyl.radius, clip)
    dv = grid.cell_volume
    wsum = _fsum(w)
    a, b = cyl.t0 - cyl.radius ** 2, cyl.t0
    js = slice_window(grid, a, b)
    times = grid.times()[js]
    out = {k: np.zeros(len(js)) for k in which if k != "D" or pi is not None}
    for n, j in enumerate(js):
        m = v.abs_slice(j)[sl]
        need_grad = any(k in out for k in ("E", "Bq", "gv"))
        g2 = v.grad_sq_slice(j)[sl] if need_grad else None
        if "A" in out:
            out["A"][n] = _fsum(w * m * m) * dv
        if "E" in out:
            out["E"][n] = _fsum(w * g2) * dv
        if "C" in out:
            out["C"][n] = _fsum(w * m ** 3) * dv
        if "S" in out:
            m2 = m * m
            mean = _fsum(w * m2) / wsum if wsum > 0 else 0.0
            out["S"][n] = _fsum(w * np.abs(m2 - mean) * m) * dv
        if "D" in out:
            p = pi.values[j][sl]
            mean = _fsum(w * p) / wsum if wsum > 0 else 0.0
            out["D"][n] = _fsum(w * np.abs(p - mean) ** 1.5) * dv
        if "Bq" in out:
            out["Bq"][n] = _fsum(w * g2 * m ** (q - 2.0)) * dv
        if "gv" in out:
            out["gv"][n] = _fsum(w * np.sqrt(g2) * m) * dv
    return times, out


def cylinder_integrals(v, pi, cyl, q, which=QUANTITIES, clip="ramp"):
    """Unnormalised integrals; ``A`` is the windowed max of ∫_B |v|^2."""
    check_q(q)
    check_in_domain(v.grid, cyl)
    if pi is not None and pi.grid != v.grid:
        raise DomainError("velocity and pressure must share a grid")
    times, per = slice_integrals(v, pi, cyl, q, which, clip)
    a, b = cyl.t0 - cyl.radius ** 2, cyl.t0
    res = {}
    for k, vals in per.items():
        res[k] = pl_max(times, vals, a, b) if k == "A" else pl_integral(times, vals, a, b)
    return res


def evaluate_cylinder(v, pi, cyl: ParabolicCylinder, q: float, clip="ramp") -> LocalQuantities:
    which = ("A", "E", "C", "S", "Bq") + (("D",) if pi is not None else ())
    raw = cylinder_integrals(v, pi, cyl, q, which, clip)
    r = cyl.radius
    A = raw["A"] / r
    D = raw["D"] / r ** 2 if pi is not None else None
    calE = A ** 1.5 + D ** 2 if D is not None else None
    return LocalQuantities(r=r, q=q, A=A, E=raw["E"] / r, C=raw["C"] / r ** 2,
                           S=raw["S"] / r ** 2, Bq=raw["Bq"] * r ** (q - 3.0), D=D, calE=calE)


def bq_value(v, cyl, q, clip="ramp"):
    return cylinder_integrals(v, None, cyl, q, ("Bq",), clip)["Bq"] * cyl.radius ** (q - 3.0)


def a_value(v, cyl, clip="ramp"):
    # q only gates the shared validation; A does not depend on it
    return cylinder_integrals(v, None, cyl, 2.5, ("A",), clip)["A"] / cyl.radius


@dataclass(frozen=True)
class BqProfile:
    rows: tuple
    sup: float
    r_sup: Optional[float]

    def as_dict(self):
        return {"rows": [{"r": r, "Bq": b} for r, b in self.rows],
                "sup": self.sup, "r_sup": self.r_sup}


def check_radii(radii):
    radii = [float(r) for r in radii]
    if not radii:
        raise DomainError("radius list is empty")
    if any(not r > 0 for r in radii):
        raise DomainError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly decreasing")
    return radii


def sup_profile(values, radii):
    """Supremum and the first radius attaining it (ladder order)."""
    best, r_best = -math.inf, None
    for r, b in zip(radii, values):
        if b > best:
            best, r_best = b, r
    return (best, r_best) if r_best is not None else (0.0, None)


def bq_profile(v, z0, radii, q, clip="ramp") -> BqProfile:
    radii = check_radii(radii)
    vals = [bq_value(v, ParabolicCylinder(z0, r), q, clip) for r in radii]
    best, r_best = sup_profile(vals, radii)
    return BqProfile(tuple(zip(radii, vals)), best, r_best)
