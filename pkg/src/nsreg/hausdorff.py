"""Vitali selection, cube-hierarchy premeasure estimates and the covering bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, WindowOutOfDomain, WitnessMissing
from .localq import ParabolicCylinder, bq_value, pl_integral, slice_window

BASES = (2, 3)
BOUNDARY_FUZZ = 1e-9
MAX_LEVELS = 40
WITNESS_GAP = 1e-6


@dataclass(frozen=True)
class BallFamily:
    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        r = np.asarray(self.radii, dtype=float).ravel()
        if len(c) != len(r):
            raise DomainError("centers and radii differ in length")
        if np.any(~(r > 0)) or not np.all(np.isfinite(c)):
            raise DomainError("radii must be positive and centers finite")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_balls(cls, balls):
        balls = list(balls)
        if not balls:
            return cls(np.zeros((0, 3)), np.zeros(0))
        return cls([b[0] for b in balls], [b[1] for b in balls])

    def __len__(self):
        return len(self.radii)


def closed_balls_disjoint(c1, r1, c2, r2):
    return float(np.linalg.norm(np.asarray(c1) - np.asarray(c2))) > r1 + r2


def vitali_select(family: BallFamily) -> list:
    """Greedy largest-first disjoint subfamily; ties go to the lower index."""
    order = sorted(range(len(family)), key=lambda i: (-family.radii[i], i))
    chosen = []
    for i in order:
        ci, ri = family.centers[i], family.radii[i]
        if all(closed_balls_disjoint(ci, ri, family.centers[j], family.radii[j])
               for j in chosen):
            chosen.append(i)
    return sorted(chosen)


def check_vitali(family: BallFamily, selected) -> dict:
    """Exhaustive check of disjointness and the 5r enlargement covering."""
    sel = list(selected)
    disjoint = all(closed_balls_disjoint(family.centers[a], family.radii[a],
                                         family.centers[b], family.radii[b])
                   for k, a in enumerate(sel) for b in sel[k + 1:])
    covered = True
    for i in range(len(family)):
        ci, ri = family.centers[i], family.radii[i]
        # B(ci, ri) lies in B(cj, 5 rj) iff |ci - cj| + ri <= 5 rj
        if not any(np.linalg.norm(ci - family.centers[j]) + ri <= 5 * family.radii[j] * (1 + 1e-12)
                   for j in sel):
            covered = False
            break
    return {"disjoint": disjoint, "covered": covered}


# premeasure -------------------------------------------------------------------

def _as_points(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or len(pts) == 0:
        raise DomainError("need a nonempty (n, d) array of points")
    return np.unique(pts, axis=0)


def sample_spacing(pts) -> float:
    """Median nearest-neighbour distance; 0 for a single point."""
    if len(pts) < 2:
        return 0.0
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(np.median(d[:, 1]))


def cube_count(pts, lo, side) -> int:
    idx = np.floor((pts - lo) / side + BOUNDARY_FUZZ).astype(np.int64)
    n_max = max(0, int(math.ceil(float(np.max(pts.max(axis=0) - lo)) / side - BOUNDARY_FUZZ)) - 1)
    idx = np.clip(idx, 0, n_max)
    return len(np.unique(idx, axis=0))


def hierarchy_levels(pts, epsilon, bases=BASES):
    """(base, side) pairs of the cube hierarchies admissible at scale epsilon.

    Roots have side equal to the largest extent of the sample, anchored at
    its lower corner. Sides range from the first level whose cube diameter
    is at most epsilon down to the median sample spacing.
    """
    d = pts.shape[1]
    extent = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    if extent == 0:
        return [(None, epsilon / math.sqrt(d))]
    floor_ = sample_spacing(pts)
    out = []
    for b in bases:
        for j in range(MAX_LEVELS):
            s = extent * float(b) ** (-j)
            if s * math.sqrt(d) > epsilon * (1 + 1e-12):
                continue
            if s < floor_ * (1 - 1e-12):
                break
            out.append((b, s))
    return out


@dataclass(frozen=True)
class PremeasureEstimate:
    estimate: float
    base: Optional[int]
    side: Optional[float]
    count: int
    levels: tuple = field(default=(), repr=False)

    def as_dict(self):
        return {"estimate": self.estimate, "base": self.base, "side": self.side,
                "count": self.count}


def _level_sums(pts, lam, epsilon, bases=BASES):
    lo = pts.min(axis=0)
    d = pts.shape[1]
    rows = []
    for b, s in hierarchy_levels(pts, epsilon, bases):
        n = 1 if b is None else cube_count(pts, lo, s)
        rows.append((b, s, n, n * (s * math.sqrt(d)) ** lam))
    return rows


def hausdorff_premeasure(points, lam: float, epsilon: float, bases=BASES) -> PremeasureEstimate:
    """Upper estimate of H^{lam, epsilon} of a finite sample by cube hierarchies.

    Returns the smallest sum of (diam)^lam over the admissible levels. Below
    the sample spacing the sample cannot resolve finer covers, so when no
    level fits between epsilon and the spacing the estimate is held at the
    finest resolvable level. This keeps the estimate nondecreasing as
    epsilon shrinks.
    """
    if not (lam > 0 and epsilon > 0):
        raise DomainError("lambda and epsilon must be positive")
    pts = _as_points(points)
    rows = _level_sums(pts, lam, epsilon, bases)
    if not rows:
        every = _level_sums(pts, lam, math.inf, bases)
        finest = min(row[1] for row in every)
        rows = [row for row in every if row[1] == finest]
    best = min(rows, key=lambda row: (row[3], -row[1]))
    return PremeasureEstimate(best[3], best[0], best[1], best[2], tuple(rows))


def scale_sum(points, lam: float, epsilon: float, bases=BASES) -> float:
    """Cube sum at the coarsest admissible level of each base, minimised over bases."""
    pts = _as_points(points)
    d = pts.shape[1]
    extent = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    if extent == 0:
        return epsilon ** lam
    lo = pts.min(axis=0)
    sums = []
    for b in bases:
        j = max(0, math.ceil(math.log(extent * math.sqrt(d) / epsilon, b) - 1e-12))
        s = extent * float(b) ** (-j)
        if s * math.sqrt(d) > epsilon * (1 + 1e-9):
            s /= b
        sums.append(cube_count(pts, lo, s) * (s * math.sqrt(d)) ** lam)
    return min(sums)


@dataclass(frozen=True)
class DimensionBracket:
    lambda_low: Optional[float]
    lambda_high: Optional[float]
    slopes: dict
    inconclusive: tuple

    def as_dict(self):
        return {"lambda_low": self.lambda_low, "lambda_high": self.lambda_high,
                "slopes": {str(k): v for k, v in self.slopes.items()},
                "inconclusive": list(self.inconclusive)}


def dimension_bracket(points, lambda_grid, epsilon_ladder, slope_tol=0.02) -> DimensionBracket:
    """Bracket the dimension of a sample from the trend of its cube sums.

    For each lambda the log-log slope of the scale sums against epsilon is
    fitted over the ladder. A negative slope (sums grow as epsilon shrinks)
    puts lambda below the dimension, a positive one above it. Lambdas whose
    sums are not monotone along the ladder are listed as inconclusive.
    """
    lams = [float(x) for x in lambda_grid]
    eps = [float(x) for x in epsilon_ladder]
    if not lams or not eps:
        raise DomainError("lambda grid and epsilon ladder must be nonempty")
    if lams != sorted(lams) or len(eps) < 2:
        raise DomainError("lambda grid must be sorted and the ladder needs two scales")
    pts = _as_points(points)
    log_e = np.log(eps)
    low, high, slopes, bad = None, None, {}, []
    for lam in lams:
        sums = np.array([scale_sum(pts, lam, e) for e in eps])
        slope = float(np.polyfit(log_e, np.log(sums), 1)[0])
        slopes[lam] = slope
        steps = np.diff(sums) * np.sign(np.diff(eps))
        if not (np.all(steps >= -1e-12 * sums[1:]) or np.all(steps <= 1e-12 * sums[1:])):
            bad.append(lam)
        if slope < -slope_tol:
            low = lam
        elif slope > slope_tol and high is None:
            high = lam
    return DimensionBracket(low, high, slopes, tuple(bad))


def cantor_points(level: int) -> np.ndarray:
    """Left endpoints of the 2^level intervals of the middle-thirds construction."""
    pts = np.array([0.0])
    for k in range(1, level + 1):
        pts = np.concatenate([pts, pts + 2.0 * 3.0 ** (-k)])
    return np.sort(pts)


def segment_points(n: int = 1001) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


# covering bound --------------------------------------------------------------

@dataclass(frozen=True)
class CoveringReport:
    lam: float
    epsilon_hat: float
    selected: tuple
    witness_radii: tuple
    premeasure_estimate: float
    witness_bound: float
    integral_bound: float
    ok: bool
    centers: tuple = ()

    def as_dict(self):
        return {"eps_hat": self.epsilon_hat, "lambda": self.lam,
                "selected": list(self.selected), "witness_radii": list(self.witness_radii),
                "comb_sum": self.premeasure_estimate, "witness_bound": self.witness_bound,
                "integral_bound": self.integral_bound, "ok": self.ok}


def slab_integral(v, q, t_lo, t_hi):
    """∫_{t_lo}^{t_hi} ∫_box |∇v|^2 |v|^{q-2} with the localq time convention."""
    g = v.grid
    tol = 1e-9 * max(1.0, g.t_final - g.t0)
    if t_lo < g.t0 - tol or t_hi > g.t_final + tol:
        raise WindowOutOfDomain(f"slab [{t_lo}, {t_hi}] leaves [{g.t0}, {g.t_final}]")
    js = slice_window(g, t_lo, t_hi)
    vals = [math.fsum((v.grad_sq_slice(j) * v.abs_slice(j) ** (q - 2)).ravel().tolist())
            * g.cell_volume for j in js]
    return pl_integral(g.times()[js], vals, t_lo, t_hi)


def _witness(v, x, t_final, q, eps_hat, epsilon_q, clip, rungs):
    """Largest radius r < eps_hat/5 on a halving ladder with B_q >= epsilon_q/2."""
    top = 0.2 * eps_hat * (1 - WITNESS_GAP)
    for k in range(rungs):
        r = top * 0.5 ** k
        b = bq_value(v, ParabolicCylinder(tuple(x) + (t_final,), r), q, clip)
        if b >= 0.5 * epsilon_q:
            return r, b
    return None, None


def singular_measure_bound(v, sigma_hat, delta: float, epsilon_q: float, epsilon_hat: float,
                           clip="ramp", rungs=12) -> CoveringReport:
    """Covering chain Σ(5 r_i)^{2δ} <= (2·5^{2δ}/ε_q) Σ ∫∫_{Q_i} <= slab bound at one ε̂.

    ``sigma_hat`` is a CandidateSet or a list of spatial points, evaluated at
    the final time of ``v``.
    """
    if not 0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    if not (epsilon_q > 0 and epsilon_hat > 0):
        raise DomainError("epsilon_q and epsilon_hat must be positive")
    q = 3 - 2 * delta
    lam = 2 * delta
    pts = sigma_hat.positions if hasattr(sigma_hat, "positions") else list(sigma_hat)
    g = v.grid
    t_final = g.t_final
    const = 2 * 5 ** lam / epsilon_q
    integral_bound = const * slab_integral(v, q, t_final - epsilon_hat ** 2, t_final)
    radii, wint = [], []
    for x in pts:
        r, b = _witness(v, x, t_final, q, epsilon_hat, epsilon_q, clip, rungs)
        if r is None:
            raise WitnessMissing(f"no radius below {epsilon_hat / 5} at {tuple(x)} "
                                 f"reaches B_q >= {epsilon_q / 2}")
        radii.append(r)
        wint.append(b * r ** (3 - q))
    fam = BallFamily.from_balls([(x, r) for x, r in zip(pts, radii)])
    sel = vitali_select(fam) if len(fam) else []
    comb = math.fsum((5 * radii[i]) ** lam for i in sel)
    witness_bound = const * math.fsum(wint[i] for i in sel)
    slack = 1e-12 * max(1.0, integral_bound)
    ok = comb <= witness_bound * (1 + 1e-12) and witness_bound <= integral_bound + slack
    return CoveringReport(lam, epsilon_hat, tuple(sel), tuple(radii), comb, witness_bound,
                          integral_bound, ok, tuple(tuple(map(float, x)) for x in pts))


def epsilon_hat_sweep(r_max: float, n: int = 5, factor: float = 0.5) -> list:
    return [r_max * factor ** i for i in range(n)]


def covering_sweep(v, sigma_hat, delta, epsilon_q, eps_hats: Sequence[float], clip="ramp",
                   rungs=12) -> list:
    return [singular_measure_bound(v, sigma_hat, delta, epsilon_q, e, clip, rungs)
            for e in eps_hats]
