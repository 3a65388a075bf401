"""Regularity scans, the decay recursion and the local-inequality ratio harness."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InternalContradiction
from .grid import FieldSpec, SpaceTimeGrid, generate_field
from .localq import (ParabolicCylinder, a_value, bq_value, check_q, cylinder_integrals,
                     slice_integrals, sup_profile)

SCAN_MODES = ("bq", "a")


@dataclass(frozen=True)
class RegularityConfig:
    epsilon_q: float = 0.05
    epsilon_star: float = 0.1
    q: float = 2.6
    r_max: Optional[float] = None
    factor: float = 0.5
    count: int = 8
    a_rstar: Optional[float] = None
    clip: str = "ramp"
    drop_unresolved: bool = True

    def __post_init__(self):
        if not (self.epsilon_q > 0 and self.epsilon_star > 0):
            raise ConfigError("thresholds must be positive")
        if not 0 < self.factor < 1:
            raise ConfigError(f"ladder factor {self.factor} must lie in (0, 1)")
        if self.count < 1:
            raise ConfigError("ladder needs at least one rung")
        if self.r_max is not None and not self.r_max > 0:
            raise ConfigError("r_max must be positive")
        check_q(self.q)

    def ladder(self, grid: SpaceTimeGrid):
        """Geometric radius ladder, dropping rungs below one cell when asked."""
        r_max = self.r_max
        if r_max is None:
            r_max = 0.25 * 0.5 * float(np.min(grid.box_hi - grid.box_lo))
        radii = [r_max * self.factor ** i for i in range(self.count)]
        if self.drop_unresolved:
            h = max(grid.spacing[:3])
            radii = [r for r in radii if r >= h * (1 - 1e-12)]
        if not radii:
            raise ConfigError(f"no ladder radius is resolved by spacing {max(grid.spacing[:3])}")
        if r_max ** 2 > grid.t_final - grid.t0 + 1e-12:
            raise ConfigError(f"largest radius {r_max} needs a time extent of {r_max ** 2}")
        return radii

    def to_dict(self):
        return asdict(self)


def grid_points(grid: SpaceTimeGrid, r_max: float):
    """Base points on a lattice of spacing 2 r_max centred in the box."""
    lo, hi = grid.box_lo, grid.box_hi
    mid = 0.5 * (lo + hi)
    axes = []
    for i in range(3):
        reach = 0.5 * (hi[i] - lo[i]) - r_max
        k = int(math.floor(reach / (2 * r_max) + 1e-9)) if reach >= 0 else -1
        if k < 0:
            raise ConfigError("box too small for the largest radius")
        axes.append([mid[i] + 2 * r_max * j for j in range(-k, k + 1)])
    return [(x, y, z) for x in axes[0] for y in axes[1] for z in axes[2]]


@dataclass(frozen=True)
class PointProfile:
    point: tuple
    values: tuple
    sup: float
    r_sup: Optional[float]
    flagged: bool

    def as_dict(self):
        return {"point": list(self.point), "values": list(self.values),
                "sup": self.sup, "r_sup": self.r_sup, "flagged": self.flagged}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["point"]), tuple(d["values"]), d["sup"], d["r_sup"], d["flagged"])


@dataclass(frozen=True)
class CandidateSet:
    mode: str
    threshold: float
    q: float
    t_final: float
    radii: tuple
    points: tuple
    evaluated: tuple = ()

    @property
    def positions(self):
        return [p.point for p in self.points]

    def as_dict(self):
        return {"mode": self.mode, "threshold": self.threshold, "q": self.q,
                "t_final": self.t_final, "radii": list(self.radii),
                "points": [p.as_dict() for p in self.points],
                "evaluated": [p.as_dict() for p in self.evaluated]}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["mode"], d["threshold"], d["q"], d["t_final"], tuple(d["radii"]),
                       tuple(PointProfile.from_dict(p) for p in d["points"]),
                       tuple(PointProfile.from_dict(p) for p in d.get("evaluated", [])))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed candidate set: {exc}") from None


def _map(fn, items, workers):
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _scan(v, base_points, config, mode, workers):
    grid = v.grid
    radii = config.ladder(grid)
    if isinstance(base_points, str):
        if base_points != "grid":
            raise ConfigError(f"unknown base point set {base_points!r}")
        base_points = grid_points(grid, radii[0])
    pts = [tuple(float(c) for c in p) for p in base_points]
    if any(len(p) != 3 for p in pts):
        raise DomainError("base points need three coordinates")
    t_final = grid.t_final
    if mode == "bq":
        use = radii
        threshold = config.epsilon_q

        def value(cyl):
            return bq_value(v, cyl, config.q, config.clip)
    else:
        cap = config.a_rstar
        use = [r for r in radii if cap is None or r <= cap * (1 + 1e-12)]
        if not use:
            raise ConfigError(f"no ladder radius is <= a_rstar={cap}")
        threshold = config.epsilon_star

        def value(cyl):
            return a_value(v, cyl, config.clip)

    def profile(p):
        vals = [value(ParabolicCylinder(p + (t_final,), r)) for r in use]
        best, r_best = sup_profile(vals, use)
        return PointProfile(p, tuple(vals), best, r_best, best >= threshold)

    evaluated = _map(profile, pts, workers)
    flagged = tuple(sorted((e for e in evaluated if e.flagged), key=lambda e: e.point))
    return CandidateSet(mode, threshold, config.q, t_final, tuple(use), flagged, tuple(evaluated))


def epsilon_scan(v, base_points, config: RegularityConfig, workers=1) -> CandidateSet:
    """Flag base points (x, T_final) whose ladder supremum of B_q reaches epsilon_q."""
    return _scan(v, base_points, config, "bq", workers)


def a_scan(v, base_points, config: RegularityConfig, workers=1) -> CandidateSet:
    """As epsilon_scan with A against epsilon_star, over rungs up to a_rstar."""
    return _scan(v, base_points, config, "a", workers)


# decay recursion --------------------------------------------------------------

@dataclass(frozen=True)
class IterationConfig:
    theta_decay: float
    delta_aux: float
    epsilon: float
    C11: float = 1.0
    q: float = 2.6
    G: Optional[float] = None

    def __post_init__(self):
        th, d = self.theta_decay, self.delta_aux
        if not 0 < th <= 0.5:
            raise ConfigError(f"theta={th} must lie in (0, 1/2]")
        if not d > 0:
            raise ConfigError("delta_aux must be positive")
        if not 0 <= self.epsilon < 1:
            raise ConfigError("epsilon must lie in [0, 1)")
        if not self.C11 > 0:
            raise ConfigError("C11 must be positive")
        if self.G is not None and not self.G >= 0:
            raise ConfigError("G must be nonnegative")
        check_q(self.q)
        if 2 * self.C11 * th > 1 + 1e-12:
            raise ConfigError(f"2*C11*theta = {2 * self.C11 * th} exceeds 1")
        if not self.C11 * d < th * th / 2:
            raise ConfigError(f"C11*delta = {self.C11 * d} is not below theta^2/2 = {th * th / 2}")

    @property
    def g_term(self) -> float:
        if self.G is not None:
            return float(self.G)
        eps, q, th, d = self.epsilon, self.q, self.theta_decay, self.delta_aux
        if eps == 0:
            return 0.0
        return self.C11 * (eps + d ** (-(4 - q) / (q - 2)) * eps ** (1 / (q - 2))
                           * th ** (-12 / (q - 2)))


@dataclass(frozen=True)
class DecayResult:
    sequence: tuple
    closed_form: tuple
    iterated_bound: tuple
    radius_bound: tuple
    G: float

    def as_dict(self):
        return asdict(self) | {k: list(getattr(self, k)) for k in
                               ("sequence", "closed_form", "iterated_bound", "radius_bound")}


def iterate_decay(E0: float, config: IterationConfig, k: int) -> DecayResult:
    """Run E_{j+1} = theta^2 E_j + G for k steps and compare with the closed forms.

    ``closed_form[j]`` is theta^{2j} E0 + G (1 - theta^{2j}) / (1 - theta^2),
    ``iterated_bound[j]`` is theta^{2j} E0 + G / (1 - theta^2) and
    ``radius_bound[j]`` is (r^2 / theta^6) E0 + G / (theta^4 (1 - theta^2)) at
    r = theta^j.
    """
    if k < 0 or int(k) != k:
        raise DomainError("k must be a nonnegative integer")
    if not (E0 >= 0 and math.isfinite(E0)):
        raise DomainError("E0 must be nonnegative and finite")
    th2 = config.theta_decay ** 2
    G = config.g_term
    seq = [float(E0)]
    for _ in range(int(k)):
        seq.append(th2 * seq[-1] + G)
    closed, it_bound, r_bound = [], [], []
    for j in range(int(k) + 1):
        p = th2 ** j
        closed.append(p * E0 + G * (1 - p) / (1 - th2))
        it_bound.append(p * E0 + G / (1 - th2))
        r_bound.append(p / th2 ** 3 * E0 + G / (th2 ** 2 * (1 - th2)))
    for j, (e, b) in enumerate(zip(seq, it_bound)):
        if e > b * (1 + 1e-12) + 1e-300:
            raise InternalContradiction(f"E_{j} = {e} exceeds the iterated bound {b}")
    return DecayResult(tuple(seq), tuple(closed), tuple(it_bound), tuple(r_bound), G)


# local-inequality ratio harness ----------------------------------------------

HARNESS_KEYS = ("oscillation", "gradient_product", "cubic_decay", "pressure_decay")


def random_ensemble(n, seed, grid: SpaceTimeGrid, n_modes=6, k_max=3.0, amplitude=1.0):
    """Specs of n seeded band-limited divergence-free fields on a shared grid."""
    seeds = np.random.SeedSequence(seed).generate_state(n)
    return [FieldSpec("random-modes", grid, amplitude=amplitude, n_modes=n_modes,
                      k_max=k_max, seed=int(s)) for s in seeds]


def _ratio(lhs, rhs):
    """lhs/rhs with 0/0 -> 0; None when only the denominator vanishes."""
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else None


def _member_ratios(v, pi, q, pairs, z0, clip):
    out = {k: [] for k in HARNESS_KEYS}
    needed = ("A", "C", "S", "D", "Bq")
    cache = {}

    def quant(r):
        if r not in cache:
            raw = cylinder_integrals(v, pi, ParabolicCylinder(z0, r), q, needed, clip)
            cache[r] = {"A": raw["A"] / r, "C": raw["C"] / r ** 2, "S": raw["S"] / r ** 2,
                        "D": raw["D"] / r ** 2, "Bq": raw["Bq"] * r ** (q - 3)}
        return cache[r]

    for r, rho in pairs:
        a, b = quant(r), quant(rho)
        out["oscillation"].append(_ratio(a["S"], a["A"] ** ((4 - q) / 4) * a["C"] ** (1 / 3)
                                   * a["Bq"] ** 0.5))
        out["cubic_decay"].append(_ratio(a["C"], (r / rho) ** 3 * b["A"] ** 1.5
                                   + b["A"] ** (3 * (4 - q) / 8) * (rho / r) ** 3
                                   * b["Bq"] ** 0.75))
        out["pressure_decay"].append(_ratio(a["D"], (rho / r) ** 2 * b["A"] ** (3 * (4 - q) / 8)
                                   * b["Bq"] ** 0.75 + (r / rho) ** 2.5 * b["D"]))
        # slice-wise ∫|∇v||v| against its interpolation majorant
        _, per = slice_integrals(v, None, ParabolicCylinder(z0, r), q, ("A", "Bq", "gv"), clip)
        worst = 0.0
        for m2, bq, gv in zip(per["A"], per["Bq"], per["gv"]):
            rt = _ratio(gv, r ** (3 * (q - 2) / 4) * m2 ** ((4 - q) / 4) * bq ** 0.5)
            if rt is None:
                worst = None
                break
            worst = max(worst, rt)
        out["gradient_product"].append(worst)
    return out


@dataclass(frozen=True)
class HarnessReport:
    q: float
    pairs: tuple
    center: Optional[tuple]
    sup: dict
    argmax: dict
    degenerate: dict
    rows: tuple = field(default=(), repr=False)

    @property
    def all_finite(self):
        return all(v is not None and math.isfinite(v) for v in self.sup.values())

    def as_dict(self):
        return {"q": self.q, "pairs": [list(p) for p in self.pairs],
                "center": list(self.center) if self.center else None,
                "fitted_constants": self.sup, "argmax": self.argmax,
                "degenerate": self.degenerate, "all_finite": self.all_finite,
                "members": list(self.rows)}


def lemma_ratio_harness(ensemble: Sequence, q: float, pairs, center=None, clip="ramp",
                        workers=1) -> HarnessReport:
    """Fit the implied constant of each local inequality as a supremum over the ensemble.

    ``ensemble`` holds (v, pi) pairs or FieldSpecs (sampled with the |v|^2
    companion). ``pairs`` lists (r, rho) with r <= rho. The cylinder centre
    defaults to the box centre at the final time.
    """
    if not ensemble:
        raise DomainError("ensemble is empty")
    check_q(q)
    pairs = [(float(r), float(rho)) for r, rho in pairs]
    if not pairs or any(not 0 < r <= rho for r, rho in pairs):
        raise DomainError("radius pairs need 0 < r <= rho")

    def member(item):
        if isinstance(item, FieldSpec):
            v, pi = generate_field(item, with_pressure=True)
        else:
            v, pi = item
        g = v.grid
        z0 = tuple(center) if center is not None else \
            tuple(0.5 * (g.box_lo + g.box_hi)) + (g.t_final,)
        return _member_ratios(v, pi, q, pairs, z0, clip)

    results = _map(member, list(ensemble), workers)
    sup, argmax, degenerate = {}, {}, {}
    rows = []
    for i, res in enumerate(results):
        rows.append({"index": i} | {k: res[k] for k in HARNESS_KEYS})
    for k in HARNESS_KEYS:
        best, where, bad = 0.0, None, []
        for i, res in enumerate(results):
            for j, val in enumerate(res[k]):
                if val is None:
                    bad.append({"member": i, "pair": j})
                elif where is None or val > best:
                    best, where = val, [i, j]
        sup[k], argmax[k], degenerate[k] = best, where, bad
    return HarnessReport(q, tuple(pairs), tuple(center) if center is not None else None,
                         sup, argmax, degenerate, tuple(rows))
