"""Exponent bookkeeping for pressure-based higher-integrability estimates.

The hypotheses tie a Lebesgue exponent ``p`` and a time exponent ``r`` for
the pressure to an auxiliary pair ``(delta, gamma)`` through

    2/r + 3/p = 2 + gamma,     3*gamma/(2 + 2*gamma) < delta < 1/2,

plus a case-dependent lower bound on ``p``. Given an admissible tuple, the
energy estimate closes once a splitting exponent ``theta`` is found that
satisfies a chain of Hoelder constraints. This module checks admissibility,
labels the case, selects ``theta``, and verifies the chain numerically.

Extended reals are plain floats: ``math.inf`` stands for an infinite Hoelder
conjugate and ``1/inf`` is taken as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import DegenerateDenominator, DomainError, InternalContradiction

RELATION_TOL = 1e-9
SLACK_TOL = 1e-9
Q_MARGIN = 1e-6

CASES = ("I.1", "I.2", "I.3", "II.1", "II.2", "II.3")


@dataclass(frozen=True)
class Constraint:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "passed": self.passed}


@dataclass(frozen=True)
class ExponentTuple:
    p: float
    r: float
    delta: float
    gamma: float
    case_label: str | None = None
    violations: tuple[str, ...] = ()
    theta: float | None = None
    lam: float | None = None
    mu: float | None = None
    theta_rule: str | None = None
    constraints: tuple[Constraint, ...] = field(default=(), repr=False)

    @property
    def q(self) -> float:
        return 3.0 - 2.0 * self.delta

    @property
    def admissible(self) -> bool:
        return not self.violations

    @property
    def label(self) -> str:
        if self.violations:
            return "Rejected(" + ", ".join(self.violations) + ")"
        return self.case_label

    def as_dict(self) -> dict:
        return {
            "p": self.p, "r": self.r, "delta": self.delta, "gamma": self.gamma,
            "q": self.q, "admissible": self.admissible, "case": self.label,
            "violations": list(self.violations), "theta": self.theta,
            "theta_rule": self.theta_rule,
            "lambda": _json_real(self.lam), "mu": _json_real(self.mu),
            "constraints": [c.as_dict() for c in self.constraints],
        }


@dataclass(frozen=True)
class InterpolationPath:
    r: float
    s: float
    delta: float
    gamma: float
    gamma_bound: float
    r1: float
    s1: float
    case_label: str

    def as_dict(self):
        return {"r": self.r, "s": self.s, "delta": self.delta, "gamma": self.gamma,
                "gamma_bound": self.gamma_bound, "r1": self.r1, "s1": self.s1,
                "case": self.case_label}


def _json_real(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


def g_threshold(delta: float, gamma: float) -> float:
    """Lower bound on ``p`` required when ``r >= 2``: 3δ / (2δ − (1−δ)γ)."""
    den = 2.0 * delta - (1.0 - delta) * gamma
    if den <= 0.0:
        raise DegenerateDenominator(
            f"2*delta - (1-delta)*gamma = {den!r} <= 0 for delta={delta}, gamma={gamma}")
    return 3.0 * delta / den


def theta_lower(delta: float, gamma: float) -> float:
    # δ / [2δ − γ(3/2 − δ)]; equivalent to the time-space balance under the relation
    return delta / (2.0 * delta - gamma * (1.5 - delta))


def _d2_cap(p, delta):
    den = 9.0 - 6.0 * delta - 2.0 * p
    if den <= 0.0:
        return math.inf
    return (2.0 - 2.0 * delta) * p / den


def _d1_cap(p, delta):
    # lower space-index bound rewritten as theta * (2 - (3 - 2δ)/p) <= 1
    coef = 2.0 - (3.0 - 2.0 * delta) / p
    if coef <= 0.0:
        return math.inf
    return 1.0 / coef


def check_admissible(p: float, r: float, delta: float, gamma: float) -> ExponentTuple:
    """Test the admissibility hypotheses and assign the case label.

    Rejection is returned, not raised: the tuple carries the names of every
    violated constraint in ``violations``.
    """
    bad = []
    for name, val in (("p", p), ("r", r), ("delta", delta), ("gamma", gamma)):
        if not math.isfinite(val):
            bad.append(f"{name} not finite")
    if bad:
        return ExponentTuple(p, r, delta, gamma, violations=tuple(bad))
    if not 0.0 < gamma < 0.5:
        bad.append("gamma in (0,1/2)")
    if not 0.0 < delta < 0.5:
        bad.append("delta in (0,1/2)")
    if not r > 1.0:
        bad.append("r > 1")
    if not p > 0.0:
        bad.append("p > 0")
    if bad:
        return ExponentTuple(p, r, delta, gamma, violations=tuple(bad))

    if abs(2.0 / r + 3.0 / p - (2.0 + gamma)) > RELATION_TOL:
        bad.append("scaling relation 2/r+3/p=2+gamma")
    if not 3.0 / (2.0 + gamma) < p < 3.0 / gamma:
        bad.append("p in (3/(2+gamma), 3/gamma)")
    if not delta > 3.0 * gamma / (2.0 + 2.0 * gamma):
        bad.append("delta > 3gamma/(2+2gamma)")
    q = 3.0 - 2.0 * delta
    if not 2.0 + Q_MARGIN < q < 3.0 - Q_MARGIN:
        bad.append("q margin")
    if r >= 2.0:
        den = 2.0 * delta - (1.0 - delta) * gamma
        if den <= 0.0 or not p > 3.0 * delta / den:
            bad.append("p > g(delta,gamma)")
    else:
        if not 3.0 / (1.0 + gamma) < p:
            bad.append("p > 3/(1+gamma)")
        if not p <= 2.0 * delta / gamma:
            bad.append("p <= 2delta/gamma")
    if bad:
        return ExponentTuple(p, r, delta, gamma, violations=tuple(bad))
    return ExponentTuple(p, r, delta, gamma, case_label=_case_label(p, r, delta, gamma))


def _case_label(p, r, delta, gamma):
    # ties go to the lower-numbered case
    if r >= 2.0:
        if p >= 2.5 - delta:
            return "I.1"
        if p >= (9.0 - 6.0 * delta) / (4.0 - 2.0 * delta):
            return "I.2"
        return "I.3"
    if delta >= 9.0 * gamma / (4.0 + 6.0 * gamma):
        if p >= 4.5 - 3.0 * delta:
            return "II.1"
        return "II.2"
    return "II.3"


def case_formula_theta(t: ExponentTuple) -> float:
    """The explicit θ the case analysis proposes for an admissible tuple."""
    lo = theta_lower(t.delta, t.gamma)
    label = t.case_label
    if label in ("I.1", "I.2"):
        return 1.0
    if label == "I.3":
        return 0.5 * (lo + _d2_cap(t.p, t.delta))
    if label == "II.1":
        return 0.5 * (lo + t.r / 2.0)
    if label in ("II.2", "II.3"):
        return 0.5 * (lo + min(t.r / 2.0, _d2_cap(t.p, t.delta)))
    raise DomainError(f"no case label on tuple {t!r}")


def theta_interval(t: ExponentTuple) -> tuple[float, float]:
    """Closed interval of θ meeting every constraint of the Hoelder chain."""
    lo = max(0.5, theta_lower(t.delta, t.gamma))
    hi = min(1.0, t.r / 2.0, t.p / 2.0, _d2_cap(t.p, t.delta), _d1_cap(t.p, t.delta))
    return lo, hi


def _selection_constraints(t, theta):
    p, r, d, g = t.p, t.r, t.delta, t.gamma
    lo = theta_lower(d, g)
    cap = min(1.0, r / 2.0, p / 2.0)
    out = [
        _le("theta-lower>1/2", 0.5, lo),
        _le("theta>=theta-lower", lo, theta),
        _le("theta<=min(1,r/2,p/2)", theta, cap),
        _le("gamma<=2delta/(3-2delta)", g, 2.0 * d / (3.0 - 2.0 * d)),
        _le("space-index-lower-at-theta-lower", (2.0 - (2.0 / p) * (1.5 - d)) * lo, 1.0),
        _le("theta-cap", theta * (9.0 - 6.0 * d - 2.0 * p), (2.0 - 2.0 * d) * p),
    ]
    return out


def _le(name, lhs, rhs):
    # strict and non-strict forms are both judged at SLACK_TOL
    slack = rhs - lhs
    if math.isnan(slack):
        slack = 0.0
    return Constraint(name, lhs, rhs, slack, slack >= -SLACK_TOL)


def select_theta(t: ExponentTuple) -> ExponentTuple:
    """Choose θ for an admissible tuple and attach the full constraint report.

    The case formula is used whenever it satisfies every constraint. For
    Case I.1 tuples with ``p > 3 - 2δ`` the formula θ = 1 breaks the lower
    space-index bound; there the midpoint of the feasible interval is used
    instead, and ``theta_rule`` records which rule fired.
    """
    if not t.admissible:
        raise DomainError(f"tuple is not admissible: {t.label}")
    theta = case_formula_theta(t)
    rule = "case-formula"
    report = _theta_report(t, theta)
    if not all(c.passed for c in report):
        lo, hi = theta_interval(t)
        if not lo <= hi:
            raise InternalContradiction(f"empty theta interval [{lo}, {hi}] for {t!r}")
        theta = 0.5 * (lo + hi)
        rule = "feasible-midpoint"
        report = _theta_report(t, theta)
    failed = [c.name for c in report if not c.passed]
    if failed:
        raise InternalContradiction(f"theta={theta} violates {failed} for {t!r}")
    lam, mu, _ = holder_chain(t.p, t.r, theta, t.delta)
    return replace(t, theta=theta, lam=lam, mu=mu, theta_rule=rule,
                   constraints=tuple(report))


def _theta_report(t, theta):
    try:
        _, _, chain = holder_chain(t.p, t.r, theta, t.delta)
    except DomainError as exc:
        return [Constraint("lambda>0", theta / t.p, 0.5, 0.5 - theta / t.p, False),
                Constraint(str(exc), 0, 0, 0, False)]
    return _selection_constraints(t, theta) + chain


def conjugate(theta: float, exponent: float) -> float:
    """Solve θ/e + 1/2 + 1/c = 1 for c, returning ``inf`` at the boundary."""
    den = 0.5 - theta / exponent
    if den < -1e-12:
        raise DomainError(f"theta/{exponent} = {theta / exponent} exceeds 1/2")
    if den <= 0.0:
        return math.inf
    return 1.0 / den


def holder_chain(p: float, r: float, theta: float, delta: float):
    """Hoelder conjugates (λ, μ) and the pass/fail report of the exponent chain."""
    lam = conjugate(theta, p)
    mu = conjugate(theta, r)
    k = 2.5 - 2.0 * theta - delta
    base = 1.5 - delta
    kappa = k / base
    x = math.inf if math.isinf(lam) else 0.5 * lam * k
    inv_lam = 0.0 if math.isinf(lam) else 1.0 / lam
    inv_mu = 0.0 if math.isinf(mu) else 1.0 / mu
    report = [
        _le("kappa<=1", kappa, 1.0),
        _le("space-index-lower", base, x),
        _le("space-index-upper", x, 3.0 * base),
        _le("space-index>1", 1.0, x),
        _le("time-space-balance", 1.5 * kappa, 2.0 * inv_mu + 3.0 * inv_lam),
    ]
    return lam, mu, report


def interpolation_path(r: float, s: float, delta: float, gamma: float | None = None) -> InterpolationPath:
    """Interpolate an endpoint pressure bound into a supercritical admissible pair.

    ``(r, s)`` must satisfy 2/r + 3/s = 2. Without an explicit ``gamma`` the
    path takes half the case's upper bound on γ.
    """
    if not 0.0 < delta < 0.5:
        raise DomainError(f"delta={delta} outside (0, 1/2)")
    if not (r > 1.0 and s > 1.5 and math.isfinite(r) and math.isfinite(s)):
        raise DomainError(f"need r > 1 and s > 3/2, got r={r}, s={s}")
    if abs(2.0 / r + 3.0 / s - 2.0) > RELATION_TOL:
        raise DomainError(f"2/r + 3/s = {2.0 / r + 3.0 / s} != 2")

    if abs(r - 2.0) <= RELATION_TOL:
        label = "III"
        bound = min(2.0 * delta / (3.0 - delta), 1.0 / 3.0)
    elif r > 2.0:
        label = "I"
        bound = min(delta * (2.0 * s - 3.0) / (s - 3.0 * delta),
                    2.0 * delta / (3.0 - 2.0 * delta),
                    1.0 - s / 3.0,
                    0.5)
    else:
        label = "II"
        bound = min((2.0 * delta / s) / (1.0 - 4.0 * delta / 3.0 + 2.0 * delta / s), 1.0 / 3.0)

    if gamma is None:
        gamma = 0.5 * bound
    elif not 0.0 < gamma < bound or (label != "I" and gamma == bound):
        raise DomainError(f"gamma={gamma} outside (0, {bound}) for case {label}")

    if label == "I":
        inv_s1 = 1.0 / s + gamma * (1.0 / 3.0 - 1.0 / s)
    elif label == "II":
        inv_s1 = (1.0 - gamma) / s + 2.0 * gamma / 3.0
    else:
        inv_s1 = (2.0 + gamma) / 6.0
    s1 = 1.0 / inv_s1
    r1 = 2.0 / (2.0 + gamma - 3.0 * inv_s1)
    path = InterpolationPath(r, s, delta, gamma, bound, r1, s1, label)
    t = check_admissible(s1, r1, delta, gamma)
    if not t.admissible:
        raise InternalContradiction(f"interpolated tuple rejected: {t.label} ({path})")
    return path


@dataclass(frozen=True)
class RegionRow:
    inv_p: float
    inv_r: float
    gamma: float
    admissible: bool
    best_delta: float | None
    case: str | None
    dist_L1: float
    dist_L2: float
    dist_scaling2: float
    dist_scaling3: float


REGION_COLUMNS = ("inv_p", "inv_r", "gamma", "admissible", "best_delta", "case",
                  "dist_L1", "dist_L2", "dist_scaling2", "dist_scaling3")


def _line_distance(x, y, a, b, c):
    # signed distance to a*x + b*y = c
    return (a * x + b * y - c) / math.hypot(a, b)


def delta_samples(n: int) -> list[float]:
    return [0.5 * (i + 1) / (n + 1) for i in range(n)]


def region_map(inv_p_range=(0.0, 1.0), inv_r_range=(0.0, 1.0), n=50,
               n_delta=9) -> list[RegionRow]:
    """Admissibility verdicts over a cell-centred grid in the (1/p, 1/r) plane.

    γ is forced by the scaling relation at each point; a point is admissible
    when at least one sampled δ passes, and ``best_delta`` is the smallest such δ.
    """
    if isinstance(n, int):
        nx = ny = n
    else:
        nx, ny = n
    if nx < 2 or ny < 2:
        raise DomainError("region grid needs at least 2 points per axis")
    deltas = delta_samples(n_delta)
    rows = []
    for j in range(ny):
        inv_r = inv_r_range[0] + (j + 0.5) * (inv_r_range[1] - inv_r_range[0]) / ny
        for i in range(nx):
            inv_p = inv_p_range[0] + (i + 0.5) * (inv_p_range[1] - inv_p_range[0]) / nx
            gamma = 2.0 * inv_r + 3.0 * inv_p - 2.0
            best = None
            case = None
            if inv_p > 0.0 and inv_r > 0.0:
                p, r = 1.0 / inv_p, 1.0 / inv_r
                for d in deltas:
                    t = check_admissible(p, r, d, gamma)
                    if t.admissible:
                        best, case = d, t.case_label
                        break
            rows.append(RegionRow(
                inv_p, inv_r, gamma, best is not None, best, case,
                _line_distance(inv_p, inv_r, 1.0, 1.0, 1.0),
                _line_distance(inv_p, inv_r, 3.0, 1.0, 2.0),
                _line_distance(inv_p, inv_r, 3.0, 2.0, 2.0),
                _line_distance(inv_p, inv_r, 3.0, 2.0, 3.0),
            ))
    return rows
