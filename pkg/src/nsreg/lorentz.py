"""Distribution functions and Lorentz quasinorms.

Two kinds of input are supported. A :class:`SimpleFunction` is a finite list
of ``(level, measure)`` pieces and every quantity is evaluated in closed
form. A :class:`SampledFunction` holds grid values with a per-cell measure;
its quasinorms are computed by Gauss-Legendre quadrature in the level
variable between consecutive distinct values of ``|f|``.

Normalisation follows the usual one, in which ``L^{p,p}`` coincides with
``L^p`` and ``L^{p,inf}`` is weak-``L^p``. ``L^inf`` means ``L^{inf,inf}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class SimpleFunction:
    """``f = level_i`` on a set of measure ``measure_i``; levels strictly decreasing."""

    pieces: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pieces = tuple((float(a), float(m)) for a, m in self.pieces)
        for i, (a, m) in enumerate(pieces):
            if not (a > 0 and m > 0 and math.isfinite(a) and math.isfinite(m)):
                raise DomainError(f"piece {i} needs positive finite level and measure, got {(a, m)}")
            if i and not a < pieces[i - 1][0]:
                raise DomainError("levels must be strictly decreasing")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def indicator(cls, measure, level=1.0):
        return cls(((level, measure),))

    @classmethod
    def from_unsorted(cls, levels, measures):
        """Merge equal levels and drop zero pieces."""
        acc = {}
        for a, m in zip(levels, measures):
            a = abs(float(a))
            if a > 0 and m > 0:
                acc[a] = acc.get(a, 0.0) + float(m)
        return cls(tuple(sorted(acc.items(), key=lambda kv: -kv[0])))

    def scaled(self, c: float) -> "SimpleFunction":
        c = abs(c)
        if c == 0:
            return SimpleFunction()
        return SimpleFunction(tuple((c * a, m) for a, m in self.pieces))

    @property
    def levels(self):
        return np.array([a for a, _ in self.pieces])

    @property
    def measures(self):
        return np.array([m for _, m in self.pieces])

    def to_dict(self):
        return {"pieces": [list(pc) for pc in self.pieces]}


@dataclass(frozen=True)
class SampledFunction:
    """Grid samples of ``f`` with a uniform cell measure (cell-counting measure)."""

    values: np.ndarray
    cell_measure: float = 1.0

    def __post_init__(self):
        vals = np.abs(np.asarray(self.values, dtype=np.float64)).ravel()
        if not np.all(np.isfinite(vals)):
            raise DomainError("sampled values must be finite")
        if not self.cell_measure > 0:
            raise DomainError("cell measure must be positive")
        object.__setattr__(self, "values", vals)

    def level_set(self):
        """Distinct positive values of ``|f|`` (decreasing) and the measure at each."""
        vals = self.values[self.values > 0]
        levels, counts = np.unique(vals, return_counts=True)
        return levels[::-1], counts[::-1] * self.cell_measure


@dataclass(frozen=True)
class LorentzNormResult:
    p: float
    q: float
    value: float
    method: str

    def as_dict(self):
        return {"p": self.p, "q": "inf" if math.isinf(self.q) else self.q,
                "value": self.value, "method": self.method}


def _levels_and_measures(f):
    if isinstance(f, SimpleFunction):
        return f.levels, f.measures
    if isinstance(f, SampledFunction):
        return f.level_set()
    raise TypeError(f"unsupported function type {type(f).__name__}")


def distribution_function(f, alpha: float) -> float:
    """Measure of ``{|f| > alpha}``; the inequality is strict."""
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if isinstance(f, SampledFunction):
        return float(np.count_nonzero(f.values > alpha)) * f.cell_measure
    return math.fsum(m for a, m in f.pieces if a > alpha)


def _check_indices(p, q):
    if not p >= 1:
        raise DomainError(f"Lorentz index p={p} must be >= 1")
    if not q >= 1:
        raise DomainError(f"Lorentz index q={q} must be >= 1")
    if math.isinf(p) and not math.isinf(q):
        raise DomainError("L^{inf,q} with q < inf is not supported")


def lorentz_quasinorm(f, p: float, q: float) -> LorentzNormResult:
    _check_indices(p, q)
    levels, measures = _levels_and_measures(f)
    method = "exact-simple" if isinstance(f, SimpleFunction) else "quadrature"
    if levels.size == 0:
        return LorentzNormResult(p, q, 0.0, method)
    # cumulative measure M_k = d(alpha) for alpha in [a_{k+1}, a_k)
    cum = np.cumsum(measures)
    if math.isinf(p):
        return LorentzNormResult(p, q, float(levels[0]), method)
    if math.isinf(q):
        # sup is approached as alpha increases to each level
        return LorentzNormResult(p, q, float(np.max(levels * cum ** (1.0 / p))), method)
    # factor out the top level so tiny or huge scales neither underflow nor overflow
    top = float(levels[0])
    levels = levels / top
    if isinstance(f, SimpleFunction):
        lower = np.append(levels[1:], 0.0)
        terms = cum ** (q / p) * (levels ** q - lower ** q) / q
        total = p * math.fsum(terms.tolist())
    else:
        total = p * _quadrature_sum(levels, cum, p, q)
    return LorentzNormResult(p, q, top * total ** (1.0 / q), method)


def _quadrature_sum(levels, cum, p, q):
    """Sum over level gaps of ∫ alpha^{q-1} d(alpha)^{q/p} by Gauss-Legendre."""
    hi = levels
    lo = np.append(levels[1:], 0.0)
    x = 0.5 * (_GL_NODES + 1.0)
    w = 0.5 * _GL_WEIGHTS
    # interior gaps [lo, hi] with lo > 0: affine map
    alpha = lo[:-1, None] + (hi[:-1] - lo[:-1])[:, None] * x[None, :]
    inner = ((hi[:-1] - lo[:-1]) * (alpha ** (q - 1.0) @ w))
    # the gap [0, a_min] is singular at 0 for q < 2; alpha = a * s^4 smooths it
    a = hi[-1]
    s = x
    first = a ** q * float((4.0 * s ** (4.0 * q - 1.0)) @ w)
    parts = np.append(inner * cum[:-1] ** (q / p), first * cum[-1] ** (q / p))
    return math.fsum(parts.tolist())


def lp_norm(f, p: float) -> float:
    """Plain Lebesgue norm, computed directly from the pieces or samples."""
    if isinstance(f, SimpleFunction):
        if math.isinf(p):
            return float(f.levels[0]) if f.pieces else 0.0
        return math.fsum(m * a ** p for a, m in f.pieces) ** (1.0 / p)
    if math.isinf(p):
        return float(f.values.max(initial=0.0))
    return (math.fsum((f.values ** p).tolist()) * f.cell_measure) ** (1.0 / p)


@dataclass(frozen=True)
class InterpolationCheck:
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    theta: float
    constant: float

    def as_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
                "pass": self.passed, "theta": self.theta, "constant": self.constant}


def interpolation_theta(p, r, q):
    if math.isinf(q):
        return p / r
    return (1.0 / r - 1.0 / q) / (1.0 / p - 1.0 / q)


def interpolate_bound(f, p: float, r: float, q: float) -> InterpolationCheck:
    """Compare ‖f‖_r with the weak-norm interpolation majorant.

    Requires 1 <= p < r < q <= inf. The majorant is
    (r/(r-p) + r/(q-r))^{1/r} ‖f‖_{p,inf}^θ ‖f‖_{q,inf}^{1-θ}.
    """
    if not (1 <= p < r < q):
        raise DomainError(f"need 1 <= p < r < q <= inf, got p={p}, r={r}, q={q}")
    theta = interpolation_theta(p, r, q)
    tail = 0.0 if math.isinf(q) else r / (q - r)
    const = (r / (r - p) + tail) ** (1.0 / r)
    lhs = lp_norm(f, r)
    wp = lorentz_quasinorm(f, p, math.inf).value
    wq = lorentz_quasinorm(f, q, math.inf).value
    rhs = const * wp ** theta * wq ** (1.0 - theta)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return InterpolationCheck(lhs, rhs, ratio, lhs <= rhs * (1.0 + 1e-9), theta, const)
