"""Samplers and independent oracles shared by the test modules."""

import math

import numpy as np
from scipy import integrate

from nsreg.exponents import check_admissible
from nsreg.grid import FieldSpec, SpaceTimeGrid, generate_field
from nsreg.lorentz import SimpleFunction


def sample_admissible(rng, max_tries=10_000):
    """Draw gamma, delta, 1/p uniformly in their open ranges, r from the relation.

    Rejected draws are resampled.
    """
    for _ in range(max_tries):
        gamma = rng.uniform(0.0, 0.5)
        if gamma == 0.0:
            continue
        delta = rng.uniform(3 * gamma / (2 + 2 * gamma), 0.5)
        inv_p = rng.uniform(gamma / 3, (2 + gamma) / 3)
        if inv_p <= 0.0:
            continue
        p = 1.0 / inv_p
        den = 2 + gamma - 3 * inv_p
        if den <= 0.0:
            continue
        t = check_admissible(p, 2.0 / den, delta, gamma)
        if t.admissible:
            return t
    raise RuntimeError("sampler exhausted")


def random_simple(rng, max_pieces=8):
    n = int(rng.integers(1, max_pieces + 1))
    levels = rng.uniform(0.01, 10.0, n)
    measures = rng.uniform(0.01, 5.0, n)
    return SimpleFunction.from_unsorted(levels.tolist(), measures.tolist())


def lorentz_oracle(pieces, p, q):
    """Lorentz quasinorm by adaptive quadrature of p ∫ (α d(α)^{1/p})^q dα/α."""
    def d(a):
        return sum(m for lv, m in pieces if lv > a)

    levels = sorted({lv for lv, _ in pieces})
    if math.isinf(q):
        return max(lv * d(lv * (1 - 1e-15)) ** (1 / p) for lv in levels)
    total = 0.0
    lo = 0.0
    for hi in levels:
        val, _ = integrate.quad(lambda a: a ** (q - 1) * d(0.5 * (lo + hi)) ** (q / p),
                                lo, hi, epsabs=0, epsrel=1e-13)
        total += val
        lo = hi
    return (p * total) ** (1 / q)


def shear_bq_oracle(r, q):
    """2 r^{q-1} ∫_{B(0,r)} (x1^2+x2^2)^{(q-2)/2} dx via 1-D quadrature in z.

    The disc integral at height z is 2π (r^2-z^2)^{q/2} / q.
    """
    val, _ = integrate.quad(lambda z: 2 * math.pi * (r * r - z * z) ** (q / 2) / q, -r, r,
                            epsabs=0, epsrel=1e-12)
    return 2 * r ** (q - 1) * val


def box_grid(n, t_extent, nt, half=0.5):
    return SpaceTimeGrid.box(-half, half, n, (0.0, t_extent), nt)


def make_field(kind, grid, pressure=False, **kw):
    return generate_field(FieldSpec(kind=kind, grid=grid, **kw), with_pressure=pressure)


def blowup_bq_oracle(r, s0, q, width=1.0, amplitude=1.0):
    """B_q of the Gaussian blow-up profile on Q(centre, T_blow - s0; r).

    Per slice the ball integral is A^q w^-4 s^{(1-q)/2} 4π ∫_0^{r/√s} ρ^4 e^{-qρ^2/(2w^2)} dρ,
    integrated over s in [s0, s0 + r^2].
    """
    a = q / (2 * width * width)

    def radial(s):
        val, _ = integrate.quad(lambda p: p ** 4 * math.exp(-a * p * p), 0, r / math.sqrt(s),
                                epsabs=0, epsrel=1e-12)
        return 4 * math.pi * amplitude ** q / width ** 4 * s ** ((1 - q) / 2) * val

    total, _ = integrate.quad(radial, s0, s0 + r * r, epsabs=0, epsrel=1e-10, limit=200)
    return r ** (q - 3) * total
