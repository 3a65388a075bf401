import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import box_grid, make_field
from nsreg.energy import energy_functional, pressure_term_bound
from nsreg.errors import DomainError, WindowOutOfDomain
from nsreg.exponents import check_admissible, select_theta
from nsreg.grid import ScalarField, generate_field
from nsreg.regularity import random_ensemble

G = box_grid(16, 0.1, 11)
I3 = select_theta(check_admissible(2.093023255813954, 3.0, 0.3, 0.1))


def test_zero_field():
    led = energy_functional(make_field("zero", G), 0.2, 0.0, 0.1)
    assert (led.sup_term, led.grad_term, led.mixed_term, led.E_delta) == (0, 0, 0, 0)


@pytest.mark.parametrize("delta", [0.05, 0.2, 0.45])
def test_constant_field(delta):
    v = make_field("constant", G, constant=(1.0, 2.0, 2.0))
    led = energy_functional(v, delta, 0.02, 0.08)
    assert led.sup_term == pytest.approx(3.0 ** (3 - 2 * delta), rel=1e-12)
    assert led.grad_term == 0 and led.mixed_term == 0
    assert led.E_delta == led.sup_term + led.grad_term


def test_blowup_sup_term_scaling():
    # |v(s)|^{3-2δ} integrates to s^δ A^q (2π w^2 / q)^{3/2} with s = T_blow - t, q = 3 - 2δ
    delta, w, amp = 0.2, 0.5, 2.0
    q = 3 - 2 * delta
    g = box_grid(48, 0.03, 7)
    v = make_field("blowup-profile", g, t_blow=0.04, width=w, amplitude=amp)
    const = amp ** q * (2 * math.pi * w * w / q) ** 1.5
    for t1 in (0.0, 0.015, 0.03):
        led = energy_functional(v, delta, t1, 0.03)
        assert led.sup_term == pytest.approx((0.04 - t1) ** delta * const, rel=2e-3)


def test_window_errors():
    v = make_field("zero", G)
    with pytest.raises(WindowOutOfDomain):
        energy_functional(v, 0.2, 0.05, 0.02)
    with pytest.raises(WindowOutOfDomain):
        energy_functional(v, 0.2, 0.0, 0.2)
    with pytest.raises(DomainError):
        energy_functional(v, 0.5, 0.0, 0.1)


@pytest.fixture(scope="module")
def ensemble():
    g = box_grid(12, 0.1, 6)
    return [generate_field(s, with_pressure=True) for s in random_ensemble(8, 5, g)]


def test_grad_mixed_comparability(ensemble):
    for v, _ in ensemble:
        for delta in (0.1, 0.3):
            led = energy_functional(v, delta, 0.0, 0.1)
            assert led.grad_term <= (1.5 - delta) ** 2 * led.mixed_term * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.1), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.05, 0.45))
def test_window_additivity(a, f1, f2, delta):
    v = make_field("taylor-like-smooth", G)
    lo, hi = sorted((a, a + (0.1 - a) * f1))
    mid = lo + (hi - lo) * f2
    whole = energy_functional(v, delta, lo, hi)
    left = energy_functional(v, delta, lo, mid)
    right = energy_functional(v, delta, mid, hi)
    for key in ("grad_term", "mixed_term"):
        total = getattr(left, key) + getattr(right, key)
        assert abs(getattr(whole, key) - total) <= 1e-12 * max(1.0, abs(total))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.05), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_sup_term_monotone_in_t(t1, f1, f2):
    v = make_field("random-modes", G, seed=4)
    ta, tb = sorted((t1 + (0.1 - t1) * f1, t1 + (0.1 - t1) * f2))
    assert energy_functional(v, 0.2, t1, tb).sup_term >= energy_functional(v, 0.2, t1, ta).sup_term


# pressure majorant ---------------------------------------------------------------------------

def test_zero_pressure():
    v = make_field("random-modes", G, seed=1)
    pi = ScalarField(G, np.zeros(G.shape))
    res = pressure_term_bound(v, pi, I3, 0.0, 0.1)
    assert res.I == 0 and res.majorant == 0 and res.ratio == 0 and res.passed


def test_constant_velocity():
    v, pi = make_field("constant", G, pressure=True, constant=(0.5, 0.0, 1.0))
    res = pressure_term_bound(v, pi, I3, 0.0, 0.1)
    assert res.I == 0 and res.passed


def test_ensemble_ratios_finite(ensemble):
    ratios = [pressure_term_bound(v, pi, I3, 0.02, 0.1).ratio for v, pi in ensemble]
    assert all(math.isfinite(r) and r > 0 for r in ratios)


def test_pressure_errors(ensemble):
    v, pi = ensemble[0]
    with pytest.raises(WindowOutOfDomain):
        pressure_term_bound(v, pi, I3, 0.0, 0.5)
    with pytest.raises(DomainError):
        pressure_term_bound(v, pi, check_admissible(2.093023255813954, 3.0, 0.3, 0.1), 0.0, 0.1)
    with pytest.raises(DomainError):
        pressure_term_bound(v, ScalarField(G, np.zeros(G.shape)), I3, 0.0, 0.1)
