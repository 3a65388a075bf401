import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import box_grid, make_field, shear_bq_oracle
from nsreg.errors import ConfigError, DomainError
from nsreg.regularity import (HARNESS_KEYS, CandidateSet, IterationConfig, RegularityConfig,
                              a_scan, epsilon_scan, grid_points, iterate_decay,
                              lemma_ratio_harness, random_ensemble)
from nsreg.reports import dumps_json

G16 = box_grid(16, 0.1, 5)


@pytest.fixture(scope="module")
def blowup32():
    g = box_grid(32, 0.02, 9)
    return make_field("blowup-profile", g, t_blow=0.0205, width=0.25)


@pytest.fixture(scope="module")
def blowup_scan(blowup32):
    cfg = RegularityConfig(r_max=0.125, count=4)
    return epsilon_scan(blowup32, "grid", cfg)


# config -------------------------------------------------------------------------------

def test_default_ladder():
    g = box_grid(64, 0.1, 3)
    radii = RegularityConfig().ladder(g)
    assert radii[0] == 0.125
    assert all(b == pytest.approx(a / 2) for a, b in zip(radii, radii[1:]))
    assert min(radii) >= 1 / 64


def test_ladder_drops_unresolved():
    assert RegularityConfig(r_max=0.125, count=8).ladder(G16) == [0.125, 0.0625]
    full = RegularityConfig(r_max=0.125, count=3, drop_unresolved=False).ladder(G16)
    assert len(full) == 3


def test_ladder_needs_time_extent():
    with pytest.raises(ConfigError):
        RegularityConfig(r_max=0.4).ladder(G16)


@pytest.mark.parametrize("kw", [{"epsilon_q": 0}, {"factor": 1.0}, {"count": 0}, {"q": 3.0},
                                {"r_max": -1.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        RegularityConfig(**kw)


def test_grid_points_lattice():
    pts = grid_points(G16, 0.125)
    assert len(pts) == 27
    assert (0.0, 0.0, 0.0) in pts
    with pytest.raises(ConfigError):
        grid_points(G16, 0.6)


# scans ----------------------------------------------------------------------------------

def test_zero_and_constant_fields_empty():
    cfg = RegularityConfig(r_max=0.125, count=2)
    assert not epsilon_scan(make_field("zero", G16), "grid", cfg).points
    c = make_field("constant", G16, constant=(1, 0, 0))
    assert not epsilon_scan(c, "grid", cfg).points
    assert not a_scan(c, "grid", cfg).points
    assert not a_scan(make_field("zero", G16), "grid", cfg).points


def test_shear_below_threshold_empty():
    g = box_grid(32, 0.1, 5)
    v = make_field("linear-shear", g)
    cfg = RegularityConfig(r_max=0.25, count=3, epsilon_q=2 * shear_bq_oracle(0.25, 2.6))
    cs = epsilon_scan(v, [(0, 0, 0)], cfg)
    assert not cs.points
    assert cs.evaluated[0].r_sup == 0.25


def test_blowup_centre_flagged(blowup_scan):
    pts = blowup_scan.positions
    assert (0.0, 0.0, 0.0) in pts
    assert all(math.dist(p, (0, 0, 0)) <= 4 * 0.25 * math.sqrt(0.0205) + 1e-12 for p in pts)


def test_blowup_a_scan_flags_centre(blowup32):
    # the A plateau of a unit Gaussian profile of width w is pi^{3/2} w^3 ~ 0.087
    cfg = RegularityConfig(r_max=0.125, count=4, epsilon_star=0.04)
    cs = a_scan(blowup32, [(0, 0, 0), (0.25, 0.25, 0.25)], cfg)
    assert cs.positions == [(0.0, 0.0, 0.0)]
    # at r = r_max the window reaches s = s0 + r^2 where the ball holds almost all of U^2
    r, s0 = 0.125, 0.0005
    assert cs.points[0].sup == pytest.approx(
        math.pi ** 1.5 * 0.25 ** 3 * math.sqrt(1 + s0 / r ** 2), rel=0.02)


def test_scan_round_trip(blowup_scan):
    again = CandidateSet.from_dict(blowup_scan.as_dict())
    assert again == blowup_scan


def test_scan_workers_identical(blowup32, blowup_scan):
    cfg = RegularityConfig(r_max=0.125, count=4)
    par = epsilon_scan(blowup32, "grid", cfg, workers=3)
    assert dumps_json({}, par) == dumps_json({}, blowup_scan)


def test_bad_base_points(blowup32):
    with pytest.raises(ConfigError):
        epsilon_scan(blowup32, "lattice", RegularityConfig(r_max=0.125, count=2))
    with pytest.raises(DomainError):
        epsilon_scan(blowup32, [(0, 0)], RegularityConfig(r_max=0.125, count=2))


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 50.0), st.floats(1.0, 10.0))
def test_raising_threshold_never_adds(blowup32, eps, factor):
    pts = [(0, 0, 0), (0.125, 0, 0), (0.25, 0.25, 0)]
    lo = epsilon_scan(blowup32, pts, RegularityConfig(r_max=0.125, count=3, epsilon_q=eps))
    hi = epsilon_scan(blowup32, pts,
                      RegularityConfig(r_max=0.125, count=3, epsilon_q=eps * factor))
    assert set(hi.positions) <= set(lo.positions)


@pytest.mark.parametrize("count", [1, 2, 3])
def test_ladder_refinement_never_lowers_sup(blowup32, count):
    pts = [(0, 0, 0), (0.25, 0, 0)]
    a = epsilon_scan(blowup32, pts, RegularityConfig(r_max=0.125, count=count))
    b = epsilon_scan(blowup32, pts, RegularityConfig(r_max=0.125, count=count + 1))
    for pa, pb in zip(a.evaluated, b.evaluated):
        assert pb.sup >= pa.sup


# decay recursion --------------------------------------------------------------------------

def test_decay_example():
    res = iterate_decay(1.0, IterationConfig(0.5, 0.01, 0.0, G=0.1), 3)
    assert res.sequence[3] == pytest.approx(0.146875, rel=1e-15)
    assert res.closed_form[3] == pytest.approx(0.146875, rel=1e-15)


def test_decay_pure_geometric():
    res = iterate_decay(2.0, IterationConfig(0.4, 0.01, 0.0), 10)
    assert res.G == 0.0
    for j, e in enumerate(res.sequence):
        assert e == pytest.approx(0.16 ** j * 2.0, rel=1e-14)


def test_decay_k_zero():
    res = iterate_decay(1.5, IterationConfig(0.5, 0.01, 0.0, G=0.2), 0)
    assert res.sequence == (1.5,)
    assert res.iterated_bound[0] == pytest.approx(1.5 + 0.2 / 0.75)


def test_decay_config_errors():
    with pytest.raises(ConfigError):
        IterationConfig(0.6, 0.01, 0.1)
    with pytest.raises(ConfigError):
        IterationConfig(0.5, 0.2, 0.1)
    with pytest.raises(ConfigError):
        IterationConfig(0.5, 0.01, 0.1, C11=1.5)


def test_decay_g_term_formula():
    cfg = IterationConfig(0.5, 0.01, 0.2, q=2.5)
    expected = 0.2 + 0.01 ** (-1.5 / 0.5) * 0.2 ** 2 * 0.5 ** (-24)
    assert cfg.g_term == pytest.approx(expected, rel=1e-14)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(0.0, 0.999), st.floats(0.0, 1e3), st.integers(0, 50),
       st.floats(0.0, 10.0))
def test_decay_identity(theta, d_frac, E0, k, G):
    cfg = IterationConfig(theta, max(d_frac * theta * theta / 2, 1e-12), 0.0, G=G)
    res = iterate_decay(E0, cfg, k)
    for e, c, b in zip(res.sequence, res.closed_form, res.iterated_bound):
        assert abs(e - c) <= 1e-12 * max(1.0, abs(c))
        assert e <= b * (1 + 1e-12)


# harness ------------------------------------------------------------------------------------

def test_harness_constant_field_oscillation_zero():
    v, pi = make_field("constant", G16, pressure=True, constant=(1, 2, 2))
    rep = lemma_ratio_harness([(v, pi)], 2.6, [(0.1, 0.2)])
    assert rep.sup["oscillation"] == 0.0
    assert rep.all_finite


def test_harness_shear_unit_radius():
    g = box_grid(16, 1.0, 5, half=1.0)
    v, pi = make_field("linear-shear", g, pressure=True)
    rep = lemma_ratio_harness([(v, pi)], 2.6, [(0.5, 1.0)])
    assert rep.all_finite
    assert rep.sup["cubic_decay"] > 0


def test_harness_small_ensemble_deterministic():
    g = box_grid(12, 0.09, 4)
    ens = random_ensemble(6, 11, g)
    a = lemma_ratio_harness(ens, 2.6, [(0.1, 0.2), (0.15, 0.3)])
    b = lemma_ratio_harness(ens, 2.6, [(0.1, 0.2), (0.15, 0.3)], workers=2)
    assert a.all_finite
    assert set(a.sup) == set(HARNESS_KEYS)
    assert dumps_json({}, a) == dumps_json({}, b)
    assert [s.seed for s in ens] == [s.seed for s in random_ensemble(6, 11, g)]


def test_harness_validation():
    with pytest.raises(DomainError):
        lemma_ratio_harness([], 2.6, [(0.1, 0.2)])
    ens = random_ensemble(1, 0, box_grid(12, 0.09, 4))
    with pytest.raises(DomainError):
        lemma_ratio_harness(ens, 2.6, [(0.3, 0.2)])
