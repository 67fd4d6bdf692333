import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symstri import space_catalog as sc
from symstri import strichartz_lab as sl
from symstri.space_catalog import DomainError
from symstri.spherical_fn import PrecisionError


def period_length(space):
    return 2 * math.pi * float(sc.period(space))


def torus_wave(space, xi, coeff=1.0):
    atom = sl.Atom(tuple(xi), tuple(np.zeros(f.rank) for f in space.factors), coeff)
    return sl.BandState(space, (atom,), 1.0)


def dense_bilinear(s1, s2, degree, t_nodes):
    """Brute force: evaluate both evolutions on a time grid and a spatial rule."""
    space = s1.space
    rule = sl.quadrature_rule(space, degree)
    T = period_length(space)
    acc = 0.0
    for j in range(t_nodes):
        t = T * j / t_nodes
        u = sl.evolve(s1, t).evaluate(rule.points) * sl.evolve(s2, t).evaluate(rule.points)
        acc += float(np.dot(rule.weights, np.abs(u) ** 2))
    return math.sqrt(acc * T / t_nodes)


def test_random_state_normalized_and_deterministic():
    s = sc.catalog_get("T1")
    a = sl.random_band_state(s, 1, seed=4)
    b = sl.random_band_state(s, 1, seed=4)
    assert a == b
    assert set(a.weights) <= {(-1,), (1,)}
    assert a.l2_norm() == pytest.approx(1.0)
    st2 = sl.random_band_state(sc.catalog_get("S2"), 2, seed=1)
    assert {lam[0] for lam in st2.weights} <= {2, 3}


def test_empty_band_rejected():
    with pytest.raises(DomainError):
        sl.random_band_state(sc.catalog_get("S2"), 0.2)


@pytest.mark.parametrize("name", ["T2", "S2", "T1×S2", "SU2"])
def test_exact_norm_matches_quadrature(name):
    s = sc.catalog_get(name)
    state = sl.random_band_state(s, 2, seed=7)
    rule = sl.quadrature_rule(s, sl.default_degree(s, 2))
    vals = state.evaluate(rule.points)
    assert math.sqrt(float(np.dot(rule.weights, np.abs(vals) ** 2))) == pytest.approx(state.l2_norm(), rel=1e-10)


@pytest.mark.parametrize("name", ["T2", "S2", "SU2"])
def test_evolve_identities(name):
    s = sc.catalog_get(name)
    state = sl.random_band_state(s, 3, seed=2)
    assert sl.evolve(state, 0.0) == state
    back = sl.evolve(state, period_length(s))
    assert np.allclose([a.coeff for a in back.atoms], [a.coeff for a in state.atoms], atol=1e-12)
    assert sl.evolve(state, 1.234).l2_norm() == pytest.approx(state.l2_norm(), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 20))
def test_single_atom_modulus_invariant(t):
    s = sc.catalog_get("S2")
    atom = sl.Atom((3,), (np.array([0.0, 0.0, 1.0]),), 1.0)
    state = sl.BandState(s, (atom,), 2.0)
    rule = sl.quadrature_rule(s, 8)
    a = np.abs(state.evaluate(rule.points))
    b = np.abs(sl.evolve(state, t).evaluate(rule.points))
    assert np.allclose(a, b, atol=1e-12)


def test_littlewood_paley_projection():
    s = sc.catalog_get("S2")
    atoms = tuple(sl.Atom((n,), (np.array([0.0, 0.0, 1.0]),), 1.0) for n in range(0, 9))
    state = sl.BandState(s, atoms, 1.0)
    assert {a.lam[0] for a in sl.littlewood_paley(state, 2).atoms} == {2, 3}
    assert [a.lam for a in state.component((4,)).atoms] == [(4,)]


@pytest.mark.parametrize("name", ["T1", "T2", "S2", "SU2", "T1×S2"])
def test_unitarity_at_p2(name):
    s = sc.catalog_get(name)
    state = sl.random_band_state(s, 2, seed=11)
    res = sl.spacetime_lp_norm(state, 2)
    assert res.value == pytest.approx(math.sqrt(period_length(s)) * state.l2_norm(), rel=1e-4)


@pytest.mark.parametrize("p", [2, 4, 6.5])
def test_single_frequency_torus(p):
    s = sc.catalog_get("T1")
    res = sl.spacetime_lp_norm(torus_wave(s, (3,)), p)
    assert res.value == pytest.approx((period_length(s) * 2 * math.pi) ** (1 / p), rel=1e-6)


def test_spacetime_reproducible():
    s = sc.catalog_get("T2")
    st_ = sl.random_band_state(s, 4, seed=5)
    a = sl.spacetime_lp_norm(st_, 8).value
    b = sl.spacetime_lp_norm(sl.random_band_state(s, 4, seed=5), 8).value
    assert abs(a - b) <= 1e-6 * a


def test_spacetime_matches_dense_time_quadrature():
    s = sc.catalog_get("S2")
    state = sl.random_band_state(s, 2, seed=3)
    p = 4
    rule = sl.quadrature_rule(s, 40)
    T = period_length(s)
    M = 200
    acc = 0.0
    for j in range(M):
        vals = sl.evolve(state, T * j / M).evaluate(rule.points)
        acc += float(np.dot(rule.weights, np.abs(vals) ** p))
    ref = (acc * T / M) ** (1 / p)
    assert sl.spacetime_lp_norm(state, p).value == pytest.approx(ref, rel=1e-9)


def test_spacetime_refuses_under_resolution():
    state = sl.random_band_state(sc.catalog_get("S2"), 2, seed=0)
    with pytest.raises(PrecisionError) as err:
        sl.spacetime_lp_norm(state, 4, space_grid=3)
    assert set(err.value.required) == {"degree", "t_samples"}
    with pytest.raises(PrecisionError):
        sl.spacetime_lp_norm(state, 4, t_samples=10)


def test_bilinear_single_pair_torus():
    s = sc.catalog_get("T1")
    res = sl.bilinear_l2_norm(torus_wave(s, (1,)), torus_wave(s, (-1,)))
    assert res.value == pytest.approx(math.sqrt(period_length(s) * 2 * math.pi))


def test_bilinear_with_constant():
    s = sc.catalog_get("S2")
    f1 = sl.random_band_state(s, 2, seed=1)
    c = 0.7
    const = sl.BandState(s, (sl.Atom((0,), (np.array([0.0, 0.0, 1.0]),), c),), 0.0)
    res = sl.bilinear_l2_norm(f1, const)
    assert res.value == pytest.approx(math.sqrt(period_length(s)) * f1.l2_norm() * c, rel=1e-10)


@pytest.mark.parametrize("name,N1,N2", [("T2", 4, 2), ("S2", 3, 2), ("T1×S2", 2, 1)])
def test_bilinear_matches_dense_oracle(name, N1, N2):
    s = sc.catalog_get(name)
    f1 = sl.random_band_state(s, N1, seed=1)
    f2 = sl.random_band_state(s, N2, seed=2)
    top = sl.band_degree(s, np.array([a.lam for a in f1.atoms + f2.atoms]))
    m_max = 4 * (N1 * N1 + N2 * N2) * float(sc.period(s)) * 2 + 8
    ref = dense_bilinear(f1, f2, 4 * top, int(m_max))
    assert sl.bilinear_l2_norm(f1, f2).value == pytest.approx(ref, rel=1e-2)


def test_bilinear_coherent_matches_quadrature():
    s = sc.catalog_get("S2×S2")
    p1, p2 = sl.probe_state(s, 2, seed=3), sl.probe_state(s, 1, seed=3)
    exact = sl.bilinear_l2_norm(p1, p2).value
    rule = sl.quadrature_rule(s, 24)
    assert sl.bilinear_l2_norm(p1, p2, rule=rule).value == pytest.approx(exact, rel=1e-9)


def test_bilinear_mixed_spaces():
    with pytest.raises(DomainError):
        sl.bilinear_l2_norm(sl.random_band_state(sc.catalog_get("S2"), 2), sl.random_band_state(sc.catalog_get("T2"), 2))


def test_sub_admissible_warning():
    with pytest.warns(sl.SubAdmissibleWarning):
        tab = sl.strichartz_scan(sc.catalog_get("T1"), 4, [2], 1)
    assert tab.summary["admissible"] is False


def test_strichartz_scan_small_rows():
    tab = sl.strichartz_scan(sc.catalog_get("S2"), 10, [2, 4], 2, seed=1)
    assert [r[2] for r in tab.rows] == ["random", "random", "probe"] * 2
    assert tab.summary["admissible"]
    again = sl.strichartz_scan(sc.catalog_get("S2"), 10, [2, 4], 2, seed=1)
    assert again.rows == tab.rows


def test_bilinear_scan_diagonal_case():
    with pytest.warns(sl.SubAdmissibleWarning):
        tab = sl.bilinear_scan(sc.catalog_get("S2"), 2, [2], 1)
    assert all(math.isfinite(r[6]) for r in tab.rows)


def test_eigen_shell_zero_constant():
    s = sc.catalog_get("T5")
    p = 16
    with pytest.warns(sl.SubAdmissibleWarning):
        pass_ = sl.eigenfunction_lp_scan(s, 8, [0], 1)  # p below threshold warns
    tab = sl.eigenfunction_lp_scan(s, p, [0], 1)
    assert tab.rows[0][5] == pytest.approx(s.volume ** (1 / p - 0.5), rel=1e-12)
    assert pass_.rows


def test_eigen_single_point_shell_closed_form():
    s = sc.catalog_get("T2")
    with pytest.warns(sl.SubAdmissibleWarning):
        tab = sl.eigenfunction_lp_scan(s, 6, [1, 3], 1)
    # n = 3 is empty; |xi|^2 = 1 has 4 points, so check a modulus-one wave directly
    assert tab.summary["skipped"] == ["3"]
    wave = torus_wave(s, (1, 0), 1 / (2 * math.pi))
    rule = sl.sampling_rule(s, 1000, seed=0)
    val, _ = sl.lp_norm(wave, 6, rule)
    assert val == pytest.approx((4 * math.pi**2) ** (1 / 6) / (2 * math.pi))


def test_shell_state_on_torus():
    s = sc.catalog_get("T2")
    st_ = sl.shell_state(s, 25, seed=0)
    assert {a.lam for a in st_.atoms} == {(x, y) for x in range(-5, 6) for y in range(-5, 6) if x * x + y * y == 25}
    assert st_.l2_norm() == pytest.approx(1.0)


def test_sliced_sampler_single_wave_exact():
    s = sc.catalog_get("T3")
    wave = torus_wave(s, (2, -1, 3), 1.0)
    res = sl.torus_sliced_lp_norm(wave, 6, slices=8, seed=0)
    assert res.value == pytest.approx(s.volume ** (1 / 6))
    assert res.stderr == pytest.approx(0.0, abs=1e-12)


def test_sliced_sampler_agrees_with_quadrature():
    s = sc.catalog_get("T3")
    state = sl.random_band_state(s, 2, seed=9)
    p = 4
    rule = sl.quadrature_rule(s, sl.default_degree(s, 2))
    exact, _ = sl.lp_norm(state, p, rule)
    res = sl.torus_sliced_lp_norm(state, p, slices=400, seed=1)
    assert abs(res.value - exact) < 4 * res.stderr + 1e-12


def test_sliced_sampler_rejects_other_spaces():
    with pytest.raises(DomainError):
        sl.torus_sliced_lp_norm(sl.random_band_state(sc.catalog_get("S2"), 2), 4)
