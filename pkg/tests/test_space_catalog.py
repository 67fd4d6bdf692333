import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symstri import space_catalog as sc
from symstri.space_catalog import CatalogError, DomainError


def test_torus_descriptor():
    s = sc.catalog_get("T2")
    assert (s.rank, s.dim) == (2, 2)
    assert np.array_equal(s.gram_matrix, np.eye(2))
    assert sc.period(s) == 1
    assert all(sc.dim_weight(s, lam) == 1 for lam in [(0, 0), (3, -4), (-7, 2)])


def test_sphere_and_su2_descriptors():
    s2, su2 = sc.catalog_get("S2"), sc.catalog_get("SU2")
    assert (s2.rank, s2.dim) == (1, 2)
    assert (su2.rank, su2.dim) == (1, 3)
    for n in range(12):
        assert sc.spec_norm_sq(s2, (n,)) == n * (n + 1)
        assert sc.dim_weight(s2, (n,)) == 2 * n + 1
        assert sc.dim_weight(su2, (n,)) == (n + 1) ** 2


def harmonic_dim(n, d=2):
    # homogeneous polynomials of degree n in d+1 variables minus those of degree n-2
    def hom(k):
        return math.comb(k + d, d) if k >= 0 else 0
    return hom(n) - hom(n - 2)


@pytest.mark.parametrize("n", range(8))
def test_sphere_dimension_counts_harmonics(n):
    assert sc.dim_weight(sc.catalog_get("S2"), (n,)) == harmonic_dim(n, 2)
    assert sc.dim_weight(sc.catalog_get("S3"), (n,)) == harmonic_dim(n, 3)


def test_dim_weight_examples():
    assert sc.dim_weight(sc.catalog_get("S2"), (0,)) == 1
    assert sc.dim_weight(sc.catalog_get("S2"), (2,)) == 5
    assert sc.dim_weight(sc.catalog_get("SU2"), (3,)) == 16


def test_dim_is_polynomial_of_degree_d_minus_r():
    su2 = sc.catalog_get("SU2")
    vals = [sc.dim_weight(su2, (n,)) for n in range(10)]
    # third differences vanish for a quadratic
    assert np.all(np.diff(vals, 3) == 0) and np.any(np.diff(vals, 2) != 0)


def test_non_dominant_weight_rejected():
    with pytest.raises(DomainError):
        sc.dim_weight(sc.catalog_get("S2"), (-1,))


def test_spec_norm_examples():
    assert sc.spec_norm_sq(sc.catalog_get("T2"), (3, 4)) == 25
    assert sc.spec_norm_sq(sc.catalog_get("S2"), (1,)) == 2
    assert sc.spec_norm_sq(sc.catalog_get("T1×S2"), (2, 1)) == 6


def test_sphere_eigenvalue_by_finite_difference():
    # Laplace-Beltrami on zonal functions of S2: f'' + cot(theta) f'
    theta, h = 0.7, 1e-4
    f = lambda x: np.cos(x)  # phi_1
    lap = (f(theta + h) - 2 * f(theta) + f(theta - h)) / h**2 + (f(theta + h) - f(theta - h)) / (2 * h) / np.tan(theta)
    assert lap / f(theta) == pytest.approx(-2.0, rel=1e-6)


def test_periods():
    assert sc.period(sc.catalog_get("T2")) == 1
    assert sc.period(sc.catalog_get("S2")) == 1
    rational = sc.torus(2, [[1, 0], [0, Fraction(1, 3)]])
    assert sc.period(rational) == 3
    assert sc.period(sc.product_space(rational, sc.catalog_get("S2"))) == 3


def test_sphere_period_exact():
    s = sc.catalog_get("S2")
    T = sc.period(s)
    for n in range(51):
        # (t + 2 pi T)|lam|^2 differs from t|lam|^2 by 2 pi times an integer
        assert (T * sc.spec_norm_sq(s, (n,))).denominator == 1


def test_bands():
    assert sorted(sc.weights_in_band(sc.catalog_get("T1"), 2)) == [(-3,), (-2,), (2,), (3,)]
    assert sorted(sc.weights_in_band(sc.catalog_get("S2"), 2)) == [(2,), (3,)]
    brute = sum(1 for x, y in itertools.product(range(-4, 5), repeat=2) if 4 <= x * x + y * y < 16)
    assert brute == 36
    assert len(sc.weights_in_band(sc.catalog_get("T2"), 2)) == brute


def test_products():
    s = sc.catalog_get("T1×S2")
    assert (s.rank, s.dim) == (2, 3)
    s = sc.catalog_get("S3×S3")
    assert (s.rank, s.dim) == (2, 6)
    for m in range(11):
        for n in range(11):
            d = sc.dim_weight(s, (m, n))
            assert d == (m + 1) ** 2 * (n + 1) ** 2 > 0


def test_unknown_name():
    with pytest.raises(CatalogError, match="Q7"):
        sc.catalog_get("T2×Q7")


def test_descriptor_roundtrip(tmp_path):
    s = sc.catalog_get("T1×S2")
    doc = s.to_dict()
    assert sc.descriptor_from_dict(doc).to_dict() == doc
    p = tmp_path / "space.json"
    import json
    p.write_text(json.dumps(doc))
    assert sc.load_space(str(p)).to_dict() == doc


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["T2", "S2", "T1×S2", "S2×S2", "SU2"]), st.floats(1.0, 12.0))
def test_band_membership(name, N):
    s = sc.catalog_get(name)
    band = sc.weights_in_band(s, N)
    for lam in band:
        assert N**2 <= sc.spec_norm_sq(s, lam) < 4 * N**2
    # every weight in a generous box but outside the list is outside the band
    inside = set(band)
    box = [range(-int(2 * N) - 1, int(2 * N) + 2) if sg else range(0, int(2 * N) + 2) for sg in s.signed]
    for lam in itertools.product(*box):
        if lam not in inside:
            assert not (N**2 <= sc.spec_norm_sq(s, lam) < 4 * N**2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 30), st.integers(0, 30))
def test_spec_norm_additive_on_products(a, b):
    s = sc.catalog_get("S2×S3")
    assert sc.spec_norm_sq(s, (a, b)) == sc.spec_norm_sq(sc.catalog_get("S2"), (a,)) + sc.spec_norm_sq(
        sc.catalog_get("S3"), (b,)
    )


def test_volume():
    assert sc.catalog_get("T2").volume == pytest.approx(4 * math.pi**2)
    assert sc.catalog_get("S2").volume == pytest.approx(4 * math.pi)
