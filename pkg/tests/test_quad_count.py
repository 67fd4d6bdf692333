import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symstri import quad_count as qc
from symstri import space_catalog as sc
from symstri.space_catalog import DomainError


def brute_count(matrix, n):
    a = np.array(matrix, dtype=float)
    r = len(a)
    # |x_i| <= sqrt(n * (A^-1)_ii)
    bound = [int(math.isqrt(int(n * np.linalg.inv(a)[i, i]) + 1)) + 1 for i in range(r)]
    return sum(
        1
        for x in itertools.product(*[range(-b, b + 1) for b in bound])
        if sum(matrix[i][j] * x[i] * x[j] for i in range(r) for j in range(r)) == n
    )


def test_examples():
    assert qc.rep_count(qc.identity_form(2), 1) == 4
    assert qc.rep_count(qc.identity_form(2), 3) == 0
    assert qc.rep_count(qc.identity_form(5), 1) == 10
    assert qc.rep_count(qc.identity_form(3), 0) == 1


def test_rejects_indefinite():
    with pytest.raises(DomainError):
        qc.quad_form([[1, 2], [2, 1]])
    with pytest.raises(DomainError):
        qc.quad_form([[1, 0], [1, 1]])


@pytest.mark.parametrize("matrix", [[[1, 0], [0, 1]], [[2, 1], [1, 2]], [[1, 0, 0], [0, 2, 1], [0, 1, 3]]])
def test_counts_match_brute_force(matrix):
    form = qc.quad_form(matrix)
    counts = qc.rep_counts(form, 60)
    assert [int(c) for c in counts] == [brute_count(matrix, n) for n in range(61)]


def test_sum_of_two_squares_closed_form():
    # r_2(n) = 4 (d_1(n) - d_3(n))
    counts = qc.rep_counts(qc.identity_form(2), 500)
    for n in range(1, 501):
        divs = [d for d in range(1, n + 1) if n % d == 0]
        ref = 4 * (sum(d % 4 == 1 for d in divs) - sum(d % 4 == 3 for d in divs))
        assert counts[n] == ref


def test_shell_sums_match_ball_enumeration():
    form = qc.identity_form(2)
    counts = qc.rep_counts(form, 10**4)
    assert int(counts.sum()) == qc.ball_count(form, 10**4) == 31417


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 200))
def test_counts_even_off_zero(r, n):
    c = qc.rep_count(qc.identity_form(r), n)
    assert c == 1 if n == 0 else c % 2 == 0


def test_threads_give_same_counts():
    form = qc.identity_form(3)
    assert np.array_equal(qc.rep_counts(form, 2000, threads=1), qc.rep_counts(form, 2000, threads=3))


@pytest.mark.parametrize("r,n_max,cap", [(2, 65536, 0.3), (4, 4096, 1.2), (5, 4096, 1.6)])
def test_exponent_fits(r, n_max, cap):
    fit = qc.rep_exponent_fit(qc.identity_form(r), n_max)
    assert fit.slope <= cap
    assert fit.theory_exponent == max(r / 2 - 1, 0)


def test_fit_needs_counts():
    with pytest.raises(qc.FitError):
        qc.rep_exponent_fit(qc.quad_form([[100, 0], [0, 100]]), 64)
    with pytest.raises(DomainError):
        qc.rep_exponent_fit(qc.identity_form(2), 8)


def test_theta_at_zero():
    form = qc.identity_form(2)
    n = 100
    counts = qc.rep_counts(form, 2 * n)
    m = np.arange(len(counts))
    ref = float(np.sum(qc.BUMP(m / n) * counts))
    chk = qc.theta_major_arc_check(form, n, 0, counts=counts)
    assert chk.value == pytest.approx(ref)
    assert chk.bound == pytest.approx(10.0**2)


def test_theta_fourier_extraction():
    form = qc.identity_form(2)
    assert qc.theta_fourier_extract(form, 25, 51) == pytest.approx(12.0, abs=1e-9)
    assert qc.theta_fourier_extract(qc.identity_form(3), 9, 19) == pytest.approx(qc.rep_count(qc.identity_form(3), 9), abs=1e-9)


def test_theta_scan_bounded():
    tab = qc.theta_scan(qc.identity_form(2), 400, 1, 3, 30, seed=1)
    # offsets below 1/(qN) can cross into a neighbouring arc of order N
    assert sum(row[2] == 3 for row in tab.rows) >= 20
    assert tab.summary["max_ratio"] < 50


def test_pair_count_oracle():
    s = sc.catalog_get("T2")
    count = 0
    for x1, y1 in itertools.product(range(4, 8), repeat=2):
        for x2, y2 in itertools.product(range(-8, 9), repeat=2):
            if 16 <= x2 * x2 + y2 * y2 < 64 and x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2 == 41:
                count += 1
    assert qc.joint_pair_count(s, (6, 6), 4, 4, 41) == count


def test_pair_count_unrepresentable():
    assert qc.joint_pair_count(sc.catalog_get("T2"), (6, 6), 4, 16, 3) == 0


def test_pair_count_scan_small():
    tab = qc.pair_count_scan(sc.catalog_get("T2"), [2, 4])
    assert tab.summary["C"] > 0
    assert [r[0] for r in tab.rows] == [2, 4]
