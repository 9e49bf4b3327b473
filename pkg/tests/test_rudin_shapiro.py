import math
from fractions import Fraction

import numpy as np
import pytest

from flatwood.rudin_shapiro import (
    BLOCKS,
    DELTA,
    DESK_WINDOW,
    ASYMPTOTIC_WINDOW,
    WindowError,
    audit_adjacent_peaks,
    audit_neighborhood,
    audit_parallelogram,
    audit_peak_points,
    audit_prefix_bound,
    build_T,
    build_cosine,
    gamma_of,
    minimal_feasible_n,
    p_at_one,
    poly_values_on_roots,
    prefix_sup_scan,
    rs_audit_report,
    rs_pair,
    rs_prefix,
    select_generation,
)
from flatwood.trigcore import certified_sup_norm, evaluate


def test_first_generations():
    assert rs_pair(0).p.tolist() == [1] and rs_pair(0).q.tolist() == [1]
    assert rs_pair(1).p.tolist() == [1, 1] and rs_pair(1).q.tolist() == [1, -1]
    assert rs_pair(2).p.tolist() == [1, 1, 1, -1]
    assert rs_pair(2).q.tolist() == [1, 1, -1, 1]


def test_generation_bounds():
    with pytest.raises(ValueError):
        rs_pair(-1)
    with pytest.raises(ValueError):
        rs_pair(25)


def test_prefix_property():
    big = rs_pair(10).p
    for m in range(10):
        np.testing.assert_array_equal(rs_pair(m).p, big[: 1 << m])
    np.testing.assert_array_equal(rs_prefix(37).coeffs, big[:37])


@pytest.mark.parametrize("m,value", [(0, 1), (1, 2), (2, 2), (3, 4), (5, 8), (8, 16), (9, 32)])
def test_value_at_one(m, value):
    assert p_at_one(m) == value


@pytest.mark.parametrize("m", [0, 5, 12])
def test_parallelogram(m):
    pair = rs_pair(m)
    assert audit_parallelogram(pair, 4 * pair.M) <= 1e-8 * 2 ** (m + 1)


def test_parallelogram_rejects_coarse_grid():
    with pytest.raises(ValueError):
        audit_parallelogram(rs_pair(3), 16)


def test_roots_of_unity_values_match_direct_sum():
    c = rs_pair(4).p
    size, shift = 40, 0.1
    t = shift + 2 * math.pi * np.arange(size) / size
    direct = np.exp(1j * np.outer(t, np.arange(c.size))) @ c
    np.testing.assert_allclose(poly_values_on_roots(c, size, shift), direct, atol=1e-11)
    # folding when the grid is smaller than the coefficient count
    np.testing.assert_allclose(poly_values_on_roots(c, 8), np.exp(1j * np.outer(
        2 * math.pi * np.arange(8) / 8, np.arange(c.size))) @ c, atol=1e-11)


def test_adjacent_peaks_small_case():
    # P_1 at z = 1, -1 gives |2|^2 and 0
    assert audit_adjacent_peaks(rs_pair(1)) == pytest.approx(4.0)


@pytest.mark.parametrize("m", [1, 3, 5, 7, 9])
def test_adjacent_peaks_bound(m):
    assert audit_adjacent_peaks(rs_pair(m)) >= 2 * DELTA * 2**m


@pytest.mark.parametrize("m", [1, 3, 6])
def test_neighbourhood(m):
    res = audit_neighborhood(rs_pair(m), points=200)
    assert res["qualifying"] > 0 and res["pass"]


@pytest.mark.parametrize("m", [1, 3, 5, 7])
def test_peak_points(m):
    witnesses, norm = audit_peak_points(m, points=200)
    applicable = [w for w in witnesses if w.applicable]
    assert applicable and all(w.found for w in applicable)
    assert norm >= 9 * 2 ** ((m + 1) // 2)


def test_tiled_cosine_structure():
    T = build_T(3)
    assert T.degree == BLOCKS * 8 - 1
    np.testing.assert_array_equal(T.cos, np.tile(rs_pair(3).p, BLOCKS))


def test_tiled_cosine_complex_oracle(rng):
    m = 3
    p = rs_pair(m).p
    M = 1 << m
    t = rng.uniform(0, 2 * math.pi, 50)
    geo = sum(np.exp(1j * q * M * t) for q in range(BLOCKS))
    P = np.exp(1j * np.outer(t, np.arange(M))) @ p
    np.testing.assert_allclose(evaluate(build_T(m), t), (geo * P).real, atol=1e-11)


@pytest.mark.parametrize("m", [1, 3, 5, 7])
def test_tiled_cosine_norm_attained_at_origin(m):
    T0 = 9 * 2 ** ((m + 1) // 2)
    assert evaluate(build_T(m), 0.0) == pytest.approx(T0)
    cert = certified_sup_norm(build_T(m))
    assert cert.upper_bound <= 1.0013 * T0
    assert cert.lower_bound <= T0 * (1 + 1e-12)


def test_tiled_cosine_needs_odd_generation():
    with pytest.raises(ValueError):
        build_T(2)


def test_prefix_bound():
    for n in (1, 2, 3, 17, 100, 1000):
        sup, bound = audit_prefix_bound(n)
        assert sup <= bound


def test_prefix_scan_matches_single_certificates():
    scan = prefix_sup_scan(300)
    for n in (1, 50, 129, 300):
        sup, _ = audit_prefix_bound(n)
        # both are certified upper bounds on the same sup; they bracket it within the factor
        assert scan[n - 1] == pytest.approx(sup, rel=0.0013)
    assert np.all(scan <= 5 * np.sqrt(np.arange(1, 301)))


def test_generation_selection_desk():
    assert select_generation(10240, DESK_WINDOW) == 3
    assert gamma_of(10240, 3) == Fraction(9 * 8, 2 * 10240)
    assert select_generation(1150, DESK_WINDOW) is None
    assert minimal_feasible_n(DESK_WINDOW) == 1160


def test_minimal_n_for_asymptotic_window():
    n = minimal_feasible_n(ASYMPTOTIC_WINDOW)
    assert n % 10 == 0
    assert select_generation(n, ASYMPTOTIC_WINDOW) is not None
    assert select_generation(n - 10, ASYMPTOTIC_WINDOW) is None
    assert 75 < math.log2(n) < 76


def test_build_cosine_desk():
    c = build_cosine(10240)
    assert (c.m, c.mu, c.poly.degree) == (3, 72, 142)
    assert c.gamma == Fraction(9, 2560)
    assert np.all(c.poly.cos[1::2] == 0)
    # the norm is attained at 0 and equals 6 sqrt(gamma n) exactly
    bound = 6 * math.sqrt(float(c.gamma) * c.n)
    assert evaluate(c.poly, 0.0) == pytest.approx(bound, rel=1e-14)
    cert = certified_sup_norm(c.poly)
    assert cert.contains(bound) and cert.upper_bound <= 1.0013 * bound
    assert cert.upper_bound <= math.sqrt(c.n)


def test_build_cosine_refuses_asymptotic_window():
    with pytest.raises(WindowError, match="smallest feasible n"):
        build_cosine(10240, ASYMPTOTIC_WINDOW)


def test_build_cosine_validates_n():
    with pytest.raises(ValueError):
        build_cosine(1234)


def test_audit_report_rows():
    rows = rs_audit_report(5)
    assert rows and all(r["pass"] for r in rows)
    assert {"lemma", "parameter", "bound", "measured", "pass"} <= set(rows[0])
