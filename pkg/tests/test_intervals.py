import math

import numpy as np
import pytest
import scipy.integrate

from flatwood.intervals import (
    MAX_CELLS,
    BumpFunction,
    ColoringError,
    IntervalCollection,
    SymmetricColoring,
    TargetFunction,
    bump_sine_coefficients,
    classify,
    lattice_bump_integrals,
    merge_runs,
    orbit_sine_matrix,
    validate,
    zero_count_bound,
)
from flatwood.rudin_shapiro import build_cosine
from flatwood.trigcore import TrigPoly, vallee_poussin


def symmetric_collection(n, reps):
    """Close a list of [lo, hi] intervals under both circle symmetries."""
    c = IntervalCollection(n, tuple(reps))
    ivs = set(c.intervals)
    for iv in list(ivs):
        r = c.rotate(iv)
        ivs |= {c.reflect(iv), r, c.reflect(r)}
    return IntervalCollection(n, tuple(ivs))


@pytest.fixture
def sample_target():
    n = 200  # 40 cells, half period 20
    coll = symmetric_collection(n, [(2, 4), (6, 7)])
    coloring = SymmetricColoring(coll, np.array([1, -1]))
    return TargetFunction(coloring, K=3.0)


class TestCollection:
    def test_symmetry_maps_are_involutions(self):
        c = symmetric_collection(200, [(2, 4), (6, 7)])
        assert len(c) == 8 and c.N == 2
        ivs = set(c.intervals)
        assert {c.reflect(iv) for iv in ivs} == ivs
        assert {c.rotate(iv) for iv in ivs} == ivs
        for iv in ivs:
            assert c.reflect(c.reflect(iv)) == iv
            assert c.rotate(c.rotate(iv)) == iv

    def test_round_trip(self):
        c = symmetric_collection(200, [(2, 4)])
        assert IntervalCollection.from_dict(c.to_dict()) == c

    def test_contains(self):
        c = IntervalCollection(200, ((2, 4),))
        t = np.array([2.5, 3.9, 4.1]) * c.unit
        assert c.contains(t).tolist() == [True, True, False]

    def test_self_antipodal_interval_cannot_be_coloured(self):
        # an interval containing 0 is mapped to itself by t -> -t
        c = symmetric_collection(200, [(39, 41)])
        with pytest.raises(ColoringError):
            c.orbits()
        assert c.N == -1

    def test_rejects_bad_intervals(self):
        with pytest.raises(ValueError):
            IntervalCollection(200, ((5, 3),))
        with pytest.raises(ValueError):
            IntervalCollection(205)

    def test_merge_runs_cyclic(self):
        bad = np.array([1, 1, 0, 0, 1, 0, 1, 1], dtype=bool)
        assert sorted(merge_runs(bad)) == [(4, 5), (6, 10)]
        assert merge_runs(np.zeros(5, dtype=bool)) == []


class TestClassify:
    def test_constant_is_all_good(self):
        cl = classify(TrigPoly([1.0]), 40, 0.5)
        assert len(cl.bad) == 0 and cl.good.size == 8

    def test_sine_against_dense_oracle(self):
        n, thr = 40, 0.5
        U = TrigPoly([0.0], [1.0])
        cl = classify(U, n, thr)
        cells = n // 5
        width = 2 * math.pi / cells
        t = np.linspace(0, width, 10001)
        dense_bad = [float(np.abs(np.sin(j * width + t)).min()) - cl.margin < thr for j in range(cells)]
        bad = np.zeros(cells, dtype=bool)
        for lo, hi in cl.bad.intervals:
            bad[np.arange(lo, hi) % cells] = True
        assert bad.tolist() == dense_bad
        assert bad.tolist() == [True, False, False, True, True, False, False, True]

    def test_threshold_monotone(self):
        U = build_cosine(1160).poly
        prev = None
        for thr in (0.1, 1.0, 3.0, 10.0):
            cl = classify(U, 1160, thr)
            bad = set()
            for lo, hi in cl.bad.intervals:
                bad |= {j % (1160 // 5) for j in range(lo, hi)}
            if prev is not None:
                assert prev <= bad
            prev = bad

    def test_symmetric_mode_is_closed(self):
        cl = classify(build_cosine(1160).poly, 1160, 3.0, symmetric=True)
        assert validate(cl.bad, 1)["b"]

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            classify(TrigPoly([1.0]), 40, 0.0)


class TestValidate:
    def test_empty_collection(self):
        rep = validate(IntervalCollection(40), 0.01)
        assert all(rep[k] for k in "abcdef")

    def test_interval_touching_quarter_turn(self):
        # pi/2 is cell boundary 20 when n = 400
        c = symmetric_collection(400, [(18, 20)])
        rep = validate(c, 1)
        assert not rep["f"]
        assert rep["witnesses"]["f"][0]["multiple_of_half_pi"] in (1, 3)

    def test_long_and_close_intervals_flagged(self):
        n = 10000
        long_ = IntervalCollection(n, ((0, MAX_CELLS + 1),))
        assert not validate(long_, 1)["d"]
        close = IntervalCollection(n, ((10, 12), (12, 14)))
        assert not validate(close, 1)["e"]

    def test_desk_collection(self, desk_run):
        rep = desk_run.cosine.validation
        assert all(rep[k] for k in "abde")
        # no run of 400 consecutive cells is entirely bad
        assert all(hi - lo <= MAX_CELLS for lo, hi in desk_run.cosine.collection.intervals)

    def test_zero_count_bound_at_desk(self, desk_run):
        coll = desk_run.cosine.collection
        assert len(coll) <= zero_count_bound(desk_run.cosine.cosine.poly)


class TestBump:
    def test_profile(self):
        n, a, b = 100, 1.0, 1.3
        phi = BumpFunction(a, b, n)
        h = 5 * math.pi / n
        assert phi((a + b) / 2) == 1.0
        assert phi(a - h) == 0.0
        assert phi(a - h / 2) == pytest.approx(0.5)
        assert phi(b + h / 2) == pytest.approx(0.5)

    def test_slope(self):
        n = 100
        phi = BumpFunction(1.0, 1.3, n)
        h = 5 * math.pi / n
        t = np.array([1.0 - 0.8 * h, 1.0 - 0.2 * h])
        slope = (phi(t[1]) - phi(t[0])) / (t[1] - t[0])
        assert slope == pytest.approx(n / (5 * math.pi))

    def test_closed_form_against_quadrature(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 40)) * 10
            a = float(rng.uniform(0, 3))
            b = a + float(rng.uniform(0, 1))
            w = float(rng.integers(0, 60))
            phi = BumpFunction(a, b, n)
            h = phi.ramp
            pts = [a - h, a, b, b + h]
            for integral, fn in ((phi.sine_integral, math.sin), (phi.cosine_integral, math.cos)):
                ref = sum(scipy.integrate.quad(lambda t: phi(t) * fn(w * t), lo, hi, epsabs=1e-14,
                                               epsrel=1e-12, limit=200)[0]
                          for lo, hi in zip(pts, pts[1:]))
                assert integral(w) == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_lattice_form_matches_float_form(self):
        n, lo, hi = 200, 3, 6
        unit = 10 * math.pi / n
        phi = BumpFunction(lo * unit, hi * unit, n)
        w = np.arange(0, 50)
        s, c = lattice_bump_integrals(n, lo, hi, w)
        np.testing.assert_allclose(s, phi.sine_integral(w.astype(float)), atol=1e-13)
        np.testing.assert_allclose(c, phi.cosine_integral(w.astype(float)), atol=1e-13)


class TestTarget:
    def test_coloring_symmetry(self, sample_target):
        assert sample_target.coloring.is_symmetric()

    def test_wrong_free_count(self, sample_target):
        with pytest.raises(ValueError):
            SymmetricColoring(sample_target.collection, np.array([1]))

    def test_values(self, sample_target):
        G = sample_target
        a, b = G.collection.radians(0)
        assert abs(G(np.array([(a + b) / 2]))[0]) == pytest.approx(G.amplitude)
        far = b + 5 * math.pi / G.n + 1e-9
        if not G.collection.contains(np.array([far]))[0]:
            assert abs(G(np.array([far + 1e-3]))[0]) <= G.amplitude

    def test_fast_sampler(self, sample_target):
        size, shift = 4096, math.pi / 4096
        t = shift + 2 * math.pi * np.arange(size) / size
        np.testing.assert_allclose(sample_target.sample_uniform(size, shift), sample_target(t), atol=1e-12)

    def test_cosine_and_even_sine_vanish(self, sample_target):
        G = sample_target
        a, b = G.fourier_coefficients(64)
        scale = G.amplitude
        assert np.abs(a).max() <= 1e-9 * scale
        assert np.abs(b[2::2]).max() <= 1e-9 * scale
        # quadrature route agrees
        nodes = 1 << 16
        t = 2 * math.pi * np.arange(nodes) / nodes
        F = np.fft.rfft(G(t)) / nodes
        assert np.abs(2 * F.real[:33]).max() <= 1e-9 * scale
        assert np.abs(2 * F.imag[2:33:2]).max() <= 1e-9 * scale

    def test_orbit_matrix_matches_coefficients(self, sample_target):
        G = sample_target
        _, b = G.fourier_coefficients(2 * 10)
        Y = orbit_sine_matrix(G.collection, G.K, 10)
        np.testing.assert_allclose(Y @ G.coloring.free, b[1::2], atol=1e-10 * G.amplitude)
        bk, y = bump_sine_coefficients(G.collection, G.coloring, G.K, 3)
        assert bk == pytest.approx(b[5], abs=1e-10 * G.amplitude)

    def test_orbit_entries_bounded(self, desk_run):
        coll = desk_run.cosine.collection
        n, K = coll.n, desk_run.config.K
        Y = orbit_sine_matrix(coll, K, 64)
        lengths = np.array([coll.intervals[o[0][0]][1] - coll.intervals[o[0][0]][0] for o in coll.orbits()])
        per = 4 * K * math.sqrt(n) / math.pi * (lengths * coll.unit + 10 * math.pi / n)
        assert np.all(np.abs(Y) <= per * (1 + 1e-12))
        assert np.abs(Y).max() <= 16000 * K / math.sqrt(n)

    def test_modulus_bound(self, sample_target):
        G = sample_target
        t = np.linspace(0, 2 * math.pi, 200001)
        v = G(t)
        delta = t[1] - t[0]
        assert np.abs(np.diff(v)).max() <= G.modulus_bound(delta) * (1 + 1e-9)
        assert G.modulus_bound(math.pi / G.n) == pytest.approx(G.amplitude / 5)

    def test_vallee_poussin_of_target(self, sample_target):
        V = vallee_poussin(sample_target, sample_target.n)
        assert np.abs(V.cos).max() <= 1e-9 * sample_target.amplitude
