import math

import numpy as np
import pytest

from conftest import random_poly
from flatwood.rudin_shapiro import build_T
from flatwood.trigcore import (
    RIESZ_FACTOR,
    PeriodicFunction,
    QuadratureError,
    TrigPoly,
    certification_grid,
    certified_sup_norm,
    derivative,
    eval_certification_grid,
    eval_uniform,
    evaluate,
    jackson_bound,
    locate_extremum,
    partial_sum,
    read_grid_csv,
    riesz_lower_envelope,
    vallee_poussin,
    vallee_poussin_weights,
    write_grid_csv,
)


def dense_eval(p, t):
    k = np.arange(p.degree + 1)
    return np.cos(np.outer(t, k)) @ p.cos + np.sin(np.outer(t, k[1:])) @ p.sin


def abs_sin():
    def coeffs(kmax):
        k = np.arange(kmax + 1)
        a = np.zeros(kmax + 1)
        even = k[::2]
        a[::2] = -4 / (math.pi * (even * even - 1.0))
        a[0] /= 2
        return a, np.zeros(kmax + 1)

    return PeriodicFunction(lambda t: np.abs(np.sin(t)), coeffs)


class TestEvaluate:
    def test_constant(self):
        assert evaluate(TrigPoly([1.0]), 0.3) == 1.0

    def test_sine_at_quarter_turn(self):
        assert evaluate(TrigPoly([0.0], [1.0]), math.pi / 2) == pytest.approx(1.0, abs=1e-15)

    def test_tiled_cosine_at_zero(self):
        assert evaluate(build_T(1), 0.0) == pytest.approx(18.0, abs=1e-12)

    def test_matches_dense_sum(self, rng):
        p = random_poly(rng, 40)
        t = rng.uniform(-4, 4, 300)
        np.testing.assert_allclose(evaluate(p, t), dense_eval(p, t), atol=1e-11)

    def test_high_frequency_phase(self):
        # t = 2 pi p/q makes nu t reducible exactly in integers
        nu, p_, q = 2**20 + 3, 7, 1009
        t = 2 * math.pi * p_ / q
        exact = math.sin(2 * math.pi * ((nu * p_) % q) / q)
        val = evaluate(TrigPoly.from_frequencies(nu, sin_at={nu: 1.0}), t)
        assert abs(val - exact) < 1e-9

    def test_uniform_grid_matches_pointwise(self, rng):
        p = random_poly(rng, 17)
        size, shift = 64, 0.0123
        t = shift + 2 * math.pi * np.arange(size) / size
        np.testing.assert_allclose(eval_uniform(p, size, shift), evaluate(p, t), atol=1e-11)

    def test_uniform_grid_too_coarse(self):
        with pytest.raises(ValueError):
            eval_uniform(TrigPoly(np.ones(10)), 5)

    def test_trailing_zeros_trimmed(self):
        p = TrigPoly([1.0, 2.0, 0.0, 0.0], [0.5, 0.0, 0.0])
        assert p.degree == 1


class TestCertification:
    def test_grid_layout(self):
        t = certification_grid(3)
        L = 32 * 3
        assert t.size == 4 * L
        assert t[0] == pytest.approx(math.pi / (4 * L))
        np.testing.assert_allclose(eval_certification_grid(TrigPoly([0, 1.0])), np.cos(certification_grid(1)),
                                   atol=1e-13)

    def test_cosine(self):
        cert = certified_sup_norm(TrigPoly([0.0, 1.0]))
        assert cert.lower_bound >= math.cos(math.pi / 128) - 1e-15
        assert cert.upper_bound >= 1.0
        assert cert.contains(1.0)

    def test_parallelogram_surrogate(self):
        # |1 + e^{it}|^2 = 2 + 2 cos t peaks at 4
        cert = certified_sup_norm(TrigPoly([2.0, 2.0]))
        assert cert.contains(4.0)
        assert cert.upper_bound <= 4.0 * 1.0013

    def test_bracket_against_dense_grid(self, rng):
        p = random_poly(rng, 64)
        t = np.linspace(0, 2 * math.pi, 10**6, endpoint=False)
        dense = float(np.abs(eval_uniform(p, t.size)).max())
        cert = certified_sup_norm(p)
        assert cert.lower_bound <= dense * (1 + 1e-12)
        assert dense <= cert.upper_bound

    def test_factor_is_exact(self):
        assert RIESZ_FACTOR == 1 / math.cos(math.pi / 64)
        assert RIESZ_FACTOR < 1.0013


class TestDerivative:
    def test_sine_to_cosine(self):
        nu = 7
        d = derivative(TrigPoly.from_frequencies(nu, sin_at={nu: 1.0}))
        assert d.equals(TrigPoly.from_frequencies(nu, cos_at={nu: float(nu)}))

    def test_finite_difference(self, rng):
        p = random_poly(rng, 12)
        t, h = 0.77, 1e-6
        fd = (evaluate(p, t + h) - evaluate(p, t - h)) / (2 * h)
        assert evaluate(derivative(p), t) == pytest.approx(fd, rel=1e-6)

    def test_bernstein_inequality(self, rng):
        for _ in range(200):
            nu = int(rng.integers(1, 30))
            p = random_poly(rng, nu)
            dnorm = float(np.abs(eval_uniform(derivative(p), 4096)).max())
            assert dnorm <= nu * certified_sup_norm(p).upper_bound * (1 + 1e-12)


class TestProjections:
    def test_partial_sum_drops_high_frequency(self):
        p = TrigPoly([0, 0, 0, 1.0])
        assert partial_sum(p, 2).equals(TrigPoly.zero())
        assert partial_sum(p, 3).equals(p)

    def test_partial_sum_linear(self, rng):
        f, g = random_poly(rng, 9), random_poly(rng, 9)
        lhs = partial_sum(f.scale(2.0) + g.scale(-3.0), 5)
        rhs = partial_sum(f, 5).scale(2.0) + partial_sum(g, 5).scale(-3.0)
        assert lhs.equals(rhs, rtol=1e-15)

    def test_weights(self):
        w = vallee_poussin_weights(4)
        np.testing.assert_array_equal(w, [1, 1, 1, 1, 1, 0.75, 0.5, 0.25])

    def test_identity_on_low_degree(self, rng):
        p = random_poly(rng, 8)
        assert vallee_poussin(p, 8).equals(p)

    def test_abs_sine_error_within_four_omega(self):
        n = 8
        f = abs_sin()
        V = vallee_poussin(f, n)
        t = np.linspace(0, 2 * math.pi, 20001)
        err = float(np.abs(evaluate(V, t) - f(t)).max())
        omega = math.sin(math.pi / (n + 1))  # modulus of |sin| at pi/(n+1)
        assert err <= 4 * jackson_bound(omega)

    def test_exact_and_quadrature_routes_agree(self):
        f = abs_sin()
        exact = vallee_poussin(f, 8)
        quad = vallee_poussin(PeriodicFunction(lambda t: np.abs(np.sin(t))), 8, quadrature=True,
                              nodes=1 << 16, tol=1e-6)
        a, b = quad.fourier_coefficients(exact.degree)
        np.testing.assert_allclose(a, exact.cos, atol=1e-8)
        np.testing.assert_allclose(b[1:], exact.sin if exact.sin.size else 0.0, atol=1e-8)

    def test_needs_coefficients_or_quadrature(self):
        with pytest.raises(ValueError):
            vallee_poussin(PeriodicFunction(np.sin), 4)

    def test_quadrature_error_is_raised(self):
        rough = PeriodicFunction(lambda t: np.sign(np.sin(7 * t)))
        with pytest.raises(QuadratureError):
            partial_sum(rough, 40, quadrature=True, nodes=512, tol=1e-12)


class TestJacksonAndEnvelope:
    def test_jackson(self):
        assert jackson_bound(0.0) == 0.0
        assert jackson_bound(2.0) == 2.0
        with pytest.raises(ValueError):
            jackson_bound(-1e-3)

    def test_envelope_of_pure_cosine_is_tight(self):
        nu = 5
        p = TrigPoly.from_frequencies(nu, cos_at={nu: 1.0})
        env = riesz_lower_envelope(p, 0.0)
        t = np.linspace(-math.pi / (2 * nu), math.pi / (2 * nu), 101)
        np.testing.assert_allclose(np.abs(evaluate(p, t)), env(t), atol=1e-12)
        assert env.precondition_ok

    def test_tiled_cosine_around_origin(self):
        T = build_T(1)
        t = np.linspace(-math.pi / 36, math.pi / 36, 2001)
        assert np.all(np.abs(evaluate(T, t)) >= 18 * np.cos(18 * t) - 1e-12)
        assert riesz_lower_envelope(T, 0.0).audit()["violations"] == 0

    def test_random_polynomial_at_located_max(self, rng):
        p = random_poly(rng, 25)
        t0 = locate_extremum(p, certified_sup_norm(p).argmax_t)
        audit = riesz_lower_envelope(p, t0).audit()
        assert audit["precondition_ok"] and audit["violations"] == 0

    def test_precondition_flagged_away_from_max(self):
        p = TrigPoly([0.0, 1.0])
        assert not riesz_lower_envelope(p, 1.3).precondition_ok


class TestSerialization:
    def test_json_round_trip_is_exact(self, rng):
        p = random_poly(rng, 11)
        q = TrigPoly.from_dict(p.to_dict())
        np.testing.assert_array_equal(p.cos, q.cos)
        np.testing.assert_array_equal(p.sin, q.sin)

    def test_degree_mismatch(self):
        d = TrigPoly([1.0, 2.0]).to_dict()
        d["degree"] = 3
        with pytest.raises(ValueError):
            TrigPoly.from_dict(d)

    def test_csv_round_trip(self, tmp_path, rng):
        t = rng.uniform(0, 6, 20)
        v = rng.standard_normal(20)
        write_grid_csv(tmp_path / "g.csv", t, v)
        t2, v2 = read_grid_csv(tmp_path / "g.csv")
        np.testing.assert_array_equal(t, t2)
        np.testing.assert_array_equal(v, v2)
