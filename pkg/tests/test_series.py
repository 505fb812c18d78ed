import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turing_inverse.series import (
    CosineSeries,
    SineSeries,
    WavenumberMismatch,
    differentiate,
    differentiate_sine,
    multiply_cc,
    multiply_sc,
    multiply_ss,
    truncate,
)

coeff = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
wavenumber = st.floats(0.1, 10.0)


def cos_series(min_size=1, max_size=6):
    return st.builds(CosineSeries, st.lists(coeff, min_size=min_size, max_size=max_size), st.just(1.0))


def sample_points(degree, k):
    n = 4 * max(degree, 1) + 1
    return np.linspace(0.0, 2 * np.pi / k, n)


class TestEvaluation:
    def test_cosine_sum(self):
        f = CosineSeries([0.5, 0.2, -0.1], k=2.0)
        x = np.array([0.0, 0.3, 1.7])
        expected = 0.5 + 0.2 * np.cos(2 * x) - 0.1 * np.cos(4 * x)
        np.testing.assert_allclose(f(x), expected, rtol=0, atol=1e-15)

    def test_sine_sum(self):
        f = SineSeries([0.5, 0.2], k=1.5)
        x = np.linspace(0, 3, 7)
        np.testing.assert_allclose(f(x), 0.5 * np.sin(1.5 * x) + 0.2 * np.sin(3 * x), atol=1e-15)

    def test_trailing_zeros_do_not_change_values(self):
        x = np.linspace(0, 5, 11)
        assert np.array_equal(CosineSeries([1, 2], 1.0)(x), CosineSeries([1, 2, 0, 0], 1.0)(x))

    @pytest.mark.parametrize("k", [0.0, -1.0])
    def test_rejects_non_positive_wavenumber(self, k):
        with pytest.raises(ValueError):
            CosineSeries([1.0], k)
        with pytest.raises(ValueError):
            SineSeries([1.0], k)

    def test_coefficients_are_frozen(self):
        f = CosineSeries([1.0, 2.0], 1.0)
        with pytest.raises(ValueError):
            f.coeffs[0] = 3.0


class TestDifferentiate:
    def test_constant(self):
        s = differentiate(CosineSeries([1, 0], k=2))
        assert s.coeffs.tolist() == [0.0]

    def test_cos(self):
        assert differentiate(CosineSeries([0, 1], k=1)).coeffs.tolist() == [-1.0]

    def test_chain_rule(self):
        s = differentiate(CosineSeries([0, 0.2, 0.3], k=np.pi))
        np.testing.assert_allclose(s.coeffs, [-0.2 * np.pi, -0.6 * np.pi], rtol=1e-15)

    def test_degree_preserved(self):
        f = CosineSeries([1, 2, 3, 4], 0.7)
        assert differentiate(f).degree == f.degree
        t, _ = truncate(f, 2)
        assert differentiate(t).degree == 2

    @given(cos_series(), wavenumber)
    def test_matches_central_difference(self, f, k):
        f = CosineSeries(f.coeffs, k)
        x = np.linspace(0.1, 3.0, 9)
        h = 1e-5
        fd = (f(x + h) - f(x - h)) / (2 * h)
        scale = 1 + np.sum(np.abs(f.coeffs) * np.arange(f.coeffs.size) * k)
        np.testing.assert_allclose(differentiate(f)(x), fd, atol=1e-6 * scale**2)

    def test_second_derivative(self):
        f = CosineSeries([0.3, 0.5, -0.2], 1.3)
        d2 = differentiate_sine(differentiate(f))
        i = np.arange(3)
        np.testing.assert_allclose(d2.coeffs, -(i * 1.3) ** 2 * f.coeffs, rtol=1e-15)


class TestProducts:
    def test_cos_squared(self):
        p = multiply_cc(CosineSeries([0, 1], 1.0), CosineSeries([0, 1], 1.0))
        assert p.coeffs.tolist() == [0.5, 0.0, 0.5]

    def test_identity(self):
        p = multiply_cc(CosineSeries([1, 0], 1.0), CosineSeries([0, 0.3], 1.0))
        np.testing.assert_array_equal(p.coeffs[:2], [0, 0.3])
        assert not np.any(p.coeffs[2:])

    def test_constant_term_of_two_harmonic_product(self):
        a1, a2, b1, b2 = 0.3, -0.2, 0.7, 0.4
        f = CosineSeries([0, a1, a2], 1.1)
        g = CosineSeries([0, b1, b2], 1.1)
        p = multiply_cc(f, g)
        assert p.coeffs[0] == pytest.approx(0.5 * (a1 * b1 + a2 * b2), abs=1e-15)
        x = np.linspace(0, 2 * np.pi / 1.1, 9)
        np.testing.assert_allclose(p(x), f(x) * g(x), atol=1e-14)

    def test_sin_squared(self):
        p = multiply_ss(SineSeries([1], 1.0), SineSeries([1], 1.0))
        assert p.coeffs.tolist() == [0.5, 0.0, -0.5]

    def test_sin_product_to_sum(self):
        p = multiply_ss(SineSeries([1, 0], 1.0), SineSeries([0, 1], 1.0))
        np.testing.assert_array_equal(p.coeffs[:4], [0, 0.5, 0, -0.5])

    def test_sin_times_constant(self):
        assert multiply_sc(SineSeries([1], 1.0), CosineSeries([1, 0], 1.0)).coeffs[:1].tolist() == [1.0]

    def test_double_angle(self):
        p = multiply_sc(SineSeries([1], 1.0), CosineSeries([0, 1], 1.0))
        np.testing.assert_array_equal(p.coeffs, [0, 0.5])

    @pytest.mark.parametrize("op", [multiply_cc, multiply_ss, multiply_sc])
    def test_wavenumber_mismatch(self, op):
        mk = {multiply_cc: (CosineSeries, CosineSeries), multiply_ss: (SineSeries, SineSeries),
              multiply_sc: (SineSeries, CosineSeries)}[op]
        with pytest.raises(WavenumberMismatch):
            op(mk[0]([1.0], 1.0), mk[1]([1.0], 2.0))

    def test_random_sine_pair_pointwise(self):
        rng = np.random.default_rng(3)
        f, g = SineSeries(rng.normal(size=3), 0.8), SineSeries(rng.normal(size=3), 0.8)
        x = np.linspace(0, 2 * np.pi / 0.8, 17)
        np.testing.assert_allclose(multiply_ss(f, g)(x), f(x) * g(x), atol=1e-13)

    def test_random_mixed_pair_pointwise(self):
        rng = np.random.default_rng(4)
        f, g = SineSeries(rng.normal(size=2), 2.5), CosineSeries(rng.normal(size=3), 2.5)
        x = np.linspace(0, 2 * np.pi / 2.5, 17)
        np.testing.assert_allclose(multiply_sc(f, g)(x), f(x) * g(x), atol=1e-13)

    def test_parity_by_type(self):
        c, s = CosineSeries([1, 2], 1.0), SineSeries([1, 2], 1.0)
        assert isinstance(multiply_cc(c, c), CosineSeries)
        assert isinstance(multiply_ss(s, s), CosineSeries)
        assert isinstance(multiply_sc(s, c), SineSeries)
        assert isinstance(c * s, SineSeries)


class TestAlgebraicLaws:
    @given(cos_series(), cos_series())
    def test_commutative(self, f, g):
        np.testing.assert_allclose(multiply_cc(f, g).coeffs, multiply_cc(g, f).coeffs, rtol=0, atol=1e-14)

    @given(cos_series(max_size=4), cos_series(max_size=4), cos_series(max_size=4))
    def test_associative(self, f, g, h):
        left = multiply_cc(multiply_cc(f, g), h).coeffs
        right = multiply_cc(f, multiply_cc(g, h)).coeffs
        np.testing.assert_allclose(left, right, rtol=0, atol=1e-14)

    @settings(max_examples=60)
    @given(st.lists(coeff, min_size=1, max_size=4), st.lists(coeff, min_size=1, max_size=4),
           st.lists(coeff, min_size=1, max_size=4), wavenumber)
    def test_composition_is_pointwise_sound(self, a, b, c, k):
        f, g, h = CosineSeries(a, k), CosineSeries(b, k), CosineSeries(c, k)
        # (f g)' h - f'^2 + 3 h, a shape that occurs in the flux terms
        df = differentiate(f)
        expr = differentiate_sine(multiply_sc(differentiate(multiply_cc(f, g)), CosineSeries([1.0], k)))
        expr = multiply_cc(expr, h) - multiply_ss(df, df) + h * 3.0
        x = sample_points(expr.degree, k)
        # product rule on pointwise values of single-series derivatives
        dg = differentiate(g)
        d2f, d2g = differentiate_sine(df)(x), differentiate_sine(dg)(x)
        fg2 = d2f * g(x) + 2 * df(x) * dg(x) + f(x) * d2g
        pointwise = fg2 * h(x) - df(x) ** 2 + 3 * h(x)
        scale = max(1.0, float(np.max(np.abs(pointwise))))
        np.testing.assert_allclose(expr(x), pointwise, rtol=0, atol=1e-12 * scale)


class TestTruncate:
    def test_drops_tail(self):
        t, leak = truncate(CosineSeries([1, 0.2, 0.01, 0.001], 1.0), 2)
        assert t.coeffs.tolist() == [1, 0.2, 0.01]
        assert leak == 0.001

    def test_identity_when_long_enough(self):
        f = CosineSeries([1, 0.2], 1.0)
        t, leak = truncate(f, 5)
        assert t.coeffs.tolist() == f.coeffs.tolist() and leak == 0.0

    def test_leakage_of_product(self):
        rng = np.random.default_rng(0)
        f, g = CosineSeries(rng.normal(size=4), 1.0), CosineSeries(rng.normal(size=4), 1.0)
        full = multiply_cc(f, g)
        t, leak = truncate(full, 3)
        assert leak == np.max(np.abs(full.coeffs[4:7]))
        assert t.degree == 3

    def test_negative_order(self):
        with pytest.raises(ValueError):
            truncate(CosineSeries([1.0], 1.0), -1)


class TestArithmetic:
    def test_add_pads(self):
        s = CosineSeries([1, 2], 1.0) + CosineSeries([0, 0, 3], 1.0)
        assert s.coeffs.tolist() == [1, 2, 3]

    def test_scalar_ops(self):
        f = CosineSeries([1, 2], 1.0)
        assert (f + 1).coeffs.tolist() == [2, 2]
        assert (1 - f).coeffs.tolist() == [0, -2]
        assert (2 * f).coeffs.tolist() == [2, 4]

    def test_sine_add_mismatch(self):
        with pytest.raises(WavenumberMismatch):
            SineSeries([1.0], 1.0) + SineSeries([1.0], 2.0)
