import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oifem.nfunction import (
    ConjugateDivergenceError,
    LawOverflowError,
    NFunction,
    conjugate,
    conjugate_nfunction,
    cosh_nfunction,
    delta2_probe,
    exp_nfunction,
    luxemburg_norm,
    power_nfunction,
    superquadratic_growth_check,
    young_gap,
)

COSH = cosh_nfunction()
EXPF = exp_nfunction()
QUAD = power_nfunction(2.0)


def grid_conjugate(value, s, t_hi=10.0, n=2_000_001):
    t = np.linspace(0.0, t_hi, n)
    return float(np.max(s * t - value(t)))


def bare(nf):
    """Same profile without the closed-form conjugate."""
    return NFunction(nf.value, nf.deriv, nf.label + " (numeric)", t_limit=nf.t_limit)


class TestProfiles:
    @pytest.mark.parametrize("nf", [COSH, EXPF, QUAD, power_nfunction(1.5), power_nfunction(3)])
    def test_nfunction_invariants(self, nf):
        assert nf.value(0.0) == 0.0
        t = np.linspace(0.0, 20.0, 401)
        v = nf.value(t)
        assert np.all(np.diff(v) >= 0)
        mid = nf.value(0.5 * (t[:-1] + t[1:]))
        assert np.all(mid <= 0.5 * (v[:-1] + v[1:]) + 1e-12 * (1 + v[1:]))
        # value(t)/t -> 0 at 0 and -> infinity at infinity
        assert nf.value(1e-6) / 1e-6 < min(nf.value(1e-3) / 1e-3, 1e-2)
        big = 600.0 if nf.t_limit < np.inf else 1e6
        assert nf.value(big) / big > max(nf.value(big / 1e3) / (big / 1e3), 1e2)
        d = nf.deriv(t)
        assert np.all(np.diff(d) >= 0)
        assert np.all(d * t >= v - 1e-12 * (1 + v))

    def test_cosh_small_argument_accuracy(self):
        t = 1e-5
        assert COSH.value(t) == pytest.approx(t * t / 2 + t**4 / 24, rel=1e-14)
        assert EXPF.value(t) == pytest.approx(t * t / 2 + t**3 / 6, rel=1e-12)

    def test_overflow_guard(self):
        with pytest.raises(LawOverflowError):
            COSH.value(701.0)
        with pytest.raises(LawOverflowError):
            EXPF.deriv(np.array([1.0, 800.0]))
        assert np.isfinite(COSH.value(700.0))

    def test_power_rejects_p_le_1(self):
        with pytest.raises(ValueError):
            power_nfunction(1.0)


class TestConjugate:
    def test_zero_slope(self):
        assert conjugate(COSH, 0.0) == 0.0
        assert conjugate(bare(COSH), 0.0) == 0.0

    def test_cosh_at_sinh1(self):
        s = np.sinh(1.0)
        oracle = grid_conjugate(lambda t: np.cosh(t) - 1, s)
        assert oracle == pytest.approx(0.63212, abs=1e-5)
        expected = np.sinh(1) - np.cosh(1) + 1
        assert conjugate(COSH, s) == pytest.approx(expected, rel=1e-13)
        assert conjugate(bare(COSH), s) == pytest.approx(expected, rel=1e-11)
        assert abs(oracle - expected) < 1e-10

    def test_exp_at_e_minus_1(self):
        s = np.e - 1
        oracle = grid_conjugate(lambda t: np.exp(t) - t - 1, s)
        assert oracle == pytest.approx(1.0, abs=1e-10)
        assert conjugate(EXPF, s) == pytest.approx(1.0, rel=1e-13)
        assert conjugate(bare(EXPF), s) == pytest.approx(1.0, rel=1e-11)

    def test_numeric_matches_closed_form_on_wide_range(self):
        s = np.geomspace(1e-6, np.sinh(30.0), 60)
        num = conjugate(bare(COSH), s)
        exact = conjugate(COSH, s)
        np.testing.assert_allclose(num, exact, rtol=1e-8)

    def test_power_conjugate_exponent(self):
        nf = power_nfunction(3.0)
        s = np.array([0.5, 2.0, 7.0])
        np.testing.assert_allclose(conjugate(bare(nf), s), s**1.5 / 1.5, rtol=1e-10)

    def test_divergence(self):
        bounded = NFunction(lambda t: np.hypot(1.0, t) - 1,
                            lambda t: np.asarray(t) / np.hypot(1.0, t),
                            "sqrt", slope_sup=1.0)
        with pytest.raises(ConjugateDivergenceError, match="conjugate diverges"):
            conjugate(bounded, 2.0)
        unmarked = NFunction(bounded.value, bounded.deriv, "sqrt")
        with pytest.raises(ConjugateDivergenceError, match="conjugate diverges"):
            conjugate(unmarked, 2.0)

    def test_negative_slope_rejected(self):
        with pytest.raises(ValueError):
            conjugate(COSH, -1.0)

    def test_biconjugate(self):
        twice = conjugate_nfunction(conjugate_nfunction(COSH), numeric=True)
        t = np.linspace(0.0, 10.0, 11)
        np.testing.assert_allclose(twice.value(t), COSH.value(t), rtol=1e-6, atol=1e-12)


class TestYoung:
    def test_equality_cases(self):
        assert abs(young_gap(COSH, 1.0, np.sinh(1.0))) < 1e-10
        assert young_gap(COSH, 0.0, 0.0) == 0.0

    def test_strict_case(self):
        star1 = grid_conjugate(lambda t: np.cosh(t) - 1, 1.0)
        expected = np.cosh(2.0) - 1 + star1 - 2.0
        gap = young_gap(COSH, 2.0, 1.0)
        assert gap > 0
        assert gap == pytest.approx(expected, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 50), st.floats(0, 50))
    def test_young_nonnegative(self, t, s):
        for nf in (COSH, EXPF, QUAD):
            assert young_gap(nf, t, s) >= -1e-10 * (1 + abs(s * t))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 30))
    def test_fenchel_equality(self, t):
        for nf in (COSH, EXPF, QUAD):
            assert abs(young_gap(nf, t, nf.deriv(t))) <= 1e-9 * (1 + nf.value(t))


class TestDelta2:
    def test_quadratic(self):
        rep = delta2_probe(QUAD, 1e6)
        assert rep.satisfied == "yes"
        assert rep.witness_c == pytest.approx(4.0, rel=1e-12)
        t = np.geomspace(rep.witness_K, 1e6, 50)
        assert np.all(QUAD.value(2 * t) <= rep.witness_c * QUAD.value(t) * (1 + 1e-12))

    def test_cosh_fails(self):
        assert delta2_probe(COSH, 100.0).satisfied == "no"

    def test_exp_fails(self):
        assert delta2_probe(EXPF, 1e6).satisfied == "no"

    def test_conjugates_satisfy(self):
        assert delta2_probe(conjugate_nfunction(COSH), 1e6).satisfied == "yes"
        assert delta2_probe(conjugate_nfunction(EXPF), 1e6).satisfied == "yes"

    def test_global_variant(self):
        assert delta2_probe(QUAD, 1e3, threshold=0.0).satisfied == "yes"

    def test_degenerate_is_inconclusive(self):
        zero = NFunction(lambda t: 0.0 * np.asarray(t), lambda t: 0.0 * np.asarray(t), "zero")
        assert delta2_probe(zero, 1e3).satisfied == "inconclusive"

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            delta2_probe(QUAD, 0.5)
        with pytest.raises(ValueError):
            delta2_probe(QUAD, 10.0, ratio_bound=2.0)


class TestSuperquadratic:
    def test_cosh(self):
        rep = superquadratic_growth_check(COSH, 1e6)
        assert rep.satisfied and rep.witness_K > 1 and not rep.equality
        t = np.geomspace(1, 300, 100)
        assert np.all(2 * rep.witness_K * COSH.value(t) <= COSH.value(2 * t) * (1 + 1e-12))

    def test_exp(self):
        rep = superquadratic_growth_check(EXPF, 1e6)
        assert rep.satisfied and rep.witness_K > 1

    def test_quadratic_boundary(self):
        rep = superquadratic_growth_check(QUAD, 1e6)
        assert rep.witness_K == pytest.approx(2.0, rel=1e-12)
        assert rep.equality


class TestLuxemburg:
    def test_zero_field(self):
        assert luxemburg_norm(COSH, [(0.0, 0.5), (0.0, 0.5)], 1.0) == 0.0

    def test_quadratic_unit(self):
        # t^2 (not t^2/2): int (1/lam)^2 = 1 gives lam = 1
        sq = NFunction(lambda t: np.asarray(t) ** 2, lambda t: 2 * np.asarray(t), "t^2")
        assert luxemburg_norm(sq, [(1.0, 1.0)], 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_cosh_unit(self):
        expected = 1.0 / np.arccosh(2.0)
        assert expected == pytest.approx(0.759, abs=1e-3)
        lam = luxemburg_norm(COSH, [(1.0, 0.25)] * 4, 1.0)
        assert lam == pytest.approx(expected, rel=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            luxemburg_norm(COSH, [(np.nan, 1.0)], 1.0)
        with pytest.raises(ValueError):
            luxemburg_norm(COSH, [(1.0, 0.5)], 1.0)
        with pytest.raises(ValueError):
            luxemburg_norm(COSH, [(1.0, -1.0), (1.0, 2.0)], 1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=8),
           st.floats(0.01, 30))
    def test_homogeneity_and_unit_ball(self, values, alpha):
        n = len(values)
        data = [(v, 1.0 / n) for v in values]
        for nf in (COSH, QUAD):
            lam = luxemburg_norm(nf, data, 1.0)
            scaled = luxemburg_norm(nf, [(alpha * v, w) for v, w in data], 1.0)
            assert scaled == pytest.approx(alpha * lam, rel=1e-8, abs=1e-300)
            if lam > 0:
                mod = sum(w * nf.value(abs(v) / lam) for v, w in data)
                assert mod == pytest.approx(1.0, rel=1e-9)
