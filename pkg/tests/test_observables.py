import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kaondecoh.evolution import KaonParams
from kaondecoh.observables import (
    Strangeness,
    TwoTimeOutcome,
    ZetaKind,
    ZetaModel,
    asymmetry_from_probs,
    asymmetry_lambda,
    asymmetry_qm,
    asymmetry_zeta,
    prob_lambda,
    prob_lambda_sequential,
    prob_zeta,
    zeta_eval,
)

PLUS, MINUS = Strangeness.PLUS, Strangeness.MINUS
PAIRS = list(itertools.product(Strangeness, Strangeness))
times = st.floats(0, 8, allow_nan=False)
rates = st.floats(0, 5, allow_nan=False)


def all_probs(t_l, t_r, p, fn=prob_lambda, **kw):
    return {(a, b): fn(TwoTimeOutcome(a, b, t_l, t_r), p, **kw) for a, b in PAIRS}


def incoherent_sum(t_l, t_r, p):
    # two like + two unlike outcomes: the +-interference terms cancel pairwise
    return 0.5 * (math.exp(-p.gamma_S * t_l - p.gamma_L * t_r) + math.exp(-p.gamma_L * t_l - p.gamma_S * t_r))


class TestOutcome:
    def test_dt(self):
        assert TwoTimeOutcome(PLUS, MINUS, 2.0, 0.5).dt == 1.5

    def test_negative_time(self):
        with pytest.raises(ValueError):
            TwoTimeOutcome(PLUS, PLUS, -0.1, 0.0)


class TestProbLambda:
    @pytest.mark.parametrize("t", [0.1, 0.55, 2.0])
    def test_equal_time_like(self, params, t):
        expected = 0.25 * math.exp(-2 * params.gamma * t) * (1 - math.exp(-params.lam * t))
        for s in Strangeness:
            assert prob_lambda(TwoTimeOutcome(s, s, t, t), params) == pytest.approx(expected, rel=1e-12, abs=1e-17)

    def test_qm_perfect_anticorrelation(self):
        p = KaonParams(lam=0.0)
        for t in (0.0, 0.3, 3.0):
            assert abs(prob_lambda(TwoTimeOutcome(PLUS, PLUS, t, t), p)) < 1e-17

    @given(times, times, rates)
    def test_sum_of_outcomes(self, t_l, t_r, lam):
        p = KaonParams(lam=lam)
        total = sum(all_probs(t_l, t_r, p).values())
        assert total == pytest.approx(incoherent_sum(t_l, t_r, p), rel=1e-12, abs=1e-300)

    @given(times, times, rates)
    def test_probabilities_bounded(self, t_l, t_r, lam):
        for v in all_probs(t_l, t_r, KaonParams(lam=lam)).values():
            assert 0.0 <= v <= 0.5 + 1e-15

    @given(times, times, rates)
    def test_swap_symmetry(self, t_l, t_r, lam):
        p = KaonParams(lam=lam)
        for a, b in PAIRS:
            o = TwoTimeOutcome(a, b, t_l, t_r)
            assert prob_lambda(o, p) == prob_lambda(o.swapped(), p)

    def test_singlet_at_origin(self):
        p = KaonParams(lam=0.4)
        probs = all_probs(0.0, 0.0, p)
        assert probs[(PLUS, MINUS)] == probs[(MINUS, PLUS)] == pytest.approx(0.5)
        assert probs[(PLUS, PLUS)] == probs[(MINUS, MINUS)] == 0.0

    def test_charge_symmetry(self, params):
        assert prob_lambda(TwoTimeOutcome(PLUS, PLUS, 1.2, 0.4), params) == prob_lambda(TwoTimeOutcome(MINUS, MINUS, 1.2, 0.4), params)
        assert prob_lambda(TwoTimeOutcome(PLUS, MINUS, 1.2, 0.4), params) == prob_lambda(TwoTimeOutcome(MINUS, PLUS, 1.2, 0.4), params)

    @pytest.mark.parametrize("lam", [0.0, 0.25, 0.59, 2.0])
    def test_sequential_measurement_pipeline(self, lam):
        p = KaonParams(lam=lam)
        for t_l, t_r in itertools.product([0.0, 0.3, 0.55, 1.925, 4.0], repeat=2):
            for a, b in PAIRS:
                o = TwoTimeOutcome(a, b, t_l, t_r)
                assert prob_lambda_sequential(o, p) == pytest.approx(prob_lambda(o, p), abs=1e-10)


class TestProbZeta:
    @given(times, times)
    def test_zero_zeta_is_qm(self, t_l, t_r):
        p = KaonParams()
        for a, b in PAIRS:
            o = TwoTimeOutcome(a, b, t_l, t_r)
            assert prob_zeta(o, p, 0.0) == prob_lambda(o, p.with_lambda(0.0))

    def test_total_decoherence_kills_interference(self, params):
        like = prob_zeta(TwoTimeOutcome(PLUS, PLUS, 1.0, 0.3), params, 1.0)
        unlike = prob_zeta(TwoTimeOutcome(PLUS, MINUS, 1.0, 0.3), params, 1.0)
        assert like == unlike

    @given(times, times, rates)
    def test_min_time_correspondence(self, t_l, t_r, lam):
        p = KaonParams(lam=lam)
        zeta = 1 - math.exp(-lam * min(t_l, t_r))
        for a, b in PAIRS:
            o = TwoTimeOutcome(a, b, t_l, t_r)
            assert prob_zeta(o, p, zeta) == pytest.approx(prob_lambda(o, p), abs=1e-12)

    @pytest.mark.parametrize("zeta", [-0.01, 1.01])
    def test_range(self, params, zeta):
        with pytest.raises(ValueError):
            prob_zeta(TwoTimeOutcome(PLUS, PLUS, 1, 1), params, zeta)


class TestAsymmetry:
    def test_qm_at_zero(self, params):
        assert asymmetry_qm(0.0, params) == 1.0

    @given(st.floats(-20, 20, allow_nan=False))
    def test_qm_even(self, dt):
        p = KaonParams()
        assert asymmetry_qm(dt, p) == asymmetry_qm(-dt, p)

    def test_qm_first_zero_crossing(self, params):
        dt = math.pi / params.delta_m
        expected = -1.0 / math.cosh(params.delta_gamma * math.pi / (2 * params.delta_m))
        assert asymmetry_qm(dt, params) == pytest.approx(expected, rel=1e-13)

    def test_qm_bounded(self, params):
        a = asymmetry_qm(np.linspace(-30, 30, 1001), params)
        assert np.all(np.abs(a) <= 1)

    def test_dt_scale(self, params):
        assert asymmetry_qm(1.0, params, dt_scale=2.0) == asymmetry_qm(2.0, params)

    def test_lambda_zero_reduces_to_qm(self):
        p = KaonParams(lam=0.0)
        assert asymmetry_lambda(1.7, 0.4, p) == pytest.approx(asymmetry_qm(1.3, p), rel=1e-15)

    @pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
    def test_lambda_equal_times(self, params, t):
        assert asymmetry_lambda(t, t, params) == pytest.approx(math.exp(-params.lam * t), rel=1e-14)

    def test_lambda_cplear_point(self):
        p = KaonParams(lam=0.25)
        a = asymmetry_lambda(0.55, 0.55, p)
        assert a == pytest.approx(math.exp(-0.1375), rel=1e-14)
        assert a == pytest.approx(0.8715, abs=5e-5)
        assert asymmetry_from_probs(all_probs(0.55, 0.55, p)) == pytest.approx(a, abs=1e-12)

    def test_ratio_identity_grid(self):
        for lam in (0.0, 0.25, 0.59, 2.0):
            p = KaonParams(lam=lam)
            for t_l, t_r in itertools.product(np.linspace(0, 5, 11), repeat=2):
                assert asymmetry_from_probs(all_probs(t_l, t_r, p)) == pytest.approx(asymmetry_lambda(t_l, t_r, p), abs=1e-12)

    def test_vectorized(self, params):
        t = np.linspace(0, 2, 5)
        np.testing.assert_allclose(asymmetry_lambda(t, t, params), np.exp(-params.lam * t))

    def test_negative_time(self, params):
        with pytest.raises(ValueError):
            asymmetry_lambda(-1.0, 0.0, params)


class TestZeta:
    @pytest.mark.parametrize("kind", ["min", "sum", "single"])
    def test_no_decoherence(self, kind):
        assert zeta_eval(ZetaModel(kind, lam=0.0), 1.0, 1.0) == 0.0

    def test_total_decoherence_limit(self):
        assert zeta_eval(ZetaModel("min", lam=1e6), 2.0, 1.0) == 1.0

    def test_cplear_value(self):
        z = zeta_eval(ZetaModel("min", lam=0.25), 1.925, 0.55)
        assert z == pytest.approx(1 - math.exp(-0.1375), rel=1e-14)
        assert z == pytest.approx(0.1285, abs=5e-5)

    def test_single_time_needs_equal_times(self):
        with pytest.raises(ValueError):
            zeta_eval(ZetaModel("single", lam=0.2), 1.0, 2.0)
        assert zeta_eval(ZetaModel("single", lam=0.2), 2.0, 2.0) == pytest.approx(1 - math.exp(-0.4))

    @given(times, times, rates)
    def test_range(self, t_l, t_r, lam):
        for kind in ("min", "sum"):
            assert 0.0 <= zeta_eval(ZetaModel(kind, lam=lam), t_l, t_r) <= 1.0

    def test_constant_validation(self):
        with pytest.raises(ValueError):
            ZetaModel("const", zeta=1.5)

    def test_negative_times(self):
        with pytest.raises(ValueError):
            zeta_eval(ZetaModel("min", lam=0.1), -1.0, 1.0)


class TestAsymmetryZeta:
    @given(times, times, rates)
    def test_min_model_is_lambda_model(self, t_l, t_r, lam):
        p = KaonParams(lam=lam)
        got = asymmetry_zeta(t_l, t_r, p, ZetaModel(ZetaKind.TWO_PARTICLE_MIN, lam=lam))
        assert got == pytest.approx(asymmetry_lambda(t_l, t_r, p), abs=1e-14)

    @pytest.mark.parametrize("t", [0.2, 1.0])
    def test_sum_model_equal_times(self, params, t):
        got = asymmetry_zeta(t, t, params, ZetaModel("sum", lam=params.lam))
        assert got == pytest.approx(math.exp(-2 * params.lam * t), rel=1e-14)

    def test_constant(self, params):
        assert asymmetry_zeta(0.7, 0.7, params, ZetaModel("const", zeta=0.13)) == pytest.approx(0.87, rel=1e-14)
