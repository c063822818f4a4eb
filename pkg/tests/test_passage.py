import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import ScheduleError
from models.verdicts import Verdict
from services.passage import (
    ImpatienceClass,
    ScheduleTag,
    classify,
    exact_passage_radius,
    make_schedule,
    passage_radius,
    phi,
)

ZETA_2 = math.pi ** 2 / 6.0

BUILT_INS = [
    ("Power", 2.0), ("Power", 0.5), ("Geometric", 0.5), ("Geometric", 2.0),
    ("Factorial", 0.0), ("ZeroTail", 0.0), ("Constant", 0.0), ("Logarithmic", 0.0),
]


class TestMakeSchedule:
    def test_power_values(self):
        s = make_schedule("Power", 2.0)
        assert s.value(0) == 1.0
        assert s.value(1) == pytest.approx(1.0)
        assert s.value(2) == pytest.approx(0.25)
        assert s.value(3) == pytest.approx(1.0 / 9.0)

    def test_constant_star_values(self):
        s = make_schedule("Constant")
        np.testing.assert_allclose(s.star_values(np.arange(1, 20)), 2.0)

    def test_zero_tail_total(self):
        s = make_schedule("ZeroTail")
        assert s.infinitely_impatient
        assert s.closed_form_total() == 1.0
        assert s.value(5) == 0.0

    def test_geometric_tags(self):
        assert make_schedule("Geometric", 0.5).tag is ScheduleTag.IMPATIENT
        assert make_schedule("Geometric", 2.0).tag is ScheduleTag.AGEING
        assert make_schedule("Factorial").value(4) == pytest.approx(24.0)

    def test_custom(self):
        s = make_schedule("Custom", sequence=[1.0, 0.5, 0.25])
        assert s.tag is ScheduleTag.IMPATIENT
        assert s.value(10) == pytest.approx(0.25)
        with pytest.raises(ScheduleError):
            make_schedule("Custom", sequence=[2.0, 1.0])
        with pytest.raises(ScheduleError):
            make_schedule("Custom", sequence=[1.0, 0.5, 0.7])

    @pytest.mark.parametrize("kind,param", [("Power", 0.0), ("Geometric", -1.0), ("Nope", 1.0)])
    def test_bad_parameters(self, kind, param):
        with pytest.raises(ScheduleError):
            make_schedule(kind, param)

    @pytest.mark.parametrize("kind,param", BUILT_INS)
    def test_regrouping_identity(self, kind, param):
        s = make_schedule(kind, param)
        for j_max in (1, 5, 40):
            stars = s.star_values(np.arange(1, j_max + 1)).sum()
            plain = s.values(np.arange(0, 2 * j_max)).sum()
            assert stars == pytest.approx(plain, rel=1e-12)


class TestClassify:
    def test_power_two_is_strongly_impatient(self):
        cls = classify(make_schedule("Power", 2.0))
        assert cls.kind is ImpatienceClass.STRONGLY_IMPATIENT
        assert cls.total == pytest.approx(1.0 + ZETA_2, abs=1e-8)
        assert cls.total_low <= 1.0 + ZETA_2 <= cls.total_high

    def test_constant_is_weak(self):
        assert classify(make_schedule("Constant")).kind is ImpatienceClass.WEAKLY_IMPATIENT

    def test_power_half_is_weak(self):
        assert classify(make_schedule("Power", 0.5)).kind is ImpatienceClass.WEAKLY_IMPATIENT

    def test_zero_tail(self):
        cls = classify(make_schedule("ZeroTail"))
        assert cls.kind is ImpatienceClass.INFINITELY_IMPATIENT
        assert cls.total == 1.0

    def test_geometric_closed_form(self):
        cls = classify(make_schedule("Geometric", 0.5))
        assert cls.total == pytest.approx(2.0)

    def test_ageing(self):
        assert classify(make_schedule("Factorial")).kind is ImpatienceClass.AGEING
        assert classify(make_schedule("Geometric", 3.0)).kind is ImpatienceClass.AGEING

    def test_horizon_precondition(self):
        with pytest.raises(ValueError):
            classify(make_schedule("Power", 3.0), horizon=0)


class TestPassageRadius:
    def test_closed_forms(self):
        assert passage_radius(make_schedule("Constant")).value == 1.0
        assert passage_radius(make_schedule("Factorial")).value == 0.0
        assert passage_radius(make_schedule("Geometric", 2.0)).value == pytest.approx(0.25)
        assert passage_radius(make_schedule("Power", 3.0)).value == 1.0
        assert math.isinf(passage_radius(make_schedule("ZeroTail")).value)

    def test_numeric_estimate_matches_geometric(self):
        estimate = passage_radius(make_schedule("Geometric", 2.0), horizon=4096, exact=False)
        assert not estimate.exact
        assert estimate.stable
        assert estimate.value == pytest.approx(0.25, rel=1e-3)

    def test_horizon_precondition(self):
        with pytest.raises(ValueError):
            passage_radius(make_schedule("Constant"), horizon=4)

    @pytest.mark.parametrize("kind,param", [("Power", 2.0), ("Power", 0.5), ("Geometric", 0.5),
                                            ("Constant", 0.0), ("Logarithmic", 0.0)])
    def test_impatience_and_slow_ageing_keep_radius_at_least_one(self, kind, param):
        assert exact_passage_radius(make_schedule(kind, param)) >= 1.0


class TestPhi:
    def test_constant_at_half(self):
        v = phi(make_schedule("Constant"), 0.5)
        assert v.verdict is Verdict.CONVERGED
        assert v.value == pytest.approx(2.0, abs=1e-9)

    def test_zero_argument(self):
        v = phi(make_schedule("Factorial"), 0.0)
        assert v.converged and v.value == 0.0

    def test_power_two_at_one_is_total(self):
        v = phi(make_schedule("Power", 2.0), 1.0, abs_tol=1e-6)
        assert v.converged
        assert v.value == pytest.approx(1.0 + ZETA_2, abs=1e-6)

    def test_outside_radius_diverges(self):
        assert phi(make_schedule("Constant"), 1.0).diverged
        assert phi(make_schedule("Geometric", 2.0), 0.3).diverged
        assert phi(make_schedule("Factorial"), 0.01).diverged

    def test_geometric_closed_form(self):
        # s*_j = 3 4^(j-1) for a = 2, so phi(z) = 3z / (1 - 4z)
        v = phi(make_schedule("Geometric", 2.0), 0.1)
        assert v.value == pytest.approx(0.3 / 0.6, rel=1e-9)

    def test_negative_argument(self):
        with pytest.raises(ValueError):
            phi(make_schedule("Constant"), -0.1)

    @settings(max_examples=30, deadline=None)
    @given(a=st.floats(min_value=0.0, max_value=0.98), b=st.floats(min_value=0.0, max_value=0.98))
    def test_monotone_in_z(self, a, b):
        s = make_schedule("Power", 1.5)
        lo, hi = sorted((a, b))
        v_lo, v_hi = phi(s, lo, abs_tol=1e-6), phi(s, hi, abs_tol=1e-6)
        if v_lo.converged and v_hi.converged:
            assert v_lo.value <= v_hi.value + 1e-6
