import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import DriftRangeError
from services.analytic import (
    drift_functionals,
    excursion_time,
    expected_M,
    hitting_profile,
    orbit_excursion_bound,
    resistors,
)
from services.analytic.network import log_resistors, orbit_inward_floor
from services.kernels import Domain, DriftProfile, make_drift_kernel, make_drift_profile
from services.kernels.nearest_neighbor import NearestNeighborKernel
from services.passage import make_schedule

drift_tables = st.lists(st.floats(min_value=-0.9, max_value=0.9), min_size=1, max_size=30)


def inward_half():
    return make_drift_profile("Constant", -0.5)


def inward_half_reference(terms=60):
    # R_x = 3^x, B(x) = (3^(x+1) - 3)/2
    return sum(2.0 / (3.0 ** (x + 1) - 1.0) for x in range(1, terms))


class TestResistors:
    def test_unit_resistors(self):
        np.testing.assert_array_equal(resistors(make_drift_profile("Zero"), 20), np.ones(21))

    def test_lamperti_third(self):
        r = resistors(make_drift_profile("Lamperti", 1.0 / 3.0), 2)
        assert r[1] == pytest.approx(0.5)
        assert r[2] == pytest.approx(5.0 / 14.0)

    def test_lamperti_power_decay(self):
        c = 0.3
        r = resistors(make_drift_profile("Lamperti", c), 1_000_000)
        m = np.arange(1000, 1_000_001)
        scaled = r[m] * m ** (2.0 * c)
        assert scaled.max() / scaled.min() < 1.01

    def test_accepts_kernel(self):
        kernel = make_drift_kernel("Lamperti", 1.0 / 3.0)
        np.testing.assert_allclose(resistors(kernel, 5), resistors(kernel.right, 5))

    def test_rejects_drift_outside_range(self):
        with pytest.raises(DriftRangeError):
            log_resistors(DriftProfile("Constant", 1.0), 5)


class TestHittingProfile:
    def test_simple_walk(self):
        hp = hitting_profile(make_drift_profile("Zero"), 100)
        m = np.arange(1, 101)
        np.testing.assert_allclose(hp.p[1:], 1.0 / m, rtol=1e-13)
        np.testing.assert_allclose(hp.q[1:], m / (m + 1.0), rtol=1e-13)

    def test_horizon_precondition(self):
        with pytest.raises(ValueError):
            hitting_profile(make_drift_profile("Zero"), 1)

    @settings(max_examples=50)
    @given(table=drift_tables)
    def test_p_recursion(self, table):
        hp = hitting_profile(make_drift_profile("Tabulated", table=table), 60)
        np.testing.assert_allclose(hp.p[2:], hp.p[1:-1] * hp.q[1:-1], rtol=1e-12)
        assert (hp.p[1:] > 0.0).all() and (hp.p[1:] <= 1.0).all()
        assert (np.diff(hp.p[1:]) <= 0.0).all()


class TestDriftFunctionals:
    def test_simple_walk(self):
        f = drift_functionals(make_drift_profile("Zero"), horizon=4096)
        np.testing.assert_allclose(f.b_right[:50], np.arange(50.0), atol=1e-9)
        assert f.i_right.diverged

    def test_inward_half(self):
        f = drift_functionals(inward_half(), horizon=4096)
        assert f.b_right[3] == pytest.approx((3.0 ** 4 - 3.0) / 2.0)
        assert f.i_right.converged
        assert f.i_right.value == pytest.approx(inward_half_reference(), abs=1e-10)

    def test_lamperti_inward_converges(self):
        f = drift_functionals(make_drift_profile("Lamperti", -0.3), tol=1e-4)
        assert f.i_right.converged
        assert (np.diff(f.b_right) > 0.0).all()

    def test_separate_left_side(self):
        kernel = NearestNeighborKernel(Domain.FULL_LINE, make_drift_profile("Zero"), inward_half())
        f = drift_functionals(kernel, horizon=4096)
        assert f.i_right.diverged
        assert f.i_left.converged


class TestExpectedM:
    def test_simple_walk_diverges(self):
        assert expected_M(make_drift_profile("Zero")).diverged

    def test_inward_half(self):
        v = expected_M(inward_half())
        assert v.converged
        assert v.value == pytest.approx(1.0 + inward_half_reference(), abs=1e-10)

    def test_tail_identity(self):
        hp = hitting_profile(inward_half(), 200)
        # P(M > x) = p_{x+1}
        assert 1.0 + hp.p[2:].sum() == pytest.approx(expected_M(inward_half()).value, abs=1e-10)


class TestExcursionTime:
    def test_constant_schedule_inward_half(self):
        # return time of the reflected walk: 1 / pi(0) = 3
        v = excursion_time(inward_half(), make_schedule("Constant"), m_horizon=4096)
        assert v.converged
        assert v.value == pytest.approx(3.0, abs=1e-9)

    @pytest.mark.parametrize("kind,param", [("Constant", 0.0), ("Power", 2.0), ("ZeroTail", 0.0)])
    def test_simple_walk_diverges(self, kind, param):
        v = excursion_time(make_drift_profile("Zero"), make_schedule(kind, param), m_horizon=8192)
        assert v.diverged

    def test_lamperti_positive_recurrent_point(self):
        v = excursion_time(make_drift_profile("Lamperti", -0.3), make_schedule("Power", 2.0),
                           m_horizon=8192, tol=1e-6, rel_tol=1e-2)
        assert v.converged

    def test_lamperti_null_recurrent_point(self):
        v = excursion_time(make_drift_profile("Lamperti", 0.25), make_schedule("Power", 5.0),
                           m_horizon=8192, tol=1e-6, rel_tol=1e-2)
        assert v.diverged

    def test_full_line_averages_sides(self):
        kernel = NearestNeighborKernel(Domain.FULL_LINE, inward_half(), make_drift_profile("Constant", -0.25))
        both = excursion_time(kernel, make_schedule("Constant"), m_horizon=4096)
        right = excursion_time(inward_half(), make_schedule("Constant"), m_horizon=4096)
        left = excursion_time(make_drift_profile("Constant", -0.25), make_schedule("Constant"), m_horizon=4096)
        assert both.value == pytest.approx(0.5 * (right.value + left.value), abs=1e-9)

    def test_symmetric_full_line_matches_half_line(self):
        kernel = make_drift_kernel("Constant", -0.5, domain=Domain.FULL_LINE)
        assert excursion_time(kernel, make_schedule("Constant"), m_horizon=4096).value == pytest.approx(3.0, abs=1e-9)


def test_orbit_excursion_bound_converges():
    v = orbit_excursion_bound()
    assert v.converged
    assert v.value > 1.0


def test_orbit_inward_floor():
    q = orbit_inward_floor(np.array([1, 2, 10, 60, 2000]))
    assert q[0] == pytest.approx(0.4)
    assert np.all(np.diff(q) > 0.0)
    assert np.all(q < 2.0 / 3.0)
    assert q[-1] == pytest.approx(2.0 / 3.0, abs=1e-3)
