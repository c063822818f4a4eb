import math

import pytest
from scipy.special import zeta

from models.errors import UnsupportedError
from models.verdicts import Recurrence
from services.analytic import is_lamperti_boundary, lamperti_phase, log_lamperti_phase, space_criterion
from services.analytic.phases import expected_crossings, expected_visits, shell_edge_count, underlying_recurrent
from services.kernels import make_drift_profile
from services.passage import ImpatienceClass, classify, make_schedule


class TestLampertiPhase:
    @pytest.mark.parametrize("c,alpha,expected", [
        (-0.4, 2.0, Recurrence.POSITIVE_RECURRENT),
        (0.25, 5.0, Recurrence.NULL_RECURRENT),
        (0.6, 1.0, Recurrence.TRANSIENT_UNDERLYING),
        (-0.3, 0.5, Recurrence.POSITIVE_RECURRENT),
        (-0.1, 0.5, Recurrence.NULL_RECURRENT),
        (0.5, 3.0, Recurrence.NULL_RECURRENT),
        (0.0, 2.0, Recurrence.NULL_RECURRENT),
    ])
    def test_phase(self, c, alpha, expected):
        assert lamperti_phase(c, alpha) is expected

    def test_boundaries(self):
        assert is_lamperti_boundary(0.5, 2.0)
        assert is_lamperti_boundary(0.0, 2.0)
        assert is_lamperti_boundary(-0.25, 0.5)
        assert not is_lamperti_boundary(0.1, 2.0)
        assert not is_lamperti_boundary(0.0, 0.5)
        assert is_lamperti_boundary(0.01, 2.0, eps=0.02)


class TestLogLamperti:
    def test_strongly_impatient_inward(self):
        assert log_lamperti_phase(-1.0, ImpatienceClass.STRONGLY_IMPATIENT) is Recurrence.POSITIVE_RECURRENT

    def test_accepts_classification(self):
        cls = classify(make_schedule("Power", 2.0))
        assert log_lamperti_phase(-1.0, cls) is Recurrence.POSITIVE_RECURRENT

    @pytest.mark.parametrize("kind", list(ImpatienceClass))
    def test_weak_inward_drift_is_null(self, kind):
        assert log_lamperti_phase(0.0, kind) is Recurrence.NULL_RECURRENT
        assert log_lamperti_phase(-0.5, kind) is Recurrence.NULL_RECURRENT

    def test_weakly_impatient_is_open(self):
        assert log_lamperti_phase(-1.0, ImpatienceClass.WEAKLY_IMPATIENT) is Recurrence.INCONCLUSIVE


class TestUnderlyingRecurrence:
    @pytest.mark.parametrize("kind,param,expected", [
        ("Lamperti", 0.5, True),
        ("Lamperti", 0.6, False),
        ("Zero", 0.0, True),
        ("Constant", -0.2, True),
        ("Constant", 0.2, False),
        ("LogLamperti", 3.0, True),
    ])
    def test_builtin_shapes(self, kind, param, expected):
        assert underlying_recurrent(make_drift_profile(kind, param, x_min=4)) is expected


class TestSpaceCriterion:
    def test_line_square_decay(self):
        v = space_criterion("Z", 2.0)
        assert v.recurrence is Recurrence.POSITIVE_RECURRENT
        assert v.edge_sum.value == pytest.approx(math.pi ** 2 / 3.0, abs=1e-8)
        assert v.detail["closed_form"] == pytest.approx(math.pi ** 2 / 3.0)

    def test_plane_cubic_decay(self):
        v = space_criterion("Z2", 3.0)
        expected = 4.0 * zeta(2.0) - 2.0 * zeta(3.0)
        assert v.recurrence is Recurrence.POSITIVE_RECURRENT
        assert v.edge_sum.value == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("graph,alpha", [("Z2", 1.5), ("Z", 0.5), ("Z2", 2.0), ("Z", 1.0)])
    def test_null_recurrent(self, graph, alpha):
        v = space_criterion(graph, alpha)
        assert v.recurrence is Recurrence.NULL_RECURRENT
        assert not v.edge_sum.converged
        assert v.detail["closed_form"] == math.inf

    def test_shells(self):
        assert list(shell_edge_count("Z2", [0, 1, 2])) == [4.0, 12.0, 20.0]
        assert list(shell_edge_count("Z", [0, 5])) == [2.0, 2.0]
        assert expected_crossings("Z2") == 0.5
        assert expected_crossings("Z") == 1.0

    def test_expected_visits(self):
        assert expected_visits("Z") == expected_visits("Z2") == 1.0
        with pytest.raises(UnsupportedError):
            expected_visits("Z3")

    def test_to_dict(self):
        out = space_criterion("Z", 2.0).to_dict()
        assert out["graph"] == "Z"
        assert out["recurrence"] == "PositiveRecurrent"
        assert out["verdict"] == "Converged"

    def test_unsupported_graph(self):
        with pytest.raises(UnsupportedError):
            space_criterion("Z3", 4.0)
