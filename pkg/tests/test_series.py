import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.verdicts import SeriesVerdict, Verdict, combine_verdicts
from services.series import (
    block_layout,
    certify_series,
    harmonic_witness,
    power_series_bracket,
    tail_bounds,
    tail_bounds_with_method,
    zeta_tail_bracket,
)


class TestCertifySeries:
    def test_geometric_converges(self):
        v = certify_series(lambda k: 0.5 ** k, start=1, abs_tol=1e-12)
        assert v.verdict is Verdict.CONVERGED
        assert v.value == pytest.approx(1.0, abs=1e-12)
        assert v.tail_estimate < 1e-12

    def test_harmonic_diverges(self):
        v = certify_series(lambda k: 1.0 / k, start=1)
        assert v.diverged
        assert v.value is None

    def test_infinite_term_diverges(self):
        v = certify_series(lambda k: np.where(k > 10, np.inf, 1.0), start=1)
        assert v.diverged

    def test_zeta_with_tail_bracket(self):
        v = certify_series(lambda k: k ** -2.0, start=1, abs_tol=1e-10,
                           tail_bracket=lambda n: zeta_tail_bracket(2.0, n))
        assert v.converged
        assert v.value == pytest.approx(math.pi ** 2 / 6.0, abs=1e-10)

    def test_power_law_extrapolation(self):
        v = certify_series(lambda k: k ** -3.0, start=1, abs_tol=1e-8, horizon=1 << 20)
        assert v.converged
        assert v.value == pytest.approx(1.2020569031595942, abs=1e-8)

    def test_borderline_is_inconclusive(self):
        # 1/(k log^2 k) converges, too slowly for any tail bound here
        v = certify_series(lambda k: 1.0 / (k * np.log(k + 1.0) ** 2), start=1,
                           abs_tol=1e-10, horizon=4096)
        assert v.inconclusive

    def test_interval_terms_widen_the_tail(self):
        v = certify_series(lambda k: (0.5 ** k, np.full(k.shape, 1e-14)), start=1, abs_tol=1e-9)
        assert v.converged
        assert v.tail_estimate >= 1e-14

    def test_tail_method_is_reported(self):
        geometric = certify_series(lambda k: 0.5 ** k, start=1, abs_tol=1e-12)
        assert geometric.tail_method == "geometric"
        assert geometric.to_dict()["tail_method"] == "geometric"
        zeta = certify_series(lambda k: k ** -2.0, start=1, abs_tol=1e-10,
                              tail_bracket=lambda n: zeta_tail_bracket(2.0, n))
        assert zeta.tail_method == "bound"
        assert SeriesVerdict.exact(1.0).to_dict()["tail_method"] == "exact"

    def test_relative_tolerance(self):
        def terms(k):
            return k ** -2.0

        def tail(n):
            return zeta_tail_bracket(2.0, n)

        strict = certify_series(terms, start=1, abs_tol=1e-20, horizon=1 << 14, tail_bracket=tail)
        loose = certify_series(terms, start=1, abs_tol=1e-20, rel_tol=1e-2, horizon=1 << 14,
                               tail_bracket=tail)
        assert not strict.converged
        assert loose.converged

    @settings(max_examples=40)
    @given(r=st.floats(min_value=0.01, max_value=0.9))
    def test_geometric_values(self, r):
        v = certify_series(lambda k: r ** k, start=0, abs_tol=1e-9)
        assert v.converged
        assert v.value == pytest.approx(1.0 / (1.0 - r), abs=1e-8)


class TestHelpers:
    def test_harmonic_witness(self):
        k = np.arange(1, 4097, dtype=np.float64)
        assert harmonic_witness(1.0 / k, 1)
        assert not harmonic_witness(k ** -1.5, 1)

    def test_tail_bounds_geometric(self):
        vals = 0.5 ** np.arange(1, 65, dtype=np.float64)
        low, high = tail_bounds(vals, 1)
        assert low == 0.0
        assert high >= 0.5 ** 64

    def test_tail_bounds_all_zero(self):
        assert tail_bounds(np.zeros(16), 1) == (0.0, 0.0)

    def test_tail_methods(self):
        k = np.arange(1, 1025, dtype=np.float64)
        assert tail_bounds_with_method(0.5 ** k, 1)[2] == "geometric"
        assert tail_bounds_with_method(k ** -3.0, 1)[2] == "power_law"
        assert tail_bounds_with_method(np.zeros(16), 1)[2] == "underflow"
        bracketed = tail_bounds_with_method(k ** -2.0, 1, lambda n: zeta_tail_bracket(2.0, n))
        assert bracketed[2] == "bound"
        assert tail_bounds_with_method(k ** -1.0, 1) is None

    def test_zeta_tail_bracket(self):
        low, high = zeta_tail_bracket(2.0, 10)
        exact = math.pi ** 2 / 6.0 - sum(m ** -2.0 for m in range(1, 11))
        assert low <= exact <= high
        assert zeta_tail_bracket(1.0, 10) is None

    def test_block_layout_covers_range(self):
        starts, lengths = block_layout(10, 1000, 1.1)
        assert starts[0] == 10
        assert starts[-1] + lengths[-1] - 1 == 1000
        np.testing.assert_array_equal(starts[1:], starts[:-1] + lengths[:-1])

    def test_power_series_bracket_geometric(self):
        # sum_{j>=1} z^j = z / (1 - z)
        z = np.array([0.1, 0.5, 0.9, 0.99])
        low, high, used = power_series_bracket(lambda j: np.zeros(len(j)), z, lambda j: 0.0)
        exact = z / (1.0 - z)
        assert (low <= exact * (1 + 1e-12)).all()
        assert (high >= exact * (1 - 1e-12)).all()
        np.testing.assert_allclose(low, exact, rtol=1e-9)
        assert (used >= 1).all()


class TestVerdicts:
    def test_shifted(self):
        v = SeriesVerdict.exact(2.0).shifted(1.5)
        assert v.value == 3.5 and v.partial_sum == 3.5

    def test_to_dict(self):
        assert SeriesVerdict.divergent().to_dict() == {
            "verdict": "Diverged", "terms_used": 0, "tail_estimate": None,
        }

    def test_combine(self):
        a, b = SeriesVerdict.exact(1.0), SeriesVerdict.exact(3.0)
        assert combine_verdicts([a, b], [0.5, 0.5]).value == 2.0
        assert combine_verdicts([a, SeriesVerdict.divergent()]).diverged
        pending = SeriesVerdict(Verdict.INCONCLUSIVE, 1.0, 10, None, None)
        assert combine_verdicts([a, pending]).inconclusive
