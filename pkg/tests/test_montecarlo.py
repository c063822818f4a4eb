import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import HorizonError, UnsupportedError
from services.analytic import hitting_profile
from services.kernels import Domain, make_drift_kernel, make_drift_profile, make_lattice_kernel
from services.montecarlo import (
    RngContract,
    SpaceExcursionStats,
    StreamingMoments,
    clock_range_trace,
    coin_turning,
    coin_turning_distribution,
    equivalence_gap,
    exact_small_n,
    excursion_stats,
    inf_imp_occupation,
    ks_arcsine,
    ks_uniform,
    make_rng,
    range_trace,
    run_excursion,
    space_dependent_excursion,
    split_replicas,
    srw_occupation,
    stream_contracts,
    successive_excursions,
)
from services.montecarlo.stats import binomial_band, family_sigmas, total_variation
from services.passage import make_schedule


def inward_walk():
    return make_drift_kernel("Constant", -0.5)


class TestRng:
    def test_same_contract_same_draws(self):
        np.testing.assert_array_equal(make_rng(7).random(16), make_rng(7).random(16))
        assert RngContract(7, 3) == RngContract(7, 3)

    def test_streams_differ(self):
        a, b = (c.generator().random(8) for c in stream_contracts(11, 2))
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("seed,stream", [(-1, 0), (1 << 64, 0), (1, -1)])
    def test_bounds(self, seed, stream):
        with pytest.raises(ValueError):
            RngContract(seed, stream)

    def test_split_replicas(self):
        assert split_replicas(10, 3) == [4, 3, 3]
        assert split_replicas(2, 4) == [1, 1, 0, 0]
        with pytest.raises(ValueError):
            stream_contracts(1, 0)


class TestStats:
    @settings(max_examples=50)
    @given(xs=st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=2, max_size=60),
           cut=st.integers(min_value=0, max_value=60))
    def test_merge_matches_batch(self, xs, cut):
        left, right = StreamingMoments(), StreamingMoments()
        for x in xs[:cut]:
            left.update(x)
        right.update_batch(xs[cut:])
        left.merge(right)
        assert left.n == len(xs)
        assert left.mean == pytest.approx(float(np.mean(xs)), rel=1e-9, abs=1e-6)
        assert left.variance == pytest.approx(float(np.var(xs, ddof=1)), rel=1e-7, abs=1e-3)
        assert left.max == max(xs)

    def test_small_samples(self):
        m = StreamingMoments()
        assert math.isnan(m.variance)
        assert m.to_dict()["mean"] is None

    def test_ks_uniform(self):
        u = make_rng(3).random(20_000)
        assert ks_uniform(u).passes(0.02)
        assert not ks_uniform(u ** 2).passes(0.02)

    def test_ks_arcsine(self):
        u = make_rng(4).random(20_000)
        assert ks_arcsine(np.sin(0.5 * np.pi * u) ** 2).passes(0.02)
        assert not ks_arcsine(u).passes(0.02)
        with pytest.raises(ValueError):
            ks_arcsine([])

    def test_family_sigmas(self):
        assert family_sigmas(3.0, 1) == pytest.approx(3.0)
        assert family_sigmas(3.0, 40) == pytest.approx(3.99, abs=0.02)
        assert family_sigmas(3.0, 800) > family_sigmas(3.0, 40)
        with pytest.raises(ValueError):
            family_sigmas(3.0, 0)

    def test_total_variation(self):
        assert total_variation([0.5, 0.5], [1.0, 0.0]) == 0.5
        with pytest.raises(ValueError):
            total_variation([1.0], [0.5, 0.5])


class TestRunExcursion:
    def test_scripted_zigzag(self, scripted_rng):
        schedule = make_schedule("Geometric", 0.5)
        kernel = make_drift_kernel("Zero", domain=Domain.FULL_LINE)
        rng = scripted_rng([0.1, 0.9])
        record = run_excursion(kernel, schedule, rng)
        assert (record.steps, record.distinct_edges, record.max_displacement) == (2, 1, 1)
        assert record.duration == pytest.approx(1.0 + schedule.value(1))
        assert not record.censored
        assert rng.used == 2

    def test_constant_schedule_duration_is_steps(self):
        rng = make_rng(1)
        for _ in range(50):
            record = run_excursion(inward_walk(), make_schedule("Constant"), rng)
            assert record.duration == record.steps

    def test_step_cap_censors(self):
        rng = make_rng(2)
        record = run_excursion(inward_walk(), make_schedule("Constant"), rng, step_cap=1)
        assert record.censored and record.steps == 1
        stats = excursion_stats(inward_walk(), make_schedule("Constant"), 200, 1, rng)
        assert stats.censor_rate == 1.0
        with pytest.raises(ValueError):
            run_excursion(inward_walk(), make_schedule("Constant"), rng, step_cap=0)

    def test_edge_cap_censors(self):
        record = run_excursion(make_lattice_kernel(2), make_schedule("Constant"), make_rng(4),
                               step_cap=10_000, edge_cap=1)
        assert record.censored and record.distinct_edges == 1


class TestExcursionStats:
    def test_return_time_of_reflected_walk(self):
        stats = excursion_stats(inward_walk(), make_schedule("Constant"), 20_000, 10_000, make_rng(5))
        assert stats.censored == 0
        assert abs(stats.steps.mean - 3.0) <= 4.0 * stats.steps.stderr
        assert stats.duration.mean == pytest.approx(stats.steps.mean)

    def test_batch_and_scalar_engines_agree(self):
        kernel = make_drift_kernel("Lamperti", -0.8, domain=Domain.FULL_LINE)
        schedule = make_schedule("Power", 2.0)
        batch = excursion_stats(kernel, schedule, 5_000, 100_000, make_rng(6))
        rng = make_rng(7)
        scalar = StreamingMoments()
        for _ in range(5_000):
            record = run_excursion(kernel, schedule, rng, step_cap=100_000)
            if not record.censored:
                scalar.update(record.distinct_edges)
        spread = 4.0 * math.hypot(batch.edges.stderr, scalar.stderr)
        assert abs(batch.edges.mean - scalar.mean) <= spread

    def test_sandwich_holds(self):
        stats = excursion_stats(make_drift_kernel("Zero", domain=Domain.FULL_LINE), make_schedule("Power", 2.0),
                                2_000, 50_000, make_rng(8))
        assert stats.total == pytest.approx(1.0 + math.pi ** 2 / 6.0, rel=1e-6)
        assert stats.sandwich_violations == 0
        assert stats.to_dict()["sandwich_violations"] == 0

    def test_survival_matches_hitting_probabilities(self):
        n = 20_000
        stats = excursion_stats(inward_walk(), make_schedule("Constant"), n, 10_000, make_rng(9))
        p = hitting_profile(make_drift_profile("Constant", -0.5), 10).p
        assert stats.survival(1) == 1.0
        for m in (2, 3, 4):
            assert abs(stats.survival(m) - p[m]) <= binomial_band(p[m], n, 4.0)
        with pytest.raises(ValueError):
            stats.survival(0)

    def test_merge(self):
        a = excursion_stats(inward_walk(), make_schedule("Constant"), 100, 1_000, make_rng(10))
        b = excursion_stats(inward_walk(), make_schedule("Constant"), 50, 1_000, make_rng(11))
        a.merge(b)
        assert a.replicas == 150
        assert a.m_hist.sum() + a.censored_m_hist.sum() == 150


class TestSuccessiveExcursions:
    def test_zero_tail_durations_count_new_edges(self):
        records = successive_excursions(make_drift_kernel("Zero"), make_schedule("ZeroTail"), 20,
                                        make_rng(12), step_cap=100_000)
        assert sum(r.duration for r in records) == max(r.max_displacement for r in records)

    def test_constant_schedule(self):
        records = successive_excursions(inward_walk(), make_schedule("Constant"), 10, make_rng(13))
        assert len(records) == 10
        assert all(r.duration == r.steps for r in records)


class TestOccupation:
    def test_two_units(self):
        dist = coin_turning_distribution(2)
        np.testing.assert_allclose(dist, [1.0 / 3.0] * 3)
        assert dist[0] + dist[2] == pytest.approx(2.0 / 3.0)
        np.testing.assert_allclose(exact_small_n(1), [0.5, 0.5])

    def test_range_chain_matches_coin_turning(self):
        assert equivalence_gap() < 1e-12
        for n in (3, 7, 14):
            assert exact_small_n(n).sum() == pytest.approx(1.0)

    def test_enumeration_limit(self):
        with pytest.raises(HorizonError):
            exact_small_n(15)

    def test_drifted_chain_differs(self):
        kernel = make_drift_kernel("Constant", -0.3, domain=Domain.FULL_LINE)
        assert exact_small_n(6, kernel).sum() == pytest.approx(1.0)
        assert equivalence_gap(6, kernel) > 1e-3
        with pytest.raises(UnsupportedError):
            exact_small_n(4, make_drift_kernel("Zero"))

    def test_simulated_occupation_is_symmetric(self):
        rng = make_rng(14)
        for sample in (inf_imp_occupation(50, 20_000, rng), coin_turning(50, 20_000, rng),
                       srw_occupation(50, 20_000, rng)):
            assert ((sample >= 0.0) & (sample <= 1.0)).all()
            assert float(np.mean(sample)) == pytest.approx(0.5, abs=0.02)

    def test_constant_schedule_occupation_is_arcsine(self):
        sample = srw_occupation(2_000, 4_000, make_rng(21))
        assert ks_arcsine(sample).statistic < 0.06
        assert ks_arcsine(sample).statistic < ks_uniform(sample).statistic

    def test_simulated_law_matches_exact(self):
        n = 6
        sample = inf_imp_occupation(n, 50_000, make_rng(15))
        counts = np.bincount(np.rint(sample * n).astype(np.int64), minlength=n + 1) / 50_000.0
        assert total_variation(counts, exact_small_n(n)) < 0.02

    def test_needs_two_units(self):
        with pytest.raises(ValueError):
            inf_imp_occupation(1, 10, make_rng(0))


class TestRangeTrace:
    def test_zero_tail_half_line_is_floor(self):
        trace = range_trace(make_drift_kernel("Zero"), make_schedule("ZeroTail"), 10.0,
                            [0.5, 2.0, 7.3, 10.0], make_rng(16), paths=3)
        np.testing.assert_array_equal(trace.distinct, np.tile([0, 2, 7, 10], (3, 1)))
        assert not trace.truncated.any()

    def test_clock_walks_agree_with_the_range_chain(self):
        kernel, schedule = make_drift_kernel("Constant", -0.1), make_schedule("ZeroTail")
        grid = [0.5, 1.0, 2.0, 7.3, 12.0]
        chain = range_trace(kernel, schedule, 12.0, grid, make_rng(24), paths=5)
        clock = clock_range_trace(kernel, schedule, 12.0, grid, make_rng(25), paths=5)
        assert not clock.truncated.any()
        np.testing.assert_array_equal(clock.distinct, chain.distinct)
        np.testing.assert_array_equal(clock.distinct[0], [0, 1, 2, 7, 12])

    def test_zero_tail_full_line(self):
        trace = range_trace(make_drift_kernel("Zero", domain=Domain.FULL_LINE), make_schedule("ZeroTail"),
                            40.0, 8, make_rng(17), paths=50)
        assert (trace.right <= trace.distinct).all()
        assert (np.diff(trace.right, axis=1) >= 0).all()

    def test_strongly_impatient_bounds(self):
        trace = range_trace(make_drift_kernel("Zero", domain=Domain.FULL_LINE), make_schedule("Power", 2.0),
                            200.0, 10, make_rng(18), paths=20)
        assert trace.observed.all()
        assert trace.lower_bound_violations() == 0
        assert trace.upper_bound_violations() == 0
        assert (trace.span >= 1).all()

    def test_lattice_kernel(self):
        trace = range_trace(make_lattice_kernel(2), make_schedule("Power", 2.0), 30.0, 5, make_rng(19), paths=4)
        assert trace.upper_bound_violations() == 0
        assert len(trace.samples(0)) == 5

    def test_checkpoints_validated(self):
        with pytest.raises(ValueError):
            range_trace(make_drift_kernel("Zero"), make_schedule("Constant"), 5.0, [6.0], make_rng(0))


class TestSpaceDependentExcursion:
    def test_line_square_decay(self):
        stats = space_dependent_excursion("Z", 2.0, 10_000, 20_000, make_rng(20), core_radius=5)
        assert stats.censor_rate < 0.02
        assert stats.duration.mean == pytest.approx(math.pi ** 2 / 3.0, abs=0.35)
        out = stats.to_dict()
        assert out["expected_crossings"] == 1.0
        assert out["mean_core_crossings"] == pytest.approx(1.0, abs=0.15)

    def test_unsupported_graph(self):
        with pytest.raises(UnsupportedError):
            space_dependent_excursion("Z3", 4.0, 10, 100, make_rng(0))

    def test_visit_z_scores(self):
        stats = SpaceExcursionStats("Z", 2.0, 1)
        # cells are u = -1, 0, 1
        stats.add_visits(np.array([[1, 0, 2], [1, 0, 0]]))
        stats.replicas = 2
        np.testing.assert_allclose(stats.visit_means(), [1.0, 1.0])
        np.testing.assert_allclose(stats.visit_stderrs(), [0.0, 1.0])
        z = stats.visit_z(0.5)
        assert math.isnan(z[0])
        assert z[1] == pytest.approx(0.5)

    def test_visits_match_one_per_excursion(self):
        stats = space_dependent_excursion("Z", 2.0, 4_000, 20_000, make_rng(22), core_radius=4)
        other = space_dependent_excursion("Z", 2.0, 1_000, 20_000, make_rng(23), core_radius=4)
        before = stats.visit_sums.copy()
        stats.merge(other)
        np.testing.assert_array_equal(stats.visit_sums, before + other.visit_sums)
        assert (stats.visit_squares >= stats.visit_sums).all()
        z = stats.visit_z(1.0)
        assert np.isfinite(z).all()
        assert np.abs(z).max() < family_sigmas(4.0, z.size)
