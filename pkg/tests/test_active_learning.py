"""Acquisition rule and the sequential surrogate campaign loop."""

import math

import numpy as np
import pytest

from beadlab.active_learning import (
    AlConfig,
    acquire,
    initial_design,
    run_al_loop,
)
from beadlab.design_space import (
    DesignSpace,
    Factor,
    enumerate_grid,
    select_test_set,
    to_real,
)
from beadlab.errors import ValidationError
from beadlab.gpr import KernelParams, fit
from beadlab.oracle import OracleSpec, SyntheticOracle


def tiny_space():
    return DesignSpace(
        factors=(
            Factor("current", "A", (100.0, 200.0)),
            Factor("speed", "mm/s", (4.0, 12.0)),
            Factor("ctwd", "mm", (10.0, 18.0)),
        )
    )


class TestAlConfig:
    def test_defaults(self):
        config = AlConfig()
        assert (config.init_samples, config.max_iterations, config.reoptimize_every) == (5, 15, 1)

    def test_zero_iterations_allowed(self):
        assert AlConfig(max_iterations=0).max_iterations == 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"init_samples": 0},
            {"max_iterations": -1},
            {"reoptimize_every": 0},
        ],
    )
    def test_invalid_counts(self, kwargs):
        with pytest.raises(ValidationError):
            AlConfig(**kwargs)


class TestAcquire:
    def test_single_candidate(self, space):
        model = fit(
            [to_real(space, p) for p in [(0, 0, 0), (2, 2, 2), (4, 4, 4)]],
            [1.0, 2.0, 3.0],
            KernelParams(1.0, 1.0, 1e-4),
        )
        result = acquire(model, [(1, 1, 1)], space)
        assert result.chosen == (1, 1, 1)
        assert len(result.scores) == 1

    def test_far_candidate_beats_near_duplicate(self, space):
        train = [(0, 0, 0), (2, 2, 2), (4, 4, 4)]
        params = KernelParams(1.0, 1.0, 1e-6)
        model = fit([to_real(space, p) for p in train], [1.0, 2.0, 3.0], params)
        near, far = (2, 2, 2), (0, 4, 4)
        result = acquire(model, [near, far], space)
        assert result.chosen == far
        # Cross-check the stds with an independent dense solve.
        xs = model.x_train
        n = len(xs)
        big_k = model.params.signal_variance * np.exp(
            -((xs[:, None, :] - xs[None, :, :]) ** 2).sum(-1) / 2.0
        ) + (params.noise_variance + model.jitter_used) * np.eye(n)
        for idx, cand in enumerate((near, far)):
            q = model.standardizer.transform(
                np.array(to_real(space, cand)).reshape(1, -1)
            )[0]
            k_star = model.params.signal_variance * np.exp(
                -((xs - q) ** 2).sum(-1) / 2.0
            )
            var = model.params.signal_variance - k_star @ np.linalg.solve(big_k, k_star)
            assert math.isclose(result.scores[idx], math.sqrt(max(var, 0.0)), rel_tol=1e-8)

    def test_tie_breaks_to_first_candidate(self):
        sp = DesignSpace(factors=(Factor("x", "u", (0.0, 1.0, 2.0)),))
        model = fit([[1.0], [0.9], [1.1]], [0.0, 0.1, -0.1], KernelParams(1.0, 1.0, 1e-4))
        # Candidates symmetric around the training mass get identical stds.
        result = acquire(model, [(0,), (2,)], sp)
        assert math.isclose(result.scores[0], result.scores[1], rel_tol=1e-12)
        assert result.chosen == (0,)

    def test_empty_candidates(self, space):
        model = fit([[0.0, 0.0, 0.0]], [1.0], KernelParams(1.0, 1.0, 1e-4))
        with pytest.raises(ValidationError):
            acquire(model, [], space)


def loop_fixture(space, config, seed=0, noise_sd=0.1):
    oracle = SyntheticOracle(
        OracleSpec(kind="synthetic", noise_sd=noise_sd, seed=seed + 3), space
    )
    init = initial_design(space, config.init_samples, seed)
    test_set = select_test_set(space, 15, seed + 1, excluded=set(init))
    return oracle, test_set


class TestRunAlLoop:
    def test_zero_iterations_single_entry(self, space):
        config = AlConfig(max_iterations=0)
        oracle, test_set = loop_fixture(space, config)
        trace = run_al_loop(space, oracle, config, test_set, seed=0)
        assert len(trace.entries) == 1
        assert len(trace.queried) == 5
        assert trace.entries[0].training_size == 5
        assert trace.entries[0].iteration == 0

    def test_default_config_reaches_twenty_points(self, space):
        config = AlConfig()
        oracle, test_set = loop_fixture(space, config, seed=2)
        trace = run_al_loop(space, oracle, config, test_set, seed=2)
        assert len(trace.queried) == 20
        assert len(trace.entries) == 16
        assert trace.entries[-1].training_size == 20
        assert [e.iteration for e in trace.entries] == list(range(16))

    def test_no_requery_and_test_exclusion(self, space):
        config = AlConfig(max_iterations=8)
        oracle, test_set = loop_fixture(space, config, seed=4)
        trace = run_al_loop(space, oracle, config, test_set, seed=4)
        assert len(set(trace.queried)) == len(trace.queried)
        assert not set(trace.queried) & test_set

    def test_bitwise_deterministic(self, space):
        config = AlConfig(max_iterations=6)
        oracle, test_set = loop_fixture(space, config, seed=5)
        a = run_al_loop(space, oracle, config, test_set, seed=5)
        b = run_al_loop(space, oracle, config, test_set, seed=5)
        assert a.queried == b.queried
        assert a.entries == b.entries

    def test_pool_exhaustion_stops_early(self):
        sp = tiny_space()
        config = AlConfig(init_samples=3, max_iterations=10)
        oracle = SyntheticOracle(
            OracleSpec(kind="synthetic", noise_sd=0.0, seed=1), sp
        )
        init = initial_design(sp, 3, 0)
        test_set = select_test_set(sp, 2, 99, excluded=set(init))
        trace = run_al_loop(sp, oracle, config, test_set, seed=0)
        assert len(trace.queried) == 8 - 2
        assert len(trace.entries) == 1 + (6 - 3)

    def test_test_set_overlapping_seed_design_rejected(self, space):
        config = AlConfig()
        init = initial_design(space, config.init_samples, 7)
        oracle = SyntheticOracle(OracleSpec(kind="synthetic", seed=7), space)
        trespassing = set(init[:1]) | set(
            sorted(select_test_set(space, 14, 50, excluded=set(init)))
        )
        with pytest.raises(ValidationError):
            run_al_loop(space, oracle, config, trespassing, seed=7)

    def test_coverage_distance_non_increasing(self, space):
        config = AlConfig(max_iterations=10)
        oracle, test_set = loop_fixture(space, config, seed=6)
        trace = run_al_loop(space, oracle, config, test_set, seed=6)
        grid = np.array([to_real(space, p) for p in enumerate_grid(space)])
        previous = math.inf
        for size in range(config.init_samples, len(trace.queried) + 1):
            train = np.array([to_real(space, p) for p in trace.queried[:size]])
            dists = np.linalg.norm(grid[:, None, :] - train[None, :, :], axis=-1)
            worst = float(dists.min(axis=1).max())
            assert worst <= previous + 1e-12
            previous = worst

    def test_reoptimize_cadence_variant(self, space):
        config = AlConfig(init_samples=5, max_iterations=4, reoptimize_every=3)
        oracle, test_set = loop_fixture(space, config, seed=8)
        trace = run_al_loop(space, oracle, config, test_set, seed=8)
        assert len(trace.entries) == 5


class TestInitialDesign:
    def test_covers_levels_and_is_deterministic(self, space):
        a = initial_design(space, 5, campaign_seed=3)
        b = initial_design(space, 5, campaign_seed=3)
        assert a == b
        for k in range(3):
            assert sorted(p[k] for p in a) == [0, 1, 2, 3, 4]
