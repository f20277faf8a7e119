"""Synthetic surface determinism, shape constraints, and the registry."""

import math

import numpy as np
import pytest

from beadlab.design_space import enumerate_grid, to_real
from beadlab.errors import UnsupportedError, ValidationError
from beadlab.oracle import (
    OracleSpec,
    SyntheticOracle,
    query_synthetic,
    registered_surfaces,
)
from beadlab.response import composite_response
from beadlab.taguchi import array_design, fit_main_effects, predict_main_effects


def synthetic(noise_sd=0.1, seed=0, surface="waam-like-v1", **kw):
    return OracleSpec(kind="synthetic", surface_id=surface, noise_sd=noise_sd,
                      seed=seed, **kw)


class TestSpecValidation:
    def test_unknown_surface(self):
        with pytest.raises(UnsupportedError):
            synthetic(surface="no-such-surface")

    def test_bad_kind(self):
        with pytest.raises(ValidationError):
            OracleSpec(kind="psychic")

    def test_negative_noise(self):
        with pytest.raises(ValidationError):
            synthetic(noise_sd=-0.1)

    def test_registry_lists_defaults(self):
        names = registered_surfaces()
        assert "waam-like-v1" in names
        assert "additive-v1" in names


class TestDeterminism:
    def test_same_query_same_geometry(self, space):
        oracle = SyntheticOracle(synthetic(seed=5), space)
        a = oracle.measure((2, 3, 1), query_index=9)
        b = oracle.measure((2, 3, 1), query_index=9)
        assert a == b

    def test_query_index_changes_noise(self, space):
        oracle = SyntheticOracle(synthetic(seed=5), space)
        a = oracle.measure((2, 3, 1), query_index=1)
        b = oracle.measure((2, 3, 1), query_index=2)
        assert a != b

    def test_zero_noise_matches_true_surface(self, space):
        oracle = SyntheticOracle(synthetic(noise_sd=0.0), space)
        for p in [(0, 0, 0), (2, 2, 2), (4, 4, 4)]:
            assert oracle.measure(p, query_index=3) == oracle.measure_true(p)


class TestDefaultSurface:
    def test_origin_values_by_direct_evaluation(self, space):
        g = SyntheticOracle(synthetic(noise_sd=0.0), space).measure_true((0, 0, 0))
        assert math.isclose(g.depth, 2.3)
        assert math.isclose(g.width, 0.9 + 0.5 * math.sin(0.0))
        assert math.isclose(g.height, 1.2 + 3.0)

    def test_depth_rises_with_current_endpoints(self, space):
        oracle = SyntheticOracle(synthetic(noise_sd=0.0), space)
        for s in range(5):
            for c in range(5):
                low = oracle.measure_true((0, s, c)).depth
                high = oracle.measure_true((4, s, c)).depth
                assert high > low

    def test_width_and_height_fall_with_speed_endpoints(self, space):
        oracle = SyntheticOracle(synthetic(noise_sd=0.0), space)
        for i in range(5):
            for c in range(5):
                slow = oracle.measure_true((i, 0, c))
                fast = oracle.measure_true((i, 4, c))
                assert slow.width >= fast.width - 1e-12
                assert slow.height >= fast.height - 1e-12

    def test_all_grid_geometries_valid(self, space):
        oracle = SyntheticOracle(synthetic(seed=2), space)
        for i, p in enumerate(enumerate_grid(space)):
            for g in (oracle.measure_true(p), oracle.measure(p, query_index=i)):
                assert g.depth > 0 and g.width > 0 and g.height > 0
                assert math.isfinite(g.depth + g.width + g.height)

    def test_default_surface_is_not_additive(self, space):
        # The best additive fit on the full noiseless grid must leave a
        # substantial residual, otherwise the strategy comparison is moot.
        oracle = SyntheticOracle(synthetic(noise_sd=0.0), space)
        grid = enumerate_grid(space)
        ys = [oracle.true_response(p) for p in grid]
        model = fit_main_effects(space, grid, ys)
        resid = [predict_main_effects(model, p) - y for p, y in zip(grid, ys)]
        floor = math.sqrt(sum(r * r for r in resid) / len(resid))
        assert floor > 0.3

    def test_surface_params_override(self, space):
        custom = synthetic(noise_sd=0.0, surface_params={"d0": 5.0})
        g = SyntheticOracle(custom, space).measure_true((0, 0, 0))
        assert math.isclose(g.depth, 5.0)


class TestAdditiveSurface:
    def test_response_is_exactly_additive(self, space):
        oracle = SyntheticOracle(synthetic(noise_sd=0.0, surface="additive-v1"), space)
        grid = enumerate_grid(space)

        def expected(p):
            i, s, c = (idx / 4 for idx in p)
            return 88.0 + 5.0 * i - 4.0 * s + 2.0 * c

        for p in grid:
            y = composite_response(oracle.measure_true(p))
            assert math.isclose(y, expected(p), rel_tol=0, abs_tol=1e-9)

    def test_array_fit_is_exact_on_additive_surface(self, space):
        oracle = SyntheticOracle(synthetic(noise_sd=0.0, surface="additive-v1"), space)
        design = array_design(space)
        ys = [oracle.true_response(p) for p in design]
        model = fit_main_effects(space, design, ys)
        errs = [
            predict_main_effects(model, p) - oracle.true_response(p)
            for p in enumerate_grid(space)
        ]
        assert max(abs(e) for e in errs) < 1e-9


class TestQueryValidation:
    def test_out_of_range_value(self, space):
        with pytest.raises(ValidationError):
            query_synthetic(synthetic(), space, (500.0, 8.0, 14.0))

    def test_manual_spec_rejected(self, space):
        with pytest.raises(ValidationError):
            query_synthetic(OracleSpec(kind="manual"), space, to_real(space, (0, 0, 0)))

    def test_in_range_value_accepted(self, space):
        g = query_synthetic(synthetic(noise_sd=0.0), space, (130.0, 5.0, 11.0))
        assert g.depth > 0
