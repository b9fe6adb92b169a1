import numpy as np
import pytest

from specpolicy import (
    MaskDraw,
    RealizedParams,
    SampleSeed,
    SpecPolicyError,
    Strategy,
    WarpDraw,
    apply_plan,
    freq_mask,
    realize_draws,
    time_mask,
    time_warp,
    validate_matrix,
)
from specpolicy.kernels import warp_source_map

DEFAULTS = RealizedParams(
    rho0=0.5, n_time_masks=2, n_freq_masks=2, t_width=40, f_width=30, fill=0.0, warp_base=80
)


def ones(tau, nu):
    return np.ones((tau, nu), dtype=np.float32)


class TestTimeMask:
    def test_basic_mask(self):
        out = time_mask(ones(10, 4), [MaskDraw(2, 3)], 0.0)
        assert np.all(out[2:5] == 0.0)
        assert np.all(out[:2] == 1.0)
        assert np.all(out[5:] == 1.0)

    def test_zero_width_is_identity(self):
        m = np.random.default_rng(0).standard_normal((7, 5)).astype(np.float32)
        out = time_mask(m, [MaskDraw(3, 0)], 0.0)
        assert np.array_equal(out, m)

    def test_overlapping_masks(self):
        out = time_mask(ones(10, 4), [MaskDraw(2, 3), MaskDraw(4, 2)], 0.0)
        # sequential application: union of [2,5) and [4,6) is rows 2..5
        expected = ones(10, 4)
        expected[2:6] = 0.0
        assert np.array_equal(out, expected)

    def test_out_of_range(self):
        with pytest.raises(SpecPolicyError) as err:
            time_mask(ones(10, 4), [MaskDraw(8, 3)], 0.0)
        assert err.value.code == "OUT_OF_RANGE"

    def test_does_not_mutate_input(self):
        m = ones(6, 3)
        time_mask(m, [MaskDraw(0, 6)], 0.0)
        assert np.all(m == 1.0)


class TestFreqMask:
    def test_basic_mask(self):
        out = freq_mask(ones(4, 10), [MaskDraw(1, 2)], 0.0)
        assert np.all(out[:, 1:3] == 0.0)
        assert np.all(out[:, 0] == 1.0)
        assert np.all(out[:, 3:] == 1.0)

    def test_zero_width_is_identity(self):
        m = np.random.default_rng(1).standard_normal((4, 8)).astype(np.float32)
        assert np.array_equal(freq_mask(m, [MaskDraw(2, 0)], 0.0), m)

    def test_full_coverage_gives_constant(self):
        out = freq_mask(ones(4, 10), [MaskDraw(0, 6), MaskDraw(6, 4)], 7.5)
        assert np.all(out == 7.5)

    def test_out_of_range(self):
        with pytest.raises(SpecPolicyError):
            freq_mask(ones(4, 10), [MaskDraw(9, 2)], 0.0)


class TestTimeWarp:
    def test_zero_distance_identity(self):
        m = np.random.default_rng(2).standard_normal((12, 6)).astype(np.float32)
        out = time_warp(m, WarpDraw(center=5, distance=0, direction="left", budget=3))
        assert np.array_equal(out, m)

    def test_constant_matrix_invariant(self):
        m = np.full((16, 3), 5.0, dtype=np.float32)
        out = time_warp(m, WarpDraw(center=8, distance=3, direction="right", budget=4))
        assert np.array_equal(out, m)

    def test_golden_eight_frame_vector(self):
        # ramp 0..7, center 4 moves right by 1: knots (0,0), (5,4), (7,7)
        # s(t) = 0.8 t on [0,5], 4 + 1.5 (t-5) on [5,7]; output equals s(t)
        m = np.arange(8, dtype=np.float64).reshape(8, 1)
        out = time_warp(m, WarpDraw(center=4, distance=1, direction="right", budget=1))
        golden = np.array([0.0, 0.8, 1.6, 2.4, 3.2, 4.0, 5.5, 7.0]).reshape(8, 1)
        assert np.allclose(out, golden, atol=1e-12)

    def test_endpoints_bit_identical(self):
        m = np.random.default_rng(3).standard_normal((30, 4)).astype(np.float32)
        out = time_warp(m, WarpDraw(center=14, distance=5, direction="left", budget=7))
        assert np.array_equal(out[0], m[0])
        assert np.array_equal(out[-1], m[-1])

    def test_source_map_monotone_and_pinned(self):
        for direction in ("left", "right"):
            d = WarpDraw(center=10, distance=4, direction=direction, budget=6)
            s = warp_source_map(25, d)
            assert s[0] == 0.0
            assert s[-1] == 24.0
            assert np.all(np.diff(s) > 0)

    def test_infeasible_draw_rejected(self):
        with pytest.raises(SpecPolicyError) as err:
            time_warp(ones(10, 3), WarpDraw(center=1, distance=2, direction="left", budget=2))
        assert err.value.code == "INFEASIBLE"


class TestRealizeAndApply:
    def test_empty_active_set(self):
        plan = realize_draws(SampleSeed(0, 0, 0), ones(10, 8), DEFAULTS, set())
        assert plan.active == frozenset()
        out = apply_plan(ones(10, 8), plan)
        assert np.array_equal(out, ones(10, 8))

    def test_tiny_tau_clamps_warp_budget(self):
        plan = realize_draws(SampleSeed(7, 0, 0), ones(3, 8), DEFAULTS, {Strategy.TIME_WARP})
        warp = plan.stages[0].warp
        assert warp.budget == 0
        assert warp.distance == 0
        assert np.array_equal(apply_plan(ones(3, 8), plan), ones(3, 8))

    def test_plan_deterministic(self):
        m = np.random.default_rng(4).standard_normal((100, 83)).astype(np.float32)
        seed = SampleSeed(42, 0, 0)
        p1 = realize_draws(seed, m, DEFAULTS, set(Strategy))
        p2 = realize_draws(seed, m, DEFAULTS, set(Strategy))
        assert p1 == p2
        assert np.array_equal(apply_plan(m, p1), apply_plan(m, p2))

    def test_golden_plan_seed_42(self):
        # frozen once from the fixed draw order (warp, freq, time)
        m = ones(100, 83)
        plan = realize_draws(SampleSeed(42, 0, 0), m, DEFAULTS, set(Strategy))
        stage = plan.stages[0]
        assert stage.warp is not None
        assert stage.warp.budget == 40
        assert len(stage.freq_draws) == 2
        assert len(stage.time_draws) == 2
        for d in stage.freq_draws:
            assert 0 <= d.width <= 30 and 0 <= d.start <= 83 - d.width
        for d in stage.time_draws:
            assert 0 <= d.width <= 40 and 0 <= d.start <= 100 - d.width

    def test_single_freq_mask_plan_equals_direct_call(self):
        m = np.random.default_rng(5).standard_normal((20, 12)).astype(np.float32)
        plan = realize_draws(SampleSeed(3, 1, 2), m, DEFAULTS, {Strategy.FREQ_MASK})
        direct = freq_mask(m, plan.stages[0].freq_draws, DEFAULTS.fill)
        assert np.array_equal(apply_plan(m, plan), direct)

    def test_shape_mismatch_rejected(self):
        plan = realize_draws(SampleSeed(0, 0, 0), ones(10, 8), DEFAULTS, {Strategy.TIME_MASK})
        with pytest.raises(SpecPolicyError) as err:
            apply_plan(ones(11, 8), plan)
        assert err.value.code == "SHAPE_MISMATCH"


class TestProperties:
    def test_shape_preserved_and_output_valid_random_cases(self):
        rng = np.random.default_rng(123)
        for _ in range(200):
            tau = int(rng.integers(3, 60))
            nu = int(rng.integers(1, 40))
            m = rng.standard_normal((tau, nu)).astype(np.float32)
            seed = SampleSeed(int(rng.integers(0, 1 << 32)), 0, 0)
            plan = realize_draws(seed, m, DEFAULTS, set(Strategy))
            out = apply_plan(m, plan)
            assert out.shape == m.shape
            validate_matrix(out)  # closure under augmentation

    def test_mask_budget_bound(self):
        rng = np.random.default_rng(321)
        for _ in range(200):
            tau = int(rng.integers(5, 80))
            m = rng.standard_normal((tau, 6)).astype(np.float32)
            n = int(rng.integers(1, 5))
            width_cap = int(rng.integers(1, 12))
            draws = []
            for _ in range(n):
                w = int(rng.integers(0, width_cap + 1))
                w = min(w, tau)
                draws.append(MaskDraw(int(rng.integers(0, tau - w + 1)), w))
            out = time_mask(m, draws, 0.0)
            changed = np.any(out != m, axis=1).sum()
            assert changed <= n * width_cap

    def test_untouched_cells_bit_identical(self):
        rng = np.random.default_rng(111)
        for _ in range(100):
            tau, nu = int(rng.integers(4, 40)), int(rng.integers(4, 40))
            m = rng.standard_normal((tau, nu)).astype(np.float32)
            t_draw = MaskDraw(int(rng.integers(0, tau - 1)), int(rng.integers(0, 2)))
            f_draw = MaskDraw(int(rng.integers(0, nu - 1)), int(rng.integers(0, 2)))
            out = freq_mask(time_mask(m, [t_draw], 0.0), [f_draw], 0.0)
            untouched = np.ones((tau, nu), dtype=bool)
            untouched[t_draw.start : t_draw.start + t_draw.width, :] = False
            untouched[:, f_draw.start : f_draw.start + f_draw.width] = False
            assert np.array_equal(out[untouched], m[untouched])
