import math
import time

import numpy as np
import pytest

from bolduc.exceptions import EmptyHistoryError
from bolduc.gpr import Dataset
from bolduc.kernels import KernelConfig, distance_to_similarity
from bolduc.lsod import (
    HyperparamHistory,
    LsodConfig,
    contribution,
    contribution_batch,
    extract_cumulative,
    extract_lsod,
    extract_tau,
    extract_top_m,
    select_extraction_hyperparams,
)
from bolduc.subspace import Box, make_coordinate_line, project, projection_distance

from conftest import FAMILIES, random_kernel_cfg, random_subspace


def values_of(data):
    return set(np.round(data.values, 12))


class TestContribution:
    def test_point_on_subspace_gives_signal_variance(self, rng):
        box = Box([-0.5] * 3, [0.5] * 3)
        sub = make_coordinate_line([0.0, 0.0, 0.0], 0)
        cfg = KernelConfig("se", 1.3, 0.5)
        assert contribution(sub, box, cfg, [0.3, 0.0, 0.0]) == pytest.approx(1.3**2)

    def test_known_projection_distance(self):
        box = Box([-0.5] * 2, [0.5] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        cfg = KernelConfig("se", 1.0, 1.0)
        assert contribution(sub, box, cfg, [0.2, 1.0]) == pytest.approx(
            math.exp(-0.5), rel=1e-12
        )

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("sub_dim", [1, 2])
    def test_approximation_dominates_grid_oracle(self, family, sub_dim, rng):
        # The unclipped maximum can only exceed the clipped one; when the
        # projected point is inside the box they agree up to the grid step.
        dim = 4
        box = Box([-0.5] * dim, [0.5] * dim)
        for _ in range(12):
            sub = random_subspace(rng, dim, sub_dim, box)
            cfg = random_kernel_cfg(rng, family)
            x = rng.uniform(-1.0, 1.0, size=dim)
            approx = contribution(sub, box, cfg, x, use_approximation=True)
            n_grid = 4001 if sub_dim == 1 else 201
            exact = contribution(
                sub, box, cfg, x, use_approximation=False, grid_points=n_grid
            )
            assert approx >= exact - 1e-12
            if box.contains(project(sub, x)):
                # Bound the grid discretization error through the kernel's
                # own distance profile.
                d = projection_distance(sub, x)
                if sub_dim == 1:
                    lo, hi = -box.chord, box.chord
                    h = (hi - lo) / (n_grid - 1)
                else:
                    h = 2 * box.chord / (n_grid - 1) * math.sqrt(2.0)
                worst = distance_to_similarity(cfg, math.hypot(d, h))
                tol = distance_to_similarity(cfg, d) - worst + 1e-12
                assert approx - exact <= tol


class TestExtractTopM:
    def test_m_at_least_data_returns_everything(self, rng):
        box = Box([-0.5] * 2, [0.5] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        data = Dataset(rng.uniform(-0.5, 0.5, (10, 2)), rng.standard_normal(10))
        out = extract_top_m(data, sub, box, KernelConfig(), 20)
        assert out is data

    def test_orders_by_distance(self):
        box = Box([-0.5] * 2, [3.5] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        data = Dataset([[0.1, 0.0], [0.5, 1.0], [0.9, 2.0]], [10.0, 20.0, 30.0])
        out = extract_top_m(data, sub, box, KernelConfig(), 2)
        assert values_of(out) == {10.0, 20.0}

    def test_matches_sort_oracle(self, rng):
        dim = 5
        box = Box([-0.5] * dim, [0.5] * dim)
        sub = random_subspace(rng, dim, 2, box)
        cfg = random_kernel_cfg(rng)
        data = Dataset(rng.uniform(-0.5, 0.5, (30, dim)), rng.standard_normal(30))
        out = extract_top_m(data, sub, box, cfg, 5)
        contrib = contribution_batch(sub, box, cfg, data.points)
        oracle_idx = sorted(
            sorted(range(30), key=lambda i: (-contrib[i], i))[:5]
        )
        np.testing.assert_allclose(out.values, data.values[oracle_idx])

    def test_preserves_observation_order(self, rng):
        box = Box([-0.5] * 3, [0.5] * 3)
        sub = make_coordinate_line([0.0, 0.0, 0.0], 2)
        data = Dataset(rng.uniform(-0.5, 0.5, (12, 3)), np.arange(12.0))
        out = extract_top_m(data, sub, box, KernelConfig(), 6)
        assert list(out.values) == sorted(out.values)

    def test_tie_break_prefers_earlier_index(self):
        box = Box([-0.5] * 2, [0.5] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        # Two points at identical distance; the earlier one wins.
        data = Dataset([[0.0, 0.2], [0.3, -0.2], [0.1, 0.2]], [1.0, 2.0, 3.0])
        out = extract_top_m(data, sub, box, KernelConfig(), 2)
        assert values_of(out) == {1.0, 2.0}

    def test_subset_monotone_in_m(self, rng):
        dim = 4
        box = Box([-0.5] * dim, [0.5] * dim)
        sub = random_subspace(rng, dim, 1, box)
        cfg = random_kernel_cfg(rng)
        data = Dataset(rng.uniform(-0.5, 0.5, (25, dim)), rng.standard_normal(25))
        prev = set()
        for m in (1, 3, 7, 15, 25):
            cur = values_of(extract_top_m(data, sub, box, cfg, m))
            assert prev <= cur
            prev = cur


class TestExtractTau:
    def test_tau_zero_keeps_only_points_on_subspace(self):
        sub = make_coordinate_line([0.0, 0.0], 0)
        data = Dataset([[0.3, 0.0], [0.1, 0.4], [-0.2, 0.0]], [1.0, 2.0, 3.0])
        out = extract_tau(data, sub, 0.0)
        assert values_of(out) == {1.0, 3.0}

    def test_huge_tau_keeps_everything(self, rng):
        sub = make_coordinate_line([0.0, 0.0], 1)
        data = Dataset(rng.uniform(-0.5, 0.5, (8, 2)), rng.standard_normal(8))
        assert len(extract_tau(data, sub, 10.0)) == 8

    @pytest.mark.parametrize("family", FAMILIES)
    def test_threshold_rule_equivalence(self, family, rng):
        # Keeping distances <= tau equals keeping similarities >= lambda
        # with lambda = distance_to_similarity(tau): exact set equality.
        dim = 6
        box = Box([-0.5] * dim, [0.5] * dim)
        for _ in range(20):
            sub = random_subspace(rng, dim, int(rng.integers(1, 3)), box)
            cfg = KernelConfig(
                family,
                signal_std=float(rng.uniform(0.3, 2.0)),
                length_scale=float(rng.uniform(0.1, 2.0)),
            )
            tau = float(rng.uniform(0.0, 1.5))
            data = Dataset(
                rng.uniform(-0.5, 0.5, (40, dim)), rng.standard_normal(40)
            )
            lam = distance_to_similarity(cfg, tau)
            contrib = contribution_batch(sub, box, cfg, data.points)
            by_lambda = set(np.flatnonzero(contrib >= lam).tolist())
            by_tau = {
                i
                for i in range(len(data))
                if projection_distance(sub, data.points[i]) <= tau
            }
            kept = extract_tau(data, sub, tau)
            assert by_lambda == by_tau
            assert values_of(kept) == values_of(data.subset(sorted(by_tau)))

    def test_subset_monotone_in_tau(self, rng):
        sub = make_coordinate_line(np.zeros(3), 0)
        data = Dataset(rng.uniform(-0.5, 0.5, (30, 3)), rng.standard_normal(30))
        prev = set()
        for tau in (0.05, 0.1, 0.2, 0.4, 0.8):
            cur = values_of(extract_tau(data, sub, tau))
            assert prev <= cur
            prev = cur


class TestExtractCumulative:
    def _setup(self, rng, n=20, dim=3):
        box = Box([-0.5] * dim, [0.5] * dim)
        sub = make_coordinate_line(np.zeros(dim), 0)
        data = Dataset(rng.uniform(-0.5, 0.5, (n, dim)), rng.standard_normal(n))
        return box, sub, data

    def test_c_zero_keeps_one(self, rng):
        box, sub, data = self._setup(rng)
        assert len(extract_cumulative(data, sub, box, KernelConfig(), 0.0)) == 1

    def test_c_one_keeps_all(self, rng):
        box, sub, data = self._setup(rng)
        assert len(extract_cumulative(data, sub, box, KernelConfig(), 1.0)) == len(data)

    def test_known_prefix(self):
        # Contributions proportional to 0.5, 0.3, 0.2: C=0.7 needs two.
        box = Box([-0.5] * 2, [0.5] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        cfg = KernelConfig("se", 1.0, 1.0)
        dists = [
            math.sqrt(-2.0 * math.log(c)) for c in (0.5, 0.3, 0.2)
        ]  # invert the SE profile
        data = Dataset([[0.0, d] for d in dists], [1.0, 2.0, 3.0])
        out = extract_cumulative(data, sub, box, cfg, 0.7)
        assert values_of(out) == {1.0, 2.0}

    def test_vanishing_contributions_keep_nearest(self):
        box = Box([-0.5] * 2, [0.5] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        cfg = KernelConfig("se", 1.0, 0.001)  # similarities underflow to zero
        data = Dataset([[0.0, 400.0], [0.0, 300.0]], [1.0, 2.0])
        with pytest.warns(RuntimeWarning):
            out = extract_cumulative(data, sub, box, cfg, 0.5)
        assert values_of(out) == {2.0}

    def test_subset_monotone_in_c(self, rng):
        box, sub, data = self._setup(rng, n=30)
        cfg = random_kernel_cfg(rng)
        prev = set()
        for c in (0.0, 0.2, 0.5, 0.8, 1.0):
            cur = values_of(extract_cumulative(data, sub, box, cfg, c))
            assert prev <= cur
            prev = cur

    def test_always_at_least_one(self, rng):
        box, sub, data = self._setup(rng)
        out = extract_cumulative(data, sub, box, KernelConfig(), 0.0)
        assert len(out) >= 1


class TestExtractionSpeed:
    def test_ten_thousand_points_under_a_second(self, rng):
        dim = 10
        box = Box([-0.5] * dim, [0.5] * dim)
        sub = make_coordinate_line(np.zeros(dim), 0)
        cfg = KernelConfig("se", 1.0, 0.3)
        data = Dataset(
            rng.uniform(-0.5, 0.5, (10_000, dim)), rng.standard_normal(10_000)
        )
        t0 = time.perf_counter()
        extract_top_m(data, sub, box, cfg, 200)
        extract_cumulative(data, sub, box, cfg, 0.8)
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0


class TestHyperparamSelection:
    def test_empty_history_raises(self):
        with pytest.raises(EmptyHistoryError):
            select_extraction_hyperparams(HyperparamHistory())

    def test_returns_latest(self):
        history = HyperparamHistory()
        first = KernelConfig("se", 1.0, 0.5)
        second = KernelConfig("se", 2.0, 0.25)
        history.push(first)
        assert select_extraction_hyperparams(history) is first
        history.push(second)
        assert select_extraction_hyperparams(history) is second

    def test_pure_lookup(self):
        history = HyperparamHistory()
        cfg = KernelConfig("matern52", 1.0, 1.0)
        history.push(cfg)
        assert select_extraction_hyperparams(history) is select_extraction_hyperparams(
            history
        )


class TestLsodConfig:
    def test_strategy_parameter_required(self):
        with pytest.raises(ValueError):
            LsodConfig(strategy="topm")
        with pytest.raises(ValueError):
            LsodConfig(strategy="tau", tau=-1.0)
        with pytest.raises(ValueError):
            LsodConfig(strategy="cumulative", c=1.5)

    def test_effective_tau_decays_per_epoch(self):
        cfg = LsodConfig(strategy="tau", tau=0.4, tau_decay=0.5)
        assert cfg.effective_tau(0) == pytest.approx(0.4)
        assert cfg.effective_tau(2) == pytest.approx(0.1)

    def test_dispatch(self, rng):
        dim = 3
        box = Box([-0.5] * dim, [0.5] * dim)
        sub = make_coordinate_line(np.zeros(dim), 0)
        data = Dataset(rng.uniform(-0.5, 0.5, (10, dim)), rng.standard_normal(10))
        kcfg = KernelConfig("se", 1.0, 0.3)
        assert extract_lsod(data, sub, box, kcfg, LsodConfig()) is data
        assert len(extract_lsod(data, sub, box, kcfg, LsodConfig("topm", m=4))) == 4
        assert len(
            extract_lsod(data, sub, box, kcfg, LsodConfig("tau", tau=100.0))
        ) == 10
        assert len(
            extract_lsod(data, sub, box, kcfg, LsodConfig("cumulative", c=0.0))
        ) == 1


class TestArdStandardization:
    def test_ard_distances_scale_per_dimension(self):
        # With length scales (1, 0.1) an off-axis offset of 0.05 in the
        # second coordinate counts as 0.5 scaled units.
        sub = make_coordinate_line([0.0, 0.0], 0)
        box = Box([-0.5] * 2, [0.5] * 2)
        cfg = KernelConfig("se", 1.0, np.array([1.0, 0.1]), ard=True)
        value = contribution(sub, box, cfg, [0.2, 0.05])
        assert value == pytest.approx(math.exp(-0.125), rel=1e-10)

    def test_ard_tau_extraction_uses_scaled_space(self):
        sub = make_coordinate_line([0.0, 0.0], 0)
        cfg = KernelConfig("se", 1.0, np.array([1.0, 0.1]), ard=True)
        data = Dataset([[0.0, 0.03], [0.0, 0.08]], [1.0, 2.0])
        out = extract_tau(data, sub, 0.5, cfg=cfg)  # scaled dists 0.3, 0.8
        assert values_of(out) == {1.0}


class TestCumulativeUnderflowBoundary:
    def test_c_one_keeps_all_despite_underflowed_tails(self):
        # Distant points whose similarities underflow to exactly zero must
        # still be kept at C=1: exact-arithmetic contributions never vanish.
        box = Box([-40.0] * 2, [40.0] * 2)
        sub = make_coordinate_line([0.0, 0.0], 0)
        cfg = KernelConfig("se", 1.0, 0.01)
        data = Dataset([[0.0, 0.0], [0.0, 0.1], [0.0, 30.0]], [1.0, 2.0, 3.0])
        contrib = contribution_batch(sub, box, cfg, data.points)
        assert contrib[-1] == 0.0  # tail really underflows
        out = extract_cumulative(data, sub, box, cfg, 1.0)
        assert len(out) == 3
