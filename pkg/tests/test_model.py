import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sogl import (
    BlockVector,
    GroupStructure,
    ProxInstance,
    gather,
    group_soft_threshold,
    hard_threshold,
    objective_value,
    scatter_add,
)

finite = st.floats(min_value=-20, max_value=20, allow_nan=False)


class TestGroupSoftThreshold:
    def test_boundary_norm_equals_threshold(self):
        assert np.array_equal(group_soft_threshold(np.array([3.0, 4.0]), 5.0),
                              np.zeros(2))

    def test_zero_input(self):
        assert np.array_equal(group_soft_threshold(np.zeros(2), 1.0), np.zeros(2))

    def test_shrinks_by_half(self):
        # frozen from a lattice search over 0.5*||x-a||^2 + 2.5*||x||_2
        out = group_soft_threshold(np.array([3.0, 4.0]), 2.5)
        np.testing.assert_allclose(out, [1.5, 2.0], atol=1e-15)

    def test_zero_threshold_is_identity(self):
        a = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(group_soft_threshold(a, 0.0), a)

    @given(
        a=st.lists(finite, min_size=1, max_size=4),
        t=st.floats(min_value=0, max_value=10, allow_nan=False),
    )
    @settings(max_examples=150, deadline=None)
    def test_is_exact_minimizer(self, a, t):
        # local perturbation search cannot beat the closed form by > 1e-9
        a = np.array(a)
        x = group_soft_threshold(a, t)

        def obj(p):
            return 0.5 * np.sum((p - a) ** 2) + t * np.linalg.norm(p)

        best = obj(x)
        rng = np.random.default_rng(0)
        for scale in (1.0, 1e-2, 1e-4):
            for _ in range(40):
                assert obj(x + scale * rng.normal(size=a.size)) >= best - 1e-9
        assert obj(np.zeros_like(a)) >= best - 1e-9
        assert obj(a) >= best - 1e-9


class TestHardThreshold:
    @pytest.mark.parametrize("u,t,expected", [
        (2.0, 1.0, 2.0),
        (1.0, 1.0, 0.0),   # ties go to zero
        (-0.5, 1.0, 0.0),
        (-3.0, 2.0, -3.0),
    ])
    def test_scalar_cases(self, u, t, expected):
        assert hard_threshold(u, t) == expected

    def test_elementwise(self):
        out = hard_threshold(np.array([2.0, 1.0, -0.5]), 1.0)
        np.testing.assert_array_equal(out, [2.0, 0.0, 0.0])

    @given(u=finite, gamma=st.floats(min_value=1e-6, max_value=10, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_minimizes_count_penalized_quadratic(self, u, gamma):
        # the only candidates of 0.5*(x-u)^2 + gamma*1(x != 0) are 0 and u
        x = hard_threshold(u, math.sqrt(2 * gamma))
        f_keep = gamma if u != 0 else 0.0
        f_zero = 0.5 * u * u
        best = min(f_keep, f_zero)
        attained = 0.5 * (x - u) ** 2 + (gamma if x != 0 else 0.0)
        assert attained <= best + 1e-12


class TestGatherScatter:
    def test_gather_direct_indexing(self):
        gs = GroupStructure(3, [[0, 1], [1, 2]])
        bv = gather(np.array([1.0, 2.0, 3.0]), gs)
        np.testing.assert_array_equal(bv[0], [1.0, 2.0])
        np.testing.assert_array_equal(bv[1], [2.0, 3.0])

    def test_gather_zero(self):
        gs = GroupStructure(3, [[0, 1], [1, 2]])
        assert gather(np.zeros(3), gs).norm() == 0.0

    def test_full_overlap(self):
        gs = GroupStructure(1, [[0], [0], [0]])
        bv = gather(np.array([5.0]), gs)
        assert [b[0] for b in bv] == [5.0, 5.0, 5.0]

    def test_scatter_sums(self):
        gs = GroupStructure(3, [[0, 1], [1, 2]])
        out = scatter_add(BlockVector([np.array([1.0, 2.0]), np.array([2.0, 3.0])]), gs)
        np.testing.assert_array_equal(out, [1.0, 4.0, 3.0])

    def test_scatter_zero(self):
        gs = GroupStructure(3, [[0, 1], [1, 2]])
        assert np.all(scatter_add(BlockVector.zeros(gs), gs) == 0)

    def test_scatter_of_gather_is_overlap_scaling(self):
        gs = GroupStructure(3, [[0, 1], [1, 2]])
        out = scatter_add(gather(np.ones(3), gs), gs)
        np.testing.assert_array_equal(out, [1.0, 2.0, 1.0])
        np.testing.assert_array_equal(out, gs.overlap_counts)

    @pytest.mark.parametrize("seed", range(8))
    def test_adjoint_identity_random(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 12))
        m = int(rng.integers(1, 5))
        groups = [
            sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
            for _ in range(m)
        ]
        gs = GroupStructure(n, groups)
        z = rng.normal(size=n)
        # exact equality: both sides perform the same integer-weighted sums
        np.testing.assert_array_equal(
            scatter_add(gather(z, gs), gs), gs.overlap_counts * z
        )


class TestObjective:
    def test_zero_at_center_without_penalties(self):
        gs = GroupStructure(2, [[0, 1]])
        inst = ProxInstance(v=np.array([1.0, 2.0]), s=1.0)
        assert objective_value(inst.v, inst, gs) == 0.0

    def test_all_penalties_vanish_at_zero(self):
        gs = GroupStructure(2, [[0, 1]])
        inst = ProxInstance(v=np.array([1.0, 2.0]), s=0.5, lam0=3.0, lam1=7.0)
        assert objective_value(np.zeros(2), inst, gs) == pytest.approx(
            np.sum(inst.v**2) / (2 * inst.s), rel=1e-15
        )

    def test_hand_evaluated_terms(self):
        # quad 0, count 2, group norm sqrt(5); checked term by term by hand
        gs = GroupStructure(2, [[0, 1]])
        inst = ProxInstance(v=np.array([1.0, 2.0]), s=1.0, lam0=1.0, lam1=1.0)
        assert objective_value(np.array([1.0, 2.0]), inst, gs) == pytest.approx(
            2.0 + math.sqrt(5.0), rel=1e-15
        )


class TestQuadraticVsArithmeticMean:
    @given(x=st.lists(finite, min_size=1, max_size=10))
    @settings(max_examples=300, deadline=None)
    def test_quadratic_mean_dominates(self, x):
        x = np.array(x)
        qm = math.sqrt(float(np.mean(x**2)))
        am = float(np.mean(np.abs(x)))
        assert qm >= am - 1e-12

    @given(
        mag=st.floats(min_value=0, max_value=10, allow_nan=False),
        signs=st.lists(st.sampled_from([-1.0, 1.0]), min_size=1, max_size=8),
    )
    @settings(max_examples=100, deadline=None)
    def test_equality_for_constant_magnitude(self, mag, signs):
        x = mag * np.array(signs)
        qm = math.sqrt(float(np.mean(x**2)))
        am = float(np.mean(np.abs(x)))
        assert abs(qm - am) <= 1e-12


class TestGroupStructureValidation:
    def test_empty_group_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            GroupStructure(3, [[0], []])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            GroupStructure(3, [[0, 3]])

    def test_repeated_index_rejected(self):
        with pytest.raises(ValueError, match="repeated"):
            GroupStructure(3, [[1, 1]])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            GroupStructure(3, [[0]], weights=[0.0])

    def test_weight_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="one entry per group"):
            GroupStructure(3, [[0]], weights=[1.0, 1.0])

    def test_overlap_counts_and_membership_agree(self):
        gs = GroupStructure(4, [[0, 1, 2], [1, 2], [3]])
        np.testing.assert_array_equal(gs.overlap_counts, [1, 2, 2, 1])
        assert sum(len(mm) for mm in gs.membership) == gs.total_size
        for g, pairs in enumerate(gs.membership):
            for i, j in pairs:
                assert gs.groups[i][j] == g

    def test_uncovered_variables_allowed(self):
        gs = GroupStructure(4, [[1]])
        assert gs.overlap_counts.tolist() == [0, 1, 0, 0]

    def test_no_groups_allowed(self):
        gs = GroupStructure(3, [])
        assert gs.m == 0 and gs.total_size == 0


class TestProxInstanceValidation:
    def test_nonpositive_step_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            ProxInstance(v=np.ones(2), s=0.0)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError, match="nonneg"):
            ProxInstance(v=np.ones(2), s=1.0, lam0=-0.1)
