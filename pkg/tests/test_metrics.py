import numpy as np
import pytest

from phases.graphon import StepGraphon, SubgraphPattern
from phases.metrics import connected_patterns, cut_distance_upper, dbar_distance
from conftest import random_step_graphon


class TestCutDistance:
    def test_self_distance_zero(self, rng):
        q = random_step_graphon(rng, 3)
        assert cut_distance_upper(q, q) == 0.0

    def test_constants(self):
        d = cut_distance_upper(StepGraphon.constant(0.2), StepGraphon.constant(0.7))
        assert d == pytest.approx(0.5, abs=1e-12)

    def test_block_swap_is_zero(self):
        a = StepGraphon([0.5, 0.5], [[0.9, 0.2], [0.2, 0.4]])
        b = StepGraphon([0.5, 0.5], [[0.4, 0.2], [0.2, 0.9]])
        assert cut_distance_upper(a, b) == 0.0

    def test_symmetry_and_triangle_inequality(self, rng):
        # equal-mass profile so all block matchings are in play
        def rand_equal(m):
            p = rng.uniform(0.05, 0.95, (m, m))
            return StepGraphon(np.full(m, 1.0 / m), (p + p.T) / 2)

        for _ in range(5):
            qs = [rand_equal(3) for _ in range(3)]
            d01 = cut_distance_upper(qs[0], qs[1])
            d10 = cut_distance_upper(qs[1], qs[0])
            assert d01 == pytest.approx(d10, abs=1e-12)
            d02 = cut_distance_upper(qs[0], qs[2])
            d12 = cut_distance_upper(qs[1], qs[2])
            assert d02 <= d01 + d12 + 1e-12

    def test_mixed_profiles_refine(self):
        a = StepGraphon([0.3, 0.7], [[0.1, 0.8], [0.8, 0.5]])
        b = StepGraphon([0.5, 0.5], [[0.1, 0.8], [0.8, 0.5]])
        d = cut_distance_upper(a, b)
        assert 0.0 < d < 1.0

    def test_block_cap_refusal(self):
        m = 25
        q = StepGraphon(np.full(m, 1.0 / m), np.full((m, m), 0.5))
        with pytest.raises(ValueError, match="cap"):
            cut_distance_upper(q, StepGraphon.constant(0.4))


class TestDbar:
    def test_enumeration_is_frozen(self):
        pats = connected_patterns(5)
        by_n = {}
        for p in pats:
            by_n[p.k] = by_n.get(p.k, 0) + 1
        assert by_n == {2: 1, 3: 2, 4: 6, 5: 21}
        # H_1 is the single edge
        assert pats[0] == SubgraphPattern.edge()
        # order: vertex count, then edge count
        sizes = [(p.k, len(p.edges)) for p in pats]
        assert sizes == sorted(sizes)

    def test_self_distance(self, rng):
        q = random_step_graphon(rng, 3)
        assert dbar_distance(q, q).value == 0.0

    def test_single_term_example(self):
        res = dbar_distance(StepGraphon.constant(0.2), StepGraphon.constant(0.7), 2)
        assert res.value == pytest.approx(0.25, abs=1e-12)
        assert res.graph_count == 1

    def test_truncation_monotone_with_tail_bound(self, rng):
        q1 = random_step_graphon(rng, 3)
        q2 = random_step_graphon(rng, 2)
        r4 = dbar_distance(q1, q2, 4)
        r5 = dbar_distance(q1, q2, 5)
        assert r4.value <= r5.value + 1e-15
        assert r5.value - r4.value <= 2.0**-r4.graph_count
        assert r4.graph_count == 9 and r5.graph_count == 30

    def test_max_order_bounds(self, rng):
        q = random_step_graphon(rng, 2)
        with pytest.raises(ValueError):
            dbar_distance(q, q, 6)
