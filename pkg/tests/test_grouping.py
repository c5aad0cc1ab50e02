import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsmsketch.core import Sketch, Stroke
from dsmsketch.errors import InvalidArgumentError
from dsmsketch.grouping import (
    GroupingParams, SemanticGroup, b_sim, combine_error, d_con, d_len, d_pro, f_mod, f_temp, greedy_merge,
    group_sketch, grouping_context, pair_error, proximity_scale, similarity_bonus,
)
from dsmsketch.matching import sc_cost, shape_context

from oracles import reference_greedy
from sketches import sketch, straight, two_distant_pairs, twelve_strokes


def stroke(pts, sid="s", order=0):
    return Stroke(sid, order, pts)


class TestProximity:
    def test_identical(self):
        s = stroke(straight((0, 0), (10, 0)))
        assert d_pro(s, s, 5.0) == 0

    def test_unit_at_scale(self):
        a = stroke(straight((0, 0), (10, 0)))
        b = stroke(straight((0, 7), (10, 7)))
        assert math.isclose(d_pro(a, b, 7.0), 1.0)

    def test_formula(self):
        eps = proximity_scale(90000, 9)
        assert eps == 50
        a = stroke(straight((0, 0), (100, 0), 51))
        b = stroke(straight((0, 25), (100, 25), 51))
        assert math.isclose(d_pro(a, b, eps), 0.5)


class TestContinuity:
    def test_collinear(self):
        a = stroke([(0, 0), (10, 0)])
        b = stroke([(20, 0), (30, 0)])
        assert math.isclose(d_con(a, b, 10.0), 1.0)

    def test_perpendicular(self):
        a = stroke([(0, 0), (10, 0)])
        b = stroke([(20, 0), (20, 10)])
        assert math.isclose(d_con(a, b, 10.0), 1 + math.pi / 2)

    def test_touching(self):
        a = stroke([(0, 0), (10, 0)])
        b = stroke([(10, 0), (10, 30)])
        assert d_con(a, b, 10.0) == 0

    def test_literal_convention(self):
        a = stroke([(0, 0), (10, 0)])
        b = stroke([(20, 0), (30, 0)])
        assert math.isclose(d_con(a, b, 10.0, convention="literal"), 1 + math.pi)

    def test_short_stroke_uses_far_end(self):
        a = stroke([(0, 0), (4, 0)])
        b = stroke([(14, 0), (18, 0)])
        assert math.isclose(d_con(a, b, 10.0), 1.0)

    def test_inward_point_ten_px(self):
        # a bends 10 px from its end: the inward point sits at the bend
        a = stroke([(0, 10), (0, 0), (10, 0)])
        b = stroke([(20, 0), (30, 0)])
        assert math.isclose(d_con(a, b, 10.0), 1.0)


class TestLength:
    def test_sum(self):
        a = stroke([(0, 0), (300, 0)], "a")
        b = stroke([(0, 0), (500, 0)], "b")
        assert math.isclose(d_len(a, b, 1500), 800 / 1500)

    def test_group_substitution(self):
        a = stroke([(0, 0), (300, 0)], "a")
        b = stroke([(0, 0), (300, 0)], "b")
        assert math.isclose(d_len(a, b, 1500, {"a": 1200}), 1.0)

    def test_lambda(self):
        k = sketch([straight((0, 0), (10, 0)), straight((0, 5), (10, 5))])
        ctx = grouping_context(k, GroupingParams(tau=1500, eta_sem=1))
        assert ctx.lam == 1500


class TestSimilarity:
    @pytest.mark.parametrize("k,v", [(0, 1.0), (2.0, math.exp(-1)), (4.0, math.exp(-4))])
    def test_bonus(self, k, v):
        assert math.isclose(similarity_bonus(k, 2.0), v)

    def test_b_sim_uses_sc_cost(self):
        a = stroke(straight((0, 0), (50, 10)))
        b = stroke([(0, 0), (20, 30), (40, 0)])
        k = sc_cost(shape_context(a), shape_context(b))
        assert math.isclose(b_sim(a, b, 0.3), math.exp(-k * k / 0.09))


class TestFactors:
    def test_temp(self):
        a, b, c = stroke([(0, 0), (1, 0)], "a", 0), stroke([(0, 0), (1, 0)], "b", 1), stroke([(0, 0), (1, 0)], "c", 5)
        assert math.isclose(f_temp(a, b, 3, 0.33), 0.67)
        assert math.isclose(f_temp(a, c, 3, 0.33), 1.33)
        assert f_temp(a, c, 3, 0.0) == 1.0

    def test_mod(self):
        a, b = stroke([(0, 0), (1, 0)], "a"), stroke([(0, 0), (1, 0)], "b")
        assert math.isclose(f_mod(a, b, {"a": 1, "b": 1}, 0.33), 0.67)
        assert math.isclose(f_mod(a, b, {"a": 1, "b": 2}, 0.33), 1.33)
        assert f_mod(a, b, None, 0.33) == 1.0


class TestPairError:
    def test_toy_combination(self):
        p = GroupingParams()
        assert math.isclose(combine_error(0.5, 1.0, 0.5, 0.5, 0.67, 1.0, p), 0.33165)

    def test_all_weights_zero(self):
        k = two_distant_pairs()
        p = GroupingParams(w_pro=0, w_con=0, w_len=0, w_sim=0)
        assert pair_error(k.strokes[0], k.strokes[2], p, k) == 0

    def test_reduction_without_similarity(self):
        k = two_distant_pairs()
        p = GroupingParams(w_sim=0, mu_temp=0, mu_mod=0, tau=500)
        a, b = k.strokes[0], k.strokes[2]
        eps = proximity_scale(k.area, len(k))
        want = 0.33 * (d_pro(a, b, eps) + d_con(a, b, eps / 4) + d_len(a, b, 500))
        assert math.isclose(pair_error(a, b, p, k), want, rel_tol=1e-12)

    def test_full_composition(self):
        k = two_distant_pairs()
        p = GroupingParams(sigma=0.5, tau=800, eta_avg=2)
        a, b = k.strokes[1], k.strokes[2]
        eps = proximity_scale(k.area, 2)
        delta = 4 / 2
        want = combine_error(d_pro(a, b, eps), d_con(a, b, eps / 4), d_len(a, b, 800), b_sim(a, b, 0.5),
                             f_temp(a, b, delta, 0.33), 1.0, p)
        assert math.isclose(pair_error(a, b, p, k), want, rel_tol=1e-12)

    def test_group_lengths(self):
        k = two_distant_pairs()
        p = GroupingParams(w_pro=0, w_con=0, w_sim=0, mu_temp=0, tau=1000)
        g = [SemanticGroup(0, ("0", "1"), 500.0)]
        assert math.isclose(pair_error(k.strokes[0], k.strokes[3], p, k, g), (500 + k.strokes[3].length) * 0.33 / 1000)

    def test_distinct(self):
        k = two_distant_pairs()
        with pytest.raises(InvalidArgumentError):
            pair_error(k.strokes[0], k.strokes[0], GroupingParams(), k)

    def test_lambda_monotone(self):
        k = twelve_strokes()
        prev = None
        for tau in (200, 500, 1500, 3000, 10000):
            ctx = grouping_context(k, GroupingParams(tau=tau))
            e = ctx.errors(ctx.lengths)
            if prev is not None:
                assert np.all(e <= prev + 1e-12)
            prev = e


class TestParams:
    @pytest.mark.parametrize("kw", [dict(w_pro=-1), dict(mu_temp=1.0), dict(mu_mod=-0.1), dict(tau=0),
                                    dict(eta_sem=0.5), dict(continuity="sideways")])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgumentError):
            GroupingParams(**kw)

    def test_default_tau(self):
        k = two_distant_pairs()
        longest = max(s.length for s in k.strokes)
        assert math.isclose(grouping_context(k, GroupingParams()).lam, 0.9 * longest)
        assert math.isclose(grouping_context(k, GroupingParams(eta_sem=2)).lam, 2 * longest)


class TestGroupSketch:
    def test_collinear_pair(self):
        k = sketch([straight((10, 10), (60, 10)), straight((65, 10), (115, 10))])
        g = group_sketch(k, GroupingParams(h=10))
        assert [x.members for x in g] == [("0", "1")]

    def test_two_distant_pairs(self):
        g = group_sketch(two_distant_pairs())
        assert [x.members for x in g] == [("0", "1"), ("2", "3")]

    def test_minus_infinity(self):
        g = group_sketch(two_distant_pairs(), GroupingParams(h=-math.inf))
        assert [x.members for x in g] == [("0",), ("1",), ("2",), ("3",)]

    def test_partition_and_lengths(self):
        k = twelve_strokes()
        g = group_sketch(k, GroupingParams(tau=1500))
        members = [m for x in g for m in x.members]
        assert sorted(members) == sorted(s.id for s in k.strokes)
        by_id = {s.id: s.length for s in k.strokes}
        for x in g:
            assert math.isclose(x.total_length, sum(by_id[m] for m in x.members))

    def test_deterministic(self):
        k = twelve_strokes()
        a = group_sketch(k, GroupingParams(tau=1500))
        b = group_sketch(k, GroupingParams(tau=1500))
        assert [x.members for x in a] == [x.members for x in b]

    def test_labels_pull_together(self):
        k = two_distant_pairs()
        p = GroupingParams(h=0.6)
        assert len(group_sketch(k, p, {"0": 0, "1": 0, "2": 1, "3": 1})) <= len(group_sketch(k, p))
        apart = group_sketch(k, p, {"0": 0, "1": 1, "2": 2, "3": 3})
        assert len(apart) >= len(group_sketch(k, p))


errors_and_lengths = st.integers(2, 7).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.floats(-0.5, 2.0), min_size=n, max_size=n), min_size=n, max_size=n),
    st.lists(st.floats(1.0, 100.0), min_size=n, max_size=n),
))


class TestGreedy:
    @settings(max_examples=150, deadline=None)
    @given(errors_and_lengths, st.floats(0.0, 0.01), st.floats(-0.5, 3.0))
    def test_matches_reference(self, data, lam_weight, h):
        base, lengths = data
        n = len(lengths)
        base = np.array(base)
        base = 0.5 * (base + base.T)
        lengths = np.array(lengths)

        def errors(eff):
            return base + lam_weight * (eff[:, None] + eff[None, :])

        group_of, _ = greedy_merge(errors(lengths), lengths, h, errors)
        got = {}
        for i in range(n):
            got.setdefault(("g", group_of[i]) if group_of[i] >= 0 else ("s", i), []).append(i)
        got = sorted(tuple(v) for v in got.values())
        assert got == reference_greedy(base.tolist(), lengths.tolist(), lam_weight, h)

    @settings(max_examples=80, deadline=None)
    @given(errors_and_lengths, st.floats(0.0, 0.01), st.floats(-0.5, 2.0), st.floats(0.0, 1.0))
    def test_threshold_prefix(self, data, lam_weight, h1, dh):
        base, lengths = data
        base = np.array(base)
        base = 0.5 * (base + base.T)
        lengths = np.array(lengths)

        def errors(eff):
            return base + lam_weight * (eff[:, None] + eff[None, :])

        _, m1 = greedy_merge(errors(lengths), lengths, h1, errors)
        g2, m2 = greedy_merge(errors(lengths), lengths, h1 + dh, errors)
        assert m2[:len(m1)] == m1
        g1, _ = greedy_merge(errors(lengths), lengths, h1, errors)
        largest = lambda g: max(np.bincount(g[g >= 0]).max() if (g >= 0).any() else 1, 1)
        assert largest(g2) >= largest(g1)

    def test_lexicographic_ties(self):
        base = np.zeros((4, 4))
        lengths = np.ones(4)
        _, merges = greedy_merge(base, lengths, 1.0, lambda eff: base)
        assert merges[0] == (0, 1)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(10, 390), st.floats(10, 390), st.floats(10, 390), st.floats(10, 390)),
                min_size=1, max_size=7), st.floats(-1, 3))
def test_groups_partition_any_sketch(segs, h):
    paths = [straight((a, b), (c, d)) for a, b, c, d in segs if math.hypot(a - c, b - d) > 1]
    if not paths:
        return
    k = sketch(paths)
    g = group_sketch(k, GroupingParams(h=h))
    members = [m for x in g for m in x.members]
    assert sorted(members) == sorted(s.id for s in k.strokes)
    assert len(set(members)) == len(members)
