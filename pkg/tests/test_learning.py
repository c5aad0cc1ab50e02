import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsmsketch.core import Sketch, Stroke, centroid, flip_horizontal
from dsmsketch.errors import InvalidArgumentError, InvalidModelError
from dsmsketch.grouping import SemanticGroup
from dsmsketch.learning import (
    ClusterEntry, LearningParams, SemanticItem, affinity, affinity_matrix, fit_gaussian, fit_offsets, kruskal,
    learn_model, mst_structure, ncut_value, rotation_angles, select_exemplars, spectral_cluster,
)
from dsmsketch.matching import sc_cost, shape_context
from dsmsketch.synthetic import circle, three_part_corpus, wave

from oracles import best_two_way_ncut, min_spanning_weight, partition_ncut, prufer_trees


def item(points_list, sketch_index=0):
    strokes = [Stroke("s%d" % i, i, p) for i, p in enumerate(points_list)]
    return SemanticItem(sketch_index, strokes, centroid(strokes), np.zeros(4),
                        sum(s.length for s in strokes), shape_context(strokes))


def located(sketch_index, loc):
    it = SemanticItem(sketch_index, [], np.asarray(loc, float), np.zeros(4), 1.0)
    return it


def true_groups(k):
    """Consecutive strokes sharing a part, by nearest part centre."""
    centres = np.array([(80, 80), (160, 190), (240, 80)])
    part = [int(np.argmin(np.linalg.norm(centres - s.points.mean(axis=0), axis=1))) for s in k.strokes]
    groups = []
    for p in dict.fromkeys(part):
        ids = tuple(s.id for s, q in zip(k.strokes, part) if q == p)
        groups.append(SemanticGroup(len(groups), ids, sum(s.length for s, q in zip(k.strokes, part) if q == p)))
    return groups


class TestAffinity:
    def test_self(self):
        assert affinity(0.0, (3, 4), (3, 4), 1.0, 2.0) == 1.0

    def test_unit_exponent(self):
        assert math.isclose(affinity(1.0, (0, 0), (6, 0), 2.0, 3.0), math.exp(-1))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 5), st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
           st.tuples(st.floats(-100, 100), st.floats(-100, 100)), st.floats(0.1, 20), st.floats(0.1, 20))
    def test_symmetric_and_bounded(self, k, a, b, ra, rb):
        v = affinity(k, a, b, ra, rb)
        assert v == affinity(k, b, a, rb, ra)
        assert 0 <= v <= 1

    def test_matrix(self):
        rng = np.random.default_rng(0)
        k = rng.uniform(0, 1, (8, 8))
        k = k + k.T
        np.fill_diagonal(k, 0)
        a = affinity_matrix(k, rng.uniform(0, 100, (8, 2)))
        assert np.allclose(a, a.T)
        assert np.all((a > 0) & (a <= 1))
        assert np.all(np.diag(a) == 1)


class TestSpectral:
    def test_blocks(self):
        a = np.zeros((6, 6))
        a[:3, :3] = 1
        a[3:, 3:] = 1
        labels = spectral_cluster(a, 2)
        assert list(labels) == [0, 0, 0, 1, 1, 1]

    def test_identity(self):
        assert sorted(spectral_cluster(np.eye(5), 5)) == [0, 1, 2, 3, 4]

    def test_k_too_large(self):
        with pytest.raises(InvalidArgumentError):
            spectral_cluster(np.eye(3), 4)

    def test_matches_ncut_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            pts = np.vstack([rng.normal(0, 1, (3, 2)), rng.normal(0, 1, (3, 2)) + rng.uniform(4, 8)])
            d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
            a = np.exp(-d ** 2 / 4)
            labels = spectral_cluster(a, 2)
            best, arg = best_two_way_ncut(a.tolist())
            assert math.isclose(ncut_value(a, labels), best, rel_tol=1e-9)
            assert math.isclose(partition_ncut(a.tolist(), list(labels)), best, rel_tol=1e-9)

    def test_order_invariant(self):
        rng = np.random.default_rng(4)
        pts = np.vstack([rng.normal(c, 0.5, (4, 2)) for c in ((0, 0), (6, 0), (0, 6))])
        d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
        a = np.exp(-d ** 2 / 2)
        base = spectral_cluster(a, 3)
        for _ in range(5):
            perm = rng.permutation(len(a))
            lab = spectral_cluster(a[np.ix_(perm, perm)], 3)
            back = np.empty_like(lab)
            back[perm] = lab
            same = lambda x, y: all((x[i] == x[j]) == (y[i] == y[j]) for i in range(len(x)) for j in range(len(x)))
            assert same(base, back)

    def test_nonempty(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(0, 1, (9, 9))
        a = (a + a.T) / 2
        np.fill_diagonal(a, 1)
        assert sorted(set(spectral_cluster(a, 4))) == [0, 1, 2, 3]


class TestExemplars:
    def members(self):
        c = [item([circle((50, 50), 20 + d, 30)]) for d in (0, 1)]
        odd = item([wave((50, 50), 60, 15)])
        return c + [odd]

    def test_all_unrotated(self):
        m = self.members()
        ex = select_exemplars(m, 1.0, 0)
        assert len(ex) == 3
        assert {id(e.strokes[0]) for e in ex} == {id(x.strokes[0]) for x in m}

    def test_outlier_excluded(self):
        m = self.members()
        costs = np.array([[sc_cost(a.descriptor, b.descriptor) for b in m] for a in m])
        mean = costs.sum(axis=1) / 2
        assert np.argmax(mean) == 2  # the oracle agrees the wave is the outlier
        ex = select_exemplars(m, 2 / 3, 0)
        assert len(ex) == 2
        assert all(e.strokes[0] is not m[2].strokes[0] for e in ex)

    def test_rotations(self):
        np.testing.assert_allclose(rotation_angles(2, 10), [-10, 10])
        np.testing.assert_allclose(rotation_angles(3, 10), [-10, 0, 10])
        m = [item([[(40, 50), (60, 50)]])]
        ex = select_exemplars(m, 1.0, 2, 10)
        assert len(ex) == 3
        angles = []
        for e in ex[1:]:
            d = e.strokes[0].points[-1] - e.strokes[0].points[0]
            angles.append(math.degrees(math.atan2(d[1], d[0])))
            np.testing.assert_allclose(e.strokes[0].points.mean(axis=0), (50, 50), atol=1e-9)
        np.testing.assert_allclose(angles, [-10, 10], atol=1e-9)

    def test_count_bound(self):
        m = self.members()
        for frac in (0.1, 0.5, 1.0):
            for r in (0, 1, 2):
                ex = select_exemplars(m, frac, r)
                assert 1 <= len(ex) <= len(m) * (r + 1)

    def test_errors(self):
        with pytest.raises(InvalidArgumentError):
            select_exemplars([], 0.5)
        with pytest.raises(InvalidArgumentError):
            select_exemplars(self.members(), 0)


class TestStructure:
    def test_two_clusters(self):
        c = [ClusterEntry(0, [located(0, (0, 0))]), ClusterEntry(1, [located(0, (10, 0))])]
        assert mst_structure(c, 100) == [(0, 1)]

    def test_three_clusters(self):
        w = np.array([[0, 0.1, 0.5], [0.1, 0, 0.2], [0.5, 0.2, 0]])
        assert kruskal(w) == [(0, 1), (1, 2)]
        assert kruskal(np.log(np.where(w > 0, w, 1))) == [(0, 1), (1, 2)]

    def test_single_cluster(self):
        with pytest.raises(InvalidArgumentError):
            mst_structure([ClusterEntry(0, [located(0, (0, 0))])], 100)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2 ** 31))
    def test_exhaustive_trees(self, n, seed):
        w = np.random.default_rng(seed).uniform(0, 1, (n, n))
        w = (w + w.T) / 2
        tree = kruskal(w)
        assert len(tree) == n - 1
        assert math.isclose(sum(w[i, j] for i, j in tree), min_spanning_weight(w.tolist()), rel_tol=1e-12)

    def test_cayley(self):
        assert sum(1 for _ in prufer_trees(5)) == 125

    def test_product_weights(self):
        # cluster 0 and 1 are close in every sketch, 2 is far from both
        locs = {0: [(0, 0), (0, 0)], 1: [(10, 0), (12, 0)], 2: [(200, 0), (205, 0)]}
        c = [ClusterEntry(k, [located(s, v[s]) for s in range(2)]) for k, v in locs.items()]
        assert mst_structure(c, 400) == [(0, 1), (1, 2)]

    def test_missing_cooccurrence_is_expensive(self):
        c = [ClusterEntry(0, [located(0, (0, 0)), located(1, (0, 0))]),
             ClusterEntry(1, [located(0, (390, 0))]),
             ClusterEntry(2, [located(1, (395, 0))])]
        # 1 and 2 never share a sketch, so connecting them costs most
        assert sorted(mst_structure(c, 400)) == [(0, 1), (0, 2)]


class TestGaussian:
    def test_two_offsets(self):
        g = fit_gaussian([(1, 0), (3, 0)])
        np.testing.assert_allclose(g.mean, (2, 0))
        np.testing.assert_allclose(g.cov, [[2, 0], [0, 1]])

    def test_single(self):
        g = fit_gaussian([(5, 5)])
        np.testing.assert_allclose(g.mean, (5, 5))
        np.testing.assert_allclose(g.cov, np.eye(2))

    def test_symmetric(self):
        g = fit_gaussian([(1, 2), (-1, -2), (3, -1), (-3, 1)])
        np.testing.assert_allclose(g.mean, (0, 0), atol=1e-12)

    def test_empty(self):
        with pytest.raises(InvalidModelError):
            fit_gaussian([])
        c = [ClusterEntry(0, [located(0, (0, 0))]), ClusterEntry(1, [located(1, (1, 0))])]
        with pytest.raises(InvalidModelError):
            fit_offsets([(0, 1)], c)

    def test_recovers_known_gaussian(self):
        rng = np.random.default_rng(7)
        mu = np.array([40.0, -15.0])
        cov = np.array([[30.0, 8.0], [8.0, 12.0]])
        m = 200
        fails = 0
        for _ in range(20):
            x = rng.multivariate_normal(mu, cov, m)
            g = fit_gaussian(x, ridge=0.0)
            sd = np.sqrt(np.diag(cov))
            ok = np.all(np.abs(g.mean - mu) <= 4 * sd / math.sqrt(m))
            ok &= np.linalg.norm(g.cov - cov) / np.linalg.norm(cov) < 0.3
            fails += not ok
        assert fails == 0


class TestLearnModel:
    def test_identical_copies(self):
        k = three_part_corpus(1, seed=0)[0]
        groups = true_groups(k)
        m = learn_model([(k, groups)] * 5)
        assert len(m.clusters) == 3
        assert len(m.edges) == 2
        # each cluster holds one part from every copy
        centres = []
        for c in m.clusters:
            locs = np.array([e.anchor for e in c.exemplars if "rot" not in e.source])
            assert np.ptp(locs, axis=0).max() < 1e-9
            centres.append(locs[0])
        assert len({tuple(np.round(c, 6)) for c in centres}) == 3

    def test_purity_on_varied_corpus(self):
        corpus = three_part_corpus(10, seed=1)
        m = learn_model([(k, true_groups(k)) for k in corpus])
        targets = np.array([(80, 80), (160, 190), (240, 80)])
        assigned = set()
        for c in m.clusters:
            parts = {int(np.argmin(np.linalg.norm(targets - e.anchor, axis=1))) for e in c.exemplars}
            assert len(parts) == 1
            assigned |= parts
        assert assigned == {0, 1, 2}
        for g in m.offsets:
            assert np.all(np.linalg.eigvalsh(g.cov) > 0)
        totals = [c.total_length for c in m.clusters]
        assert m.root == int(np.argmax(totals))

    def test_two_part_offset(self):
        rng = np.random.default_rng(11)
        pairs = []
        noise = 2.0
        for i in range(30):
            base = np.array([120.0, 150.0]) + rng.normal(0, 10, 2)
            # symmetric shapes so the point centroid is the placement centre
            ca, cb = base + rng.normal(0, noise, 2), base + (50, 0) + rng.normal(0, noise, 2)
            a = np.column_stack([np.full(11, ca[0]), ca[1] + np.linspace(-20, 20, 11)])
            b = np.column_stack([cb[0] + np.linspace(-15, 15, 11), np.full(11, cb[1])])
            k = Sketch(300, 300, (Stroke("0", 0, a), Stroke("1", 1, b)))
            pairs.append((k, [SemanticGroup(0, ("0",), 1.0), SemanticGroup(1, ("1",), 1.0)]))
        m = learn_model(pairs)
        (i, j), = m.edges
        ci = m.clusters[i].exemplars[0].anchor
        sign = 1 if ci[0] > m.clusters[j].exemplars[0].anchor[0] else -1
        want = sign * np.array([50.0, 0.0])
        sem = noise * math.sqrt(2) / math.sqrt(30)
        assert np.all(np.abs(m.offsets[0].mean - want) <= 3 * sem)

    def test_mirrored_sketches_normalized(self):
        corpus = three_part_corpus(6, seed=2)
        plain = learn_model([(k, true_groups(k)) for k in corpus])
        mixed = [(flip_horizontal(k) if i % 2 else k, true_groups(k)) for i, k in enumerate(corpus)]
        m = learn_model(mixed)
        assert m.edges == plain.edges
        for a, b in zip(m.offsets, plain.offsets):
            np.testing.assert_allclose(a.mean, b.mean, atol=1e-6)

    def test_degenerate(self):
        k = Sketch(100, 100, (Stroke("0", 0, [(10, 10), (50, 50)]),))
        g = [SemanticGroup(0, ("0",), 1.0)]
        with pytest.raises(InvalidModelError):
            learn_model([(k, g), (k, g)])
        with pytest.raises(InvalidArgumentError):
            learn_model([(k, g)])

    def test_explicit_k(self):
        corpus = three_part_corpus(4, seed=3)
        m = learn_model([(k, true_groups(k)) for k in corpus], LearningParams(n_clusters=2))
        assert len(m.clusters) == 2
