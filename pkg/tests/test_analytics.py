import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsmsketch import analytics
from dsmsketch.analytics import (
    ABOVE, BELOW, LONG, MEDIUM, SHORT, class_counts, length_class, length_histogram, order_colormap,
    temporal_matrix,
)
from dsmsketch.core import Sketch, Stroke
from dsmsketch.errors import InvalidArgumentError


def sketch_of(lengths, canvas=5000.0):
    strokes = [Stroke(str(i), i, [(0, i), (length, i)]) for i, length in enumerate(lengths)]
    return Sketch(canvas, canvas, strokes)


class TestHistogram:
    def test_two_bins(self):
        assert length_histogram([sketch_of([100, 1500])], 1000).counts == [1, 1]

    def test_right_open(self):
        assert length_histogram([sketch_of([999.9, 1000.0])], 1000).counts == [1, 1]

    def test_single_bin(self):
        assert length_histogram([sketch_of([50] * 10)], 1000).counts == [10]

    def test_empty(self):
        h = length_histogram([], 100)
        assert h.counts == [] and h.total == 0

    def test_bad_width(self):
        with pytest.raises(InvalidArgumentError):
            length_histogram([], 0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.lists(st.floats(1, 4000), min_size=1, max_size=8), min_size=1, max_size=5),
           st.randoms(use_true_random=False))
    def test_total_permutation_invariant(self, sets, rnd):
        sketches = [sketch_of(ls) for ls in sets]
        h = length_histogram(sketches, 250)
        rnd.shuffle(sketches)
        assert h == length_histogram(sketches, 250)
        assert h.total == sum(len(ls) for ls in sets)


class TestLengthClass:
    @pytest.mark.parametrize("length,code", [(500, SHORT), (1500, MEDIUM), (2500, LONG)])
    def test_default_thresholds(self, length, code):
        assert length_class(length, 1000, 2000) == code

    def test_boundaries_are_medium(self):
        assert length_class(1000) == MEDIUM
        assert length_class(2000) == MEDIUM

    @pytest.mark.parametrize("short_max,long_min", [(0, 10), (20, 10), (-1, 5)])
    def test_bad_thresholds(self, short_max, long_min):
        with pytest.raises(InvalidArgumentError):
            length_class(5, short_max, long_min)

    @given(st.floats(1e-6, 1e5), st.floats(1, 3000), st.floats(0, 3000))
    def test_exhaustive_and_exclusive(self, length, short_max, extra):
        long_min = short_max + extra
        code = length_class(length, short_max, long_min)
        hits = [length < short_max, short_max <= length <= long_min, length > long_min]
        assert sum(hits) == 1
        assert code == (SHORT, MEDIUM, LONG)[hits.index(True)]

    def test_class_counts(self):
        assert class_counts([sketch_of([10, 1000, 2001, 3000])]) == {SHORT: 1, MEDIUM: 1, LONG: 2}


class TestTemporal:
    def test_two_strokes(self):
        assert temporal_matrix([sketch_of([10, 100])]).rows == [[BELOW, ABOVE]]

    def test_ties_below(self):
        assert temporal_matrix([sketch_of([5, 5, 5])]).rows == [[BELOW] * 3]

    def test_sorted_by_count(self):
        tm = temporal_matrix([sketch_of([1, 2, 3]), sketch_of([1, 2])])
        assert [len(r) for r in tm.rows] == [2, 3]
        assert tm.sketch_index == [1, 0]

    def test_follows_drawing_order(self):
        strokes = [Stroke("a", 1, [(0, 0), (100, 0)]), Stroke("b", 0, [(0, 1), (1, 1)])]
        assert temporal_matrix([Sketch(200, 200, strokes)]).rows == [[BELOW, ABOVE]]

    def test_row_sizes(self):
        sk = [sketch_of([1] * n) for n in (4, 1, 3)]
        tm = temporal_matrix(sk)
        assert sorted(len(r) for r in tm.rows) == [1, 3, 4]


class TestColormap:
    @pytest.mark.parametrize("n,ranks", [(3, [0, 0.5, 1]), (1, [0]), (5, [0, 0.25, 0.5, 0.75, 1])])
    def test_ranks(self, n, ranks):
        assert [r for _, r in order_colormap(sketch_of([10] * n))] == ranks

    def test_colors(self):
        assert analytics.order_color(0) == "#0000ff"
        assert analytics.order_color(1) == "#ff0000"


def test_report_and_figures():
    sk = [sketch_of([100, 1500, 2500]), sketch_of([300])]
    rep = analytics.analysis_report(sk, bin_width=1000)
    assert rep["n_strokes"] == 4
    assert rep["histogram"]["counts"] == [2, 1, 1]
    assert rep["classes"] == {SHORT: 2, MEDIUM: 1, LONG: 1}
    assert analytics.histogram_svg(length_histogram(sk, 1000)).count("<rect") == 4
    assert analytics.temporal_svg(temporal_matrix(sk)).count("<rect") == 5
    assert np.isfinite(rep["order_colormaps"][0]["ranks"][2][1])
