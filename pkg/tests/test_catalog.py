#!/usr/bin/env python

import unittest

import numpy as np

import frontend
import storage
from catalog import Catalog, build_histogram, collect_stats, estimate_selectivity
from errors import DuplicateFunction, Inestimable, UnsupportedColumnKind
from frontend import And, ColumnId, Comparison, Equality, FnCall, Not, Or, Range

X = ColumnId('t', 'x', storage.INT64)
TAG = ColumnId('t', 'tag', storage.TEXT)


def make_table(values, tags=None, nulls=None):
    tags = tags if tags is not None else np.zeros(len(values), dtype=np.int64)

    return storage.build_table('t', [('x', storage.INT64), ('tag', storage.TEXT)],
        [np.asarray(values, dtype=np.int64), np.asarray(tags, dtype=np.int64)],
        null_masks=[nulls, None] if nulls is not None else None,
        dictionaries=[None, storage.Dictionary(['a', 'b', 'c', 'd'])])


class HistogramTestCase(unittest.TestCase):
    def test_equi_depth_buckets(self):
        hist = build_histogram(make_table(np.arange(1, 101)), 'x', 4)

        assert hist.k == 4
        assert list(hist.lows) == [1, 26, 51, 76]
        assert list(hist.highs) == [25, 50, 75, 100]
        assert list(hist.counts) == [25, 25, 25, 25]
        assert list(hist.distinct) == [25, 25, 25, 25]
        assert hist.total == 100

    def test_estimates(self):
        hist = build_histogram(make_table(np.arange(1, 101)), 'x', 4)

        assert hist.equality(10) == 1.0
        assert hist.equality(1000) == 0.0
        assert hist.between(1, 50) == 50.0
        assert hist.between(10, 12) == 3.0
        assert hist.between(12, 10) == 0.0

    def test_repeated_values_stay_in_one_bucket(self):
        hist = build_histogram(make_table([7, 7, 7, 7, 1, 7, 7, 2, 7, 7]), 'x', 2)

        assert list(hist.counts) == [2, 8]
        assert list(hist.distinct) == [2, 1]
        assert hist.equality(7) == 8.0

    def test_nulls_are_left_out(self):
        nulls = np.array([False, True, False, True])
        hist = build_histogram(make_table([1, 2, 3, 4], nulls=nulls), 'x', 2)

        assert hist.total == 2
        assert hist.row_count == 4

    def test_empty_column(self):
        hist = build_histogram(make_table([]), 'x', 3)

        assert hist.total == 0
        assert hist.between(0, 10) == 0.0

    def test_unsupported_columns(self):
        with self.assertRaises(UnsupportedColumnKind):
            build_histogram(make_table([1, 2]), 'tag', 2)

        with self.assertRaises(UnsupportedColumnKind):
            build_histogram(make_table([1, 2]), 'x', 0)


class EstimatorTestCase(unittest.TestCase):
    def setUp(self):
        self.table = make_table(np.arange(1, 101), np.arange(100) % 4)
        self.hists = {'x': build_histogram(self.table, 'x', 4)}
        self.stats = collect_stats(self.table)

    def estimate(self, pred):
        return estimate_selectivity(self.hists, pred, self.stats)

    def test_atoms(self):
        assert self.estimate(Comparison(X, '<=', 50)) == 0.5
        assert self.estimate(Comparison(X, '>', 75)) == 0.25
        assert self.estimate(Equality(X, 10)) == 0.01
        assert self.estimate(Range(X, 10, 12)) == 0.03

    def test_independence(self):
        half = Comparison(X, '<=', 50)
        point = Equality(X, 10)

        assert abs(self.estimate(And((half, point))) - 0.005) < 1e-12
        assert abs(self.estimate(Or((half, point))) - 0.505) < 1e-12
        assert self.estimate(Not(half)) == 0.5

    def test_clamped(self):
        assert self.estimate(Or((Comparison(X, '>=', 0), Comparison(X, '>=', 0)))) == 1.0
        assert self.estimate(frontend.FALSE) == 0.0

    def test_text_equality_uses_distinct_count(self):
        assert self.estimate(Equality(TAG, 'a')) == 0.25

    def test_inestimable(self):
        with self.assertRaises(Inestimable):
            self.estimate(FnCall('udf', (X,), '>', 1.0))

        with self.assertRaises(Inestimable):
            self.estimate(Comparison(TAG, '<', 'b'))

        with self.assertRaises(Inestimable):
            estimate_selectivity({}, Equality(X, 1))


class CatalogTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = Catalog()
        self.table = self.catalog.database.register(make_table([1, 2, 2, 3], [0, 1, 1, 3]))

    def test_stats(self):
        stats = self.catalog.stats('t')

        assert stats.row_count == 4
        assert stats.ndv('x') == 3
        assert stats.ndv('tag') == 3
        assert (stats.columns['x'].min, stats.columns['x'].max) == (1, 3)
        assert stats.columns['tag'].min is None

    def test_caches_follow_table_versions(self):
        first = self.catalog.stats('t')

        assert self.catalog.stats('t') is first

        self.catalog.database.append_rows('t', [(9, 'a')])

        assert self.catalog.stats('t') is not first
        assert self.catalog.stats('t').row_count == 5
        assert self.catalog.histogram('t', 'x', 2).total == 5

    def test_histograms_for_skips_text(self):
        hists = self.catalog.histograms_for('t', And((Equality(X, 1), Equality(TAG, 'a'))), 2)

        assert list(hists) == ['x']

    def test_udf_registry(self):
        udf = self.catalog.register_udf('Twice', 1, lambda v: v * 2)

        assert self.catalog.udfs.get('TWICE') is udf
        assert self.catalog.udfs.names() == ['twice']

        with self.assertRaises(DuplicateFunction):
            self.catalog.register_udf('twice', 1, lambda v: v)


if __name__ == '__main__':
    unittest.main()
