#!/usr/bin/env python

import unittest

import numpy as np

import bench
import frontend
import storage
from catalog import Catalog, UdfRegistry
from engine import Engine
from errors import EngineError, UdfError
from executor import Executor, RowSelection, capacity_for, splitmix64
from etc import queries
from frontend import And, ColumnId, Comparison, Equality, FnCall, Not, Or, Range
from optimizer import EscConfig
from tests import oracle

X = ColumnId('t', 'x', storage.INT64)
S = ColumnId('t', 's', storage.TEXT)
P = ColumnId('t', 'p', storage.decimal(10, 2))


def make_table():
    """
    x: 1, 2, NULL, 4
    s: 'a', 'b', 'b', 'c'
    p: 1.50, 2.50, 3.50, NULL
    """
    return storage.build_table('t', [('x', storage.INT64), ('s', storage.TEXT), ('p', storage.decimal(10, 2))],
        [np.array([1, 2, 0, 4]), np.array([0, 1, 1, 2]), np.array([150, 250, 350, 0])],
        null_masks=[np.array([False, False, True, False]), None, np.array([False, False, False, True])],
        dictionaries=[None, storage.Dictionary(['a', 'b', 'c']), None])


class PredicateTestCase(unittest.TestCase):
    def setUp(self):
        self.table = make_table()
        self.udfs = UdfRegistry()
        self.udfs.register('f', 2, lambda x, p: x + p)
        self.udfs.register('g', 1, lambda x: 1 / (x - 4))
        self.udfs.register('h', 2, lambda x, p: x * p, vectorized=True)
        self.executor = Executor(storage.Database(), self.udfs)

    def rows(self, pred):
        selected = list(self.executor.eval_predicate(self.table, pred).as_indices())

        assert selected == oracle.matching_rows(self.table, pred, self.udfs)
        assert self.executor.count_star(self.table, pred) == len(selected)

        return selected

    def test_unknown_rows_are_dropped(self):
        assert self.rows(Not(Equality(X, 1))) == [1, 3]
        assert self.rows(And((Comparison(X, '>', 0), Equality(S, 'b')))) == [1]

    def test_true_wins_over_unknown(self):
        assert self.rows(Or((Equality(X, 1), Equality(S, 'b')))) == [0, 1, 2]

    def test_negated_conjunction(self):
        assert self.rows(Not(And((Comparison(X, '>', 1), Equality(S, 'b'))))) == [0, 3]

    def test_text(self):
        assert self.rows(Comparison(S, '>=', 'b')) == [1, 2, 3]
        assert self.rows(Range(S, 'a', 'b')) == [0, 1, 2]
        assert self.rows(Equality(S, 'zzz')) == []
        assert self.rows(Comparison(S, '<>', 'zzz')) == [0, 1, 2, 3]

    def test_decimal(self):
        assert self.rows(Comparison(P, '<', 300)) == [0, 1]

    def test_scalar_functions(self):
        assert self.rows(FnCall('f', (X, P), '>', 3.0)) == [1]
        assert self.rows(FnCall('h', (X, P), '>=', 5.0)) == [1]

    def test_function_failure_cites_row(self):
        try:
            self.executor.count_star(self.table, FnCall('g', (X,), '>', 0.0))
        except UdfError as e:
            assert e.row == 3
            assert e.name == 'g'
        else:
            assert False, 'UdfError not raised'

    def test_selection_narrowing(self):
        first = self.executor.eval_predicate(self.table, Comparison(X, '>=', 2))
        second = self.executor.eval_predicate(self.table, Equality(S, 'c'), first)

        assert list(second.as_indices()) == [3]
        assert RowSelection.all_rows(self.table).is_all
        assert len(RowSelection.all_rows(self.table)) == 4

    def test_partitioned_count_matches(self):
        wide = Executor(storage.Database(), self.udfs, workers=3)
        pred = Or((Equality(X, 1), Equality(S, 'b')))

        assert wide.count_star(self.table, pred) == self.executor.count_star(self.table, pred)

    def test_invalid_workers(self):
        try:
            Executor(storage.Database(), workers=0)
        except EngineError as e:
            assert e.phase == 'usage'
        else:
            assert False, 'EngineError not raised'


class HashTableTestCase(unittest.TestCase):
    def setUp(self):
        self.executor = Executor(storage.Database())

    def test_capacity(self):
        assert capacity_for(0, 0.7) == 1
        assert capacity_for(7, 0.7) == 16
        assert capacity_for(100, 0.5) == 256

    def test_hash_spreads_keys(self):
        hashed = splitmix64(np.arange(1000, dtype=np.int64))

        assert len(np.unique(hashed)) == 1000

    def test_lookup_skips_null_keys(self):
        index = self.executor.build_hash(make_table(), 'x')
        positions, rows = index.lookup(np.array([4, 1, 9], dtype=np.int64))

        assert index.size == 3
        assert index.build_input == 4
        assert list(positions) == [0, 1]
        assert list(rows) == [3, 0]

    def test_duplicate_keys(self):
        table = storage.build_table('k', [('k', storage.INT64)], [np.array([5, 5, 5, 7])])
        index = self.executor.build_hash(table, 'k')
        positions, rows = index.lookup(np.array([5, 7], dtype=np.int64))

        assert list(positions) == [0, 0, 0, 1]
        assert sorted(rows[:3]) == [0, 1, 2]
        assert rows[3] == 3

    def test_residual_filters_build_side(self):
        index = self.executor.build_hash(make_table(), 'x', Equality(S, 'b'))
        positions, rows = index.lookup(np.array([1, 2], dtype=np.int64))

        assert index.build_input == 2
        assert list(rows) == [1]

    def test_null_probe_keys(self):
        index = self.executor.build_hash(make_table(), 'x')
        positions, rows = index.lookup(np.array([1, 1], dtype=np.int64), np.array([True, False]))

        assert list(positions) == [1]


class PlanExecutionTestCase(unittest.TestCase):
    """
    Whole plans over the generated R, S, T tables: R 1000, S 5000, T 250
    rows.
    """
    def engine(self, workers=1):
        return bench.make_engine(bench.GenSpec('custom', 0.05, seed=3), EscConfig(min_table_size=100), workers)

    def test_workers_do_not_change_results(self):
        one = self.engine(1).run(queries.EXAMPLE)
        eight = self.engine(8).run(queries.EXAMPLE)

        assert len(eight.stats.partition_outputs) == 8
        assert sorted(one.rows()) == sorted(eight.rows())

    def test_matches_nested_loops(self):
        engine = self.engine(4)
        sql = 'SELECT COUNT(*) FROM R, S, T WHERE R.A = S.A AND S.B = T.B AND R.B <= 3 AND T.C > 500'
        graph = frontend.build_join_graph(engine.analyze(sql))
        tables = dict((b, engine.catalog.table(graph.tables[b])) for b in graph.nodes)

        assert engine.run(sql).count == oracle.join_count(tables, graph)

    def test_stats_follow_the_pipeline(self):
        result = self.engine(3).run('SELECT COUNT(*) FROM R, S WHERE R.A = S.A AND R.C < 200 AND S.D > 100')
        stats = result.stats

        assert stats.probe_input == 5000
        assert stats.probe_output == result.count
        assert stats.joins[-1].probe_output == result.count
        assert sum(stats.partition_outputs) == stats.probe_output
        assert stats.joins[0].build_rows <= stats.joins[0].build_input

    def test_unique_build_keys(self):
        result = self.engine().run('SELECT COUNT(*) FROM S, T WHERE S.B = T.B')

        assert result.count == 5000
        assert result.stats.joins[0].build_rows == 250

    def test_text_join_edges_across_dictionaries(self):
        engine = Engine(Catalog())
        engine.database.register(storage.build_table('X', [('k', storage.INT64), ('t', storage.TEXT)],
            [np.array([1, 2]), np.array([0, 1])], dictionaries=[None, storage.Dictionary(['x', 'y'])]))
        engine.database.register(storage.build_table('Y', [('k', storage.INT64), ('t', storage.TEXT)],
            [np.array([1, 1, 2]), np.array([0, 1, 0])], dictionaries=[None, storage.Dictionary(['y', 'x'])]))

        assert engine.run('SELECT COUNT(*) FROM X, Y WHERE X.k = Y.k AND X.t = Y.t').count == 2
        assert engine.run('SELECT COUNT(*) FROM X, Y WHERE X.t = Y.t AND X.k = Y.k').count == 2

        rows = engine.run('SELECT X.k, Y.t FROM X, Y WHERE X.k = Y.k AND X.t = Y.t').rows()

        assert sorted(rows) == [(1, 'x'), (2, 'y')]

    def test_empty_build(self):
        result = self.engine().run('SELECT COUNT(*) FROM R, S WHERE R.A = S.A AND R.B = 1000')

        assert result.count == 0
        assert result.stats.joins[0].build_rows == 0
        assert result.stats.probe_output == 0


if __name__ == '__main__':
    unittest.main()
