#!/usr/bin/env python

import datetime
import unittest

from decimal import Decimal

import numpy as np

import frontend
import storage
from catalog import Catalog
from errors import (AmbiguousColumn, ArityMismatch,
    EngineError, SqlSyntaxError, TypeMismatch, UnknownColumn, UnknownFunction,
    UnknownTable, UnsupportedConstruct, UnsupportedPredicate)
from frontend import (And, ColumnCompare, ColumnId, Comparison, Equality,
    FnCall, Or, Range)


def make_catalog():
    catalog = Catalog()
    schema = storage.parse_schema('A:INT64,B:INT64,C:INT64,D:INT64')

    for name in ('R', 'S', 'T'):
        catalog.database.register(storage.build_table(name, [(c, k) for c, k in schema],
            [np.arange(4, dtype=np.int64) for _ in schema]))

    catalog.database.register(storage.build_table('P',
        storage.parse_schema('k:INT64,price:DECIMAL(15,2),status:TEXT,day:DATE'),
        [np.arange(3), np.array([100, 250, 999]), np.array([0, 1, 0]), np.array([0, 1, 2])],
        dictionaries=[None, None, storage.Dictionary(['F', 'O']), None]))

    catalog.register_udf('udf', 2, lambda b, d: b + d, vectorized=True)

    return catalog


class ParserTestCase(unittest.TestCase):
    def test_select_count(self):
        ast = frontend.parse('SELECT COUNT(*) FROM R, S s2 WHERE R.A = s2.A;')

        assert isinstance(ast.projections[0], frontend.AstCountStar)
        assert [t.binding for t in ast.tables] == ['R', 's2']
        assert ast.where == frontend.AstCompare('=', frontend.AstColumn('R', 'A'), frontend.AstColumn('s2', 'A'))

    def test_between_forms_agree(self):
        a = frontend.parse('SELECT * FROM R WHERE C BETWEEN 100 AND 400')
        b = frontend.parse('SELECT * FROM R WHERE C BETWEEN (100, 400)')

        assert a == b

    def test_and_binds_tighter_than_or(self):
        ast = frontend.parse('SELECT * FROM R WHERE A = 1 OR B = 2 AND C = 3')

        assert isinstance(ast.where, frontend.AstOr)
        assert isinstance(ast.where.items[1], frontend.AstAnd)

    def test_literals(self):
        ast = frontend.parse("SELECT * FROM P WHERE price >= -1.5 AND day < DATE '1995-03-01' AND status = 'it''s'")
        items = ast.where.items

        assert items[0].right == frontend.AstLiteral(Decimal('-1.5'), 'decimal')
        assert items[1].right == frontend.AstLiteral(datetime.date(1995, 3, 1), 'date')
        assert items[2].right.value == "it's"

    def test_to_sql_reparses(self):
        sql = "SELECT R.A, S.B FROM R, S WHERE R.A = S.A AND (R.D = 50 OR NOT R.D > 300) AND udf(R.B, R.D) > 305"
        ast = frontend.parse(sql)

        assert frontend.parse(frontend.to_sql(ast)) == ast

    def test_comments_are_ignored(self):
        ast = frontend.parse('SELECT COUNT(*) -- everything\nFROM R')

        assert ast.tables[0].name == 'R'

    def test_unsupported_constructs(self):
        for sql, construct in [
            ('SELECT * FROM R GROUP BY A', 'GROUP BY'),
            ('SELECT * FROM R ORDER BY A', 'ORDER BY'),
            ('SELECT * FROM R WHERE A IN (1, 2)', 'IN'),
            ('SELECT * FROM R WHERE A IS NULL', 'IS NULL'),
            ('SELECT * FROM R LEFT JOIN S', 'OUTER JOIN'),
            ('SELECT * FROM R WHERE A = (SELECT B FROM S)', 'subquery'),
        ]:
            try:
                frontend.parse(sql)
            except UnsupportedConstruct as e:
                assert e.construct == construct, sql
                assert e.phase == 'parse'
            else:
                assert False, 'UnsupportedConstruct not raised for %s' % sql

    def test_syntax_error_position(self):
        try:
            frontend.parse('SELECT *\nFROM R WHERE A = = 1')
        except SqlSyntaxError as e:
            assert (e.line, e.column) == (2, 18)
            assert e.phase == 'parse'
        else:
            assert False, 'SqlSyntaxError not raised'

    def test_truncated_statement(self):
        with self.assertRaises(SqlSyntaxError):
            frontend.parse('SELECT * FROM R WHERE')


class AnalyzerTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = make_catalog()

    def analyze(self, sql):
        return frontend.analyze(frontend.parse(sql), self.catalog)

    def where(self, sql):
        ra = self.analyze(sql)
        return ra.child.predicate

    def test_canonical_tree(self):
        ra = self.analyze('SELECT COUNT(*) FROM R, S, T WHERE R.A = S.A AND S.B = T.B')

        assert isinstance(ra, frontend.Aggregate)
        assert isinstance(ra.child, frontend.Select)
        assert isinstance(ra.child.child, frontend.HashJoin)
        assert [s.alias for s in frontend.scans_of(ra)] == ['R', 'S', 'T']
        assert frontend.check_schema(ra)

    def test_star_projects_every_column(self):
        ra = self.analyze('SELECT * FROM R, S WHERE R.A = S.A')

        assert [str(c) for c in ra.columns] == ['R.A', 'R.B', 'R.C', 'R.D', 'S.A', 'S.B', 'S.C', 'S.D']

    def test_name_resolution(self):
        with self.assertRaises(AmbiguousColumn):
            self.analyze('SELECT A FROM R, S WHERE R.A = S.A')

        with self.assertRaises(UnknownColumn):
            self.analyze('SELECT R.Z FROM R')

        with self.assertRaises(UnknownTable):
            self.analyze('SELECT * FROM missing')

        with self.assertRaises(UnknownTable):
            self.analyze('SELECT X.A FROM R')

    def test_duplicate_binding(self):
        try:
            self.analyze('SELECT COUNT(*) FROM R, R')
        except EngineError as e:
            assert e.phase == 'analyze'
        else:
            assert False, 'EngineError not raised'

    def test_self_join_with_aliases(self):
        ra = self.analyze('SELECT COUNT(*) FROM R r1, R r2 WHERE r1.A = r2.B')

        assert ra.child.predicate == ColumnCompare(ColumnId('r1', 'A'), '=', ColumnId('r2', 'B'))

    def test_literal_on_the_left_is_flipped(self):
        assert self.where('SELECT * FROM R WHERE 5 < B') == Comparison(ColumnId('R', 'B'), '>', 5)

    def test_example_predicate(self):
        pred = self.where('SELECT * FROM R WHERE B = 5 AND C BETWEEN (100, 400) AND (D = 50 OR D > 300)')

        assert pred == And((
            Equality(ColumnId('R', 'B'), 5),
            Range(ColumnId('R', 'C'), 100, 400),
            Or((Equality(ColumnId('R', 'D'), 50), Comparison(ColumnId('R', 'D'), '>', 300))),
        ))

    def test_decimal_constants_are_scaled(self):
        assert self.where('SELECT * FROM P WHERE price = 2.5') == Equality(ColumnId('P', 'price'), 250)

    def test_unrepresentable_constants_fold(self):
        assert self.where('SELECT * FROM P WHERE price = 1.005') == frontend.FALSE
        assert self.where('SELECT * FROM P WHERE price < 1.005') == Comparison(ColumnId('P', 'price'), '<=', 100)
        assert self.where('SELECT * FROM P WHERE price > 1.005') == Comparison(ColumnId('P', 'price'), '>=', 101)
        assert self.where('SELECT * FROM P WHERE k = 1.5') == frontend.FALSE

    def test_empty_between_folds(self):
        assert self.where('SELECT * FROM R WHERE C BETWEEN 400 AND 100') == frontend.FALSE

    def test_literal_comparisons_fold(self):
        assert self.where('SELECT * FROM R WHERE 1 = 1 AND A = 2') == Equality(ColumnId('R', 'A'), 2)
        assert self.where('SELECT * FROM R WHERE 1 = 2 AND A = 2') == frontend.FALSE

    def test_dates_and_text(self):
        pred = self.where("SELECT * FROM P WHERE day >= DATE '1970-01-02' AND status = 'F'")

        assert pred == And((Comparison(ColumnId('P', 'day'), '>=', 1), Equality(ColumnId('P', 'status'), 'F')))

    def test_type_mismatch(self):
        with self.assertRaises(TypeMismatch):
            self.analyze("SELECT * FROM P WHERE k = 'x'")

        with self.assertRaises(TypeMismatch):
            self.analyze('SELECT * FROM P WHERE status = 3')

        with self.assertRaises(TypeMismatch):
            self.analyze('SELECT * FROM P, R WHERE P.status = R.A')

    def test_udf_calls(self):
        pred = self.where('SELECT * FROM R WHERE udf(B, D) > 305')

        assert pred == FnCall('udf', (ColumnId('R', 'B'), ColumnId('R', 'D')), '>', 305.0)

        with self.assertRaises(UnknownFunction):
            self.analyze('SELECT * FROM R WHERE nope(B) > 1')

        with self.assertRaises(ArityMismatch):
            self.analyze('SELECT * FROM R WHERE udf(B) > 1')

        with self.assertRaises(TypeMismatch):
            self.analyze('SELECT * FROM P WHERE udf(k, status) > 1')

    def test_count_mixed_with_columns(self):
        with self.assertRaises(SqlSyntaxError):
            self.analyze('SELECT COUNT(*), A FROM R')


class PredicateTestCase(unittest.TestCase):
    def test_simplify(self):
        a = Equality(ColumnId('R', 'A'), 1)
        b = Equality(ColumnId('R', 'B'), 2)

        assert frontend.simplify(And((a, frontend.TRUE, And((b,))))) == And((a, b))
        assert frontend.simplify(Or((a, frontend.TRUE))) == frontend.TRUE
        assert frontend.simplify(frontend.Not(frontend.FALSE)) == frontend.TRUE
        assert frontend.conjoin([]) is None
        assert frontend.conjoin([a]) == a

    def test_rebind_and_sql(self):
        kind = storage.decimal(15, 2)
        pred = Or((Comparison(ColumnId('o', 'price', kind), '<', 150), Equality(ColumnId('o', 'k', storage.INT64), 3)))
        rebound = frontend.rebind(pred, 'orders')

        assert frontend.tables_of(rebound) == ['orders']
        assert frontend.predicate_sql(rebound) == 'orders.price < 1.50 OR orders.k = 3'
        assert frontend.predicate_sql(rebound, qualify=False) == 'price < 1.50 OR k = 3'


class JoinGraphTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = make_catalog()

    def graph(self, sql):
        return frontend.build_join_graph(frontend.analyze(frontend.parse(sql), self.catalog))

    def test_edges_and_residuals(self):
        graph = self.graph('SELECT R.A, S.B, R.C, R.D FROM R, S, T WHERE R.A = S.A AND S.B = T.B '
            'AND R.B = 5 AND R.C BETWEEN (100, 400) AND (R.D = 50 OR R.D > 300) AND udf(R.B, R.D) > 305')

        assert graph.nodes == ['R', 'S', 'T']
        assert [str(e) for e in graph.edges] == ['R.A = S.A', 'S.B = T.B']
        assert len(frontend.conjuncts(graph.residuals['R'])) == 4
        assert graph.residuals['S'] is None
        assert graph.residuals['T'] is None
        assert graph.neighbors('S') == ['R', 'T']
        assert graph.is_connected()
        assert graph.needed_columns('R') == ['A', 'C', 'D']
        assert graph.needed_columns('T') == ['B']

    def test_disconnected_graph(self):
        graph = self.graph('SELECT COUNT(*) FROM R, S, T WHERE R.A = S.A')

        assert not graph.is_connected()

    def test_cross_table_non_equality(self):
        with self.assertRaises(UnsupportedPredicate):
            self.graph('SELECT COUNT(*) FROM R, S WHERE R.A < S.A')

        with self.assertRaises(UnsupportedPredicate):
            self.graph('SELECT COUNT(*) FROM R, S WHERE R.A = S.A OR R.B = 1')

    def test_single_table_column_compare_is_residual(self):
        graph = self.graph('SELECT COUNT(*) FROM R, S WHERE R.A = S.A AND R.B = R.C')

        assert graph.residuals['R'] == ColumnCompare(ColumnId('R', 'B'), '=', ColumnId('R', 'C'))


if __name__ == '__main__':
    unittest.main()
