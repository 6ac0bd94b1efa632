#!/usr/bin/env python

import json
import os
import shutil
import tempfile
import unittest

import numpy as np

import bench
import storage
from errors import ScaleTooSmall, UsageError
from etc import queries
from optimizer import EscConfig

CONFIG = EscConfig(min_table_size=100, estimator_mode='histogram')


class GenerateTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def dump(self, spec, name):
        directory = os.path.join(self.tmp, name)
        bench.dump_dataset(bench.generate(spec), directory, spec)

        return directory

    def test_same_spec_gives_identical_dumps(self):
        spec = bench.GenSpec('tpch_subset', 0.001, seed=5)
        first = self.dump(spec, 'first')
        second = self.dump(spec, 'second')

        assert sorted(os.listdir(first)) == ['lineitem.csv', 'orders.csv', 'part.csv', 'schema.yml', 'supplier.csv']

        for filename in os.listdir(first):
            with open(os.path.join(first, filename), 'rb') as a, open(os.path.join(second, filename), 'rb') as b:
                assert a.read() == b.read(), filename

    def test_seed_changes_data(self):
        a = bench.generate(bench.GenSpec('custom', 0.01, seed=1))
        b = bench.generate(bench.GenSpec('custom', 0.01, seed=2))

        assert not np.array_equal(a['S'].column('A').values, b['S'].column('A').values)

    def test_foreign_keys_are_contained(self):
        tables = bench.generate(bench.GenSpec('tpch_subset', 0.001))
        lineitem = tables['lineitem']

        for fk, table, key in [('l_orderkey', 'orders', 'o_orderkey'), ('l_partkey', 'part', 'p_partkey'),
                ('l_suppkey', 'supplier', 's_suppkey')]:
            assert np.isin(lineitem.column(fk).values, tables[table].column(key).values).all(), fk

        assert tables['orders'].column('o_totalprice').kind == storage.decimal(15, 2)
        assert tables['orders'].column('o_orderstatus').kind == storage.TEXT

    def test_lineorder_dominates_star_schema(self):
        tables = bench.generate(bench.GenSpec('ssb_subset', 0.002))
        total = sum(t.row_count for t in tables.values())

        assert tables['lineorder'].row_count >= 0.95 * total
        assert np.isin(tables['lineorder'].column('lo_orderdate').values, tables['dwdate'].column('d_datekey').values).all()

    def test_zipf_skews_foreign_keys(self):
        tables = bench.generate(bench.GenSpec('custom', 0.05, zipf={'S.A': 2.0}))
        counts = np.bincount(tables['S'].column('A').values)

        assert counts[1] > counts[2] > 0

    def test_scale_too_small(self):
        with self.assertRaises(ScaleTooSmall):
            bench.GenSpec('tpch_subset', 0)

        with self.assertRaises(ScaleTooSmall):
            bench.generate(bench.GenSpec('tpch_subset', 1e-7))

    def test_unknown_benchmark(self):
        with self.assertRaises(UsageError):
            bench.GenSpec('tpcds')

    def test_load_dataset(self):
        spec = bench.GenSpec('custom', 0.01)
        tables = bench.generate(spec)
        path = bench.dump_dataset(tables, os.path.join(self.tmp, 'custom'), spec)
        database = storage.Database()
        loaded = bench.load_dataset(database, path)

        assert list(loaded) == ['R', 'S', 'T']

        for name, table in tables.items():
            assert database.get(name).row_count == table.row_count
            assert list(database.get(name).rows(5)) == list(table.rows(5))


class MeasureTestCase(unittest.TestCase):
    def test_median_of_repetitions(self):
        engine = bench.make_engine(bench.GenSpec('custom', 0.01), CONFIG)
        measurement = bench.measure(engine, 'SELECT COUNT(*) FROM R, S WHERE R.A = S.A AND R.B = 5', CONFIG, 3)

        assert len(measurement.times) == 3
        assert measurement.time_ms == sorted(measurement.times)[1]
        assert measurement.result.count >= 0


class PlanQualityTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.report = bench.plan_quality_suite('tpch4', scale=0.002, config=CONFIG, repetitions=1)

    def test_every_query_runs_every_arm(self):
        assert self.report.queries == ['q1', 'q2', 'q3', 'q4']
        assert [r.arm for r in self.report.rows[:3]] == ['baseline', 'esc', 'histogram']
        assert len(self.report.rows) == 12

    def test_arms_return_the_same_count(self):
        for name, summary in self.report.summary['queries'].items():
            assert summary['arms_agree'], name

    def test_esc_never_builds_more(self):
        for name, summary in self.report.summary['queries'].items():
            assert summary['esc_dominates'], name
            assert summary['histogram_card_sum_at_least_esc'], name

    def test_esc_shrinks_most_builds(self):
        smaller = [q for q, s in self.report.summary['queries'].items() if s['esc_strictly_smaller']]

        assert len(smaller) >= 3

    def test_correlated_selection_is_pushed_down(self):
        q1 = self.report.summary['queries']['q1']
        esc = self.report.row('q1', 'esc')

        assert q1['esc_strictly_smaller']
        assert q1['reduction'] > 1
        assert esc.extra['probe'] == 'lineitem'
        assert esc.extra['build_order'] == ['orders', 'part']
        assert [d['table'] for d in esc.decisions if d['pushed_down']] == ['orders']

    def test_histogram_misorders_correlated_query(self):
        assert self.report.summary['queries']['q1']['histogram_order_differs']
        assert self.report.row('q1', 'histogram').extra['build_order'] == ['part', 'orders']

    def test_report_outputs(self):
        payload = json.loads(self.report.dumps())

        assert payload['suite'] == 'tpch4'
        assert payload['spec']['benchmark'] == 'tpch_subset'
        assert payload['rows'][1]['arm'] == 'esc'

        text = self.report.text()

        assert text.startswith('Suite tpch4: tpch_subset scale=0.002')
        assert 'speedup=' in text


class StarSchemaTestCase(unittest.TestCase):
    """
    The SSB flights at desk scale with the default thresholds: customer
    and part (1200 rows) can be pushed down, supplier (300) and dwdate
    (256) cannot.
    """
    @classmethod
    def setUpClass(cls):
        config = EscConfig(min_table_size=1000, max_selectivity=0.2, estimator_mode='histogram')
        cls.engine = bench.make_engine(bench.GenSpec('ssb_subset', 0.01, seed=7))
        cls.report = bench.plan_quality_suite('ssb', scale=0.01, seed=7, config=config, repetitions=1,
            engine=cls.engine)

    def test_lineorder_dominates(self):
        tables = self.engine.database.tables
        total = sum(t.row_count for t in tables.values())

        assert tables['lineorder'].row_count == 60000
        assert tables['lineorder'].row_count >= 0.95 * total

    def test_every_flight_runs(self):
        assert self.report.queries == list(queries.SSB)
        assert len(self.report.rows) == 3 * len(queries.SSB)

    def test_arms_return_the_same_count(self):
        for name, summary in self.report.summary['queries'].items():
            assert summary['arms_agree'], name

    def test_esc_never_builds_more(self):
        for name, summary in self.report.summary['queries'].items():
            assert summary['esc_dominates'], name
            assert summary['histogram_card_sum_at_least_esc'], name

    def test_customer_selections_are_counted(self):
        for name in ['3.1', '3.2', '3.3', '3.4']:
            decisions = self.report.row(name, 'esc').decisions

            assert [d['table'] for d in decisions] == ['customer'], name
            assert decisions[0]['pushed_down'], name

    def test_most_selective_flight_shrinks_most(self):
        reductions = dict((q, s['reduction']) for q, s in self.report.summary['queries'].items())
        best = reductions.pop('4.3')

        assert best > max(reductions.values())
        assert self.report.row('4.3', 'baseline').build_card_sum == 256 + 300 + 1200 + 1200
        assert self.report.row('4.3', 'esc').build_card_sum == 256 + 300 + 240 + 48
        assert self.report.row('4.3', 'esc').result_count > 0


class OverheadTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.engine = bench.make_engine(bench.GenSpec('tpch_subset', 0.002))

    def test_selectivity_sweep(self):
        report = bench.overhead_suite_selectivity([0.001, 0.1, 1.0], config=CONFIG, repetitions=1, engine=self.engine)

        assert [r.extra['expected_count'] for r in report.rows] == [3, 300, 3000]

        for row in report.rows:
            assert row.decisions[0]['exact_count'] == row.extra['expected_count']
            assert not row.decisions[0]['pushed_down']
            assert row.extra['plan_matches_baseline']

        assert report.summary['overhead_ratio'] >= 1

    def test_attribute_sweep(self):
        report = bench.overhead_suite_attributes(config=CONFIG, repetitions=1, engine=self.engine)

        assert [r.extra['attributes'] for r in report.rows] == [1, 2, 3, 4]
        assert report.summary['positive']
        assert report.summary['monotone']
        assert all(r.extra['plan_matches_baseline'] for r in report.rows)

    def test_attribute_constants_come_from_one_row(self):
        constants = bench.attribute_constants(self.engine.catalog.table('orders'), 0)

        assert sorted(constants) == ['o_custkey', 'o_orderdate', 'o_orderstatus', 'o_totalprice']
        assert constants['o_orderstatus'] in ('F', 'O', 'P')
        assert len(constants['o_orderdate']) == 10

    def test_scale_sweep(self):
        report = bench.overhead_suite_scale([0.001], config=CONFIG, repetitions=1)

        assert report.queries == ['orders', 'part', 'supplier']

        for row in report.rows:
            assert row.extra['plan_matches_baseline']
            assert row.result_count == row.extra['baseline_count']

    def test_unknown_suite(self):
        with self.assertRaises(UsageError):
            bench.run_suite('tpcds')

        with self.assertRaises(UsageError):
            bench.plan_quality_suite('tpcds')


if __name__ == '__main__':
    unittest.main()
