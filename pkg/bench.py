#!/usr/bin/env python

"""
Benchmark harness: generate the seeded datasets, run the overhead and
plan-quality suites and write reports.

Every timed query runs REPETITIONS + 1 times; the first run warms the
caches and is discarded, the median of the rest is reported.
"""

import logging
import os
import statistics

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List

import yaml

import app_config
import optimizer
import render_utils
import storage
from catalog import Catalog
from engine import Engine
from errors import EngineError, ScaleTooSmall, UsageError
from etc import Encoded, queries, rst, ssb, tpch

logger = logging.getLogger(__name__)

GENERATORS = OrderedDict([
    ('tpch_subset', tpch),
    ('ssb_subset', ssb),
    ('custom', rst),
])

SUITES = ['overhead-scale', 'overhead-selectivity', 'overhead-attrs', 'tpch4', 'ssb']

"""
Datasets
"""
@dataclass(frozen=True)
class GenSpec:
    benchmark: str = 'tpch_subset'
    scale: float = 0.01
    seed: int = 7
    # Column name -> zipf exponent for categorical and foreign key columns
    zipf: dict = field(default_factory=dict, hash=False)
    correlated: bool = True

    def __post_init__(self):
        if self.benchmark not in GENERATORS:
            raise UsageError('Unknown benchmark "%s", use one of: %s' % (self.benchmark, ', '.join(GENERATORS)))

        if not self.scale > 0:
            raise ScaleTooSmall('Scale must be positive, got %s' % self.scale)

    def to_json(self):
        return OrderedDict([('benchmark', self.benchmark), ('scale', self.scale), ('seed', self.seed)])


def load_schemas(path=None):
    with open(path or app_config.SCHEMAS_PATH) as f:
        return yaml.safe_load(f)

def generate(spec):
    """
    Build the ColumnTables of a benchmark subset. Identical specs give
    identical tables.
    """
    raw = GENERATORS[spec.benchmark].generate(spec)
    layouts = load_schemas()[spec.benchmark]
    tables = OrderedDict()

    for name, columns in raw.items():
        schema = [(column, storage.parse_kind(kind)) for column, kind in layouts[name].items()]
        arrays = []
        dictionaries = []

        for column, _ in schema:
            values = columns[column]

            if isinstance(values, Encoded):
                arrays.append(values.codes)
                dictionaries.append(storage.Dictionary(values.vocabulary))
            else:
                arrays.append(values)
                dictionaries.append(None)

        tables[name] = storage.build_table(name, schema, arrays, dictionaries=dictionaries)

    logger.info('Generated %s scale=%s seed=%s: %s', spec.benchmark, spec.scale, spec.seed,
        ', '.join('%s=%i' % (n, t.row_count) for n, t in tables.items()))

    return tables

def schema_spec(table):
    return ','.join('%s:%s' % (name, kind) for name, kind in table.schema)

def dump_dataset(tables, directory, spec=None):
    """
    Write one headerless CSV per table plus a schema.yml manifest that
    load_dataset reads back.
    """
    if not os.path.isdir(directory):
        os.makedirs(directory)

    manifest = OrderedDict()

    if spec is not None:
        manifest.update(spec.to_json())

    manifest['tables'] = OrderedDict()

    for name, table in tables.items():
        filename = '%s.csv' % name

        with open(os.path.join(directory, filename), 'w', newline='', encoding='utf-8') as f:
            storage.dump_csv(table, f)

        manifest['tables'][name] = OrderedDict([
            ('file', filename),
            ('rows', table.row_count),
            ('schema', schema_spec(table)),
        ])

    path = os.path.join(directory, 'schema.yml')

    with open(path, 'w') as f:
        yaml.safe_dump(_plain(manifest), f, default_flow_style=False, sort_keys=False)

    return path

def _plain(value):
    if isinstance(value, dict):
        return dict((k, _plain(v)) for k, v in value.items())

    return value

def load_dataset(database, path):
    """
    Load every table listed in a schema.yml manifest (or the directory
    holding one).
    """
    if os.path.isdir(path):
        path = os.path.join(path, 'schema.yml')

    try:
        with open(path, encoding='utf-8') as f:
            manifest = yaml.safe_load(f)
    except (IOError, OSError, UnicodeDecodeError, yaml.YAMLError) as e:
        raise EngineError('Could not read manifest %s: %s' % (path, e), phase='load') from e

    if not isinstance(manifest, dict) or not isinstance(manifest.get('tables'), dict):
        raise EngineError('Manifest %s has no tables section' % path, phase='load')

    directory = os.path.dirname(path)
    tables = OrderedDict()

    for name, entry in manifest['tables'].items():
        if not isinstance(entry, dict) or 'file' not in entry or 'schema' not in entry:
            raise EngineError('Manifest %s: table %s needs a file and a schema' % (path, name), phase='load')

        tables[name] = storage.load_csv(database, name, storage.parse_schema(entry['schema']),
            os.path.join(directory, entry['file']))

    return tables

def register_udfs(engine):
    for name, (arity, fn, vectorized) in queries.UDFS.items():
        if engine.catalog.udfs.get(name) is None:
            engine.register_udf(name, arity, fn, vectorized)

def make_engine(spec=None, config=None, workers=None, tables=None):
    """
    An engine over freshly generated (or given) tables, with the
    benchmark UDFs registered.
    """
    if tables is None:
        tables = generate(spec)

    catalog = Catalog()

    for table in tables.values():
        catalog.database.register(table)

    engine = Engine(catalog, config, workers)
    register_udfs(engine)

    return engine


"""
Timing
"""
@dataclass
class Measurement:
    time_ms: float
    overhead_ms: float
    result: object
    times: list


def measure(engine, sql, config, repetitions=None):
    repetitions = max(1, repetitions or app_config.REPETITIONS)
    times = []
    overheads = []
    result = None

    for i in range(repetitions + 1):
        result = engine.run(sql, config)

        # Warm-up run
        if i == 0:
            continue

        times.append(result.total_ms)
        overheads.append(result.overhead_ms)

    return Measurement(statistics.median(times), statistics.median(overheads), result, times)


"""
Reports
"""
@dataclass
class BenchRow:
    query: str
    arm: str
    time_ms: float
    overhead_ms: float
    build_card_sum: int
    result_count: int
    decisions: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self):
        payload = OrderedDict([
            ('query', self.query),
            ('arm', self.arm),
            ('time_ms', self.time_ms),
            ('overhead_ms', self.overhead_ms),
            ('build_card_sum', self.build_card_sum),
            ('result_count', self.result_count),
            ('decisions', self.decisions),
        ])
        payload.update(self.extra)

        return payload


@dataclass
class BenchReport:
    suite: str
    spec: dict
    rows: List[BenchRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, query, arm, measurement, **extra):
        result = measurement.result
        row = BenchRow(query, arm, measurement.time_ms, measurement.overhead_ms, result.plan.build_card_sum,
            result.count, [optimizer.decision_json(d) for d in result.plan.decisions], extra)
        self.rows.append(row)

        return row

    def row(self, query, arm):
        for r in self.rows:
            if r.query == query and r.arm == arm:
                return r

        return None

    @property
    def queries(self):
        return list(OrderedDict((r.query, True) for r in self.rows))

    def to_json(self):
        return OrderedDict([
            ('suite', self.suite),
            ('spec', self.spec),
            ('rows', [r.to_json() for r in self.rows]),
            ('summary', self.summary),
        ])

    def dumps(self):
        return render_utils.dumps(self.to_json())

    def text(self):
        return render_utils.render_template('report.txt', report=self)

    def write(self, path):
        directory = os.path.dirname(path)

        if directory and not os.path.isdir(directory):
            os.makedirs(directory)

        with open(path, 'w') as f:
            f.write(self.dumps())

        return path


def _ratio(a, b):
    return a / b if b else None

def _arms(config):
    base = config or optimizer.EscConfig.from_app_config()
    arms = OrderedDict([
        ('baseline', base.replace(enabled=False, estimator_mode='none')),
        ('esc', base.replace(enabled=True, materialize=True)),
    ])

    if base.estimator_mode == 'histogram':
        arms['histogram'] = base.replace(enabled=False, estimator_mode='histogram')

    return arms

def _overhead_arms(config):
    """
    ESC without materialization on every table, against the baseline.
    The plans must come out the same, only the sub-queries differ.
    """
    base = config or optimizer.EscConfig.from_app_config()

    return (base.replace(enabled=True, materialize=False, min_table_size=0),
        base.replace(enabled=False, estimator_mode='none'))


"""
Suites
"""
def overhead_suite_scale(scales=None, seed=None, config=None, repetitions=None, workers=None):
    """
    Sub-query overhead per scale for lineitem joined with orders, part
    and supplier.
    """
    scales = scales or app_config.OVERHEAD_SCALES
    seed = app_config.SEED if seed is None else seed
    esc, baseline = _overhead_arms(config)
    report = BenchReport('overhead-scale', OrderedDict([('benchmark', 'tpch_subset'), ('scale', list(scales)), ('seed', seed)]))

    for scale in scales:
        engine = make_engine(GenSpec('tpch_subset', scale, seed), workers=workers)

        for table, template in queries.OVERHEAD_SCALE.items():
            key = engine.catalog.table(table).row_count // 2 + 1
            sql = template.format(key=key)

            logger.info('overhead-scale: scale=%s table=%s', scale, table)
            measurement = measure(engine, sql, esc, repetitions)
            reference = engine.run(sql, baseline)

            report.add(table, 'esc', measurement, scale=scale,
                plan_matches_baseline=measurement.result.plan.shape == reference.plan.shape,
                baseline_count=reference.count)

    return report

def overhead_suite_selectivity(fractions=None, scale=None, seed=None, config=None, repetitions=None, workers=None, engine=None):
    """
    Sub-query overhead of o_orderkey < u as its selectivity goes from
    0.001% to 100%.
    """
    fractions = fractions or app_config.SELECTIVITY_FRACTIONS
    spec = GenSpec('tpch_subset', scale or app_config.OVERHEAD_FIXED_SCALE, app_config.SEED if seed is None else seed)
    engine = engine or make_engine(spec, workers=workers)
    esc, baseline = _overhead_arms(config)
    report = BenchReport('overhead-selectivity', spec.to_json())

    rows = engine.catalog.table('orders').row_count

    for fraction in fractions:
        # Keys are dense 1..rows, so o_orderkey < count + 1 selects exactly count rows
        count = max(1, int(round(fraction * rows)))
        sql = queries.OVERHEAD_SELECTIVITY.format(u=count + 1)

        logger.info('overhead-selectivity: fraction=%s u=%i', fraction, count + 1)
        measurement = measure(engine, sql, esc, repetitions)
        reference = engine.run(sql, baseline)

        report.add('%g%%' % (fraction * 100), 'esc', measurement, fraction=fraction, u=count + 1,
            expected_count=count, plan_matches_baseline=measurement.result.plan.shape == reference.plan.shape)

    overheads = [r.overhead_ms for r in report.rows]
    report.summary['overhead_ratio'] = _ratio(max(overheads), min(overheads)) if overheads else None

    return report

def attribute_constants(table, row=None):
    """
    Values of one real orders row, so every conjunction keeps at least
    that row.
    """
    row = table.row_count // 2 if row is None else row
    constants = {}

    for name, _ in queries.ATTRIBUTE_TERMS:
        value = table.column(name).decode(row)
        constants[name] = value.isoformat() if hasattr(value, 'isoformat') else value

    return constants

def overhead_suite_attributes(scale=None, seed=None, config=None, repetitions=None, workers=None, engine=None):
    """
    Sub-query overhead as the orders predicate grows from one to four
    attributes.
    """
    spec = GenSpec('tpch_subset', scale or app_config.OVERHEAD_FIXED_SCALE, app_config.SEED if seed is None else seed)
    engine = engine or make_engine(spec, workers=workers)
    esc, baseline = _overhead_arms(config)
    report = BenchReport('overhead-attrs', spec.to_json())
    constants = attribute_constants(engine.catalog.table('orders'))
    counts = []

    for k in range(1, len(queries.ATTRIBUTE_TERMS) + 1):
        terms = [template.format(**constants) for _, template in queries.ATTRIBUTE_TERMS[:k]]
        sql = '%s AND %s' % (queries.OVERHEAD_ATTRIBUTES, ' AND '.join(terms))

        logger.info('overhead-attrs: %i attributes', k)
        measurement = measure(engine, sql, esc, repetitions)
        reference = engine.run(sql, baseline)
        decisions = measurement.result.plan.decisions
        count = decisions[0].exact_count if decisions else None
        counts.append(count)

        report.add('%i attribute%s' % (k, '' if k == 1 else 's'), 'esc', measurement, attributes=k,
            selection_count=count, plan_matches_baseline=measurement.result.plan.shape == reference.plan.shape)

    report.summary['counts'] = counts
    report.summary['positive'] = all(c is not None and c > 0 for c in counts)
    report.summary['monotone'] = all(a >= b for a, b in zip(counts, counts[1:]))

    return report

def plan_quality_suite(which, scale=None, seed=None, config=None, repetitions=None, workers=None, engine=None):
    """
    Each query of the suite under every arm: baseline, ESC and, when the
    estimator is 'histogram', the histogram arm.
    """
    if which not in queries.SUITE_QUERIES:
        raise UsageError('Unknown plan quality suite "%s", use tpch4 or ssb' % which)

    benchmark = 'tpch_subset' if which == 'tpch4' else 'ssb_subset'
    default_scale = app_config.TPCH_SCALE if which == 'tpch4' else app_config.SSB_SCALE
    spec = GenSpec(benchmark, scale or default_scale, app_config.SEED if seed is None else seed)
    engine = engine or make_engine(spec, workers=workers)
    arms = _arms(config)
    report = BenchReport(which, spec.to_json())

    for name, sql in queries.SUITE_QUERIES[which].items():
        for arm, arm_config in arms.items():
            logger.info('%s: query %s arm %s', which, name, arm)
            measurement = measure(engine, sql, arm_config, repetitions)
            plan = measurement.result.plan

            report.add(name, arm, measurement, probe=plan.probe.binding, build_order=plan.build_order)

    report.summary['queries'] = OrderedDict((q, _compare(report, q)) for q in report.queries)

    return report

def _compare(report, query):
    baseline = report.row(query, 'baseline')
    esc = report.row(query, 'esc')
    histogram = report.row(query, 'histogram')

    summary = OrderedDict([
        ('speedup', _ratio(baseline.time_ms, esc.time_ms)),
        ('reduction', _ratio(baseline.build_card_sum, esc.build_card_sum)),
        ('arms_agree', len(set(r.result_count for r in (baseline, esc, histogram) if r is not None)) == 1),
        ('esc_dominates', esc.build_card_sum <= baseline.build_card_sum),
        ('esc_strictly_smaller', esc.build_card_sum < baseline.build_card_sum),
    ])

    if histogram is not None:
        summary['histogram_order_differs'] = histogram.extra['build_order'] != esc.extra['build_order']
        summary['histogram_card_sum_at_least_esc'] = histogram.build_card_sum >= esc.build_card_sum

    return summary

def run_suite(name, scale=None, seed=None, config=None, repetitions=None, workers=None):
    """
    Run a suite by its command line name.
    """
    if name == 'overhead-scale':
        return overhead_suite_scale([scale] if scale else None, seed, config, repetitions, workers)
    elif name == 'overhead-selectivity':
        return overhead_suite_selectivity(None, scale, seed, config, repetitions, workers)
    elif name == 'overhead-attrs':
        return overhead_suite_attributes(scale, seed, config, repetitions, workers)
    elif name in ('tpch4', 'ssb'):
        return plan_quality_suite(name, scale, seed, config, repetitions, workers)

    raise UsageError('Unknown suite "%s", use one of: %s' % (name, ', '.join(SUITES)))
