#!/usr/bin/env python

"""
Exact selectivity computation (ESC) and left-deep join planning.

With ESC enabled the planner runs a COUNT(*) sub-query for every build
relation's predicate, materializes selective ones into temp tables and
orders the hash joins by the exact sizes. With ESC disabled it builds
the baseline plan: same probe choice, builds ordered by base row count,
every predicate fused into its scan.
"""

import dataclasses
import logging
import time

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import app_config
import frontend
import render_utils
from catalog import estimate_selectivity
from errors import (CartesianProductRequired, ConfigError, EngineError,
    Inestimable, NoPredicate, SubqueryError, UnknownColumn)

logger = logging.getLogger(__name__)

ESTIMATOR_MODES = ('none', 'histogram')

"""
Configuration
"""
@dataclass(frozen=True)
class EscConfig:
    enabled: bool = True
    min_table_size: int = 1000
    max_selectivity: float = 0.2
    estimator_mode: str = 'none'
    # False keeps the sub-queries but never pushes down, so plans match the baseline
    materialize: bool = True
    default_guess: float = 0.1
    histogram_buckets: int = 64

    def __post_init__(self):
        if not 0 <= self.max_selectivity <= 1:
            raise ConfigError('max_selectivity must be within [0, 1], got %s' % self.max_selectivity)

        if self.min_table_size < 0:
            raise ConfigError('min_table_size must be >= 0, got %s' % self.min_table_size)

        if self.estimator_mode not in ESTIMATOR_MODES:
            raise ConfigError('estimator must be one of %s, got %s' % ('|'.join(ESTIMATOR_MODES), self.estimator_mode))

        if not 0 <= self.default_guess <= 1:
            raise ConfigError('default_guess must be within [0, 1], got %s' % self.default_guess)

        if self.histogram_buckets < 1:
            raise ConfigError('histogram_buckets must be >= 1, got %s' % self.histogram_buckets)

    @classmethod
    def from_app_config(cls, **overrides):
        values = dict(
            enabled=app_config.ESC_ENABLED,
            min_table_size=app_config.MIN_TABLE_SIZE,
            max_selectivity=app_config.MAX_SELECTIVITY,
            estimator_mode=app_config.ESTIMATOR_MODE,
            materialize=app_config.MATERIALIZE,
            default_guess=app_config.DEFAULT_GUESS,
            histogram_buckets=app_config.HISTOGRAM_BUCKETS,
        )
        values.update(overrides)

        return cls(**values)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


"""
Plans
"""
@dataclass
class EscDecision:
    table: str
    relation: str
    predicate: object
    row_count: int
    exact_count: int
    selectivity: Fraction
    pushed_down: bool = False
    qualified: bool = False
    temp: Optional[object] = None
    subquery_time: float = 0.0
    materialize_time: float = 0.0
    subquery: str = ''

    @property
    def time_ms(self):
        return self.subquery_time


@dataclass
class RelationRef:
    """
    A plan input: a base table, or the temp table its pushed-down
    selection was materialized into. predicate is what still has to be
    fused into the scan.
    """
    binding: str
    table: str
    row_count: int
    predicate: object = None
    temp: Optional[object] = None
    effective: int = 0
    estimate: Optional[float] = None

    @property
    def scanned(self):
        """
        Rows the scan reads: the temp table's rows once pushed down.
        """
        return self.temp.row_count if self.temp is not None else self.row_count

    @property
    def label(self):
        return self.binding if self.binding == self.table else '%s %s' % (self.table, self.binding)


@dataclass
class BuildStep:
    relation: RelationRef
    # (column of the probe or an earlier build, column of this relation)
    keys: list = field(default_factory=list)


@dataclass
class PhysicalPlan:
    probe: RelationRef
    builds: List[BuildStep]
    projection: Optional[list]
    decisions: List[EscDecision] = field(default_factory=list)
    mode: str = 'baseline'

    @property
    def build_order(self):
        return [b.relation.binding for b in self.builds]

    @property
    def build_card_sum(self):
        return sum(b.relation.scanned for b in self.builds)

    @property
    def temps(self):
        return [b.relation.temp for b in self.builds if b.relation.temp is not None]

    @property
    def shape(self):
        """
        Probe and build order, for comparing plans across arms.
        """
        return (self.probe.binding, tuple(self.build_order))


"""
ESC workflow
"""
def _table_columns(table, predicate, needed_columns):
    wanted = set(needed_columns) | set(c.name for c in frontend.columns_of(predicate))

    for name in wanted:
        if not table.has_column(name):
            raise UnknownColumn('%s.%s' % (table.name, name))

    return [c for c in table.column_names if c in wanted]

def _scan(table, binding, names, handle=None):
    schema = [frontend.ColumnId(binding, c.name, c.kind) for c in table.columns]
    scan = frontend.Scan(table.name, binding, schema, handle)

    return frontend.Project(scan, [c for c in schema if c.name in names])

def build_count_subquery(table, predicate, needed_columns, binding=None):
    """
    COUNT(*) over the table's selection, reading only the needed and
    predicate columns.
    """
    if predicate is None or predicate == frontend.TRUE:
        raise NoPredicate('Table %s has no predicate to count' % table.name)

    binding = binding or table.name

    for column in frontend.columns_of(predicate):
        if column.table != binding:
            raise EngineError('Predicate on %s references %s' % (binding, column), phase='plan')

    names = _table_columns(table, predicate, needed_columns)

    return frontend.Aggregate(frontend.Select(_scan(table, binding, names), predicate))

def compute_exact_selectivity(table, predicate, executor, needed_columns=(), binding=None, ra=None):
    """
    Run the COUNT sub-query, building it unless ra already holds it.
    Returns (exact count, milliseconds spent executing it).
    """
    if ra is None:
        ra = build_count_subquery(table, predicate, needed_columns, binding)

    started = time.perf_counter()

    try:
        count = executor.execute_count(ra)
    except EngineError as e:
        raise SubqueryError(frontend.ra_sql(ra), e) from e

    return count, (time.perf_counter() - started) * 1000.0

def decide_pushdown(row_count, exact_count, config):
    """
    Both thresholds are inclusive. The selectivity test is exact:
    count / rows is compared as a fraction.
    """
    if row_count <= 0:
        return False

    if row_count < config.min_table_size:
        return False

    return Fraction(exact_count, row_count) <= Fraction(repr(config.max_selectivity))

def materialize_pushdown(table, predicate, needed_columns, executor, binding=None):
    """
    Re-scan the table with the predicate and register the surviving rows
    of the needed columns as a temp table.
    """
    binding = binding or table.name
    names = [c for c in table.column_names if c in set(needed_columns)] or table.column_names[:1]
    select = frontend.Select(_scan(table, binding, _table_columns(table, predicate, names)), predicate)

    _, rows = executor.select_rows(select)
    columns = [table.column(n).take(rows) for n in names]
    schema = [(n, table.column(n).kind) for n in names]

    return executor.database.materialize_temp(schema, columns)

def choose_probe(graph, stats):
    """
    The largest relation by base row count. stats maps bindings to row
    counts.
    """
    return sorted(graph.nodes, key=lambda b: (-stats[b], b))[0]

def order_builds(graph, probe, effective_cardinalities):
    """
    Greedy left-deep order: repeatedly join the smallest relation sharing
    a join edge with what has been joined so far.
    """
    joined = [probe]
    remaining = [n for n in graph.nodes if n != probe]
    order = []

    while remaining:
        adjacent = [n for n in remaining if any(j in graph.neighbors(n) for j in joined)]

        if not adjacent:
            raise CartesianProductRequired('No join predicate connects %s to %s'
                % (', '.join(sorted(remaining)), ', '.join(joined)))

        chosen = min(adjacent, key=lambda n: (effective_cardinalities[n], n))
        order.append(chosen)
        joined.append(chosen)
        remaining.remove(chosen)

    return order

def _keys_for(graph, binding, joined):
    keys = []

    for edge in graph.edges:
        if edge.touches(binding) and edge.other(binding) in joined:
            keys.append(edge.oriented(binding))

    return keys

def _drop(database, handles):
    for handle in handles:
        try:
            database.drop_temp(handle)
        except EngineError:
            pass


class Planner(object):
    """
    Turns analyzed RA trees into physical plans. Keeps no state between
    queries.
    """
    def __init__(self, catalog, executor):
        self.catalog = catalog
        self.executor = executor

    def _esc(self, ref, table, graph, config, decisions, created):
        predicate = ref.predicate

        if ref.row_count < config.min_table_size or not ref.row_count:
            logger.debug('Skipping ESC on %s: %i rows below minimum %i', ref.binding, ref.row_count, config.min_table_size)
            return

        needed = graph.needed_columns(ref.binding)
        ra = build_count_subquery(table, predicate, needed, ref.binding)
        count, elapsed = compute_exact_selectivity(table, predicate, self.executor, needed, ref.binding, ra)
        qualified = decide_pushdown(ref.row_count, count, config)

        decision = EscDecision(ref.binding, ref.table, predicate, ref.row_count, count,
            Fraction(count, ref.row_count), qualified=qualified, subquery_time=elapsed,
            subquery=frontend.ra_sql(ra))

        if qualified and config.materialize:
            started = time.perf_counter()
            handle = materialize_pushdown(table, predicate, needed, self.executor, ref.binding)
            created.append(handle)

            decision.materialize_time = (time.perf_counter() - started) * 1000.0
            decision.pushed_down = True
            decision.temp = handle

            ref.temp = handle
            ref.predicate = None
            ref.effective = count

        decisions.append(decision)

        logger.info('ESC table=%s count=%i sel=%.6f pushdown=%s time_ms=%.3f', ref.binding, count,
            float(decision.selectivity), decision.pushed_down, elapsed)

    def _estimate(self, ref, config):
        predicate = ref.predicate
        hists = self.catalog.histograms_for(ref.table, predicate, config.histogram_buckets)

        try:
            estimate = estimate_selectivity(hists, predicate, self.catalog.stats(ref.table))
        except Inestimable as e:
            logger.debug('Falling back to the default guess for %s: %s', ref.binding, e)
            estimate = config.default_guess

        ref.estimate = estimate
        ref.effective = int(round(estimate * ref.row_count))

    def plan(self, ra, config):
        graph = frontend.build_join_graph(ra)

        if not graph.is_connected():
            raise CartesianProductRequired('Tables %s are not all connected by join predicates'
                % ', '.join(graph.nodes))

        tables = dict((b, self.catalog.table(graph.tables[b])) for b in graph.nodes)
        refs = dict((b, RelationRef(b, graph.tables[b], tables[b].row_count, graph.residuals[b],
            effective=tables[b].row_count)) for b in graph.nodes)

        probe = choose_probe(graph, dict((b, r.row_count) for b, r in refs.items()))

        if config.enabled:
            mode = 'esc'
        elif config.estimator_mode == 'histogram':
            mode = 'histogram'
        else:
            mode = 'baseline'

        decisions = []
        created = []

        try:
            for binding in graph.nodes:
                ref = refs[binding]

                # Selections on the probe relation stay fused into the probe
                if binding == probe or ref.predicate is None or ref.predicate == frontend.TRUE:
                    continue

                if mode == 'esc':
                    self._esc(ref, tables[binding], graph, config, decisions, created)
                elif mode == 'histogram':
                    self._estimate(ref, config)

            order = order_builds(graph, probe, dict((b, r.effective) for b, r in refs.items()))
        except Exception:
            _drop(self.catalog.database, created)
            raise

        builds = []
        joined = [probe]

        for binding in order:
            builds.append(BuildStep(refs[binding], _keys_for(graph, binding, joined)))
            joined.append(binding)

        return PhysicalPlan(refs[probe], builds, graph.projection, decisions, mode)


def plan(ra, config, executor, catalog):
    return Planner(catalog, executor).plan(ra, config)


"""
EXPLAIN
"""
def _filter(predicate):
    if predicate is None or predicate == frontend.TRUE:
        return ''

    return ' filter: %s' % frontend.predicate_sql(predicate)

def _relation_text(role, ref):
    if ref.temp is not None:
        return '%s %s [%s rows=%i]' % (role, ref.label, ref.temp.name, ref.temp.row_count)

    text = '%s %s rows=%i%s' % (role, ref.label, ref.row_count, _filter(ref.predicate))

    if ref.estimate is not None:
        text += ' est=%.6f' % ref.estimate

    return text

def _join_lines(plan, n):
    """
    Lines of the subtree joining the probe with the first n builds.
    """
    if n == 0:
        return [(0, _relation_text('Probe', plan.probe))]

    step = plan.builds[n - 1]
    keys = ' AND '.join('%s = %s' % (outer, inner) for outer, inner in step.keys)
    lines = [(0, 'HashJoin %s' % keys)]
    lines.extend((depth + 1, text) for depth, text in _join_lines(plan, n - 1))
    lines.append((1, _relation_text('Build', step.relation)))

    return lines

def plan_tree(plan):
    """
    (depth, text) lines of the left-deep tree, root first.
    """
    if plan.projection is None:
        root = 'Aggregate COUNT(*)'
    else:
        root = 'Project %s' % ', '.join(str(c) for c in plan.projection)

    return [(0, root)] + [(depth + 1, text) for depth, text in _join_lines(plan, len(plan.builds))]

def explain(plan, timings=True):
    """
    EXPLAIN text: one ESC line per decision, then the plan tree.
    Pass timings=False for output that is stable across runs.
    """
    decisions = []

    for d in plan.decisions:
        decisions.append(dict(
            table=d.table,
            exact_count=d.exact_count,
            selectivity=d.selectivity,
            pushed_down=d.pushed_down,
            time_ms=d.subquery_time if timings else None,
        ))

    return render_utils.render_template('explain.txt',
        decisions=decisions,
        tree=plan_tree(plan),
    )

def explain_json(plan, timings=True):
    """
    EXPLAIN as a JSON-serializable dict, consumed by the bench reports.
    """
    def relation(ref):
        return {
            'binding': ref.binding,
            'table': ref.table,
            'row_count': ref.row_count,
            'scanned': ref.scanned,
            'temp': ref.temp.name if ref.temp is not None else None,
            'filter': frontend.predicate_sql(ref.predicate) if ref.predicate is not None else None,
            'estimate': ref.estimate,
        }

    return {
        'mode': plan.mode,
        'probe': relation(plan.probe),
        'builds': [dict(relation(b.relation), keys=['%s = %s' % k for k in b.keys]) for b in plan.builds],
        'build_card_sum': plan.build_card_sum,
        'decisions': [decision_json(d, timings) for d in plan.decisions],
    }

def decision_json(decision, timings=True):
    return {
        'table': decision.table,
        'predicate': frontend.predicate_sql(decision.predicate),
        'row_count': decision.row_count,
        'exact_count': decision.exact_count,
        'selectivity': float(decision.selectivity),
        'pushed_down': decision.pushed_down,
        'qualified': decision.qualified,
        'temp_rows': decision.temp.row_count if decision.temp is not None else None,
        'subquery_ms': decision.subquery_time if timings else None,
        'materialize_ms': decision.materialize_time if timings else None,
    }
