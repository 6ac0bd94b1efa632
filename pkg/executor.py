#!/usr/bin/env python

"""
Column-at-a-time execution: filtered scans, COUNT(*), hash join build
and a single-pass probe pipeline.

The probe pipeline carries one row-id vector per joined relation and
gathers output columns only once, after the last build lookup.
"""

import logging
import operator
import time

from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

import app_config
import frontend
import storage
from errors import EngineError, UdfError, UnknownFunction

logger = logging.getLogger(__name__)

OPS = {
    '=': operator.eq,
    '<>': operator.ne,
    '<': operator.lt,
    '<=': operator.le,
    '>': operator.gt,
    '>=': operator.ge,
}

"""
Row selections
"""
@dataclass
class RowSelection:
    """
    Rows of a table still in play. indices=None selects every row.
    """
    table: storage.ColumnTable
    indices: Optional[np.ndarray] = None

    @classmethod
    def all_rows(cls, table):
        return cls(table, None)

    @property
    def is_all(self):
        return self.indices is None

    def as_indices(self):
        if self.indices is None:
            return np.arange(self.table.row_count, dtype=np.int64)

        return self.indices

    def __len__(self):
        return self.table.row_count if self.indices is None else len(self.indices)


"""
Hash tables
"""
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

def splitmix64(keys):
    """
    64-bit finalizer hash of int64 keys.
    """
    with np.errstate(over='ignore'):
        z = keys.astype(np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2

        return z ^ (z >> np.uint64(31))

def capacity_for(n, load_factor):
    """
    Smallest power of two holding n entries under the load factor.
    """
    needed = max(1, int(np.ceil(n / load_factor)))

    return 1 << (needed - 1).bit_length()


@dataclass
class HashTableIndex:
    """
    Chained hash table over one key column. Entries are grouped by bucket:
    bucket b holds rows[starts[b]:starts[b + 1]].
    """
    relation: str
    key: str
    capacity: int
    starts: np.ndarray
    rows: np.ndarray
    keys: np.ndarray
    build_input: int = 0

    @property
    def size(self):
        return len(self.rows)

    def buckets(self, keys):
        return (splitmix64(keys) & np.uint64(self.capacity - 1)).astype(np.int64)

    def lookup(self, keys, nulls=None):
        """
        Match probe keys against the table.

        Returns (probe positions, build row ids), one pair per match, in
        probe order.
        """
        if not len(keys) or not self.size:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty

        b = self.buckets(keys)
        first = self.starts[b]
        lengths = self.starts[b + 1] - first

        if nulls is not None:
            lengths = np.where(nulls, 0, lengths)

        total = int(lengths.sum())
        positions = np.repeat(np.arange(len(keys), dtype=np.int64), lengths)
        offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        candidates = np.repeat(first, lengths) + offsets

        hit = self.keys[candidates] == keys[positions]

        return positions[hit], self.rows[candidates[hit]]


"""
Statistics
"""
@dataclass
class JoinStats:
    relation: str
    build_input: int
    build_rows: int
    capacity: int
    probe_output: int = 0
    build_ms: float = 0.0


@dataclass
class ExecStats:
    operators: OrderedDict = field(default_factory=OrderedDict)
    joins: List[JoinStats] = field(default_factory=list)
    probe_input: int = 0
    probe_selected: int = 0
    partition_outputs: list = field(default_factory=list)
    rows_materialized: int = 0

    @property
    def probe_output(self):
        return int(sum(self.partition_outputs))

    @property
    def build_card_sum(self):
        return int(sum(j.build_input for j in self.joins))

    def timed(self, name, started):
        self.operators[name] = self.operators.get(name, 0.0) + (time.perf_counter() - started) * 1000.0


"""
Execution
"""
class Executor(object):
    """
    Runs predicates, COUNT sub-queries and physical plans against a
    database. Holds no per-query state and is safe to share.
    """
    def __init__(self, database, udfs=None, workers=1, load_factor=0.7):
        if workers < 1:
            raise EngineError('workers must be a positive integer, got %s' % workers, phase='usage')

        self.database = database
        self.udfs = udfs
        self.workers = workers
        self.load_factor = load_factor

    @classmethod
    def from_catalog(cls, catalog, workers=None):
        return cls(catalog.database, catalog.udfs,
            workers or app_config.WORKERS, app_config.HASH_LOAD_FACTOR)

    """
    Predicates
    """
    def _vectors(self, table, column_id, idx):
        column = table.column(column_id.name)

        if idx is None:
            return column, column.values, column.null_mask

        return column, column.values[idx], column.null_mask[idx]

    def _text_condition(self, column, values, op, constant):
        dictionary = column.dictionary

        if op in ('=', '<>'):
            code = dictionary.code_of(constant)
            matches = values == code if code is not None else np.zeros(len(values), dtype=bool)

            return matches if op == '=' else ~matches

        if not len(dictionary):
            return np.zeros(len(values), dtype=bool)

        # Ranges compare decoded strings, decided once per dictionary entry
        per_code = np.fromiter((OPS[op](s, constant) for s in dictionary.strings), dtype=bool, count=len(dictionary))

        return per_code[values]

    def _text_range(self, column, values, lo, hi):
        if not len(column.dictionary):
            return np.zeros(len(values), dtype=bool)

        strings = column.dictionary.strings
        per_code = np.fromiter((lo <= s <= hi for s in strings), dtype=bool, count=len(strings))

        return per_code[values]

    def _udf(self, name):
        udf = self.udfs.get(name) if self.udfs is not None else None

        if udf is None:
            raise UnknownFunction(name)

        return udf

    def _call(self, table, pred, idx, n):
        udf = self._udf(pred.name)
        columns = [table.column(c.name) for c in pred.columns]
        args = [c.numeric(idx) for c in columns]
        nulls = np.zeros(n, dtype=bool)

        for c in columns:
            nulls |= c.null_mask if idx is None else c.null_mask[idx]

        def row_id(i):
            return int(idx[i]) if idx is not None else int(i)

        if udf.vectorized:
            try:
                with np.errstate(all='ignore'):
                    result = np.asarray(udf.fn(*args), dtype=np.float64)
            except Exception as e:
                # Replay row by row to find the failing row
                for i in np.flatnonzero(~nulls):
                    try:
                        udf.fn(*[a[i:i + 1] for a in args])
                    except Exception as row_error:
                        raise UdfError(pred.name, row_id(i), row_error)

                raise UdfError(pred.name, None, e)

            if result.shape != (n,):
                result = np.broadcast_to(result, (n,))
        else:
            result = np.zeros(n, dtype=np.float64)

            for i in np.flatnonzero(~nulls):
                try:
                    result[i] = udf.fn(*[float(a[i]) for a in args])
                except Exception as e:
                    raise UdfError(pred.name, row_id(i), e)

        return OPS[pred.op](result, pred.value), nulls

    def _atom(self, table, pred, idx, n):
        """
        Condition and NULL mask of one atom.
        """
        if isinstance(pred, frontend.FnCall):
            return self._call(table, pred, idx, n)

        if isinstance(pred, frontend.ColumnCompare):
            left, lv, ln = self._vectors(table, pred.left, idx)
            right, rv, rn = self._vectors(table, pred.right, idx)

            if left.kind.name == 'TEXT' and (left.dictionary is not right.dictionary or pred.op not in ('=', '<>')):
                lv = left.dictionary.decode_all(lv) if len(left.dictionary) else lv
                rv = right.dictionary.decode_all(rv) if len(right.dictionary) else rv

            return np.asarray(OPS[pred.op](lv, rv), dtype=bool), ln | rn

        column, values, nulls = self._vectors(table, pred.column, idx)
        text = column.kind.name == 'TEXT'

        if isinstance(pred, frontend.Equality):
            if text:
                return self._text_condition(column, values, '=', pred.value), nulls

            return values == pred.value, nulls
        elif isinstance(pred, frontend.Range):
            if text:
                return self._text_range(column, values, pred.lo, pred.hi), nulls

            return (values >= pred.lo) & (values <= pred.hi), nulls

        if text:
            return self._text_condition(column, values, pred.op, pred.value), nulls

        return OPS[pred.op](values, pred.value), nulls

    def truth(self, table, pred, idx=None):
        """
        Three-valued evaluation: (true mask, false mask). Rows in neither
        are UNKNOWN because of a NULL operand.
        """
        n = table.row_count if idx is None else len(idx)

        if isinstance(pred, frontend.Const):
            t = np.full(n, pred.value, dtype=bool)
            return t, ~t
        elif isinstance(pred, frontend.Not):
            t, f = self.truth(table, pred.term, idx)
            return f, t
        elif isinstance(pred, frontend.And):
            t, f = self.truth(table, pred.terms[0], idx)

            for term in pred.terms[1:]:
                t2, f2 = self.truth(table, term, idx)
                t, f = t & t2, f | f2

            return t, f
        elif isinstance(pred, frontend.Or):
            t, f = self.truth(table, pred.terms[0], idx)

            for term in pred.terms[1:]:
                t2, f2 = self.truth(table, term, idx)
                t, f = t | t2, f & f2

            return t, f

        condition, nulls = self._atom(table, pred, idx, n)
        known = ~nulls

        return condition & known, ~condition & known

    def eval_predicate(self, table, pred, selection=None):
        """
        Narrow a selection to the rows satisfying pred. UNKNOWN rows are
        dropped, like FALSE ones.
        """
        if selection is None:
            selection = RowSelection.all_rows(table)

        if pred is None or pred == frontend.TRUE:
            return selection

        t, _ = self.truth(table, pred, selection.indices)

        if selection.indices is None:
            return RowSelection(table, np.flatnonzero(t).astype(np.int64))

        return RowSelection(table, selection.indices[t])

    def _partitions(self, n):
        parts = max(1, min(self.workers, n))
        bounds = np.linspace(0, n, parts + 1).astype(np.int64)

        return [(int(bounds[i]), int(bounds[i + 1])) for i in range(parts)]

    def _map(self, fn, items):
        if self.workers == 1 or len(items) == 1:
            return [fn(item) for item in items]

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def count_star(self, table, pred=None):
        """
        Number of rows satisfying pred. Nothing is materialized.
        """
        if pred is None or pred == frontend.TRUE:
            return table.row_count

        if not table.row_count:
            return 0

        def count(bounds):
            lo, hi = bounds
            idx = None if (lo, hi) == (0, table.row_count) else np.arange(lo, hi, dtype=np.int64)
            t, _ = self.truth(table, pred, idx)

            return int(t.sum())

        return sum(self._map(count, self._partitions(table.row_count)))

    """
    Joins
    """
    def build_hash(self, table, key, residual=None):
        """
        Hash the rows of table passing residual on the key column. NULL
        keys are left out.
        """
        selection = self.eval_predicate(table, residual)
        rows = selection.as_indices()
        column = table.column(key)
        rows = rows[~column.null_mask[rows]]
        keys = column.values[rows]

        capacity = capacity_for(len(rows), self.load_factor)
        b = (splitmix64(keys) & np.uint64(capacity - 1)).astype(np.int64)
        order = np.argsort(b, kind='stable')
        starts = np.zeros(capacity + 1, dtype=np.int64)
        starts[1:] = np.cumsum(np.bincount(b, minlength=capacity))

        return HashTableIndex(table.name, key, capacity, starts, rows[order], keys[order], len(selection))

    def _keys_in(self, source, rows, target):
        """
        Values of source at rows, in target's code space when both are
        TEXT columns with different dictionaries. Strings target has
        never seen come back as NULL.
        """
        keys = source.values[rows]
        nulls = source.null_mask[rows]

        if source.kind.name == 'TEXT' and source.dictionary is not target.dictionary:
            remap = np.fromiter((target.dictionary.code_of(s, -1) for s in source.dictionary.strings),
                dtype=np.int64, count=len(source.dictionary))

            if len(remap):
                keys = remap[keys]
                nulls = nulls | (keys < 0)

        return keys, nulls

    def _probe_keys(self, tables, ids, outer, inner_column):
        return self._keys_in(tables[outer.table].column(outer.name), ids[outer.table], inner_column)

    def _pipeline(self, probe, tables, steps, bounds):
        """
        Probe rows lo..hi: fused predicate, then every build lookup in
        order. Returns row ids per relation and per-step output counts.
        """
        lo, hi = bounds
        idx = np.arange(lo, hi, dtype=np.int64)
        table = tables[probe.binding]
        t, _ = self.truth(table, probe.predicate, idx) if probe.predicate is not None else (None, None)
        rows = idx if t is None else idx[t]

        ids = OrderedDict([(probe.binding, rows)])
        counts = [len(rows)]

        for step, index in steps:
            outer, inner = step.keys[0]
            inner_column = tables[step.relation.binding].column(inner.name)
            keys, nulls = self._probe_keys(tables, ids, outer, inner_column)
            positions, matched = index.lookup(keys, nulls)

            ids = OrderedDict((b, r[positions]) for b, r in ids.items())
            ids[step.relation.binding] = matched

            # Further edges between the same relations become equality checks
            for outer, inner in step.keys[1:]:
                b = tables[inner.table].column(inner.name)
                keys, nulls = self._keys_in(tables[outer.table].column(outer.name), ids[outer.table], b)
                ok = (keys == b.values[ids[inner.table]]) & ~nulls & ~b.null_mask[ids[inner.table]]
                ids = OrderedDict((k, r[ok]) for k, r in ids.items())

            counts.append(len(ids[probe.binding]))

        return ids, counts

    def probe_joins(self, probe, tables, steps, projection=None):
        """
        Stream the probe relation through the prebuilt hash tables.

        steps pairs every BuildStep with its HashTableIndex, in build
        order. Returns (result table, ExecStats).
        """
        stats = ExecStats()
        started = time.perf_counter()
        probe_table = tables[probe.binding]
        stats.probe_input = probe_table.row_count

        fragments = self._map(lambda bounds: self._pipeline(probe, tables, steps, bounds),
            self._partitions(probe_table.row_count))

        bindings = [probe.binding] + [s.relation.binding for s, _ in steps]
        ids = dict((b, np.concatenate([f[0][b] for f in fragments]) if fragments else np.zeros(0, dtype=np.int64))
            for b in bindings)

        stats.probe_selected = int(sum(f[1][0] for f in fragments))
        stats.partition_outputs = [f[1][-1] for f in fragments]
        stats.timed('probe', started)

        for i, (step, index) in enumerate(steps):
            stats.joins.append(JoinStats(step.relation.binding, index.build_input, index.size, index.capacity,
                int(sum(f[1][i + 1] for f in fragments))))

        started = time.perf_counter()
        result = self._gather(tables, ids, projection, stats)
        stats.timed('gather', started)

        return result, stats

    def _gather(self, tables, ids, projection, stats):
        if projection is None:
            count = len(ids[next(iter(ids))]) if ids else 0
            return storage.build_table('result', [('count', storage.INT64)], [np.array([count], dtype=np.int64)])

        names = [c.name for c in projection]
        columns = []

        for c in projection:
            name = c.name if names.count(c.name) == 1 else str(c)
            columns.append(tables[c.table].column(c.name).take(ids[c.table], name))

        rows = len(columns[0]) if columns else 0
        stats.rows_materialized += rows * len(columns)

        return storage.ColumnTable('result', tuple(columns), rows)

    def resolve(self, relation):
        if relation.temp is not None:
            return self.database.resolve(relation.temp)

        return self.database.get(relation.table)

    def execute_plan(self, plan):
        """
        Run a physical plan end to end: build every hash table in order,
        then one fused probe pass.
        """
        tables = {plan.probe.binding: self.resolve(plan.probe)}
        steps = []
        builds = []

        for step in plan.builds:
            table = self.resolve(step.relation)
            tables[step.relation.binding] = table

            started = time.perf_counter()
            inner = step.keys[0][1]
            index = self.build_hash(table, inner.name, step.relation.predicate)
            builds.append((step.relation.binding, (time.perf_counter() - started) * 1000.0))
            steps.append((step, index))

            logger.debug('Built hash on %s.%s: %i of %i rows, capacity %i', step.relation.binding,
                inner.name, index.size, index.build_input, index.capacity)

        result, stats = self.probe_joins(plan.probe, tables, steps, plan.projection)

        for (binding, ms), join in zip(builds, stats.joins):
            join.build_ms = ms
            stats.operators['build:%s' % binding] = ms
            logger.debug('Join %s: build %i rows, probe output %i', binding, join.build_rows, join.probe_output)

        return result, stats

    def execute_count(self, ra):
        """
        Interpret an Aggregate(COUNT_STAR) / Select / Project / Scan tree,
        as produced for selectivity sub-queries.
        """
        table, selection = self._run(ra.child if isinstance(ra, frontend.Aggregate) else ra)

        return len(selection)

    def select_rows(self, ra):
        """
        Table and selected row ids of a Select / Project / Scan tree.
        """
        table, selection = self._run(ra)

        return table, selection.as_indices()

    def _run(self, node):
        if isinstance(node, frontend.Scan):
            table = self.database.resolve(node.handle) if node.handle is not None else self.database.get(node.table)
            return table, RowSelection.all_rows(table)
        elif isinstance(node, frontend.Project):
            table, selection = self._run(node.child)
            table = table.project([c.name for c in node.columns])
            return table, RowSelection(table, selection.indices)
        elif isinstance(node, frontend.Select):
            table, selection = self._run(node.child)

            if node.predicate == frontend.FALSE:
                return table, RowSelection(table, np.zeros(0, dtype=np.int64))

            return table, self.eval_predicate(table, node.predicate, selection)

        raise EngineError('Cannot interpret %s in a sub-query' % type(node).__name__)
