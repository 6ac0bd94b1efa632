#!/usr/bin/env python

"""
Table metadata, the UDF registry and the histogram estimator.

The estimator is an experimental arm only: ESC computes selectivities
exactly and never consults it.
"""

import logging
import math

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

import frontend
import storage
from errors import DuplicateFunction, Inestimable, UnsupportedColumnKind

logger = logging.getLogger(__name__)

"""
UDFs
"""
@dataclass(frozen=True)
class Udf:
    name: str
    arity: int
    fn: Callable
    # Vectorized functions take whole float64 arrays, others one row at a time
    vectorized: bool = False


class UdfRegistry(object):
    def __init__(self):
        self.functions = {}

    def register(self, name, arity, fn, vectorized=False):
        name = name.lower()

        if name in self.functions:
            raise DuplicateFunction(name)

        udf = Udf(name, arity, fn, vectorized)
        self.functions[name] = udf

        return udf

    def get(self, name):
        return self.functions.get(name.lower())

    def names(self):
        return sorted(self.functions)


"""
Statistics
"""
@dataclass
class ColumnStats:
    name: str
    kind: storage.Kind
    distinct: int
    null_count: int
    min: Optional[int] = None
    max: Optional[int] = None


@dataclass
class TableStats:
    table: str
    row_count: int
    columns: dict = field(default_factory=dict)

    def ndv(self, column):
        return self.columns[column].distinct


def collect_stats(table):
    """
    Exact row count, min/max and distinct counts for every column.
    """
    stats = TableStats(table.name, table.row_count)

    for column in table.columns:
        present = column.values[~column.null_mask]
        distinct = len(np.unique(present))
        lo = hi = None

        if column.kind.is_numeric and len(present):
            lo, hi = int(present.min()), int(present.max())

        stats.columns[column.name] = ColumnStats(column.name, column.kind, distinct,
            int(column.null_mask.sum()), lo, hi)

    return stats


"""
Histograms
"""
@dataclass
class EquiDepthHistogram:
    """
    Bucket i covers encoded values lows[i]..highs[i] and holds counts[i]
    rows with distinct[i] distinct values. Empty buckets keep their low
    as boundary.
    """
    table: str
    column: str
    kind: storage.Kind
    lows: np.ndarray
    highs: np.ndarray
    counts: np.ndarray
    distinct: np.ndarray
    row_count: int

    @property
    def k(self):
        return len(self.counts)

    @property
    def total(self):
        return int(self.counts.sum())

    def equality(self, value):
        rows = 0.0

        for i in np.flatnonzero(self.counts):
            if self.lows[i] <= value <= self.highs[i]:
                rows += self.counts[i] / float(self.distinct[i])

        return rows

    def between(self, lo, hi):
        """
        Estimated rows with lo <= value <= hi, uniform within buckets.
        """
        rows = 0.0

        if lo > hi:
            return rows

        for i in np.flatnonzero(self.counts):
            low, high = int(self.lows[i]), int(self.highs[i])
            overlap = min(hi, high) - max(lo, low) + 1

            if overlap > 0:
                rows += self.counts[i] * overlap / float(high - low + 1)

        return rows


def build_histogram(table, column, k):
    column = table.column(column) if isinstance(column, str) else column

    if column.kind.name == 'TEXT':
        raise UnsupportedColumnKind('Cannot build a histogram over TEXT column %s.%s' % (table.name, column.name))

    if k < 1:
        raise UnsupportedColumnKind('Histograms need at least one bucket, got %s' % k)

    values = np.sort(column.values[~column.null_mask])
    n = len(values)

    if n == 0:
        empty = np.zeros(k, dtype=np.int64)
        return EquiDepthHistogram(table.name, column.name, column.kind, empty, empty.copy(),
            empty.copy(), empty.copy(), table.row_count)

    lows = values[(np.arange(k) * n) // k]
    cuts = np.append(np.searchsorted(values, lows, side='left'), n)
    counts = np.diff(cuts)
    highs = np.where(counts > 0, values[np.maximum(cuts[1:] - 1, 0)], lows)

    first = np.ones(n, dtype=bool)
    first[1:] = values[1:] != values[:-1]
    distinct = np.array([first[cuts[i]:cuts[i + 1]].sum() for i in range(k)], dtype=np.int64)

    return EquiDepthHistogram(table.name, column.name, column.kind, lows, highs, counts, distinct, table.row_count)


"""
Estimation
"""
def _atom_rows(hist, atom):
    if isinstance(atom, frontend.Equality):
        return hist.equality(atom.value)
    elif isinstance(atom, frontend.Range):
        return hist.between(atom.lo, atom.hi)

    op, v = atom.op, atom.value

    if op == '<':
        return hist.between(_lowest(hist), v - 1)
    elif op == '<=':
        return hist.between(_lowest(hist), v)
    elif op == '>':
        return hist.between(v + 1, _highest(hist))
    elif op == '>=':
        return hist.between(v, _highest(hist))

    return hist.total - hist.equality(v)

def _lowest(hist):
    return int(hist.lows.min()) if hist.k else 0

def _highest(hist):
    return int(hist.highs.max()) if hist.k else 0

def _text_equality(stats, atom):
    if stats is None or atom.column.name not in stats.columns or not stats.row_count:
        raise Inestimable('No statistics for TEXT column %s' % atom.column)

    column = stats.columns[atom.column.name]

    if not column.distinct:
        return 0.0

    present = (stats.row_count - column.null_count) / float(stats.row_count)

    return present / column.distinct

def _estimate(hists, pred, stats):
    if isinstance(pred, frontend.Const):
        return 1.0 if pred.value else 0.0
    elif isinstance(pred, frontend.And):
        return float(np.prod([_estimate(hists, t, stats) for t in pred.terms]))
    elif isinstance(pred, frontend.Or):
        return 1.0 - float(np.prod([1.0 - _estimate(hists, t, stats) for t in pred.terms]))
    elif isinstance(pred, frontend.Not):
        return 1.0 - _estimate(hists, pred.term, stats)
    elif isinstance(pred, (frontend.FnCall, frontend.ColumnCompare)):
        raise Inestimable('No synopsis covers %s' % frontend.predicate_sql(pred))

    column = pred.column

    if column.kind is not None and column.kind.name == 'TEXT':
        if isinstance(pred, frontend.Equality):
            return _text_equality(stats, pred)

        raise Inestimable('TEXT ranges are not covered by histograms: %s' % frontend.predicate_sql(pred))

    hist = hists.get(column.name)

    if hist is None:
        raise Inestimable('No histogram for %s' % column)

    if not hist.row_count:
        return 0.0

    return _atom_rows(hist, pred) / float(hist.row_count)

def estimate_selectivity(hists, pred, stats=None):
    """
    Estimate the fraction of rows satisfying a single-table predicate,
    assuming uniformity inside buckets and independence across atoms.

    hists maps column names to histograms. TEXT equalities fall back to
    1/distinct from stats. Raises Inestimable for UDF calls.
    """
    estimate = _estimate(hists, pred, stats)

    if math.isnan(estimate):
        return 0.0

    return min(1.0, max(0.0, estimate))


"""
Catalog facade
"""
class Catalog(object):
    """
    Owns the database, registered UDFs and cached statistics. Tables are
    immutable, so caches key on the table object identity.
    """
    def __init__(self, database=None):
        self.database = database or storage.Database()
        self.udfs = UdfRegistry()
        self._stats = {}
        self._histograms = {}

    def table(self, name):
        return self.database.get(name)

    def register_udf(self, name, arity, fn, vectorized=False):
        return self.udfs.register(name, arity, fn, vectorized)

    def stats(self, name):
        table = self.table(name)
        cached = self._stats.get(name)

        if cached is None or cached[0] is not table:
            cached = (table, collect_stats(table))
            self._stats[name] = cached

        return cached[1]

    def histogram(self, name, column, k):
        table = self.table(name)
        key = (name, column, k)
        cached = self._histograms.get(key)

        if cached is None or cached[0] is not table:
            logger.debug('Building %i-bucket histogram on %s.%s', k, name, column)
            cached = (table, build_histogram(table, column, k))
            self._histograms[key] = cached

        return cached[1]

    def histograms_for(self, name, pred, k):
        """
        Histograms over every non-TEXT column pred references.
        """
        hists = {}

        for column in frontend.columns_of(pred):
            if column.kind is None or column.kind.name != 'TEXT':
                hists[column.name] = self.histogram(name, column.name, k)

        return hists
