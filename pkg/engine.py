#!/usr/bin/env python

"""
Query driver: parse, analyze, plan and execute one statement at a time.

Every failure leaves as an EngineError labelled with the phase it
happened in, and temp tables never outlive the query.
"""

import logging
import time

from collections import OrderedDict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import app_config
import frontend
import optimizer
from catalog import Catalog
from errors import EngineError
from executor import ExecStats, Executor

logger = logging.getLogger(__name__)


@dataclass
class QueryResult:
    sql: str
    table: object
    plan: optimizer.PhysicalPlan
    stats: ExecStats
    timings: OrderedDict = field(default_factory=OrderedDict)
    explain: Optional[str] = None

    @property
    def is_count(self):
        return self.plan.projection is None

    @property
    def count(self):
        """
        COUNT(*) value, or the number of result rows.
        """
        if self.is_count:
            return int(self.table.column('count').values[0])

        return self.table.row_count

    @property
    def columns(self):
        return self.table.column_names

    def rows(self, limit=None):
        return list(self.table.rows(limit))

    @property
    def total_ms(self):
        return sum(self.timings.values())

    @property
    def overhead_ms(self):
        """
        Time spent in selectivity sub-queries and their materialization.
        """
        return sum(d.subquery_time + d.materialize_time for d in self.plan.decisions)


@contextmanager
def phase(name, timings=None):
    """
    Label anything raised inside with the phase name, overriding the
    error class's default, and record how long the phase took.
    """
    started = time.perf_counter()

    try:
        yield
    except EngineError as e:
        e.phase = name
        raise
    except Exception as e:
        raise EngineError('%s: %s' % (type(e).__name__, e), phase=name) from e
    finally:
        if timings is not None:
            timings[name] = (time.perf_counter() - started) * 1000.0


class Engine(object):
    """
    A catalog plus the executor and planner working on it.
    """
    def __init__(self, catalog=None, config=None, workers=None):
        self.catalog = catalog or Catalog()
        self.config = config or optimizer.EscConfig.from_app_config()
        self.executor = Executor(self.catalog.database, self.catalog.udfs,
            workers or app_config.WORKERS, app_config.HASH_LOAD_FACTOR)
        self.planner = optimizer.Planner(self.catalog, self.executor)

    @property
    def database(self):
        return self.catalog.database

    @property
    def workers(self):
        return self.executor.workers

    def register_udf(self, name, arity, fn, vectorized=False):
        return frontend.register_udf(self.catalog, name, arity, fn, vectorized)

    def analyze(self, sql):
        with phase('parse'):
            ast = frontend.parse(sql)

        with phase('analyze'):
            return frontend.analyze(ast, self.catalog)

    def run(self, sql, config=None, explain=False, timings=True):
        """
        Run one statement and return a QueryResult.
        """
        config = config or self.config
        phases = OrderedDict()

        try:
            with phase('parse', phases):
                ast = frontend.parse(sql)

            with phase('analyze', phases):
                ra = frontend.analyze(ast, self.catalog)

            with phase('plan', phases):
                plan = self.planner.plan(ra, config)

            text = optimizer.explain(plan, timings) if explain else None

            with phase('execute', phases):
                table, stats = self.executor.execute_plan(plan)
        finally:
            self.database.drop_all_temps()

        logger.debug('Ran %r in %.3f ms', sql, sum(phases.values()))

        return QueryResult(sql, table, plan, stats, phases, text)

    def explain(self, sql, config=None, timings=True):
        """
        Plan a statement without executing it.
        """
        config = config or self.config

        try:
            ra = self.analyze(sql)

            with phase('plan'):
                plan = self.planner.plan(ra, config)

            return optimizer.explain(plan, timings)
        finally:
            self.database.drop_all_temps()
