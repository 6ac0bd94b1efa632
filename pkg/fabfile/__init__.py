#!/usr/bin/env python

"""
Command line entry points.

    fab load --path data/tpch_subset-0.01-7
    fab sql --query "SELECT COUNT(*) FROM lineitem, orders WHERE ..." --explain
    fab sql --query "..." --esc off
    fab quick bench --suite tpch4 --estimator histogram
    fab data.generate --benchmark ssb_subset --scale 0.01

Tasks chained on one command line share the loaded tables.
"""

import logging
import os

from fabric import task
from invoke import Collection
from invoke.exceptions import Exit

import app_config
import cli

from . import data

"""
Logging
"""
file_handler = logging.FileHandler(os.path.join(app_config.LOG_PATH, '%s.log' % app_config.PROJECT_FILENAME))
file_handler.setLevel(app_config.LOG_LEVEL)
file_handler.setFormatter(logging.Formatter('%(asctime)s %(name)s %(levelname)s %(message)s'))

logging.getLogger().addHandler(file_handler)
logging.getLogger().setLevel(app_config.LOG_LEVEL)


def run(command, *args, **kwargs):
    """
    Run a cli command, exiting with 2 on usage errors and 1 on any
    other failure.
    """
    code = cli.guarded(command, *args, **kwargs)

    if code:
        raise Exit(code=code)

def configure(**flags):
    run(cli.get_session().configure, **flags)

"""
Profiles

Switch the benchmark scales before any other task runs.
"""
@task
def desk(c):
    """
    Desk scales (TPC-H and SSB at 0.01).
    """
    app_config.configure_targets('desk')

@task
def quick(c):
    """
    Tiny scales for smoke runs and tests.
    """
    app_config.configure_targets('quick')

@task
def full(c):
    """
    Full benchmark scales. Needs a lot of memory.
    """
    app_config.configure_targets('full')

"""
Settings
"""
@task
def esc(c, state='on'):
    """
    Switch exact selectivity computation on or off.
    """
    run(cli.cmd_esc, state)

@task(help={
    'min_table_size': 'Tables with fewer rows never get sub-queries (default %i)' % app_config.MIN_TABLE_SIZE,
    'max_selectivity': 'Push down selections at or below this selectivity (default %s)' % app_config.MAX_SELECTIVITY,
    'estimator': 'none or histogram, used when ESC is off (default %s)' % app_config.ESTIMATOR_MODE,
    'workers': 'Probe threads (default %i)' % app_config.WORKERS,
    'output': 'text or json',
})
def settings(c, min_table_size=None, max_selectivity=None, estimator=None, workers=None, output=None):
    """
    Change optimizer and output settings for the following tasks.
    """
    configure(min_table_size=min_table_size, max_selectivity=max_selectivity,
        estimator=estimator, workers=workers, output=output)

"""
Data and queries
"""
@task(help={
    'path': 'A CSV file, or a generated dataset directory or its schema.yml',
    'table': 'Table name (defaults to the file name)',
    'schema': 'name:KIND,... for CSV files, e.g. o_orderkey:INT64,o_totalprice:DECIMAL(15,2)',
    'header': 'Skip the first line of the CSV',
})
def load(c, path, table=None, schema=None, header=False):
    """
    Load tables.
    """
    run(cli.cmd_load, path, table, schema, header)

@task(help={
    'query': 'One SQL statement',
    'file': 'A .sql file of statements separated by ;',
    'explain': 'Print ESC decisions and the plan tree first',
    'esc': 'on or off',
})
def sql(c, query=None, file=None, explain=False, esc=None, min_table_size=None, max_selectivity=None,
        estimator=None, workers=None, output=None, limit=None):
    """
    Run SQL against the loaded tables.
    """
    configure(esc=esc, min_table_size=min_table_size, max_selectivity=max_selectivity,
        estimator=estimator, workers=workers, output=output)

    if file:
        run(cli.cmd_batch, file, explain)
    elif query:
        run(cli.cmd_sql, query, explain, int(limit) if limit else None)
    else:
        run(cli.cmd_repl)

@task
def repl(c, esc=None, workers=None):
    """
    Interactive prompt. \\q quits.
    """
    configure(esc=esc, workers=workers)
    run(cli.cmd_repl)

@task(help={
    'suite': 'overhead-scale, overhead-selectivity, overhead-attrs, tpch4 or ssb',
    'output': 'Report JSON path (defaults to data/reports/<suite>.json)',
})
def bench(c, suite, scale=None, seed=None, output=None, repetitions=None, esc=None, min_table_size=None,
        max_selectivity=None, estimator=None, workers=None):
    """
    Run a benchmark suite and write its report.
    """
    configure(esc=esc, min_table_size=min_table_size, max_selectivity=max_selectivity,
        estimator=estimator, workers=workers)
    run(cli.cmd_bench, suite, scale, seed, output, repetitions)

"""
Testing
"""
@task
def tests(c):
    """
    Run Python unit tests.
    """
    c.run('nose2 -v', env={'BENCH_TARGET': 'quick'})


ns = Collection(desk, quick, full, esc, settings, load, sql, repl, bench, tests)
ns.add_collection(Collection.from_module(data))
