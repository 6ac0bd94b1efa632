#!/usr/bin/env python

"""
Command line surface: load data, run SQL, explain plans, toggle ESC,
generate datasets and run benchmark suites.

The fab tasks in fabfile/ call the cmd_* functions here. Every command
returns the text it printed so callers (and tests) can inspect it.
"""

import logging
import os
import re

from dataclasses import dataclass

from termcolor import colored

import app_config
import bench
import optimizer
import render_utils
import storage
from catalog import Catalog
from engine import Engine
from errors import ConfigError, EngineError, UsageError

logger = logging.getLogger(__name__)

ESC_SWITCH = ('on', 'off')
OUTPUTS = ('text', 'json')

# Statement separators outside of string literals
_STATEMENT_RE = re.compile(r";(?=(?:[^']*'[^']*')*[^']*$)")

"""
Configuration
"""
def _flag(value, cast):
    if isinstance(value, str):
        value = value.strip()

    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError('Could not read "%s" as %s' % (value, cast.__name__))


@dataclass(frozen=True)
class CliConfig:
    esc: str = 'on'
    min_table_size: int = 1000
    max_selectivity: float = 0.2
    estimator: str = 'none'
    workers: int = 1
    output: str = 'text'

    def __post_init__(self):
        if self.esc not in ESC_SWITCH:
            raise ConfigError('--esc must be on or off, got %s' % self.esc)

        if self.workers < 1:
            raise ConfigError('--workers must be a positive integer, got %s' % self.workers)

        if self.output not in OUTPUTS:
            raise ConfigError('--output must be text or json, got %s' % self.output)

        # Same rules as the optimizer
        self.to_esc_config()

    @classmethod
    def from_app_config(cls, **flags):
        """
        Defaults from app_config, overridden by the flags that were given.
        Flag values may be strings as typed on the command line.
        """
        values = dict(
            esc='on' if app_config.ESC_ENABLED else 'off',
            min_table_size=app_config.MIN_TABLE_SIZE,
            max_selectivity=app_config.MAX_SELECTIVITY,
            estimator=app_config.ESTIMATOR_MODE,
            workers=app_config.WORKERS,
            output='text',
        )

        for k, v in flags.items():
            if v is not None:
                values[k] = v

        values['min_table_size'] = _flag(values['min_table_size'], int)
        values['max_selectivity'] = _flag(values['max_selectivity'], float)
        values['workers'] = _flag(values['workers'], int)

        if isinstance(values['esc'], bool):
            values['esc'] = 'on' if values['esc'] else 'off'

        return cls(**values)

    def replace(self, **flags):
        values = dict(self.__dict__)
        values.update(dict((k, v) for k, v in flags.items() if v is not None))

        return CliConfig.from_app_config(**values)

    def to_esc_config(self):
        return optimizer.EscConfig.from_app_config(
            enabled=self.esc == 'on',
            min_table_size=self.min_table_size,
            max_selectivity=self.max_selectivity,
            estimator_mode=self.estimator,
        )


class Session(object):
    """
    Tables loaded so far plus the current flags. One per process.
    """
    def __init__(self, config=None):
        self.config = config or CliConfig.from_app_config()
        self.engine = self._make_engine(Catalog())

    def _make_engine(self, catalog):
        engine = Engine(catalog, self.config.to_esc_config(), self.config.workers)
        bench.register_udfs(engine)

        return engine

    def configure(self, **flags):
        workers = self.config.workers
        self.config = self.config.replace(**flags)

        if self.config.workers != workers:
            self.engine = self._make_engine(self.engine.catalog)
        else:
            self.engine.config = self.config.to_esc_config()

        return self.config


_session = None

def get_session():
    global _session

    if _session is None:
        _session = Session()

    return _session

def reset_session(config=None):
    global _session

    _session = Session(config)

    return _session


"""
Output
"""
def echo(text='', color=None):
    print(colored(text, color) if color else text)

    return text

def warn(text):
    return echo(text, 'yellow')

def hint(text):
    return echo(text, 'blue')

def exit_code(error):
    """
    2 for usage errors, 1 for everything else that went wrong.
    """
    if isinstance(error, (UsageError, ConfigError)) or error.phase == 'usage':
        return 2

    return 1

def report_error(error):
    return echo('Error (phase=%s): %s' % (error.phase, error.message), 'red')

def guarded(command, *args, **kwargs):
    """
    Run a command, print any EngineError and return the exit code.
    """
    try:
        command(*args, **kwargs)
    except EngineError as e:
        logger.debug('Command %s failed', command.__name__, exc_info=True)
        report_error(e)

        return exit_code(e)

    return 0

def _display(value):
    if value is None:
        return 'NULL'

    if hasattr(value, 'isoformat'):
        return value.isoformat()

    return str(value)

def format_rows(table, limit=None):
    lines = [' | '.join(table.column_names)]
    lines.append('-' * len(lines[0]))

    for row in table.rows(limit):
        lines.append(' | '.join(_display(v) for v in row))

    return lines

def timing_line(result):
    phases = ', '.join('%s %.3f' % (name, ms) for name, ms in result.timings.items())

    return 'Time: %.3f ms (%s; esc overhead %.3f)' % (result.total_ms, phases, result.overhead_ms)


"""
Commands
"""
def cmd_load(path, table=None, schema=None, header=False, session=None):
    """
    Load one CSV file (table name and schema required), or every table of
    a generated dataset directory or its schema.yml.
    """
    session = session or get_session()
    database = session.engine.database

    if os.path.isdir(path) or path.endswith(('.yml', '.yaml')):
        tables = bench.load_dataset(database, path)
    else:
        if not schema:
            raise UsageError('Loading a CSV needs --schema name:KIND,...')

        name = table or os.path.splitext(os.path.basename(path))[0]
        tables = {name: storage.load_csv(database, name, storage.parse_schema(schema), path, header)}

    lines = ['%s: %i rows' % (name, t.row_count) for name, t in tables.items()]

    for line in lines:
        echo(line)

    return '\n'.join(lines)

def cmd_sql(query, explain=False, limit=None, session=None):
    """
    Run one statement: EXPLAIN first when asked, then rows or the count,
    then the timing line.
    """
    session = session or get_session()
    result = session.engine.run(query, explain=explain)

    if session.config.output == 'json':
        payload = {
            'sql': query,
            'timings': result.timings,
            'overhead_ms': result.overhead_ms,
        }

        if result.is_count:
            payload['count'] = result.count
        else:
            payload['columns'] = result.columns
            payload['rows'] = [[_display(v) for v in row] for row in result.rows(limit)]

        if explain:
            payload['plan'] = optimizer.explain_json(result.plan)

        return echo(render_utils.dumps(payload))

    lines = []

    if explain:
        lines.append(result.explain.rstrip('\n'))

    if result.is_count:
        lines.append('count: %i' % result.count)
    else:
        lines.extend(format_rows(result.table, limit))
        lines.append('(%i rows)' % result.count)

    lines.append(timing_line(result))

    return echo('\n'.join(lines))

def split_statements(text):
    """
    Statements of a .sql file. Whole-line -- comments are dropped.
    """
    text = '\n'.join(line for line in text.splitlines() if not line.strip().startswith('--'))

    return [s.strip() for s in _STATEMENT_RE.split(text) if s.strip()]

def cmd_batch(path, explain=False, session=None):
    """
    Run every statement of a .sql file in order, stopping at the first
    error.
    """
    session = session or get_session()

    try:
        with open(path) as f:
            statements = split_statements(f.read())
    except (IOError, OSError) as e:
        raise UsageError('Could not read %s: %s' % (path, e))

    return [cmd_sql(sql, explain, session=session) for sql in statements]

def cmd_esc(state, session=None):
    session = session or get_session()
    session.configure(esc=state)

    return hint('ESC %s' % session.config.esc)

def cmd_repl(session=None, read=input):
    """
    Line based prompt. Statements end with ';'. \\q quits and
    \\esc on|off switches exact selectivity computation.
    """
    session = session or get_session()
    buffered = []
    hint('Statements end with ;   \\esc on|off switches ESC   \\q quits')

    while True:
        try:
            line = read('sql> ' if not buffered else '...> ')
        except (EOFError, KeyboardInterrupt):
            break

        stripped = line.strip()

        if not buffered and stripped.startswith('\\'):
            command = stripped.split()

            if command[0] == '\\q':
                break
            elif command[0] == '\\esc' and len(command) == 2:
                guarded(cmd_esc, command[1], session)
            else:
                warn('Unknown command %s' % stripped)

            continue

        buffered.append(line)

        if not stripped.endswith(';'):
            continue

        for sql in split_statements('\n'.join(buffered)):
            guarded(cmd_sql, sql, session=session)

        buffered = []

    return session

def parse_zipf(text):
    """
    "l_partkey=1.1,o_orderpriority=0.8" -> {column: exponent}
    """
    zipf = {}

    for part in (text or '').split(','):
        if not part.strip():
            continue

        if '=' not in part:
            raise UsageError('--zipf entries look like column=exponent, got "%s"' % part)

        column, exponent = part.split('=', 1)
        zipf[column.strip()] = _flag(exponent, float)

    return zipf

def gen_spec(benchmark='tpch_subset', scale=None, seed=None, zipf=None, correlated=True):
    default_scale = app_config.SSB_SCALE if benchmark == 'ssb_subset' else app_config.TPCH_SCALE
    scale = _flag(scale, float) if scale is not None else default_scale
    seed = _flag(seed, int) if seed is not None else app_config.SEED

    if isinstance(correlated, str):
        correlated = correlated.lower() not in ('0', 'false', 'no', 'off')

    return bench.GenSpec(benchmark, scale, seed, parse_zipf(zipf) if isinstance(zipf, str) else (zipf or {}), correlated)

def cmd_generate(benchmark='tpch_subset', scale=None, seed=None, directory=None, zipf=None, correlated=True):
    """
    Generate a benchmark dataset and write it as CSVs plus schema.yml.
    """
    spec = gen_spec(benchmark, scale, seed, zipf, correlated)
    directory = directory or os.path.join(app_config.DATA_PATH, '%s-%s-%s' % (spec.benchmark, spec.scale, spec.seed))
    tables = bench.generate(spec)
    path = bench.dump_dataset(tables, directory, spec)

    for name, table in tables.items():
        echo('%s: %i rows' % (name, table.row_count))

    hint('Wrote %s' % path)

    return path

def cmd_load_generated(benchmark='tpch_subset', scale=None, seed=None, session=None):
    """
    Register a freshly generated dataset with the session.
    """
    session = session or get_session()
    tables = bench.generate(gen_spec(benchmark, scale, seed))
    lines = []

    for name, table in tables.items():
        session.engine.database.register(table)
        lines.append(echo('%s: %i rows' % (name, table.row_count)))

    return '\n'.join(lines)

def cmd_bench(suite, scale=None, seed=None, output=None, repetitions=None, session=None):
    """
    Run a suite, write its JSON report and print the summary.
    """
    session = session or get_session()

    if suite not in bench.SUITES:
        raise UsageError('Unknown suite "%s", use one of: %s' % (suite, ', '.join(bench.SUITES)))

    report = bench.run_suite(suite,
        scale=_flag(scale, float) if scale is not None else None,
        seed=_flag(seed, int) if seed is not None else None,
        config=session.config.to_esc_config(),
        repetitions=_flag(repetitions, int) if repetitions is not None else None,
        workers=session.config.workers)

    path = report.write(output or os.path.join(app_config.REPORTS_PATH, '%s.json' % suite))

    if session.config.output == 'json':
        echo(report.dumps())
    else:
        echo(report.text().rstrip('\n'))

    hint('Wrote %s' % path)

    return report
