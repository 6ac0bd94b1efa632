#!/usr/bin/env python

"""
Commands that generate benchmark data.
"""

from fabric import task
from invoke.exceptions import Exit

import cli


@task(default=True, help={
    'benchmark': 'tpch_subset, ssb_subset or custom',
    'scale': 'Fraction of the scale 1 row counts',
    'zipf': 'Per column skew, e.g. l_partkey=1.1,o_orderpriority=0.8',
    'correlated': 'Generate the dependent columns the benchmark queries rely on',
    'directory': 'Output directory (defaults to data/<benchmark>-<scale>-<seed>)',
})
def generate(c, benchmark='tpch_subset', scale=None, seed=None, directory=None, zipf=None, correlated=True):
    """
    Write a seeded dataset as CSVs plus a schema.yml manifest.
    """
    code = cli.guarded(cli.cmd_generate, benchmark, scale, seed, directory, zipf, correlated)

    if code:
        raise Exit(code=code)

@task
def load(c, benchmark='tpch_subset', scale=None, seed=None):
    """
    Generate a dataset straight into the session, without CSVs.
    """
    code = cli.guarded(cli.cmd_load_generated, benchmark, scale, seed)

    if code:
        raise Exit(code=code)
