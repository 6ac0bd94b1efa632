#!/usr/bin/env python

"""
Project-wide application configuration.

Every constant here can be overridden from the environment, see
get_overrides() below. Run profiles (desk, quick, full) are switched
with configure_targets().
"""

import os

"""
NAMES
"""
# Project name to be used in file names and environment variables
# Use dashes, not underscores!
PROJECT_SLUG = 'exact-selectivity'

# Project name to be used in file paths
PROJECT_FILENAME = 'exact_selectivity'

"""
PATHS
"""
ROOT_PATH = os.path.dirname(os.path.abspath(__file__))
SCHEMAS_PATH = os.path.join(ROOT_PATH, 'confs', 'schemas.yml')
TEMPLATES_PATH = os.path.join(ROOT_PATH, 'templates')
DATA_PATH = os.path.join(ROOT_PATH, 'data')
REPORTS_PATH = os.path.join(ROOT_PATH, 'data', 'reports')

"""
OPTIMIZER
"""
# Switch between the baseline planner and exact selectivity computation
ESC_ENABLED = True

# Two-threshold materialization policy. Both bounds are inclusive.
MIN_TABLE_SIZE = 1000
MAX_SELECTIVITY = 0.2

# Should qualifying selections be materialized as temp tables?
# The overhead suites turn this off so both arms run the same plan.
MATERIALIZE = True

# 'none' or 'histogram'. Only consulted when ESC is disabled.
ESTIMATOR_MODE = 'none'

# Selectivity used for predicates a histogram cannot estimate (UDFs)
DEFAULT_GUESS = 0.1
HISTOGRAM_BUCKETS = 64

"""
EXECUTOR
"""
WORKERS = 1
HASH_LOAD_FACTOR = 0.7

"""
BENCHMARKS
"""
SEED = 7
REPETITIONS = 5

# These variables will be set at runtime. See configure_targets() below
TPCH_SCALE = None
SSB_SCALE = None
OVERHEAD_SCALES = []
OVERHEAD_FIXED_SCALE = None

# 0.001% to 100%
SELECTIVITY_FRACTIONS = [0.00001, 0.0001, 0.001, 0.01, 0.1, 1.0]

"""
LOGGING
"""
LOG_PATH = '/tmp'
LOG_LEVEL = 'INFO'

"""
Utilities
"""
def get_overrides():
    """
    Collect configuration overrides from the environment.

    EXACT_SELECTIVITY_MIN_TABLE_SIZE=500 overrides MIN_TABLE_SIZE, cast to
    the type of the current value.
    """
    prefix = PROJECT_FILENAME.upper() + '_'
    overrides = {}

    for k, v in os.environ.items():
        if not k.startswith(prefix):
            continue

        name = k[len(prefix):]
        current = globals().get(name)

        if name.upper() != name or name not in globals():
            continue

        if isinstance(current, bool):
            overrides[name] = v.lower() in ('1', 'true', 'yes', 'on')
        elif isinstance(current, int):
            overrides[name] = int(v)
        elif isinstance(current, float):
            overrides[name] = float(v)
        elif isinstance(current, list):
            overrides[name] = [float(x) for x in v.split(',') if x.strip()]
        else:
            overrides[name] = v

    return overrides

def apply_overrides():
    """
    Apply environment overrides on top of the module constants.
    """
    globals().update(get_overrides())

def configure_targets(target):
    """
    Configure run profiles. Abstracted so tests and the command line
    can switch profiles after import.
    """
    global TPCH_SCALE
    global SSB_SCALE
    global OVERHEAD_SCALES
    global OVERHEAD_FIXED_SCALE
    global REPETITIONS
    global BENCH_TARGET

    if target == 'full':
        TPCH_SCALE = 50
        SSB_SCALE = 80
        OVERHEAD_SCALES = [1, 10, 50]
        OVERHEAD_FIXED_SCALE = 50
        REPETITIONS = 5
    elif target == 'quick':
        TPCH_SCALE = 0.002
        SSB_SCALE = 0.002
        OVERHEAD_SCALES = [0.001, 0.002, 0.005]
        OVERHEAD_FIXED_SCALE = 0.002
        REPETITIONS = 5
    else:
        TPCH_SCALE = 0.01
        SSB_SCALE = 0.01
        OVERHEAD_SCALES = [0.001, 0.01, 0.05]
        OVERHEAD_FIXED_SCALE = 0.01
        REPETITIONS = 5

    BENCH_TARGET = target or 'desk'

"""
Run automated configuration
"""
BENCH_TARGET = os.environ.get('BENCH_TARGET', None)

configure_targets(BENCH_TARGET)
apply_overrides()
