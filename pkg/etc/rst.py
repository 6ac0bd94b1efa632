#!/usr/bin/env python

"""
The three-table example R, S, T used to demonstrate ESC end to end.

S is the largest relation and references R through S.A and T through
S.B, so S probes while R and T are built. With spec.correlated set,
R.D tracks R.C.
"""

from collections import OrderedDict

import numpy as np

from etc import pick, scaled_rows, streams

R_ROWS = 20000
S_ROWS = 100000
T_ROWS = 5000

TABLES = ['R', 'S', 'T']


def _skew(spec, column):
    return spec.zipf.get(column, 0.0)

def generate(spec):
    nr = scaled_rows('R', R_ROWS, spec.scale)
    ns = scaled_rows('S', S_ROWS, spec.scale)
    nt = scaled_rows('T', T_ROWS, spec.scale)
    rngs = streams(spec.seed, TABLES)

    rng = rngs['R']
    c = rng.integers(1, 1001, size=nr)

    if spec.correlated:
        d = np.clip(c + rng.integers(-20, 21, size=nr), 1, 1000)
    else:
        d = rng.integers(1, 1001, size=nr)

    r = OrderedDict([
        ('A', np.arange(1, nr + 1, dtype=np.int64)),
        ('B', pick(rng, 100, nr, _skew(spec, 'R.B')) + 1),
        ('C', c),
        ('D', d),
    ])

    rng = rngs['S']
    s = OrderedDict([
        ('A', pick(rng, nr, ns, _skew(spec, 'S.A')) + 1),
        ('B', rng.integers(1, nt + 1, size=ns)),
        ('C', rng.integers(1, 1001, size=ns)),
        ('D', rng.integers(1, 1001, size=ns)),
    ])

    rng = rngs['T']
    t = OrderedDict([
        ('A', rng.integers(1, 1001, size=nt)),
        ('B', np.arange(1, nt + 1, dtype=np.int64)),
        ('C', rng.integers(1, 1001, size=nt)),
        ('D', rng.integers(1, 1001, size=nt)),
    ])

    return OrderedDict([('R', r), ('S', s), ('T', t)])
