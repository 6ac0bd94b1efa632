#!/usr/bin/env python

"""
Seeded data generators for the benchmark subsets.

Generators return, per table, an ordered mapping of column name to an
int64 vector (DECIMAL already scaled, DATE as days) or, for TEXT, an
Encoded pair of codes and vocabulary.
"""

from dataclasses import dataclass

import numpy as np

from errors import ScaleTooSmall


@dataclass
class Encoded:
    codes: np.ndarray
    vocabulary: list

    def __len__(self):
        return len(self.codes)


def scaled_rows(table, base, scale):
    rows = int(round(base * scale))

    if rows < 1:
        raise ScaleTooSmall('Scale %s leaves %s with %s rows (%s at scale 1)' % (scale, table, rows, base))

    return rows

def streams(seed, names):
    """
    One independent generator per table, so tables can be generated in
    any order.
    """
    children = np.random.SeedSequence(seed).spawn(len(names))

    return dict((name, np.random.default_rng(child)) for name, child in zip(names, children))

def pick(rng, n, size, skew=0.0):
    """
    Codes 0..n-1, uniform or zipf-weighted (weight of code i is
    1 / (i + 1) ** skew).
    """
    if not skew:
        return rng.integers(0, n, size=size)

    weights = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** skew

    return rng.choice(n, size=size, p=weights / weights.sum())

def spread(rng, n, size, skew=0.0):
    """
    Like pick, but unskewed codes come in equal shares (counts differ by
    at most one), shuffled.
    """
    if skew:
        return pick(rng, n, size, skew)

    return rng.permutation(np.arange(size, dtype=np.int64) % n)
