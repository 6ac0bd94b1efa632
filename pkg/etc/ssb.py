#!/usr/bin/env python

"""
Star schema subset: lineorder plus the dwdate, customer, supplier and
part dimensions.

The date dimension is thinned at small scales (one day every
round(0.1 / scale) days). Dimension sizes are the subset's own rather
than the full benchmark's: at desk scale customer and part reach the
default ESC minimum table size while supplier and dwdate stay under it,
and lineorder keeps over 95% of the rows at every scale.

Unless skewed, nations and part categories come in equal shares, so at
desk scale every region holds exactly a fifth of its dimension.
"""

import datetime

from collections import OrderedDict

import numpy as np

from etc import Encoded, pick, scaled_rows, spread, streams

LINEORDER = 6000000
CUSTOMERS = 120000
SUPPLIERS = 30000
PARTS = 120000

FIRST_DAY = datetime.date(1992, 1, 1)
LAST_DAY = datetime.date(1998, 12, 31)

MONTHS = ['Jan', 'Feb', 'Mar', 'Apr', 'May', 'Jun', 'Jul', 'Aug', 'Sep', 'Oct', 'Nov', 'Dec']

REGIONS = OrderedDict([
    ('AFRICA', ['ALGERIA', 'ETHIOPIA', 'KENYA', 'MOROCCO', 'MOZAMBIQUE']),
    ('AMERICA', ['ARGENTINA', 'BRAZIL', 'CANADA', 'PERU', 'UNITED STATES']),
    ('ASIA', ['CHINA', 'INDIA', 'INDONESIA', 'JAPAN', 'VIETNAM']),
    ('EUROPE', ['FRANCE', 'GERMANY', 'ROMANIA', 'RUSSIA', 'UNITED KINGDOM']),
    ('MIDDLE EAST', ['EGYPT', 'IRAN', 'IRAQ', 'JORDAN', 'SAUDI ARABIA']),
])

NATIONS = [n for nations in REGIONS.values() for n in nations]
REGION_OF_NATION = np.repeat(np.arange(len(REGIONS)), 5)

# 'UNITED KI1': first nine letters of the nation plus a digit
CITIES = ['%-9s%i' % (nation[:9], digit) for nation in NATIONS for digit in range(10)]

MFGRS = ['MFGR#%i' % m for m in range(1, 6)]
CATEGORIES = ['MFGR#%i%i' % (m, c) for m in range(1, 6) for c in range(1, 6)]
BRANDS = ['MFGR#%i%i%i' % (m, c, b) for m in range(1, 6) for c in range(1, 6) for b in range(1, 41)]

TABLES = ['lineorder', 'dwdate', 'customer', 'supplier', 'part']


def date_step(scale):
    return max(1, int(round(0.1 / scale)))

def _skew(spec, column):
    return spec.zipf.get(column, 0.0)

def _dates(scale):
    step = datetime.timedelta(days=date_step(scale))
    days = []
    day = FIRST_DAY

    while day <= LAST_DAY:
        days.append(day)
        day += step

    return OrderedDict([
        ('d_datekey', np.array([d.year * 10000 + d.month * 100 + d.day for d in days], dtype=np.int64)),
        ('d_year', np.array([d.year for d in days], dtype=np.int64)),
        ('d_yearmonthnum', np.array([d.year * 100 + d.month for d in days], dtype=np.int64)),
        ('d_yearmonth', Encoded(np.array([(d.year - FIRST_DAY.year) * 12 + d.month - 1 for d in days], dtype=np.int64),
            ['%s%i' % (m, y) for y in range(FIRST_DAY.year, LAST_DAY.year + 1) for m in MONTHS])),
        ('d_weeknuminyear', np.array([(d.timetuple().tm_yday - 1) // 7 + 1 for d in days], dtype=np.int64)),
    ])

def _located(rng, n, spec, prefix, key):
    nation = spread(rng, len(NATIONS), n, _skew(spec, '%s_nation' % prefix))
    city = nation * 10 + rng.integers(0, 10, size=n)

    return OrderedDict([
        (key, np.arange(1, n + 1, dtype=np.int64)),
        ('%s_city' % prefix, Encoded(city, CITIES)),
        ('%s_nation' % prefix, Encoded(nation, NATIONS)),
        ('%s_region' % prefix, Encoded(REGION_OF_NATION[nation], list(REGIONS))),
    ])

def _part(rng, n, spec):
    skew = _skew(spec, 'p_mfgr')

    if skew:
        mfgr = pick(rng, len(MFGRS), n, skew)
        category = mfgr * 5 + rng.integers(0, 5, size=n)
    else:
        category = spread(rng, len(CATEGORIES), n)
        mfgr = category // 5

    brand = category * 40 + rng.integers(0, 40, size=n)

    return OrderedDict([
        ('p_partkey', np.arange(1, n + 1, dtype=np.int64)),
        ('p_mfgr', Encoded(mfgr, MFGRS)),
        ('p_category', Encoded(category, CATEGORIES)),
        ('p_brand1', Encoded(brand, BRANDS)),
    ])

def _lineorder(rng, n, dates, customers, suppliers, parts, spec):
    row = np.arange(n, dtype=np.int64)
    datekeys = dates['d_datekey']

    return OrderedDict([
        ('lo_orderkey', row // 4 + 1),
        ('lo_linenumber', row % 4 + 1),
        ('lo_custkey', pick(rng, customers, n, _skew(spec, 'lo_custkey')) + 1),
        ('lo_partkey', pick(rng, parts, n, _skew(spec, 'lo_partkey')) + 1),
        ('lo_suppkey', pick(rng, suppliers, n, _skew(spec, 'lo_suppkey')) + 1),
        ('lo_orderdate', datekeys[rng.integers(0, len(datekeys), size=n)]),
        ('lo_quantity', rng.integers(1, 51, size=n)),
        ('lo_discount', rng.integers(0, 11, size=n)),
        ('lo_revenue', rng.integers(10000, 10000000, size=n)),
    ])

def generate(spec):
    lineorder = scaled_rows('lineorder', LINEORDER, spec.scale)
    customers = scaled_rows('customer', CUSTOMERS, spec.scale)
    suppliers = scaled_rows('supplier', SUPPLIERS, spec.scale)
    parts = scaled_rows('part', PARTS, spec.scale)
    rngs = streams(spec.seed, TABLES)

    dates = _dates(spec.scale)

    return OrderedDict([
        ('lineorder', _lineorder(rngs['lineorder'], lineorder, dates, customers, suppliers, parts, spec)),
        ('dwdate', dates),
        ('customer', _located(rngs['customer'], customers, spec, 'c', 'c_custkey')),
        ('supplier', _located(rngs['supplier'], suppliers, spec, 's', 's_suppkey')),
        ('part', _part(rngs['part'], parts, spec)),
    ])
