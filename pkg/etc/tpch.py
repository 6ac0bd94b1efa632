#!/usr/bin/env python

"""
TPC-H subset: orders, lineitem, part and supplier.

Row counts follow TPC-H at scale 1 (1.5M orders, 1 to 7 lines per
order, 200K parts, 10K suppliers). With spec.correlated set, columns
that the benchmark queries combine are generated dependent on each
other:

- o_orderstatus follows o_orderdate: F before the status window, P
  inside it, O after it.
- l_returnflag is R or A for lines shipped before the window pivot, N
  after it.
- p_retailprice grows with p_size.
"""

import datetime

from collections import OrderedDict

import numpy as np

from etc import Encoded, pick, scaled_rows, streams
from storage import date_to_days

ORDERS = 1500000
PARTS = 200000
SUPPLIERS = 10000
CUSTOMERS = 150000

START_DATE = datetime.date(1992, 1, 1)
END_DATE = datetime.date(1998, 8, 2)
MAX_SHIP_DELAY = 121

STATUS_PIVOT = datetime.date(1995, 6, 17)
STATUS_WINDOW = 60

STATUSES = ['F', 'O', 'P']
RETURN_FLAGS = ['A', 'N', 'R']
PRIORITIES = ['1-URGENT', '2-HIGH', '3-MEDIUM', '4-NOT SPECIFIED', '5-LOW']
SHIP_MODES = ['AIR', 'FOB', 'MAIL', 'RAIL', 'REG AIR', 'SHIP', 'TRUCK']
BRANDS = ['Brand#%i%i' % (m, n) for m in range(1, 6) for n in range(1, 6)]
CONTAINERS = ['SM CASE', 'SM BOX', 'MED BAG', 'MED BOX', 'LG CASE', 'LG BOX', 'JUMBO PKG', 'WRAP CASE']

TABLES = ['orders', 'lineitem', 'part', 'supplier']


def sizes(scale):
    return OrderedDict([
        ('orders', scaled_rows('orders', ORDERS, scale)),
        ('part', scaled_rows('part', PARTS, scale)),
        ('supplier', scaled_rows('supplier', SUPPLIERS, scale)),
    ])

def _skew(spec, column):
    return spec.zipf.get(column, 0.0)

def _part(rng, n, spec):
    size = rng.integers(1, 51, size=n)
    noise = rng.integers(0, 10001, size=n)

    if spec.correlated:
        price = 90000 + size * 2000 + noise
    else:
        price = 90000 + rng.integers(0, 110001, size=n)

    return OrderedDict([
        ('p_partkey', np.arange(1, n + 1, dtype=np.int64)),
        ('p_brand', Encoded(pick(rng, len(BRANDS), n, _skew(spec, 'p_brand')), BRANDS)),
        ('p_size', size),
        ('p_retailprice', price),
        ('p_container', Encoded(pick(rng, len(CONTAINERS), n, _skew(spec, 'p_container')), CONTAINERS)),
    ])

def _supplier(rng, n, spec):
    return OrderedDict([
        ('s_suppkey', np.arange(1, n + 1, dtype=np.int64)),
        ('s_nationkey', pick(rng, 25, n, _skew(spec, 's_nationkey'))),
        ('s_acctbal', rng.integers(-99999, 1000000, size=n)),
    ])

def _orders(rng, n, spec):
    first = date_to_days(START_DATE)
    last = date_to_days(END_DATE) - MAX_SHIP_DELAY
    pivot = date_to_days(STATUS_PIVOT)
    customers = max(1, int(round(CUSTOMERS * spec.scale)))

    dates = rng.integers(first, last + 1, size=n)

    if spec.correlated:
        status = np.where(dates < pivot - STATUS_WINDOW, 0, np.where(dates <= pivot + STATUS_WINDOW, 2, 1))
    else:
        status = pick(rng, len(STATUSES), n, _skew(spec, 'o_orderstatus'))

    return OrderedDict([
        ('o_orderkey', np.arange(1, n + 1, dtype=np.int64)),
        ('o_custkey', rng.integers(1, customers + 1, size=n)),
        ('o_orderstatus', Encoded(status, STATUSES)),
        ('o_totalprice', rng.integers(85771, 55528517, size=n)),
        ('o_orderdate', dates),
        ('o_orderpriority', Encoded(pick(rng, len(PRIORITIES), n, _skew(spec, 'o_orderpriority')), PRIORITIES)),
    ])

def _lineitem(rng, orders, part, suppliers, spec):
    lines = rng.integers(1, 8, size=len(orders['o_orderkey']))
    total = int(lines.sum())
    starts = np.cumsum(lines) - lines
    pivot = date_to_days(STATUS_PIVOT)

    partkey = pick(rng, len(part['p_partkey']), total, _skew(spec, 'l_partkey')) + 1
    quantity = rng.integers(1, 51, size=total)
    discount = rng.integers(0, 11, size=total)
    shipdate = np.repeat(orders['o_orderdate'], lines) + rng.integers(1, MAX_SHIP_DELAY + 1, size=total)

    if spec.correlated:
        returned = rng.integers(0, 2, size=total) * 2
        flag = np.where(shipdate <= pivot, returned, 1)
    else:
        flag = pick(rng, len(RETURN_FLAGS), total, _skew(spec, 'l_returnflag'))

    return OrderedDict([
        ('l_orderkey', np.repeat(orders['o_orderkey'], lines)),
        ('l_partkey', partkey),
        ('l_suppkey', rng.integers(1, suppliers + 1, size=total)),
        ('l_linenumber', np.arange(total, dtype=np.int64) - np.repeat(starts, lines) + 1),
        ('l_quantity', quantity * 100),
        ('l_extendedprice', quantity * part['p_retailprice'][partkey - 1]),
        ('l_discount', discount),
        ('l_shipdate', shipdate),
        ('l_returnflag', Encoded(flag, RETURN_FLAGS)),
        ('l_shipmode', Encoded(pick(rng, len(SHIP_MODES), total, _skew(spec, 'l_shipmode')), SHIP_MODES)),
    ])

def generate(spec):
    counts = sizes(spec.scale)
    rngs = streams(spec.seed, TABLES)

    part = _part(rngs['part'], counts['part'], spec)
    supplier = _supplier(rngs['supplier'], counts['supplier'], spec)
    orders = _orders(rngs['orders'], counts['orders'], spec)
    lineitem = _lineitem(rngs['lineitem'], orders, part, counts['supplier'], spec)

    return OrderedDict([
        ('orders', orders),
        ('lineitem', lineitem),
        ('part', part),
        ('supplier', supplier),
    ])
