#!/usr/bin/env python

"""
Benchmark query texts.

SSB flights keep their joins and filters but count rows instead of
summing revenue.
"""

from collections import OrderedDict

# Three tables each, one selection per table. The selections on orders
# and part combine columns the generator makes dependent, so
# independence-based estimates are off.
TPCH4 = OrderedDict([
    ('q1', """
        SELECT COUNT(*) FROM lineitem, orders, part
        WHERE l_orderkey = o_orderkey AND l_partkey = p_partkey
          AND l_quantity <= 40
          AND o_orderstatus = 'F' AND o_orderdate >= DATE '1995-03-01'
          AND p_size <= 25
    """),
    ('q2', """
        SELECT COUNT(*) FROM lineitem, orders, supplier
        WHERE l_orderkey = o_orderkey AND l_suppkey = s_suppkey
          AND l_discount >= 0.05
          AND o_orderdate BETWEEN DATE '1992-01-01' AND DATE '1992-03-31' AND o_orderstatus = 'F'
          AND s_nationkey = 7
    """),
    ('q3', """
        SELECT COUNT(*) FROM lineitem, part, supplier
        WHERE l_partkey = p_partkey AND l_suppkey = s_suppkey
          AND l_shipmode = 'MAIL'
          AND udf(p_size, p_retailprice) > 2000
          AND s_acctbal > 0
    """),
    ('q4', """
        SELECT COUNT(*) FROM lineitem, orders, part
        WHERE l_orderkey = o_orderkey AND l_partkey = p_partkey
          AND l_returnflag = 'R'
          AND (o_orderpriority = '1-URGENT' OR o_orderpriority = '2-HIGH')
          AND p_brand = 'Brand#23' AND p_size < 20
    """),
])

SSB = OrderedDict([
    ('2.1', """
        SELECT COUNT(*) FROM lineorder, dwdate, part, supplier
        WHERE lo_orderdate = d_datekey AND lo_partkey = p_partkey AND lo_suppkey = s_suppkey
          AND p_category = 'MFGR#12' AND s_region = 'AMERICA'
    """),
    ('2.2', """
        SELECT COUNT(*) FROM lineorder, dwdate, part, supplier
        WHERE lo_orderdate = d_datekey AND lo_partkey = p_partkey AND lo_suppkey = s_suppkey
          AND p_brand1 BETWEEN 'MFGR#2221' AND 'MFGR#2228' AND s_region = 'ASIA'
    """),
    ('2.3', """
        SELECT COUNT(*) FROM lineorder, dwdate, part, supplier
        WHERE lo_orderdate = d_datekey AND lo_partkey = p_partkey AND lo_suppkey = s_suppkey
          AND p_brand1 = 'MFGR#2221' AND s_region = 'EUROPE'
    """),
    ('3.1', """
        SELECT COUNT(*) FROM customer, lineorder, supplier, dwdate
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey AND lo_orderdate = d_datekey
          AND c_region = 'ASIA' AND s_region = 'ASIA'
          AND d_year >= 1992 AND d_year <= 1997
    """),
    ('3.2', """
        SELECT COUNT(*) FROM customer, lineorder, supplier, dwdate
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey AND lo_orderdate = d_datekey
          AND c_nation = 'UNITED STATES' AND s_nation = 'UNITED STATES'
          AND d_year >= 1992 AND d_year <= 1997
    """),
    ('3.3', """
        SELECT COUNT(*) FROM customer, lineorder, supplier, dwdate
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey AND lo_orderdate = d_datekey
          AND (c_city = 'UNITED KI1' OR c_city = 'UNITED KI5')
          AND (s_city = 'UNITED KI1' OR s_city = 'UNITED KI5')
          AND d_year >= 1992 AND d_year <= 1997
    """),
    ('3.4', """
        SELECT COUNT(*) FROM customer, lineorder, supplier, dwdate
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey AND lo_orderdate = d_datekey
          AND (c_city = 'UNITED KI1' OR c_city = 'UNITED KI5')
          AND (s_city = 'UNITED KI1' OR s_city = 'UNITED KI5')
          AND d_yearmonth = 'Dec1997'
    """),
    ('4.1', """
        SELECT COUNT(*) FROM dwdate, customer, supplier, part, lineorder
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey
          AND lo_partkey = p_partkey AND lo_orderdate = d_datekey
          AND c_region = 'AMERICA' AND s_region = 'AMERICA'
          AND (p_mfgr = 'MFGR#1' OR p_mfgr = 'MFGR#2')
    """),
    ('4.2', """
        SELECT COUNT(*) FROM dwdate, customer, supplier, part, lineorder
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey
          AND lo_partkey = p_partkey AND lo_orderdate = d_datekey
          AND c_region = 'AMERICA' AND s_region = 'AMERICA'
          AND (d_year = 1997 OR d_year = 1998)
          AND (p_mfgr = 'MFGR#1' OR p_mfgr = 'MFGR#2')
    """),
    ('4.3', """
        SELECT COUNT(*) FROM dwdate, customer, supplier, part, lineorder
        WHERE lo_custkey = c_custkey AND lo_suppkey = s_suppkey
          AND lo_partkey = p_partkey AND lo_orderdate = d_datekey
          AND c_region = 'AMERICA' AND s_nation = 'UNITED STATES'
          AND (d_year = 1997 OR d_year = 1998)
          AND p_category = 'MFGR#14'
    """),
])

# Overhead by scale: lineitem joined with one other table, one equality
OVERHEAD_SCALE = OrderedDict([
    ('orders', 'SELECT COUNT(*) FROM lineitem, orders WHERE l_orderkey = o_orderkey AND o_orderkey = {key}'),
    ('part', 'SELECT COUNT(*) FROM lineitem, part WHERE l_partkey = p_partkey AND p_partkey = {key}'),
    ('supplier', 'SELECT COUNT(*) FROM lineitem, supplier WHERE l_suppkey = s_suppkey AND s_suppkey = {key}'),
])

OVERHEAD_SELECTIVITY = 'SELECT COUNT(*) FROM lineitem, orders WHERE l_orderkey = o_orderkey AND o_orderkey < {u}'

# Attributes added one at a time. TEXT and DECIMAL come third and fourth.
OVERHEAD_ATTRIBUTES = 'SELECT COUNT(*) FROM lineitem, orders WHERE l_orderkey = o_orderkey'
ATTRIBUTE_TERMS = [
    ('o_custkey', 'o_custkey = {o_custkey}'),
    ('o_orderdate', "o_orderdate = DATE '{o_orderdate}'"),
    ('o_orderstatus', "o_orderstatus = '{o_orderstatus}'"),
    ('o_totalprice', 'o_totalprice = {o_totalprice}'),
]

EXAMPLE = """
    SELECT R.A, S.B, R.C, R.D FROM R, S, T
    WHERE R.A = S.A AND S.B = T.B
      AND R.B = 5 AND R.C BETWEEN (100, 400) AND (R.D = 50 OR R.D > 300)
      AND udf(R.B, R.D) > 305
"""

def udf(b, d):
    return b + d

# name -> (arity, function, vectorized)
UDFS = OrderedDict([
    ('udf', (2, udf, True)),
])

SUITE_QUERIES = {
    'tpch4': TPCH4,
    'ssb': SSB,
}
