#!/usr/bin/env python

"""
SQL frontend: parse a SQL subset, bind it against the catalog and lower
it to a relational algebra tree, then split the WHERE clause into a join
graph.

Supported: SELECT column list | * | COUNT(*), FROM with aliases, WHERE
with AND/OR/NOT, comparisons, BETWEEN and registered scalar functions.
"""

import logging
import threading

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Tuple

from ply import lex, yacc

import storage
from errors import (AmbiguousColumn, ArityMismatch, EngineError,
    KeyTypeMismatch, SqlSyntaxError, TypeMismatch, UnknownColumn,
    UnknownFunction, UnknownTable, UnparseableValue, UnsupportedConstruct,
    UnsupportedPredicate)

logger = logging.getLogger(__name__)

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1

FLIPPED = {'=': '=', '<>': '<>', '<': '>', '<=': '>=', '>': '<', '>=': '<='}

"""
Abstract syntax tree
"""
@dataclass(frozen=True)
class AstColumn:
    table: Optional[str]
    name: str
    span: tuple = field(default=None, compare=False, repr=False)

    def __str__(self):
        return '%s.%s' % (self.table, self.name) if self.table else self.name


@dataclass(frozen=True)
class AstStar:
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AstCountStar:
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AstLiteral:
    value: object
    kind: str
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AstCall:
    name: str
    args: tuple
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AstCompare:
    op: str
    left: object
    right: object
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AstBetween:
    operand: object
    lo: object
    hi: object
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AstAnd:
    items: tuple


@dataclass(frozen=True)
class AstOr:
    items: tuple


@dataclass(frozen=True)
class AstNot:
    item: object


@dataclass(frozen=True)
class AstTable:
    name: str
    alias: Optional[str] = None
    span: tuple = field(default=None, compare=False, repr=False)

    @property
    def binding(self):
        return self.alias or self.name


@dataclass(frozen=True)
class AstQuery:
    projections: tuple
    tables: tuple
    where: object = None
    span: tuple = field(default=None, compare=False, repr=False)


"""
Lexer
"""
reserved = {
    'select': 'SELECT',
    'from': 'FROM',
    'where': 'WHERE',
    'and': 'AND',
    'or': 'OR',
    'not': 'NOT',
    'between': 'BETWEEN',
    'count': 'COUNT',
    'as': 'AS',
    'date': 'DATE',
}

# Recognized so they fail with a name instead of a bare syntax error
unsupported = {
    'group': 'GROUP BY',
    'order': 'ORDER BY',
    'having': 'HAVING',
    'limit': 'LIMIT',
    'offset': 'OFFSET',
    'join': 'JOIN',
    'inner': 'JOIN',
    'left': 'OUTER JOIN',
    'right': 'OUTER JOIN',
    'outer': 'OUTER JOIN',
    'full': 'OUTER JOIN',
    'union': 'UNION',
    'distinct': 'DISTINCT',
    'in': 'IN',
    'like': 'LIKE',
    'is': 'IS NULL',
    'null': 'NULL',
    'exists': 'EXISTS',
    'case': 'CASE',
    'with': 'WITH',
    'insert': 'INSERT',
    'update': 'UPDATE',
    'delete': 'DELETE',
    'create': 'CREATE',
}

tokens = [
    'IDENT', 'NUMBER', 'STRING', 'UNSUPPORTED',
    'COMMA', 'DOT', 'LPAREN', 'RPAREN', 'STAR', 'SEMI', 'MINUS',
    'EQ', 'NE', 'LE', 'GE', 'LT', 'GT',
] + sorted(set(reserved.values()))

t_COMMA = r','
t_DOT = r'\.'
t_LPAREN = r'\('
t_RPAREN = r'\)'
t_STAR = r'\*'
t_SEMI = r';'
t_MINUS = r'-'
t_EQ = r'='
t_NE = r'<>|!='
t_LE = r'<='
t_GE = r'>='
t_LT = r'<'
t_GT = r'>'

t_ignore = ' \t\r'
t_ignore_COMMENT = r'--[^\n]*'


def t_NUMBER(t):
    r'\d+\.\d*|\.\d+|\d+'
    t.value = Decimal(t.value) if '.' in t.value else int(t.value)
    return t

def t_STRING(t):
    r"'([^']|'')*'"
    t.value = t.value[1:-1].replace("''", "'")
    return t

def t_IDENT(t):
    r'[A-Za-z_][A-Za-z0-9_]*'
    word = t.value.lower()

    if word in reserved:
        t.type = reserved[word]
    elif word in unsupported:
        t.type = 'UNSUPPORTED'

    return t

def t_newline(t):
    r'\n+'
    t.lexer.lineno += len(t.value)

def t_error(t):
    line, column = _position(t.lexer.lexdata, t.lexpos)
    raise SqlSyntaxError('Illegal character %r' % t.value[0], line, column)


def _position(text, lexpos):
    line = text.count('\n', 0, lexpos) + 1
    column = lexpos - (text.rfind('\n', 0, lexpos) + 1) + 1

    return line, column

def _span(p, n):
    return _position(p.lexer.lexdata, p.lexpos(n))


"""
Grammar
"""
precedence = (
    ('left', 'OR'),
    ('left', 'AND'),
    ('right', 'NOT'),
)

start = 'query'


def p_query(p):
    '''query : SELECT select_list FROM table_list where_clause opt_semi'''
    p[0] = AstQuery(tuple(p[2]), tuple(p[4]), p[5], _span(p, 1))

def p_opt_semi(p):
    '''opt_semi : SEMI
                | empty'''

def p_empty(p):
    '''empty :'''

def p_select_star(p):
    '''select_list : STAR'''
    p[0] = [AstStar(_span(p, 1))]

def p_select_count(p):
    '''select_list : COUNT LPAREN STAR RPAREN'''
    p[0] = [AstCountStar(_span(p, 1))]

def p_select_columns(p):
    '''select_list : column_list'''
    p[0] = p[1]

def p_column_list(p):
    '''column_list : column_ref
                   | column_list COMMA column_ref'''
    p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]

def p_column_ref(p):
    '''column_ref : IDENT
                  | IDENT DOT IDENT'''
    if len(p) == 2:
        p[0] = AstColumn(None, p[1], _span(p, 1))
    else:
        p[0] = AstColumn(p[1], p[3], _span(p, 1))

def p_table_list(p):
    '''table_list : table_ref
                  | table_list COMMA table_ref'''
    p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]

def p_table_ref(p):
    '''table_ref : IDENT
                 | IDENT IDENT
                 | IDENT AS IDENT'''
    if len(p) == 2:
        p[0] = AstTable(p[1], None, _span(p, 1))
    else:
        p[0] = AstTable(p[1], p[len(p) - 1], _span(p, 1))

def p_where_clause(p):
    '''where_clause : WHERE expr
                    | empty'''
    p[0] = p[2] if len(p) == 3 else None

def p_expr_or(p):
    '''expr : expr OR expr'''
    p[0] = AstOr(_flatten(AstOr, p[1], p[3]))

def p_expr_and(p):
    '''expr : expr AND expr'''
    p[0] = AstAnd(_flatten(AstAnd, p[1], p[3]))

def p_expr_not(p):
    '''expr : NOT expr'''
    p[0] = AstNot(p[2])

def p_expr_group(p):
    '''expr : LPAREN expr RPAREN'''
    p[0] = p[2]

def p_expr_predicate(p):
    '''expr : predicate'''
    p[0] = p[1]

def p_predicate_compare(p):
    '''predicate : operand comparison operand'''
    p[0] = AstCompare(p[2], p[1], p[3], getattr(p[1], 'span', None))

def p_predicate_between(p):
    '''predicate : operand BETWEEN operand AND operand
                 | operand BETWEEN LPAREN operand COMMA operand RPAREN'''
    if len(p) == 6:
        p[0] = AstBetween(p[1], p[3], p[5], getattr(p[1], 'span', None))
    else:
        p[0] = AstBetween(p[1], p[4], p[6], getattr(p[1], 'span', None))

def p_comparison(p):
    '''comparison : EQ
                  | NE
                  | LT
                  | LE
                  | GT
                  | GE'''
    p[0] = '<>' if p[1] == '!=' else p[1]

def p_operand_column(p):
    '''operand : column_ref'''
    p[0] = p[1]

def p_operand_call(p):
    '''operand : IDENT LPAREN arg_list RPAREN'''
    p[0] = AstCall(p[1].lower(), tuple(p[3]), _span(p, 1))

def p_arg_list(p):
    '''arg_list : column_ref
                | arg_list COMMA column_ref'''
    p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]

def p_operand_number(p):
    '''operand : NUMBER
               | MINUS NUMBER'''
    if len(p) == 2:
        value = p[1]
    else:
        value = -p[2]

    p[0] = AstLiteral(value, 'decimal' if isinstance(value, Decimal) else 'int', _span(p, 1))

def p_operand_string(p):
    '''operand : STRING'''
    p[0] = AstLiteral(p[1], 'string', _span(p, 1))

def p_operand_date(p):
    '''operand : DATE STRING'''
    try:
        value = storage.days_to_date(storage.date_to_days(p[2]))
    except UnparseableValue:
        line, column = _span(p, 2)
        raise SqlSyntaxError('Invalid date literal %r' % p[2], line, column)

    p[0] = AstLiteral(value, 'date', _span(p, 1))

def p_error(t):
    if t is None:
        raise SqlSyntaxError('Unexpected end of input')

    line, column = _position(t.lexer.lexdata, t.lexpos)

    if t.type == 'UNSUPPORTED':
        raise UnsupportedConstruct(unsupported[t.value.lower()], line, column)
    elif t.type == 'SELECT':
        raise UnsupportedConstruct('subquery', line, column)
    elif t.type == 'LPAREN':
        following = t.lexer.token()

        if following is not None and following.type == 'SELECT':
            raise UnsupportedConstruct('subquery', line, column)

    raise SqlSyntaxError('Unexpected %r' % t.value, line, column)


def _flatten(cls, left, right):
    items = []

    for side in (left, right):
        if isinstance(side, cls):
            items.extend(side.items)
        else:
            items.append(side)

    return tuple(items)


_lexer = lex.lex(errorlog=lex.NullLogger())
_parser = yacc.yacc(debug=False, write_tables=False, errorlog=yacc.NullLogger())
_parser_lock = threading.Lock()


def parse(sql):
    """
    Parse one statement into an AstQuery.
    """
    lexer = _lexer.clone()
    lexer.lineno = 1

    with _parser_lock:
        return _parser.parse(sql, lexer=lexer)


"""
Pretty printing
"""
def _literal_sql(literal):
    if literal.kind == 'string':
        return "'%s'" % literal.value.replace("'", "''")
    elif literal.kind == 'date':
        return "DATE '%s'" % literal.value.isoformat()

    return str(literal.value)

def _ast_sql(node, parent=None):
    if isinstance(node, AstColumn):
        return str(node)
    elif isinstance(node, AstLiteral):
        return _literal_sql(node)
    elif isinstance(node, AstCall):
        return '%s(%s)' % (node.name, ', '.join(_ast_sql(a) for a in node.args))
    elif isinstance(node, AstCompare):
        return '%s %s %s' % (_ast_sql(node.left), node.op, _ast_sql(node.right))
    elif isinstance(node, AstBetween):
        return '%s BETWEEN %s AND %s' % (_ast_sql(node.operand), _ast_sql(node.lo), _ast_sql(node.hi))
    elif isinstance(node, AstNot):
        return 'NOT %s' % _ast_sql(node.item, node)
    elif isinstance(node, (AstAnd, AstOr)):
        joiner = ' AND ' if isinstance(node, AstAnd) else ' OR '
        text = joiner.join(_ast_sql(item, node) for item in node.items)

        if parent is not None:
            text = '(%s)' % text

        return text

    raise TypeError('Cannot print %r' % (node,))

def to_sql(query):
    """
    Render an AstQuery back to SQL that parses to the same tree.
    """
    items = []

    for item in query.projections:
        if isinstance(item, AstStar):
            items.append('*')
        elif isinstance(item, AstCountStar):
            items.append('COUNT(*)')
        else:
            items.append(str(item))

    tables = ['%s %s' % (t.name, t.alias) if t.alias else t.name for t in query.tables]
    sql = 'SELECT %s FROM %s' % (', '.join(items), ', '.join(tables))

    if query.where is not None:
        sql += ' WHERE %s' % _ast_sql(query.where)

    return sql


"""
Bound predicates

Atoms reference columns through ColumnId (table binding + column name).
Constants are stored already encoded for the column: scaled integers
for DECIMAL, days for DATE, python strings for TEXT.
"""
@dataclass(frozen=True)
class ColumnId:
    table: str
    name: str
    kind: storage.Kind = field(compare=False, hash=False, default=None)

    def __str__(self):
        return '%s.%s' % (self.table, self.name)


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Equality:
    column: ColumnId
    value: object


@dataclass(frozen=True)
class Range:
    """
    lo <= column <= hi
    """
    column: ColumnId
    lo: object
    hi: object


@dataclass(frozen=True)
class Comparison:
    column: ColumnId
    op: str
    value: object


@dataclass(frozen=True)
class FnCall:
    name: str
    columns: Tuple[ColumnId, ...]
    op: str
    value: float


@dataclass(frozen=True)
class ColumnCompare:
    left: ColumnId
    op: str
    right: ColumnId


@dataclass(frozen=True)
class And:
    terms: tuple


@dataclass(frozen=True)
class Or:
    terms: tuple


@dataclass(frozen=True)
class Not:
    term: object


TRUE = Const(True)
FALSE = Const(False)

ATOMS = (Const, Equality, Range, Comparison, FnCall, ColumnCompare)


def columns_of(pred):
    """
    Every ColumnId a predicate references, in first-seen order.
    """
    seen = []

    def visit(node):
        if isinstance(node, (Equality, Range, Comparison)):
            found = [node.column]
        elif isinstance(node, FnCall):
            found = list(node.columns)
        elif isinstance(node, ColumnCompare):
            found = [node.left, node.right]
        elif isinstance(node, (And, Or)):
            found = []

            for term in node.terms:
                visit(term)
        elif isinstance(node, Not):
            found = []
            visit(node.term)
        else:
            found = []

        for column in found:
            if column not in seen:
                seen.append(column)

    if pred is not None:
        visit(pred)

    return seen

def tables_of(pred):
    return sorted(set(c.table for c in columns_of(pred)))

def atoms_of(pred):
    if isinstance(pred, (And, Or)):
        return [a for term in pred.terms for a in atoms_of(term)]
    elif isinstance(pred, Not):
        return atoms_of(pred.term)
    elif pred is None:
        return []

    return [pred]

def conjuncts(pred):
    if pred is None:
        return []
    elif isinstance(pred, And):
        return [c for term in pred.terms for c in conjuncts(term)]

    return [pred]

def conjoin(preds):
    """
    AND a list of predicates together, folding constants.
    """
    return simplify(And(tuple(preds))) if preds else None

def simplify(pred):
    """
    Fold TRUE/FALSE through the connectives and flatten nested AND/OR.
    """
    if isinstance(pred, (And, Or)):
        absorbing = FALSE if isinstance(pred, And) else TRUE
        neutral = TRUE if isinstance(pred, And) else FALSE
        terms = []

        for term in pred.terms:
            term = simplify(term)

            if term == absorbing:
                return absorbing
            elif term == neutral:
                continue
            elif type(term) is type(pred):
                terms.extend(term.terms)
            else:
                terms.append(term)

        if not terms:
            return neutral
        elif len(terms) == 1:
            return terms[0]

        return type(pred)(tuple(terms))
    elif isinstance(pred, Not):
        term = simplify(pred.term)

        if isinstance(term, Const):
            return Const(not term.value)

        return Not(term)

    return pred

def rebind(pred, table):
    """
    Point every column of a single-table predicate at another binding.
    """
    def column(c):
        return ColumnId(table, c.name, c.kind)

    if isinstance(pred, Equality):
        return Equality(column(pred.column), pred.value)
    elif isinstance(pred, Range):
        return Range(column(pred.column), pred.lo, pred.hi)
    elif isinstance(pred, Comparison):
        return Comparison(column(pred.column), pred.op, pred.value)
    elif isinstance(pred, FnCall):
        return FnCall(pred.name, tuple(column(c) for c in pred.columns), pred.op, pred.value)
    elif isinstance(pred, ColumnCompare):
        return ColumnCompare(column(pred.left), pred.op, column(pred.right))
    elif isinstance(pred, (And, Or)):
        return type(pred)(tuple(rebind(t, table) for t in pred.terms))
    elif isinstance(pred, Not):
        return Not(rebind(pred.term, table))

    return pred

def format_constant(kind, value):
    if kind is None:
        return repr(value)
    elif kind.name == 'TEXT':
        return "'%s'" % value.replace("'", "''")
    elif kind.name == 'DATE':
        return "DATE '%s'" % storage.days_to_date(value).isoformat()
    elif kind.name == 'DECIMAL':
        return str(Decimal(value).scaleb(-kind.scale))

    return str(value)

def predicate_sql(pred, qualify=True):
    """
    SQL text of a bound predicate, for EXPLAIN and sub-query logging.
    """
    def name(c):
        return str(c) if qualify else c.name

    def render(node, nested):
        if isinstance(node, Const):
            return 'TRUE' if node.value else 'FALSE'
        elif isinstance(node, Equality):
            return '%s = %s' % (name(node.column), format_constant(node.column.kind, node.value))
        elif isinstance(node, Range):
            return '%s BETWEEN %s AND %s' % (name(node.column),
                format_constant(node.column.kind, node.lo), format_constant(node.column.kind, node.hi))
        elif isinstance(node, Comparison):
            return '%s %s %s' % (name(node.column), node.op, format_constant(node.column.kind, node.value))
        elif isinstance(node, FnCall):
            return '%s(%s) %s %s' % (node.name, ', '.join(name(c) for c in node.columns), node.op, node.value)
        elif isinstance(node, ColumnCompare):
            return '%s %s %s' % (name(node.left), node.op, name(node.right))
        elif isinstance(node, Not):
            return 'NOT %s' % render(node.term, True)

        joiner = ' AND ' if isinstance(node, And) else ' OR '
        text = joiner.join(render(t, True) for t in node.terms)

        return '(%s)' % text if nested else text

    return render(pred, False) if pred is not None else 'TRUE'


"""
Relational algebra
"""
class RaNode(object):
    """
    Base class for relational algebra nodes. Every node carries its
    output schema: a list of ColumnIds.
    """
    schema = ()

    def children(self):
        return ()

    def derive_schema(self):
        raise NotImplementedError()


@dataclass(eq=False)
class Scan(RaNode):
    table: str
    alias: str
    schema: list = None
    handle: object = None

    def derive_schema(self):
        return self.schema


@dataclass(eq=False)
class Select(RaNode):
    child: RaNode
    predicate: object
    schema: list = None

    def __post_init__(self):
        if self.schema is None:
            self.schema = self.derive_schema()

    def children(self):
        return (self.child,)

    def derive_schema(self):
        return list(self.child.schema)


@dataclass(eq=False)
class Project(RaNode):
    child: RaNode
    columns: list
    schema: list = None

    def __post_init__(self):
        if self.schema is None:
            self.schema = self.derive_schema()

    def children(self):
        return (self.child,)

    def derive_schema(self):
        return list(self.columns)


@dataclass(eq=False)
class HashJoin(RaNode):
    left: RaNode
    right: RaNode
    pairs: tuple = ()
    schema: list = None

    def __post_init__(self):
        if self.schema is None:
            self.schema = self.derive_schema()

    def children(self):
        return (self.left, self.right)

    def derive_schema(self):
        return list(self.left.schema) + list(self.right.schema)


@dataclass(eq=False)
class Aggregate(RaNode):
    child: RaNode
    function: str = 'COUNT_STAR'
    schema: list = None

    def __post_init__(self):
        if self.schema is None:
            self.schema = self.derive_schema()

    def children(self):
        return (self.child,)

    def derive_schema(self):
        return [ColumnId('', 'count', storage.INT64)]


def check_schema(node):
    """
    Verify bottom-up that every schema derives from the children and that
    predicates and projections only use columns in scope.
    """
    for child in node.children():
        check_schema(child)

    if [str(c) for c in node.schema] != [str(c) for c in node.derive_schema()]:
        raise EngineError('Schema of %s does not derive from its children' % type(node).__name__, phase='analyze')

    scope = set(str(c) for child in node.children() for c in child.schema)

    if isinstance(node, Select):
        used = columns_of(node.predicate)
    elif isinstance(node, Project):
        used = node.columns
    elif isinstance(node, HashJoin):
        used = [c for pair in node.pairs for c in pair]
    else:
        used = []

    for column in used:
        if str(column) not in scope:
            raise UnknownColumn(str(column))

    return True

def scans_of(node):
    if isinstance(node, Scan):
        return [node]

    return [s for child in node.children() for s in scans_of(child)]

def ra_sql(node):
    """
    SQL text for simple Aggregate/Select/Project/Scan trees.
    """
    select = None
    where = None
    table = None

    while node is not None:
        if isinstance(node, Aggregate):
            select = 'COUNT(*)'
            node = node.child
        elif isinstance(node, Select):
            where = predicate_sql(node.predicate, qualify=False)
            node = node.child
        elif isinstance(node, Project):
            if select is None:
                select = ', '.join(c.name for c in node.columns)
            node = node.child
        elif isinstance(node, Scan):
            table = node.table
            node = None
        else:
            return repr(node)

    sql = 'SELECT %s FROM %s' % (select or '*', table)

    return sql + ' WHERE %s' % where if where else sql


"""
Analysis
"""
def _encode_constant(column, op, literal):
    """
    Encode a literal for comparison against a column.

    Returns (op, value), or a Const when the comparison folds.
    Constants that fall between representable values (1.005 against a
    DECIMAL(15,2)) round towards the comparison so results stay exact.
    """
    kind = column.kind

    if kind.name == 'TEXT':
        if literal.kind != 'string':
            raise TypeMismatch('Cannot compare TEXT column %s with %s' % (column, _literal_sql(literal)))

        return op, literal.value
    elif kind.name == 'DATE':
        if literal.kind not in ('date', 'string'):
            raise TypeMismatch('Cannot compare DATE column %s with %s' % (column, _literal_sql(literal)))

        try:
            return op, storage.date_to_days(literal.value)
        except UnparseableValue:
            raise TypeMismatch('%s is not a date' % _literal_sql(literal))

    if literal.kind not in ('int', 'decimal'):
        raise TypeMismatch('Cannot compare %s column %s with %s' % (kind, column, _literal_sql(literal)))

    scaled = Decimal(literal.value).scaleb(kind.scale)
    floor = int(scaled.to_integral_value(rounding='ROUND_FLOOR'))
    ceil = int(scaled.to_integral_value(rounding='ROUND_CEILING'))

    if floor == ceil:
        return op, floor

    if op == '=':
        return FALSE
    elif op == '<>':
        return ('BETWEEN', (INT64_MIN, INT64_MAX))
    elif op in ('<', '<='):
        return '<=', floor

    return '>=', ceil

def _atom(column, op, encoded):
    if isinstance(encoded, Const):
        return encoded

    op, value = encoded

    if op == 'BETWEEN':
        return Range(column, value[0], value[1])
    elif op == '=':
        return Equality(column, value)

    return Comparison(column, op, value)

def _fold_literals(op, left, right):
    a, b = left.value, right.value

    if (left.kind in ('int', 'decimal')) != (right.kind in ('int', 'decimal')):
        raise TypeMismatch('Cannot compare %s with %s' % (_literal_sql(left), _literal_sql(right)))

    result = {
        '=': a == b, '<>': a != b, '<': a < b, '<=': a <= b, '>': a > b, '>=': a >= b,
    }[op]

    return Const(bool(result))


class Analyzer(object):
    """
    Binds one AstQuery against a catalog.
    """
    def __init__(self, catalog):
        self.catalog = catalog
        self.bindings = []
        self.tables = {}

    def bind_tables(self, ast_tables):
        for t in ast_tables:
            table = self.catalog.database.get(t.name)

            if t.binding in self.tables:
                raise EngineError('Table name "%s" is used twice in FROM' % t.binding, phase='analyze')

            self.bindings.append(t.binding)
            self.tables[t.binding] = table

    def column(self, ref):
        if ref.table is not None:
            if ref.table not in self.tables:
                raise UnknownTable(ref.table)

            table = self.tables[ref.table]

            if not table.has_column(ref.name):
                raise UnknownColumn(str(ref))

            return ColumnId(ref.table, ref.name, table.column(ref.name).kind)

        matches = [b for b in self.bindings if self.tables[b].has_column(ref.name)]

        if not matches:
            raise UnknownColumn(ref.name)
        elif len(matches) > 1:
            raise AmbiguousColumn(ref.name, matches)

        return ColumnId(matches[0], ref.name, self.tables[matches[0]].column(ref.name).kind)

    def call(self, node):
        udf = self.catalog.udfs.get(node.name)

        if udf is None:
            raise UnknownFunction(node.name)

        if len(node.args) != udf.arity:
            raise ArityMismatch(udf.arity, len(node.args), 'call to %s' % node.name)

        columns = tuple(self.column(a) for a in node.args)

        for c in columns:
            if not c.kind.is_numeric:
                raise TypeMismatch('Function %s takes numeric arguments, %s is %s' % (node.name, c, c.kind))

        return columns

    def compare(self, node):
        op, left, right = node.op, node.left, node.right

        if isinstance(left, AstLiteral) and not isinstance(right, AstLiteral):
            op, left, right = FLIPPED[op], right, left

        if isinstance(left, AstLiteral):
            return _fold_literals(op, left, right)

        if isinstance(left, AstColumn) and isinstance(right, AstColumn):
            a, b = self.column(left), self.column(right)

            if a.kind != b.kind:
                raise TypeMismatch('Cannot compare %s (%s) with %s (%s)' % (a, a.kind, b, b.kind))

            return ColumnCompare(a, op, b)

        if isinstance(left, AstCall) and isinstance(right, AstLiteral):
            if right.kind not in ('int', 'decimal'):
                raise TypeMismatch('Function %s returns a number, compared with %s' % (left.name, _literal_sql(right)))

            return FnCall(left.name, self.call(left), op, float(right.value))

        if isinstance(left, AstColumn) and isinstance(right, AstLiteral):
            column = self.column(left)
            return _atom(column, op, _encode_constant(column, op, right))

        raise UnsupportedPredicate('Unsupported comparison %s' % _ast_sql(node))

    def between(self, node):
        if not isinstance(node.operand, AstColumn) or not isinstance(node.lo, AstLiteral) or not isinstance(node.hi, AstLiteral):
            raise UnsupportedPredicate('BETWEEN needs a column and two constants: %s' % _ast_sql(node))

        column = self.column(node.operand)
        lo = _encode_constant(column, '>=', node.lo)
        hi = _encode_constant(column, '<=', node.hi)

        if isinstance(lo, Const) or isinstance(hi, Const):
            return FALSE

        if lo[1] > hi[1]:
            return FALSE

        return Range(column, lo[1], hi[1])

    def predicate(self, node):
        if isinstance(node, AstAnd):
            return And(tuple(self.predicate(i) for i in node.items))
        elif isinstance(node, AstOr):
            return Or(tuple(self.predicate(i) for i in node.items))
        elif isinstance(node, AstNot):
            return Not(self.predicate(node.item))
        elif isinstance(node, AstCompare):
            return self.compare(node)
        elif isinstance(node, AstBetween):
            return self.between(node)

        raise UnsupportedPredicate('Unsupported predicate %r' % (node,))

    def scan(self, binding):
        table = self.tables[binding]
        schema = [ColumnId(binding, c.name, c.kind) for c in table.columns]

        return Scan(table.name, binding, schema)


def analyze(ast, catalog):
    """
    Lower an AstQuery to the canonical RA tree: scans joined left-deep in
    FROM order, the WHERE clause as one Select, then Project or Aggregate.
    """
    analyzer = Analyzer(catalog)
    analyzer.bind_tables(ast.tables)

    node = analyzer.scan(analyzer.bindings[0])

    for binding in analyzer.bindings[1:]:
        node = HashJoin(node, analyzer.scan(binding))

    if ast.where is not None:
        node = Select(node, simplify(analyzer.predicate(ast.where)))

    items = ast.projections

    if any(isinstance(i, AstCountStar) for i in items):
        if len(items) > 1:
            raise UnsupportedConstruct('COUNT(*) mixed with columns')

        node = Aggregate(node)
    elif any(isinstance(i, AstStar) for i in items):
        node = Project(node, list(node.schema))
    else:
        node = Project(node, [analyzer.column(i) for i in items])

    check_schema(node)

    return node


"""
Join graph
"""
@dataclass(frozen=True)
class JoinEdge:
    left: ColumnId
    right: ColumnId

    def touches(self, table):
        return table in (self.left.table, self.right.table)

    def other(self, table):
        return self.right.table if self.left.table == table else self.left.table

    def oriented(self, table):
        """
        (column of the other side, column of table)
        """
        if self.right.table == table:
            return self.left, self.right

        return self.right, self.left

    def __str__(self):
        return '%s = %s' % (self.left, self.right)


@dataclass
class JoinGraph:
    nodes: list
    tables: dict
    edges: list
    residuals: dict
    projection: Optional[list] = None
    schemas: dict = None

    def neighbors(self, table):
        return sorted(set(e.other(table) for e in self.edges if e.touches(table)))

    def is_connected(self):
        if not self.nodes:
            return True

        seen = {self.nodes[0]}
        frontier = [self.nodes[0]]

        while frontier:
            for n in self.neighbors(frontier.pop()):
                if n not in seen:
                    seen.add(n)
                    frontier.append(n)

        return len(seen) == len(self.nodes)

    def needed_columns(self, table):
        """
        Columns of table required above its scan: output columns and
        join keys.
        """
        needed = []

        for c in self.projection or []:
            if c.table == table and c.name not in needed:
                needed.append(c.name)

        for edge in self.edges:
            for c in (edge.left, edge.right):
                if c.table == table and c.name not in needed:
                    needed.append(c.name)

        return needed


def build_join_graph(ra):
    """
    Classify every WHERE conjunct as a join edge or a single-table
    residual predicate.
    """
    node = ra
    projection = None

    if isinstance(node, Aggregate):
        node = node.child
    elif isinstance(node, Project):
        projection = list(node.columns)
        node = node.child

    predicate = None

    if isinstance(node, Select):
        predicate = node.predicate
        node = node.child

    scans = scans_of(node)
    nodes = [s.alias for s in scans]
    residuals = dict((n, []) for n in nodes)
    edges = []

    for conjunct in conjuncts(predicate):
        tables = tables_of(conjunct)

        if not tables:
            # Folded constants: TRUE drops out, FALSE empties the result
            if conjunct != TRUE:
                residuals[nodes[0]].append(conjunct)
        elif len(tables) == 1:
            residuals[tables[0]].append(conjunct)
        elif isinstance(conjunct, ColumnCompare) and conjunct.op == '=' and len(tables) == 2:
            if conjunct.left.kind != conjunct.right.kind:
                raise KeyTypeMismatch('Join keys %s and %s differ in type' % (conjunct.left, conjunct.right))

            edges.append(JoinEdge(conjunct.left, conjunct.right))
        else:
            raise UnsupportedPredicate('Predicate spans tables %s and is not an equi-join: %s'
                % (', '.join(tables), predicate_sql(conjunct)))

    return JoinGraph(
        nodes=nodes,
        tables=dict((s.alias, s.table) for s in scans),
        edges=edges,
        residuals=dict((n, conjoin(preds)) for n, preds in residuals.items()),
        projection=projection,
        schemas=dict((s.alias, s.schema) for s in scans),
    )


def register_udf(catalog, name, arity, fn, vectorized=False):
    """
    Make a scalar function callable from SQL predicates.
    """
    return catalog.register_udf(name, arity, fn, vectorized)
