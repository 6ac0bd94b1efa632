#!/usr/bin/env python

"""
Columnar in-memory tables.

Columns are dense int64 vectors plus a null mask. DECIMAL values are
stored as integers scaled by 10**s, DATE values as days since
1970-01-01 and TEXT values as codes into a per-column dictionary.
Tables never change once built: appending rows produces a new table.
"""

import csv
import datetime
import logging
import re
import threading

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from typing import Optional, Tuple

import numpy as np
from dateutil.parser import isoparse

from errors import (ArityMismatch, CsvError, DeadHandle, DuplicateColumn, DuplicateTable,
    EmptySchema, EngineError, LengthMismatch, TypeMismatch, UnknownColumn,
    UnknownTable, UnparseableValue, UsageError)

logger = logging.getLogger(__name__)

EPOCH = datetime.date(1970, 1, 1)
NULL_TOKEN = '\\N'

"""
Column kinds
"""
@dataclass(frozen=True)
class Kind:
    """
    A column type. Only DECIMAL carries precision and scale.
    """
    name: str
    precision: int = 0
    scale: int = 0

    @property
    def is_numeric(self):
        return self.name in ('INT64', 'DECIMAL', 'DATE')

    def __str__(self):
        if self.name == 'DECIMAL':
            return 'DECIMAL(%i,%i)' % (self.precision, self.scale)

        return self.name


INT64 = Kind('INT64')
DATE = Kind('DATE')
TEXT = Kind('TEXT')


def decimal(precision, scale):
    if scale < 0 or scale > precision or precision > 18:
        raise UsageError('Invalid DECIMAL(%s,%s)' % (precision, scale))

    return Kind('DECIMAL', precision, scale)


_KIND_RE = re.compile(r'^\s*(INT64|INT|INTEGER|BIGINT|DATE|TEXT|VARCHAR|DECIMAL\s*\(\s*(\d+)\s*,\s*(\d+)\s*\))\s*$', re.I)

def parse_kind(text):
    """
    Parse a kind name such as "INT64" or "DECIMAL(15,2)".
    """
    match = _KIND_RE.match(text)

    if not match:
        raise UsageError('Unknown column kind "%s"' % text)

    name = match.group(1).upper()

    if name.startswith('DECIMAL'):
        return decimal(int(match.group(2)), int(match.group(3)))
    elif name in ('INT', 'INTEGER', 'BIGINT', 'INT64'):
        return INT64
    elif name == 'VARCHAR':
        return TEXT

    return Kind(name)

def parse_schema(spec):
    """
    Parse "o_orderkey:INT64,o_totalprice:DECIMAL(15,2)" into a schema.
    """
    schema = []

    # Commas inside DECIMAL(p,s) are not separators
    for part in re.split(r',(?![^(]*\))', spec):
        part = part.strip()

        if not part:
            continue

        if ':' not in part:
            raise UsageError('Schema entries look like name:KIND, got "%s"' % part)

        name, kind = part.split(':', 1)
        schema.append((name.strip(), parse_kind(kind)))

    return schema

def date_to_days(value):
    """
    Convert a date or an ISO date string to days since the epoch.
    """
    if isinstance(value, datetime.datetime):
        value = value.date()

    if not isinstance(value, datetime.date):
        try:
            value = isoparse(str(value).strip()).date()
        except (ValueError, OverflowError):
            raise UnparseableValue('"%s" is not a YYYY-MM-DD date' % value)

    return (value - EPOCH).days

def days_to_date(days):
    return EPOCH + datetime.timedelta(days=int(days))

def to_scaled(value, scale):
    """
    Scale a decimal value to an integer at the given scale. Returns None
    when the value has more fractional digits than the scale can hold.
    """
    scaled = Decimal(value).scaleb(scale)

    if scaled != scaled.to_integral_value():
        return None

    return int(scaled)


"""
Dictionary encoding
"""
class Dictionary(object):
    """
    Bijection between distinct strings and codes 0..D-1. Append only, so
    codes handed out stay valid for every table sharing the dictionary.
    """
    def __init__(self, strings=None):
        self.strings = []
        self.codes = {}

        for s in strings or []:
            self.encode(s)

    def encode(self, s):
        code = self.codes.get(s)

        if code is None:
            code = len(self.strings)
            self.codes[s] = code
            self.strings.append(s)

        return code

    def code_of(self, s, default=None):
        return self.codes.get(s, default)

    def decode(self, code):
        return self.strings[code]

    def decode_all(self, codes):
        return np.array(self.strings, dtype=object)[codes]

    def batch(self):
        return DictionaryBatch(self)

    def __len__(self):
        return len(self.strings)


class DictionaryBatch(object):
    """
    Codes for one append. New strings get the codes they will have once
    committed but stay out of the shared dictionary until commit().
    """
    def __init__(self, dictionary):
        self.dictionary = dictionary
        self.pending = {}
        self.strings = []

    def encode(self, s):
        code = self.dictionary.code_of(s)

        if code is None:
            code = self.pending.get(s)

        if code is None:
            code = len(self.dictionary) + len(self.strings)
            self.pending[s] = code
            self.strings.append(s)

        return code

    def commit(self):
        for s in self.strings:
            self.dictionary.encode(s)

        self.pending = {}
        self.strings = []


"""
Columns and tables
"""
@dataclass(frozen=True, eq=False)
class Column:
    name: str
    kind: Kind
    values: np.ndarray
    null_mask: np.ndarray
    dictionary: Optional[Dictionary] = None

    def __len__(self):
        return len(self.values)

    @property
    def has_nulls(self):
        return bool(self.null_mask.any())

    def decode(self, i):
        """
        Python value of row i (None for NULL).
        """
        if self.null_mask[i]:
            return None

        v = int(self.values[i])

        if self.kind.name == 'DECIMAL':
            return Decimal(v).scaleb(-self.kind.scale)
        elif self.kind.name == 'DATE':
            return days_to_date(v)
        elif self.kind.name == 'TEXT':
            return self.dictionary.decode(v)

        return v

    def numeric(self, indices=None):
        """
        Float view used by scalar functions: DECIMAL scaled back down.
        """
        values = self.values if indices is None else self.values[indices]

        if self.kind.name == 'DECIMAL':
            return values / float(10 ** self.kind.scale)

        return values.astype(np.float64)

    def take(self, indices, name=None):
        """
        Gather rows into a new column. TEXT columns keep the source
        dictionary by reference.
        """
        return make_column(name or self.name, self.kind, self.values[indices],
            self.null_mask[indices], self.dictionary)


def make_column(name, kind, values, null_mask=None, dictionary=None):
    values = np.ascontiguousarray(values, dtype=np.int64)

    if null_mask is None:
        null_mask = np.zeros(len(values), dtype=bool)
    else:
        null_mask = np.ascontiguousarray(null_mask, dtype=bool)

    if kind.name == 'TEXT' and dictionary is None:
        dictionary = Dictionary()

    values.flags.writeable = False
    null_mask.flags.writeable = False

    return Column(name, kind, values, null_mask, dictionary)


@dataclass(frozen=True, eq=False)
class ColumnTable:
    name: str
    columns: Tuple[Column, ...]
    row_count: int
    is_temporary: bool = False
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}

        for i, column in enumerate(self.columns):
            if column.name in index:
                raise DuplicateColumn(self.name, column.name)

            if len(column) != self.row_count:
                raise LengthMismatch([len(c) for c in self.columns])

            index[column.name] = i

        object.__setattr__(self, '_index', index)

    @property
    def schema(self):
        return [(c.name, c.kind) for c in self.columns]

    @property
    def column_names(self):
        return [c.name for c in self.columns]

    def has_column(self, name):
        return name in self._index

    def column(self, name):
        try:
            return self.columns[self._index[name]]
        except KeyError:
            raise UnknownColumn('%s.%s' % (self.name, name))

    def project(self, names):
        """
        Column subset view sharing the same vectors.
        """
        return ColumnTable(self.name, tuple(self.column(n) for n in names), self.row_count, self.is_temporary)

    def take(self, indices, names=None, name=None, is_temporary=None):
        names = names if names is not None else self.column_names
        columns = tuple(self.column(n).take(indices) for n in names)

        if is_temporary is None:
            is_temporary = self.is_temporary

        return ColumnTable(name or self.name, columns, len(indices), is_temporary)

    def rows(self, limit=None):
        """
        Decoded python rows, for printing and tests.
        """
        n = self.row_count if limit is None else min(limit, self.row_count)

        for i in range(n):
            yield tuple(c.decode(i) for c in self.columns)


def build_table(name, schema, arrays, null_masks=None, dictionaries=None, is_temporary=False):
    """
    Assemble a table from already encoded column vectors.
    """
    if not schema:
        raise EmptySchema(name)

    lengths = [len(a) for a in arrays]

    if len(arrays) != len(schema):
        raise ArityMismatch(len(schema), len(arrays), 'table')

    if len(set(lengths)) > 1:
        raise LengthMismatch(lengths)

    columns = []

    for i, (column_name, kind) in enumerate(schema):
        null_mask = null_masks[i] if null_masks else None
        dictionary = dictionaries[i] if dictionaries else None
        columns.append(make_column(column_name, kind, arrays[i], null_mask, dictionary))

    return ColumnTable(name, tuple(columns), lengths[0] if lengths else 0, is_temporary)


def encode_value(kind, dictionary, raw):
    """
    Encode one python value for storage. Returns None for NULL.
    """
    if raw is None:
        return None

    if kind.name == 'INT64':
        if isinstance(raw, bool):
            raise TypeMismatch('Expected INT64, got %r' % raw, phase='load')

        if isinstance(raw, (int, np.integer)):
            return int(raw)

        try:
            return int(str(raw).strip())
        except ValueError:
            raise TypeMismatch('Expected INT64, got %r' % raw, phase='load')
    elif kind.name == 'DECIMAL':
        try:
            value = Decimal(str(raw).strip())
        except InvalidOperation:
            raise TypeMismatch('Expected %s, got %r' % (kind, raw), phase='load')

        if not value.is_finite():
            raise UnparseableValue('%r is not a finite decimal' % raw)

        quantum = Decimal(1).scaleb(-kind.scale)
        scaled = int(value.quantize(quantum, rounding=ROUND_HALF_EVEN).scaleb(kind.scale))

        if abs(scaled) >= 10 ** kind.precision:
            raise UnparseableValue('%r overflows %s' % (raw, kind))

        return scaled
    elif kind.name == 'DATE':
        return date_to_days(raw)
    elif kind.name == 'TEXT':
        if not isinstance(raw, str):
            raise TypeMismatch('Expected TEXT, got %r' % raw, phase='load')

        return dictionary.encode(raw)

    raise TypeMismatch('Unknown kind %s' % kind, phase='load')


"""
Temp tables and the table registry
"""
@dataclass(frozen=True)
class TempTableHandle:
    id: int
    schema: tuple
    row_count: int

    @property
    def name(self):
        return 'temp#%i' % self.id


class Database(object):
    """
    Registry of base tables and optimizer-created temp tables.

    Temp tables live in their own namespace keyed by handle id, so user
    SQL can never reach them by name.
    """
    def __init__(self):
        self.tables = {}
        self.temps = {}
        self._next_temp_id = 1
        self._lock = threading.Lock()

    def create_table(self, name, schema):
        if name in self.tables:
            raise DuplicateTable(name)

        if not schema:
            raise EmptySchema(name)

        table = build_table(name, schema, [np.zeros(0, dtype=np.int64) for _ in schema])
        self.tables[name] = table

        return table

    def register(self, table):
        if table.name in self.tables:
            raise DuplicateTable(table.name)

        self.tables[table.name] = table

        return table

    def get(self, name):
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTable(name)

    def append_rows(self, table, rows):
        """
        Append a batch of python rows, returning the new table version.
        Failing rows are reported with their index in the batch.
        """
        if isinstance(table, str):
            table = self.get(table)

        arity = len(table.columns)
        encoded = [[] for _ in range(arity)]
        nulls = [[] for _ in range(arity)]
        batches = [c.dictionary.batch() if c.dictionary is not None else None for c in table.columns]

        for i, row in enumerate(rows):
            try:
                if len(row) != arity:
                    raise ArityMismatch(arity, len(row))

                for j, column in enumerate(table.columns):
                    value = encode_value(column.kind, batches[j], row[j])
                    nulls[j].append(value is None)
                    encoded[j].append(0 if value is None else value)
            except EngineError as e:
                e.row_index = i
                e.phase = 'load'
                raise

        for batch in batches:
            if batch is not None:
                batch.commit()

        columns = []

        for j, column in enumerate(table.columns):
            values = np.concatenate([column.values, np.array(encoded[j], dtype=np.int64)])
            null_mask = np.concatenate([column.null_mask, np.array(nulls[j], dtype=bool)])
            columns.append(make_column(column.name, column.kind, values, null_mask, column.dictionary))

        appended = ColumnTable(table.name, tuple(columns), table.row_count + len(encoded[0]), table.is_temporary)

        if self.tables.get(table.name) is table:
            self.tables[table.name] = appended

        return appended

    def materialize_temp(self, schema, columns):
        """
        Register computed column vectors as a temp table.

        columns holds Column objects (their dictionaries are reused) or
        bare int64 vectors.
        """
        lengths = [len(c) for c in columns]

        if len(set(lengths)) > 1:
            raise LengthMismatch(lengths)

        if len(columns) != len(schema):
            raise ArityMismatch(len(schema), len(columns), 'temp table')

        built = []

        for (name, kind), column in zip(schema, columns):
            if isinstance(column, Column):
                built.append(make_column(name, kind, column.values, column.null_mask, column.dictionary))
            else:
                built.append(make_column(name, kind, column))

        with self._lock:
            handle_id = self._next_temp_id
            self._next_temp_id += 1
            row_count = lengths[0] if lengths else 0
            table = ColumnTable('temp#%i' % handle_id, tuple(built), row_count, is_temporary=True)
            handle = TempTableHandle(handle_id, tuple(schema), row_count)
            self.temps[handle_id] = table

        logger.debug('Materialized %s with %i rows', handle.name, row_count)

        return handle

    def resolve(self, handle):
        try:
            return self.temps[handle.id]
        except KeyError:
            raise DeadHandle(handle.id)

    def drop_temp(self, handle):
        handle_id = getattr(handle, 'id', handle)

        with self._lock:
            if handle_id not in self.temps:
                raise DeadHandle(handle_id)

            del self.temps[handle_id]

    def live_temps(self):
        return sorted(self.temps)

    def drop_all_temps(self):
        with self._lock:
            self.temps.clear()


"""
CSV
"""
def load_csv(database, name, schema, path, header=False):
    """
    Load a comma separated file. Quoting follows RFC 4180 and \\N
    stands for NULL. Errors cite the 1-based line of the file.
    """
    if name in database.tables:
        raise DuplicateTable(name)

    offset = 2 if header else 1
    rows = []

    try:
        with open(path, newline='', encoding='utf-8') as f:
            reader = csv.reader(f, delimiter=',', quotechar='"', strict=True)

            try:
                for i, row in enumerate(reader):
                    if header and i == 0:
                        continue

                    rows.append([None if v == NULL_TOKEN else v for v in row])
            except csv.Error as e:
                raise CsvError(path, reader.line_num, str(e))
            except UnicodeDecodeError as e:
                raise CsvError(path, reader.line_num + 1, 'not valid UTF-8 (%s)' % e.reason)
    except (IOError, OSError) as e:
        raise EngineError('Could not read %s: %s' % (path, e), phase='load')

    table = database.create_table(name, schema)

    try:
        table = database.append_rows(table, rows)
    except EngineError as e:
        del database.tables[name]
        raise CsvError(path, e.row_index + offset, e.message)

    logger.info('Loaded %s: %i rows from %s', name, table.row_count, path)

    return table

def format_value(column, i):
    if column.null_mask[i]:
        return NULL_TOKEN

    value = column.decode(i)

    if isinstance(value, datetime.date):
        return value.isoformat()

    return str(value)

def dump_csv(table, f, header=False):
    """
    Write a table as CSV. Output is byte-identical for identical tables.
    """
    writer = csv.writer(f, lineterminator='\n', quoting=csv.QUOTE_MINIMAL)

    if header:
        writer.writerow(table.column_names)

    formatted = []

    for column in table.columns:
        if column.kind.name == 'INT64' and not column.has_nulls:
            formatted.append([str(v) for v in column.values.tolist()])
        else:
            formatted.append([format_value(column, i) for i in range(table.row_count)])

    for row in zip(*formatted):
        writer.writerow(row)
