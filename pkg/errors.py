#!/usr/bin/env python

"""
Exceptions raised across the engine.

Every error carries the phase it was raised in so the command line can
label failures (phase=parse, phase=plan, ...).
"""


class EngineError(Exception):
    """
    Base class for every engine failure.
    """
    phase = 'execute'

    def __init__(self, message, phase=None):
        Exception.__init__(self, message)
        self.message = message

        if phase:
            self.phase = phase

    def __str__(self):
        return self.message


"""
Storage
"""
class StorageError(EngineError):
    phase = 'load'


class DuplicateTable(StorageError):
    def __init__(self, name):
        StorageError.__init__(self, 'Table "%s" already exists' % name)
        self.name = name


class DuplicateColumn(StorageError):
    def __init__(self, table, column):
        StorageError.__init__(self, 'Column "%s" appears twice in table "%s"' % (column, table))
        self.column = column


class EmptySchema(StorageError):
    def __init__(self, name):
        StorageError.__init__(self, 'Table "%s" needs at least one column' % name)
        self.name = name


class ArityMismatch(EngineError):
    def __init__(self, expected, got, what='row'):
        EngineError.__init__(self, 'Expected %i values per %s, got %i' % (expected, what, got))
        self.expected = expected
        self.got = got


class TypeMismatch(EngineError):
    phase = 'analyze'


class UnparseableValue(StorageError):
    pass


class LengthMismatch(StorageError):
    def __init__(self, lengths):
        StorageError.__init__(self, 'Column vectors differ in length: %s' % ', '.join(str(l) for l in lengths))
        self.lengths = lengths


class DeadHandle(StorageError):
    phase = 'execute'

    def __init__(self, handle_id):
        StorageError.__init__(self, 'Temp table #%s is not live' % handle_id)
        self.handle_id = handle_id


class UnknownTable(EngineError):
    phase = 'analyze'

    def __init__(self, name):
        EngineError.__init__(self, 'Unknown table "%s"' % name)
        self.name = name


class CsvError(StorageError):
    def __init__(self, path, row_number, reason):
        StorageError.__init__(self, '%s, row %i: %s' % (path, row_number, reason))
        self.path = path
        self.row_number = row_number


"""
SQL frontend
"""
class SqlSyntaxError(EngineError):
    phase = 'parse'

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = '%s at line %i, column %i' % (message, line, column)

        EngineError.__init__(self, message)
        self.line = line
        self.column = column


class UnsupportedConstruct(EngineError):
    phase = 'parse'

    def __init__(self, construct, line=None, column=None):
        message = 'Unsupported construct: %s' % construct

        if line is not None:
            message = '%s at line %i, column %i' % (message, line, column)

        EngineError.__init__(self, message)
        self.construct = construct


class UnknownColumn(EngineError):
    phase = 'analyze'

    def __init__(self, name):
        EngineError.__init__(self, 'Unknown column "%s"' % name)
        self.name = name


class AmbiguousColumn(EngineError):
    phase = 'analyze'

    def __init__(self, name, tables):
        EngineError.__init__(self, 'Column "%s" is ambiguous (%s)' % (name, ', '.join(tables)))
        self.name = name


class UnknownFunction(EngineError):
    phase = 'analyze'

    def __init__(self, name):
        EngineError.__init__(self, 'Unknown function "%s"' % name)
        self.name = name


class DuplicateFunction(EngineError):
    phase = 'analyze'

    def __init__(self, name):
        EngineError.__init__(self, 'Function "%s" is already registered' % name)
        self.name = name


class UnsupportedPredicate(EngineError):
    phase = 'analyze'


"""
Catalog
"""
class UnsupportedColumnKind(EngineError):
    phase = 'plan'


class Inestimable(EngineError):
    phase = 'plan'


"""
Optimizer and executor
"""
class ConfigError(EngineError):
    phase = 'usage'


class NoPredicate(EngineError):
    phase = 'plan'


class CartesianProductRequired(EngineError):
    phase = 'plan'


class KeyTypeMismatch(EngineError):
    phase = 'plan'


class SubqueryError(EngineError):
    phase = 'plan'

    def __init__(self, sql, cause):
        EngineError.__init__(self, 'Selectivity sub-query failed: %s (%s)' % (cause, sql))
        self.sql = sql
        self.cause = cause


class UdfError(EngineError):
    def __init__(self, name, row, cause):
        EngineError.__init__(self, 'Function "%s" failed at row %s: %s' % (name, row, cause))
        self.name = name
        self.row = row
        self.cause = cause


"""
Bench and command line
"""
class ScaleTooSmall(EngineError):
    phase = 'bench'


class UsageError(EngineError):
    phase = 'usage'
