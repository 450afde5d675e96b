"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class YPlusError(Exception):
    """Base class for all errors raised by this package."""


class UnknownAttribute(YPlusError):
    pass


class EmptyQuery(YPlusError):
    pass


class DomainMismatch(YPlusError):
    pass


class CyclicQuery(YPlusError):
    pass


class InvalidTree(YPlusError):
    pass


class NotReducible(YPlusError):
    pass


class NotDanglingFree(YPlusError):
    pass


class InvalidGHD(YPlusError):
    pass


class NoValidTree(YPlusError):
    pass


class UnsupportedSemiring(YPlusError):
    pass


class MissingRelation(YPlusError):
    pass


class SchemaMismatch(YPlusError):
    pass


class ParseError(YPlusError):
    """Raised for malformed query files; carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
