"""Exception hierarchy shared by every module of the engine."""


class APlusError(Exception):
    """Base class; the CLI maps these to exit code 1."""


# graph store
class UnknownLabel(APlusError):
    pass


class UnknownVertex(APlusError):
    pass


class UnknownEdge(APlusError):
    pass


class UnknownId(APlusError):
    pass


class UnknownProperty(APlusError):
    pass


class PropertyKindMismatch(APlusError):
    pass


class SchemaMismatch(APlusError):
    pass


class ParseError(APlusError):
    def __init__(self, message, line=None, col=None, expected=None):
        self.line = line
        self.col = col
        self.expected = expected
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", col {col}"
            where += ": "
        super().__init__(where + message)


class UnsupportedOperation(APlusError):
    pass


# index configuration
class NonCategoricalPartitionKey(APlusError):
    pass


class SingleEdgePredicate(APlusError):
    pass


class InvalidConfig(APlusError):
    pass


class MissingPrimaryDirection(APlusError):
    pass


class IndexTooLarge(APlusError):
    pass


class IndexRetired(APlusError):
    pass


# index store
class DuplicateName(APlusError):
    pass


class UnknownIndex(APlusError):
    pass


# query processing
class QueryError(APlusError):
    pass


class SortMismatch(APlusError):
    pass


class UnboundVariable(APlusError):
    pass


class NoPlan(APlusError):
    pass
