"""Exception types shared across the package."""


class FedClusError(Exception):
    """Base class for every error raised by fedclus."""


# dataio
class SchemaMismatch(FedClusError):
    pass


class ParseError(FedClusError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")
        self.row = row
        self.column = column
        self.value = value


class AlreadyStandardized(FedClusError):
    pass


class InvalidSplitSize(FedClusError):
    pass


class UnknownAttribute(FedClusError):
    pass


class TooManyClients(FedClusError):
    pass


# clustering / model / aggregation
class TooFewSamples(FedClusError):
    pass


class DimensionMismatch(FedClusError):
    pass


class InvalidHyperparameter(FedClusError):
    pass


class EmptyUpdateSet(FedClusError):
    pass


# federation / metrics / cli
class InvalidTopology(FedClusError):
    pass


class LengthMismatch(FedClusError):
    pass


class SingleClassInput(FedClusError):
    pass


class ConfigError(FedClusError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
