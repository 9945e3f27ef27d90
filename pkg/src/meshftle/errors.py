"""Exception types raised across the package."""


class FtleError(Exception):
    """Base class for all errors raised by meshftle."""


class InvalidDimensionError(FtleError, ValueError):
    pass


class MeshFormatError(FtleError, ValueError):
    """Malformed mesh, flowmap or field file.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class LengthMismatchError(MeshFormatError):
    pass


class DegenerateNeighborhoodError(FtleError, ArithmeticError):
    pass


class NonSymmetricInputError(FtleError, ValueError):
    pass


class InvalidIntervalError(FtleError, ValueError):
    pass


class InvalidPartitionError(FtleError, ValueError):
    pass


class IntegrationDivergedError(FtleError, ArithmeticError):
    pass


class UnknownDeviceError(FtleError, KeyError):
    pass
