"""Exception hierarchy shared by the services and the CLI.

Every error carries the process exit code the CLI returns for it.
"""


class FtnSolveError(Exception):
    exit_code = 1


class ConfigError(FtnSolveError, ValueError):
    exit_code = 2


class DivergenceError(FtnSolveError, ArithmeticError):
    exit_code = 3


class SizeGuardError(FtnSolveError, MemoryError):
    exit_code = 2


class ContractShapeError(FtnSolveError, ValueError):
    pass


class PermutationError(FtnSolveError, ValueError):
    pass


class SymmetryError(FtnSolveError, ValueError):
    pass


class BasisIndexError(FtnSolveError, IndexError):
    pass


class NonFiniteKernelError(FtnSolveError, ValueError):
    pass


class MpsShapeError(FtnSolveError, ValueError):
    pass


class SiteRangeError(FtnSolveError, IndexError):
    pass


class SharedRangeError(FtnSolveError, ValueError):
    pass


class ZeroNormError(FtnSolveError, ZeroDivisionError):
    pass


class NoRealSolutionError(FtnSolveError, ValueError):
    pass


class CheckpointFormatError(FtnSolveError, ValueError):
    pass
