"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: usage problems exit 2 (argparse),
DataError exits 3, NumericError exits 4.
"""


class LpnetError(Exception):
    pass


class ShapeError(LpnetError):
    """Tensor shapes incompatible with the requested operation."""


class DataError(LpnetError):
    """Bad file contents, malformed configs, missing corpora."""


class NumericError(LpnetError):
    """Non-finite values where finite ones are required (NaN loss etc.)."""
