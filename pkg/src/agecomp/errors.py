"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericalError -> 3.
"""


class DataError(ValueError):
    """Malformed, inconsistent or out-of-range input data."""


class NumericalError(RuntimeError):
    """A computation could not be carried out (rank, convergence, singularity)."""
