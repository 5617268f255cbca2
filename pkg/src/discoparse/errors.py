"""Exception types shared across the package.

Each family maps to a distinct CLI exit code.
"""


class DiscoparseError(Exception):
    exit_code = 1


class FormatError(DiscoparseError):
    """Malformed input file or bracket string."""

    exit_code = 2


class StructuralError(DiscoparseError):
    """Inconsistent tree or dependency structure."""

    exit_code = 2


class AlignmentError(DiscoparseError):
    """Gold/predicted corpora do not line up."""

    exit_code = 3


class NumericError(DiscoparseError):
    """Non-finite loss or other numeric failure."""

    exit_code = 4
