"""Exception types shared across the toolkit."""

from __future__ import annotations

import numpy as np


class UnsupportedFormatError(ValueError):
    """The input file is not a format this toolkit can read."""


class CorruptFileError(ValueError):
    """The input file is malformed; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SingularBlockError(RuntimeError):
    """A nodal 2x2 system block is numerically singular (degenerate sigma with r ~ 0)."""


class NonFiniteError(RuntimeError):
    """A solver produced NaN or Inf values; carries a short diagnostic message."""


def ensure_finite(arr: np.ndarray, context: str) -> None:
    """Raise NonFiniteError with a count diagnostic if ``arr`` is not finite."""
    bad = np.count_nonzero(~np.isfinite(arr))
    if bad:
        raise NonFiniteError(f"{context}: {bad} non-finite value(s) of {arr.size}")
