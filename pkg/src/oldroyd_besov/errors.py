"""Exception types raised across the package.

Every error derives from :class:`ValueError` so callers that only care about
"bad input or bad state" can catch one thing.
"""

from __future__ import annotations

import numpy as np


class OldroydError(ValueError):
    """Base class for all package errors."""


class ConfigurationError(OldroydError):
    """Unsupported or inconsistent configuration (grid, norm spec, frame)."""


class RankError(OldroydError):
    """An operator received a field of the wrong tensor rank."""


class SingularMultiplierError(OldroydError):
    """A Fourier symbol is non-finite at a resolved wavevector."""

    def __init__(self, xi):
        self.xi = tuple(float(c) for c in np.atleast_1d(xi))
        super().__init__(f"multiplier symbol is not finite at xi={self.xi}")


class MeanNonzeroError(OldroydError):
    """A negative power of |D| was applied to a field with a nonzero mean."""


class VacuumError(OldroydError):
    """The density 1 + a reached zero or became negative somewhere."""

    def __init__(self, min_density: float):
        self.min_density = float(min_density)
        super().__init__(f"vacuum: min(1 + a) = {self.min_density:.6g} <= 0")


class AsymmetricTensorError(OldroydError):
    """A tensor that must be symmetric is not, beyond roundoff."""


class GramViolationError(OldroydError):
    """A band functional's radicand is negative beyond roundoff."""


class ConstantsInconsistencyError(OldroydError):
    """A coefficient inequality or Gram margin failed for derived constants."""

    def __init__(self, message: str, failures=None):
        self.failures = list(failures or [])
        super().__init__(message)


class InfeasibleThresholdError(OldroydError):
    """The low threshold q1 is not strictly below the high threshold q0."""

    def __init__(self, q0: int, q1: int):
        self.q0, self.q1 = int(q0), int(q1)
        super().__init__(f"infeasible thresholds: q1={self.q1} >= q0={self.q0}")


class StabilityError(OldroydError):
    """The linear mode operator has an eigenvalue with positive real part."""

    def __init__(self, xi, abscissa: float):
        self.xi = tuple(float(c) for c in np.atleast_1d(xi))
        self.abscissa = float(abscissa)
        super().__init__(
            f"positive spectral abscissa {self.abscissa:.3e} at xi={self.xi}")


class CFLViolation(OldroydError):
    """The advective CFL bound is violated; ``suggested_h`` satisfies it."""

    def __init__(self, h: float, suggested_h: float, courant: float):
        self.h = float(h)
        self.suggested_h = float(suggested_h)
        self.courant = float(courant)
        super().__init__(
            f"CFL violated: h={self.h:.3g} gives courant number "
            f"{self.courant:.3g} > 0.5; try h <= {self.suggested_h:.3g}")


class FieldFormatError(OldroydError):
    """A field snapshot file is malformed; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        self.offset = int(offset)
        super().__init__(f"{message} (at byte offset {self.offset})")


class TraceError(OldroydError):
    """A time trace is empty, too short or not uniformly sampled."""
