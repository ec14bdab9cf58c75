"""Exception hierarchy.

Two families matter to callers: ``InputError`` (malformed or inconsistent
user input, CLI exit code 1) and ``ModelError`` (well-formed input whose
model is degenerate or infeasible, CLI exit code 2).
"""

from __future__ import annotations


class MmvLabError(Exception):
    """Base class for all package errors."""


class InputError(MmvLabError):
    """Malformed input: bad shapes, bad files, bad parameter values."""


class ModelError(MmvLabError):
    """Structurally sound input describing a degenerate or infeasible model."""


class DimensionMismatch(InputError):
    """Vectors that must share a scenario space do not."""


class NonPositiveKernel(InputError):
    """A pricing kernel that must be strictly positive is not."""


class ZeroMeanKernel(InputError):
    """A raw kernel with zero mean cannot be normalized to unit mass."""


class NegativeDensity(InputError):
    """A density that must be non-negative has a material negative entry."""


class NotAMartingaleDensity(InputError):
    """A density fails the unit-mean / orthogonality checks for the market."""


class InfeasibleConstraints(ModelError):
    """The signed-kernel moment conditions admit no solution.

    Happens exactly when the constant payoff 1 lies in the span of the
    generators; the offending combination is attached for diagnostics.
    """

    def __init__(self, message: str, combination=None, residual: float | None = None):
        super().__init__(message)
        self.combination = combination
        self.residual = residual


class InfeasibleQP(ModelError):
    """No non-negative kernel satisfies the moment conditions."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ZeroRiskPremium(ModelError):
    """Jump-diffusion threshold undefined: adjusted risk premium is zero."""


class DegenerateMarket(ModelError):
    """Jump-diffusion market with no diffusion and no jump variance."""


class OptimizerStalled(ModelError):
    """A certified solution could not be produced; diagnostics attached."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
