"""Exception types shared across the package."""


class MaslovError(Exception):
    """Base class for all package-specific failures."""


class FrameValidationError(MaslovError):
    """A claimed Lagrangian frame violates one of its invariants.

    Carries the name of the violated invariant and the measured residual.
    """

    def __init__(self, invariant: str, residual: float, tolerance: float):
        self.invariant = invariant
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"frame violates the {invariant} invariant: "
            f"residual {residual:.3e} exceeds tolerance {tolerance:.1e}"
        )


class GaugeAlignmentError(MaslovError):
    """Consecutive plane samples are too far apart to align smoothly.

    The caller should refine the sampling step and retry.
    """


class ImmersionRankError(MaslovError):
    """The differential of an immersion dropped rank at a sample point."""

    def __init__(self, location, smallest_singular_value: float):
        self.location = location
        self.smallest_singular_value = smallest_singular_value
        super().__init__(
            f"immersion differential is rank deficient at u={location} "
            f"(smallest singular value {smallest_singular_value:.3e})"
        )


class NonConvergenceError(MaslovError):
    """Refinement was exhausted without meeting the resolution guard."""


class MetricError(MaslovError):
    """A metric sample is not symmetric positive definite."""


class ExpressionError(MaslovError):
    """Base class for expression parsing/evaluation failures."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class ParseError(ExpressionError):
    """Source text does not match the expression grammar."""


class EvaluationError(ExpressionError):
    """Expression evaluation hit an undefined operation (e.g. 1/0)."""


class ConfigError(MaslovError):
    """Command-line or config-file input is invalid."""
