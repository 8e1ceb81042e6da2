"""Exception types shared across the package."""

from __future__ import annotations


class DebtLadderError(Exception):
    """Base class for every package-raised error; catch this to catch them all."""


class ConfigError(DebtLadderError, ValueError):
    """A model configuration violates a structural constraint."""


class ScenarioError(DebtLadderError, ValueError):
    """A scenario file failed schema validation.

    Carries an optional (line, column) location pointing into the source
    document, 1-indexed, plus the dotted key path that failed.
    """

    def __init__(self, message: str, *, path: str = "", line: int | None = None,
                 column: int | None = None, source: str = "scenario"):
        self.key_path = path
        self.line = line
        self.column = column
        self.source = source
        loc = source
        if line is not None:
            loc += f":{line}"
            if column is not None:
                loc += f":{column}"
        prefix = f"{loc}: " if loc else ""
        where = f" (at {path})" if path else ""
        super().__init__(f"{prefix}{message}{where}")


class NotErgodicError(DebtLadderError, RuntimeError):
    """The ergodicity certificate fails; invariant quantities are undefined."""


class CriticalFeedbackError(DebtLadderError, RuntimeError):
    """Phi(gamma, r_bar, f) >= 1: the rank-one closed form is inapplicable."""


class DivergenceError(DebtLadderError, RuntimeError):
    """Normalized issuance exceeded the overflow guard (|N| > 1e12)."""


class InfeasibleError(DebtLadderError, ValueError):
    """An optimization has an empty feasible set for the given cap/bounds."""


class SecondMomentUnavailableError(DebtLadderError, RuntimeError):
    """Spectral radius of the second-moment operator is >= 1."""


class InternalInconsistencyError(DebtLadderError, AssertionError):
    """Two supposedly equivalent internal computations disagree."""
