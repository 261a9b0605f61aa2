"""
Error hierarchy shared by the library and the CLI.

Input and validation problems map to exit code 2, computational failures
(stalls, disconnection) to exit code 3.
"""

from typing import Any, Dict, Optional


class MMSLabError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


class InputError(MMSLabError):
    """Invalid input: bad parameters, unknown point ids, violated space invariants."""

    exit_code = 2

    def __init__(self, message: str, invariant: Optional[str] = None, **details: Any):
        super().__init__(message, invariant=invariant, **details)
        self.invariant = invariant


class ComputationError(MMSLabError):
    """A well-formed computation that cannot be completed on this space."""

    exit_code = 3


class NoEpsPathError(ComputationError):
    """No ε-path joins the requested sets at this resolution."""


class GapHalvingError(ComputationError):
    """Gap filling did not halve the total gap within the allowed rounds."""


class AtlasStallError(ComputationError):
    """Greedy atlas construction found no qualifying patch with mass left over."""
