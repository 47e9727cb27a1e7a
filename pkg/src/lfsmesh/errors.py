"""Exception types shared across the reconstruction pipeline."""


class LfsMeshError(Exception):
    """Base class for all library errors."""


class InputError(LfsMeshError):
    """Malformed or unusable user input (bad file, empty cloud, bad flag)."""


class DegenerateInputError(InputError):
    """Input is structurally degenerate (all points coincident, collinear...)."""


class DegenerateFitError(LfsMeshError):
    """A local polynomial fit has a rank-deficient neighborhood."""


class SearchFailureError(LfsMeshError):
    """Dichotomic search exceeded its recursion budget."""


class ContractViolationError(LfsMeshError):
    """An internal invariant was violated (indicates a bug upstream)."""


class StageError(LfsMeshError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class NonConvergenceError(StageError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, stage, message, residual=None):
        super().__init__(stage, message)
        self.residual = residual


class BudgetExceededError(StageError):
    """A refinement loop hit its insertion budget (non-termination guard)."""


class DomainError(LfsMeshError):
    """Query point lies outside the triangulated domain."""


class ValidityError(LfsMeshError):
    """Output mesh failed a validity check (watertightness, intersections)."""
