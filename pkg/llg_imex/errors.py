"""
Exception hierarchy for the IMEX-RK3 Landau-Lifshitz solver
"""

from typing import Optional


class LLGError(Exception):
    """Base class for every error raised by llg_imex"""


class ConfigurationError(LLGError):
    pass


class GridMismatchError(LLGError):
    """Two fields that must share a grid do not"""


class InvalidTableauError(LLGError):
    pass


class UnsupportedTableauError(LLGError):
    pass


class TableauSearchError(LLGError):
    """Tableau search ran out of restarts without meeting the tolerance"""


class TableauParseError(LLGError):
    pass


class SolverInputError(LLGError):
    pass


class SolverConvergenceError(LLGError):
    pass


class RunConfigError(LLGError):
    pass


class InsufficientDataError(LLGError):
    pass


class DivergenceError(LLGError):
    """A stage produced nonfinite values"""

    def __init__(self, message: str, stage: Optional[int] = None, step: Optional[int] = None):
        self.stage = stage
        self.step = step
        context = []
        if step is not None:
            context.append(f"step {step}")
        if stage is not None:
            context.append(f"stage {stage}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class StudyError(LLGError):
    """A schedule row of a convergence study failed"""

    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {message}")
