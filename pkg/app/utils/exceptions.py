from typing import List, Optional


class AuctionError(Exception):
    """Base class for engine errors"""


class ToleranceNotMetError(AuctionError, ArithmeticError):
    """A truncated series or quadrature could not certify the requested accuracy"""

    def __init__(self, message: str, achieved: float, requested: float):
        super().__init__(f"{message} (achieved {achieved:.3e}, requested {requested:.3e})")
        self.achieved = achieved
        self.requested = requested


class QuadratureError(ToleranceNotMetError):
    """Adaptive quadrature did not converge to the requested absolute tolerance"""


class ValidationSuiteError(AuctionError):
    """One or more acceptance checks failed"""

    def __init__(self, failed: List[str]):
        super().__init__(f"{len(failed)} validation check(s) failed: {', '.join(failed)}")
        self.failed = failed


class SpreadFileError(ValueError):
    """Malformed spread sample file"""

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line
