from __future__ import annotations

from typing import Optional, Tuple


class AnyonLTError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidInputError(AnyonLTError, ValueError):
    pass


class WindowExhaustedError(AnyonLTError):
    def __init__(self, message: str, window: Tuple[float, float]):
        super().__init__(f"{message} (spectral window {window[0]:.6g}..{window[1]:.6g})")
        self.window = window


class NumericError(AnyonLTError):
    def __init__(self, message: str, interval: Optional[Tuple[float, float]] = None):
        if interval is not None:
            message = f"{message} (interval [{interval[0]:.6g}, {interval[1]:.6g}])"
        super().__init__(message)
        self.interval = interval


class SolverError(AnyonLTError):
    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class ResourceError(AnyonLTError):
    def __init__(self, requested: int, budget: int):
        super().__init__(f"state dimension {requested} exceeds the memory budget of {budget} states")
        self.requested = requested
        self.budget = budget


class UnreachableMassError(AnyonLTError):
    def __init__(self, target: float, available: float):
        super().__init__(f"target mass {target:.6g} exceeds the available mass {available:.6g}")
        self.target = target
        self.available = available


class PreconditionError(AnyonLTError):
    pass


class LedgerIncompleteError(AnyonLTError, KeyError):
    def __init__(self, entry: str):
        super().__init__(entry)
        self.entry = entry

    def __str__(self) -> str:
        return f"ledger has no usable entry {self.entry!r}"


class ConfigError(AnyonLTError):
    def __init__(self, message: str, line: int = 0, column: int = 0, path: str = "<config>"):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.path = path
