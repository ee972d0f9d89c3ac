"""Exception types raised by the simulator."""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all simulator errors."""


class CutoffViolationError(SimulationError, ValueError):
    """An occupation exceeds the register's Fock cutoff."""


class IncompatibleRegisterError(SimulationError, ValueError):
    """Two states or ensembles live on different mode registers."""


class UnknownModeError(SimulationError, KeyError):
    """A mode label is not present in the register."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class ImpossibleEventError(SimulationError, ValueError):
    """Conditioning on an event of zero probability."""


class DivergenceError(SimulationError, ValueError):
    """The gain factor diverges (t = 1)."""


class UndefinedGainError(SimulationError, ValueError):
    """Gain or visibility has a vanishing denominator."""


class InfeasibleTargetError(SimulationError, ValueError):
    """A target efficiency cannot be reached within the bracket."""


class UnderdeterminedFitError(SimulationError, ValueError):
    """Not enough independent data rows for the requested free parameters."""


class ConfigError(SimulationError, ValueError):
    """Invalid configuration value; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
