"""Exception hierarchy for emgrid.

All tool-level failures derive from EmgridError so the CLI can map them
to exit codes: input/configuration problems -> 1, numerical failures -> 2.
"""


class EmgridError(Exception):
    """Base class for all emgrid errors."""


class NetlistError(EmgridError):
    """Netlist syntax or reference error, with source location."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column}" if column is not None else "") + ")"
        super().__init__(message + loc)


class ValidationError(EmgridError):
    """A structural invariant of the parsed grid does not hold."""


class ConfigError(EmgridError):
    """Bad parameters file, CLI flags, or physically inconsistent constants."""


class SolveError(EmgridError):
    """Numerical failure: singular system, non-convergent step, etc."""
