"""Exception types raised across the package.

Every operation that can reject its input raises one of these rather than a
bare ValueError, so callers (and the CLI) can tell a malformed model apart
from a genuine bug.
"""

from __future__ import annotations


class HioawError(Exception):
    """Base class for all library errors."""


# -- trajectory algebra -------------------------------------------------------

class TimeOutOfDomain(HioawError):
    """A time argument falls outside the trajectory's domain."""


class GridMisaligned(HioawError):
    """A time is not a multiple of the sampling step (or a cut is degenerate)."""


class VarSetMismatch(HioawError):
    """Operands declare different variable sets where equal ones are required."""


class OpenNonFinalPart(HioawError):
    """A non-final part of a concatenation is right-open."""


class DomainMismatch(HioawError):
    """Operands cover different time domains."""


class NonSummableType(HioawError):
    """A shared variable's value type has no addition."""


# -- spatial fields ------------------------------------------------------------

class OutOfGrid(HioawError):
    """A point or cell index lies outside the grid."""


class GridMismatch(HioawError):
    """Two fields live on different grids."""


class KindMismatch(HioawError):
    """Two fields hold different value kinds."""


class EmptyFootprint(HioawError):
    """A footprint covers no cell centre."""


# -- automata ------------------------------------------------------------------

class ActionNotEnabled(HioawError):
    """No transition rule for the action is enabled in the given state."""


class NondeterministicUnresolved(HioawError):
    """Several rules for one action fire and no priority orders them."""


class InputDomainTooShort(HioawError):
    """The input trajectory ends before the requested duration."""


class SchedulerDeadlock(HioawError):
    """Urgent actions keep firing without the run making progress."""


class MalformedPadding(HioawError):
    """A stutter junction joins trajectories with different states."""


class DurationMismatch(HioawError):
    """Executions to be aligned have different total durations."""


# -- composition and refinement -------------------------------------------------

class IncompatibleAutomata(HioawError):
    """The compatibility clauses reject the pair."""


class NotAComposite(HioawError):
    """Decomposition was asked of something that is not a binary composite."""


class BoundExceeded(HioawError):
    """A bounded check ran out of budget before reaching a verdict."""


class InvalidParams(HioawError):
    """Scenario or model parameters violate a documented constraint."""


class ParseError(HioawError):
    """A scenario file is malformed; message carries line information."""
