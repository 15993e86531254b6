"""Exception hierarchy shared by all kappasurf modules.

Exit-code mapping used by the CLI: ValidationError -> 2,
InfeasibleParameters -> 3, NonConvergence -> 4.
"""


class KappasurfError(Exception):
    """Base class for all library errors."""


class ChartError(KappasurfError):
    """A point or tangent vector violates its chart invariants."""


class InfeasibleParameters(KappasurfError):
    """Requested construction parameters admit no solution."""


class ValidationError(KappasurfError):
    """A surface complex fails structural or metric validation."""


class NonConvergence(KappasurfError):
    """An iterative numerical procedure failed to converge."""


class VertexObstruction(KappasurfError):
    """A curve operation ran into a cone vertex."""


class CurveCollapse(KappasurfError):
    """A closed curve shortened below measurable length (contractible input)."""
