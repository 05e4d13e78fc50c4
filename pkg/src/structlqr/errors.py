"""Exception and warning types shared across the toolkit."""


class StructLqrError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatch(StructLqrError, ValueError):
    """Operands have incompatible or unexpected shapes."""


class NotHurwitz(StructLqrError):
    """A matrix required to be Hurwitz has spectral abscissa >= 0."""


class SingularSystem(StructLqrError):
    """A linear system of equations is numerically singular."""


class NotStabilizing(StructLqrError):
    """A gain does not stabilize the (shifted) closed loop."""


class NoConvergence(StructLqrError):
    """An iteration hit its step cap before meeting its threshold."""

    def __init__(self, message, last_change=None):
        super().__init__(message)
        self.last_change = last_change


class Diverged(StructLqrError):
    """A simulated state exceeded the blow-up threshold."""


class NotSettled(StructLqrError):
    """A trajectory did not decay enough for cost quadrature."""


class WindowOutOfRange(StructLqrError):
    """A data window extends past the recorded trajectory."""


class AvailabilityViolated(StructLqrError):
    """A data window intersects an interval without disturbance measurements."""


class RankDeficient(StructLqrError):
    """The least-squares regressor cannot identify the unknowns."""


class AsymmetricP(StructLqrError):
    """The estimated value matrix needed more than a negligible symmetrization."""


class OperatorSingular(StructLqrError):
    """The suboptimality operator matrix is not invertible."""


class InvalidEdge(StructLqrError, ValueError):
    """A consensus edge has a bad node index or weight."""


class InvalidProblem(StructLqrError):
    """A synthesis problem failed validation and was refused."""


class FloorViolated(UserWarning):
    """Q sits below the robustness floor; robust-stability guarantee is void."""
