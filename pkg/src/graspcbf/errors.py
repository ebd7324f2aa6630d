"""Exception types raised across the package."""


class GraspError(Exception):
    """Base class for all errors raised by graspcbf."""


class GimbalLock(GraspError):
    pass


class NearSingular(GraspError):
    pass


class OutOfChart(GraspError):
    pass


class DegenerateChart(GraspError):
    pass


class FlatOnFlat(GraspError):
    """Relative curvature of a contact pair is singular (e.g. plane on plane)."""


class RankDeficient(GraspError):
    pass


class IllConditioned(GraspError):
    pass


class SingularJh(GraspError):
    pass


class GraspFailure(GraspError):
    """A contact point left its fingertip workspace, ending the run."""

    def __init__(self, message, contact=None):
        super().__init__(message)
        self.contact = contact


class NonPositiveNormal(GraspError):
    pass


class Infeasible(GraspError):
    pass


class MaxIterations(GraspError):
    pass


class ConfigInvalid(GraspError):
    pass


class SchemaMismatch(GraspError):
    pass


class IoFailure(GraspError):
    pass
