"""Exception hierarchy shared by all modules.

Every exception that represents a *domain* failure (unreachable pose, no
convergence, malformed data) derives from :class:`KinematicsError`; the CLI
maps those to exit code 1 and prints :meth:`KinematicsError.describe`.
"""


class KinematicsError(Exception):
    """Base class for domain errors."""

    def __init__(self, message="", **fields):
        super().__init__(message or type(self).__name__)
        self.fields = fields

    def describe(self):
        parts = [f"error={type(self).__name__}"]
        parts += [f"{k}={v}" for k, v in self.fields.items() if v is not None]
        return " ".join(parts)


class DomainError(KinematicsError):
    pass


class NoIntersection(KinematicsError):
    pass


class OutOfReach(KinematicsError):
    pass


class WorkspaceViolation(KinematicsError):
    pass


class BranchViolation(KinematicsError):
    pass


class NoConvergence(KinematicsError):
    def __init__(self, message="", best=None, **fields):
        super().__init__(message, **fields)
        self.best = best


class SingularJacobian(KinematicsError):
    def __init__(self, message="", iterate=None, **fields):
        super().__init__(message, **fields)
        self.iterate = iterate


class EmptyDataset(KinematicsError):
    pass


class FormatError(KinematicsError):
    pass


class IoError(KinematicsError):
    pass


class DegenerateData(KinematicsError):
    pass


class EigenFailure(KinematicsError):
    pass


class DivergenceError(KinematicsError):
    pass


class LengthMismatch(KinematicsError):
    pass


class ZeroVariance(KinematicsError):
    pass
