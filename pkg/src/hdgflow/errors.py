"""Exception types raised across the package."""


class HDGError(Exception):
    """Base class for all package errors."""


class NonPositiveDensity(HDGError):
    pass


class NonPositiveTemperature(HDGError):
    pass


class InviscidModel(HDGError):
    """A viscous quantity was requested from a gas model with Re = inf."""


class DegenerateState(HDGError):
    """Sound speed is not positive, so the eigenstructure is undefined."""


class NonConforming(HDGError):
    pass


class UntaggedBoundary(HDGError):
    pass


class InvertedElement(HDGError):
    pass


class UnsupportedShape(HDGError):
    pass


class MeshFormatError(HDGError):
    pass


class ConfigError(HDGError):
    pass


class MissingSpec(HDGError):
    """A boundary tag has no boundary-condition binding."""


class SingularLocalMatrix(HDGError):
    pass


class SingularGlobalMatrix(HDGError):
    pass


class NonPhysicalState(HDGError):
    """Density or pressure became non-positive during the march."""

    def __init__(self, step, min_rho, min_p):
        self.step = step
        self.min_rho = min_rho
        self.min_p = min_p
        super().__init__(
            f"non-physical state at step {step}: min rho = {min_rho:.6e}, min p = {min_p:.6e}"
        )

    def __reduce__(self):
        return type(self), (self.step, self.min_rho, self.min_p)


class MaxIterations(HDGError):
    pass


class ZeroField(HDGError):
    pass


class DegenerateThresholds(UserWarning):
    """The sensor ramp window collapses (k = 1)."""


class NoRoot(HDGError):
    pass


class AmbiguousBranch(HDGError):
    pass


class DegenerateTable(HDGError):
    pass


class MissingViscousData(HDGError):
    pass
