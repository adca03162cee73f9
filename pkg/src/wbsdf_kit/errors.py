"""Exception hierarchy shared by all modules."""


class WbsdfError(Exception):
    pass


class ArgumentError(WbsdfError, ValueError):
    """Bad argument value (index out of range, wavelength in the wrong units...)."""


class DataError(WbsdfError, ValueError):
    """Input data violates a declared property (non-finite, non-separable, not PSD)."""


class PrecisionError(WbsdfError):
    """A discretisation is too coarse to meet the numerical contract."""


class InternalConsistencyError(WbsdfError):
    pass


class SamplingError(WbsdfError):
    """No propagating direction is available to sample."""


class ScopeError(WbsdfError):
    pass


class SceneError(WbsdfError, ValueError):
    pass
