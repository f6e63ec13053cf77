"""Exception types raised across the package."""


class GeholeError(Exception):
    """Base class for all package errors.

    ``exit_code`` is the CLI status: 2 configuration, 3 physics validity, 4 numerical.
    """

    exit_code = 4


class ConfigError(GeholeError):
    exit_code = 2


class HermiticityError(GeholeError):
    pass


class UnitarityError(GeholeError):
    pass


class EigensolverError(GeholeError):
    pass


class GapTooSmall(GeholeError):
    """The orbital gap above the qubit doublet is not large enough."""

    exit_code = 3

    def __init__(self, gap_ratio, message=None):
        self.gap_ratio = gap_ratio
        super().__init__(message or f"qubit subspace not gapped: gap3/(hbar*omega0) = {gap_ratio:.3g}")


class PoleProximity(GeholeError):
    """A drive frequency sits on (or too close to) a transition pole."""

    exit_code = 3

    def __init__(self, message, tone_index=None):
        self.tone_index = tone_index
        if tone_index is not None:
            message = f"tone {tone_index}: {message}"
        super().__init__(message)


class DenominatorVanishes(GeholeError):
    exit_code = 3


class NoCancellation(GeholeError):
    exit_code = 3


class NoRootInBand(GeholeError):
    exit_code = 3


class FMValidityViolated(GeholeError):
    exit_code = 3


class EmptyBandAfterMask(GeholeError):
    exit_code = 3


class QuadratureError(GeholeError):
    pass
