"""Exception types raised across the package."""


class TomographyError(Exception):
    """Base class for every error raised by qptomo."""


class DimensionMismatch(TomographyError, ValueError):
    pass


class DomainError(TomographyError, ValueError):
    """A parameter lies outside its admissible range (e.g. q not in (0, 1))."""


class NonRealExponent(TomographyError):
    """The exponent of a Q-form picked up an imaginary part (corrupted form)."""


class NotIntegrable(TomographyError):
    """The real quadratic part of a Q-form is not negative definite."""


class IllConditioned(TomographyError):
    """A probe set yields a (numerically) degenerate linear system."""


class Singular(IllConditioned):
    """Exactly or numerically rank-deficient matrix."""


class QuadraticInconsistency(TomographyError):
    """Probe records disagree on the output quadratic blocks."""


class ConjugateMismatch(TomographyError):
    """Recovered conjugate-pair unknowns are not complex conjugates."""


class WrongProbeSet(TomographyError, ValueError):
    pass


class CutoffTooSmall(TomographyError):
    """A Fock-space cutoff cannot represent the requested state accurately."""


class ZeroWeight(TomographyError, ValueError):
    """A filtering weight r_k is zero, so the filter cannot be inverted."""


class AmplificationOverflow(TomographyError):
    """Inverse TMSS filtering amplifies truncation noise past the tolerance."""
