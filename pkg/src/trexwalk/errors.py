"""Exception and warning classes.

Every error raised by the package derives from :class:`TrexError`.  The three
intermediate classes decide the CLI exit code: bad input (2), a violated
hypothesis of the transfer analysis (3), or a numerical failure (4).
"""


class TrexError(Exception):
    exit_code = 4


class InputError(TrexError, ValueError):
    exit_code = 2


class HypothesisViolation(TrexError):
    exit_code = 3


class NumericalFailure(TrexError, ArithmeticError):
    exit_code = 4


# -- input / construction ---------------------------------------------------
class UnsupportedSize(InputError):
    pass


class UnsupportedKind(InputError):
    pass


class InvalidVertex(InputError, IndexError):
    pass


class InvalidWeight(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class EmptyGrid(InputError):
    pass


class InvalidParameters(InputError):
    pass


class InsufficientData(InputError):
    pass


class ConfigInvalid(InputError):
    pass


# -- hypotheses -------------------------------------------------------------
class AssumptionViolated(HypothesisViolation):
    """The coupling or the split does not have the form the reduction needs.

    ``which`` is ``"off-diagonal"`` (W acts inside P0 or inside P1) or
    ``"zero-eigenvalue"`` (the P0 eigenvalue of H0 is not 0).
    """

    def __init__(self, which, detail=""):
        self.which = which
        super().__init__(f"assumption {which} violated" + (f": {detail}" if detail else ""))


class SingularBase(HypothesisViolation):
    pass


class CouplingTooStrong(HypothesisViolation):
    pass


class WindowOnSpectrum(HypothesisViolation):
    pass


class DegenerateKernel(HypothesisViolation):
    pass


class ZeroOverlap(HypothesisViolation):
    pass


class Disconnected(HypothesisViolation):
    pass


class DegenerateSlope(HypothesisViolation):
    pass


# -- numerics ---------------------------------------------------------------
class NotSymmetric(NumericalFailure):
    pass


class ZeroMatrix(NumericalFailure):
    pass


class Singular(NumericalFailure):
    pass


class OnSpectrum(NumericalFailure):
    pass


class SingularRestriction(NumericalFailure):
    pass


class ZeroCrossCoupling(NumericalFailure):
    pass


class SingularCore(NumericalFailure):
    pass


# -- warnings ---------------------------------------------------------------
class TrexWarning(UserWarning):
    pass


class WeakCouplingWarning(TrexWarning):
    """delta * kappa is above the comfortable range but below the hard cap."""


class InverseTooSmall(TrexWarning):
    """|<alpha|A^-1|beta>| is not much larger than delta^2 kappa^3."""


class AsymmetricOverlap(TrexWarning):
    pass


class SplitGapWarning(TrexWarning):
    """Perturbed eigenvalues are (numerically) not distinct."""
