"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`QuasidiagError`, so callers (and the CLI) can map failure classes
to exit codes without catching unrelated exceptions.
"""


class QuasidiagError(ValueError):
    """Base class for all package errors."""


# input validation ----------------------------------------------------------

class InvalidInput(QuasidiagError):
    """Malformed matrix, word or configuration."""


class OddDimension(InvalidInput):
    pass


class NotSymplectic(InvalidInput):
    def __init__(self, residual, tol=None):
        self.residual = float(residual)
        self.tol = tol
        msg = f"matrix is not symplectic (residual {self.residual:.3e}"
        if tol is not None:
            msg += f" > tol {tol:.3e}"
        super().__init__(msg + ")")


class NonSymmetricP(InvalidInput):
    pass


class SingularE(InvalidInput):
    pass


class WrongDimension(InvalidInput):
    pass


# numerical linear algebra --------------------------------------------------

class RankAmbiguous(QuasidiagError):
    """A singular value sits too close to the rank cutoff to decide the rank."""

    def __init__(self, gap, which=""):
        self.gap = float(gap)
        self.which = which
        where = f" of {which}" if which else ""
        super().__init__(f"ambiguous numerical rank{where}: singular-value gap ratio {self.gap:.3e}")


class NotApplicable(QuasidiagError):
    pass


class NotIntegrable(QuasidiagError):
    pass


class SingularM1(QuasidiagError):
    pass


class SingularSchur(QuasidiagError):
    pass


class SingularB(QuasidiagError):
    pass


class BNotZero(QuasidiagError):
    pass


class ConditioningFailure(QuasidiagError):
    pass


# grid computations ---------------------------------------------------------

class NumericalPrecondition(QuasidiagError):
    """A grid computation would violate a sampling or extent requirement."""


class CenterOutOfRange(NumericalPrecondition):
    pass


class AliasRisk(NumericalPrecondition):
    def __init__(self, report):
        self.report = dict(report)
        super().__init__(
            "chirp exceeds the grid Nyquist bound: "
            + ", ".join(f"{k}={v:.4g}" for k, v in self.report.items())
        )


class ExtentOverflow(NumericalPrecondition):
    pass


class GridMismatch(NumericalPrecondition):
    pass


class DimensionTooLarge(NumericalPrecondition):
    pass


class InsufficientSamples(NumericalPrecondition):
    pass


class QuadratureWarning(UserWarning):
    """Sampled functions carry non-negligible mass at the grid boundary."""


class InvalidGrid(NumericalPrecondition):
    pass
