"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line layer:
0 ok, 2 symmetry absent, 3 numerical failure, 4 validation, 5 size cap.
"""


class SptError(Exception):
    exit_code = 3


class ValidationError(SptError, ValueError):
    exit_code = 4


class DimensionMismatch(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class BadCut(ValidationError):
    pass


class BadParameters(ValidationError):
    pass


class SizeCap(SptError):
    exit_code = 5


class NumericalError(SptError):
    exit_code = 3


class NotNormalizable(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotPrimitive(NumericalError):
    pass


class DegenerateLeading(NumericalError):
    pass


class NonScalarDefect(NumericalError):
    pass


class NonScalar(NumericalError):
    def __init__(self, g, h, defect):
        super().__init__(f"U_g U_h U_gh^* is not scalar for (g, h) = ({g}, {h}); defect {defect:.3e}")
        self.g, self.h, self.defect = g, h, defect


class AmbiguousSymmetry(NumericalError):
    """Mixed transfer modulus falls between the symmetric and non-symmetric thresholds."""


class NoSplit(NumericalError):
    pass


class GapClosed(NumericalError):
    pass


class OdeStepFailure(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class DegeneracyViolated(NumericalError):
    def __init__(self, cluster_value, multiplicity):
        super().__init__(
            f"entanglement eigenvalue {cluster_value:.6g} has odd multiplicity {multiplicity}"
        )
        self.cluster_value, self.multiplicity = cluster_value, multiplicity


class SymmetryAbsent(SptError):
    exit_code = 2


class NotTimeReversalInvariant(SymmetryAbsent):
    pass


class NotGroupInvariant(SymmetryAbsent):
    def __init__(self, g, modulus):
        super().__init__(f"state is not invariant under group element {g!r} (mixed modulus {modulus:.6f})")
        self.g, self.modulus = g, modulus
