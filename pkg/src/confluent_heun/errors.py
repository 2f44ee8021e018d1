"""Exception hierarchy shared by every module.

Each class carries a short machine-readable ``code`` that the CLI writes
into its error records.
"""


class HeunError(Exception):
    """Base class; keyword arguments are kept as ``context`` for reports."""

    code = "E_HEUN"

    def __init__(self, message="", **context):
        super().__init__(message)
        self.context = context

    def to_record(self):
        """Machine-readable error record."""
        return {"error": self.code, "type": type(self).__name__, "message": str(self)}


class ConfigError(HeunError, ValueError):
    code = "E_CONFIG"


class OutsideDomain(HeunError, ValueError):
    code = "E_DOMAIN"


class PoleAtC(HeunError, ValueError):
    code = "E_POLE_C"


class NonPositiveIntegerA(HeunError, ValueError):
    code = "E_BETA_A"


class GammaPole(HeunError, ValueError):
    code = "E_GAMMA_POLE"


class NoConvergence(HeunError, ArithmeticError):
    code = "E_NO_CONVERGENCE"


class IndicialDegeneracy(HeunError, ValueError):
    code = "E_INDICIAL"


class OutsideRadius(OutsideDomain):
    code = "E_RADIUS"


class PathTooCloseToSingularity(HeunError, ValueError):
    code = "E_PATH"


class StepUnderflow(HeunError, ArithmeticError):
    code = "E_STEP"


class AtSingularity(HeunError, ValueError):
    code = "E_SINGULAR"


class BranchAmbiguity(HeunError, ValueError):
    code = "E_BRANCH"


class AlphaZero(HeunError, ValueError):
    code = "E_ALPHA_ZERO"


class EpsilonZero(HeunError, ValueError):
    code = "E_EPSILON_ZERO"


class IrregularPoint(HeunError, ValueError):
    code = "E_IRREGULAR"


class NotAnExponent(HeunError, ValueError):
    code = "E_NOT_EXPONENT"


class InvalidMu(NotAnExponent):
    code = "E_INVALID_MU"


class Resonance(HeunError, ArithmeticError):
    code = "E_RESONANCE"


class ConditionViolated(HeunError, ValueError):
    code = "E_CONDITION"


class Unavailable(HeunError, LookupError):
    code = "E_UNAVAILABLE"


class ProbeDegenerate(HeunError, ArithmeticError):
    code = "E_PROBE"


class ProbesDisagree(HeunError, ArithmeticError):
    code = "E_PROBES_DISAGREE"


class DegenerateGammaDelta(HeunError, ValueError):
    code = "E_DEGENERATE"


class DegreeMismatch(HeunError, ArithmeticError):
    code = "E_DEGREE"


class CertificationFailed(HeunError, ArithmeticError):
    code = "E_CERTIFICATION"


class NonFiniteInput(HeunError, ValueError):
    code = "E_NONFINITE"


class CountMismatch(HeunError):
    code = "E_COUNT"
