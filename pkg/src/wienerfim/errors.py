"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI copies
into its error report.
"""


class WienerFimError(Exception):
    code = "error"


class DimensionError(WienerFimError, ValueError):
    code = "dimension"


class ConstraintError(WienerFimError, ValueError):
    code = "constraint"


class NormalizationError(ConstraintError):
    code = "normalization"


class StabilityError(WienerFimError, ValueError):
    code = "unstable"


class InputSpecError(WienerFimError, ValueError):
    code = "input_spec"


class DegenerateOutputError(WienerFimError, ArithmeticError):
    code = "degenerate_output"


class DegenerateNonlinearityError(WienerFimError, ArithmeticError):
    code = "degenerate_nonlinearity"


class ConditioningError(WienerFimError, ArithmeticError):
    code = "ill_conditioned"


class StepSizeError(WienerFimError, ArithmeticError):
    code = "step_size"


class BudgetError(WienerFimError, ValueError):
    code = "infeasible"


# Errors that stem from the numbers rather than the shape of the input.
NUMERICAL_ERRORS = (
    StabilityError,
    DegenerateOutputError,
    DegenerateNonlinearityError,
    ConditioningError,
    StepSizeError,
)
