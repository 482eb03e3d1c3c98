"""Exception types shared across the package."""


class NVEngineError(Exception):
    """Base class for all package-specific errors."""


class DegeneracyError(NVEngineError):
    """Eigenproblem is degenerate or too ill-conditioned to resolve."""


class StiffnessError(NVEngineError):
    """Adaptive ODE integration failed (step-size underflow)."""


class PartitionError(NVEngineError):
    """Slow/fast eigenpair classification is ambiguous."""


class ReductionError(NVEngineError):
    """Reduced-operator construction failed (singular reduced basis)."""


class FitError(NVEngineError):
    """Nonlinear fit did not converge."""


class KernelError(NVEngineError):
    """Measurement kernel is outside its validity regime."""


class ConstraintError(NVEngineError):
    """Constraint solve (root find) failed."""


class PropagationError(NVEngineError):
    """Monte-Carlo propagation had too many failed evaluations."""
