"""Exception hierarchy shared by every stage of the pipeline."""


class GridModalError(Exception):
    """Base class for all toolkit errors."""


# -- case description ---------------------------------------------------------

class CaseError(GridModalError):
    """Invalid or unreadable case description."""


class MalformedCase(CaseError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")


class DuplicateId(CaseError):
    pass


class NoSlackBus(CaseError):
    pass


class MultipleSlackBuses(CaseError):
    pass


class UnitOnPqBus(CaseError):
    pass


class NonPositiveVoltage(GridModalError, ValueError):
    pass


class DegenerateLine(GridModalError, ValueError):
    pass


# -- power flow ---------------------------------------------------------------

class PowerFlowError(GridModalError):
    pass


class Diverged(PowerFlowError):
    def __init__(self, iterations, mismatch):
        self.iterations = iterations
        self.mismatch = mismatch
        super().__init__(f"no convergence after {iterations} iterations "
                         f"(mismatch {mismatch:.3e} pu)")


class SingularJacobian(PowerFlowError):
    def __init__(self, iteration):
        self.iteration = iteration
        super().__init__(f"singular Jacobian at iteration {iteration}")


# -- dynamic model ------------------------------------------------------------

class InitializationFailed(GridModalError):
    def __init__(self, unit, residual):
        self.unit = unit
        self.residual = residual
        super().__init__(f"initialization of {unit!r} failed "
                         f"(residual {residual:.3e})")


class LimitBindingAtEquilibrium(InitializationFailed):
    def __init__(self, unit, limit, value=float("nan")):
        self.limit = limit
        self.value = value
        GridModalError.__init__(
            self, f"{unit}: limit {limit} binds at equilibrium (value {value:.6g})")
        self.unit = unit
        self.residual = float("nan")


class NoGeneratorAtPvBus(GridModalError):
    pass


class SingularStator(GridModalError, ZeroDivisionError):
    pass


# -- small signal -------------------------------------------------------------

class SingularAlgebraicJacobian(GridModalError):
    pass


class NotAtEquilibrium(GridModalError):
    pass


class NoConvergence(GridModalError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"eigenvalue iteration failed to converge at index {index}")


class ZeroEigenvalue(GridModalError, ValueError):
    pass


class DefectiveMode(GridModalError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"mode {index} has (numerically) orthogonal left and "
                         "right eigenvectors")


# -- time domain --------------------------------------------------------------

class SimulationError(GridModalError):
    pass


class NewtonFailure(SimulationError):
    def __init__(self, t, residual):
        self.t = t
        self.residual = residual
        super().__init__(f"Newton iteration failed at t={t:.6g} s "
                         f"(residual {residual:.3e})")


class StepUnderflow(SimulationError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"step size underflow at t={t:.6g} s")


class UnknownTarget(GridModalError, KeyError):
    pass
