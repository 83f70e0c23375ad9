"""Exception hierarchy shared by every stage of the identification pipeline."""


class IdentificationError(Exception):
    """Base class; ``stage`` names the module that raised it."""

    stage = "isindy"


class InputError(IdentificationError, ValueError):
    """Invalid user-supplied data or configuration (CLI exit code 2)."""


class NonUniformGrid(InputError):
    stage = "core_types"

    def __init__(self, index, delta, h):
        self.index = index
        self.delta = delta
        self.h = h
        super().__init__(
            f"time step {index} has delta {delta!r}, expected uniform step {h!r}"
        )


class NonFinite(InputError):
    stage = "core_types"

    def __init__(self, row=None, column=None, what="value"):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"non-finite {what} at {', '.join(where) or 'unknown position'}")


class TooShort(InputError):
    stage = "core_types"

    def __init__(self, n, minimum=3):
        self.n = n
        super().__init__(f"need at least {minimum} samples, got {n}")


class DimensionMismatch(InputError):
    stage = "features"


class BadRange(InputError):
    stage = "basis"


class TooFewSegments(InputError):
    stage = "basis"


class OutOfDomain(IdentificationError, ValueError):
    stage = "basis"


class SingularSystem(IdentificationError, ArithmeticError):
    stage = "smoothing"

    def __init__(self, rho, detail=""):
        self.rho = rho
        msg = f"penalized normal equations are singular at rho={rho!r}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class RankDeficient(IdentificationError, ArithmeticError):
    stage = "solver"

    def __init__(self, condition, detail=""):
        self.condition = condition
        msg = f"design matrix is rank deficient (condition estimate {condition:.3e})"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class Underdetermined(IdentificationError, ValueError):
    stage = "solver"


class EmptySupport(IdentificationError):
    stage = "solver"

    def __init__(self, column, iteration):
        self.column = column
        self.iteration = iteration
        super().__init__(
            f"thresholding removed every feature for column {column} "
            f"at iteration {iteration}"
        )


class NoConvergence(IdentificationError):
    stage = "solver"

    def __init__(self, column, iterations):
        self.column = column
        self.iterations = iterations
        super().__init__(
            f"support of column {column} still changing after {iterations} iterations"
        )


class BlowUp(IdentificationError, ArithmeticError):
    stage = "odeint"

    def __init__(self, step, magnitude):
        self.step = step
        self.magnitude = magnitude
        super().__init__(f"state magnitude {magnitude:.3e} exceeds 1e12 at step {step}")
