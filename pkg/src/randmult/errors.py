"""Exceptions raised by the numerical kernels."""


class NumericalFailure(ArithmeticError):
    """Base class for failures that a randomized caller may retry with a fresh seed."""


class RankDeficientError(NumericalFailure):
    def __init__(self, index, value, threshold):
        self.index = index
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"column {index} is numerically dependent: |R[{index},{index}]| = "
            f"{value:.3e} <= {threshold:.3e}"
        )


class SingularMatrixError(NumericalFailure):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class ZeroPivotError(NumericalFailure):
    """GENP met a (numerically) vanishing pivot.

    ``step`` is 1-based, so a failure at step j means the leading j-by-j
    block of the input is numerically singular.
    """

    def __init__(self, step, pivot, threshold):
        self.step = step
        self.pivot = pivot
        self.threshold = threshold
        super().__init__(
            f"zero pivot at step {step}: |p| = {abs(pivot):.3e} <= {threshold:.3e}"
        )


class SingularPivotBlockError(NumericalFailure):
    def __init__(self, position, size, sigma_min, threshold):
        self.position = position
        self.size = size
        self.sigma_min = sigma_min
        self.threshold = threshold
        super().__init__(
            f"pivot block at offset {position} (size {size}) is numerically singular: "
            f"sigma_min = {sigma_min:.3e} <= {threshold:.3e}"
        )


class SvdConvergenceError(NumericalFailure):
    def __init__(self, message, iterations=None):
        self.iterations = iterations
        super().__init__(message)
