"""Exception types raised by the estimation pipeline."""


class DegenerateSpectrumError(ValueError):
    """An eigen-direction carries (numerically) no sliced variance."""

    def __init__(self, direction, eigenvalue):
        self.direction = direction
        self.eigenvalue = eigenvalue
        super().__init__(
            f"direction {direction} has eigenvalue {eigenvalue:.3e}, "
            "too small to build a pseudo-response"
        )


class SingularCovarianceError(ValueError):
    """The (screened) sample covariance could not be inverted, even with a ridge."""


class EmptyPathError(ValueError):
    """The response is orthogonal to every predictor, so no penalty grid exists."""


class DataFormatError(ValueError):
    """Input file could not be parsed into a numeric design."""
