"""Exception hierarchy shared across the package."""


class MirrorSelectError(Exception):
    """Base class for all errors raised by this package."""


class ConstantColumn(MirrorSelectError):
    """A design column has (near-)zero variance and cannot be standardized."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} is constant (sd < 1e-12)")


class TooFewRows(MirrorSelectError):
    """Not enough observations for the requested operation."""


class NotPositiveDefinite(MirrorSelectError):
    """A Cholesky pivot fell at or below the tolerance."""


class DidNotConverge(MirrorSelectError):
    """Coordinate descent hit the sweep cap.

    The partial fit is attached as ``fit`` so the caller can decide whether
    to use it anyway.
    """

    def __init__(self, fit):
        self.fit = fit
        super().__init__(
            f"lasso did not converge within {fit.n_sweeps} sweeps "
            f"(penalty={fit.penalty:g})"
        )


class RankDeficient(MirrorSelectError):
    """The restricted Gram matrix is numerically singular."""


class TooManyFeatures(MirrorSelectError):
    """More features than observations in a least-squares fit."""


class BadDimension(MirrorSelectError):
    """A structured-matrix spec has an incompatible dimension."""


class RepairFailed(MirrorSelectError):
    """Diagonal repair left a precision matrix non positive definite."""


class ConfigError(MirrorSelectError):
    """An experiment configuration document is invalid."""
