"""Synthetic data generators for the benchmark scenarios.

Covers the covariance structures (blockwise Toeplitz, constant correlation,
identity), three design-matrix distributions (Gaussian, two-component
Gaussian mixture, multivariate t), sparse linear truths, response
generation, and banded / blockwise-random precision matrices for graph
recovery, including the diagonal positive-definiteness repair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, NotPositiveDefinite, RepairFailed
from .linalg import standardize

TOEPLITZ_BLOCKS = 10  # blockwise-Toeplitz covariance uses 10 equal blocks
REPAIR_MARGIN = 0.005


class CovKind(enum.Enum):
    TOEPLITZ_BLOCK = "toeplitz_block"
    CONSTANT = "constant"
    IDENTITY = "identity"


@dataclass(frozen=True)
class CovarianceSpec:
    kind: CovKind
    size: int
    correlation: float = 0.0

    def __post_init__(self):
        if self.kind is CovKind.TOEPLITZ_BLOCK and self.size % TOEPLITZ_BLOCKS:
            raise BadDimension(
                f"blockwise Toeplitz needs size divisible by {TOEPLITZ_BLOCKS}"
            )
        if self.kind is CovKind.CONSTANT and not 0 <= self.correlation < 1:
            raise ValueError("constant correlation must lie in [0, 1)")


class DesignKind(enum.Enum):
    GAUSSIAN = "gaussian"
    MIXTURE2 = "mixture2"
    STUDENT_T = "student_t"


@dataclass(frozen=True)
class DesignSpec:
    distribution: DesignKind
    covariance: CovarianceSpec
    rows: int
    mixture_offset: float = 0.5
    t_dof: float = 3.0

    def __post_init__(self):
        if self.distribution is DesignKind.STUDENT_T and self.t_dof <= 2:
            raise ValueError("t distribution needs dof > 2 for a covariance")


class GraphKind(enum.Enum):
    BANDED = "banded"
    BLOCK_DIAG = "block_diag"


@dataclass(frozen=True)
class GraphSpec:
    kind: GraphKind
    size: int
    bandwidth: int = 8  # banded: entries vanish beyond this off-diagonal
    band_value: float = -0.6
    decay: float = 1.5
    block: int = 25
    low: float = 0.4
    high: float = 0.8

    def __post_init__(self):
        if self.kind is GraphKind.BANDED:
            if not abs(self.band_value) < 1:
                raise ValueError("band value must satisfy |a| < 1")
            if self.bandwidth < 1:
                raise ValueError("bandwidth must be >= 1")
            if self.decay <= 0:
                raise ValueError("decay must be positive")
        if self.kind is GraphKind.BLOCK_DIAG and self.size % self.block:
            raise BadDimension("block-diagonal graph needs size divisible by block")


@dataclass(frozen=True)
class LinearTruth:
    """A sparse coefficient vector with its signal locations."""

    coef: np.ndarray
    signals: np.ndarray
    signal_strength: float
    noise_sd: float = 1.0


def build_covariance(spec: CovarianceSpec) -> np.ndarray:
    """Construct the covariance matrix described by ``spec``."""
    p = spec.size
    if spec.kind is CovKind.IDENTITY:
        return np.eye(p)
    if spec.kind is CovKind.CONSTANT:
        out = np.full((p, p), spec.correlation)
        np.fill_diagonal(out, 1.0)
        return out
    # Blockwise diagonal with identical Toeplitz blocks whose off-diagonal
    # entries descend linearly from correlation to exactly 0 at the corner.
    block_size = p // TOEPLITZ_BLOCKS
    block = np.eye(block_size)
    if block_size > 1:
        for d in range(1, block_size):
            value = (block_size - 1 - d) * spec.correlation / (block_size - 1)
            idx = np.arange(block_size - d)
            block[idx, idx + d] = value
            block[idx + d, idx] = value
    out = np.zeros((p, p))
    for b in range(TOEPLITZ_BLOCKS):
        lo = b * block_size
        out[lo : lo + block_size, lo : lo + block_size] = block
    return out


def _cholesky_or_raise(matrix: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def sample_design_raw(spec: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw the design matrix before column standardization."""
    sigma = build_covariance(spec.covariance)
    factor = _cholesky_or_raise(sigma)
    n, p = spec.rows, spec.covariance.size
    base = rng.standard_normal((n, p)) @ factor.T
    if spec.distribution is DesignKind.GAUSSIAN:
        return base
    if spec.distribution is DesignKind.MIXTURE2:
        signs = rng.integers(0, 2, size=n) * 2 - 1
        return base + spec.mixture_offset * signs[:, None]
    # Multivariate t with sigma as the scale matrix.
    chi2 = rng.chisquare(spec.t_dof, size=n)
    return base * np.sqrt(spec.t_dof / chi2)[:, None]


def sample_design(spec: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a design matrix and standardize its columns."""
    return standardize(sample_design_raw(spec, rng))[0]


def sample_linear_truth(
    size: int,
    num_signals: int,
    signal_strength: float,
    rows: int,
    rng: np.random.Generator,
    scale_reading: str = "sd",
) -> LinearTruth:
    """Sparse coefficients: signals at uniform locations, Gaussian sizes.

    Nonzero coefficients are centered Gaussian with scale ``signal_strength
    * sqrt(log(size) / rows)``; ``scale_reading`` chooses whether that
    expression is read as the standard deviation (default) or the variance.
    """
    if num_signals > size:
        raise ValueError("more signals than features")
    coef = np.zeros(size)
    signals = np.sort(rng.choice(size, size=num_signals, replace=False))
    scale = signal_strength * math.sqrt(math.log(size) / rows)
    if scale_reading == "variance":
        scale = math.sqrt(scale)
    elif scale_reading != "sd":
        raise ValueError("scale_reading must be 'sd' or 'variance'")
    coef[signals] = scale * rng.standard_normal(num_signals)
    return LinearTruth(coef=coef, signals=signals, signal_strength=signal_strength)


def sample_response(
    x: np.ndarray,
    truth: LinearTruth,
    rng: np.random.Generator,
    add_noise: bool = True,
) -> np.ndarray:
    """y = x @ coef + Gaussian noise, centered.  ``add_noise=False`` is a
    test hook returning the noiseless signal exactly."""
    y = x @ truth.coef
    if add_noise:
        y = y + truth.noise_sd * rng.standard_normal(x.shape[0])
        return y - y.mean()
    return y


def build_precision(
    spec: GraphSpec, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, frozenset[tuple[int, int]]]:
    """Construct a precision matrix and its true (pre-repair) edge set.

    Banded: unit diagonal, sign(a) * |a|^(d / decay) within the band.
    Block-diagonal: unit diagonal, off-diagonal block entries drawn
    uniformly from (-high, -low) + (low, high); requires ``rng``.

    If the smallest eigenvalue is negative the whole diagonal is shifted up
    by its magnitude plus 0.005; edges always refer to the pre-repair
    support.
    """
    p = spec.size
    if spec.kind is GraphKind.BANDED:
        precision = np.eye(p)
        a = spec.band_value
        for d in range(1, min(spec.bandwidth, p - 1) + 1):
            value = math.copysign(abs(a) ** (d / spec.decay), a)
            idx = np.arange(p - d)
            precision[idx, idx + d] = value
            precision[idx + d, idx] = value
    else:
        if rng is None:
            raise ValueError("block-diagonal graph needs an rng for its entries")
        precision = np.eye(p)
        for lo in range(0, p, spec.block):
            for i in range(lo, lo + spec.block):
                for j in range(i + 1, lo + spec.block):
                    magnitude = rng.uniform(spec.low, spec.high)
                    sign = 1.0 if rng.integers(0, 2) else -1.0
                    precision[i, j] = precision[j, i] = sign * magnitude

    rows, cols = np.nonzero(np.triu(precision, k=1))
    edges = frozenset(zip(rows.tolist(), cols.tolist()))

    smallest = float(np.linalg.eigvalsh(precision)[0])
    if smallest < 0:
        precision = precision + (abs(smallest) + REPAIR_MARGIN) * np.eye(p)
        if float(np.linalg.eigvalsh(precision)[0]) <= 0:
            raise RepairFailed("diagonal shift left the matrix non-PD")
    return precision, edges


def sample_gaussian_graph_data(
    spec: GraphSpec, rows: int, rng: np.random.Generator
) -> tuple[np.ndarray, frozenset[tuple[int, int]]]:
    """Draw standardized rows from N(0, precision^-1) for the given graph."""
    precision, edges = build_precision(spec, rng)
    factor = _cholesky_or_raise(precision)
    z = rng.standard_normal((rows, spec.size))
    draws = np.linalg.solve(factor.T, z.T).T
    return standardize(draws)[0], edges
