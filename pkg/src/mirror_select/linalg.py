"""Dense-matrix primitives, column standardization, and seeded RNG streams.

Every stochastic operation in this package takes an explicit
``numpy.random.Generator``.  Independent substreams for replicated work are
derived from a master seed with :func:`substream`, keyed by a purpose label
and integer indices, so results are byte-identical under any parallel
schedule.  Library functions that replicate internally spawn children from
the generator they were handed (``Generator.spawn``), which follows the same
``SeedSequence`` tree and is equally schedule independent.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConstantColumn, NotPositiveDefinite, TooFewRows

SD_FLOOR = 1e-12
PIVOT_TOL = 1e-12


def substream(master_seed: int, label: str, *indices: int) -> np.random.Generator:
    """Return an independent generator keyed by ``(label, *indices)``.

    The label is hashed (SHA-256) into the ``SeedSequence`` spawn key, so any
    two distinct (label, indices) pairs yield statistically independent
    streams, deterministically, on every platform.
    """
    words = struct.unpack("<2I", hashlib.sha256(label.encode("utf-8")).digest()[:8])
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(*words, *indices))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class Dataset:
    """A response vector and design matrix with standardization metadata.

    ``x`` is n-by-p with every column standardized to mean 0 / sd 1 when
    ``standardized`` is set; ``column_means`` and ``column_sds`` hold the
    statistics of the original columns so the transform can be inverted.
    """

    x: np.ndarray
    y: np.ndarray
    standardized: bool
    column_means: np.ndarray
    column_sds: np.ndarray

    def __post_init__(self):
        n, p = self.x.shape
        if n < 4:
            raise TooFewRows(f"need at least 4 rows, got {n}")
        if p < 2:
            raise ValueError(f"need at least 2 columns, got {p}")
        if self.y.shape != (n,):
            raise ValueError("response length does not match row count")
        if self.standardized:
            if np.abs(self.x.mean(axis=0)).max() > 1e-10:
                raise ValueError("standardized flag set but column means are not 0")
            if np.abs(self.x.std(axis=0) - 1.0).max() > 1e-10:
                raise ValueError("standardized flag set but column sds are not 1")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def make_dataset(x: np.ndarray, y: np.ndarray) -> Dataset:
    """Standardize columns, center the response, and wrap as a Dataset."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xs, means, sds = standardize(x)
    return Dataset(
        x=xs,
        y=y - y.mean(),
        standardized=True,
        column_means=means,
        column_sds=sds,
    )


def standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale every column to mean 0 and standard deviation 1 (denominator n).

    Returns ``(standardized, means, sds)``; raises :class:`ConstantColumn`
    for any column with sd below 1e-12.  The output is Fortran ordered since
    column extraction is the coordinate-descent hot path.
    """
    x = np.asarray(x, dtype=np.float64)
    means = x.mean(axis=0)
    sds = x.std(axis=0)
    bad = np.flatnonzero(sds < SD_FLOOR)
    if bad.size:
        raise ConstantColumn(int(bad[0]))
    out = np.asfortranarray((x - means) / sds)
    return out, means, sds


def unstandardize(xs: np.ndarray, means: np.ndarray, sds: np.ndarray) -> np.ndarray:
    """Invert :func:`standardize`."""
    return xs * sds + means


@dataclass(frozen=True)
class SplitIndex:
    """A disjoint partition of row indices into two halves.

    ``first_half`` has exactly floor(n/2) rows; together the halves cover
    ``range(n)``.
    """

    first_half: np.ndarray
    second_half: np.ndarray

    def __post_init__(self):
        n = self.first_half.size + self.second_half.size
        if self.first_half.size != n // 2:
            raise ValueError("first half must contain floor(n/2) rows")
        merged = np.concatenate([self.first_half, self.second_half])
        if not np.array_equal(np.sort(merged), np.arange(n)):
            raise ValueError("halves must partition range(n)")

    @property
    def n(self) -> int:
        return self.first_half.size + self.second_half.size


def random_split(n: int, rng: np.random.Generator) -> SplitIndex:
    """Draw a uniformly random half/half partition of ``range(n)``."""
    if n < 4:
        raise TooFewRows(f"need at least 4 rows to split, got {n}")
    perm = rng.permutation(n)
    half = n // 2
    return SplitIndex(
        first_half=np.sort(perm[:half]),
        second_half=np.sort(perm[half:]),
    )


def cholesky_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ z = b`` for symmetric positive-definite ``a``.

    Raises :class:`NotPositiveDefinite` when a Cholesky pivot is <= 1e-12.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if b.shape != (a.shape[0],):
        raise ValueError("right-hand side length does not match matrix")
    if not np.allclose(a, a.T, rtol=1e-8, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    factor, ok = _kernels.cholesky_factor(a, PIVOT_TOL)
    if not ok:
        raise NotPositiveDefinite("Cholesky pivot at or below 1e-12")
    return _kernels.cholesky_backsolve(factor, b)
