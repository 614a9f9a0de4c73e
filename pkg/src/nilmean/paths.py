"""Iterated-integrals signatures of piecewise-linear paths and Brownian motion.

A linear segment's signature is the exponential of its increment placed at
level one; a piecewise-linear path multiplies its segments together (the
signature is multiplicative under concatenation).  Brownian paths are
simulated as piecewise-linear interpolations of exact Gaussian increments,
and the closed-form expected signature exp(Sigma/2 at level two) serves as
the Monte-Carlo oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensor import Shape, TruncatedTensor, exp, mul

__all__ = [
    "PiecewiseLinearPath",
    "CovarianceMatrix",
    "sig_segment",
    "sig_pwl",
    "expected_sig_bm",
    "sample_bm_signature",
    "sample_bm_signatures",
]


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Observation rows of a d-dimensional path; consecutive rows are segments."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("a path needs a T x d array with T >= 1")
        if not np.isfinite(pts).all():
            raise ValueError("path contains non-finite entries")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def increments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)


def sig_segment(increment, shape: Shape) -> TruncatedTensor:
    """Signature of one linear segment: exp of the increment at level one."""
    increment = np.asarray(increment, dtype=float)
    if increment.shape != (shape.d,):
        raise ValueError(f"increment has shape {increment.shape}, expected ({shape.d},)")
    x = TruncatedTensor.zero(shape)
    x.levels[1] = increment.copy()
    return exp(x)


def sig_pwl(path: PiecewiseLinearPath, shape: Shape) -> TruncatedTensor:
    """Signature of a piecewise-linear path; a single point gives the identity."""
    if path.dim != shape.d:
        raise ValueError(f"path dimension {path.dim} does not match d={shape.d}")
    incs = path.increments()
    if len(incs) == 0:
        return TruncatedTensor.identity(shape)
    levels = _segment_exps_batch(incs, shape)
    levels = _chen_reduce_batch(levels, shape)
    return TruncatedTensor(shape, [lv[0] for lv in levels])


def _segment_exps_batch(incs: np.ndarray, shape: Shape):
    """Per-level arrays of shape (n_segments, d^k) holding each segment's exp."""
    n = incs.shape[0]
    levels = [np.ones((n, 1))]
    for k in range(1, shape.L + 1):
        levels.append(
            np.einsum("bp,bq->bpq", levels[-1], incs).reshape(n, -1) / k
        )
    return levels


def _batch_mul(a_levels, b_levels, shape: Shape):
    out = []
    for k in range(shape.L + 1):
        acc = np.zeros_like(a_levels[k])
        for l in range(k + 1):
            acc += np.einsum("bp,bq->bpq", a_levels[l], b_levels[k - l]).reshape(acc.shape)
        out.append(acc)
    return out


def _chen_reduce_batch(levels, shape: Shape):
    """Pairwise tree of Chen products along the batch axis."""
    while levels[0].shape[0] > 1:
        n = levels[0].shape[0]
        half, odd = n // 2, n % 2
        left = [lv[0 : 2 * half : 2] for lv in levels]
        right = [lv[1 : 2 * half : 2] for lv in levels]
        merged = _batch_mul(left, right, shape)
        if odd:
            merged = [np.concatenate([m, lv[-1:]]) for m, lv in zip(merged, levels)]
        levels = merged
    return levels


class CovarianceMatrix:
    """Symmetric positive-definite d x d matrix; exact entries are preserved."""

    def __init__(self, sigma):
        if isinstance(sigma, np.ndarray) or not _is_exact_matrix(sigma):
            sigma = np.asarray(sigma, dtype=float)
            if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
                raise ValueError("covariance must be square")
            if np.abs(sigma - sigma.T).max() > 1e-12:
                raise ValueError("covariance must be symmetric to 1e-12")
            sigma = 0.5 * (sigma + sigma.T)
            try:
                np.linalg.cholesky(sigma)
            except np.linalg.LinAlgError:
                raise ValueError("covariance must be positive definite")
            self.exact = False
        else:
            sigma = [[Fraction(v) for v in row] for row in sigma]
            n = len(sigma)
            if any(len(row) != n for row in sigma):
                raise ValueError("covariance must be square")
            if any(sigma[i][j] != sigma[j][i] for i in range(n) for j in range(n)):
                raise ValueError("covariance must be symmetric")
            for k in range(1, n + 1):
                if _exact_det([row[:k] for row in sigma[:k]]) <= 0:
                    raise ValueError("covariance must be positive definite (leading minors > 0)")
            self.exact = True
        self.sigma = sigma

    @property
    def dim(self) -> int:
        return len(self.sigma)

    def cholesky(self) -> np.ndarray:
        if self.exact:
            return np.linalg.cholesky(np.array(self.sigma, dtype=float))
        return np.linalg.cholesky(self.sigma)


def _is_exact_matrix(sigma) -> bool:
    try:
        return all(isinstance(v, (int, Fraction)) for row in sigma for v in row)
    except TypeError:
        return False


def _exact_det(m) -> Fraction:
    n = len(m)
    if n == 1:
        return Fraction(m[0][0])
    total = Fraction(0)
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        total += (-1) ** j * Fraction(m[0][j]) * _exact_det(minor)
    return total


def expected_sig_bm(sigma: CovarianceMatrix, shape: Shape) -> TruncatedTensor:
    """Expected signature of Brownian motion on [0, 1]: exp(Sigma/2 at level two).

    Even level 2k carries (Sigma/2)^(x)k / k!, odd levels vanish.  With an
    exact covariance the result is exact-rational.
    """
    if sigma.dim != shape.d:
        raise ValueError(f"covariance dimension {sigma.dim} does not match d={shape.d}")
    if shape.L < 2:
        return TruncatedTensor.identity(shape, exact=sigma.exact)
    x = TruncatedTensor.zero(shape, exact=sigma.exact)
    if sigma.exact:
        flat = [v / 2 for row in sigma.sigma for v in row]
        x.levels[2] = [Fraction(v) for v in flat]
    else:
        x.levels[2] = (np.asarray(sigma.sigma) / 2.0).ravel()
    return exp(x)


def sample_bm_signature(
    sigma: CovarianceMatrix, n_steps: int, seed, shape: Shape, index: int = 0
) -> TruncatedTensor:
    """Signature of one simulated Brownian path on [0, 1].

    The path is the piecewise-linear interpolation of n_steps exact Gaussian
    increments scaled by a square root of the covariance; the random stream is
    derived from (seed, index) so batches are reproducible sample by sample.
    """
    if n_steps < 1:
        raise ValueError("need n_steps >= 1")
    incs = _bm_increments(sigma, n_steps, seed, index)
    levels = _chen_reduce_batch(_segment_exps_batch(incs, shape), shape)
    return TruncatedTensor(shape, [lv[0] for lv in levels])


def _bm_increments(sigma: CovarianceMatrix, n_steps: int, seed, index: int) -> np.ndarray:
    rng = np.random.default_rng((seed, index))
    gauss = rng.standard_normal((n_steps, sigma.dim)) / np.sqrt(n_steps)
    return gauss @ sigma.cholesky().T


def sample_bm_signatures(
    sigma: CovarianceMatrix, n_steps: int, seed, shape: Shape, n_samples: int, workers: int = 1
) -> list[TruncatedTensor]:
    """Signatures of n_samples independent Brownian paths (streams (seed, 0..n-1)).

    Samples are independent, so chunks may be computed in parallel worker
    threads; the output order (and therefore every downstream reduction) is
    fixed by the sample index either way.
    """
    indices = list(range(n_samples))
    if workers <= 1 or n_samples < 4:
        return _sample_chunk(sigma, n_steps, seed, shape, indices)
    from concurrent.futures import ThreadPoolExecutor

    chunks = [indices[i::workers] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda ch: _sample_chunk(sigma, n_steps, seed, shape, ch), chunks))
    out: list[TruncatedTensor | None] = [None] * n_samples
    for chunk, part in zip(chunks, parts):
        for idx, t in zip(chunk, part):
            out[idx] = t
    return out


def _sample_chunk(sigma, n_steps, seed, shape, indices):
    sigs = []
    for i in indices:
        incs = _bm_increments(sigma, n_steps, seed, i)
        lv = _chen_reduce_batch(_segment_exps_batch(incs, shape), shape)
        sigs.append(TruncatedTensor(shape, [x[0] for x in lv]))
    return sigs
