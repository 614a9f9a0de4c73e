"""Bi-invariant group means of weighted grouplike samples.

Four independent algorithms compute the same mean m, defined by the vanishing
of the weighted average of log(m^-1 x) over the samples:

* ``lyndon``  -- coordinatewise recursion through precomputed correction
                 polynomials (the reduced family by default),
* ``ambient`` -- level-by-level recursion on raw tensor blocks, no symbolic
                 precomputation,
* ``abch``    -- level recursion through the asymmetrized BCH series,
                 evaluated numerically with the ad-operator series,
* ``pi1``     -- level recursion using the permutation projection of the
                 first kind.

All four agree to rounding error; cross-checking them is the package's main
self-validation device.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lyndon import LyndonBasis, get_basis
from .polynomials import RationalPoly, generate_abch_r, generate_p, generate_r, taylor_update_terms
from .tensor import (
    AdPowerSeries,
    Shape,
    TruncatedTensor,
    apply_ad_series,
    exp,
    inv,
    log,
    mul,
    pi1_level,
)

__all__ = [
    "DiscreteMeasure",
    "BarycenterResult",
    "ToleranceError",
    "residual",
    "naive_mean",
    "translate_measure",
    "barycenter",
    "barycenter_lyndon",
    "barycenter_ambient",
    "barycenter_abch",
    "barycenter_pi1",
    "online_update",
    "cached_family",
    "ALGORITHMS",
]

WEIGHT_SUM_TOL = 1e-12


class ToleranceError(RuntimeError):
    """A numerical check (residual, agreement) exceeded its tolerance."""


class DiscreteMeasure:
    """Weighted list of grouplike samples; weights must sum to one."""

    def __init__(self, samples, weights=None):
        samples = list(samples)
        if not samples:
            raise ValueError("a measure needs at least one sample")
        shape = samples[0].shape
        for s in samples:
            if s.shape != shape:
                raise ValueError("all samples must share one shape")
            if s.levels[0][0] != 1:
                raise ValueError("samples must be grouplike (constant term 1)")
        if weights is None:
            weights = np.full(len(samples), 1.0 / len(samples))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(samples),):
            raise ValueError("need exactly one weight per sample")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        if (weights < 0).any():
            warnings.warn("negative weights: the recursions stay well-defined, "
                          "but this is no longer a probability measure")
        self.samples = samples
        self.weights = weights

    @property
    def shape(self) -> Shape:
        return self.samples[0].shape

    def __len__(self) -> int:
        return len(self.samples)

    def coefficient_scale(self) -> float:
        """max(1, largest |coefficient| over samples); normalizes tolerances."""
        return max(1.0, max(s.norm_inf() for s in self.samples))


@dataclass
class BarycenterResult:
    mean: TruncatedTensor
    lyndon_coords: np.ndarray
    residual_norm: float
    algorithm: str


def _pairwise(items, combine):
    """Fixed-shape pairwise tree reduction; deterministic regardless of scheduling."""
    items = list(items)
    while len(items) > 1:
        items = [
            combine(items[i], items[i + 1]) if i + 1 < len(items) else items[i]
            for i in range(0, len(items), 2)
        ]
    return items[0]


def _weighted_tensor_sum(tensors, weights) -> TruncatedTensor:
    return _pairwise([t.scale(w) for t, w in zip(tensors, weights)], lambda a, b: a + b)


def _weighted_block_sum(blocks, weights):
    return _pairwise([w * b for b, w in zip(blocks, weights)], lambda a, b: a + b)


def residual(m: TruncatedTensor, nu: DiscreteMeasure) -> TruncatedTensor:
    """Weighted average of log(m^-1 x) over the samples; zero at the barycenter."""
    if m.shape != nu.shape:
        raise ValueError("shape mismatch between candidate mean and measure")
    mi = inv(m)
    return _weighted_tensor_sum([log(mul(mi, x)) for x in nu.samples], nu.weights)


def naive_mean(nu: DiscreteMeasure) -> TruncatedTensor:
    """exp of the weighted average of logs; not translation invariant."""
    return exp(_weighted_tensor_sum([log(x) for x in nu.samples], nu.weights))


def translate_measure(nu: DiscreteMeasure, g: TruncatedTensor, side: str = "left") -> DiscreteMeasure:
    if g.shape != nu.shape:
        raise ValueError("shape mismatch between translation and measure")
    if side == "left":
        moved = [mul(g, x) for x in nu.samples]
    elif side == "right":
        moved = [mul(x, g) for x in nu.samples]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return DiscreteMeasure(moved, nu.weights)


# -- polynomial-family plumbing ---------------------------------------------------


@lru_cache(maxsize=None)
def cached_family(d: int, L: int, kind: str = "r"):
    """Correction-polynomial family for a shape, computed once per process."""
    shape = Shape(d, L)
    if kind == "r":
        return tuple(generate_r(shape))
    if kind == "p":
        return tuple(generate_p(shape))
    if kind == "abch":
        return tuple(generate_abch_r(shape))
    raise ValueError(f"unknown family kind {kind!r}")


def _compile_terms(poly: RationalPoly):
    """Float evaluation plan: (coefficient, M indices, C indices), 0-based, repeated per exponent."""
    plan = []
    for (m_part, c_part), coeff in poly.terms():
        m_idx = tuple(i - 1 for i, e in m_part for _ in range(e))
        c_idx = tuple(i - 1 for i, e in c_part for _ in range(e))
        plan.append((float(coeff), m_idx, c_idx))
    return plan


@lru_cache(maxsize=None)
def _compiled_family(d: int, L: int, kind: str):
    return [_compile_terms(p) for p in cached_family(d, L, kind)]


def _eval_terms_batch(plan, m_vec, c_mat):
    """Evaluate one compiled polynomial at (m_vec, row of c_mat) for every row."""
    n = c_mat.shape[0]
    acc = np.zeros(n)
    for coeff, m_idx, c_idx in plan:
        v = coeff
        for i in m_idx:
            v *= m_vec[i]
        if not v:
            continue
        col = np.full(n, v)
        for i in c_idx:
            col = col * c_mat[:, i]
        acc += col
    return acc


# -- algorithm 1: Lyndon-coordinate recursion --------------------------------------


def barycenter_lyndon(nu: DiscreteMeasure, polys=None, family: str = "r") -> BarycenterResult:
    """Coordinate recursion m_j = sum_i w_i (c_j + correction_j(m, c^i)).

    ``family`` selects the corrections: the reduced family "r" (default, fewer
    terms), the raw group-law family "p" (evaluated at negated mean
    coordinates), or the asymmetrized-BCH family "abch".
    """
    shape = nu.shape
    basis = get_basis(shape.d, shape.L)
    if polys is None:
        plans = _compiled_family(shape.d, shape.L, family)
    else:
        plans = [_compile_terms(p) for p in polys]
    if len(plans) != basis.dim:
        raise ValueError(f"family has {len(plans)} polynomials, basis needs {basis.dim}")
    c_mat = np.array([basis.from_tensor(log(x)) for x in nu.samples])
    w = nu.weights
    m = np.zeros(basis.dim)
    for j in range(basis.dim):
        m_arg = -m if family == "p" else m
        corr = _eval_terms_batch(plans[j], m_arg, c_mat)
        m[j] = _weighted_block_sum(c_mat[:, j] + corr, w)
    mean = exp(basis.to_tensor(m))
    return _result(mean, nu, "lyndon", coords=m)


# -- algorithm 2: ambient level recursion -------------------------------------------


def barycenter_ambient(nu: DiscreteMeasure) -> BarycenterResult:
    """Level-by-level construction of a = m^-1 from raw tensor blocks."""
    shape = nu.shape
    d, L = shape.d, shape.L
    n = len(nu)
    w = nu.weights
    x = nu.samples
    a = [np.zeros(sz) for sz in shape.level_sizes]
    a[0][0] = 1.0
    a[1] = -_weighted_block_sum([xi.levels[1] for xi in x], w)
    # q[i][k] = (a x^i)_k - a_k; v[i][k] = (a x^i - e)_k; vpow[i][j][k] = ((v^i)^j)_k
    q = [[None] * (L + 1) for _ in range(n)]
    v = [[None] * (L + 1) for _ in range(n)]
    vpow = [[None] * (L + 1) for _ in range(n)]
    for i in range(n):
        q[i][1] = x[i].levels[1]
    for K in range(2, L + 1):
        contributions = []
        for i in range(n):
            v[i][K - 1] = a[K - 1] + q[i][K - 1]
            vpow[i][1] = v[i]
            q[i][K] = sum(
                np.multiply.outer(a[k], x[i].levels[K - k]).ravel() for k in range(K)
            )
            p_K = np.zeros(d**K)
            for j in range(2, K + 1):
                if vpow[i][j] is None:
                    vpow[i][j] = [None] * (L + 1)
                block = sum(
                    np.multiply.outer(vpow[i][j - 1][k], v[i][K - k]).ravel()
                    for k in range(j - 1, K)
                )
                vpow[i][j][K] = block
                p_K += ((-1) ** (j + 1) / j) * block
            contributions.append(q[i][K] + p_K)
        a[K] = -_weighted_block_sum(contributions, w)
    mean = inv(TruncatedTensor(shape, a))
    return _result(mean, nu, "ambient")


# -- algorithm 3: asymmetrized BCH level recursion -----------------------------------


def barycenter_abch(nu: DiscreteMeasure) -> BarycenterResult:
    """Level recursion b_K = -sum_i w_i (asymmetrized BCH of (b, log x^i))_K.

    The series is evaluated numerically as f(ad_b)(log(exp(b) x) - b) with
    f(t) = (1 - e^-t)/t, which strips the parts linear in the sample; level K
    of the result depends on b only below level K, so the recursion closes.
    """
    shape = nu.shape
    f_series = AdPowerSeries.bch_linear_part_inverse(shape.L)
    logs = [log(x) for x in nu.samples]
    b = TruncatedTensor.zero(shape)
    b.levels[1] = -_weighted_block_sum([li.levels[1] for li in logs], nu.weights)
    for K in range(2, shape.L + 1):
        eb = exp(b)
        blocks = []
        for xi in nu.samples:
            t = apply_ad_series(f_series, b, log(mul(eb, xi)) - b)
            blocks.append(t.levels[K])
        b.levels[K] = -_weighted_block_sum(blocks, nu.weights)
    mean = exp(b.scale(-1.0))
    return _result(mean, nu, "abch")


# -- algorithm 4: projection-of-the-first-kind recursion ------------------------------


def barycenter_pi1(nu: DiscreteMeasure, level_cap: int = 8) -> BarycenterResult:
    """Level recursion on log m via the permutation projection.

    (log m)_s is the weighted average of sample log levels plus the projection
    of the cross terms a_(s-k) (x) xbar_k, with a = m^-1 rebuilt as levels of
    log m are filled in.
    """
    shape = nu.shape
    if shape.L > level_cap:
        raise ValueError(f"truncation level {shape.L} exceeds the pi1 level cap {level_cap}")
    logs = [log(x) for x in nu.samples]
    xbar = _weighted_tensor_sum(nu.samples, nu.weights)
    log_m = TruncatedTensor.zero(shape)
    a = TruncatedTensor.identity(shape)
    for s in range(1, shape.L + 1):
        avg_log = _weighted_block_sum([li.levels[s] for li in logs], nu.weights)
        cross = np.zeros(shape.d**s)
        for k in range(1, s):
            cross += np.multiply.outer(a.levels[s - k], xbar.levels[k]).ravel()
        log_m.levels[s] = avg_log + pi1_level(cross, s, shape.d)
        a = exp(log_m.scale(-1.0))
    mean = exp(log_m)
    return _result(mean, nu, "pi1")


ALGORITHMS = {
    "lyndon": barycenter_lyndon,
    "ambient": barycenter_ambient,
    "abch": barycenter_abch,
    "pi1": barycenter_pi1,
}


def barycenter(nu: DiscreteMeasure, algorithm: str = "ambient", **kwargs) -> BarycenterResult:
    try:
        algo = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; pick one of {sorted(ALGORITHMS)}")
    return algo(nu, **kwargs)


def _result(mean, nu, name, coords=None) -> BarycenterResult:
    if coords is None:
        basis = get_basis(nu.shape.d, nu.shape.L)
        coords = np.asarray(basis.from_tensor(log(mean)))
    return BarycenterResult(
        mean=mean,
        lyndon_coords=np.asarray(coords, dtype=float),
        residual_norm=residual(mean, nu).norm_inf(),
        algorithm=name,
    )


# -- online update ---------------------------------------------------------------------


@lru_cache(maxsize=None)
def _update_tables(d: int, L: int):
    """Per-coordinate (base plan, [(alpha, alpha!, |alpha|, derivative plan)])."""
    p_family = cached_family(d, L, "p")
    tables = []
    for j, p_j in enumerate(p_family, start=1):
        p_tilde = p_j + RationalPoly.c_symbol(j)
        derivs = []
        for alpha, dpoly in taylor_update_terms(p_tilde, j):
            alpha_fact = 1
            size = 0
            for _, e in alpha:
                alpha_fact *= math.factorial(e)
                size += e
            derivs.append((alpha, alpha_fact, size, _compile_terms(dpoly)))
        tables.append((_compile_terms(p_tilde), derivs))
    return tables


def online_update(
    prev_mean: TruncatedTensor,
    old_samples: DiscreteMeasure,
    new_sample: TruncatedTensor,
    p_tilde_family=None,
) -> TruncatedTensor:
    """Mean of N points from the mean of the first N-1 plus one new sample.

    Taylor-expands every correction polynomial around the previous mean
    coordinates, so the old samples enter only through derivative evaluations;
    the expansion is exact (polynomials), and the result matches the
    from-scratch barycenter of all N points with uniform weights.
    """
    shape = prev_mean.shape
    if new_sample.shape != shape or old_samples.shape != shape:
        raise ValueError("shape mismatch in online update")
    n_old = len(old_samples)
    if not np.allclose(old_samples.weights, 1.0 / n_old):
        raise ValueError("online update expects uniform weights")
    n = n_old + 1
    basis = get_basis(shape.d, shape.L)
    if p_tilde_family is not None:
        tables = []
        for j, p_tilde in enumerate(p_tilde_family, start=1):
            derivs = []
            for alpha, dpoly in taylor_update_terms(p_tilde, j):
                fact, size = 1, 0
                for _, e in alpha:
                    fact *= math.factorial(e)
                    size += e
                derivs.append((alpha, fact, size, _compile_terms(dpoly)))
            tables.append((_compile_terms(p_tilde), derivs))
    else:
        tables = _update_tables(shape.d, shape.L)
    m_prev = np.asarray(basis.from_tensor(log(prev_mean)), dtype=float)
    c_old = np.array([basis.from_tensor(log(x)) for x in old_samples.samples])
    c_new = np.asarray(basis.from_tensor(log(new_sample)), dtype=float)[None, :]
    neg_m_prev = -m_prev
    m = np.zeros(basis.dim)
    delta = np.zeros(basis.dim)
    for j in range(basis.dim):
        base_plan, derivs = tables[j]
        value = _eval_terms_batch(base_plan, -m, c_new)[0]
        correction = 0.0
        for alpha, alpha_fact, size, plan in derivs:
            step = 1.0
            for i, e in alpha:
                step *= delta[i - 1] ** e
            if not step:
                continue
            # d/dm of p~(-m, c) picks up a sign per differentiation order
            step *= (-1.0) ** size / alpha_fact
            correction += step * _weighted_block_sum(
                _eval_terms_batch(plan, neg_m_prev, c_old), np.full(n_old, 1.0)
            )
        m[j] = (value + (n - 1) * m_prev[j] + correction) / n
        delta[j] = m[j] - m_prev[j]
    return exp(basis.to_tensor(m))
