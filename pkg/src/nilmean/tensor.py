"""Truncated tensor algebra over R^d.

Elements live in the quotient of the tensor algebra where every word longer
than the truncation level L is dropped.  Coefficients are stored level by
level in a flat, word-indexed layout: the word w_1...w_k (letters in 1..d)
sits at offset sum_t (w_t - 1) * d^(k-t) inside its level-k block.

Two coefficient regimes share the same code paths:

* numeric   -- numpy float64 arrays per level (fast, used by all algorithms),
* exact     -- plain Python lists holding Fraction (or any semiring element
               with +, * and truthiness), used for symbolic/rational work.

All values are immutable by convention: no public operation mutates its
arguments, so tensors may be shared freely across threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "Shape",
    "TruncatedTensor",
    "AdPowerSeries",
    "mul",
    "inv",
    "log",
    "exp",
    "bracket",
    "apply_ad_series",
    "permute",
    "descents",
    "reversal",
    "pi1",
    "pi1_level",
    "tensor_to_json",
    "tensor_from_json",
    "DEFAULT_PI1_LEVEL_CAP",
]

DEFAULT_PI1_LEVEL_CAP = 8


@dataclass(frozen=True)
class Shape:
    """Alphabet size d and truncation level L of the algebra."""

    d: int
    L: int

    def __post_init__(self):
        if self.d < 1 or self.L < 1:
            raise ValueError(f"need d >= 1 and L >= 1, got d={self.d}, L={self.L}")

    @property
    def level_sizes(self) -> tuple[int, ...]:
        return tuple(self.d**k for k in range(self.L + 1))

    @property
    def ambient_dim(self) -> int:
        """Total number of stored coefficients, sum_{k=0}^{L} d^k."""
        return sum(self.level_sizes)

    def word_offset(self, word) -> int:
        """Flat offset of a word (iterable of letters in 1..d) in its level block."""
        off = 0
        for letter in word:
            if not 1 <= letter <= self.d:
                raise ValueError(f"letter {letter} outside alphabet 1..{self.d}")
            off = off * self.d + (letter - 1)
        return off


class TruncatedTensor:
    """One element of the truncated algebra: a list of per-level coefficient blocks."""

    __slots__ = ("shape", "levels")

    def __init__(self, shape: Shape, levels):
        if len(levels) != shape.L + 1:
            raise ValueError("wrong number of levels")
        for k, block in enumerate(levels):
            if len(block) != shape.d**k:
                raise ValueError(f"level {k} has size {len(block)}, expected {shape.d ** k}")
        self.shape = shape
        self.levels = levels

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, shape: Shape, exact: bool = False) -> "TruncatedTensor":
        if exact:
            return cls(shape, [[0] * n for n in shape.level_sizes])
        return cls(shape, [np.zeros(n) for n in shape.level_sizes])

    @classmethod
    def identity(cls, shape: Shape, exact: bool = False) -> "TruncatedTensor":
        e = cls.zero(shape, exact)
        e.levels[0][0] = Fraction(1) if exact else 1.0
        return e

    @classmethod
    def from_word(cls, shape: Shape, word, coeff=1, exact: bool = False) -> "TruncatedTensor":
        t = cls.zero(shape, exact)
        k = len(word)
        if k > shape.L:
            raise ValueError(f"word of length {k} exceeds truncation level {shape.L}")
        t.levels[k][shape.word_offset(word)] = coeff if exact else float(coeff)
        return t

    @property
    def is_exact(self) -> bool:
        return not isinstance(self.levels[0], np.ndarray)

    # -- linear structure ----------------------------------------------------

    def copy(self) -> "TruncatedTensor":
        if self.is_exact:
            return TruncatedTensor(self.shape, [list(b) for b in self.levels])
        return TruncatedTensor(self.shape, [b.copy() for b in self.levels])

    def __add__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        _check_shapes(self, other)
        if not self.is_exact and not other.is_exact:
            return TruncatedTensor(self.shape, [a + b for a, b in zip(self.levels, other.levels)])
        out = self.copy()
        for k, block in enumerate(other.levels):
            ok = out.levels[k]
            for i, v in enumerate(block):
                if v:
                    ok[i] = ok[i] + v
        return out

    def __sub__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        return self + other.scale(-1)

    def __neg__(self) -> "TruncatedTensor":
        return self.scale(-1)

    def scale(self, c) -> "TruncatedTensor":
        if not self.is_exact:
            c = float(c)
            return TruncatedTensor(self.shape, [c * b for b in self.levels])
        return TruncatedTensor(
            self.shape, [[c * v if v else 0 for v in b] for b in self.levels]
        )

    def flat(self):
        """All coefficients as one array/list, level 0 first."""
        if self.is_exact:
            return [v for b in self.levels for v in b]
        return np.concatenate(self.levels)

    def norm_inf(self) -> float:
        return max(float(abs(v)) for b in self.levels for v in b)

    def allclose(self, other: "TruncatedTensor", tol: float = 1e-12) -> bool:
        _check_shapes(self, other)
        return all(
            abs(x - y) <= tol
            for a, b in zip(self.levels, other.levels)
            for x, y in zip(a, b)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedTensor):
            return NotImplemented
        return self.shape == other.shape and all(
            x == y for a, b in zip(self.levels, other.levels) for x, y in zip(a, b)
        )

    def __repr__(self) -> str:
        head = ", ".join(str(v) for v in self.flat()[:6])
        return f"TruncatedTensor(d={self.shape.d}, L={self.shape.L}, [{head}, ...])"


def _check_shapes(a: TruncatedTensor, b: TruncatedTensor):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


# -- multiplicative structure -------------------------------------------------


def mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Concatenation product; products of words longer than L are dropped."""
    _check_shapes(a, b)
    shape = a.shape
    if not a.is_exact and not b.is_exact:
        out = [np.zeros(n) for n in shape.level_sizes]
        for k in range(shape.L + 1):
            acc = out[k]
            for l in range(k + 1):
                acc += np.multiply.outer(a.levels[l], b.levels[k - l]).ravel()
        return TruncatedTensor(shape, out)

    out = [[0] * n for n in shape.level_sizes]
    for k in range(shape.L + 1):
        acc = out[k]
        for l in range(k + 1):
            left, right = a.levels[l], b.levels[k - l]
            nr = len(right)
            for i, av in enumerate(left):
                if not av:
                    continue
                base = i * nr
                for j, bv in enumerate(right):
                    if bv:
                        acc[base + j] = acc[base + j] + av * bv
    return TruncatedTensor(shape, out)


def bracket(x: TruncatedTensor, y: TruncatedTensor) -> TruncatedTensor:
    """Commutator [x, y] = xy - yx."""
    return mul(x, y) - mul(y, x)


def _unit_constant(t: TruncatedTensor):
    c = t.levels[0][0]
    if c != 1:
        raise ValueError(f"constant term must be 1, got {c}")


def inv(g: TruncatedTensor) -> TruncatedTensor:
    """Group inverse of a tensor with constant term 1: sum_k (e - g)^k."""
    _unit_constant(g)
    y = TruncatedTensor.identity(g.shape, g.is_exact) - g
    acc = TruncatedTensor.identity(g.shape, g.is_exact)
    pw = y
    for k in range(1, g.shape.L + 1):
        acc = acc + pw
        if k < g.shape.L:
            pw = mul(pw, y)
    return acc


def log(g: TruncatedTensor) -> TruncatedTensor:
    """Truncated logarithm sum_k ((-1)^(k+1)/k) (g - e)^k of a constant-term-1 tensor."""
    _unit_constant(g)
    z = g - TruncatedTensor.identity(g.shape, g.is_exact)
    acc = z
    pw = z
    for k in range(2, g.shape.L + 1):
        pw = mul(pw, z)
        c = Fraction((-1) ** (k + 1), k) if g.is_exact else ((-1) ** (k + 1)) / k
        acc = acc + pw.scale(c)
    return acc


def exp(x: TruncatedTensor) -> TruncatedTensor:
    """Truncated exponential sum_k x^k / k! of a constant-term-0 tensor."""
    if x.levels[0][0]:
        raise ValueError(f"constant term must be 0, got {x.levels[0][0]}")
    acc = TruncatedTensor.identity(x.shape, x.is_exact) + x
    pw = x
    for k in range(2, x.shape.L + 1):
        pw = mul(pw, x)
        c = Fraction(1, math.factorial(k)) if x.is_exact else 1.0 / math.factorial(k)
        acc = acc + pw.scale(c)
    return acc


# -- ad power series -----------------------------------------------------------


@dataclass(frozen=True)
class AdPowerSeries:
    """A truncated operator series sum_k coeffs[k] * ad_X^k with exact coefficients."""

    coeffs: tuple[Fraction, ...]

    @classmethod
    def identity(cls, n: int) -> "AdPowerSeries":
        return cls((Fraction(1),) + (Fraction(0),) * (n - 1))

    @classmethod
    def bch_linear_part(cls, n: int) -> "AdPowerSeries":
        """Series of t/(1 - e^(-t)): coefficients 1, 1/2, then B_2k/(2k)! at even orders.

        Applied as g(ad_X), this operator is the linear-in-Y part of BCH(X, Y).
        """
        bern = _bernoulli_numbers(n)
        coeffs = []
        for k in range(n):
            if k == 0:
                coeffs.append(Fraction(1))
            elif k == 1:
                coeffs.append(Fraction(1, 2))
            elif k % 2 == 0:
                coeffs.append(bern[k] / math.factorial(k))
            else:
                coeffs.append(Fraction(0))
        return cls(tuple(coeffs))

    @classmethod
    def bch_linear_part_inverse(cls, n: int) -> "AdPowerSeries":
        """Series of (1 - e^(-t))/t: coefficient (-1)^k/(k+1)! at order k."""
        return cls(tuple(Fraction((-1) ** k, math.factorial(k + 1)) for k in range(n)))

    def compose(self, inner: "AdPowerSeries") -> "AdPowerSeries":
        """Operator composition; coefficientwise the Cauchy product, truncated."""
        n = min(len(self.coeffs), len(inner.coeffs))
        out = [Fraction(0)] * n
        for i, a in enumerate(self.coeffs[:n]):
            if not a:
                continue
            for j, b in enumerate(inner.coeffs[: n - i]):
                out[i + j] += a * b
        return AdPowerSeries(tuple(out))


def _bernoulli_numbers(n: int) -> list[Fraction]:
    """B_0..B_n with the B_1 = -1/2 convention."""
    bern = [Fraction(1)]
    for m in range(1, n + 1):
        s = sum(math.comb(m + 1, k) * bern[k] for k in range(m))
        bern.append(Fraction(-s, m + 1))
    return bern


def apply_ad_series(series: AdPowerSeries, x: TruncatedTensor, y: TruncatedTensor) -> TruncatedTensor:
    """Evaluate sum_k c_k ad_x^k (y) for Lie elements x, y (constant terms 0)."""
    _check_shapes(x, y)
    if x.levels[0][0] or y.levels[0][0]:
        raise ValueError("ad series arguments must have constant term 0")
    exact = x.is_exact
    acc = TruncatedTensor.zero(x.shape, exact)
    t = y
    last = min(len(series.coeffs), x.shape.L) - 1
    for k, c in enumerate(series.coeffs[: last + 1]):
        if c:
            acc = acc + t.scale(c if exact else float(c))
        if k < last:
            t = bracket(x, t)
    return acc


# -- permutation operators and the projection pi1 ------------------------------


def _check_permutation(sigma) -> tuple[int, ...]:
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise ValueError(f"{sigma} is not a permutation of 1..{len(sigma)}")
    return sigma


def descents(sigma) -> int:
    """Number of positions k with sigma(k) > sigma(k+1)."""
    sigma = _check_permutation(sigma)
    return sum(1 for a, b in zip(sigma, sigma[1:]) if a > b)


def reversal(k: int) -> tuple[int, ...]:
    return tuple(range(k, 0, -1))


def permute(block, sigma, d: int | None = None):
    """Move the t-th tensor dimension of a flat level-K block into position sigma(t)."""
    sigma = _check_permutation(sigma)
    k = len(sigma)
    n = len(block)
    if d is None:
        d = round(n ** (1 / k)) if k else 1
    if d**k != n:
        raise ValueError(f"block of size {n} is not a level-{k} block over d={d}")
    axes = [s - 1 for s in sigma]
    if isinstance(block, np.ndarray):
        return np.transpose(block.reshape((d,) * k), axes).reshape(-1)
    out = [0] * n
    strides = [d ** (k - 1 - t) for t in range(k)]
    for idx in itertools.product(range(d), repeat=k):
        src = sum(i * s for i, s in zip(idx, strides))
        dst = sum(idx[a] * s for a, s in zip(axes, strides))
        out[dst] = block[src]
    return out


def _pi1_coefficients(k: int) -> dict[tuple[int, ...], Fraction]:
    """Signed, descent-weighted coefficient of each permutation in pi_{1,k}."""
    coeffs = {}
    for sigma in itertools.permutations(range(1, k + 1)):
        dsc = sum(1 for a, b in zip(sigma, sigma[1:]) if a > b)
        coeffs[sigma] = Fraction((-1) ** dsc, k * math.comb(k - 1, dsc))
    return coeffs


def pi1_level(block, k: int, d: int):
    """Apply the level-k projection of the first kind to one flat block."""
    if k == 0:
        return np.zeros(1) if isinstance(block, np.ndarray) else [0]
    coeffs = _pi1_coefficients(k)
    if isinstance(block, np.ndarray):
        shaped = block.reshape((d,) * k)
        out = np.zeros_like(shaped)
        for sigma, c in coeffs.items():
            out += float(c) * np.transpose(shaped, [s - 1 for s in sigma])
        return out.reshape(-1)
    out = [0] * len(block)
    for sigma, c in coeffs.items():
        moved = permute(block, sigma, d)
        for i, v in enumerate(moved):
            if v:
                out[i] = out[i] + c * v
    return out


def pi1(x: TruncatedTensor, level_cap: int = DEFAULT_PI1_LEVEL_CAP) -> TruncatedTensor:
    """Graded projection of the first kind; agrees with log on grouplike elements.

    Each level k is a signed combination of all k! dimension permutations, so
    the cost grows factorially; levels above ``level_cap`` are refused.
    """
    shape = x.shape
    if shape.L > level_cap:
        raise ValueError(
            f"pi1 at level {shape.L} would enumerate {shape.L}! = "
            f"{math.factorial(shape.L)} permutations per level; raise level_cap "
            f"(default {DEFAULT_PI1_LEVEL_CAP}) to allow it"
        )
    out = TruncatedTensor.zero(shape, x.is_exact)
    for k in range(1, shape.L + 1):
        out.levels[k] = pi1_level(x.levels[k], k, shape.d)
    return out


# -- JSON round trip ------------------------------------------------------------


def tensor_to_json(t: TruncatedTensor) -> dict:
    return {
        "d": t.shape.d,
        "L": t.shape.L,
        "levels": [[float(v) for v in block] for block in t.levels],
    }


def tensor_from_json(obj: dict) -> TruncatedTensor:
    shape = Shape(int(obj["d"]), int(obj["L"]))
    levels = [np.asarray(block, dtype=float) for block in obj["levels"]]
    return TruncatedTensor(shape, levels)
