"""Lyndon words and the Lyndon basis of the free step-L nilpotent Lie algebra.

A Lyndon word is strictly smaller (lexicographically) than each of its proper
suffixes.  Bracketing every Lyndon word along its standard factorization gives
a basis of the free Lie algebra; sorting words by length and then
lexicographically fixes the coordinate order used throughout this package.

The change of basis between Lie elements in the tensor algebra and their
length-B coordinate vectors relies on a triangularity property: the bracket
expansion of a Lyndon word w is w plus integer multiples of lexicographically
larger words of the same length, so extracting coordinates is a unitriangular
solve over the Lyndon-word columns of each level.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

from .tensor import Shape, TruncatedTensor, bracket, exp, log, mul

__all__ = [
    "lyndon_words",
    "lie_dim",
    "is_lyndon",
    "standard_factorization",
    "LyndonBasis",
    "get_basis",
    "star",
]


def _duval_generate(d: int, max_len: int) -> list[tuple[int, ...]]:
    """All Lyndon words of length <= max_len over 1..d (Duval's algorithm)."""
    words = []
    w = [1]
    while w:
        if len(w) <= max_len:
            words.append(tuple(w))
        # extend periodically to max_len, then increment the last letter
        w = [w[i % len(w)] for i in range(max_len)]
        while w and w[-1] == d:
            w.pop()
        if w:
            w[-1] += 1
    return words


def lyndon_words(shape: Shape) -> list[tuple[int, ...]]:
    """Lyndon words of length <= L over 1..d, sorted by length then lexicographically."""
    return sorted(_duval_generate(shape.d, shape.L), key=lambda w: (len(w), w))


def _mobius(n: int) -> int:
    if n == 1:
        return 1
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    if n > 1:
        result = -result
    return result


def lie_dim(shape: Shape) -> int:
    """Dimension of the free step-L nilpotent Lie algebra over R^d (necklace counts)."""
    total = 0
    for length in range(1, shape.L + 1):
        s = sum(_mobius(a) * shape.d ** (length // a) for a in range(1, length + 1) if length % a == 0)
        total += s // length
    return total


def is_lyndon(word) -> bool:
    word = tuple(word)
    if not word:
        return False
    return all(word < word[i:] for i in range(1, len(word)))


def standard_factorization(word) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split w = u v with v the longest proper Lyndon suffix (u is then Lyndon too)."""
    word = tuple(word)
    if len(word) < 2:
        raise ValueError("letters have no factorization")
    # the longest Lyndon proper suffix is the lexicographically least proper suffix
    split = min(range(1, len(word)), key=lambda i: word[i:])
    return word[:split], word[split:]


class LyndonBasis:
    """Lyndon words with factorizations and bracket expansions for one shape.

    ``words[b]`` is the b-th basis word; ``expansions[b]`` maps flat offsets in
    level len(words[b]) to the integer coefficients of the bracket polynomial.
    Construction of the expansions is deferred until first use: the word list
    alone is cheap even for large d, the expansions are not.
    """

    def __init__(self, shape: Shape):
        self.shape = shape
        self.words = lyndon_words(shape)
        self.index = {w: b for b, w in enumerate(self.words)}
        if len(self.words) != lie_dim(shape):
            raise AssertionError("Lyndon enumeration disagrees with the dimension formula")
        self.factorization = {}
        for w in self.words:
            if len(w) >= 2:
                u, v = standard_factorization(w)
                self.factorization[w] = (self.index[u], self.index[v])
        self._expansions: dict[int, dict[int, int]] = {}
        self._level_words: dict[int, list[int]] = {}
        for b, w in enumerate(self.words):
            self._level_words.setdefault(len(w), []).append(b)
        self._float_solvers: dict[int, tuple] = {}

    @property
    def dim(self) -> int:
        return len(self.words)

    def level_word_indices(self, k: int) -> list[int]:
        """Basis indices whose words have length k (contiguous, increasing)."""
        return self._level_words.get(k, [])

    def expansion(self, b: int) -> dict[int, int]:
        """Sparse bracket expansion of words[b]: flat level offset -> integer coefficient."""
        cached = self._expansions.get(b)
        if cached is not None:
            return cached
        w = self.words[b]
        if len(w) == 1:
            out = {self.shape.word_offset(w): 1}
        else:
            iu, iv = self.factorization[w]
            out = self._bracket_of(
                self.expansion(iu), len(self.words[iu]), self.expansion(iv), len(self.words[iv])
            )
        self._expansions[b] = out
        return out

    def _bracket_of(self, eu, len_u: int, ev, len_v: int) -> dict[int, int]:
        d = self.shape.d
        out: dict[int, int] = {}
        for ou, cu in eu.items():
            for ov, cv in ev.items():
                # concatenation offsets for uv and vu within the joint level
                fwd = ou * d**len_v + ov
                bwd = ov * d**len_u + ou
                out[fwd] = out.get(fwd, 0) + cu * cv
                out[bwd] = out.get(bwd, 0) - cu * cv
        return {o: c for o, c in out.items() if c}

    def bracket_tensor(self, b: int, exact: bool = False) -> TruncatedTensor:
        """The expansion of words[b] as a TruncatedTensor supported on one level."""
        t = TruncatedTensor.zero(self.shape, exact)
        k = len(self.words[b])
        block = t.levels[k]
        for off, c in self.expansion(b).items():
            block[off] = Fraction(c) if exact else float(c)
        return t

    # -- coordinates ---------------------------------------------------------

    def to_tensor(self, values) -> TruncatedTensor:
        """Linear combination sum_b values[b] * expansion(b)."""
        if len(values) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(values)}")
        exact = not isinstance(values, np.ndarray) and not any(
            isinstance(v, float) for v in values
        )
        t = TruncatedTensor.zero(self.shape, exact)
        for b, val in enumerate(values):
            if not val:
                continue
            block = t.levels[len(self.words[b])]
            for off, c in self.expansion(b).items():
                block[off] = block[off] + val * c
        return t

    def from_tensor(self, x: TruncatedTensor, rel_tol: float = 1e-9):
        """Coordinates of a Lie element; raises if x is not Lie within tolerance.

        Solved per level by back-substitution over the Lyndon-word columns
        (the expansion matrix is unitriangular in lexicographic word order),
        then validated by reconstructing the full tensor.
        """
        if x.shape != self.shape:
            raise ValueError("tensor shape does not match basis shape")
        if x.levels[0][0]:
            raise ValueError("a Lie element has constant term 0")
        exact = x.is_exact
        coords = [0] * self.dim if exact else np.zeros(self.dim)
        for k in range(1, self.shape.L + 1):
            idxs = self.level_word_indices(k)
            if not idxs:
                continue
            correction: dict[int, object] = {}
            lyndon_offsets = {self.shape.word_offset(self.words[b]): b for b in idxs}
            for b in idxs:
                off_b = self.shape.word_offset(self.words[b])
                c = x.levels[k][off_b] - correction.get(off_b, 0)
                coords[b] = c
                if not c:
                    continue
                for off, coef in self.expansion(b).items():
                    if off in lyndon_offsets and off != off_b:
                        correction[off] = correction.get(off, 0) + c * coef
        residual = (x - self.to_tensor(coords)).norm_inf()
        scale = max(1.0, x.norm_inf())
        if exact:
            if residual != 0:
                raise ValueError(f"not a Lie element: residual {residual}")
        elif residual > rel_tol * scale:
            raise ValueError(
                f"not a Lie element: residual {residual:.3e} exceeds {rel_tol:.1e} * {scale:.3e}"
            )
        return coords

    def basis_json(self) -> list[dict]:
        """Rows {word, factorization, level} for the CLI dump."""
        rows = []
        for b, w in enumerate(self.words):
            fact = self.factorization.get(w)
            rows.append(
                {
                    "index": b + 1,
                    "word": "".join(str(c) for c in w),
                    "level": len(w),
                    "factorization": None
                    if fact is None
                    else ["".join(str(c) for c in self.words[i]) for i in fact],
                }
            )
        return rows


@lru_cache(maxsize=None)
def get_basis(d: int, L: int) -> LyndonBasis:
    """Shared, immutable basis instance per shape."""
    return LyndonBasis(Shape(d, L))


def star(basis: LyndonBasis, u, v):
    """Group law on coordinate vectors: coordinates of log(exp(u~) exp(v~))."""
    xu = basis.to_tensor(u)
    xv = basis.to_tensor(v)
    return basis.from_tensor(log(mul(exp(xu), exp(xv))))
