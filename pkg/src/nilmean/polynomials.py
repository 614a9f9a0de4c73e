"""Exact-rational polynomials in M_1..M_B, C_1..C_B and the symbolic machinery
that turns the truncated BCH product into closed-form barycenter update rules.

Everything here is exact: coefficients are Fractions, and no float enters any
computation.  The main pipeline is

1. build X = sum_b M_b B_b and Y = sum_b C_b B_b with polynomial coefficients,
2. multiply exp(+-X) exp(Y) in the truncated tensor algebra and take log,
3. project through the dual Lyndon basis to get one polynomial per coordinate,
4. reduce those polynomials against each other with a Groebner-style normal
   form in which only M-monomial cofactors are allowed ("frozen C"), which
   preserves the sum-over-samples identities the barycenter recursion needs.

Monomials keep their M-part and C-part separate so frozen-C divisibility is a
C-part equality check plus ordinary M-part divisibility.
"""

from __future__ import annotations

import heapq
import itertools
import math
from fractions import Fraction

from .lyndon import LyndonBasis, get_basis
from .tensor import (
    AdPowerSeries,
    Shape,
    TruncatedTensor,
    apply_ad_series,
    exp,
    log,
    mul,
)

__all__ = [
    "Monomial",
    "RationalPoly",
    "MonomialOrder",
    "rnf",
    "buchberger",
    "generate_p",
    "generate_q",
    "generate_pq",
    "p_from_q",
    "generate_r",
    "reduced_forms",
    "generate_abch_r",
    "term_counts",
    "max_r_terms",
    "max_p_terms",
    "taylor_update_terms",
    "ambient_correction_monomial_counts",
    "poly_to_json_terms",
    "family_to_json",
]

_EMPTY = ((), ())


# -- monomials -----------------------------------------------------------------
#
# A monomial is a pair (m_part, c_part); each part is a tuple of (index, exp)
# pairs sorted by index, indices 1-based.  The empty pair is the constant 1.


def _part_mul(p, q):
    if not p:
        return q
    if not q:
        return p
    out = []
    i = j = 0
    while i < len(p) and j < len(q):
        (vi, ei), (vj, ej) = p[i], q[j]
        if vi == vj:
            out.append((vi, ei + ej))
            i += 1
            j += 1
        elif vi < vj:
            out.append(p[i])
            i += 1
        else:
            out.append(q[j])
            j += 1
    out.extend(p[i:])
    out.extend(q[j:])
    return tuple(out)


def _part_divides(p, q):
    """True when every exponent of p is covered by q."""
    qd = dict(q)
    return all(qd.get(v, 0) >= e for v, e in p)


def _part_quotient(q, p):
    pd = dict(p)
    out = []
    for v, e in q:
        rest = e - pd.get(v, 0)
        if rest < 0:
            raise ValueError("not divisible")
        if rest:
            out.append((v, rest))
    return tuple(out)


def _mono_mul(a, b):
    return (_part_mul(a[0], b[0]), _part_mul(a[1], b[1]))


def _mono_degree(mono):
    return sum(e for _, e in mono[0]) + sum(e for _, e in mono[1])


class Monomial:
    """Light wrapper used at the API surface; internals pass raw pairs around."""

    __slots__ = ("m", "c")

    def __init__(self, m=(), c=()):
        self.m = tuple(sorted(tuple(m)))
        self.c = tuple(sorted(tuple(c)))

    @property
    def degree(self) -> int:
        return _mono_degree((self.m, self.c))

    def as_pair(self):
        return (self.m, self.c)

    def __eq__(self, other):
        return isinstance(other, Monomial) and (self.m, self.c) == (other.m, other.c)

    def __hash__(self):
        return hash((self.m, self.c))

    def __repr__(self):
        return _mono_str((self.m, self.c)) or "1"


def _mono_str(mono):
    parts = []
    for v, e in mono[1]:
        parts.append(f"C{v}" + (f"^{e}" if e > 1 else ""))
    for v, e in mono[0]:
        parts.append(f"M{v}" + (f"^{e}" if e > 1 else ""))
    return "*".join(parts)


def _m_var(i):
    return (((i, 1),), ())


def _c_var(i):
    return ((), ((i, 1),))


# -- polynomials ----------------------------------------------------------------


class RationalPoly:
    """Multivariate polynomial with Fraction coefficients, canonical sparse form."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        self._terms = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def zero(cls) -> "RationalPoly":
        return cls()

    @classmethod
    def constant(cls, c) -> "RationalPoly":
        return cls({_EMPTY: Fraction(c)})

    @classmethod
    def m_symbol(cls, i: int) -> "RationalPoly":
        return cls({_m_var(i): Fraction(1)})

    @classmethod
    def c_symbol(cls, i: int) -> "RationalPoly":
        return cls({_c_var(i): Fraction(1)})

    def terms(self):
        return self._terms.items()

    @property
    def term_count(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, RationalPoly):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        out = dict(self._terms)
        _axpy(out, _coerce(other)._terms, Fraction(1))
        return RationalPoly(out)

    __radd__ = __add__

    def __sub__(self, other):
        out = dict(self._terms)
        _axpy(out, _coerce(other)._terms, Fraction(-1))
        return RationalPoly(out)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return self.scale(-1)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out: dict = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                key = _mono_mul(ma, mb)
                acc = out.get(key)
                out[key] = ca * cb if acc is None else acc + ca * cb
        return RationalPoly(out)

    __rmul__ = __mul__

    def scale(self, c) -> "RationalPoly":
        c = Fraction(c)
        if not c:
            return RationalPoly()
        return RationalPoly({m: c * v for m, v in self._terms.items()})

    def diff_m(self, i: int) -> "RationalPoly":
        """Partial derivative with respect to M_i."""
        out = {}
        for mono, coeff in self._terms.items():
            md = dict(mono[0])
            e = md.get(i, 0)
            if not e:
                continue
            if e == 1:
                del md[i]
            else:
                md[i] = e - 1
            out[(tuple(sorted(md.items())), mono[1])] = coeff * e
        return RationalPoly(out)

    def substitute_negated_m(self) -> "RationalPoly":
        """The polynomial with every M_i replaced by -M_i."""
        out = {}
        for mono, coeff in self._terms.items():
            mdeg = sum(e for _, e in mono[0])
            out[mono] = -coeff if mdeg % 2 else coeff
        return RationalPoly(out)

    def evaluate(self, m_values, c_values):
        """Exact evaluation; m_values[i-1] substitutes M_i, likewise for C."""
        total = Fraction(0)
        for mono, coeff in self._terms.items():
            v = coeff
            for i, e in mono[0]:
                v *= Fraction(m_values[i - 1]) ** e
            for i, e in mono[1]:
                v *= Fraction(c_values[i - 1]) ** e
            total += v
        return total

    def max_m_index(self) -> int:
        return max((i for mono in self._terms for i, _ in mono[0]), default=0)

    def __str__(self):
        if not self._terms:
            return "0"
        items = sorted(self._terms.items(), key=lambda kv: (_mono_degree(kv[0]), kv[0]))
        chunks = []
        for mono, coeff in items:
            body = _mono_str(mono)
            mag = abs(coeff)
            lead = "-" if coeff < 0 else ("+" if chunks else "")
            if body and mag == 1:
                chunks.append(f"{lead} {body}" if chunks else f"{lead}{body}")
            else:
                text = f"{mag}" + (f"*{body}" if body else "")
                chunks.append(f"{lead} {text}" if chunks else f"{lead}{text}")
        return " ".join(chunks)

    __repr__ = __str__


def _coerce(x) -> RationalPoly:
    if isinstance(x, RationalPoly):
        return x
    return RationalPoly.constant(x)


def _axpy(dst: dict, src: dict, factor: Fraction, shift=None):
    """dst += factor * M^shift * src, pruning exact zeros."""
    for mono, coeff in src.items():
        key = ((_part_mul(shift, mono[0]), mono[1]) if shift is not None else mono)
        acc = dst.get(key)
        val = factor * coeff if acc is None else acc + factor * coeff
        if val:
            dst[key] = val
        elif acc is not None:
            del dst[key]


# -- monomial orders -------------------------------------------------------------

_SENTINEL = (1 << 62, 0)


class MonomialOrder:
    """A term order over the 2B symbols, realized as a cached key function.

    ``kind`` is one of 'lex', 'deglex', 'degrevlex'.  The priority is encoded
    by two rank functions (rank 0 = most significant symbol).  Keys compare so
    that larger key == larger monomial.
    """

    def __init__(self, kind: str, m_rank, c_rank, name: str):
        if kind not in ("lex", "deglex", "degrevlex"):
            raise ValueError(f"unknown order kind {kind!r}")
        self.kind = kind
        self._m_rank = m_rank
        self._c_rank = c_rank
        self.name = name
        self._cache: dict = {}

    @classmethod
    def lex_c_desc(cls, n_symbols: int) -> "MonomialOrder":
        """Lexicographic with C_B > ... > C_1 > M_B > ... > M_1 (the default)."""
        b = n_symbols
        return cls("lex", lambda i: 2 * b - i, lambda i: b - i, f"lex_c_desc({b})")

    @classmethod
    def deglex_c_asc(cls, n_symbols: int) -> "MonomialOrder":
        """Degree-lexicographic with C_1 > ... > C_B > M_1 > ... > M_B."""
        b = n_symbols
        return cls("deglex", lambda i: b + i - 1, lambda i: i - 1, f"deglex_c_asc({b})")

    @classmethod
    def degrevlex_c_asc(cls, n_symbols: int) -> "MonomialOrder":
        """Degree-reverse-lexicographic with C_1 > ... > C_B > M_1 > ... > M_B."""
        b = n_symbols
        return cls("degrevlex", lambda i: b + i - 1, lambda i: i - 1, f"degrevlex_c_asc({b})")

    def _ranked(self, mono):
        entries = [(self._m_rank(i), e) for i, e in mono[0]]
        entries += [(self._c_rank(i), e) for i, e in mono[1]]
        entries.sort()
        return entries

    def key(self, mono):
        cached = self._cache.get(mono)
        if cached is not None:
            return cached
        entries = self._ranked(mono)
        if self.kind == "lex":
            key = tuple((-r, e) for r, e in entries)
        elif self.kind == "deglex":
            deg = sum(e for _, e in entries)
            key = (deg,) + tuple((-r, e) for r, e in entries)
        else:  # degrevlex: at the least significant differing symbol, smaller wins
            deg = sum(e for _, e in entries)
            rev = tuple((-r, -e) for r, e in reversed(entries)) + (_SENTINEL,)
            key = (deg,) + rev
        self._cache[mono] = key
        return key

    def leading(self, poly: RationalPoly):
        """(monomial, coefficient) of the leading term."""
        if not poly:
            raise ValueError("zero polynomial has no leading term")
        mono = max(poly._terms, key=self.key)
        return mono, poly._terms[mono]


# -- frozen-C reduction and Buchberger closure ------------------------------------


class _ReducerSet:
    """Index of reducers keyed by the C-part of their leading monomials."""

    def __init__(self, order: MonomialOrder, polys=()):
        self.order = order
        self.by_cpart: dict = {}
        self.polys: list[RationalPoly] = []
        for g in polys:
            self.add(g)

    def add(self, g: RationalPoly):
        lm, lc = self.order.leading(g)
        self.polys.append(g)
        self.by_cpart.setdefault(lm[1], []).append((lm[0], lc, g._terms))

    def find(self, mono):
        for m_part, lc, terms in self.by_cpart.get(mono[1], ()):
            if _part_divides(m_part, mono[0]):
                return _part_quotient(mono[0], m_part), lc, terms
        return None


def rnf(q: RationalPoly, G, order: MonomialOrder) -> RationalPoly:
    """Reduced normal form of q modulo G, allowing only M-monomial cofactors.

    A term is reducible by g exactly when its C-part equals the C-part of
    lm(g) and lm(g)'s M-part divides its M-part; irreducible leading terms are
    peeled off into the result.  Exact arithmetic, terminates by the
    well-foundedness of the order.
    """
    reducers = G if isinstance(G, _ReducerSet) else _ReducerSet(order, G)
    work = dict(q._terms)
    done: dict = {}
    key = order.key
    while work:
        lm = max(work, key=key)
        hit = reducers.find(lm)
        if hit is None:
            done[lm] = work.pop(lm)
            continue
        cofactor, lc_g, terms_g = hit
        factor = work[lm] / lc_g
        _axpy(work, terms_g, -factor, shift=cofactor)
    return RationalPoly(done)


def _s_polynomial(order, g: RationalPoly, h: RationalPoly):
    """Frozen-C S-polynomial, or None when the C-parts of the lm's differ."""
    (mg, cg), lcg = order.leading(g)
    (mh, ch), lch = order.leading(h)
    if cg != ch:
        return None
    md = dict(mg)
    for v, e in mh:
        md[v] = max(md.get(v, 0), e)
    lcm = tuple(sorted(md.items()))
    out: dict = {}
    _axpy(out, g._terms, Fraction(1) / lcg, shift=_part_quotient(lcm, mg))
    _axpy(out, h._terms, Fraction(-1) / lch, shift=_part_quotient(lcm, mh))
    return RationalPoly(out)


def buchberger(F, order: MonomialOrder) -> list[RationalPoly]:
    """Closure of F under frozen-C S-polynomials; returns F plus new reducers.

    Pending S-polynomials are processed by increasing leading monomial, ties
    by creation order, so the output is deterministic.
    """
    closure = _IncrementalBuchberger(order)
    for f in F:
        closure.add(f)
    return list(closure.basis)


class _IncrementalBuchberger:
    """Buchberger state that can absorb generators one at a time.

    ``checkpoint()`` records the current basis length; slices of ``basis`` at
    recorded lengths are the Groebner bases of the corresponding prefixes.
    """

    def __init__(self, order: MonomialOrder):
        self.order = order
        self.reducers = _ReducerSet(order)
        self._queue: list = []
        self._counter = itertools.count()

    @property
    def basis(self) -> list[RationalPoly]:
        return self.reducers.polys

    def _push_pairs(self, g: RationalPoly):
        for h in self.basis:
            s = _s_polynomial(self.order, g, h)
            if s is not None and s:
                lm, _ = self.order.leading(s)
                heapq.heappush(self._queue, (self.order.key(lm), next(self._counter), s))

    def add(self, f: RationalPoly):
        if not f:
            return
        self._push_pairs(f)
        self.reducers.add(f)
        while self._queue:
            _, _, s = heapq.heappop(self._queue)
            r = rnf(s, self.reducers, self.order)
            if r:
                _, lc = self.order.leading(r)
                r = r.scale(Fraction(1) / lc)
                self._push_pairs(r)
                self.reducers.add(r)

    def checkpoint(self) -> int:
        return len(self.basis)


# -- symbolic tensors (polynomial coefficients) -----------------------------------
#
# Internally a symbolic tensor is a list of levels; each level is a list of raw
# term dicts {monomial: Fraction}, one per word offset.  Keeping the dicts raw
# lets the product accumulate term-by-term without intermediate allocations.


def _sym_zero(shape: Shape):
    return [[{} for _ in range(n)] for n in shape.level_sizes]


def _sym_identity(shape: Shape):
    t = _sym_zero(shape)
    t[0][0] = {_EMPTY: Fraction(1)}
    return t


def _sym_scale_add(dst, src, factor: Fraction):
    for db, sb in zip(dst, src):
        for i, terms in enumerate(sb):
            if terms:
                _axpy(db[i], terms, factor)


def _sym_mul(a, b, shape: Shape):
    d, L = shape.d, shape.L
    out = _sym_zero(shape)
    sizes = shape.level_sizes
    for k in range(L + 1):
        blocks = out[k]
        for l in range(k + 1):
            left, right = a[l], b[k - l]
            nr = sizes[k - l]
            for i, pa in enumerate(left):
                if not pa:
                    continue
                base = i * nr
                for j, pb in enumerate(right):
                    if not pb:
                        continue
                    acc = blocks[base + j]
                    for ma, ca in pa.items():
                        for mb, cb in pb.items():
                            key = _mono_mul(ma, mb)
                            cur = acc.get(key)
                            val = ca * cb if cur is None else cur + ca * cb
                            if val:
                                acc[key] = val
                            elif cur is not None:
                                del acc[key]
    return out


def _sym_exp(x, shape: Shape):
    acc = _sym_identity(shape)
    _sym_scale_add(acc, x, Fraction(1))
    power = x
    for k in range(2, shape.L + 1):
        power = _sym_mul(power, x, shape)
        _sym_scale_add(acc, power, Fraction(1, math.factorial(k)))
    return acc


def _sym_log(g, shape: Shape):
    z = _sym_zero(shape)
    _sym_scale_add(z, g, Fraction(1))
    _axpy(z[0][0], {_EMPTY: Fraction(1)}, Fraction(-1))
    acc = _sym_zero(shape)
    _sym_scale_add(acc, z, Fraction(1))
    power = z
    for k in range(2, shape.L + 1):
        power = _sym_mul(power, z, shape)
        _sym_scale_add(acc, power, Fraction((-1) ** (k + 1), k))
    return acc


def _sym_lie_generator(basis: LyndonBasis, symbol: str, negate: bool = False):
    """sum_b S_b * expansion(b) with S in {M, C}, as a symbolic tensor."""
    t = _sym_zero(basis.shape)
    sign = Fraction(-1 if negate else 1)
    for b, w in enumerate(basis.words):
        var = _m_var(b + 1) if symbol == "M" else _c_var(b + 1)
        block = t[len(w)]
        for off, coef in basis.expansion(b).items():
            _axpy(block[off], {var: Fraction(coef)}, sign)
    return t


def _sym_extract_coordinates(t, basis: LyndonBasis, validate: bool = False):
    """Dual-basis coordinates of a symbolic Lie tensor (unitriangular solve)."""
    shape = basis.shape
    coords: list[dict] = [{} for _ in range(basis.dim)]
    for k in range(1, shape.L + 1):
        idxs = basis.level_word_indices(k)
        if not idxs:
            continue
        lyndon_offsets = {shape.word_offset(basis.words[b]) for b in idxs}
        correction: dict[int, dict] = {}
        for b in idxs:
            off_b = shape.word_offset(basis.words[b])
            c = dict(t[k][off_b])
            corr = correction.get(off_b)
            if corr:
                _axpy(c, corr, Fraction(-1))
            coords[b] = c
            if not c:
                continue
            for off, coef in basis.expansion(b).items():
                if off != off_b and off in lyndon_offsets:
                    _axpy(correction.setdefault(off, {}), c, Fraction(coef))
    if validate:
        recon = _sym_zero(shape)
        for b, c in enumerate(coords):
            if not c:
                continue
            block = recon[len(basis.words[b])]
            for off, coef in basis.expansion(b).items():
                _axpy(block[off], c, Fraction(coef))
        for k in range(shape.L + 1):
            for i, terms in enumerate(t[k]):
                check = dict(terms)
                _axpy(check, recon[k][i], Fraction(-1))
                if check:
                    raise AssertionError("symbolic tensor is not a Lie element")
    return [RationalPoly(c) for c in coords]


def _bch_coordinates(shape: Shape, negate_x: bool, validate: bool = False):
    basis = get_basis(shape.d, shape.L)
    x = _sym_lie_generator(basis, "M", negate=negate_x)
    y = _sym_lie_generator(basis, "C")
    product = _sym_mul(_sym_exp(x, shape), _sym_exp(y, shape), shape)
    return _sym_extract_coordinates(_sym_log(product, shape), basis, validate=validate)


# -- the p, q, r families ----------------------------------------------------------


def generate_p(shape: Shape, validate: bool = False) -> list[RationalPoly]:
    """Correction polynomials of the group law: coordinate j of BCH(X, Y) minus M_j + C_j."""
    coords = _bch_coordinates(shape, negate_x=False, validate=validate)
    return [
        c - RationalPoly.m_symbol(j) - RationalPoly.c_symbol(j)
        for j, c in enumerate(coords, start=1)
    ]


def generate_q(shape: Shape, validate: bool = False) -> list[RationalPoly]:
    """Coordinates of BCH(-X, Y); q_j vanishes in weighted sum at the barycenter."""
    return _bch_coordinates(shape, negate_x=True, validate=validate)


def generate_pq(shape: Shape) -> tuple[list[RationalPoly], list[RationalPoly]]:
    """The pair (p, q), each from its own BCH expansion."""
    return generate_p(shape), generate_q(shape)


def p_from_q(q: list[RationalPoly]) -> list[RationalPoly]:
    """Recover p from q via p_j = q_j(M -> -M) - M_j - C_j.

    Sign flips cannot merge or cancel monomials, so term counts of p_j and q_j
    differ by exactly the two singleton terms; the large count tables use this
    instead of a second BCH expansion.
    """
    out = []
    for j, qj in enumerate(q, start=1):
        out.append(
            qj.substitute_negated_m() - RationalPoly.m_symbol(j) - RationalPoly.c_symbol(j)
        )
    return out


def default_order(shape: Shape) -> MonomialOrder:
    return MonomialOrder.lex_c_desc(lie_dim_of(shape))


def lie_dim_of(shape: Shape) -> int:
    return get_basis(shape.d, shape.L).dim


def generate_r(
    shape: Shape,
    order: MonomialOrder | None = None,
    q: list[RationalPoly] | None = None,
    scan_prefixes: bool = False,
) -> list[RationalPoly]:
    """Reduced correction polynomials r_j = rNF(q_j, G^(j-1)) - C_j + M_j.

    G^(j-1) is the frozen-C Buchberger closure of q_1..q_(j-1).  With
    ``scan_prefixes`` each j additionally tries every shorter prefix basis and
    keeps a reduction with the fewest terms (some coordinates reduce to
    shorter representatives against a sub-prefix; all choices evaluate
    identically in the barycenter recursion).
    """
    if q is None:
        q = generate_q(shape)
    if order is None:
        order = MonomialOrder.lex_c_desc(len(q))
    closure = _IncrementalBuchberger(order)
    checkpoints = [0]
    out = []
    for j, qj in enumerate(q, start=1):
        s = rnf(qj, closure.reducers, order)
        if scan_prefixes:
            best = s
            for end in checkpoints[:-1]:
                cand = rnf(qj, closure.basis[:end], order)
                if cand.term_count < best.term_count:
                    best = cand
            s = best
        out.append(s - RationalPoly.c_symbol(j) + RationalPoly.m_symbol(j))
        closure.add(qj)
        checkpoints.append(closure.checkpoint())
    return out


def reduced_forms(
    shape: Shape, order: MonomialOrder | None = None, q=None
) -> list[RationalPoly]:
    """The normal forms rNF(q_j, G^(j-1)) themselves (r_j plus C_j - M_j)."""
    if q is None:
        q = generate_q(shape)
    if order is None:
        order = MonomialOrder.lex_c_desc(len(q))
    closure = _IncrementalBuchberger(order)
    out = []
    for qj in q:
        out.append(rnf(qj, closure.reducers, order))
        closure.add(qj)
    return out


def generate_abch_r(shape: Shape) -> list[RationalPoly]:
    """Correction polynomials from the asymmetrized BCH series.

    Computes f(ad_(-X)) applied to BCH(-X, Y) + X symbolically, which keeps
    only the odd-order graded parts; subtracting the linear C_j term leaves
    corrections that evaluate identically to the Groebner-reduced family.
    """
    basis = get_basis(shape.d, shape.L)
    x_neg = _sym_lie_generator(basis, "M", negate=True)
    y = _sym_lie_generator(basis, "C")
    bch = _sym_log(_sym_mul(_sym_exp(x_neg, shape), _sym_exp(y, shape), shape), shape)
    arg = _sym_zero(shape)
    _sym_scale_add(arg, bch, Fraction(1))
    _sym_scale_add(arg, x_neg, Fraction(-1))
    series = AdPowerSeries.bch_linear_part_inverse(shape.L)
    acc = _sym_zero(shape)
    power = arg
    for k, coeff in enumerate(series.coeffs):
        if coeff:
            _sym_scale_add(acc, power, coeff)
        if k + 1 < len(series.coeffs):
            fwd = _sym_mul(x_neg, power, shape)
            bwd = _sym_mul(power, x_neg, shape)
            _sym_scale_add(fwd, bwd, Fraction(-1))
            power = fwd
    coords = _sym_extract_coordinates(acc, basis)
    return [c - RationalPoly.c_symbol(j) for j, c in enumerate(coords, start=1)]


def term_counts(polys) -> list[int]:
    return [p.term_count for p in polys]


def max_r_terms(d: int, L: int, order_name: str | None = None, q=None) -> int:
    """Largest term count over the r_j family for one table cell.

    For d > L every coordinate polynomial is a letter-relabeling of one that
    already occurs at alphabet size L, so the maximum is computed at d = L.
    The (d=3, L=4) cell defaults to the degree-reverse-lex order with prefix
    scanning, where the maximum drops from 8 to 7; every other cell uses the
    default lexicographic order.
    """
    if d > L:
        return max_r_terms(L, L, order_name=order_name)
    shape = Shape(d, L)
    b = lie_dim_of(shape)
    scan = False
    if order_name is None:
        order_name = "degrevlex" if (d, L) == (3, 4) else "lex"
        scan = (d, L) == (3, 4)
    order = {
        "lex": MonomialOrder.lex_c_desc,
        "deglex": MonomialOrder.deglex_c_asc,
        "degrevlex": MonomialOrder.degrevlex_c_asc,
    }[order_name](b)
    r = generate_r(shape, order, q=q, scan_prefixes=scan)
    return max(term_counts(r), default=0)


def max_p_terms(d: int, L: int, q=None) -> int:
    """Largest term count over the p_j family (shares the q expansion, see p_from_q)."""
    if d > L:
        return max_p_terms(L, L)
    if q is None:
        q = generate_q(Shape(d, L))
    return max(term_counts(p_from_q(q)), default=0)


# -- Taylor terms for the online update ---------------------------------------------


def taylor_update_terms(p_tilde: RationalPoly, j: int) -> list[tuple[tuple, RationalPoly]]:
    """All nonzero partial derivatives of p~_j with respect to the M symbols.

    Returns (alpha, d^alpha p~ / dM^alpha) for every multi-index 1 <= |alpha|,
    alpha encoded like an M-part: sorted ((index, exponent), ...).  The count
    is bounded by binom(j-1+deg, deg).
    """
    frontier = {(): p_tilde}
    out: list[tuple[tuple, RationalPoly]] = []
    max_var = min(j - 1, p_tilde.max_m_index()) if j > 1 else 0
    while frontier:
        nxt: dict = {}
        for alpha, poly in frontier.items():
            last = alpha[-1][0] if alpha else 1
            for i in range(last, max_var + 1):
                dpoly = poly.diff_m(i)
                if not dpoly:
                    continue
                ad = dict(alpha)
                ad[i] = ad.get(i, 0) + 1
                nxt[tuple(sorted(ad.items()))] = dpoly
        out.extend(nxt.items())
        frontier = nxt
    return out


# -- ambient aBCH monomial counts ----------------------------------------------------


def ambient_correction_monomial_counts(L: int) -> dict[int, int]:
    """Monomials in the ambient asymmetrized-BCH correction R_k for k = 3..L.

    The correction at level k collects the odd graded parts of the series in
    two letters; substituting graded symbols for the letters turns each word
    of joint degree m into binom(k-1, m-1) distinct monomials, none of which
    can collide, so counting reduces to the exact two-letter expansion.
    """
    shape = Shape(2, L)
    x = TruncatedTensor.from_word(shape, (1,), Fraction(1), exact=True)
    y = TruncatedTensor.from_word(shape, (2,), Fraction(1), exact=True)
    series = AdPowerSeries.bch_linear_part_inverse(L)
    asym = apply_ad_series(series, x, log(mul(exp(x), exp(y))) - x)
    words_at = [sum(1 for v in block if v) for block in asym.levels]
    counts = {}
    for k in range(3, L + 1):
        counts[k] = sum(
            words_at[m] * math.comb(k - 1, m - 1) for m in range(3, k + 1, 2)
        )
    return counts


# -- emission --------------------------------------------------------------------------


def poly_to_json_terms(poly: RationalPoly) -> list[dict]:
    items = sorted(poly.terms(), key=lambda kv: (_mono_degree(kv[0]), kv[0]))
    return [
        {
            "coeff": str(coeff),
            "M": {str(i): e for i, e in mono[0]},
            "C": {str(i): e for i, e in mono[1]},
        }
        for mono, coeff in items
    ]


def family_to_json(symbol: str, polys: list[RationalPoly]) -> list[dict]:
    return [
        {"symbol": symbol, "j": j, "terms": poly_to_json_terms(p)}
        for j, p in enumerate(polys, start=1)
    ]
