from fractions import Fraction as F

import numpy as np
import pytest

from nilmean.lyndon import (
    LyndonBasis,
    get_basis,
    is_lyndon,
    lie_dim,
    lyndon_words,
    standard_factorization,
    star,
)
from nilmean.tensor import Shape, TruncatedTensor, exp, log, mul
from conftest import max_coeff_diff, random_lie_coords

# dimension table rows for L = 2..5, d = 2..7
DIM_TABLE = {
    2: [3, 6, 10, 15, 21, 28],
    3: [5, 14, 30, 55, 91, 140],
    4: [8, 32, 90, 205, 406, 728],
    5: [14, 80, 294, 829, 1960, 4088],
}


def test_lyndon_words_small():
    words = lyndon_words(Shape(2, 3))
    assert ["".join(map(str, w)) for w in words] == ["1", "2", "12", "112", "122"]
    assert lyndon_words(Shape(1, 5)) == [(1,)]
    words32 = lyndon_words(Shape(3, 2))
    assert ["".join(map(str, w)) for w in words32] == ["1", "2", "3", "12", "13", "23"]


def test_is_lyndon():
    assert is_lyndon((1, 1, 2)) and is_lyndon((1, 2, 2)) and is_lyndon((1, 3, 2))
    assert not is_lyndon((2, 1, 3)) and not is_lyndon((1, 2, 1, 2)) and not is_lyndon(())


@pytest.mark.parametrize("L", sorted(DIM_TABLE))
def test_dimension_formula_table(L):
    for d, expected in zip(range(2, 8), DIM_TABLE[L]):
        assert lie_dim(Shape(d, L)) == expected


def test_dimension_matches_enumeration():
    for d in range(1, 8):
        for L in range(1, 6):
            assert len(lyndon_words(Shape(d, L))) == lie_dim(Shape(d, L))


def test_standard_factorization():
    assert standard_factorization((1, 2)) == ((1,), (2,))
    assert standard_factorization((1, 1, 2)) == ((1,), (1, 2))
    assert standard_factorization((1, 2, 2)) == ((1, 2), (2,))
    assert standard_factorization((1, 1, 2, 2)) == ((1,), (1, 2, 2))
    # both factors are Lyndon and v is the longest Lyndon proper suffix
    for w in lyndon_words(Shape(3, 5)):
        if len(w) < 2:
            continue
        u, v = standard_factorization(w)
        assert is_lyndon(u) and is_lyndon(v) and u + v == w
        for start in range(1, len(w) - len(v)):
            assert not is_lyndon(w[start:]) or len(w) - start <= len(v)


def test_bracket_expansions():
    basis = get_basis(2, 3)
    s = basis.shape
    assert basis.expansion(basis.index[(1, 2)]) == {s.word_offset((1, 2)): 1, s.word_offset((2, 1)): -1}
    assert basis.expansion(basis.index[(1, 1, 2)]) == {
        s.word_offset((1, 1, 2)): 1,
        s.word_offset((1, 2, 1)): -2,
        s.word_offset((2, 1, 1)): 1,
    }
    assert basis.expansion(basis.index[(1, 2, 2)]) == {
        s.word_offset((1, 2, 2)): 1,
        s.word_offset((2, 1, 2)): -2,
        s.word_offset((2, 2, 1)): 1,
    }


def test_expansion_unitriangular():
    # the expansion of a Lyndon word is the word itself plus lex-larger words
    for d, L in [(2, 5), (3, 4)]:
        basis = get_basis(d, L)
        for b, w in enumerate(basis.words):
            exp_words = {}
            for off, c in basis.expansion(b).items():
                digits = []
                o = off
                for _ in range(len(w)):
                    digits.append(o % d + 1)
                    o //= d
                exp_words[tuple(reversed(digits))] = c
            assert exp_words[w] == 1
            assert all(v >= w for v in exp_words)


def test_to_from_tensor_round_trip_exact():
    basis = get_basis(2, 4)
    vals = [F(1, 3), F(-2, 5), F(1, 7), F(3, 2), F(0), F(-1, 9), F(2, 11), F(5, 4)]
    t = basis.to_tensor(vals)
    assert basis.from_tensor(t) == vals


def test_from_tensor_rejects_non_lie():
    basis = get_basis(2, 2)
    t = TruncatedTensor.zero(basis.shape)
    t.levels[2] = np.array([0.0, 1.0, 1.0, 0.0])  # symmetric part 12+21
    with pytest.raises(ValueError, match="not a Lie element"):
        basis.from_tensor(t)


def test_from_tensor_on_signatures(rng):
    from nilmean.paths import PiecewiseLinearPath, sig_pwl

    shape = Shape(3, 4)
    basis = get_basis(3, 4)
    sig = sig_pwl(PiecewiseLinearPath(rng.standard_normal((6, 3)) * 0.5), shape)
    coords = basis.from_tensor(log(sig))
    assert max_coeff_diff(basis.to_tensor(coords), log(sig)) < 1e-10


def test_star_identity_and_inverse(rng):
    basis = get_basis(2, 3)
    u = list(random_lie_coords(basis.shape, rng))
    zero = [0.0] * basis.dim
    assert np.allclose(star(basis, u, zero), u)
    assert np.allclose(star(basis, zero, u), u)
    assert np.abs(np.asarray(star(basis, u, [-a for a in u]))).max() < 1e-14


def test_star_heisenberg_closed_form():
    basis = get_basis(2, 2)
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = [F(int(rng.integers(-9, 10)), int(rng.integers(1, 10))) for _ in range(3)]
        v = [F(int(rng.integers(-9, 10)), int(rng.integers(1, 10))) for _ in range(3)]
        out = star(basis, u, v)
        expected = [
            u[0] + v[0],
            u[1] + v[1],
            u[2] + v[2] + F(1, 2) * (u[0] * v[1] - u[1] * v[0]),
        ]
        assert out == expected


def test_star_heisenberg_matrix_isomorphism(rng):
    def phi(u):
        return np.array(
            [[1.0, u[0], u[2] + 0.5 * u[0] * u[1]], [0.0, 1.0, u[1]], [0.0, 0.0, 1.0]]
        )

    basis = get_basis(2, 2)
    for _ in range(20):
        u = rng.uniform(-2, 2, 3)
        v = rng.uniform(-2, 2, 3)
        w = np.asarray(star(basis, u, v), dtype=float)
        assert np.abs(phi(u) @ phi(v) - phi(w)).max() < 1e-12


def test_star_associative(rng):
    basis = get_basis(2, 3)
    u, v, w = (list(random_lie_coords(basis.shape, rng)) for _ in range(3))
    lhs = star(basis, star(basis, u, v), w)
    rhs = star(basis, u, star(basis, v, w))
    assert np.abs(np.asarray(lhs) - np.asarray(rhs)).max() < 1e-10


def test_star_grading(rng):
    # component j of u*v minus u_j - v_j depends only on coordinates below j
    basis = get_basis(2, 4)
    u = random_lie_coords(basis.shape, rng)
    v = random_lie_coords(basis.shape, rng)
    base = np.asarray(star(basis, u, v))
    for j in range(basis.dim):
        u2, v2 = u.copy(), v.copy()
        u2[j:] = rng.uniform(-0.5, 0.5, basis.dim - j)
        v2[j:] = rng.uniform(-0.5, 0.5, basis.dim - j)
        moved = np.asarray(star(basis, u2, v2))
        corr_base = base[j] - u[j] - v[j]
        corr_moved = moved[j] - u2[j] - v2[j]
        assert abs(corr_base - corr_moved) < 1e-10


def test_basis_json():
    rows = get_basis(2, 3).basis_json()
    assert rows[2] == {"index": 3, "word": "12", "level": 2, "factorization": ["1", "2"]}
    assert rows[0]["factorization"] is None
