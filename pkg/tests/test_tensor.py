import itertools
import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from nilmean.tensor import (
    AdPowerSeries,
    Shape,
    TruncatedTensor,
    apply_ad_series,
    bracket,
    descents,
    exp,
    inv,
    log,
    mul,
    permute,
    pi1,
    pi1_level,
    reversal,
    tensor_from_json,
    tensor_to_json,
)
from conftest import max_coeff_diff, random_grouplike, random_lie_tensor


def test_shape_basics():
    s = Shape(4, 5)
    assert s.ambient_dim == 1365
    assert s.level_sizes == (1, 4, 16, 64, 256, 1024)
    # big-endian word offsets
    assert Shape(2, 3).word_offset((1, 2)) == 1
    assert Shape(2, 3).word_offset((2, 1)) == 2
    assert Shape(3, 3).word_offset((2, 3, 1)) == 1 * 9 + 2 * 3 + 0
    with pytest.raises(ValueError):
        Shape(0, 3)
    with pytest.raises(ValueError):
        Shape(2, 3).word_offset((5,))


def test_mul_identity_and_degree_one(rng):
    s = Shape(2, 2)
    e = TruncatedTensor.identity(s)
    x = random_grouplike(s, rng)
    assert max_coeff_diff(mul(e, x), x) == 0
    assert max_coeff_diff(mul(x, e), x) == 0
    a = e + TruncatedTensor.from_word(s, (1,))
    b = e + TruncatedTensor.from_word(s, (2,))
    prod = mul(a, b)
    assert prod.levels[1].tolist() == [1.0, 1.0]
    assert prod.levels[2].tolist() == [0.0, 1.0, 0.0, 0.0]  # word 12 only


def test_mul_shape_mismatch():
    with pytest.raises(ValueError):
        mul(TruncatedTensor.identity(Shape(2, 2)), TruncatedTensor.identity(Shape(2, 3)))


def test_exp_log_inverse_pair(rng):
    s = Shape(3, 4)
    x = random_lie_tensor(s, rng)
    assert max_coeff_diff(log(exp(x)), x) < 1e-12
    g = random_grouplike(s, rng)
    assert max_coeff_diff(exp(log(g)), g) < 1e-12
    assert max_coeff_diff(mul(exp(x), exp(x.scale(-1))), TruncatedTensor.identity(s)) < 1e-12


def test_exp_single_letter():
    s = Shape(2, 2)
    g = exp(TruncatedTensor.from_word(s, (1,)))
    assert g.levels[0].tolist() == [1.0]
    assert g.levels[1].tolist() == [1.0, 0.0]
    assert g.levels[2].tolist() == [0.5, 0.0, 0.0, 0.0]


def test_inv_is_group_inverse(rng):
    s = Shape(2, 4)
    g = random_grouplike(s, rng)
    e = TruncatedTensor.identity(s)
    assert max_coeff_diff(mul(g, inv(g)), e) < 1e-12
    assert max_coeff_diff(mul(inv(g), g), e) < 1e-12
    assert max_coeff_diff(inv(inv(g)), g) < 1e-12
    assert max_coeff_diff(inv(e), e) == 0


def test_scalar_shape_hand_checks():
    # d=1, L=2: inv(1,a,b) = (1,-a,a^2-b); log(1,a,b) = (0,a,b-a^2/2)
    s = Shape(1, 2)
    a, b = 0.37, -0.21
    t = TruncatedTensor(s, [np.array([1.0]), np.array([a]), np.array([b])])
    assert np.allclose(inv(t).flat(), [1.0, -a, a * a - b])
    assert np.allclose(log(t).flat(), [0.0, a, b - a * a / 2])


def test_constant_term_guards():
    s = Shape(2, 2)
    g = TruncatedTensor.zero(s)
    with pytest.raises(ValueError):
        inv(g)
    with pytest.raises(ValueError):
        log(g)
    with pytest.raises(ValueError):
        exp(TruncatedTensor.identity(s))


def test_associativity_and_group_axioms(rng):
    s = Shape(2, 4)
    a, b, c = (random_grouplike(s, rng) for _ in range(3))
    assert max_coeff_diff(mul(mul(a, b), c), mul(a, mul(b, c))) < 1e-12


def test_exact_associativity():
    s = Shape(2, 3)
    rng = np.random.default_rng(5)
    tensors = []
    for _ in range(3):
        t = TruncatedTensor.zero(s, exact=True)
        for k in range(s.L + 1):
            t.levels[k] = [F(int(rng.integers(-5, 6)), int(rng.integers(1, 7))) for _ in range(s.d**k)]
        tensors.append(t)
    a, b, c = tensors
    assert mul(mul(a, b), c) == mul(a, mul(b, c))


def test_bracket_properties(rng):
    s = Shape(3, 3)
    x, y, z = (random_lie_tensor(s, rng) for _ in range(3))
    zero = TruncatedTensor.zero(s)
    assert max_coeff_diff(bracket(x, x), zero) < 1e-14
    assert max_coeff_diff(bracket(x, y), bracket(y, x).scale(-1)) < 1e-14
    jacobi = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
    assert max_coeff_diff(jacobi, zero) < 1e-12


def test_conjugation_equivariance(rng):
    # log(g^-1 x g) == g^-1 log(x) g for grouplike g, x
    s = Shape(2, 4)
    g, x = random_grouplike(s, rng), random_grouplike(s, rng)
    gi = inv(g)
    lhs = log(mul(gi, mul(x, g)))
    rhs = mul(gi, mul(log(x), g))
    assert max_coeff_diff(lhs, rhs) < 1e-10


def test_ad_series_coefficients():
    g = AdPowerSeries.bch_linear_part(7)
    assert g.coeffs[0] == 1 and g.coeffs[1] == F(1, 2)
    assert g.coeffs[2] == F(1, 12) and g.coeffs[3] == 0
    assert g.coeffs[4] == F(-1, 720) and g.coeffs[5] == 0 and g.coeffs[6] == F(1, 30240)
    f = AdPowerSeries.bch_linear_part_inverse(5)
    assert list(f.coeffs) == [F((-1) ** k, math.factorial(k + 1)) for k in range(5)]


def test_ad_series_composition_identity():
    for n in range(1, 8):
        comp = AdPowerSeries.bch_linear_part_inverse(n).compose(AdPowerSeries.bch_linear_part(n))
        assert comp.coeffs[0] == 1
        assert all(c == 0 for c in comp.coeffs[1:])


def test_apply_ad_series(rng):
    s = Shape(2, 4)
    x, y = random_lie_tensor(s, rng), random_lie_tensor(s, rng)
    ident = AdPowerSeries.identity(s.L)
    assert max_coeff_diff(apply_ad_series(ident, x, y), y) == 0
    # the linear-part operator leaves its own argument invariant
    g = AdPowerSeries.bch_linear_part(s.L)
    assert max_coeff_diff(apply_ad_series(g, x, x), x) < 1e-14
    # inverse series composes to the identity operator
    f = AdPowerSeries.bch_linear_part_inverse(s.L)
    assert max_coeff_diff(apply_ad_series(f, x, apply_ad_series(g, x, y)), y) < 1e-12


def test_permute_basics(rng):
    a = rng.standard_normal(9)
    assert np.allclose(permute(a, (1, 2)), a)
    assert np.allclose(permute(a, (2, 1)), a.reshape(3, 3).T.reshape(-1))
    b = rng.standard_normal(8)
    sigma = (3, 1, 2)
    inverse = (2, 3, 1)
    assert np.allclose(permute(permute(b, sigma), inverse), b)
    with pytest.raises(ValueError):
        permute(a, (1, 1))
    # exact path agrees with numpy path
    exact = permute(list(range(8)), sigma, d=2)
    numeric = permute(np.arange(8.0), sigma, d=2)
    assert np.allclose(exact, numeric)


def test_descents():
    assert descents((3, 1, 4, 2)) == 2
    assert descents((1, 2, 3, 4)) == 0
    assert descents(reversal(5)) == 4
    with pytest.raises(ValueError):
        descents((1, 3))


def test_pi1_level_two_and_three(rng):
    blk = rng.standard_normal(9)
    m = blk.reshape(3, 3)
    assert np.allclose(pi1_level(blk, 2, 3).reshape(3, 3), (m - m.T) / 2)
    # order 3: +1/3 on identity and reversal, -1/6 on the other four
    from nilmean.tensor import _pi1_coefficients

    coeffs = _pi1_coefficients(3)
    assert coeffs[(1, 2, 3)] == F(1, 3) and coeffs[(3, 2, 1)] == F(1, 3)
    for sigma in [(1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2)]:
        assert coeffs[sigma] == F(-1, 6)


def test_pi1_order_four_coefficient_classes():
    # +-1/4 on identity/reversal, -1/12 on the eleven one-descent permutations,
    # +1/12 on the eleven two-descent ones
    from nilmean.tensor import _pi1_coefficients

    coeffs = _pi1_coefficients(4)
    minus_group = [
        (1, 2, 4, 3), (1, 3, 2, 4), (1, 3, 4, 2), (1, 4, 2, 3),
        (2, 1, 3, 4), (2, 3, 1, 4), (2, 3, 4, 1), (2, 4, 1, 3),
        (3, 1, 2, 4), (3, 4, 1, 2), (4, 1, 2, 3),
    ]
    plus_group = [
        (3, 4, 2, 1), (4, 3, 2, 1), (2, 4, 3, 1), (3, 2, 4, 1),
        (4, 3, 1, 2), (4, 1, 3, 2), (1, 4, 3, 2), (3, 1, 4, 2),
        (4, 2, 1, 3), (2, 1, 4, 3), (3, 2, 1, 4),
    ]
    assert coeffs[(1, 2, 3, 4)] == F(1, 4)
    assert coeffs[(4, 3, 2, 1)] == F(-1, 4) or coeffs[(4, 3, 2, 1)] == F(1, 12)
    # the reversal has three descents: coefficient -1/4 * C(3,3)^-1 = -1/4
    assert coeffs[(4, 3, 2, 1)] == F(-1, 4)
    for sigma in minus_group:
        assert coeffs[sigma] == F(-1, 12), sigma
    for sigma in plus_group:
        if sigma == (4, 3, 2, 1):
            continue
        assert coeffs[sigma] == F(1, 12), sigma
    assert len(coeffs) == 24


def test_pi1_matches_log_on_grouplike(rng):
    for d, L in [(2, 3), (3, 4), (2, 5)]:
        s = Shape(d, L)
        g = random_grouplike(s, rng)
        assert max_coeff_diff(pi1(g), log(g)) < 1e-10


def test_pi1_linear_and_idempotent_on_logs(rng):
    s = Shape(2, 4)
    g, h = random_grouplike(s, rng), random_grouplike(s, rng)
    a, b = 0.7, -1.3
    lin = pi1(g.scale(a) + h.scale(b))
    assert max_coeff_diff(lin, pi1(g).scale(a) + pi1(h).scale(b)) < 1e-12
    # pi1 restricted to log images is the identity
    x = log(g)
    assert max_coeff_diff(pi1(exp(x)), x) < 1e-10


def test_pi1_reversal_symmetric_even_level(rng):
    # a symmetric-under-reversal even-level block is annihilated
    for k, d in [(2, 3), (4, 2)]:
        blk = rng.standard_normal(d**k)
        sym = blk + np.asarray(permute(blk, reversal(k), d))
        out = pi1_level(sym, k, d)
        assert np.abs(out).max() < 1e-12


def test_pi1_level_cap():
    s = Shape(1, 9)
    t = TruncatedTensor.identity(s)
    with pytest.raises(ValueError, match="permutations"):
        pi1(t)
    assert pi1(t, level_cap=9) is not None


def test_json_round_trip(rng):
    g = random_grouplike(Shape(2, 3), rng)
    blob = json.dumps(tensor_to_json(g))
    back = tensor_from_json(json.loads(blob))
    assert max_coeff_diff(g, back) == 0
    assert json.dumps(tensor_to_json(back)) == blob
