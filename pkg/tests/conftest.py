import numpy as np
import pytest

from nilmean.lyndon import get_basis
from nilmean.tensor import Shape, TruncatedTensor, exp


def random_lie_coords(shape: Shape, rng, scale: float = 0.6) -> np.ndarray:
    """Coordinates damped per level so products and logs stay well-conditioned."""
    basis = get_basis(shape.d, shape.L)
    return np.array(
        [rng.uniform(-scale, scale) * 0.6 ** (len(basis.words[b]) - 1) for b in range(basis.dim)]
    )


def random_lie_tensor(shape: Shape, rng, scale: float = 0.6) -> TruncatedTensor:
    basis = get_basis(shape.d, shape.L)
    return basis.to_tensor(random_lie_coords(shape, rng, scale))


def random_grouplike(shape: Shape, rng, scale: float = 0.6) -> TruncatedTensor:
    return exp(random_lie_tensor(shape, rng, scale))


def max_coeff_diff(a: TruncatedTensor, b: TruncatedTensor) -> float:
    return max(
        abs(x - y) for la, lb in zip(a.levels, b.levels) for x, y in zip(la, lb)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
