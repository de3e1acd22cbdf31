import numpy as np
import pytest

from adareg.linalg import SymmetricMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


def random_pd(rng, dim, lo=0.3, hi=3.0):
    """Random positive-definite matrix with spectrum in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    lam = rng.uniform(lo, hi, size=dim)
    return SymmetricMatrix(q @ (lam[:, None] * q.T))


def random_psd(rng, dim, rank=None):
    """Random positive-semidefinite matrix, optionally rank-deficient."""
    rank = dim if rank is None else rank
    w = rng.standard_normal((dim, rank))
    return SymmetricMatrix(w @ w.T / max(rank, 1))
