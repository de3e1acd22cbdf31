"""Spectral potentials and closed-form regularizer selection.

A spectral potential assigns matrices the value ``Phi(H) = -tr(phi(H))``
for a concave scalar ``phi`` on the positive reals.  The regularizer used
at each round is the minimizer of ``<G, H> + Phi(H)`` over one of three
domains: the full positive-definite cone, its diagonal slice, or the
isotropic (scalar multiple of identity) slice.  In every case the
minimizer has a closed form through the inverse of ``phi'``:

* full cone:  ``H = (phi')^{-1}(G)`` applied spectrally,
* diagonal:   ``H = diag((phi')^{-1}(diag(G)))``,
* isotropic:  ``H = (phi')^{-1}(tr(G) / d) * I``.

Three potential families are provided.  The inverse-trace potential
``eta^2 tr(H^{-1})`` recovers matrix step sizes proportional to
``G^{-1/2}``; the log-determinant potential ``-(1/beta) log det H``
recovers ``(beta G)^{-1}``; the inverse-power family
``(eta^{p+1}/p) tr(H^{-p})`` interpolates, giving ``eta G^{-1/(p+1)}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularMatrixError, ValidationError
from .linalg import SymmetricMatrix, clamp_spectrum, eig_sym


class RegularizerDomain(enum.Enum):
    """Admissible matrix families for the regularizer minimization."""

    FULL = "full"
    DIAGONAL = "diagonal"
    ISOTROPIC = "isotropic"


class SpectralPotential:
    """Base class: subclasses define phi on (0, inf) and its primitives.

    ``phi``, ``phi_prime`` and ``phi_prime_inverse`` accept scalars or
    arrays and evaluate elementwise.  ``phi_prime`` is strictly
    decreasing on (0, inf) for every family here, so the inverse is
    well defined on (0, inf).
    """

    #: limit of phi(x) as x -> inf; finite (zero) for the inverse-trace and
    #: inverse-power families, divergent for the log-determinant family.
    phi_limit_at_inf: float = 0.0

    def phi(self, x):
        raise NotImplementedError

    def phi_prime(self, x):
        raise NotImplementedError

    def phi_prime_inverse(self, y):
        raise NotImplementedError

    def _require_positive(self, v, what: str):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            bad = v[~(np.isfinite(v) & (v > 0.0))].flat[0]
            raise DomainError(f"{self.__class__.__name__}: {what} must be positive, got {bad!r}")
        return v


@dataclass(frozen=True)
class AdaGradPotential(SpectralPotential):
    """phi(x) = -eta^2 / x, so Phi(H) = eta^2 tr(H^{-1})."""

    eta: float

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ValidationError(f"eta must be positive and finite, got {self.eta}")

    def phi(self, x):
        x = self._require_positive(x, "phi argument")
        return -self.eta**2 / x

    def phi_prime(self, x):
        x = self._require_positive(x, "phi' argument")
        return self.eta**2 / x**2

    def phi_prime_inverse(self, y):
        y = self._require_positive(y, "phi' inverse argument")
        return self.eta / np.sqrt(y)


@dataclass(frozen=True)
class OnsPotential(SpectralPotential):
    """phi(x) = log(x) / beta, so Phi(H) = -(1/beta) log det H."""

    beta: float
    phi_limit_at_inf = float("inf")

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValidationError(f"beta must be positive and finite, got {self.beta}")

    def phi(self, x):
        x = self._require_positive(x, "phi argument")
        return np.log(x) / self.beta

    def phi_prime(self, x):
        x = self._require_positive(x, "phi' argument")
        return 1.0 / (self.beta * x)

    def phi_prime_inverse(self, y):
        y = self._require_positive(y, "phi' inverse argument")
        return 1.0 / (self.beta * y)


@dataclass(frozen=True)
class PNormPotential(SpectralPotential):
    """phi(x) = -(eta^{p+1} / p) x^{-p}, so Phi(H) = (eta^{p+1}/p) tr(H^{-p}).

    ``p = 1`` coincides with :class:`AdaGradPotential` at the same eta.
    """

    eta: float
    p: float

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ValidationError(f"eta must be positive and finite, got {self.eta}")
        if not (0.0 < self.p <= 16.0):
            raise ValidationError(f"p must lie in (0, 16], got {self.p}")

    def phi(self, x):
        x = self._require_positive(x, "phi argument")
        return -(self.eta ** (self.p + 1) / self.p) * x ** (-self.p)

    def phi_prime(self, x):
        x = self._require_positive(x, "phi' argument")
        return self.eta ** (self.p + 1) * x ** (-(self.p + 1))

    def phi_prime_inverse(self, y):
        y = self._require_positive(y, "phi' inverse argument")
        return self.eta * y ** (-1.0 / (self.p + 1))


def potential_value(potential: SpectralPotential, h: SymmetricMatrix) -> float:
    """Phi(H) = -sum_i phi(lam_i(H)); requires H positive definite."""
    lam = clamp_spectrum(np.linalg.eigvalsh(h.mat))
    if np.any(lam <= 0.0):
        raise DomainError(
            f"potential undefined: matrix has nonpositive eigenvalue {lam.min():.6e}"
        )
    return float(-np.sum(potential.phi(lam)))


@dataclass(frozen=True)
class RegularizerSolution:
    """Minimizer of <G, H> + Phi(H) plus quantities the engine reuses.

    ``h_inv`` is the inverse of the minimizer, ``phi_h`` the potential value
    Phi(H), and ``g_dot_h`` the inner product <G, H>, all computed from the
    same decomposition of G so they agree to round-off.  ``g_spectrum``
    is the spectrum of G as seen by the domain: eigenvalues for the full
    cone, diagonal entries for the diagonal slice, and the mean
    eigenvalue replicated for the isotropic slice.
    """

    h: SymmetricMatrix
    h_inv: SymmetricMatrix
    phi_h: float
    g_dot_h: float
    g_spectrum: np.ndarray


def solve_regularizer(
    potential: SpectralPotential, g_mat: SymmetricMatrix, domain: RegularizerDomain
) -> RegularizerSolution:
    """Closed-form minimizer of <G, H> + Phi(H) over the given domain."""
    d = g_mat.dim
    if domain is RegularizerDomain.FULL:
        dec = eig_sym(g_mat)
        lam = clamp_spectrum(dec.eigenvalues)
        _check_positive_spectrum(lam, "full")
        h_lam = np.asarray(potential.phi_prime_inverse(lam), dtype=float)
        u = dec.eigenvectors
        h = SymmetricMatrix(u @ (h_lam[:, None] * u.T))
        h_inv = SymmetricMatrix(u @ ((1.0 / h_lam)[:, None] * u.T))
        phi_h = float(-np.sum(potential.phi(h_lam)))
        g_dot_h = float(np.sum(lam * h_lam))
        spectrum = lam
    elif domain is RegularizerDomain.DIAGONAL:
        v = clamp_spectrum(np.diag(g_mat.mat).copy())
        _check_positive_spectrum(v, "diagonal")
        h_v = np.asarray(potential.phi_prime_inverse(v), dtype=float)
        h = SymmetricMatrix.from_diagonal(h_v)
        h_inv = SymmetricMatrix.from_diagonal(1.0 / h_v)
        phi_h = float(-np.sum(potential.phi(h_v)))
        g_dot_h = float(np.sum(v * h_v))
        spectrum = v
    elif domain is RegularizerDomain.ISOTROPIC:
        m = g_mat.trace() / d
        if m <= 0.0:
            raise SingularMatrixError(
                f"isotropic regularizer undefined: mean eigenvalue {m:.6e} is nonpositive"
            )
        s = float(potential.phi_prime_inverse(m))
        h = SymmetricMatrix.identity(d, s)
        h_inv = SymmetricMatrix.identity(d, 1.0 / s)
        phi_h = float(-d * potential.phi(s))
        g_dot_h = float(g_mat.trace() * s)
        spectrum = np.full(d, m)
    else:  # pragma: no cover - enum is exhaustive
        raise ValidationError(f"unknown regularizer domain {domain!r}")
    return RegularizerSolution(h=h, h_inv=h_inv, phi_h=phi_h, g_dot_h=g_dot_h, g_spectrum=spectrum)


def minimize_regularizer(
    potential: SpectralPotential, g_mat: SymmetricMatrix, domain: RegularizerDomain
) -> SymmetricMatrix:
    """The regularizer the algorithm plays: argmin_H <G, H> + Phi(H)."""
    return solve_regularizer(potential, g_mat, domain).h


def _check_positive_spectrum(lam: np.ndarray, label: str) -> None:
    if np.any(lam <= 0.0):
        raise SingularMatrixError(
            f"{label} regularizer undefined: gradient-outer-product matrix has "
            f"nonpositive eigenvalue {lam.min():.6e}"
        )
