"""Named algorithm instances with their standard parameter choices.

Each preset fixes a potential, a regularizer domain and the accumulator
seed, following the tuning that yields the classical regret guarantees:

================  ==============  ===========  ==================================
preset            potential       domain       parameters
================  ==============  ===========  ==================================
adagrad-full      inverse trace   full         eta = b / sqrt(2), G0 = eps * I
adagrad-diag      inverse trace   diagonal     eta = b_inf / sqrt(2), G0 = eps * I
adaptive-ogd      inverse trace   isotropic    eta = c / sqrt(d), c = b / sqrt(2),
                                               G0 = 0
pnorm             inverse power   full         eta free (default b / sqrt(2)),
                                               G0 = eps * I
ons-full          log det         full         eps = d / (beta^2 b^2)
ons-diag          log det         diagonal     eps = d / (beta^2 b^2)
sc-ogd            log det         isotropic    beta = alpha d / gamma^2,
                                               eps = gamma^2, G0 = (eps / d) * I
================  ==============  ===========  ==================================

Here ``b`` / ``b_inf`` are the Euclidean / infinity diameters of the
feasible set (taken from the set when not supplied), ``gamma`` a bound
on gradient norms, ``alpha`` the strong-convexity and ``beta`` the
exp-concavity constant of the loss family.  Constants that only enter
the regret-bound formulas, not the update itself, are carried along in
``bound_params``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import AdaRegConfig
from .errors import ConfigError
from .linalg import SymmetricMatrix
from .potentials import AdaGradPotential, OnsPotential, PNormPotential, RegularizerDomain
from .sets import FeasibleSet

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class Preset:
    """A ready-to-run configuration plus the constants its regret bound uses."""

    algo_id: str
    config: AdaRegConfig
    bound_params: dict = field(default_factory=dict)


def _resolve_x1(fset: FeasibleSet, x1) -> np.ndarray:
    return fset.center_point() if x1 is None else np.asarray(x1, dtype=float)


def _diameter(fset: FeasibleSet, b: Optional[float], norm: str, name: str) -> float:
    if b is not None:
        if not (b > 0 and math.isfinite(b)):
            raise ConfigError(f"{name} must be positive and finite, got {b}")
        return float(b)
    return fset.diameter(norm)


def adagrad_full(fset, x1=None, b=None, epsilon=DEFAULT_EPSILON) -> Preset:
    """Full-matrix step sizes proportional to the inverse root of G_t."""
    b = _diameter(fset, b, "euclidean", "b")
    config = AdaRegConfig(
        potential=AdaGradPotential(eta=b / math.sqrt(2.0)),
        domain=RegularizerDomain.FULL,
        feasible_set=fset,
        x1=_resolve_x1(fset, x1),
        g0=SymmetricMatrix.identity(fset.dim, epsilon),
        epsilon=epsilon,
    )
    return Preset("adagrad-full", config, {"b": b})


def adagrad_diag(fset, x1=None, b_inf=None, epsilon=DEFAULT_EPSILON) -> Preset:
    """Per-coordinate step sizes from the diagonal of the accumulator."""
    b_inf = _diameter(fset, b_inf, "infinity", "b_inf")
    config = AdaRegConfig(
        potential=AdaGradPotential(eta=b_inf / math.sqrt(2.0)),
        domain=RegularizerDomain.DIAGONAL,
        feasible_set=fset,
        x1=_resolve_x1(fset, x1),
        g0=SymmetricMatrix.identity(fset.dim, epsilon),
        epsilon=epsilon,
    )
    return Preset("adagrad-diag", config, {"b_inf": b_inf})


def adaptive_ogd(fset, x1=None, c=None, b=None) -> Preset:
    """Scalar step size c / sqrt(sum of squared gradient norms); G0 = 0."""
    if c is None:
        b = _diameter(fset, b, "euclidean", "b")
        c = b / math.sqrt(2.0)
    elif not (c > 0 and math.isfinite(c)):
        raise ConfigError(f"c must be positive and finite, got {c}")
    if b is None:
        b = c * math.sqrt(2.0)
    d = fset.dim
    config = AdaRegConfig(
        potential=AdaGradPotential(eta=c / math.sqrt(d)),
        domain=RegularizerDomain.ISOTROPIC,
        feasible_set=fset,
        x1=_resolve_x1(fset, x1),
        g0=SymmetricMatrix.zero(d),
        epsilon=0.0,
    )
    return Preset("adaptive-ogd", config, {"b": b, "c": c})


def pnorm(fset, p, x1=None, b=None, eta=None, epsilon=DEFAULT_EPSILON) -> Preset:
    """Full-matrix step sizes proportional to G_t^(-1/(p+1)).

    ``eta`` defaults to b / sqrt(2), the value that is optimal at p = 1.
    The harness can instead supply the eta that optimizes the bound for a
    known final accumulator.
    """
    b = _diameter(fset, b, "euclidean", "b")
    if eta is None:
        eta = b / math.sqrt(2.0)
    config = AdaRegConfig(
        potential=PNormPotential(eta=eta, p=p),
        domain=RegularizerDomain.FULL,
        feasible_set=fset,
        x1=_resolve_x1(fset, x1),
        g0=SymmetricMatrix.identity(fset.dim, epsilon),
        epsilon=epsilon,
    )
    return Preset("pnorm", config, {"b": b, "p": p, "eta": eta})


def optimal_pnorm_eta(b: float, p: float, g_spectrum: np.ndarray) -> float:
    """The eta minimizing the p-family regret bound for a known spectrum."""
    lam = np.asarray(g_spectrum, dtype=float)
    num = float(np.sum(lam ** (1.0 / (p + 1.0))))
    den = float(np.sum(lam ** (p / (p + 1.0))))
    if den <= 0.0:
        raise ConfigError("cannot tune eta: accumulator spectrum is zero")
    return b * math.sqrt(p / (p + 1.0) * num / den)


def _ons_like(algo_id, domain, fset, beta, x1, b, gamma) -> Preset:
    if not (beta > 0 and math.isfinite(beta)):
        raise ConfigError(f"beta must be positive and finite, got {beta}")
    b = _diameter(fset, b, "euclidean", "b")
    d = fset.dim
    epsilon = d / (beta**2 * b**2)
    config = AdaRegConfig(
        potential=OnsPotential(beta=beta),
        domain=domain,
        feasible_set=fset,
        x1=_resolve_x1(fset, x1),
        g0=SymmetricMatrix.identity(d, epsilon),
        epsilon=epsilon,
    )
    params = {"beta": beta, "b": b, "d": d}
    if gamma is not None:
        params["gamma"] = gamma
    return Preset(algo_id, config, params)


def ons_full(fset, beta, x1=None, b=None, gamma=None) -> Preset:
    """Full-matrix inverse-accumulator steps for exp-concave losses."""
    return _ons_like("ons-full", RegularizerDomain.FULL, fset, beta, x1, b, gamma)


def ons_diag(fset, beta, x1=None, b=None, gamma=None) -> Preset:
    """Diagonal inverse-accumulator steps for coordinatewise exp-concave losses."""
    return _ons_like("ons-diag", RegularizerDomain.DIAGONAL, fset, beta, x1, b, gamma)


def sc_ogd(fset, alpha, gamma, x1=None) -> Preset:
    """Gradient descent with the 1/t-style step schedule for strongly convex losses.

    The scalar step at round t is (d / beta) / (eps + sum of squared
    gradient norms) with beta = alpha d / gamma^2 and eps = gamma^2.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ConfigError(f"alpha must be positive and finite, got {alpha}")
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ConfigError(f"gamma must be positive and finite, got {gamma}")
    d = fset.dim
    beta = alpha * d / gamma**2
    epsilon = gamma**2
    config = AdaRegConfig(
        potential=OnsPotential(beta=beta),
        domain=RegularizerDomain.ISOTROPIC,
        feasible_set=fset,
        x1=_resolve_x1(fset, x1),
        g0=SymmetricMatrix.identity(d, epsilon / d),
        epsilon=epsilon,
    )
    return Preset("sc-ogd", config, {"alpha": alpha, "gamma": gamma, "beta": beta, "d": d})


PRESET_BUILDERS = {
    "adagrad-full": adagrad_full,
    "adagrad-diag": adagrad_diag,
    "adaptive-ogd": adaptive_ogd,
    "pnorm": pnorm,
    "ons-full": ons_full,
    "ons-diag": ons_diag,
    "sc-ogd": sc_ogd,
}


def make_preset(algo_id: str, fset: FeasibleSet, **params) -> Preset:
    """Build a preset by registry name; see the module table for parameters."""
    try:
        builder = PRESET_BUILDERS[algo_id]
    except KeyError:
        known = ", ".join(sorted(PRESET_BUILDERS))
        raise ConfigError(f"unknown algorithm {algo_id!r}; known: {known}") from None
    return builder(fset, **params)
