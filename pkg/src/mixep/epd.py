"""Exponential power distribution: density, log-density and sampling.

The family is parameterized by a shape exponent ``p`` and a rate ``eta``:

    f(e) = p * eta**(1/p) / (2 * Gamma(1/p)) * exp(-eta * |e|**p)

``p = 2`` with ``eta = 1/(2 sigma^2)`` is the normal distribution,
``p = 1`` is the Laplace distribution with rate ``eta``, and ``p < 2``
has tails heavy enough to absorb outliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class EPParams:
    """Shape/rate parameter pair of an exponential power distribution.

    Attributes
    ----------
    p : float
        Shape exponent, > 0.
    eta : float
        Rate parameter, > 0, in units of ``|e|**(-p)``.
    """

    p: float
    eta: float

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 0.0):
            raise ValueError(f"shape exponent p must be finite and > 0, got {self.p}")
        if not (np.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError(f"rate eta must be finite and > 0, got {self.eta}")


def log_gamma(x):
    """Natural log of the Gamma function for x > 0.

    Thin wrapper over ``scipy.special.gammaln`` (a Lanczos-class
    implementation) with an explicit domain check; relative error is
    well below 1e-12 on [1e-3, 1e3].
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(~np.isfinite(x)):
        raise ValueError("log_gamma requires x > 0")
    out = special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def log_normalizer(p: float, eta: float) -> float:
    """log of the density height factor p * eta**(1/p) / (2 * Gamma(1/p))."""
    return float(np.log(p) + np.log(eta) / p - np.log(2.0) - special.gammaln(1.0 / p))


def ep_log_density(e, params: EPParams):
    """Log-density at ``e`` (scalar or array); evaluated fully in log space."""
    e = np.asarray(e, dtype=float)
    out = log_normalizer(params.p, params.eta) - params.eta * np.abs(e) ** params.p
    return float(out) if out.ndim == 0 else out


def ep_density(e, params: EPParams):
    """Density at ``e``; thin exp() wrapper over the log-density."""
    out = np.exp(ep_log_density(e, params))
    return float(out) if np.ndim(out) == 0 else out


def ep_sample(params: EPParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. values.

    Uses the exact gamma-power transform: G ~ Gamma(shape=1/p, rate=eta),
    |e| = G**(1/p), with an independent uniform sign. Deterministic for a
    given generator state.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    g = rng.gamma(shape=1.0 / params.p, scale=1.0 / params.eta, size=count)
    magnitude = g ** (1.0 / params.p)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    return sign * magnitude


def unit_variance_eta(p: float) -> float:
    """Rate giving the EP(p) distribution unit variance.

    Var = Gamma(3/p) / (Gamma(1/p) * eta**(2/p)), so eta =
    (Gamma(3/p)/Gamma(1/p))**(p/2). At p=2 this is 1/2, the standard
    normal parameterization.
    """
    if p <= 0.0:
        raise ValueError("p must be > 0")
    return float(np.exp((special.gammaln(3.0 / p) - special.gammaln(1.0 / p)) * (p / 2.0)))
