"""Mixture-of-regressions model, observed likelihood, penalty and serialization.

A response y_i follows one of K linear models y_i = x_i' beta_k + e_ik with
probability pi_k, where e_ik is exponential-power distributed with shape p_k
and rate eta_k. The penalized objective subtracts
n * lambda * sum_k D_k * log((eps + pi_k) / eps) from the observed
log-likelihood; the log penalty drives small mixing weights to exactly zero
during fitting, which prunes components.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .epd import log_normalizer

# Columns in a data CSV that carry simulation metadata rather than regressors.
METADATA_COLUMNS = ("label", "outlier")


class DimensionMismatchError(ValueError):
    """Model and data disagree on the number of regressors."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix plus response vector.

    ``x`` is n x d (row i is x_i', optionally with a leading intercept
    column of ones), ``y`` has length n. ``columns`` names the d regressors.
    """

    x: np.ndarray
    y: np.ndarray
    columns: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 1:
            raise ValueError("x must be 2-d and y 1-d")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("need at least one observation and one regressor")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("x and y must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        cols = tuple(self.columns) if self.columns else tuple(f"x{j}" for j in range(x.shape[1]))
        if len(cols) != x.shape[1]:
            raise ValueError("column names do not match regressor count")
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_arrays(cls, x, y, intercept: bool = False, columns=None) -> "Dataset":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if columns is None:
            columns = [f"x{j + 1}" for j in range(x.shape[1])]
        columns = list(columns)
        if intercept:
            x = np.column_stack([np.ones(x.shape[0]), x])
            columns = ["intercept"] + columns
        return cls(x=x, y=np.asarray(y, dtype=float), columns=tuple(columns))

    @classmethod
    def from_csv(cls, path, intercept: bool = True) -> "Dataset":
        """Load a data CSV: header row, a ``y`` column, remaining columns
        regressors in header order. Columns named ``label`` or ``outlier``
        are simulation metadata and are skipped. ``intercept`` prepends a
        ones column."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty CSV") from None
            if "y" not in header:
                raise ValueError(f"{path}: no column named 'y'")
            rows = list(reader)
        if not rows:
            raise ValueError(f"{path}: no data rows")
        y_idx = header.index("y")
        keep = [j for j, name in enumerate(header)
                if j != y_idx and name not in METADATA_COLUMNS]
        try:
            data = np.array([[float(v) for v in row] for row in rows], dtype=float)
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric cell ({exc})") from None
        if data.shape[1] != len(header):
            raise ValueError(f"{path}: ragged rows")
        return cls.from_arrays(data[:, keep], data[:, y_idx], intercept=intercept,
                               columns=[header[j] for j in keep])


@dataclass(frozen=True)
class Component:
    """One regression component: mixing weight, coefficients, EP shape/rate."""

    pi: float
    beta: np.ndarray
    eta: float
    p: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite vector")
        if not (0.0 <= self.pi <= 1.0):
            raise ValueError(f"pi must lie in [0, 1], got {self.pi}")
        if not (np.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not (np.isfinite(self.p) and self.p > 0.0):
            raise ValueError(f"p must be > 0, got {self.p}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "pi", float(self.pi))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "p", float(self.p))

    @property
    def d(self) -> int:
        return self.beta.shape[0]


@dataclass(frozen=True)
class MixtureModel:
    """Ordered collection of components; mixing weights sum to one."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise ValueError("need at least one component")
        if len({c.d for c in comps}) != 1:
            raise ValueError("components disagree on coefficient dimension")
        total = sum(c.pi for c in comps)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"mixing weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].d

    @property
    def pis(self) -> np.ndarray:
        return np.array([c.pi for c in self.components])

    @property
    def betas(self) -> np.ndarray:
        """K x d matrix of coefficient vectors."""
        return np.vstack([c.beta for c in self.components])

    @property
    def etas(self) -> np.ndarray:
        return np.array([c.eta for c in self.components])

    @property
    def ps(self) -> np.ndarray:
        return np.array([c.p for c in self.components])

    @classmethod
    def from_arrays(cls, pis, betas, etas, ps) -> "MixtureModel":
        pis = np.asarray(pis, dtype=float)
        betas = np.atleast_2d(np.asarray(betas, dtype=float))
        etas = np.asarray(etas, dtype=float)
        ps = np.asarray(ps, dtype=float)
        return cls(tuple(Component(pi=pis[k], beta=betas[k], eta=etas[k], p=ps[k])
                         for k in range(len(pis))))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "components": [
                {"pi": c.pi, "beta": list(c.beta), "eta": c.eta, "p": c.p}
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MixtureModel":
        comps = tuple(Component(pi=c["pi"], beta=np.asarray(c["beta"], dtype=float),
                                eta=c["eta"], p=c["p"]) for c in doc["components"])
        return cls(comps)

    def to_json(self) -> str:
        # json round-trips python floats exactly (repr-based serialization)
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MixtureModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty tuning: strength ``lam``, offset ``epsilon`` and the
    free-parameter count ``d_k`` per component (scalar applied to all
    components, or one value per component)."""

    lam: float = 0.0
    epsilon: float = 1e-5
    d_k: object = 1

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        dk = np.atleast_1d(np.asarray(self.d_k, dtype=float))
        if np.any(dk < 1):
            raise ValueError("d_k must be >= 1")
        object.__setattr__(self, "d_k", self.d_k)

    def d_k_vector(self, k: int) -> np.ndarray:
        dk = np.atleast_1d(np.asarray(self.d_k, dtype=float))
        if dk.size == 1:
            return np.full(k, dk[0])
        if dk.size != k:
            raise ValueError(f"d_k has {dk.size} entries for {k} components")
        return dk.copy()


def component_log_densities(model: MixtureModel, data: Dataset) -> np.ndarray:
    """n x K matrix log(pi_k) + log f_k(y_i - x_i' beta_k)."""
    if model.d != data.d:
        raise DimensionMismatchError(
            f"model has d={model.d} coefficients but data has d={data.d} regressors")
    resid = data.y[:, None] - data.x @ model.betas.T
    ps, etas = model.ps, model.etas
    consts = np.array([log_normalizer(p, eta) for p, eta in zip(ps, etas)])
    with np.errstate(over="ignore"):  # |r|**p overflow means log-density -inf
        logf = consts[None, :] - etas[None, :] * np.abs(resid) ** ps[None, :]
    with np.errstate(divide="ignore"):  # pi_k = 0 maps to -inf, handled downstream
        logpi = np.log(model.pis)
    return logpi[None, :] + logf


def observed_log_likelihood(model: MixtureModel, data: Dataset) -> float:
    """sum_i log sum_k pi_k f_k(y_i - x_i' beta_k), via log-sum-exp."""
    return float(logsumexp(component_log_densities(model, data), axis=1).sum())


def penalty(pis, cfg: PenaltyConfig, n: int) -> float:
    """n * lam * sum_k D_k * log((eps + pi_k) / eps); zero when lam is zero."""
    pis = np.asarray(pis, dtype=float)
    if np.any(pis < 0.0):
        raise ValueError("mixing weights must be nonnegative")
    dk = cfg.d_k_vector(pis.size)
    return float(n * cfg.lam * np.sum(dk * np.log((cfg.epsilon + pis) / cfg.epsilon)))


def penalized_log_likelihood(model: MixtureModel, data: Dataset, cfg: PenaltyConfig) -> float:
    """Observed log-likelihood minus the mixing-weight penalty."""
    return observed_log_likelihood(model, data) - penalty(model.pis, cfg, data.n)
