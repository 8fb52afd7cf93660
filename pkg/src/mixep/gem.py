"""Penalized generalized EM for exponential power mixture regression.

One iteration runs, in order:

1. E-step: responsibilities by Bayes' rule, in log space.
2. Mixing-weight update pi_k = max(0, N_k/n - lam*D_k) / (normalizer over
   survivors); zeroed components are removed immediately and the remaining
   responsibility columns renormalized.
3. Rate update eta_k = N_k / (p_k * sum_i gamma_ik |r_ik|**p_k) at the
   current coefficients.
4. One majorize-minimize step for each beta_k: weighted least squares with
   weights gamma_ik * eta_k * W_ik, where W_ik = (p_k/2) (r_ik^2)^(p_k/2-1)
   is evaluated at the previous coefficients. A single step suffices for
   monotone ascent of the penalized objective (generalized EM); the
   surrogate majorizes |r|**p only for p <= 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .model import (
    Dataset,
    MixtureModel,
    PenaltyConfig,
    component_log_densities,
    penalized_log_likelihood,
    observed_log_likelihood,
)

ETA_CAP = 1e12
RIDGE = 1e-10


class DegenerateModelError(RuntimeError):
    """Every component density underflowed for some observation."""


class AllComponentsPrunedError(RuntimeError):
    """The mixing-weight update zeroed every component (lambda too large)."""


class SingularSystemError(RuntimeError):
    """A ridge-stabilized weighted least-squares solve still failed."""


class InsufficientDataError(ValueError):
    """Too few observations to initialize the requested component count."""


@dataclass(frozen=True)
class Responsibilities:
    """n x K posterior membership matrix; rows sum to one."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2:
            raise ValueError("gamma must be 2-d")
        if np.any(g < -1e-12) or np.any(g > 1.0 + 1e-12):
            raise ValueError("gamma entries must lie in [0, 1]")
        if np.any(np.abs(g.sum(axis=1) - 1.0) > 1e-10):
            raise ValueError("gamma rows must sum to 1")
        object.__setattr__(self, "gamma", g)

    @property
    def n_k(self) -> np.ndarray:
        """Column sums: expected membership count per component."""
        return self.gamma.sum(axis=0)


@dataclass(frozen=True)
class FitConfig:
    """Tuning inputs for a fit.

    ``p_policy`` is either a single shape exponent applied to all
    components or a grid of candidates; a grid repeats the full fit per
    candidate and keeps the highest penalized objective. ``d_k`` is the
    per-component free-parameter count used by the penalty (None means
    d + 1: the coefficients plus the rate).
    """

    k_max: int = 2
    lam: float = 0.0
    epsilon: float = 1e-5
    p_policy: object = (1.0, 1.5, 2.0)
    max_iter: int = 500
    tol: float = 1e-8
    n_starts: int = 10
    residual_floor: float = 1e-10
    seed: int = 0
    d_k: object = None

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be > 0")
        if self.residual_floor <= 0.0:
            raise ValueError("residual_floor must be > 0")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        for p in self.p_candidates():
            if p <= 0.0:
                raise ValueError("every candidate p must be > 0")

    def p_candidates(self) -> tuple:
        if np.isscalar(self.p_policy):
            return (float(self.p_policy),)
        return tuple(float(p) for p in self.p_policy)

    def penalty_config(self, d: int) -> PenaltyConfig:
        d_k = self.d_k if self.d_k is not None else d + 1
        return PenaltyConfig(lam=self.lam, epsilon=self.epsilon, d_k=d_k)


@dataclass(frozen=True)
class FitResult:
    """Fitted model plus fit diagnostics.

    ``trace`` holds the penalized objective at the initial model and after
    every iteration; it is nondecreasing up to tiny numerical slack.
    """

    model: MixtureModel
    responsibilities: Responsibilities
    trace: np.ndarray
    converged: bool
    iterations: int

    @property
    def objective(self) -> float:
        return float(self.trace[-1])


def e_step(model: MixtureModel, data: Dataset) -> Responsibilities:
    """Posterior component memberships, computed with log-sum-exp."""
    lw = component_log_densities(model, data)
    if np.any(np.max(lw, axis=1) == -np.inf):
        raise DegenerateModelError(
            "all component densities underflowed for at least one observation")
    return Responsibilities(np.exp(lw - logsumexp(lw, axis=1)[:, None]))


def m_step_pi(resp: Responsibilities, cfg: FitConfig, d_k) -> np.ndarray:
    """Penalized mixing-weight update.

    Returns max(0, N_k/n - lam*D_k) renormalized over the surviving
    components; components whose responsibility share is at or below
    lam*D_k get exactly zero.
    """
    m = resp.gamma.mean(axis=0)
    d_k = np.broadcast_to(np.atleast_1d(np.asarray(d_k, dtype=float)), m.shape)
    raw = np.maximum(0.0, m - cfg.lam * d_k)
    total = raw.sum()
    if total <= 0.0:
        raise AllComponentsPrunedError(
            f"every component fell below the pruning threshold (lam={cfg.lam})")
    return raw / total


def m_step_eta(resp: Responsibilities, data: Dataset, betas, ps,
               floor: float = 1e-10) -> np.ndarray:
    """Rate update eta_k = N_k / (p_k sum_i gamma_ik |r_ik|**p_k).

    Residual magnitudes are floored at ``floor`` and the result capped at
    1e12, so near-interpolating components cannot produce infinities.
    """
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    ps = np.asarray(ps, dtype=float)
    resid = data.y[:, None] - data.x @ betas.T
    amag = np.maximum(np.abs(resid), floor)
    n_k = resp.n_k
    denom = ps * np.sum(resp.gamma * amag ** ps[None, :], axis=0)
    return np.minimum(n_k / denom, ETA_CAP)


def mm_weights(residuals, p: float, floor: float = 1e-10) -> np.ndarray:
    """Majorization weights W = (p/2) (max(r^2, floor^2))^(p/2 - 1).

    Identically one at p = 2; for p < 2 the weights downweight large
    residuals and the floor keeps them finite at r = 0.
    """
    r2 = np.maximum(np.square(np.asarray(residuals, dtype=float)), floor * floor)
    return (p / 2.0) * r2 ** (p / 2.0 - 1.0)


def m_step_beta(resp: Responsibilities, data: Dataset, etas, ps, betas_prev,
                floor: float = 1e-10) -> np.ndarray:
    """One MM step per component: solve the weighted normal equations
    (sum_i gamma_ik eta_k W_ik x_i x_i' + ridge I) beta = sum_i ... x_i y_i
    with W evaluated at ``betas_prev``."""
    betas_prev = np.atleast_2d(np.asarray(betas_prev, dtype=float))
    etas = np.asarray(etas, dtype=float)
    ps = np.asarray(ps, dtype=float)
    x, y = data.x, data.y
    out = np.empty_like(betas_prev)
    for k in range(betas_prev.shape[0]):
        resid = y - x @ betas_prev[k]
        w = resp.gamma[:, k] * etas[k] * mm_weights(resid, ps[k], floor)
        xw = x * w[:, None]
        gram = xw.T @ x + RIDGE * np.eye(data.d)
        rhs = xw.T @ y
        if not np.all(np.isfinite(gram)) or not np.all(np.isfinite(rhs)):
            raise SingularSystemError(f"non-finite weighted system for component {k}")
        try:
            out[k] = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"singular weighted system for component {k}") from exc
        if not np.all(np.isfinite(out[k])):
            raise SingularSystemError(f"non-finite solution for component {k}")
    return out


def gem_iterate(model: MixtureModel, data: Dataset, cfg: FitConfig):
    """One full GEM iteration; returns (model, responsibilities, objective).

    Components pruned by the mixing-weight update are dropped and the
    responsibility columns renormalized before the eta and beta updates.
    """
    lw = component_log_densities(model, data)
    if np.any(np.max(lw, axis=1) == -np.inf):
        raise DegenerateModelError(
            "all component densities underflowed for at least one observation")
    gamma = np.exp(lw - logsumexp(lw, axis=1)[:, None])
    pcfg = cfg.penalty_config(data.d)
    d_k = pcfg.d_k_vector(model.k)

    pis = m_step_pi(Responsibilities(gamma), cfg, d_k)
    keep = pis > 0.0
    betas, etas, ps = model.betas, model.etas, model.ps
    if not np.all(keep):
        lw = lw[:, keep]
        gamma = np.exp(lw - logsumexp(lw, axis=1)[:, None])
        pis, betas, etas, ps = pis[keep], betas[keep], etas[keep], ps[keep]
    resp = Responsibilities(gamma)

    etas = m_step_eta(resp, data, betas, ps, floor=cfg.residual_floor)
    betas = m_step_beta(resp, data, etas, ps, betas, floor=cfg.residual_floor)

    new_model = MixtureModel.from_arrays(pis, betas, etas, ps)
    objective = penalized_log_likelihood(new_model, data, pcfg)
    return new_model, resp, objective


def initialize(data: Dataset, cfg: FitConfig, rng: np.random.Generator) -> MixtureModel:
    """Best-of-``n_starts`` initial model.

    Each start partitions the observations uniformly at random into
    ``k_max`` groups, fits per-group ordinary least squares, sets the rates
    from the hard-assignment residuals, starts from uniform weights and
    runs 5 GEM iterations; the start with the highest penalized objective
    wins. Requires a fixed-p configuration.
    """
    pcand = cfg.p_candidates()
    if len(pcand) != 1:
        raise ValueError("initialize requires a fixed p; gem_fit resolves grids")
    p = pcand[0]
    n, d = data.n, data.d
    if n < cfg.k_max * (d + 1):
        raise InsufficientDataError(
            f"need at least k_max*(d+1) = {cfg.k_max * (d + 1)} observations, have {n}")
    pcfg = cfg.penalty_config(d)
    best_obj, best_model = -np.inf, None
    for _ in range(cfg.n_starts):
        groups = np.array_split(rng.permutation(n), cfg.k_max)
        betas = np.empty((cfg.k_max, d))
        etas = np.empty(cfg.k_max)
        for k, idx in enumerate(groups):
            betas[k], *_ = np.linalg.lstsq(data.x[idx], data.y[idx], rcond=None)
            r = np.maximum(np.abs(data.y[idx] - data.x[idx] @ betas[k]), cfg.residual_floor)
            etas[k] = min(len(idx) / (p * np.sum(r ** p)), ETA_CAP)
        model = MixtureModel.from_arrays(
            np.full(cfg.k_max, 1.0 / cfg.k_max), betas, etas, np.full(cfg.k_max, p))
        try:
            obj = None
            for _ in range(5):
                model, _, obj = gem_iterate(model, data, cfg)
        except (DegenerateModelError, AllComponentsPrunedError, SingularSystemError):
            continue
        if obj > best_obj:
            best_obj, best_model = obj, model
    if best_model is None:
        raise DegenerateModelError("every initialization start failed")
    return best_model


def _run_gem(model: MixtureModel, data: Dataset, cfg: FitConfig) -> FitResult:
    pcfg = cfg.penalty_config(data.d)
    trace = [penalized_log_likelihood(model, data, pcfg)]
    converged = False
    iterations = 0
    for _ in range(cfg.max_iter):
        model, _, obj = gem_iterate(model, data, cfg)
        iterations += 1
        prev = trace[-1]
        trace.append(obj)
        if abs(obj - prev) <= cfg.tol * max(1.0, abs(prev)):
            converged = True
            break
    return FitResult(model=model, responsibilities=e_step(model, data),
                     trace=np.asarray(trace), converged=converged, iterations=iterations)


def gem_fit(data: Dataset, cfg: FitConfig, init_model: MixtureModel | None = None) -> FitResult:
    """Fit by penalized GEM.

    Without ``init_model``, each candidate p in ``cfg.p_policy`` gets its
    own initialization (same seed, hence identical partitions) and full
    run; the candidate with the highest penalized objective is returned.
    With ``init_model``, a single GEM run starts from it as-is and the p
    grid is ignored.
    """
    if init_model is not None:
        return _run_gem(init_model, data, cfg)
    results = []
    errors = []
    for p in cfg.p_candidates():
        cfg_p = replace(cfg, p_policy=float(p))
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
        try:
            model0 = initialize(data, cfg_p, rng)
            results.append(_run_gem(model0, data, cfg_p))
        except (DegenerateModelError, AllComponentsPrunedError, SingularSystemError) as exc:
            errors.append(exc)
    if not results:
        raise errors[0]
    return max(results, key=lambda r: r.objective)


def bic(model: MixtureModel, data: Dataset, d_k=None) -> float:
    """Bayesian information criterion on the unpenalized log-likelihood,
    with sum_k D_k + (K - 1) free parameters."""
    if d_k is None:
        d_k = model.d + 1
    d_k = np.broadcast_to(np.atleast_1d(np.asarray(d_k, dtype=float)), (model.k,))
    n_params = float(d_k.sum()) + (model.k - 1)
    return -2.0 * observed_log_likelihood(model, data) + n_params * np.log(data.n)


def fit_lambda_grid(data: Dataset, cfg: FitConfig, lambdas,
                    init_model: MixtureModel | None = None):
    """Fit once per penalty strength and keep the BIC-best result.

    Returns (FitResult, chosen lambda). Ties and near-ties resolve to the
    earliest grid entry; candidates whose fit degenerates are skipped.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise ValueError("empty lambda grid")
    best = None
    errors = []
    for lam in lambdas:
        try:
            result = gem_fit(data, replace(cfg, lam=float(lam)), init_model=init_model)
        except (DegenerateModelError, AllComponentsPrunedError, SingularSystemError) as exc:
            errors.append(exc)
            continue
        score = bic(result.model, data, d_k=cfg.d_k)
        if best is None or score < best[0] - 1e-12:
            best = (score, result, float(lam))
    if best is None:
        raise errors[0]
    return best[1], best[2]
