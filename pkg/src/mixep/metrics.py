"""Label alignment and replicated MSE/bias aggregation.

Mixture components are only identified up to permutation, so estimates are
aligned to the truth by the permutation minimizing the total squared
coefficient distance before errors are accumulated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_ALIGN_K = 8


@dataclass(frozen=True)
class ReplicateReport:
    """Per-coefficient MSE and bias over replicates.

    ``failure_count`` counts replicates dropped before aggregation
    (non-converged, degenerate, or wrong component count).
    """

    coefficients: tuple
    truth: np.ndarray
    mse: np.ndarray
    bias: np.ndarray
    replicate_count: int
    failure_count: int

    def __post_init__(self):
        if np.any(self.mse < np.square(self.bias) - 1e-12):
            raise ValueError("MSE below squared bias: aggregation is inconsistent")

    def to_dict(self) -> dict:
        return {
            "replicate_count": self.replicate_count,
            "failure_count": self.failure_count,
            "coefficients": [
                {"name": name, "truth": float(t), "mse": float(m), "bias": float(b)}
                for name, t, m, b in zip(self.coefficients, self.truth, self.mse, self.bias)
            ],
        }


def align_labels(estimated, truth) -> tuple:
    """Permutation sigma minimizing sum_k ||estimated[sigma[k]] - truth[k]||^2.

    Exhaustive search over all K! permutations (K <= 8); ties break to the
    lexicographically smallest permutation.
    """
    est = [np.asarray(b, dtype=float) for b in estimated]
    tru = [np.asarray(b, dtype=float) for b in truth]
    if len(est) != len(tru):
        raise ValueError(f"got {len(est)} estimates for {len(tru)} truth components")
    k = len(tru)
    if k > MAX_ALIGN_K:
        raise ValueError(f"alignment supports K <= {MAX_ALIGN_K}, got {k}")
    best_cost, best_perm = np.inf, None
    for perm in itertools.permutations(range(k)):
        cost = sum(float(np.sum((est[perm[j]] - tru[j]) ** 2)) for j in range(k))
        if cost < best_cost:
            best_cost, best_perm = cost, perm
    return best_perm


def alignment_cost(estimated, truth, perm) -> float:
    """Total squared distance achieved by a given alignment."""
    return sum(float(np.sum((np.asarray(estimated[perm[j]], dtype=float)
                             - np.asarray(truth[j], dtype=float)) ** 2))
               for j in range(len(truth)))


def coefficient_names(k: int, d: int) -> tuple:
    """beta_00, beta_01, ... indexed by (component, coefficient)."""
    return tuple(f"beta_{i}{j}" for i in range(k) for j in range(d))


def aggregate(replicate_estimates, truth, failure_count: int = 0,
              names=None) -> ReplicateReport:
    """Per-coefficient MSE and bias of aligned estimates against the truth.

    ``replicate_estimates`` is a sequence of already-aligned K x d
    coefficient matrices (component order matching ``truth``).
    """
    reps = [np.atleast_2d(np.asarray(r, dtype=float)) for r in replicate_estimates]
    if not reps:
        raise ValueError("need at least one replicate")
    tru = np.atleast_2d(np.asarray(truth, dtype=float))
    for r in reps:
        if r.shape != tru.shape:
            raise ValueError(f"estimate shape {r.shape} does not match truth {tru.shape}")
    errors = np.stack([r - tru for r in reps]).reshape(len(reps), -1)
    if names is None:
        names = coefficient_names(*tru.shape)
    return ReplicateReport(
        coefficients=tuple(names),
        truth=tru.ravel().copy(),
        mse=np.mean(errors ** 2, axis=0),
        bias=np.mean(errors, axis=0),
        replicate_count=len(reps),
        failure_count=int(failure_count),
    )
