"""Seeded generators for the two-line benchmark scenarios.

The base design draws a component indicator Z with P(Z=1) = 0.5, regressors
X1, X2 ~ N(0,1), and sets y = X1 + e for component 1 and y = -X1 + e for
component 2; X2 is a decoy with true coefficient zero in both components.
Four error/contamination scenarios are provided:

* Case I    e ~ t with 1 degree of freedom (Cauchy).
* Case II   e ~ 0.95 N(0,1) + 0.05 N(0,25), a contaminated normal.
* Case III  e ~ N(0,1), then exactly 5% of rows are replaced by high
            leverage points with X1 = 2 + N(0,1) and y = 10 + N(0,1)
            (labels set to 0 = none).
* Case IV   e ~ N(0,1), and independently with probability 0.1 a shift
            drawn from Uniform(4, 6) is added to y.

All draws go through a counter-based Philox generator keyed by the spec
seed, so a SimSpec regenerates bit-identical output, and replicate
substreams are derived with SeedSequence((master_seed, replicate_index)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .epd import EPParams, ep_sample
from .model import Dataset, MixtureModel

CASES = ("I", "II", "III", "IV")

# Generating coefficients: (intercept, x1, x2) per component.
TRUTH_BETAS = np.array([[0.0, 1.0, 0.0],
                        [0.0, -1.0, 0.0]])
TRUTH_PIS = np.array([0.5, 0.5])


@dataclass(frozen=True)
class CustomSpec:
    """Generic mixture-regression sampler inputs: mixing weights, one
    coefficient vector (with intercept) per component and one EP error law
    per component. Regressors are drawn i.i.d. N(0,1)."""

    pis: tuple
    betas: tuple
    errors: tuple

    def __post_init__(self):
        if not (len(self.pis) == len(self.betas) == len(self.errors)):
            raise ValueError("pis, betas and errors must have equal length")
        if abs(sum(self.pis) - 1.0) > 1e-10:
            raise ValueError("mixing weights must sum to 1")


@dataclass(frozen=True)
class SimSpec:
    """What to generate: scenario name, sample count and seed."""

    case: str
    n: int
    seed: int = 0
    custom: CustomSpec | None = None

    def __post_init__(self):
        if self.case not in CASES + ("custom",):
            raise ValueError(f"case must be one of {CASES + ('custom',)}, got {self.case!r}")
        if self.case == "custom" and self.custom is None:
            raise ValueError("case 'custom' requires a CustomSpec")
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class SimDraw:
    """One generated dataset plus its ground truth.

    ``labels`` holds the generating component (1-based; 0 marks replaced
    leverage outliers that belong to no component), ``outlier_mask`` flags
    contaminated rows, ``eps`` stores the core error draws (meaningless for
    replaced rows), and ``truth`` is the generating mixture.
    """

    data: Dataset
    labels: np.ndarray
    outlier_mask: np.ndarray
    truth: MixtureModel
    eps: np.ndarray


def rng_for_seed(seed: int) -> np.random.Generator:
    """Philox generator keyed by an integer seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def replicate_seeds(master_seed: int, index: int) -> tuple:
    """(simulation seed, fit seed) for one replicate.

    Derived as SeedSequence((master_seed, index)).generate_state(2), so a
    replicate can be reproduced in isolation by passing these two seeds to
    the simulate and fit entry points.
    """
    ss = np.random.SeedSequence((int(master_seed), int(index)))
    sim_seed, fit_seed = ss.generate_state(2, np.uint64)
    return int(sim_seed), int(fit_seed)


def _truth_model(p: float = 2.0, eta: float = 0.5) -> MixtureModel:
    return MixtureModel.from_arrays(
        TRUTH_PIS, TRUTH_BETAS, np.full(2, eta), np.full(2, p))


def _generate_standard(spec: SimSpec, rng: np.random.Generator) -> SimDraw:
    n = spec.n
    labels = np.where(rng.random(n) < 0.5, 1, 2)
    x1 = rng.standard_normal(n)
    x2 = rng.standard_normal(n)

    if spec.case == "I":
        # t_1 via the normal / sqrt(chi-square_1) ratio: z0 / |z1|
        z0 = rng.standard_normal(n)
        z1 = rng.standard_normal(n)
        eps = z0 / np.abs(z1)
    elif spec.case == "II":
        wide = rng.random(n) < 0.05
        eps = rng.standard_normal(n) * np.where(wide, 5.0, 1.0)
    else:
        eps = rng.standard_normal(n)

    y = np.where(labels == 1, x1, -x1) + eps
    outlier = np.zeros(n, dtype=bool)

    if spec.case == "III":
        n_out = int(0.05 * n)
        idx = rng.choice(n, size=n_out, replace=False)
        x1[idx] = 2.0 + rng.standard_normal(n_out)
        y[idx] = 10.0 + rng.standard_normal(n_out)
        outlier[idx] = True
        labels[idx] = 0
    elif spec.case == "IV":
        hit = rng.random(n) < 0.1
        y[hit] += rng.uniform(4.0, 6.0, size=int(hit.sum()))
        outlier = hit

    data = Dataset.from_arrays(np.column_stack([x1, x2]), y, intercept=True,
                               columns=["x1", "x2"])
    return SimDraw(data=data, labels=labels, outlier_mask=outlier,
                   truth=_truth_model(), eps=eps)


def _generate_custom(spec: SimSpec, rng: np.random.Generator) -> SimDraw:
    cs = spec.custom
    n = spec.n
    k = len(cs.pis)
    betas = np.atleast_2d(np.asarray(cs.betas, dtype=float))
    d = betas.shape[1]
    labels = rng.choice(k, size=n, p=np.asarray(cs.pis, dtype=float)) + 1
    x = np.column_stack([np.ones(n)] + [rng.standard_normal(n) for _ in range(d - 1)])
    eps = np.empty(n)
    for j, err in enumerate(cs.errors):
        idx = np.flatnonzero(labels == j + 1)
        if idx.size:
            params = err if isinstance(err, EPParams) else EPParams(*err)
            eps[idx] = ep_sample(params, idx.size, rng)
    y = np.einsum("ij,ij->i", x, betas[labels - 1]) + eps
    columns = ["intercept"] + [f"x{j + 1}" for j in range(d - 1)]
    data = Dataset(x=x, y=y, columns=tuple(columns))
    etas = [err.eta if isinstance(err, EPParams) else err[1] for err in cs.errors]
    ps = [err.p if isinstance(err, EPParams) else err[0] for err in cs.errors]
    truth = MixtureModel.from_arrays(np.asarray(cs.pis, dtype=float), betas, etas, ps)
    return SimDraw(data=data, labels=labels, outlier_mask=np.zeros(n, dtype=bool),
                   truth=truth, eps=eps)


def generate(spec: SimSpec, rng: np.random.Generator | None = None) -> SimDraw:
    """Draw one dataset for ``spec``; bit-identical for equal specs when no
    external generator is supplied."""
    if rng is None:
        rng = rng_for_seed(spec.seed)
    if spec.case == "custom":
        return _generate_custom(spec, rng)
    return _generate_standard(spec, rng)
