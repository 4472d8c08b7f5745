"""Designs of experiments in the unit hypercube and over design spaces.

All samplers are pure functions of their configuration: the same seed gives
bit-identical designs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .design_space import DesignPoint, DesignSpace, IntegerVariable, IMPUTE_DEFAULT

__all__ = ["SamplerConfig", "sample", "lhs", "sample_values", "sample_valid", "expand_lhs", "METHODS", "CRITERIA"]

METHODS = ("random", "full_factorial", "lhs")
CRITERIA = ("center", "maximin", "centermaximin", "correlation", "ese")

N_CANDIDATES = 20  # designs compared by the best-of criteria
ESE_OUTER, ESE_INNER, ESE_COOLING, ESE_T0 = 50, 30, 0.95, 0.5


@dataclass(frozen=True)
class SamplerConfig:
    method: str = "lhs"
    criterion: str = "maximin"
    seed: int = 0
    n_points: int = 10
    levels: tuple | None = None  # per-dimension grid sizes for full_factorial

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown sampling method {self.method!r}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown LHS criterion {self.criterion!r}")
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError("n_points must be a positive integer")


def lhs(n: int, d: int, seed=None, centered: bool = False) -> np.ndarray:
    """Plain Latin hypercube without a space-filling criterion."""
    return _lhs(np.random.default_rng(seed), n, d, centered)


def _lhs(rng, n, d, centered):
    offset = 0.5 if centered else rng.random((n, d))
    strata = np.argsort(rng.random((n, d)), axis=0)
    return (strata + offset) / n


def _min_dist(X):
    return pdist(X).min() if len(X) > 1 else np.inf


def _max_abs_corr(X):
    if len(X) < 3 or X.shape[1] < 2:
        return 0.0
    C = np.corrcoef(X, rowvar=False)
    return np.abs(C[np.triu_indices_from(C, k=1)]).max()


def _ese(rng, X):
    """Simulated-annealing element swaps within columns, maximizing the min distance."""
    n, d = X.shape
    if n < 3:
        return X
    X = X.copy()
    D = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(D, np.inf)
    cur = np.sqrt(D.min())
    best, best_val = X.copy(), cur
    T = ESE_T0 * cur
    for _ in range(ESE_OUTER):
        for _ in range(ESE_INNER):
            j = rng.integers(d)
            i1, i2 = rng.choice(n, 2, replace=False)
            X[[i1, i2], j] = X[[i2, i1], j]
            rows = D[[i1, i2]].copy()
            for i in (i1, i2):
                D[i] = np.sum((X - X[i]) ** 2, axis=1)
                D[:, i] = D[i]
                D[i, i] = np.inf
            new = np.sqrt(D.min())
            if new >= cur or rng.random() < np.exp((new - cur) / T):
                cur = new
                if cur > best_val:
                    best, best_val = X.copy(), cur
            else:
                X[[i1, i2], j] = X[[i2, i1], j]
                D[[i1, i2]] = rows
                D[:, i1], D[:, i2] = rows[0], rows[1]
        T *= ESE_COOLING
    return best


def _full_factorial(config, d):
    if config.levels is not None:
        sizes = tuple(int(k) for k in config.levels)
        if len(sizes) != d or any(k < 1 for k in sizes):
            raise ValueError(f"levels must give {d} positive grid sizes")
    else:
        k = int(round(config.n_points ** (1.0 / d)))
        if k ** d != config.n_points:
            raise ValueError(f"n_points={config.n_points} is not a perfect {d}-th power; pass levels")
        sizes = (k,) * d
    axes = [np.linspace(0.0, 1.0, k) if k > 1 else np.array([0.5]) for k in sizes]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grid])


def sample(config: SamplerConfig, n_dims: int) -> np.ndarray:
    """Unit-hypercube design of shape ``(n_points, n_dims)``."""
    if n_dims < 1:
        raise ValueError("n_dims must be >= 1")
    rng = np.random.default_rng(config.seed)
    n = config.n_points
    if config.method == "random":
        return rng.random((n, n_dims))
    if config.method == "full_factorial":
        return _full_factorial(config, n_dims)
    crit = config.criterion
    if crit == "center":
        return _lhs(rng, n, n_dims, True)
    if crit == "ese":
        return _ese(rng, _lhs(rng, n, n_dims, False))
    candidates = [_lhs(rng, n, n_dims, crit == "centermaximin") for _ in range(N_CANDIDATES)]
    if crit == "correlation":
        scores = [-_max_abs_corr(X) for X in candidates]
    else:
        scores = [_min_dist(X) for X in candidates]
    return candidates[int(np.argmax(scores))]


def sample_values(space: DesignSpace, config: SamplerConfig, stratify_meta: int | None = None,
                  policy: str = IMPUTE_DEFAULT):
    """Corrected and imputed design values plus acting masks.

    With ``stratify_meta`` set to the index of a discrete variable the points
    are split as evenly as possible across its values and a separate design is
    drawn for each value.
    """
    if stratify_meta is None:
        U = sample(config, space.n_dims)
        return space.correct_values(space.from_unit(U), policy)
    var = space.variables[stratify_meta]
    if isinstance(var, IntegerVariable):
        values = list(range(var.lower, var.upper + 1))
    elif hasattr(var, "n_levels"):
        values = list(range(var.n_levels))
    else:
        raise ValueError("stratify_meta must index a discrete variable")
    k = len(values)
    sizes = [config.n_points // k + (i < config.n_points % k) for i in range(k)]
    seeds = np.random.SeedSequence(config.seed).spawn(k)
    blocks = []
    for value, size, ss in zip(values, sizes, seeds):
        if size == 0:
            continue
        sub = SamplerConfig(config.method, config.criterion, int(ss.generate_state(1)[0]), size, config.levels)
        raw = space.from_unit(sample(sub, space.n_dims))
        raw[:, stratify_meta] = value
        blocks.append(raw)
    return space.correct_values(np.vstack(blocks), policy)


def sample_valid(space: DesignSpace, config: SamplerConfig, stratify_meta: int | None = None) -> list:
    """Valid :class:`DesignPoint` list (unit sample, denormalize, correct, impute)."""
    values, acting = sample_values(space, config, stratify_meta)
    return [DesignPoint(v, a) for v, a in zip(values, acting)]


def expand_lhs(doe, n_add: int, seed=None) -> np.ndarray:
    """Append ``n_add`` rows to a unit-hypercube LHS, filling empty fine strata.

    Rows of ``doe`` are returned unchanged on top. With ``N = n + n_add``,
    every column of the result has at most one point per stratum of width
    ``1/N`` whenever the original rows sit in distinct fine strata (always
    true when ``N`` is a multiple of ``n``).
    """
    doe = np.atleast_2d(np.asarray(doe, dtype=float))
    if int(n_add) != n_add or n_add < 1:
        raise ValueError("n_add must be a positive integer")
    n, d = doe.shape
    N = n + n_add
    rng = np.random.default_rng(seed)
    new = np.empty((n_add, d))
    for j in range(d):
        occupied = np.minimum(np.floor(doe[:, j] * N), N - 1).astype(int)
        free = np.setdiff1d(np.arange(N), occupied)
        if len(free) < n_add:
            raise ValueError("input is not a Latin hypercube: too few empty strata")
        strata = rng.permutation(rng.choice(free, n_add, replace=False))
        new[:, j] = (strata + rng.random(n_add)) / N
    return np.vstack([doe, new])
