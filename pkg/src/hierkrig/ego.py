"""Efficient Global Optimization over mixed and hierarchical spaces.

Each iteration retrains the Kriging model (warm-started from the previous
hyperparameters), minimizes an infill criterion over a corrected candidate
pool plus a local refinement of the continuous coordinates, and evaluates
the proposal.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .design_space import DesignPoint, DesignSpace, FloatVariable
from .kriging import KrigingConfig, KrigingModel, train
from .sampling import SamplerConfig, expand_lhs, lhs, sample

__all__ = [
    "EgoConfig",
    "OptimizationHistory",
    "expected_improvement",
    "infill_criterion",
    "propose_next",
    "optimize",
    "random_search",
    "initial_design",
    "run_replications",
    "convergence_stats",
]

log = logging.getLogger(__name__)

CRITERIA = ("EI", "SBO", "LCB")
DUPLICATE_TOL = 1e-9
REFINE_SWEEPS = 2


@dataclass(frozen=True)
class EgoConfig:
    n_iter: int = 20
    criterion: str = "EI"
    lcb_kappa: float = 1.96
    seed: int = 0
    candidate_pool_size: int = 1000
    kriging: KrigingConfig = field(default_factory=lambda: KrigingConfig(n_starts=3))

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}; choose from {CRITERIA}")
        if self.candidate_pool_size < 100:
            raise ValueError("candidate_pool_size must be >= 100")
        if self.lcb_kappa < 0:
            raise ValueError("lcb_kappa must be >= 0")


def _ei(mu, s2, y_min):
    s = np.sqrt(s2)
    imp = y_min - mu
    out = np.maximum(imp, 0.0)
    pos = s > 0
    z = imp[pos] / s[pos]
    out[pos] = imp[pos] * norm.cdf(z) + s[pos] * norm.pdf(z)
    return np.maximum(out, 0.0)


def expected_improvement(model: KrigingModel, X, y_min: float) -> np.ndarray:
    mu, s2 = model.predict(X)
    return _ei(mu, s2, y_min)


def infill_criterion(criterion: str, model: KrigingModel, X, y_min: float, kappa: float = 1.96) -> np.ndarray:
    """Criterion value to minimize: ``-EI``, the mean (SBO) or ``mu - kappa s`` (LCB)."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    mu, s2 = model.predict(X)
    if criterion == "EI":
        return -_ei(mu, s2, y_min)
    if criterion == "SBO":
        return mu
    return mu - kappa * np.sqrt(s2)


def _is_duplicate(model, values):
    Zq, _ = model.plan.encode(values)
    d = np.sqrt(np.min(np.sum((model.Z - Zq) ** 2, axis=1)))
    return d <= DUPLICATE_TOL


def propose_next(space: DesignSpace, model: KrigingModel, criterion: str = "EI", seed=None,
                 pool_size: int = 1000, kappa: float = 1.96, y_min: float | None = None):
    """Best non-duplicate candidate, or ``None`` if every candidate duplicates training data."""
    if y_min is None:
        y_min = float(np.min(model.y))
    U = lhs(pool_size, space.n_dims, seed)
    pool, _ = space.correct_values(space.from_unit(U))
    crit = infill_criterion(criterion, model, pool, y_min, kappa)
    best = None
    for i in np.argsort(crit, kind="stable"):
        if not _is_duplicate(model, pool[i]):
            best = pool[i].copy()
            best_val = crit[i]
            break
    if best is None:
        return None

    def f(row):
        return float(infill_criterion(criterion, model, row[None, :], y_min, kappa)[0])

    floats = [j for j, v in enumerate(space.variables) if isinstance(v, FloatVariable)]
    for _ in range(REFINE_SWEEPS):
        improved = False
        for j in floats:
            if not space.activity_mask(best)[j]:
                continue
            var = space.variables[j]
            trial = best.copy()

            def g(t):
                trial[j] = t
                return f(trial)

            res = minimize_scalar(g, bounds=(var.lower, var.upper), method="bounded",
                                  options={"xatol": 1e-6 * (var.upper - var.lower)})
            trial[j] = res.x
            if res.fun < best_val and not _is_duplicate(model, trial):
                best, best_val, improved = trial.copy(), res.fun, True
        if not improved:
            break
    values, acting = space.correct_values(best)
    return DesignPoint(values, acting)


@dataclass
class OptimizationHistory:
    """Evaluated points in order; ``iters`` is 0 for DoE rows and k for the k-th infill."""

    space: DesignSpace
    X: np.ndarray
    y: np.ndarray
    iters: np.ndarray

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.y)

    @property
    def n_doe(self) -> int:
        return int(np.sum(self.iters == 0))

    @property
    def y_opt(self) -> float:
        return float(np.min(self.y))

    @property
    def x_opt(self) -> np.ndarray:
        return self.X[int(np.argmin(self.y))]

    def best_curve(self, n_iter: int | None = None) -> np.ndarray:
        """Best value after the DoE (entry 0) and after each infill.

        Runs that stopped early are padded with their final best.
        """
        best = self.best_so_far[self.n_doe - 1:]
        if n_iter is not None and len(best) < n_iter + 1:
            best = np.concatenate([best, np.full(n_iter + 1 - len(best), best[-1])])
        return best

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", *self.space.names, "y", "best"])
            for k, row, yi, bi in zip(self.iters, self.X, self.y, self.best_so_far):
                w.writerow([int(k), *self.space.to_labels(row), repr(float(yi)), repr(float(bi))])

    def summary(self) -> dict:
        return {
            "x_opt": self.space.to_labels(self.x_opt),
            "y_opt": self.y_opt,
            "n_eval": int(len(self.y)),
        }


def _evaluate(problem, X):
    try:
        y = np.asarray(problem(X), dtype=float).ravel()
    except Exception as exc:
        raise RuntimeError(f"problem evaluation failed at {np.asarray(X).tolist()}: {exc}") from exc
    if not np.all(np.isfinite(y)):
        raise RuntimeError(f"problem returned non-finite values at {np.asarray(X).tolist()}")
    return y


def initial_design(space: DesignSpace, n: int, seed, criterion: str = "maximin"):
    """Unit-hypercube LHS and its corrected values."""
    U = sample(SamplerConfig("lhs", criterion, seed, n), space.n_dims)
    values, _ = space.correct_values(space.from_unit(U))
    return U, values


def optimize(problem, initial_doe, config: EgoConfig) -> OptimizationHistory:
    """Run EGO from raw initial rows ``initial_doe``."""
    space = problem.space
    X, _ = space.correct_values(np.atleast_2d(np.asarray(initial_doe, dtype=float)))
    if len(X) < 1:
        raise ValueError("initial DoE must be nonempty")
    y = _evaluate(problem, X)
    iters = [0] * len(X)
    rng = np.random.default_rng(config.seed)
    hp = None
    for k in range(1, config.n_iter + 1):
        kcfg = replace(config.kriging, seed=int(rng.integers(2 ** 31)))
        model = train(space, kcfg, X, y, hp0=hp)
        hp = model.hp
        point = propose_next(space, model, config.criterion, int(rng.integers(2 ** 63)),
                             config.candidate_pool_size, config.lcb_kappa)
        if point is None:
            log.info("no non-duplicate candidate left after %d infills", k - 1)
            break
        y_new = _evaluate(problem, point.values[None, :])
        X = np.vstack([X, point.values])
        y = np.append(y, y_new)
        iters.append(k)
    return OptimizationHistory(space, X, y, np.array(iters))


def random_search(problem, initial_doe_unit, n_add: int, seed=None) -> OptimizationHistory:
    """Evaluate an LHS expanded by ``n_add`` rows; new rows count as iterations 1..n_add."""
    space = problem.space
    U = expand_lhs(initial_doe_unit, n_add, seed)
    X, _ = space.correct_values(space.from_unit(U))
    y = _evaluate(problem, X)
    n0 = len(np.atleast_2d(initial_doe_unit))
    iters = np.concatenate([np.zeros(n0, int), np.arange(1, n_add + 1)])
    return OptimizationHistory(space, X, y, iters)


def _one_run(args):
    problem_name, method, doe_size, n_iter, doe_seed, run_seed, config = args
    from .problems import get_problem

    problem = get_problem(problem_name)
    U, X0 = initial_design(problem.space, doe_size, doe_seed)
    if method == "random":
        return random_search(problem, U, n_iter, run_seed)
    return optimize(problem, X0, replace(config, n_iter=n_iter, seed=run_seed))


def run_replications(problem_name: str, method: str, n_runs: int, doe_size: int, n_iter: int,
                     seed: int = 0, config: EgoConfig | None = None, jobs: int = 1) -> list:
    """Independent runs of EGO (``method="ego"``) or random search (``"random"``).

    Run ``i`` uses the same initial DoE for every method, so comparisons
    are paired.
    """
    if method not in ("ego", "random"):
        raise ValueError("method must be 'ego' or 'random'")
    config = config or EgoConfig()
    children = np.random.SeedSequence(seed).spawn(n_runs)
    tasks = []
    for ss in children:
        doe_ss, run_ss = ss.spawn(2)
        tasks.append((problem_name, method, doe_size, n_iter,
                      int(doe_ss.generate_state(1)[0]), int(run_ss.generate_state(1)[0]), config))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_one_run, tasks))
    return [_one_run(t) for t in tasks]


def convergence_stats(histories, n_iter: int) -> np.ndarray:
    """Rows ``(iter, median, q1, q3)`` of the best-so-far across runs."""
    curves = np.array([h.best_curve(n_iter) for h in histories])
    q1, med, q3 = np.percentile(curves, [25, 50, 75], axis=0)
    return np.column_stack([np.arange(n_iter + 1), med, q1, q3])
