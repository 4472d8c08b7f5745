"""Ordinary Kriging over mixed and hierarchical design spaces.

Inputs are corrected, imputed and normalized by the design space; outputs
are standardized to zero mean and unit variance before training. The
hyperparameters maximize the concentrated likelihood

    NLL(hp) = n/2 log sigma2(hp) + 1/2 log det R(hp)

with ``beta`` and ``sigma2`` profiled out.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from ._core_py import _log_slope
from .design_space import DesignSpace, FloatVariable
from .kernels import (
    ContinuousKernelKind,
    HierarchicalKernelKind,
    KernelConfig,
    KernelPlan,
)
from .sampling import SamplerConfig, sample

__all__ = ["KrigingConfig", "KrigingModel", "TrainingError", "train"]

log = logging.getLogger(__name__)

MAX_NUGGET = 1e-6
SIGMA2_FLOOR = 1e-300
FAILED_NLL = 1e10


class TrainingError(RuntimeError):
    """Raised when the correlation matrix cannot be factorized."""


@dataclass(frozen=True)
class KrigingConfig:
    corr: str = "squar_exp"
    categorical_kernel: str = "CONT_RELAX"
    hierarchical_kernel: str = "ALG_KERNEL"
    epsilon: float = 1e-13
    nugget: float = 1e-10
    n_starts: int = 10
    max_evals: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.nugget < 0:
            raise ValueError("nugget must be >= 0")
        if self.n_starts < 1 or self.max_evals < 1:
            raise ValueError("n_starts and max_evals must be >= 1")
        self.kernel  # validates kind strings

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(self.corr, self.categorical_kernel, self.hierarchical_kernel, self.epsilon)

    def to_dict(self):
        d = asdict(self)
        d.update(self.kernel.to_dict())
        return d


def _factor(R, nugget, escalate=True):
    """Cholesky of ``R + nugget I``, raising the nugget by 10x on failure."""
    n = len(R)
    while True:
        try:
            return cholesky(R + nugget * np.eye(n), lower=True, check_finite=False), nugget
        except np.linalg.LinAlgError:
            if not escalate or nugget == 0 or nugget * 10 > MAX_NUGGET * (1 + 1e-9):
                raise TrainingError(f"correlation matrix not positive definite (nugget={nugget:g})") from None
            nugget *= 10


class KrigingModel:
    """Trained Ordinary-Kriging surrogate. Build with :func:`train` or :meth:`fit`."""

    def __init__(self, space: DesignSpace, config: KrigingConfig | None = None):
        self.space = space
        self.config = config or KrigingConfig()
        self.plan = KernelPlan(space, self.config.kernel)
        self.hp = None

    # ------------------------------------------------------------------
    # data
    # ------------------------------------------------------------------
    def set_training_values(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)} values")
        if len(y) < 1:
            raise ValueError("at least one training point is required")
        if not np.all(np.isfinite(y)):
            raise ValueError("training outputs must be finite")
        self.X, self.acting = self.space.correct_values(X, self.plan.policy)
        self.Z = self.space.normalize(self.X)
        self.y = y
        self.y_mean = float(y.mean())
        std = float(y.std())
        self.y_std = std if std > 0 else 1.0
        self.ys = (y - self.y_mean) / self.y_std
        self._pairs, self._iu = self.plan.train_pairs(self.Z, self.acting)
        return self

    @property
    def n_train(self) -> int:
        return len(self.y)

    def _corr_matrix(self, hp):
        n = self.n_train
        R = np.eye(n)
        r = self.plan.corr(hp, self._pairs)
        iu, ju = self._iu
        R[iu, ju] = r
        R[ju, iu] = r
        return R

    # ------------------------------------------------------------------
    # likelihood
    # ------------------------------------------------------------------
    def _concentrated(self, L):
        n = self.n_train
        ones = np.ones(n)
        Ri1 = cho_solve((L, True), ones, check_finite=False)
        Riy = cho_solve((L, True), self.ys, check_finite=False)
        beta = Riy.sum() / Ri1.sum()
        alpha = Riy - beta * Ri1
        sigma2 = max(float((self.ys - beta) @ alpha) / n, SIGMA2_FLOOR)
        nll = 0.5 * n * np.log(sigma2) + np.sum(np.log(np.diag(L)))
        return nll, beta, alpha, sigma2, Ri1

    def neg_log_likelihood(self, hp, gradient: bool = False):
        """Concentrated NLL at ``hp`` (and its gradient when asked)."""
        hp = self.plan.layout.check(hp)
        R = self._corr_matrix(hp)
        L, _ = _factor(R, self.config.nugget)
        nll, _, alpha, sigma2, _ = self._concentrated(L)
        if not gradient:
            return float(nll)
        Rinv = cho_solve((L, True), np.eye(self.n_train), check_finite=False)
        W = np.outer(alpha, alpha) / sigma2 - Rinv
        iu, ju = self._iu
        _, g = self.plan.corr_and_contract(hp, self._pairs, W[iu, ju])
        return float(nll), -g

    def _objective(self, z):
        layout = self.plan.layout
        hp = layout.from_opt(z)
        try:
            nll, g = self.neg_log_likelihood(hp, gradient=True)
        except TrainingError:
            return FAILED_NLL, np.zeros_like(z)
        jac = np.where(layout.log_mask, hp * np.log(10.0), 1.0)
        return nll, g * jac

    # ------------------------------------------------------------------
    # training
    # ------------------------------------------------------------------
    def _starts(self, hp0):
        layout = self.plan.layout
        bounds = np.array(layout.opt_bounds())
        first = layout.to_opt(layout.default() if hp0 is None else np.clip(hp0, layout.lower, layout.upper))
        starts = [first]
        k = self.config.n_starts - 1
        if k > 0:
            U = sample(SamplerConfig("lhs", "maximin", self.config.seed, k), layout.n)
            starts += list(bounds[:, 0] + U * (bounds[:, 1] - bounds[:, 0]))
        return starts

    def fit(self, X, y, hp0=None):
        """Maximum-likelihood training; ``hp0`` replaces the bound-center start."""
        self.set_training_values(X, y)
        layout = self.plan.layout
        if self.n_train == 1 or np.all(self.y == self.y[0]) or layout.n == 0:
            hp = layout.default() if hp0 is None else np.asarray(hp0, dtype=float)
        else:
            best = None
            bounds = layout.opt_bounds()
            for z0 in self._starts(hp0):
                res = minimize(self._objective, z0, jac=True, method="L-BFGS-B", bounds=bounds,
                               options={"maxfun": self.config.max_evals})
                if res.fun < FAILED_NLL and (best is None or res.fun < best.fun):
                    best = res
            if best is None:
                raise TrainingError("every optimizer start failed")
            hp = layout.from_opt(best.x)
        self._set_hp(hp)
        return self

    def set_hyperparameters(self, X, y, hp):
        """Condition the model on data with fixed hyperparameters (no search)."""
        self.set_training_values(X, y)
        self._set_hp(np.asarray(hp, dtype=float))
        return self

    def _set_hp(self, hp):
        self.hp = self.plan.layout.check(hp)
        R = self._corr_matrix(self.hp)
        self.L, self.nugget = _factor(R, self.config.nugget)
        self.nll, self.beta, self.alpha, self.sigma2, self._Ri1 = self._concentrated(self.L)
        self._sum_Ri1 = float(self._Ri1.sum())
        if np.all(self.y == self.y[0]):
            self.sigma2 = 0.0

    # ------------------------------------------------------------------
    # prediction
    # ------------------------------------------------------------------
    def _check_trained(self):
        if self.hp is None:
            raise RuntimeError("model is not trained")

    def _cross(self, X):
        Zq, Aq = self.plan.encode(X)
        pd = self.plan.cross_pairs(Zq, Aq, self.Z, self.acting)
        return Zq, Aq, pd, self.plan.corr(self.hp, pd).reshape(len(Zq), self.n_train)

    def _empty(self, X):
        return np.size(X) == 0

    def predict_values(self, X) -> np.ndarray:
        self._check_trained()
        if self._empty(X):
            return np.empty(0)
        _, _, _, r = self._cross(X)
        return self.y_mean + self.y_std * (self.beta + r @ self.alpha)

    def _variance_terms(self, r):
        v = solve_triangular(self.L, r.T, lower=True, check_finite=False)
        u = 1.0 - r @ self._Ri1
        s2 = 1.0 - np.sum(v * v, axis=0) + u * u / self._sum_Ri1
        return s2, u

    def predict_variances(self, X) -> np.ndarray:
        self._check_trained()
        if self._empty(X):
            return np.empty(0)
        _, _, _, r = self._cross(X)
        s2, _ = self._variance_terms(r)
        return np.maximum(self.sigma2 * self.y_std ** 2 * s2, 0.0)

    def predict(self, X):
        """Means and variances sharing one cross-correlation evaluation."""
        self._check_trained()
        if self._empty(X):
            return np.empty(0), np.empty(0)
        _, _, _, r = self._cross(X)
        s2, _ = self._variance_terms(r)
        mu = self.y_mean + self.y_std * (self.beta + r @ self.alpha)
        return mu, np.maximum(self.sigma2 * self.y_std ** 2 * s2, 0.0)

    def predict_derivatives(self, X, dim: int):
        """``d mean / d x_dim`` and ``d variance / d x_dim`` in raw units."""
        self._check_trained()
        var = self.space.variables[dim]
        if not isinstance(var, FloatVariable):
            raise ValueError(f"variable {dim} is not continuous; derivatives need a Float variable")
        if self.config.kernel.corr == ContinuousKernelKind.ABS_EXP:
            raise ValueError("abs_exp is not differentiable; use squar_exp, matern32 or matern52")
        Zq, Aq, pd, r = self._cross(X)
        nq, n = r.shape
        col = self.plan.quant.index(dim)
        theta = self.hp[self.plan.theta_idx[col]]
        a = np.repeat(Zq[:, dim], n)
        b = np.tile(self.Z[:, dim], nq)
        ua = np.repeat(Aq[:, dim], n)
        ub = np.tile(self.acting[:, dim], nq)
        # an imputed query coordinate never moves the prediction
        db = self._dbase(col, a, b, ua, ub) * ua
        d = theta * pd.B[:, col]
        slope = _log_slope(d, self.plan.profile)
        dr = (r.ravel() * slope * theta * db).reshape(nq, n) / (var.upper - var.lower)
        dmu = self.y_std * dr @ self.alpha
        Rir = cho_solve((self.L, True), r.T, check_finite=False).T
        _, u = self._variance_terms(r)
        ds2 = -2.0 * np.sum(Rir * dr, axis=1) - 2.0 * u * (dr @ self._Ri1) / self._sum_Ri1
        return dmu, self.sigma2 * self.y_std ** 2 * ds2

    def _dbase(self, col, a, b, ua, ub):
        """Derivative of the base distance of quantitative column ``col`` w.r.t. ``a``."""
        delta = a - b
        if not self.plan.decreed_mode[col]:
            if self.config.kernel.corr == ContinuousKernelKind.SQUAR_EXP:
                return 2.0 * delta
            return np.sign(delta)
        both = ua & ub
        if self.config.kernel.hierarchical_kernel == HierarchicalKernelKind.ALG_KERNEL:
            qa, qb = np.sqrt(a * a + 1), np.sqrt(b * b + 1)
            g = 2.0 / qb * (np.sign(delta) / qa - np.abs(delta) * a / qa ** 3)
        else:
            g = 0.5 * np.pi * np.cos(0.25 * np.pi * np.abs(delta)) * np.sign(delta)
        return np.where(both, g, 0.0)

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        self._check_trained()
        return {
            "format_version": 1,
            "space": self.space.to_dict(),
            "config": self.config.to_dict(),
            "hyperparameters": self.hp.tolist(),
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "y_mean": self.y_mean,
            "y_std": self.y_std,
            "nll": float(self.nll),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KrigingModel":
        if doc.get("format_version") != 1:
            raise ValueError("unsupported model format_version")
        space = DesignSpace.from_dict(doc["space"])
        fields = KrigingConfig.__dataclass_fields__
        config = KrigingConfig(**{k: v for k, v in doc["config"].items() if k in fields})
        model = cls(space, config)
        model.set_training_values(doc["X"], doc["y"])
        model._set_hp(np.asarray(doc["hyperparameters"], dtype=float))
        return model

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "KrigingModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def train(space: DesignSpace, config: KrigingConfig, X, y, hp0=None) -> KrigingModel:
    """Fit a :class:`KrigingModel` on raw rows ``X`` and outputs ``y``."""
    return KrigingModel(space, config).fit(X, y, hp0)
