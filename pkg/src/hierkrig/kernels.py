"""Correlation kernels for mixed and hierarchical inputs.

Three families are combined multiplicatively:

- continuous profiles (``abs_exp``, ``squar_exp``, ``matern32``,
  ``matern52``) applied per quantitative dimension,
- categorical kernels (``GOWER``, ``CONT_RELAX``, ``EXP_HOMO_HSPHERE``,
  ``HOMO_HSPHERE``), each an ``L x L`` level-correlation matrix per
  categorical variable,
- meta/decreed kernels (``ALG_KERNEL``, ``ARC_KERNEL``, ``IMP_KERNEL``)
  deciding how decreed dimensions enter the product.

Every quantitative dimension ``j`` contributes ``p(theta_j * b_j(u, v))``
where ``p`` is the profile and ``b_j`` an unweighted base distance: ``|du|``
or ``du**2`` for ordinary dimensions, and for decreed dimensions under
``ALG_KERNEL``/``ARC_KERNEL`` the algebraic/arc distance when both points
act, ``1`` when exactly one acts and ``0`` when neither does.

Hyperparameters live in one flat vector laid out variable by variable (see
:class:`ParamLayout`).
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from enum import Enum

import numpy as np

from . import _backend
from .design_space import (
    CategoricalVariable,
    DesignPoint,
    DesignSpace,
    IMPUTE_DEFAULT,
    IMPUTE_MEAN,
    is_quantitative,
)

__all__ = [
    "ContinuousKernelKind",
    "CategoricalKernelKind",
    "HierarchicalKernelKind",
    "KernelConfig",
    "ParamLayout",
    "KernelPlan",
    "continuous_corr",
    "hypersphere_C",
    "categorical_matrix",
    "categorical_corr",
    "alg_distance",
    "arc_distance",
    "meta_decreed_corr",
    "full_corr",
    "count_hyperparameters",
    "corr_matrix",
    "corr_matrix_grad",
]

THETA_BOUNDS = (1e-6, 20.0)
ANGLE_BOUNDS = (1e-8, np.pi - 1e-8)
DEFAULT_EPSILON = 1e-13


class ContinuousKernelKind(str, Enum):
    ABS_EXP = "abs_exp"
    SQUAR_EXP = "squar_exp"
    MATERN32 = "matern32"
    MATERN52 = "matern52"


class CategoricalKernelKind(str, Enum):
    GOWER = "GOWER"
    CONT_RELAX = "CONT_RELAX"
    EXP_HOMO_HSPHERE = "EXP_HOMO_HSPHERE"
    HOMO_HSPHERE = "HOMO_HSPHERE"


class HierarchicalKernelKind(str, Enum):
    ALG_KERNEL = "ALG_KERNEL"
    ARC_KERNEL = "ARC_KERNEL"
    IMP_KERNEL = "IMP_KERNEL"


_PROFILE = {
    ContinuousKernelKind.ABS_EXP: _backend.EXP,
    ContinuousKernelKind.SQUAR_EXP: _backend.EXP,
    ContinuousKernelKind.MATERN32: _backend.MATERN32,
    ContinuousKernelKind.MATERN52: _backend.MATERN52,
}


@dataclass(frozen=True)
class KernelConfig:
    corr: str = "squar_exp"
    categorical_kernel: str = "CONT_RELAX"
    hierarchical_kernel: str = "ALG_KERNEL"
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "corr", ContinuousKernelKind(self.corr))
        object.__setattr__(self, "categorical_kernel", CategoricalKernelKind(self.categorical_kernel))
        object.__setattr__(self, "hierarchical_kernel", HierarchicalKernelKind(self.hierarchical_kernel))
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")

    def to_dict(self):
        d = asdict(self)
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in d.items()}


# ----------------------------------------------------------------------
# scalar building blocks
# ----------------------------------------------------------------------
def continuous_corr(kind, d):
    """Continuous profile evaluated at an already theta-weighted distance.

    ``abs_exp`` and ``squar_exp`` both give ``exp(-d)``; they differ in how
    ``d`` is formed (``theta*|du|`` versus ``theta*du**2``).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be nonnegative")
    profile = _PROFILE[ContinuousKernelKind(kind)]
    out = _backend.corr_product(np.atleast_1d(d).reshape(-1, 1), np.ones(1), profile)
    return out.reshape(d.shape) if d.ndim else float(out[0])


def base_distance(kind, delta):
    """Unweighted per-dimension distance for ordinary quantitative inputs."""
    delta = np.asarray(delta, dtype=float)
    if ContinuousKernelKind(kind) == ContinuousKernelKind.SQUAR_EXP:
        return delta * delta
    return np.abs(delta)


def n_angles(L: int) -> int:
    return L * (L - 1) // 2


def _angle_grid(angles, L):
    """Cosines/sines on an ``L x L`` grid, row ``j`` holding its ``j`` angles.

    Unused slots get cos 1 on the diagonal, 0 above it, and sin 1, so the
    exclusive running product of sines gives every entry of ``C``.
    """
    angles = np.asarray(angles, dtype=float).ravel()
    if angles.size != n_angles(L):
        raise ValueError(f"expected {n_angles(L)} angles for L={L}, got {angles.size}")
    rows, cols = np.tril_indices(L, k=-1)  # row-major: row j holds cols 0..j-1
    c = np.eye(L)
    s = np.ones((L, L))
    c[rows, cols] = np.cos(angles)
    s[rows, cols] = np.sin(angles)
    prefix = np.ones((L, L))
    prefix[:, 1:] = np.cumprod(s[:, :-1], axis=1)
    return c, s, prefix, rows, cols


def hypersphere_C(angles, L: int) -> np.ndarray:
    """Lower-triangular factor whose rows are unit vectors.

    Row ``j`` uses angles ``j(j-1)/2 ... j(j+1)/2 - 1`` of the flat vector:
    ``C[j, k] = cos(a_jk) prod_{l<k} sin(a_jl)`` for ``k < j`` and
    ``C[j, j] = prod_{l<j} sin(a_jl)``. ``C @ C.T`` is a correlation matrix.
    """
    c, _, prefix, _, _ = _angle_grid(angles, L)
    return c * prefix


def _hsphere_row_grads(angles, L):
    """``C`` and the nonzero row of each ``dC/d angle``, shape ``(n_angles, L)``.

    The derivative w.r.t. ``a_jm`` only touches row ``j``: entries before
    ``m`` vanish, entry ``m`` becomes ``-sin(a_jm) prod_{l<m}``, and later
    entries swap their ``sin(a_jm)`` factor for ``cos(a_jm)``.
    """
    c, s, prefix, rows, cols = _angle_grid(angles, L)
    C = c * prefix
    k = np.arange(L)
    ratio = c[rows, cols] / s[rows, cols]
    G = np.where(k[None, :] > cols[:, None], C[rows] * ratio[:, None], 0.0)
    G[np.arange(len(rows)), cols] = -s[rows, cols] * prefix[rows, cols]
    return C, G, rows


def hypersphere_C_grad(angles, L: int) -> np.ndarray:
    """``dC/d angle_k`` stacked as ``(n_angles, L, L)``."""
    _, G, rows = _hsphere_row_grads(angles, L)
    out = np.zeros((len(rows), L, L))
    out[np.arange(len(rows)), rows] = G
    return out


def n_categorical_params(kind, L: int) -> int:
    kind = CategoricalKernelKind(kind)
    if kind == CategoricalKernelKind.GOWER:
        return 1
    if kind == CategoricalKernelKind.CONT_RELAX:
        return L
    return n_angles(L)


def categorical_matrix(kind, params, L: int, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Level-correlation matrix of one categorical variable.

    Off-diagonal entries follow the unified product form
    ``kappa(2 Phi_sr) kappa(Phi_rr) kappa(Phi_ss)``; the diagonal is 1.
    """
    kind = CategoricalKernelKind(kind)
    params = np.asarray(params, dtype=float).ravel()
    if params.size != n_categorical_params(kind, L):
        raise ValueError(f"{kind.value} with L={L} needs {n_categorical_params(kind, L)} params")
    if kind == CategoricalKernelKind.GOWER:
        # Phi_jj = theta/2, Phi_jj' = 0, kappa = exp(-.)
        K = np.full((L, L), np.exp(-params[0]))
    elif kind == CategoricalKernelKind.CONT_RELAX:
        # Phi_jj = Theta_jj, Phi_jj' = 0
        K = np.exp(-(params[:, None] + params[None, :]))
    else:
        S = hypersphere_C(params, L)
        S = S @ S.T
        if kind == CategoricalKernelKind.HOMO_HSPHERE:
            # kappa = identity, Phi_jj = 1, Phi_jj' = S/2
            K = S
        else:
            # Phi_jj = 0, Phi_jj' = log(eps)/2 (S - 1)
            K = np.exp(np.log(epsilon) * (1.0 - S))
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return K


def categorical_matrix_grad(kind, params, L: int, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """``dK/d param_k`` stacked as ``(n_params, L, L)``, zero diagonal."""
    kind = CategoricalKernelKind(kind)
    params = np.asarray(params, dtype=float).ravel()
    if kind == CategoricalKernelKind.GOWER:
        out = np.full((1, L, L), -np.exp(-params[0]))
    elif kind == CategoricalKernelKind.CONT_RELAX:
        K = np.exp(-(params[:, None] + params[None, :]))
        out = np.zeros((L, L, L))
        idx = np.arange(L)
        out[idx, idx, :] -= K
        out[idx, :, idx] -= K
    else:
        C, G, rows = _hsphere_row_grads(params, L)
        V = G @ C.T  # row j of dS; dS = V e_j^T + e_j V^T
        p = np.arange(len(rows))
        out = np.zeros((len(rows), L, L))
        out[p, rows] += V
        out[p, :, rows] += V
        if kind == CategoricalKernelKind.EXP_HOMO_HSPHERE:
            K = np.exp(np.log(epsilon) * (1.0 - C @ C.T))
            out *= -np.log(epsilon) * K[None]
    idx = np.arange(L)
    out[:, idx, idx] = 0.0
    return out


def categorical_contract(kind, params, L: int, M, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """``sum_ab dK_k[a, b] M[a, b]`` for every parameter ``k``, without forming ``dK``."""
    kind = CategoricalKernelKind(kind)
    params = np.asarray(params, dtype=float).ravel()
    M = np.array(M, dtype=float)
    np.fill_diagonal(M, 0.0)
    if kind == CategoricalKernelKind.GOWER:
        return np.array([-np.exp(-params[0]) * M.sum()])
    Msym = M + M.T
    if kind == CategoricalKernelKind.CONT_RELAX:
        K = np.exp(-(params[:, None] + params[None, :]))
        return -np.sum(K * Msym, axis=1)
    C, G, rows = _hsphere_row_grads(params, L)
    V = G @ C.T
    if kind == CategoricalKernelKind.EXP_HOMO_HSPHERE:
        Msym = -np.log(epsilon) * np.exp(np.log(epsilon) * (1.0 - C @ C.T)) * Msym
    return np.sum(V * Msym[rows], axis=1)


def categorical_corr(kind, level_r: int, level_s: int, params, L: int, epsilon: float = DEFAULT_EPSILON) -> float:
    if not (0 <= level_r < L and 0 <= level_s < L) or int(level_r) != level_r or int(level_s) != level_s:
        raise ValueError(f"invalid level index ({level_r}, {level_s}) for L={L}")
    return float(categorical_matrix(kind, params, L, epsilon)[int(level_r), int(level_s)])


def alg_distance(a, b, theta=1.0):
    """Algebraic distance between two decreed values, scaled by ``theta``."""
    if np.any(np.asarray(theta) <= 0):
        raise ValueError("theta must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 2.0 * np.abs(a - b) / (np.sqrt(a * a + 1.0) * np.sqrt(b * b + 1.0)) * theta


def arc_distance(a, b, theta=1.0):
    """Chord between the unit-radius arc embeddings of two values in [0, 1]."""
    if np.any(np.asarray(theta) <= 0):
        raise ValueError("theta must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 2.0 * np.sin(0.25 * np.pi * np.abs(a - b)) * theta


# ----------------------------------------------------------------------
# hyperparameter layout
# ----------------------------------------------------------------------
class ParamLayout:
    """Flat hyperparameter vector, one block per variable in space order.

    Quantitative variables own one ``theta``; categorical variables own
    1 (GOWER), L (CONT_RELAX) or L(L-1)/2 angles (hypersphere kinds).
    ``theta`` and GOWER/CONT_RELAX params are optimized in log10 space,
    angles as is.
    """

    def __init__(self, space: DesignSpace, config: KernelConfig):
        self.slices = []
        self.kinds = []
        pos = 0
        log_mask = []
        lower, upper = [], []
        for var in space.variables:
            if is_quantitative(var):
                k, kind = 1, "theta"
            else:
                k = n_categorical_params(config.categorical_kernel, var.n_levels)
                kind = "angle" if config.categorical_kernel in (
                    CategoricalKernelKind.EXP_HOMO_HSPHERE, CategoricalKernelKind.HOMO_HSPHERE) else "theta"
            self.slices.append(slice(pos, pos + k))
            self.kinds.append(kind)
            log_mask += [kind == "theta"] * k
            b = THETA_BOUNDS if kind == "theta" else ANGLE_BOUNDS
            lower += [b[0]] * k
            upper += [b[1]] * k
            pos += k
        self.n = pos
        self.log_mask = np.array(log_mask, dtype=bool)
        self.lower = np.array(lower)
        self.upper = np.array(upper)

    def to_opt(self, hp):
        z = np.array(hp, dtype=float)
        z[self.log_mask] = np.log10(z[self.log_mask])
        return z

    def from_opt(self, z):
        hp = np.array(z, dtype=float)
        hp[self.log_mask] = 10.0 ** hp[self.log_mask]
        return hp

    def opt_bounds(self):
        return list(zip(self.to_opt(self.lower), self.to_opt(self.upper)))

    def default(self):
        lo, hi = self.to_opt(self.lower), self.to_opt(self.upper)
        return self.from_opt(0.5 * (lo + hi))

    def check(self, hp):
        hp = np.asarray(hp, dtype=float).ravel()
        if hp.size != self.n:
            raise ValueError(f"expected {self.n} hyperparameters, got {hp.size}")
        return hp


def count_hyperparameters(space: DesignSpace, config: KernelConfig, original_arc: bool = False) -> int:
    """Number of kernel hyperparameters.

    With ``original_arc=True`` the count of the original arc kernel is
    returned instead: no ``theta`` for quantitative meta variables, one extra
    parameter per decreed dimension. It is provided for comparison only.
    """
    n = ParamLayout(space, config).n
    if original_arc:
        decreed = space.decreed_indices
        n -= sum(1 for i in space.meta_indices if is_quantitative(space.variables[i]) and i not in decreed)
        n += len(decreed)
    return n


# ----------------------------------------------------------------------
# vectorized assembly
# ----------------------------------------------------------------------
@dataclass
class PairData:
    """Hyperparameter-independent pair structure."""

    B: np.ndarray  # (m, n_quant) base distances
    lev1: np.ndarray  # (m, n_cat) level of the first point
    lev2: np.ndarray  # (m, n_cat) level of the second point


class KernelPlan:
    """Precomputed mapping from a (space, config) pair to kernel evaluations."""

    def __init__(self, space: DesignSpace, config: KernelConfig | None = None):
        self.space = space
        self.config = config = config or KernelConfig()
        self.layout = ParamLayout(space, config)
        hier = config.hierarchical_kernel
        decreed = set(space.decreed_indices)
        self.policy = IMPUTE_MEAN if hier == HierarchicalKernelKind.IMP_KERNEL else IMPUTE_DEFAULT
        self.quant = [i for i, v in enumerate(space.variables) if is_quantitative(v)]
        self.cat = [i for i, v in enumerate(space.variables) if isinstance(v, CategoricalVariable)]
        self.cat_levels = [space.variables[i].n_levels for i in self.cat]
        self.decreed_mode = []
        for i in self.quant:
            self.decreed_mode.append(i in decreed and hier != HierarchicalKernelKind.IMP_KERNEL)
        if hier != HierarchicalKernelKind.IMP_KERNEL:
            bad = [i for i in decreed if not is_quantitative(space.variables[i])]
            if bad:
                raise ValueError(f"{hier.value} needs quantitative decreed variables; {bad} are categorical")
        self.decreed_mode = np.array(self.decreed_mode, dtype=bool)
        self.theta_idx = np.array([self.layout.slices[i].start for i in self.quant], dtype=int)
        self.profile = _PROFILE[config.corr]

    # -- encoding ------------------------------------------------------
    def encode(self, X):
        """Correct, impute (kernel policy) and normalize raw rows."""
        if isinstance(X, DesignPoint):
            X = X.values
        elif isinstance(X, (list, tuple)) and X and isinstance(X[0], DesignPoint):
            X = np.array([p.values for p in X])
        values, acting = self.space.correct_values(np.atleast_2d(np.asarray(X, dtype=float)), self.policy)
        return self.space.normalize(values), acting

    # -- pair structure --------------------------------------------------
    def pair_data(self, Z1, A1, Z2, A2, i1, i2) -> PairData:
        q = len(self.quant)
        B = np.empty((len(i1), q))
        for col, j in enumerate(self.quant):
            a, b = Z1[i1, j], Z2[i2, j]
            if self.decreed_mode[col]:
                ua, ub = A1[i1, j], A2[i2, j]
                if self.config.hierarchical_kernel == HierarchicalKernelKind.ALG_KERNEL:
                    dist = alg_distance(a, b)
                else:
                    dist = arc_distance(a, b)
                B[:, col] = np.where(ua & ub, dist, np.where(ua ^ ub, 1.0, 0.0))
            else:
                B[:, col] = base_distance(self.config.corr, a - b)
        lev1 = Z1[np.ix_(i1, self.cat)].astype(np.intp) if self.cat else np.empty((len(i1), 0), np.intp)
        lev2 = Z2[np.ix_(i2, self.cat)].astype(np.intp) if self.cat else np.empty((len(i2), 0), np.intp)
        return PairData(np.ascontiguousarray(B), lev1, lev2)

    def cross_pairs(self, Z1, A1, Z2, A2) -> PairData:
        n1, n2 = len(Z1), len(Z2)
        i1 = np.repeat(np.arange(n1), n2)
        i2 = np.tile(np.arange(n2), n1)
        return self.pair_data(Z1, A1, Z2, A2, i1, i2)

    def train_pairs(self, Z, A):
        iu, ju = np.triu_indices(len(Z), k=1)
        return self.pair_data(Z, A, Z, A, iu, ju), (iu, ju)

    # -- evaluation ------------------------------------------------------
    def _cat_blocks(self, hp):
        out = []
        for i, L in zip(self.cat, self.cat_levels):
            out.append(categorical_matrix(self.config.categorical_kernel, hp[self.layout.slices[i]], L,
                                          self.config.epsilon))
        return out

    def corr(self, hp, pd: PairData) -> np.ndarray:
        hp = self.layout.check(hp)
        r = _backend.corr_product(pd.B, hp[self.theta_idx], self.profile)
        for c, K in enumerate(self._cat_blocks(hp)):
            r = r * K[pd.lev1[:, c], pd.lev2[:, c]]
        return r

    def corr_and_grad(self, hp, pd: PairData):
        """``r`` and the full ``(m, n_hp)`` derivative matrix."""
        hp = self.layout.check(hp)
        r_q, dr_q = _backend.corr_product_grad(pd.B, hp[self.theta_idx], self.profile)
        looks = [K[pd.lev1[:, c], pd.lev2[:, c]] for c, K in enumerate(self._cat_blocks(hp))]
        cat_prod = np.prod(looks, axis=0) if looks else np.ones_like(r_q)
        G = np.zeros((len(r_q), self.layout.n))
        G[:, self.theta_idx] = dr_q * cat_prod[:, None]
        for c, i in enumerate(self.cat):
            other = r_q * np.prod([lk for k, lk in enumerate(looks) if k != c], axis=0) if len(looks) > 1 else r_q
            sl = self.layout.slices[i]
            dK = categorical_matrix_grad(self.config.categorical_kernel, hp[sl], self.cat_levels[c],
                                         self.config.epsilon)
            G[:, sl] = (dK[:, pd.lev1[:, c], pd.lev2[:, c]] * other).T
        return r_q * cat_prod, G

    def corr_and_contract(self, hp, pd: PairData, w):
        """``r`` and ``g_k = sum_p w_p dr_p/dhp_k`` without forming ``(m, n_hp)``."""
        hp = self.layout.check(hp)
        r_q, dr_q = _backend.corr_product_grad(pd.B, hp[self.theta_idx], self.profile)
        blocks = self._cat_blocks(hp)
        looks = [K[pd.lev1[:, c], pd.lev2[:, c]] for c, K in enumerate(blocks)]
        cat_prod = np.prod(looks, axis=0) if looks else np.ones_like(r_q)
        g = np.zeros(self.layout.n)
        g[self.theta_idx] = (w * cat_prod) @ dr_q
        for c, i in enumerate(self.cat):
            L = self.cat_levels[c]
            other = r_q * np.prod([lk for k, lk in enumerate(looks) if k != c], axis=0) if len(looks) > 1 else r_q
            M = np.bincount(pd.lev1[:, c] * L + pd.lev2[:, c], weights=w * other, minlength=L * L).reshape(L, L)
            sl = self.layout.slices[i]
            g[sl] = categorical_contract(self.config.categorical_kernel, hp[sl], L, M, self.config.epsilon)
        return r_q * cat_prod, g

    def matrix(self, hp, Z, A) -> np.ndarray:
        n = len(Z)
        pd, (iu, ju) = self.train_pairs(Z, A)
        R = np.eye(n)
        r = self.corr(hp, pd)
        R[iu, ju] = r
        R[ju, iu] = r
        return R


# ----------------------------------------------------------------------
# public one-shot helpers
# ----------------------------------------------------------------------
def _as_rows(points):
    if isinstance(points, DesignPoint):
        return points.values[None, :]
    if isinstance(points, (list, tuple)) and points and isinstance(points[0], DesignPoint):
        return np.array([p.values for p in points])
    return np.atleast_2d(np.asarray(points, dtype=float))


def corr_matrix(space: DesignSpace, config: KernelConfig, points, hp) -> np.ndarray:
    """Symmetric correlation matrix with an exactly unit diagonal."""
    plan = KernelPlan(space, config)
    Z, A = plan.encode(_as_rows(points))
    return plan.matrix(hp, Z, A)


def corr_matrix_grad(space: DesignSpace, config: KernelConfig, points, hp) -> np.ndarray:
    """``dR/d hp_k`` stacked as ``(n_hp, n, n)``; each slice symmetric."""
    plan = KernelPlan(space, config)
    Z, A = plan.encode(_as_rows(points))
    n = len(Z)
    pd, (iu, ju) = plan.train_pairs(Z, A)
    _, G = plan.corr_and_grad(hp, pd)
    out = np.zeros((plan.layout.n, n, n))
    out[:, iu, ju] = G.T
    out[:, ju, iu] = G.T
    return out


def full_corr(space: DesignSpace, config: KernelConfig, u, v, hp) -> float:
    """Kernel value between two points."""
    plan = KernelPlan(space, config)
    Zu, Au = plan.encode(_as_rows(u))
    Zv, Av = plan.encode(_as_rows(v))
    pd = plan.pair_data(Zu, Au, Zv, Av, np.array([0]), np.array([0]))
    return float(plan.corr(hp, pd)[0])


def meta_decreed_corr(space: DesignSpace, u, v, theta, kind="ALG_KERNEL", corr="abs_exp") -> float:
    """Product over decreed dimensions only.

    ``theta`` holds one value per decreed variable, in index order.
    """
    config = KernelConfig(corr=corr, hierarchical_kernel=kind)
    plan = KernelPlan(space, config)
    decreed = space.decreed_indices
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != len(decreed):
        raise ValueError(f"expected {len(decreed)} decreed thetas")
    Zu, Au = plan.encode(_as_rows(u))
    Zv, Av = plan.encode(_as_rows(v))
    pd = plan.pair_data(Zu, Au, Zv, Av, np.array([0]), np.array([0]))
    cols = [plan.quant.index(i) for i in decreed]
    return float(_backend.corr_product(np.ascontiguousarray(pd.B[:, cols]), theta, plan.profile)[0])
