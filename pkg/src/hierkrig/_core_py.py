"""Numpy implementation of the correlation hot loops.

Mirrors ``_core.pyx`` exactly; selected when the compiled module is missing
or ``HIERKRIG_BACKEND=python`` is set.

``B`` holds one row per point pair and one column per quantitative
dimension: the unweighted base distance of that dimension. The profile is
applied to ``theta_j * B[:, j]`` and the per-dimension factors multiplied.
"""
import numpy as np

EXP, MATERN32, MATERN52 = 0, 1, 2

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


def _profile(d, profile):
    if profile == EXP:
        return np.exp(-d)
    if profile == MATERN32:
        return (1.0 + _SQRT3 * d) * np.exp(-_SQRT3 * d)
    return (1.0 + _SQRT5 * d + 5.0 / 3.0 * d * d) * np.exp(-_SQRT5 * d)


def _log_slope(d, profile):
    # p'(d) / p(d), finite for all d >= 0
    if profile == EXP:
        return -np.ones_like(d)
    if profile == MATERN32:
        return -3.0 * d / (1.0 + _SQRT3 * d)
    return -5.0 / 3.0 * d * (1.0 + _SQRT5 * d) / (1.0 + _SQRT5 * d + 5.0 / 3.0 * d * d)


def corr_product(B, theta, profile):
    B = np.asarray(B, dtype=float)
    if B.shape[1] == 0:
        return np.ones(B.shape[0])
    return np.prod(_profile(B * theta, profile), axis=1)


def corr_product_grad(B, theta, profile):
    """Return ``r`` and ``dr[:, j] = d r / d theta_j``."""
    B = np.asarray(B, dtype=float)
    if B.shape[1] == 0:
        return np.ones(B.shape[0]), np.zeros_like(B)
    d = B * theta
    r = np.prod(_profile(d, profile), axis=1)
    dr = r[:, None] * _log_slope(d, profile) * B
    return r, dr
