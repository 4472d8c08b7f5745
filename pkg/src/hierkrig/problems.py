"""Built-in benchmark problems.

Each :class:`Problem` bundles a design space and a vectorized evaluator that
takes corrected internal values (one row per point).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .design_space import (
    CategoricalVariable,
    DesignSpace,
    FloatVariable,
    IntegerVariable,
)

__all__ = [
    "Problem",
    "toy_eval",
    "gold_cont",
    "goldstein_eval",
    "branin_mixed_eval",
    "mlp_eval",
    "toy_problem",
    "goldstein_problem",
    "branin_problem",
    "mlp_problem",
    "mlp_space",
    "get_problem",
    "PROBLEMS",
    "toy_level_minima",
]


@dataclass(frozen=True)
class Problem:
    name: str
    space: DesignSpace
    evaluator: Callable = field(repr=False)
    known_optimum: tuple | None = None  # (x, y, provenance)

    def __call__(self, X) -> np.ndarray:
        """Evaluate raw rows (corrected first, so any numeric input is accepted)."""
        values, _ = self.space.correct_values(np.atleast_2d(np.asarray(X, dtype=float)))
        return self.evaluator(values)


# ----------------------------------------------------------------------
# toy: one float, one 10-level categorical
# ----------------------------------------------------------------------
def _toy_branches(x):
    pi = np.pi
    return [
        np.cos(3.6 * pi * (x - 2)) + x - 1,
        2 * np.cos(1.1 * pi * np.exp(x)) - x / 2 + 2,
        np.cos(2 * pi * x) + x / 2,
        x * (np.cos(3.4 * pi * (x - 1)) - (x - 1) / 2),
        -x ** 2 / 2,
        2 * np.cos(0.25 * pi * np.exp(-x ** 4)) ** 2 - x / 2 + 1,
        x * np.cos(3.4 * pi * x) - x / 2 + 1,
        -x * (np.cos(3.5 * pi * x) + x / 2) + 2,
        -x ** 5 / 2 + 1,
        -np.cos(2.5 * pi * x) ** 2 * np.sqrt(x) - 0.5 * np.log(x + 0.5) - 1.3,
    ]


def toy_eval(x, c1):
    """Toy function; ``c1`` is the level index in 0..9."""
    x = np.asarray(x, dtype=float)
    c1 = np.asarray(c1)
    if np.any((c1 < 0) | (c1 > 9) | (c1 != np.round(c1))):
        raise ValueError("c1 must be an integer level in 0..9")
    c1 = c1.astype(int)
    branches = np.array(np.broadcast_arrays(*_toy_branches(x)))
    out = np.take_along_axis(branches, np.broadcast_to(c1, x.shape)[None], axis=0)[0]
    return out if out.ndim else float(out)


def toy_space() -> DesignSpace:
    return DesignSpace((FloatVariable(0.0, 1.0, "x"), CategoricalVariable(tuple(range(10)), "c1")))


@lru_cache(maxsize=None)
def toy_level_minima(n_grid: int = 100001) -> tuple:
    """Per-level minima of the toy function on a uniform grid of ``[0, 1]``."""
    x = np.linspace(0.0, 1.0, n_grid)
    return tuple(float(np.min(b)) for b in _toy_branches(x))


def toy_problem() -> Problem:
    mins = toy_level_minima()
    level = int(np.argmin(mins))
    return Problem("toy", toy_space(), lambda V: toy_eval(V[:, 0], V[:, 1]),
                   (None, min(mins), f"grid oracle, level {level}"))


# ----------------------------------------------------------------------
# hierarchical Goldstein
# ----------------------------------------------------------------------
def gold_cont(x1, x2, x3, x4, z3, z4, x5, w2):
    return (
        53.3108
        + 0.184901 * x1
        - 5.02914 * x1 ** 3 * 1e-6
        + 7.72522 * x1 ** z3 * 1e-8
        - 0.0870775 * x2
        - 0.106959 * x3
        + 7.98772 * x3 ** z4 * 1e-6
        + 0.00242482 * x4
        + 1.32851 * x4 ** 3 * 1e-6
        - 0.00146393 * x1 * x2
        - 0.00301588 * x1 * x3
        - 0.00272291 * x1 * x4
        + 0.0017004 * x2 * x3
        + 0.0038428 * x2 * x4
        - 0.000198969 * x3 * x4
        + 1.86025 * x1 * x2 * x3 * 1e-5
        - 1.88719 * x1 * x2 * x4 * 1e-6
        + 2.50923 * x1 * x3 * x4 * 1e-5
        - 5.62199 * x2 * x3 * x4 * 1e-5
        + w2 * (5 * np.cos(2 * np.pi / 100 * x5) - 2)
    )


_LEVEL_VALUE = np.array([20.0, 50.0, 80.0])


def goldstein_eval(x1, x2, x3, x4, z1, z2, z3, z4, x5, w1, w2):
    """Hierarchical Goldstein function (vectorized over equal-length arrays)."""
    args = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x1, x2, x3, x4, z1, z2, z3, z4, x5, w1, w2)))
    x1, x2, x3, x4, z1, z2, z3, z4, x5, w1, w2 = args
    for name, z, hi in (("z1", z1, 2), ("z2", z2, 2), ("z3", z3, 2), ("z4", z4, 2), ("w1", w1, 3), ("w2", w2, 1)):
        if np.any((z < 0) | (z > hi) | (z != np.round(z))):
            raise ValueError(f"{name} outside its discrete domain")
    zi1, zi2 = z1.astype(int), z2.astype(int)
    f0 = gold_cont(x1, x2, _LEVEL_VALUE[zi1], _LEVEL_VALUE[zi2], z3, z4, x5, w2)
    f1 = gold_cont(x1, x2, x3, _LEVEL_VALUE[zi2], z3, z4, x5, w2)
    # The z1=1 branch swaps x2 into the third slot and fixes the second
    # slot to 50; kept as printed in the reference definition.
    f2 = np.where(
        zi1 == 1,
        gold_cont(x1, 50.0, x2, x4, z3, z4, x5, w2),
        gold_cont(x1, x2, _LEVEL_VALUE[zi1], x4, z3, z4, x5, w2),
    )
    f3 = gold_cont(x1, x2, x3, x4, z3, z4, x5, w2)
    out = np.select([w1 == 0, w1 == 1, w1 == 2], [f0, f1, f2], f3)
    return out if out.ndim else float(out)


def goldstein_space() -> DesignSpace:
    x = [FloatVariable(0.0, 100.0, f"x{i}") for i in (1, 2, 3, 4)]
    z = [IntegerVariable(0, 2, f"z{i}") for i in (1, 2, 3, 4)]
    space = DesignSpace(tuple(x + z + [
        FloatVariable(0.0, 100.0, "x5"),
        CategoricalVariable((0, 1, 2, 3), "w1"),
        CategoricalVariable((0, 1), "w2"),
    ]))
    w1 = 9
    space = space.declare_decreed_var(2, w1, [1, 3])  # x3
    space = space.declare_decreed_var(3, w1, [2, 3])  # x4
    space = space.declare_decreed_var(4, w1, [0, 2])  # z1
    space = space.declare_decreed_var(5, w1, [0, 1])  # z2
    return space


def goldstein_problem() -> Problem:
    return Problem("goldstein-hier", goldstein_space(), lambda V: goldstein_eval(*V.T))


# ----------------------------------------------------------------------
# mixed Branin
# ----------------------------------------------------------------------
def branin_mixed_eval(x1, x2):
    """Standard Branin; the problem restricts ``x1`` to integers."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    a, b, c, r, s, t = 1.0, 5.1 / (4 * np.pi ** 2), 5 / np.pi, 6.0, 10.0, 1 / (8 * np.pi)
    out = a * (x2 - b * x1 ** 2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s
    return out if out.ndim else float(out)


def branin_space() -> DesignSpace:
    return DesignSpace((IntegerVariable(-5, 10, "x1"), FloatVariable(0.0, 15.0, "x2")))


def branin_problem() -> Problem:
    # for integer x1 the inner quadratic is minimized over x2 in closed form
    x1 = np.arange(-5, 11, dtype=float)
    x2 = np.clip(5.1 / (4 * np.pi ** 2) * x1 ** 2 - 5 / np.pi * x1 + 6, 0, 15)
    y = branin_mixed_eval(x1, x2)
    k = int(np.argmin(y))
    return Problem("branin-mixed", branin_space(), lambda V: branin_mixed_eval(V[:, 0], V[:, 1]),
                   ((x1[k], x2[k]), float(y[k]), "closed form over integer x1"))


# ----------------------------------------------------------------------
# hierarchical MLP stand-in
# ----------------------------------------------------------------------
def mlp_space(n1_decreed: bool = False) -> DesignSpace:
    """Layers ``l`` (meta), learning rate, regularization, activation,
    log2 batch size and the neurons of up to three layers.

    ``n1_decreed=True`` also declares the first layer's neuron count as
    decreed by ``l`` (acting for every ``l``), which makes all three neuron
    counts decreed.
    """
    space = DesignSpace((
        IntegerVariable(1, 3, "l"),
        FloatVariable(1e-5, 1e-2, "r"),
        FloatVariable(0.0, 1.0, "alpha"),
        CategoricalVariable(("ReLU", "Sigmoid", "Tanh"), "a"),
        IntegerVariable(3, 8, "b"),
        IntegerVariable(50, 55, "n1"),
        IntegerVariable(50, 55, "n2"),
        IntegerVariable(50, 55, "n3"),
    ))
    if n1_decreed:
        space = space.declare_decreed_var(5, 0, [1, 2, 3])
    space = space.declare_decreed_var(6, 0, [2, 3])
    space = space.declare_decreed_var(7, 0, 3)
    return space


def mlp_eval(V) -> np.ndarray:
    """Smooth stand-in objective respecting the layer hierarchy."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    l, r, alpha, a, b = V[:, 0], V[:, 1], V[:, 2], V[:, 3], V[:, 4]
    f = np.sin(2 * np.pi * r * 100) + alpha ** 2 + 0.1 * a + np.log2(b) / 8
    for k in range(3):
        f = f + np.where(l >= k + 1, (V[:, 5 + k] - 52.5) ** 2 / 25, 0.0)
    return f


def mlp_problem(n1_decreed: bool = False) -> Problem:
    return Problem("mlp", mlp_space(n1_decreed), mlp_eval)


PROBLEMS = {
    "toy": toy_problem,
    "goldstein-hier": goldstein_problem,
    "branin-mixed": branin_problem,
    "mlp": mlp_problem,
}


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
