"""Mixed and hierarchical design spaces.

A :class:`DesignSpace` is an ordered list of typed variables plus a set of
activation rules. A rule says that a *decreed* variable only acts when its
*meta* variable takes one of a set of values. Everything that needs to know
whether a coordinate matters (sampling, kernels, EGO) asks the design space.

Internal value convention
-------------------------
- ``FloatVariable``: the real value.
- ``IntegerVariable``: the integer value (stored as float).
- ``OrdinalVariable`` / ``CategoricalVariable``: the level index.

Labels and ordinal level values only appear at I/O boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "FloatVariable",
    "IntegerVariable",
    "OrdinalVariable",
    "CategoricalVariable",
    "DecreedRule",
    "DesignSpace",
    "DesignPoint",
    "DesignSpaceError",
    "IMPUTE_DEFAULT",
    "IMPUTE_MEAN",
]

IMPUTE_DEFAULT = "default"
IMPUTE_MEAN = "mean"


class DesignSpaceError(ValueError):
    """Raised for malformed variables, rules or design vectors."""


@dataclass(frozen=True)
class FloatVariable:
    lower: float
    upper: float
    name: str = ""

    kind = "float"

    def __post_init__(self):
        if not float(self.lower) < float(self.upper):
            raise DesignSpaceError(f"lower < upper required, got [{self.lower}, {self.upper}]")
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))


@dataclass(frozen=True)
class IntegerVariable:
    lower: int
    upper: int
    name: str = ""

    kind = "integer"

    def __post_init__(self):
        if int(self.lower) != self.lower or int(self.upper) != self.upper:
            raise DesignSpaceError("integer bounds must be integral")
        if not self.lower < self.upper:
            raise DesignSpaceError(f"lower < upper required, got [{self.lower}, {self.upper}]")
        object.__setattr__(self, "lower", int(self.lower))
        object.__setattr__(self, "upper", int(self.upper))

    @property
    def n_values(self) -> int:
        return self.upper - self.lower + 1


def _check_levels(levels):
    levels = tuple(levels)
    if len(levels) < 2:
        raise DesignSpaceError("at least 2 levels required")
    if len(set(levels)) != len(levels):
        raise DesignSpaceError(f"levels must be distinct: {levels}")
    return levels


@dataclass(frozen=True)
class OrdinalVariable:
    levels: tuple
    name: str = ""

    kind = "ordinal"

    def __post_init__(self):
        object.__setattr__(self, "levels", _check_levels(self.levels))

    @property
    def n_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class CategoricalVariable:
    levels: tuple
    name: str = ""

    kind = "categorical"

    def __post_init__(self):
        object.__setattr__(self, "levels", _check_levels(self.levels))

    @property
    def n_levels(self) -> int:
        return len(self.levels)


_DISCRETE_LEVELS = (OrdinalVariable, CategoricalVariable)


def is_quantitative(var) -> bool:
    """Float, Integer and Ordinal variables share the continuous kernels."""
    return not isinstance(var, CategoricalVariable)


@dataclass(frozen=True)
class DecreedRule:
    """``decreed`` acts iff ``meta`` acts and its value is in ``values``.

    ``values`` are stored in the internal convention (integer value or level
    index).
    """

    decreed: int
    meta: int
    values: frozenset


@dataclass
class DesignPoint:
    values: np.ndarray
    acting: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.acting = np.asarray(self.acting, dtype=bool)


@dataclass(frozen=True)
class DesignSpace:
    """Ordered typed variables plus meta -> decreed activation rules.

    Instances are immutable; :meth:`declare_decreed_var` returns a new space.
    """

    variables: tuple
    rules: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rules", tuple(self.rules))
        names = [v.name for v in self.variables]
        if any(names) and len(set(names)) != len(names):
            raise DesignSpaceError(f"variable names must be unique: {names}")
        rules = self.rules
        object.__setattr__(self, "rules", ())
        for rule in rules:
            self._validate_rule(rule)
            object.__setattr__(self, "rules", self.rules + (rule,))
        object.__setattr__(self, "_order", self._topological_order())

    # ------------------------------------------------------------------
    # structure
    # ------------------------------------------------------------------
    @property
    def n_dims(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name or f"x{i}" for i, v in enumerate(self.variables)]

    @property
    def is_hierarchical(self) -> bool:
        return bool(self.rules)

    @property
    def meta_indices(self) -> list[int]:
        return sorted({r.meta for r in self.rules})

    @property
    def decreed_indices(self) -> list[int]:
        return sorted({r.decreed for r in self.rules})

    def role(self, i: int) -> str:
        if i in self.decreed_indices:
            return "decreed"
        if i in self.meta_indices:
            return "meta"
        return "neutral"

    def rule_for(self, i: int):
        for r in self.rules:
            if r.decreed == i:
                return r
        return None

    def _meta_value_to_internal(self, meta, value):
        var = self.variables[meta]
        if isinstance(var, FloatVariable):
            raise DesignSpaceError("continuous meta variables are not supported")
        if isinstance(var, IntegerVariable):
            if int(value) != value or not var.lower <= value <= var.upper:
                raise DesignSpaceError(f"activating value {value!r} outside meta domain")
            return int(value)
        if value not in var.levels:
            raise DesignSpaceError(f"activating value {value!r} is not a level of the meta variable")
        return var.levels.index(value)

    def _validate_rule(self, rule: DecreedRule):
        n = self.n_dims
        if not (0 <= rule.decreed < n and 0 <= rule.meta < n):
            raise DesignSpaceError(f"rule index out of range: {rule}")
        if rule.decreed == rule.meta:
            raise DesignSpaceError("a variable cannot decree itself")
        if not rule.values:
            raise DesignSpaceError("activating values must be nonempty")
        meta = self.variables[rule.meta]
        if isinstance(meta, FloatVariable):
            raise DesignSpaceError("continuous meta variables are not supported")
        lo = meta.lower if isinstance(meta, IntegerVariable) else 0
        hi = meta.upper if isinstance(meta, IntegerVariable) else meta.n_levels - 1
        if any(int(v) != v or not lo <= v <= hi for v in rule.values):
            raise DesignSpaceError(f"activating values {sorted(rule.values)} outside meta domain")
        if self.rule_for(rule.decreed) is not None:
            raise DesignSpaceError(f"variable {rule.decreed} is already decreed")
        # meta -> decreed edge must not close a cycle: walk up from meta
        cur = rule.meta
        while True:
            parent = self.rule_for(cur)
            if parent is None:
                break
            if parent.meta == rule.decreed:
                raise DesignSpaceError("activation graph cycle detected")
            cur = parent.meta

    def declare_decreed_var(self, decreed_var: int, meta_var: int, meta_value) -> "DesignSpace":
        """Return a new space where ``decreed_var`` acts iff ``meta_var`` is in ``meta_value``.

        ``meta_value`` is a single domain value or a list of them: integers for
        an integer meta variable, level values/labels for ordinal or
        categorical ones.
        """
        n = self.n_dims
        if not (0 <= decreed_var < n and 0 <= meta_var < n):
            raise DesignSpaceError("rule index out of range")
        if isinstance(meta_value, (list, tuple, set, frozenset, np.ndarray)):
            values = list(meta_value)
        else:
            values = [meta_value]
        internal = frozenset(self._meta_value_to_internal(meta_var, v) for v in values)
        rule = DecreedRule(int(decreed_var), int(meta_var), internal)
        self._validate_rule(rule)
        return DesignSpace(self.variables, self.rules + (rule,))

    def _topological_order(self) -> list[int]:
        """Decreed indices ordered root-first."""
        order, done = [], set()

        def visit(i):
            if i in done:
                return
            r = self.rule_for(i)
            if r is not None:
                visit(r.meta)
                order.append(i)
            done.add(i)

        for r in self.rules:
            visit(r.decreed)
        return order

    # ------------------------------------------------------------------
    # point operations (vectorized over rows)
    # ------------------------------------------------------------------
    def _as_2d(self, x):
        try:
            arr = np.array(x, dtype=float)
        except (TypeError, ValueError) as exc:
            raise DesignSpaceError(f"non-numeric design vector: {exc}") from None
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.ndim != 2 or arr.shape[1] != self.n_dims:
            raise DesignSpaceError(f"expected {self.n_dims} columns, got shape {np.shape(x)}")
        if not np.all(np.isfinite(arr)):
            raise DesignSpaceError("design vector contains NaN or infinite values")
        return arr, single

    def activity_mask(self, x) -> np.ndarray:
        """Per-variable acting mask; rules are resolved root-first."""
        arr, single = self._as_2d(x)
        acting = np.ones(arr.shape, dtype=bool)
        for d in self._order:
            r = self.rule_for(d)
            meta_vals = arr[:, r.meta]
            var = self.variables[r.meta]
            n_dom = var.n_values if isinstance(var, IntegerVariable) else var.n_levels
            lo = var.lower if isinstance(var, IntegerVariable) else 0
            valid = (meta_vals == np.round(meta_vals)) & (meta_vals >= lo) & (meta_vals < lo + n_dom)
            if np.any(acting[:, r.meta] & ~valid):
                raise DesignSpaceError("meta value outside its domain")
            acting[:, d] = acting[:, r.meta] & np.isin(meta_vals, sorted(r.values))
        return acting[0] if single else acting

    def _correct_values(self, arr):
        out = arr.copy()
        for i, var in enumerate(self.variables):
            col = out[:, i]
            if isinstance(var, FloatVariable):
                out[:, i] = np.clip(col, var.lower, var.upper)
            elif isinstance(var, IntegerVariable):
                out[:, i] = np.floor(np.clip(col, var.lower, var.upper))
            else:
                # nearest level index, ties go to the lower index
                out[:, i] = np.ceil(np.clip(col, 0, var.n_levels - 1) - 0.5)
        return out

    def impute_values(self, x, acting, policy: str = IMPUTE_DEFAULT) -> np.ndarray:
        """Overwrite non-acting coordinates with canonical values.

        ``policy="default"``: midpoint for floats, first value for discrete
        variables. ``policy="mean"``: midpoint for floats, floored mean of the
        bounds (or of the level indices) for discrete variables.
        """
        arr, single = self._as_2d(x)
        acting = np.atleast_2d(np.asarray(acting, dtype=bool))
        out = arr.copy()
        for i, fill in enumerate(self.imputation_values(policy)):
            out[~acting[:, i], i] = fill
        return out[0] if single else out

    def imputation_values(self, policy: str = IMPUTE_DEFAULT) -> np.ndarray:
        if policy not in (IMPUTE_DEFAULT, IMPUTE_MEAN):
            raise DesignSpaceError(f"unknown imputation policy {policy!r}")
        fills = np.empty(self.n_dims)
        for i, var in enumerate(self.variables):
            if isinstance(var, FloatVariable):
                fills[i] = 0.5 * (var.lower + var.upper)
            elif isinstance(var, IntegerVariable):
                fills[i] = var.lower if policy == IMPUTE_DEFAULT else np.floor(0.5 * (var.lower + var.upper))
            else:
                fills[i] = 0 if policy == IMPUTE_DEFAULT else np.floor(0.5 * (var.n_levels - 1))
        return fills

    def correct_values(self, x, policy: str = IMPUTE_DEFAULT):
        """Vectorized correction: returns ``(values, acting)`` arrays."""
        arr, single = self._as_2d(x)
        arr = self._correct_values(arr)
        acting = self.activity_mask(arr)
        arr = self.impute_values(arr, acting, policy)
        if single:
            return arr[0], acting[0]
        return arr, acting

    def correct(self, x, policy: str = IMPUTE_DEFAULT) -> DesignPoint:
        values, acting = self.correct_values(np.ravel(x), policy)
        return DesignPoint(values, acting)

    def impute(self, point: DesignPoint, policy: str = IMPUTE_DEFAULT) -> DesignPoint:
        return DesignPoint(self.impute_values(point.values, point.acting, policy), point.acting.copy())

    def is_valid(self, x, acting=None, policy: str = IMPUTE_DEFAULT) -> bool:
        """True when ``x`` is exactly its own correction (with matching mask)."""
        try:
            values, mask = self.correct_values(x, policy)
        except DesignSpaceError:
            return False
        arr = np.asarray(x, dtype=float)
        if acting is not None and not np.array_equal(mask, np.asarray(acting, dtype=bool)):
            return False
        return bool(np.array_equal(values, arr))

    def normalize(self, x) -> np.ndarray:
        """Map corrected values to the unit cube; categorical indices pass through."""
        arr, single = self._as_2d(x)
        out = arr.copy()
        for i, var in enumerate(self.variables):
            if isinstance(var, (FloatVariable, IntegerVariable)):
                out[:, i] = (arr[:, i] - var.lower) / (var.upper - var.lower)
            elif isinstance(var, OrdinalVariable):
                out[:, i] = arr[:, i] / (var.n_levels - 1)
        return out[0] if single else out

    def scales(self) -> np.ndarray:
        """d(normalized)/d(raw) for every variable (1 for categoricals)."""
        out = np.ones(self.n_dims)
        for i, var in enumerate(self.variables):
            if isinstance(var, (FloatVariable, IntegerVariable)):
                out[i] = 1.0 / (var.upper - var.lower)
            elif isinstance(var, OrdinalVariable):
                out[i] = 1.0 / (var.n_levels - 1)
        return out

    def from_unit(self, u) -> np.ndarray:
        """Map unit-cube samples to raw values with equal mass per discrete value.

        The result still needs :meth:`correct_values`.
        """
        arr = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.empty_like(arr)
        for i, var in enumerate(self.variables):
            col = arr[:, i]
            if isinstance(var, FloatVariable):
                out[:, i] = var.lower + col * (var.upper - var.lower)
            elif isinstance(var, IntegerVariable):
                out[:, i] = np.minimum(np.floor(var.lower + col * var.n_values), var.upper)
            else:
                out[:, i] = np.minimum(np.floor(col * var.n_levels), var.n_levels - 1)
        return out

    # ------------------------------------------------------------------
    # label conversion
    # ------------------------------------------------------------------
    def to_labels(self, row) -> list:
        out = []
        for v, var in zip(row, self.variables):
            if isinstance(var, FloatVariable):
                out.append(float(v))
            elif isinstance(var, IntegerVariable):
                out.append(int(v))
            else:
                out.append(var.levels[int(v)])
        return out

    def from_labels(self, row: Sequence[Any]) -> np.ndarray:
        if len(row) != self.n_dims:
            raise DesignSpaceError(f"expected {self.n_dims} values, got {len(row)}")
        out = np.empty(self.n_dims)
        for i, (v, var) in enumerate(zip(row, self.variables)):
            if isinstance(var, _DISCRETE_LEVELS):
                out[i] = _level_index(var, v)
            else:
                try:
                    out[i] = float(v)
                except (TypeError, ValueError):
                    raise DesignSpaceError(f"non-numeric value {v!r} for {var.name or i}") from None
        return out

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        variables = []
        for i, var in enumerate(self.variables):
            d = {"name": self.names[i], "kind": var.kind}
            if isinstance(var, (FloatVariable, IntegerVariable)):
                d["lower"], d["upper"] = var.lower, var.upper
            else:
                d["levels"] = list(var.levels)
            variables.append(d)
        rules = []
        for r in self.rules:
            meta = self.variables[r.meta]
            vals = sorted(r.values)
            if isinstance(meta, _DISCRETE_LEVELS):
                vals = [meta.levels[v] for v in vals]
            rules.append({"decreed": r.decreed, "meta": r.meta, "values": vals})
        return {"format_version": 1, "variables": variables, "rules": rules}

    @classmethod
    def from_dict(cls, doc: dict) -> "DesignSpace":
        try:
            variables = []
            for d in doc["variables"]:
                kind, name = d["kind"], d.get("name", "")
                if kind == "float":
                    variables.append(FloatVariable(d["lower"], d["upper"], name))
                elif kind == "integer":
                    variables.append(IntegerVariable(d["lower"], d["upper"], name))
                elif kind == "ordinal":
                    variables.append(OrdinalVariable(tuple(d["levels"]), name))
                elif kind == "categorical":
                    variables.append(CategoricalVariable(tuple(d["levels"]), name))
                else:
                    raise DesignSpaceError(f"unknown variable kind {kind!r}")
            space = cls(tuple(variables))
            for r in doc.get("rules", []):
                space = space.declare_decreed_var(r["decreed"], r["meta"], list(r["values"]))
        except (KeyError, TypeError) as exc:
            raise DesignSpaceError(f"malformed design-space document: {exc!r}") from None
        return space


def _level_index(var, value) -> int:
    if value in var.levels:
        return var.levels.index(value)
    # CSV round trips turn every level into a string
    as_str = [str(lv) for lv in var.levels]
    if str(value) in as_str:
        return as_str.index(str(value))
    raise DesignSpaceError(f"{value!r} is not a level of {var.name or 'variable'}: {var.levels}")
