import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hierkrig.design_space import (
    CategoricalVariable,
    DesignPoint,
    DesignSpace,
    DesignSpaceError,
    FloatVariable,
    IntegerVariable,
    OrdinalVariable,
)
from hierkrig.problems import goldstein_space, mlp_space


def chain_space():
    # a -> b -> c, with b both decreed and meta
    space = DesignSpace((
        CategoricalVariable(("x", "y", "z"), "a"),
        IntegerVariable(0, 2, "b"),
        FloatVariable(-1.0, 1.0, "c"),
        OrdinalVariable((1, 4, 9), "d"),
    ))
    space = space.declare_decreed_var(1, 0, ["y", "z"])
    return space.declare_decreed_var(2, 1, [2])


# ----------------------------------------------------------------------
# variables and rules
# ----------------------------------------------------------------------
@pytest.mark.parametrize("make", [
    lambda: FloatVariable(1.0, 1.0),
    lambda: IntegerVariable(3, 2),
    lambda: IntegerVariable(0.5, 2),
    lambda: CategoricalVariable(("a",)),
    lambda: OrdinalVariable((1, 1, 2)),
])
def test_variable_invariants(make):
    with pytest.raises(DesignSpaceError):
        make()


def test_mlp_rules_from_listing():
    space = mlp_space()
    assert space.n_dims == 8
    assert len(space.rules) == 2
    r6, r7 = space.rule_for(6), space.rule_for(7)
    assert (r6.meta, sorted(r6.values)) == (0, [2, 3])
    assert (r7.meta, sorted(r7.values)) == (0, [3])
    assert space.role(0) == "meta" and space.role(6) == "decreed" and space.role(1) == "neutral"


def test_self_rule_rejected():
    space = DesignSpace((IntegerVariable(0, 2), FloatVariable(0, 1)))
    with pytest.raises(DesignSpaceError):
        space.declare_decreed_var(0, 0, 1)


def test_cycle_rejected():
    space = DesignSpace((IntegerVariable(0, 2), IntegerVariable(0, 2)))
    space = space.declare_decreed_var(1, 0, 1)
    with pytest.raises(DesignSpaceError):
        space.declare_decreed_var(0, 1, 1)


def test_long_cycle_rejected():
    space = DesignSpace(tuple(IntegerVariable(0, 1, f"v{i}") for i in range(3)))
    space = space.declare_decreed_var(1, 0, 1).declare_decreed_var(2, 1, 1)
    with pytest.raises(DesignSpaceError):
        space.declare_decreed_var(0, 2, 1)


@pytest.mark.parametrize("args", [(5, 0, 1), (1, -1, 1), (1, 0, 7), (1, 0, [])])
def test_bad_rules(args):
    space = DesignSpace((IntegerVariable(0, 2), FloatVariable(0, 1)))
    with pytest.raises(DesignSpaceError):
        space.declare_decreed_var(*args)


def test_float_meta_rejected():
    space = DesignSpace((FloatVariable(0, 1), FloatVariable(0, 1)))
    with pytest.raises(DesignSpaceError):
        space.declare_decreed_var(1, 0, 0.5)


def test_second_rule_for_same_variable_rejected():
    space = DesignSpace((IntegerVariable(0, 2), IntegerVariable(0, 2), FloatVariable(0, 1)))
    space = space.declare_decreed_var(2, 0, 1)
    with pytest.raises(DesignSpaceError):
        space.declare_decreed_var(2, 1, 1)


def test_rules_are_immutable_updates():
    space = DesignSpace((IntegerVariable(0, 2), FloatVariable(0, 1)))
    space2 = space.declare_decreed_var(1, 0, 1)
    assert not space.is_hierarchical and space2.is_hierarchical


# ----------------------------------------------------------------------
# activity, correction, imputation
# ----------------------------------------------------------------------
def test_mlp_two_layers_mask():
    space = mlp_space()
    mask = space.activity_mask([2, 1e-3, 0.5, 0, 4, 51, 52, 53])
    assert mask.tolist() == [True] * 7 + [False]


def test_no_rules_all_true():
    space = DesignSpace((FloatVariable(0, 1), CategoricalVariable(("a", "b"))))
    assert space.activity_mask(np.array([[0.3, 1], [0.2, 0]])).all()


def test_goldstein_w1_3_mask():
    space = goldstein_space()
    x = [10, 20, 30, 40, 1, 1, 1, 1, 50, 3, 0]
    mask = space.activity_mask(x)
    names = space.names
    acting = {n for n, m in zip(names, mask) if m}
    assert {"x3", "x4"} <= acting
    assert not {"z1", "z2"} & acting


def test_chain_resolution():
    space = chain_space()
    # a = x -> b off -> c off even if b's raw value is 2
    assert space.activity_mask([0, 2, 0.5, 0]).tolist() == [True, False, False, True]
    assert space.activity_mask([1, 2, 0.5, 0]).tolist() == [True, True, True, True]
    assert space.activity_mask([1, 1, 0.5, 0]).tolist() == [True, True, False, True]


def test_integer_correction_floors():
    space = DesignSpace((IntegerVariable(50, 55),))
    assert space.correct([52.5]).values[0] == 52
    assert space.correct([55.9]).values[0] == 55
    assert space.correct([-3]).values[0] == 50


def test_float_correction():
    space = DesignSpace((FloatVariable(0, 10),))
    assert space.correct([3.25]).values[0] == 3.25
    assert space.correct([11.0]).values[0] == 10.0


def test_level_snap_ties_go_low():
    space = DesignSpace((CategoricalVariable(("a", "b", "c")),))
    assert space.correct([0.5]).values[0] == 0
    assert space.correct([1.5]).values[0] == 1
    assert space.correct([1.51]).values[0] == 2
    assert space.correct([9]).values[0] == 2


def test_non_numeric_rejected():
    space = DesignSpace((FloatVariable(0, 10),))
    with pytest.raises(DesignSpaceError):
        space.correct(["abc"])
    with pytest.raises(DesignSpaceError):
        space.correct([np.nan])


def test_impute_defaults():
    space = goldstein_space()
    # w1 = 3: z1, z2 inactive -> integer lower bound 0
    p = space.correct([10, 20, 30, 40, 2, 2, 1, 1, 50, 3, 0])
    assert p.values[4] == 0 and p.values[5] == 0
    # w1 = 0: x3, x4 inactive -> midpoint 50
    p = space.correct([10, 20, 30, 40, 2, 2, 1, 1, 50, 0, 0])
    assert p.values[2] == 50 and p.values[3] == 50


def test_impute_categorical_to_zero():
    space = DesignSpace((IntegerVariable(0, 1), CategoricalVariable(("a", "b", "c"))))
    space = space.declare_decreed_var(1, 0, 1)
    assert space.correct([0, 2]).values[1] == 0


def test_impute_identity_on_acting():
    space = mlp_space()
    x = np.array([3, 1e-3, 0.5, 2, 4, 51, 52, 53], dtype=float)
    p = space.correct(x)
    assert np.array_equal(space.impute(p).values, x)


def test_mean_imputation_values():
    fills = goldstein_space().imputation_values("mean")
    # x on [0, 100] -> 50, z on {0, 1, 2} -> 1
    assert fills[2] == 50 and fills[4] == 1
    fills = mlp_space().imputation_values("mean")
    assert fills[7] == 52  # floor of 52.5


def test_normalize():
    space = mlp_space()
    z = space.normalize([1, 1e-5, 0.0, 2, 3, 51, 50, 55])
    assert z[5] == pytest.approx(0.2)
    assert z[6] == 0.0 and z[7] == 1.0
    assert z[3] == 2  # categorical index passes through
    space = DesignSpace((OrdinalVariable((1, 4, 9)),))
    assert space.normalize([1])[0] == 0.5


def test_from_unit_equal_mass():
    space = DesignSpace((IntegerVariable(0, 2), CategoricalVariable(("a", "b"))))
    u = np.linspace(0, 1, 600, endpoint=False)
    vals = space.from_unit(np.column_stack([u, u]))
    assert np.bincount(vals[:, 0].astype(int)).tolist() == [200, 200, 200]
    assert np.bincount(vals[:, 1].astype(int)).tolist() == [300, 300]
    assert space.from_unit([[1.0, 1.0]]).tolist() == [[2.0, 1.0]]


def test_is_valid():
    space = mlp_space()
    good = space.correct([2, 1e-3, 0.5, 0, 4, 51, 52, 53]).values
    assert space.is_valid(good)
    bad = good.copy()
    bad[7] = 53  # inactive but not imputed
    assert not space.is_valid(bad)


# ----------------------------------------------------------------------
# properties
# ----------------------------------------------------------------------
raw_rows = st.lists(st.floats(-200, 200, allow_nan=False), min_size=11, max_size=11)


@settings(max_examples=200, deadline=None)
@given(raw_rows)
def test_correct_idempotent(row):
    space = goldstein_space()
    p = space.correct(row)
    q = space.correct(p.values)
    assert np.array_equal(p.values, q.values) and np.array_equal(p.acting, q.acting)


@settings(max_examples=200, deadline=None)
@given(raw_rows)
def test_corrected_points_satisfy_invariants(row):
    space = goldstein_space()
    p = space.correct(row)
    assert space.is_valid(p.values, p.acting)
    for r in space.rules:
        assert p.acting[r.decreed] == (p.acting[r.meta] and int(p.values[r.meta]) in r.values)


@settings(max_examples=200, deadline=None)
@given(raw_rows, st.lists(st.floats(-200, 200, allow_nan=False), min_size=11, max_size=11))
def test_inactive_coordinates_are_irrelevant(row, noise):
    space = goldstein_space()
    p = space.correct(row)
    perturbed = np.array(p.values)
    inactive = ~p.acting
    perturbed[inactive] = np.asarray(noise)[inactive]
    q = space.correct(perturbed)
    assert np.array_equal(p.values, q.values)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4))
def test_chain_invariants(row):
    space = chain_space()
    p = space.correct(row)
    assert space.is_valid(p.values, p.acting)
    if not p.acting[1]:
        assert not p.acting[2]


# ----------------------------------------------------------------------
# labels and JSON
# ----------------------------------------------------------------------
def test_labels_round_trip():
    space = mlp_space()
    x = np.array([2, 1e-3, 0.5, 1, 4, 51, 52, 50], dtype=float)
    labels = space.to_labels(x)
    assert labels[3] == "Sigmoid"
    assert np.array_equal(space.from_labels(labels), x)
    assert np.array_equal(space.from_labels([str(v) for v in labels]), x)
    with pytest.raises(DesignSpaceError):
        space.from_labels(labels[:-1])
    with pytest.raises(DesignSpaceError):
        space.from_labels([*labels[:3], "Softmax", *labels[4:]])


def test_json_round_trip():
    for space in (mlp_space(), goldstein_space(), chain_space()):
        doc = space.to_dict()
        assert doc["format_version"] == 1
        again = DesignSpace.from_dict(doc)
        assert again.to_dict() == doc
        assert again.rules == space.rules


def test_json_malformed():
    with pytest.raises(DesignSpaceError):
        DesignSpace.from_dict({"variables": [{"kind": "complex"}]})
    with pytest.raises(DesignSpaceError):
        DesignSpace.from_dict({"rules": []})


def test_design_point_types():
    p = DesignPoint([1, 2], [1, 0])
    assert p.values.dtype == float and p.acting.dtype == bool
