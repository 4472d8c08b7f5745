"""Acceptance gate.

Each test prints one ``PASS``/``FAIL`` line for its criterion (visible in
``pytest -v`` output) and then asserts it. Tolerances and budgets are the
pinned ones; the long EGO replications are marked ``slow`` but are part of
the default run. Run ``python3 tests/test_acceptance.py`` for the gate alone.
"""
import time

import numpy as np
import pytest

from hierkrig.design_space import CategoricalVariable, DesignSpace, FloatVariable, IntegerVariable
from hierkrig.ego import EgoConfig, convergence_stats, initial_design, optimize, run_replications
from hierkrig.kernels import KernelConfig, alg_distance, corr_matrix, count_hyperparameters
from hierkrig.kriging import KrigingConfig, KrigingModel, train
from hierkrig.problems import (
    branin_problem,
    goldstein_problem,
    mlp_problem,
    mlp_space,
    toy_level_minima,
)
from hierkrig.sampling import SamplerConfig, sample_values

CORR = ("abs_exp", "squar_exp", "matern32", "matern52")
CAT = ("GOWER", "CONT_RELAX", "EXP_HOMO_HSPHERE", "HOMO_HSPHERE")
HIER = ("ALG_KERNEL", "ARC_KERNEL", "IMP_KERNEL")


@pytest.fixture
def gate(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} :: {detail}")
        assert ok, detail

    return report


def chain_space():
    # meta -> decreed meta -> decreed, with a categorical in the middle of the space
    space = DesignSpace((
        IntegerVariable(0, 2, "k"),
        FloatVariable(-1.0, 1.0, "u"),
        CategoricalVariable(("p", "q", "r"), "c"),
        IntegerVariable(1, 4, "m"),
        FloatVariable(0.0, 5.0, "v"),
    ))
    return space.declare_decreed_var(3, 0, [1, 2]).declare_decreed_var(4, 3, [3, 4])


SPACES = {"goldstein": lambda: goldstein_problem().space, "mlp": mlp_space, "chain": chain_space}


def random_hp(layout, rng):
    z = np.array([rng.uniform(lo, hi) for lo, hi in layout.opt_bounds()])
    z[layout.log_mask] = rng.uniform(-1.0, 1.0, layout.log_mask.sum())
    return layout.from_opt(z)


def random_model(space, config, rng, n):
    X, _ = sample_values(space, SamplerConfig(n_points=n, seed=int(rng.integers(2 ** 31))))
    y = np.sin(X @ rng.normal(size=space.n_dims) * 0.05) + rng.normal(0, 0.1, n)
    m = KrigingModel(space, config)
    return m.set_hyperparameters(X, y, random_hp(m.plan.layout, rng))


# ----------------------------------------------------------------------
def test_01_interpolation(gate):
    t0 = time.time()
    p = mlp_problem()
    X, _ = sample_values(p.space, SamplerConfig(n_points=100, seed=0))
    y = p(X)
    config = KrigingConfig(corr="abs_exp", categorical_kernel="HOMO_HSPHERE",
                           hierarchical_kernel="ALG_KERNEL", n_starts=3)
    m = train(p.space, config, X, y)
    mu, s2 = m.predict(X)
    rmse = float(np.sqrt(np.mean((mu - y) ** 2)))
    var_rmse = float(np.sqrt(np.mean(s2 ** 2)))
    dt = time.time() - t0
    gate(1, "MLP interpolation", rmse < 1e-7 and var_rmse < 1e-7 and dt < 60,
         f"pred RMSE {rmse:.2e}, var RMSE {var_rmse:.2e} (< 1e-7), {dt:.1f} s (< 60 s)")


def test_02_hierarchical_invariance(gate):
    rng = np.random.default_rng(2)
    cases = worst = 0
    while cases < 1000:
        name = rng.choice(sorted(SPACES))
        space = SPACES[name]()
        cat = rng.choice(CAT)
        hier = "IMP_KERNEL" if name == "chain" else rng.choice(HIER)
        m = random_model(space, KrigingConfig(corr=rng.choice(CORR), categorical_kernel=cat,
                                              hierarchical_kernel=hier), rng, 15)
        Q, A = sample_values(space, SamplerConfig(n_points=50, seed=int(rng.integers(2 ** 31))))
        # replace every non-acting decreed value by another in-range value
        other = space.from_unit(rng.random(Q.shape))
        off = ~A & np.isin(np.arange(space.n_dims), space.decreed_indices)
        noisy = np.where(off, other, Q)
        mu0, s0 = m.predict(Q)
        mu1, s1 = m.predict(noisy)
        worst = max(worst, float(np.max(np.abs(mu1 - mu0))), float(np.max(np.abs(s1 - s0))))
        cases += len(Q)
    gate(2, "non-acting decreed inputs have no influence", worst == 0.0,
         f"{cases} perturbed queries, max |change| = {worst}")


def test_03_algebraic_distance(gate):
    vals = [alg_distance(51, 54), alg_distance(0.2, 0.8), alg_distance(0, 1)]
    want = [2.178e-3, 0.919, 1.414]
    err = max(abs(a - b) for a, b in zip(vals, want))
    gate(3, "algebraic distance values", err <= 1e-3,
         f"got {[round(float(v), 6) for v in vals]}, max abs error {err:.1e} (<= 1e-3)")


def test_04_hyperparameter_counts(gate):
    cantilever = DesignSpace((CategoricalVariable(tuple(range(12)), "section"),
                              FloatVariable(10.0, 20.0, "L"), FloatVariable(1.0, 2.0, "S")))
    got = [count_hyperparameters(cantilever, KernelConfig(categorical_kernel=k)) for k in CAT]
    mlp = count_hyperparameters(mlp_space(), KernelConfig(categorical_kernel="HOMO_HSPHERE",
                                                          hierarchical_kernel="ALG_KERNEL"))
    ok = got == [3, 14, 68, 68] and mlp == 10
    gate(4, "hyperparameter counts", ok, f"cantilever GD/CR/EHH/HH = {got} (3/14/68/68), MLP ALG = {mlp} (10)")


def test_05_spd_suite(gate):
    t0 = time.time()
    rng = np.random.default_rng(5)
    min_eig, diag_ok, sym_ok = np.inf, True, True
    for _ in range(200):
        name = rng.choice(sorted(SPACES))
        space = SPACES[name]()
        config = KernelConfig(corr=rng.choice(CORR), categorical_kernel=rng.choice(CAT),
                              hierarchical_kernel="IMP_KERNEL" if name == "chain" else rng.choice(HIER))
        n = int(rng.integers(1, 51))
        X, _ = sample_values(space, SamplerConfig(n_points=n, seed=int(rng.integers(2 ** 31))))
        if n > 2:
            X[-1] = X[0]  # an exact duplicate is the hardest case for definiteness
        m = KrigingModel(space, KrigingConfig(**config.to_dict()))
        hp = random_hp(m.plan.layout, rng)
        hp[m.plan.layout.log_mask] = 10 ** rng.uniform(-6, np.log10(20), m.plan.layout.log_mask.sum())
        R = corr_matrix(space, config, X, hp)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(R).min()))
        diag_ok &= bool(np.all(np.diag(R) == 1.0))
        sym_ok &= bool(np.array_equal(R, R.T))
    dt = time.time() - t0
    gate(5, "correlation matrices are valid", min_eig >= -1e-8 and diag_ok and sym_ok and dt < 120,
         f"200 draws, min eigenvalue {min_eig:.2e} (>= -1e-8), unit diagonal {diag_ok}, "
         f"exact symmetry {sym_ok}, {dt:.1f} s")


def _rel(a, b, floor):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), floor))


def test_06_gradient_oracles(gate):
    t0 = time.time()
    rng = np.random.default_rng(6)
    worst_nll = worst_der = 0.0
    for _ in range(50):
        name = rng.choice(["goldstein", "mlp"])
        space = SPACES[name]()
        corr = rng.choice(CORR[1:])
        m = random_model(space, KrigingConfig(corr=corr, categorical_kernel=rng.choice(CAT),
                                              hierarchical_kernel=rng.choice(HIER)), rng, 12)
        hp = m.hp
        _, g = m.neg_log_likelihood(hp, gradient=True)
        fd = np.empty_like(g)
        for k in range(len(hp)):
            h = 1e-6 * max(hp[k], 1e-3)
            e = np.zeros_like(hp)
            e[k] = h
            fd[k] = (m.neg_log_likelihood(hp + e) - m.neg_log_likelihood(hp - e)) / (2 * h)
        worst_nll = max(worst_nll, _rel(g, fd, 1.0))

        Q, _ = sample_values(space, SamplerConfig(n_points=10, seed=int(rng.integers(2 ** 31))))
        floats = [j for j, v in enumerate(space.variables) if isinstance(v, FloatVariable)]
        dim = int(rng.choice(floats))
        width = space.variables[dim].upper - space.variables[dim].lower
        h = 1e-5 * width
        inside = (Q[:, dim] - h > space.variables[dim].lower) & (Q[:, dim] + h < space.variables[dim].upper)
        Q = Q[inside]
        dm, dv = m.predict_derivatives(Q, dim)
        P, M = Q.copy(), Q.copy()
        P[:, dim] += h
        M[:, dim] -= h
        fm = (m.predict_values(P) - m.predict_values(M)) / (2 * h)
        fv = (m.predict_variances(P) - m.predict_variances(M)) / (2 * h)
        scale_m = np.std(m.y) / width
        scale_v = m.sigma2 * m.y_std ** 2 / width
        worst_der = max(worst_der, _rel(dm, fm, 1e-6 * scale_m), _rel(dv, fv, 1e-6 * scale_v))
    dt = time.time() - t0
    ok = worst_nll <= 1e-5 and worst_der <= 1e-4 and dt < 120
    gate(6, "gradient oracles", ok,
         f"50 instances, likelihood gradient rel err {worst_nll:.1e} (<= 1e-5), "
         f"mean/variance derivative rel err {worst_der:.1e} (<= 1e-4), {dt:.1f} s")


def test_07_branin_ego(gate):
    t0 = time.time()
    p = branin_problem()
    _, X0 = initial_design(p.space, 10, seed=42)
    config = EgoConfig(n_iter=20, criterion="EI", seed=42,
                       kriging=KrigingConfig(categorical_kernel="GOWER", n_starts=3))
    h = optimize(p, X0, config)
    dt = time.time() - t0
    gate(7, "mixed Branin EGO", -0.506 <= h.y_opt <= 1.494 and dt < 60,
         f"y_opt {h.y_opt:.5f} in [-0.506, 1.494] at x = {p.space.to_labels(h.x_opt)}, {dt:.1f} s")


@pytest.mark.slow
def test_08_toy_ego(gate):
    t0 = time.time()
    oracle = min(toy_level_minima())
    med = {}
    for cat in CAT:
        config = EgoConfig(kriging=KrigingConfig(categorical_kernel=cat, n_starts=2))
        hs = run_replications("toy", "ego", 20, 5, 55, seed=0, config=config)
        med[cat] = convergence_stats(hs, 55)[:, 1]
    dt = time.time() - t0
    gaps = {k: med[k][55] - oracle for k in ("EXP_HOMO_HSPHERE", "HOMO_HSPHERE")}
    ordinal = max(med["EXP_HOMO_HSPHERE"][20], med["HOMO_HSPHERE"][20]) <= \
        min(med["GOWER"][20], med["CONT_RELAX"][20])
    ok = all(g <= 0.1 for g in gaps.values()) and ordinal and dt < 900
    it20 = ", ".join(f"{k} {v[20]:.5f}" for k, v in med.items())
    gate(8, "toy EGO replication", ok,
         f"oracle {oracle:.5f}; final gap EHH {gaps['EXP_HOMO_HSPHERE']:.1e}, HH {gaps['HOMO_HSPHERE']:.1e} "
         f"(<= 0.1); iteration-20 medians {it20}; HH/EHH <= GD/CR {ordinal}; {dt:.0f} s (< 900 s)")


@pytest.mark.slow
def test_09_goldstein_ego(gate):
    t0 = time.time()
    final = {}
    for hier in HIER:
        config = EgoConfig(kriging=KrigingConfig(hierarchical_kernel=hier, n_starts=2))
        hs = run_replications("goldstein-hier", "ego", 20, 12, 55, seed=0, config=config)
        final[hier] = convergence_stats(hs, 55)[55, 1]
    hs = run_replications("goldstein-hier", "random", 20, 12, 55, seed=0)
    final["random"] = convergence_stats(hs, 55)[55, 1]
    dt = time.time() - t0
    ok = max(final["ALG_KERNEL"], final["ARC_KERNEL"]) <= final["IMP_KERNEL"] <= final["random"] and dt < 1800
    detail = ", ".join(f"{k} {v:.4f}" for k, v in final.items())
    gate(9, "Goldstein EGO ordering", ok, f"final medians {detail}; ALG, ARC <= IMP <= random; {dt:.0f} s (< 1800 s)")


def test_10_alg_vs_imp_rmse(gate):
    t0 = time.time()
    p = mlp_problem()
    rmse = {"ALG_KERNEL": [], "IMP_KERNEL": []}
    for seed in range(10):
        X, _ = sample_values(p.space, SamplerConfig(n_points=99, seed=seed), stratify_meta=0)
        V, _ = sample_values(p.space, SamplerConfig(n_points=3000, criterion="center", seed=1000 + seed))
        y, yv = p(X), p(V)
        for hier in rmse:
            m = train(p.space, KrigingConfig(categorical_kernel="HOMO_HSPHERE", hierarchical_kernel=hier,
                                             n_starts=2, seed=seed), X, y)
            rmse[hier].append(float(np.sqrt(np.mean((m.predict_values(V) - yv) ** 2))))
    med = {k: float(np.median(v)) for k, v in rmse.items()}
    dt = time.time() - t0
    gate(10, "ALG vs IMP validation RMSE", med["ALG_KERNEL"] <= med["IMP_KERNEL"],
         f"median over 10 seeds: ALG {med['ALG_KERNEL']:.4f}, IMP {med['IMP_KERNEL']:.4f}; {dt:.0f} s")


def test_11_training_time(gate):
    p = goldstein_problem()
    X, _ = sample_values(p.space, SamplerConfig(n_points=150, seed=11))
    y = p(X)
    t0 = time.time()
    m = train(p.space, KrigingConfig(), X, y)
    dt = time.time() - t0
    gate(11, "150-point Goldstein training time", dt < 60 and np.isfinite(m.nll),
         f"{dt:.1f} s (< 60 s) with {m.config.n_starts} starts, nll {m.nll:.3f}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
