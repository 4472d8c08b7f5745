import os
import subprocess
import sys

import numpy as np
import pytest

import hierkrig
from hierkrig import _backend, _core_py

try:
    from hierkrig import _core
except ImportError:  # pragma: no cover - extension not built
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled core not built")


@needs_core
@pytest.mark.parametrize("profile", [_core_py.EXP, _core_py.MATERN32, _core_py.MATERN52])
def test_compiled_matches_numpy(profile):
    rng = np.random.default_rng(profile)
    B = rng.uniform(0, 2, (500, 6))
    B[::7, 2] = 0.0
    theta = 10 ** rng.uniform(-3, 1.3, 6)
    assert np.allclose(_core.corr_product(B, theta, profile), _core_py.corr_product(B, theta, profile),
                       rtol=1e-13, atol=0)
    r1, g1 = _core.corr_product_grad(B, theta, profile)
    r2, g2 = _core_py.corr_product_grad(B, theta, profile)
    assert np.allclose(r1, r2, rtol=1e-13, atol=0)
    assert np.allclose(g1, g2, rtol=1e-12, atol=1e-300)


@needs_core
def test_compiled_empty_columns():
    B = np.empty((4, 0))
    assert np.array_equal(_core.corr_product(B, np.empty(0), 0), np.ones(4))
    r, g = _core.corr_product_grad(B, np.empty(0), 0)
    assert np.array_equal(r, np.ones(4)) and g.shape == (4, 0)


def test_numpy_grad_fd():
    rng = np.random.default_rng(0)
    B = rng.uniform(0, 1, (20, 3))
    theta = np.array([0.5, 2.0, 7.0])
    for profile in (0, 1, 2):
        _, g = _core_py.corr_product_grad(B, theta, profile)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            fd = (_core_py.corr_product(B, theta + e, profile) - _core_py.corr_product(B, theta - e, profile)) / 2e-6
            assert np.allclose(g[:, j], fd, rtol=1e-6, atol=1e-10)


def test_backend_exported():
    assert hierkrig.BACKEND == _backend.BACKEND
    assert hierkrig.BACKEND in ("cython", "python")


def test_forced_fallback_gives_same_model():
    # fixed hyperparameters: likelihood, its gradient and predictions must agree
    # to rounding; trained optima are not compared because the optimizer path
    # on a flat likelihood is sensitive to last-digit differences
    code = (
        "import numpy as np, hierkrig\n"
        "from hierkrig.problems import goldstein_problem\n"
        "from hierkrig.kriging import KrigingConfig, KrigingModel\n"
        "from hierkrig.sampling import SamplerConfig, sample_values\n"
        "p = goldstein_problem()\n"
        "X, _ = sample_values(p.space, SamplerConfig(n_points=20, seed=1))\n"
        "vals = []\n"
        "for corr in ('abs_exp', 'squar_exp', 'matern32', 'matern52'):\n"
        "    m = KrigingModel(p.space, KrigingConfig(corr=corr, categorical_kernel='HOMO_HSPHERE'))\n"
        "    m.set_hyperparameters(X, p(X), np.full(m.plan.layout.n, 0.3))\n"
        "    nll, g = m.neg_log_likelihood(m.hp, gradient=True)\n"
        "    vals += [nll, *g, *m.predict(X[:3] + 0.5)[0], *m.predict(X[:3] + 0.5)[1]]\n"
        "print(hierkrig.BACKEND, *[repr(float(v)) for v in vals])\n"
    )
    out = {}
    for flag in ("python", ""):
        env = dict(os.environ, HIERKRIG_BACKEND=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[flag] = res.stdout.split()
    assert out["python"][0] == "python"
    assert out[""][0] == _backend.BACKEND
    a = np.array(out["python"][1:], dtype=float)
    b = np.array(out[""][1:], dtype=float)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)
