import numpy as np
import pytest

from gridskills import build_env


@pytest.fixture(scope="session")
def rooms():
    return build_env("rooms")


@pytest.fixture(scope="session")
def empty():
    return build_env("empty")


@pytest.fixture(scope="session")
def umaze():
    return build_env("umaze")


def central_diff_grad(f, x, eps=1e-6):
    """Central finite differences of a scalar function of a flat array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy(); xp.flat[i] += eps
        xm = x.copy(); xm.flat[i] -= eps
        g.flat[i] = (f(xp) - f(xm)) / (2 * eps)
    return g


def assert_grad_close(analytic, numeric, rtol=1e-5):
    """Relative agreement on the gradient vector as a whole (scale-aware)."""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(numeric), 1e-8)
    err = np.linalg.norm(analytic - numeric) / scale
    assert err < rtol, f"gradient mismatch: relative error {err:.3e}"
