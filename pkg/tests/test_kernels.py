import os
import subprocess
import sys

import numpy as np
import pytest

from multihardy import _kernels_py, kernels

try:
    from multihardy import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    return rng.standard_normal((500, 3)), rng.standard_normal((4, 3))


@needs_ext
@pytest.mark.parametrize("delta", [0.0, 0.1])
def test_potential_backends_agree(data, delta):
    x, a = data
    assert np.allclose(_kernels.pairwise_potential(x, a, delta), _kernels_py.pairwise_potential(x, a, delta),
                       rtol=1e-13)
    assert np.allclose(_kernels.sum_inverse_square(x, a, delta), _kernels_py.sum_inverse_square(x, a, delta),
                       rtol=1e-13)


@needs_ext
def test_power_product_backends_agree(data):
    x, a = data
    e = np.array([-1.0, 0.5, -2 / 3, 2.0])
    v1, g1 = _kernels.power_product(x, a, e)
    v2, g2 = _kernels_py.power_product(x, a, e)
    assert np.allclose(v1, v2, rtol=1e-12)
    assert np.allclose(g1, g2, rtol=1e-11)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    env = dict(os.environ, MULTIHARDY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from multihardy import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
