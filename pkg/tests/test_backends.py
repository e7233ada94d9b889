import os
import subprocess
import sys

import numpy as np
import pytest

import cpccd
from cpccd import _kernels
from cpccd.metrics import evaluate


def test_active_backend_reported():
    assert cpccd.BACKEND in _kernels.BACKENDS
    assert _kernels.get() is _kernels.BACKENDS[cpccd.BACKEND]


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get("fortran")


def test_env_forces_fallback():
    env = dict(os.environ, CPCCD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import cpccd; print(cpccd.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif("cython" not in _kernels.BACKENDS, reason="extension not built")
def test_metrics_identical_across_backends():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = np.round(rng.normal(size=(int(rng.integers(1, 400)), 3)), 3)
        b = np.round(rng.normal(size=(int(rng.integers(1, 400)), 3)), 3)
        assert evaluate(a, b, 0.1, inp=b, backend="cython") == \
            evaluate(a, b, 0.1, inp=b, backend="python")


def test_compiled_extension_is_default_when_built():
    if "cython" in _kernels.BACKENDS and not os.environ.get("CPCCD_PURE_PYTHON"):
        assert cpccd.BACKEND == "cython"
