import subprocess
import sys

import numpy as np
import pytest

from fiberalign import _joinkern_py, kernels

try:
    from fiberalign import _joinkern_c
except ImportError:
    _joinkern_c = None


def test_active_backend_reported():
    assert kernels.backend() in ("cython", "python")
    assert kernels.backend() == kernels.BACKEND


def test_env_var_forces_pure_backend():
    out = subprocess.run(
        [sys.executable, "-c", "from fiberalign import kernels; print(kernels.backend())"],
        env={"PATH": "/usr/bin:/bin", "FIBERALIGN_PURE": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"


@pytest.mark.skipif(_joinkern_c is None, reason="compiled kernels not built")
def test_compiled_backend_preferred_when_available():
    out = subprocess.run(
        [sys.executable, "-c", "from fiberalign import kernels; print(kernels.backend())"],
        env={"PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "cython"


@pytest.mark.skipif(_joinkern_c is None, reason="compiled kernels not built")
def test_backends_share_key_constants():
    assert _joinkern_c.KEY_MULT == _joinkern_py.KEY_MULT


@pytest.mark.skipif(_joinkern_c is None, reason="compiled kernels not built")
@pytest.mark.parametrize("dim", [1, 2, 4, 7])
def test_grid_candidate_counts_identical_across_backends(dim):
    rng = np.random.default_rng(dim)
    X = rng.standard_normal((200, dim))
    Y = rng.standard_normal((180, dim))
    eps = 0.4 * np.sqrt(dim)
    py = _joinkern_py.grid_pairs(X, Y, eps)
    cy = _joinkern_c.grid_pairs(X, Y, eps)
    assert py[3] == cy[3]
    assert len(py[0]) == len(cy[0])


def test_empty_inputs():
    X = np.zeros((0, 3))
    Y = np.ones((4, 3))
    for fn in (kernels.brute_pairs, kernels.grid_pairs):
        xi, yi, dist, evals = fn(X, Y, 0.5)
        assert len(xi) == len(yi) == len(dist) == 0
        assert evals == 0
