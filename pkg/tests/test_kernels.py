import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ergoq import _kernels
from ergoq.haar import sample_haar_isometry


def kraus_stack(T, r, D, seed):
    return sample_haar_isometry(r * D, D, np.random.default_rng(seed), size=T).reshape(T, r, D, D)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba unavailable")
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 3), st.integers(1, 4),
       st.integers(-5, 10), st.integers(1, 4))
def test_backends_agree(seed, T, r, D, burn, stride):
    K = kraus_stack(T, r, D, seed)
    Z0 = np.eye(D, dtype=complex) / D
    nout = max(0, (T - burn) // stride)
    a = _kernels.kraus_chain_numpy(K, Z0, burn, stride, nout, True, 1e-300)
    b = _kernels.kraus_chain_numba(K, Z0, burn, stride, nout, True, 1e-300)
    assert a[2] == b[2] == -1
    assert np.allclose(a[0], b[0], atol=1e-13) and np.allclose(a[1], b[1], atol=1e-13)


def test_records_match_explicit_loop():
    K = kraus_stack(20, 2, 3, 0)
    Z = np.eye(3, dtype=complex) / 3
    states = []
    for t in range(20):
        Z = sum(B @ Z @ B.conj().T for B in K[t])
        Z = Z / np.trace(Z).real
        states.append(Z)
    out, last, fail = _kernels.kraus_chain(K, np.eye(3) / 3, burn=4, stride=3)
    assert fail == -1
    assert np.allclose(out, np.array(states)[4 + 2::3], atol=1e-14)
    assert np.allclose(last, states[-1], atol=1e-14)


def test_degenerate_step_reported():
    K = kraus_stack(5, 1, 2, 1)
    K[3] = 0
    _, _, fail = _kernels.kraus_chain(K, np.eye(2) / 2)
    assert fail == 3


def test_env_switch_selects_numpy():
    env = dict(os.environ, ERGOQ_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from ergoq import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
