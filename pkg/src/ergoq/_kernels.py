"""Hot inner loops: sequential application of Kraus families.

Each kernel has a numba ``@njit`` version and a pure-numpy version with the
same signature. The numba path is used unless ``ERGOQ_DISABLE_NUMBA=1`` is set
or numba cannot be imported. ``BACKEND`` names the active choice.
"""

from __future__ import annotations

import numpy as np

from ._config import numba_enabled

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False


def kraus_chain_numpy(K, Z0, burn, stride, nout, normalize, tol):
    """Iterate ``Z <- sum_i K[t,i] Z K[t,i]^dagger`` over ``t = 0..T-1``.

    Records ``Z`` after step ``t`` whenever ``s = t + 1 - burn`` is positive
    and divisible by ``stride``, up to ``nout`` records (``burn`` may be
    negative when a long chain is processed in chunks). Returns the records,
    the final iterate and ``fail``. With ``normalize`` the iterate is divided
    by its trace each step; a trace ``<= tol`` stops the loop and its step
    index is returned as ``fail`` (``-1`` if none).
    """
    T = K.shape[0]
    D = Z0.shape[0]
    out = np.zeros((nout, D, D), dtype=np.complex128)
    Z = np.array(Z0, dtype=np.complex128)
    k = 0
    for t in range(T):
        Kt = K[t]
        Z = (Kt @ Z @ Kt.conj().transpose(0, 2, 1)).sum(axis=0)
        if normalize:
            tr = Z.trace().real
            if not tr > tol:
                return out, Z, t
            Z = Z / tr
        Z = 0.5 * (Z + Z.conj().T)
        s = t + 1 - burn
        if k < nout and s > 0 and s % stride == 0:
            out[k] = Z
            k += 1
    return out, Z, -1


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def kraus_chain_numba(K, Z0, burn, stride, nout, normalize, tol):
        T = K.shape[0]
        d = K.shape[1]
        D = Z0.shape[0]
        out = np.zeros((nout, D, D), dtype=np.complex128)
        Z = Z0.astype(np.complex128).copy()
        k = 0
        for t in range(T):
            acc = np.zeros((D, D), dtype=np.complex128)
            for i in range(d):
                Ki = np.ascontiguousarray(K[t, i])
                acc += Ki @ Z @ np.ascontiguousarray(Ki.conj().T)
            if normalize:
                tr = 0.0
                for a in range(D):
                    tr += acc[a, a].real
                if not tr > tol:
                    return out, Z, t
                acc /= tr
            Z = 0.5 * (acc + acc.conj().T)
            s = t + 1 - burn
            if k < nout and s > 0 and s % stride == 0:
                out[k] = Z
                k += 1
        return out, Z, -1

else:  # pragma: no cover
    kraus_chain_numba = kraus_chain_numpy


BACKEND = "numba" if (HAVE_NUMBA and numba_enabled()) else "numpy"


def kraus_chain(K, Z0, burn=0, stride=1, nout=None, normalize=True, tol=1e-300):
    """Dispatch to the active backend; see :func:`kraus_chain_numpy`."""
    K = np.ascontiguousarray(K, dtype=np.complex128)
    Z0 = np.ascontiguousarray(Z0, dtype=np.complex128)
    if nout is None:
        nout = max(0, (K.shape[0] - burn) // stride)
    fn = kraus_chain_numba if BACKEND == "numba" else kraus_chain_numpy
    out, Z, fail = fn(K, Z0, int(burn), int(stride), int(nout), bool(normalize), float(tol))
    return out, Z, int(fail)
