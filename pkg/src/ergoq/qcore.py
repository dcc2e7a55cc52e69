"""Complex-matrix quantum primitives: density matrices and completely positive maps.

States are plain ``numpy`` arrays of shape ``(D, D)``; most functions also
accept a stack ``(..., D, D)``. Completely positive maps are stored in Kraus
form as a :class:`CPMap` with ``kraus`` of shape ``(d, D_out, D_in)`` acting as
``M -> sum_i B_i M B_i^dagger``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from ._config import DEFAULT_TOL, MAX_COMPOSED_KRAUS, ToleranceConfig
from ._rng import as_rng
from .errors import CapExceededError, DegenerateImageError, DimensionError, ValidationError

__all__ = [
    "CPMap",
    "Positivity",
    "StrictPositivity",
    "adjoint",
    "apply",
    "check_density_matrix",
    "choi",
    "compose",
    "dagger",
    "haar_unit_vectors",
    "is_strictly_positive",
    "maximally_mixed",
    "one_norm_lower",
    "projective_action",
    "random_density_matrix",
    "trace_norm",
]


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def maximally_mixed(D: int) -> np.ndarray:
    return np.eye(D, dtype=np.complex128) / D


def trace_norm(M: np.ndarray) -> np.ndarray | float:
    """Sum of singular values, over the last two axes."""
    return np.linalg.svd(M, compute_uv=False).sum(axis=-1)


def check_density_matrix(M, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Return ``M`` as a complex array after checking the density-matrix invariants."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {M.shape}")
    if np.linalg.norm(M - M.conj().T) > tol.tol_herm:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(M) - 1) > tol.tol_trace:
        raise ValidationError(f"density matrix has trace {np.trace(M).real:.3g}, expected 1")
    if np.linalg.eigvalsh(M)[0] < -tol.tol_psd:
        raise ValidationError("density matrix has a negative eigenvalue")
    return M


@dataclass(frozen=True, eq=False)
class CPMap:
    """Completely positive map ``M -> sum_i B_i M B_i^dagger``.

    ``trace_preserving`` may be declared; a declared ``True`` is verified
    against ``sum_i B_i^dagger B_i = I`` and rejected if it fails. Left as
    ``None`` it is detected.
    """

    kraus: np.ndarray
    trace_preserving: bool | None = None
    tol: ToleranceConfig = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        K = np.asarray(self.kraus, dtype=np.complex128)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] < 1:
            raise DimensionError("kraus must be a non-empty stack of equally sized matrices")
        K = np.ascontiguousarray(K)
        K.setflags(write=False)
        object.__setattr__(self, "kraus", K)
        tp = self._is_tp()
        if self.trace_preserving is None:
            object.__setattr__(self, "trace_preserving", tp)
        elif self.trace_preserving and not tp:
            raise ValidationError("declared trace preserving but sum B^dagger B != I")
        elif not self.trace_preserving and tp:
            object.__setattr__(self, "trace_preserving", True)

    def _is_tp(self) -> bool:
        K = self.kraus
        if K.shape[1] != K.shape[2]:
            return False
        S = np.einsum("iba,ibc->ac", K.conj(), K)
        return bool(np.linalg.norm(S - np.eye(K.shape[2])) <= self.tol.tol_tp)

    @property
    def dim(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, M):
        return apply(self, M)

    def adjoint(self) -> "CPMap":
        return adjoint(self)

    def scaled(self, c: float) -> "CPMap":
        """The map ``c * phi`` for ``c > 0``."""
        if not c > 0:
            raise ValidationError("scale must be positive")
        return CPMap(np.sqrt(c) * self.kraus, tol=self.tol)

    @classmethod
    def identity(cls, D: int) -> "CPMap":
        return cls(np.eye(D, dtype=np.complex128)[None], trace_preserving=True)

    @classmethod
    def unitary(cls, U) -> "CPMap":
        return cls(np.asarray(U)[None], trace_preserving=True)

    @classmethod
    def depolarizing(cls, D: int, p: float = 1.0) -> "CPMap":
        """``rho -> (1-p) rho + p tr[rho] I/D``; ``p = 1`` is fully depolarizing."""
        if not 0 <= p <= 1:
            raise ValidationError("depolarizing parameter must lie in [0, 1]")
        units = np.zeros((D * D, D, D), dtype=np.complex128)
        for i in range(D):
            for j in range(D):
                units[i * D + j, i, j] = 1.0
        ops = [np.sqrt(p / D) * units]
        if p < 1:
            ops.insert(0, np.sqrt(1 - p) * np.eye(D, dtype=np.complex128)[None])
        return cls(np.concatenate(ops), trace_preserving=True)

    @classmethod
    def replacement(cls, Z) -> "CPMap":
        """Rank-one channel ``rho -> tr[rho] Z``."""
        Z = np.asarray(Z, dtype=np.complex128)
        w, V = np.linalg.eigh(Z)
        w = np.clip(w, 0, None)
        D = Z.shape[0]
        ops = []
        for a in range(D):
            for b in range(D):
                if w[a] > 0:
                    B = np.zeros((D, D), dtype=np.complex128)
                    B[:, b] = np.sqrt(w[a]) * V[:, a]
                    ops.append(B)
        return cls(np.array(ops))


def _check_input(map: CPMap, M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.complex128)
    if M.shape[-2:] != (map.dim, map.dim):
        raise DimensionError(f"map acts on {map.dim}x{map.dim} matrices, got {M.shape[-2:]}")
    return M


def apply(map: CPMap, M) -> np.ndarray:
    """``sum_i B_i M B_i^dagger``; ``M`` may carry leading batch axes."""
    M = _check_input(map, M)
    K = map.kraus
    return np.einsum("iab,...bc,idc->...ad", K, M, K.conj(), optimize=True)


def compose(maps: Sequence[CPMap], cap: int = MAX_COMPOSED_KRAUS) -> CPMap:
    """Composition ``maps[0] o maps[1] o ... o maps[-1]`` (the last acts first).

    The Kraus family is every product ``B_0^{i_0} ... B_k^{i_k}``; products of
    more than ``cap`` operators are refused, apply the maps in sequence instead.
    """
    maps = list(maps)
    if not maps:
        raise ValidationError("compose needs at least one map")
    count = int(np.prod([m.n_kraus for m in maps], dtype=object))
    if count > cap:
        raise CapExceededError(
            f"composed Kraus count {count} exceeds cap {cap}; chain apply() calls instead"
        )
    K = maps[-1].kraus
    for m in reversed(maps[:-1]):
        if m.dim != K.shape[1]:
            raise DimensionError("maps in a composition must have matching dimensions")
        K = np.einsum("iab,jbc->ijac", m.kraus, K).reshape(-1, m.dim_out, K.shape[2])
    tp = all(m.trace_preserving for m in maps) or None
    return CPMap(K, trace_preserving=tp, tol=maps[0].tol)


def adjoint(map: CPMap) -> CPMap:
    """Hilbert-Schmidt adjoint, Kraus family ``{B_i^dagger}``."""
    return CPMap(dagger(map.kraus), tol=map.tol)


def choi(map: CPMap) -> np.ndarray:
    """Choi matrix ``sum_ij phi(E_ij) (x) E_ij``."""
    D = map.dim
    units = np.zeros((D, D, D, D), dtype=np.complex128)
    idx = np.arange(D)
    units[idx[:, None], idx[None, :], idx[:, None], idx[None, :]] = 1.0
    images = apply(map, units)  # (i, j, a, b)
    Do = map.dim_out
    return images.transpose(2, 0, 3, 1).reshape(Do * D, Do * D)


class Positivity(str, Enum):
    CERTIFIED = "certified_yes"
    PROBABLE = "probable_yes"
    COUNTEREXAMPLE = "counterexample"


@dataclass(frozen=True)
class StrictPositivity:
    status: Positivity
    witness: np.ndarray | None = None
    min_eigenvalue: float = float("nan")

    def __bool__(self) -> bool:
        return self.status is not Positivity.COUNTEREXAMPLE


def haar_unit_vectors(D: int, n: int, rng) -> np.ndarray:
    """``n`` uniformly distributed unit vectors in ``C^D``, shape ``(n, D)``."""
    rng = as_rng(rng)
    v = rng.standard_normal((n, D)) + 1j * rng.standard_normal((n, D))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def is_strictly_positive(map: CPMap, samples: int, rng=None) -> StrictPositivity:
    """Test whether ``map`` sends every nonzero PSD matrix to a PD one.

    A positive definite Choi matrix certifies this. Otherwise ``samples``
    random pure inputs are tried and the first whose image has smallest
    eigenvalue ``<= tol_psd`` is returned as a counterexample.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    tol = map.tol.tol_psd
    lam = np.linalg.eigvalsh(choi(map))[0]
    if lam > tol:
        return StrictPositivity(Positivity.CERTIFIED, min_eigenvalue=float(lam))
    v = haar_unit_vectors(map.dim, samples, rng)
    imgs = apply(map, np.einsum("na,nb->nab", v, v.conj()))
    mins = np.linalg.eigvalsh(imgs)[:, 0]
    bad = np.flatnonzero(mins <= tol)
    if bad.size:
        k = bad[0]
        return StrictPositivity(Positivity.COUNTEREXAMPLE, witness=v[k], min_eigenvalue=float(mins[k]))
    return StrictPositivity(Positivity.PROBABLE, min_eigenvalue=float(mins.min()))


def projective_action(map: CPMap, M, tol: ToleranceConfig | None = None) -> np.ndarray:
    """``phi(M) / tr[phi(M)]``."""
    tol = tol or map.tol
    out = apply(map, M)
    tr = np.trace(out, axis1=-2, axis2=-1).real
    if np.any(~(tr > tol.tol_trace)):
        raise DegenerateImageError(f"image trace {np.min(tr):.3g} is not positive")
    return out / np.asarray(tr)[..., None, None]


def one_norm_lower(map: CPMap | Callable, samples: int, rng=None, dim: int | None = None) -> float:
    """Sampled lower bound on ``max{ ||Phi(M)||_1 : ||M||_1 = 1 }``.

    Inputs are rank-one ``u v^dagger`` with Haar-random unit ``u, v``. ``map``
    is a :class:`CPMap` or any linear callable on ``(..., D, D)`` stacks (then
    ``dim`` is required). The draws for ``samples=n`` are a prefix of those for
    ``samples=n+1`` under the same seed, so the bound is monotone in ``samples``.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    D = dim if dim is not None else map.dim
    rng = as_rng(rng)
    best = 0.0
    for _ in range(samples):
        u, v = haar_unit_vectors(D, 2, rng)
        best = max(best, float(trace_norm(map(np.outer(u, v.conj())))))
    return best


def random_density_matrix(D: int, rng=None, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G^dagger / tr`` with ``G`` complex Ginibre ``D x rank``."""
    rng = as_rng(rng)
    k = D if rank is None else rank
    G = rng.standard_normal((D, k)) + 1j * rng.standard_normal((D, k))
    M = G @ G.conj().T
    return M / np.trace(M).real
