"""Ergodic matrix product states on a one-dimensional chain.

Site ``j`` carries ``d`` matrices ``A_j^i`` of size ``D x D``. The transfer map
``phi_j(M) = sum_i A_j^{i dagger} M A_j^i`` is completely positive with Kraus
operators ``A_j^{i dagger}``; it is generally not trace preserving.

Finite windows ``[lo, hi]`` come in two flavours:

* periodic: amplitudes ``tr[A_lo^{i_lo} ... A_hi^{i_hi}]``;
* open: amplitudes ``b_L^{i_lo dagger} A_{lo+1}^{i} ... A_{hi-1}^{i} b_R^{i_hi}``
  with boundary vectors ``b_L^i, b_R^i`` in ``C^D``.

Basis states of a window are ordered with the first site most significant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import index_rng
from .ergodic import GOLDEN_ALPHA, burn_in_steps, equilibrium_backward, equilibrium_forward
from .errors import CapExceededError, DegenerateImageError, DimensionError, ValidationError
from .qcore import CPMap, dagger

__all__ = [
    "LocalObservable",
    "MPSChain",
    "brute_force_expectation",
    "brute_force_state",
    "correlation_profile",
    "entanglement_spectrum",
    "entanglement_spectrum_finite",
    "entropy",
    "expectation_finite",
    "expectation_thermo",
    "lift_observable",
    "schmidt_oracle",
    "transfer_map",
    "two_point",
]

MAX_SUPPORT = 4
MAX_AMPLITUDES = 2**22
TENSOR_MODES = ("constant", "iid", "quasiperiodic")


@dataclass(frozen=True, eq=False)
class MPSChain:
    """Seeded sequence of MPS site tensors with boundary data.

    ``tensor_at(j)`` has shape ``(d, D, D)`` and depends only on the
    constructor arguments and ``j``. ``b_left``/``b_right`` have shape
    ``(d, D)``. The chain doubles as a channel process: ``channel_at(j)`` is
    the transfer map at ``j``.
    """

    d: int
    D: int
    mode: str
    seed: int = 0
    base: tuple = ()
    b_left: np.ndarray | None = None
    b_right: np.ndarray | None = None
    boundary: str = "open"
    alpha: float = GOLDEN_ALPHA
    theta0: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)
    _maps: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in TENSOR_MODES:
            raise ValidationError(f"unknown tensor mode {self.mode!r}")
        if self.d < 1 or self.D < 1:
            raise ValidationError("d and D must be positive")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError("boundary must be 'open' or 'periodic'")
        base = tuple(np.asarray(A, dtype=np.complex128) for A in self.base)
        for A in base:
            if A.shape != (self.d, self.D, self.D):
                raise DimensionError(f"site tensors must have shape {(self.d, self.D, self.D)}, got {A.shape}")
            A.setflags(write=False)
        object.__setattr__(self, "base", base)
        for name, tag in (("b_left", "b-left"), ("b_right", "b-right")):
            b = getattr(self, name)
            if b is None:
                r = index_rng(self.seed, 0, tag)
                b = r.standard_normal((self.d, self.D)) + 1j * r.standard_normal((self.d, self.D))
            b = np.asarray(b, dtype=np.complex128).reshape(self.d, self.D)
            if not np.any(np.abs(b) > 0):
                raise ValidationError("boundary vectors must not all vanish")
            b.setflags(write=False)
            object.__setattr__(self, name, b)

    @classmethod
    def constant(cls, A, b_left=None, b_right=None, boundary: str = "open", seed: int = 0) -> "MPSChain":
        A = np.asarray(A, dtype=np.complex128)
        return cls(A.shape[0], A.shape[1], "constant", seed, (A,), b_left, b_right, boundary)

    @classmethod
    def iid(cls, d: int, D: int, seed: int = 0, boundary: str = "open") -> "MPSChain":
        """iid complex Gaussian entries with variance ``1 / (d D)``."""
        return cls(d, D, "iid", seed, boundary=boundary)

    @classmethod
    def random_constant(cls, d: int, D: int, seed: int = 0, boundary: str = "open") -> "MPSChain":
        return cls.constant(_gaussian_tensor(d, D, index_rng(seed, 0, "const")), boundary=boundary, seed=seed)

    @classmethod
    def quasiperiodic(cls, d: int, D: int, seed: int = 0, alpha: float = GOLDEN_ALPHA,
                      boundary: str = "open") -> "MPSChain":
        """``A_j = cos(2 pi theta_j) A_a + sin(2 pi theta_j) A_b`` with ``theta_j = theta_0 + j alpha``."""
        A_a = _gaussian_tensor(d, D, index_rng(seed, 0, "qp-a"))
        A_b = _gaussian_tensor(d, D, index_rng(seed, 1, "qp-b"))
        theta0 = float(index_rng(seed, 0, "qp-theta").random())
        return cls(d, D, "quasiperiodic", seed, (A_a, A_b), boundary=boundary, alpha=alpha, theta0=theta0)

    @property
    def dim(self) -> int:
        return self.D

    def tensor_at(self, j: int) -> np.ndarray:
        j = int(j)
        A = self._cache.get(j)
        if A is None:
            if self.mode == "constant":
                A = self.base[0]
            elif self.mode == "iid":
                A = _gaussian_tensor(self.d, self.D, index_rng(self.seed, j, "mps"))
            else:
                t = 2 * math.pi * ((self.theta0 + j * self.alpha) % 1.0)
                A = math.cos(t) * self.base[0] + math.sin(t) * self.base[1]
            A.setflags(write=False)
            self._cache[j] = A
        return A

    def channel_at(self, j: int) -> CPMap:
        j = int(j)
        phi = self._maps.get(j)
        if phi is None:
            phi = CPMap(dagger(self.tensor_at(j)))
            self._maps[j] = phi
        return phi

    def with_boundary(self, boundary: str) -> "MPSChain":
        return MPSChain(self.d, self.D, self.mode, self.seed, self.base, self.b_left, self.b_right, boundary,
                        self.alpha, self.theta0)


def _gaussian_tensor(d: int, D: int, rng) -> np.ndarray:
    G = rng.standard_normal((d, D, D)) + 1j * rng.standard_normal((d, D, D))
    return G / math.sqrt(2 * d * D)


@dataclass(frozen=True)
class LocalObservable:
    """Operator ``matrix`` on sites ``start .. start + k - 1`` (``d^k x d^k``, Hermitian)."""

    start: int
    matrix: np.ndarray
    d: int = 2

    def __post_init__(self):
        O = np.asarray(self.matrix, dtype=np.complex128)
        if O.ndim != 2 or O.shape[0] != O.shape[1]:
            raise DimensionError("observable must be a square matrix")
        k = round(math.log(O.shape[0], self.d)) if O.shape[0] > 1 else 1
        if self.d**k != O.shape[0]:
            raise DimensionError(f"observable size {O.shape[0]} is not a power of d={self.d}")
        if k > MAX_SUPPORT:
            raise CapExceededError(f"support of {k} sites exceeds cap {MAX_SUPPORT}")
        if np.linalg.norm(O - O.conj().T) > 1e-12 * max(1.0, np.linalg.norm(O)):
            raise ValidationError("observable must be Hermitian")
        O.setflags(write=False)
        object.__setattr__(self, "matrix", O)
        object.__setattr__(self, "_k", k)

    @property
    def length(self) -> int:
        return self._k

    @property
    def end(self) -> int:
        return self.start + self._k - 1

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.matrix.shape[0])))

    def shifted(self, start: int) -> "LocalObservable":
        return LocalObservable(start, self.matrix, self.d)

    @classmethod
    def identity(cls, start: int, d: int = 2, length: int = 1) -> "LocalObservable":
        return cls(start, np.eye(d**length), d)


def transfer_map(chain: MPSChain, j: int) -> CPMap:
    """``phi_j(M) = sum_i A_j^{i dagger} M A_j^i``."""
    return chain.channel_at(j)


# ---------------------------------------------------------------------------
# Contractions with generic site operators X_j^i of shape (D_left, D_right)


def _transfer(X: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``sum_i X^{i dagger} E X^i`` over the trailing two axes of ``E``."""
    return np.einsum("iba,...bc,icd->...ad", X.conj(), E, X, optimize=True)


def _lift(Xs: list[np.ndarray], O: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``sum_{ij} O_ij X_k^{i_k dagger} ... X_1^{i_1 dagger} E X_1^{j_1} ... X_k^{j_k}``."""
    d = Xs[0].shape[0]
    F = E[..., None, None, :, :]  # (..., I, J, a, b)
    for X in Xs:
        F = np.einsum("...IJbc,iba,jcd->...IiJjad", F, X.conj(), X, optimize=True)
        s = F.shape
        F = F.reshape(s[:-6] + (s[-6] * d, s[-4] * d) + s[-2:])
    return np.einsum("IJ,...IJab->...ab", O, F)


def lift_observable(chain: MPSChain, O: LocalObservable):
    """``M -> O_hat(M)`` built from the bulk tensors on ``O``'s support."""
    if O.d != chain.d:
        raise DimensionError("observable and chain have different physical dimensions")
    Xs = [chain.tensor_at(j) for j in range(O.start, O.end + 1)]
    return lambda M: _lift(Xs, O.matrix, np.asarray(M, dtype=np.complex128))


def _apply_block(Xs, O: LocalObservable | None, E):
    if O is None or O.is_identity:
        for X in Xs:
            E = _transfer(X, E)
        return E
    return _lift(Xs, O.matrix, E)


def _site_ops(chain: MPSChain, lo: int, hi: int, boundary: str) -> dict:
    ops = {j: chain.tensor_at(j) for j in range(lo, hi + 1)}
    if boundary == "open":
        ops[lo] = chain.b_left.conj()[:, None, :]  # rows b^{i dagger}
        ops[hi] = chain.b_right[:, :, None]  # columns b^i
    return ops


def _contract(chain, blocks, lo, hi, boundary):
    """Numerator and denominator of a windowed expectation.

    ``blocks`` maps start sites to observables. Both branches share every
    plain transfer step and are rescaled by the same factor each step.
    """
    ops = _site_ops(chain, lo, hi, boundary)
    if boundary == "open":
        E = np.ones((1, 1), dtype=np.complex128)
    else:
        D = chain.D
        E = np.zeros((D * D, D, D), dtype=np.complex128)
        for p in range(D):
            for q in range(D):
                E[p * D + q, p, q] = 1.0
    num, den = E, E
    j = lo
    log_scale = 0.0
    while j <= hi:
        O = blocks.get(j)
        if O is not None:
            Xs = [ops[s] for s in range(j, O.end + 1)]
            num = _apply_block(Xs, O, num)
            den = _apply_block(Xs, None, den)
            j = O.end + 1
        else:
            num = _transfer(ops[j], num)
            den = _transfer(ops[j], den)
            j += 1
        s = float(np.abs(den).max())
        if not s > 0:
            raise DegenerateImageError("state has zero norm in this window", index=j - 1)
        num, den = num / s, den / s
        log_scale += math.log(s)

    def close(E):
        if boundary == "open":
            return complex(E[0, 0])
        D = chain.D
        return complex(sum(E[p * D + q, p, q] for p in range(D) for q in range(D)))

    return close(num), close(den)


def _check_window(chain, observables, window):
    lo, hi = (int(w) for w in window)
    if lo > hi:
        raise ValidationError("window needs lo <= hi")
    for O in observables:
        if O.d != chain.d:
            raise DimensionError("observable and chain have different physical dimensions")
        if O.start < lo or O.end > hi:
            raise ValidationError(f"observable support [{O.start}, {O.end}] is outside window [{lo}, {hi}]")
    starts = sorted((O.start, O.end) for O in observables)
    for (s0, e0), (s1, _) in zip(starts, starts[1:]):
        if s1 <= e0:
            raise ValidationError("observable supports overlap")
    return lo, hi


def expectation_finite(chain: MPSChain, O, window, boundary: str | None = None, return_imag: bool = False):
    """``<psi|O|psi> / <psi|psi>`` on a finite window by transfer-map contraction.

    ``O`` is a :class:`LocalObservable` or a sequence of them with disjoint
    supports (their product). The state itself is never formed.
    """
    boundary = boundary or chain.boundary
    obs = [O] if isinstance(O, LocalObservable) else list(O)
    lo, hi = _check_window(chain, obs, window)
    num, den = _contract(chain, {o.start: o for o in obs}, lo, hi, boundary)
    if not abs(den) > 0:
        raise DegenerateImageError("state has zero norm in this window")
    val = num / den
    return (val.real, val.imag) if return_imag else val.real


# ---------------------------------------------------------------------------
# Brute-force oracles


def brute_force_state(chain: MPSChain, window, boundary: str | None = None) -> np.ndarray:
    """Explicit amplitude vector of the window state (first site most significant)."""
    boundary = boundary or chain.boundary
    lo, hi = (int(w) for w in window)
    n = hi - lo + 1
    if n < (2 if boundary == "open" else 1):
        raise ValidationError("window too short for this boundary mode")
    if chain.d**n > MAX_AMPLITUDES:
        raise CapExceededError(f"{chain.d}^{n} amplitudes exceed cap {MAX_AMPLITUDES}")
    ops = _site_ops(chain, lo, hi, boundary)
    S = ops[lo]  # (d^k, Dl, Dr)
    for j in range(lo + 1, hi + 1):
        X = ops[j]
        S = np.einsum("kab,ibc->kiac", S, X).reshape(-1, S.shape[1], X.shape[2])
    if boundary == "open":
        psi = S[:, 0, 0]
    else:
        psi = np.trace(S, axis1=1, axis2=2)
    if not np.linalg.norm(psi) > 0:
        raise DegenerateImageError("window state has zero norm")
    return psi


def brute_force_expectation(psi: np.ndarray, O: LocalObservable, window, d: int = 2) -> float:
    lo, hi = window
    left = d ** (O.start - lo)
    right = d ** (hi - O.end)
    P = psi.reshape(left, -1, right)
    OP = np.einsum("ij,ajb->aib", O.matrix, P)
    return float((np.vdot(P, OP) / np.vdot(P, P)).real)


def schmidt_oracle(psi: np.ndarray, cut: int, d: int = 2) -> np.ndarray:
    """Squared Schmidt coefficients for the first ``cut`` sites vs the rest, descending, summing to 1."""
    psi = np.asarray(psi)
    n = round(math.log(psi.size, d))
    if d**n != psi.size or not 0 < cut < n:
        raise ValidationError("cut must split the window")
    s = np.linalg.svd(psi.reshape(d**cut, -1), compute_uv=False)
    p = s**2
    return p / p.sum()


# ---------------------------------------------------------------------------
# Thermodynamic limit


def _sqrtm_psd(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T


def _equilibria(chain, left: int, right: int, burn: int | None):
    """``Z_left`` and ``Z'_right``."""
    if burn is None:
        burn = max(burn_in_steps(chain, left), burn_in_steps(chain, right))
    return equilibrium_forward(chain, left, burn), equilibrium_backward(chain, right, burn), burn


def _thermo_ratio(chain, blocks: dict, lo: int, hi: int, Z, Zp):
    """``tr[Z' (block chain)(Z)] / tr[Z' Psi_{hi,lo}(Z)]``."""
    num, den = Z, Z
    j = lo
    while j <= hi:
        O = blocks.get(j)
        if O is not None:
            Xs = [chain.tensor_at(s) for s in range(j, O.end + 1)]
            num = _apply_block(Xs, O, num)
            den = _apply_block(Xs, None, den)
            j = O.end + 1
        else:
            X = chain.tensor_at(j)
            num, den = _transfer(X, num), _transfer(X, den)
            j += 1
    return np.trace(Zp @ num), np.trace(Zp @ den)


def expectation_thermo(chain: MPSChain, O: LocalObservable, burn: int | None = None) -> float:
    """Infinite-chain expectation ``tr[Z'_{n+1} O_hat(Z_{m-1})] / tr[Z'_{n+1} Psi_{n,m}(Z_{m-1})]``.

    ``[m, n]`` is the support of ``O``; ``Z`` and ``Z'`` are equilibrium
    states from forward and backward trajectories with burn-in.
    """
    if O.d != chain.d:
        raise DimensionError("observable and chain have different physical dimensions")
    Z, Zp, _ = _equilibria(chain, O.start - 1, O.end + 1, burn)
    num, den = _thermo_ratio(chain, {O.start: O}, O.start, O.end, Z, Zp)
    if not abs(den) > 0:
        raise DegenerateImageError("vanishing normalization in thermodynamic expectation")
    return float((num / den).real)


@dataclass(frozen=True)
class TwoPoint:
    joint: float
    product: float
    connected: float
    first: float
    second: float


def two_point(chain: MPSChain, O1: LocalObservable, O2: LocalObservable, x: int, ell: int,
              burn: int | None = None) -> TwoPoint:
    """Joint, product and connected parts of ``W(O1(x) O2(x + ell))``.

    All three terms are ratios over the same window ``[x, x + ell + |O2| - 1]``
    with the same equilibrium states, so burn-in errors largely cancel.
    """
    A = O1.shifted(x)
    B = O2.shifted(x + ell)
    if B.start <= A.end:
        raise ValidationError("supports must be disjoint: need ell >= support width of O1")
    lo, hi = A.start, B.end
    Z, Zp, _ = _equilibria(chain, lo - 1, hi + 1, burn)
    nj, den = _thermo_ratio(chain, {A.start: A, B.start: B}, lo, hi, Z, Zp)
    n1, _ = _thermo_ratio(chain, {A.start: A}, lo, hi, Z, Zp)
    n2, _ = _thermo_ratio(chain, {B.start: B}, lo, hi, Z, Zp)
    if not abs(den) > 0:
        raise DegenerateImageError("vanishing normalization in two-point function")
    joint = (nj / den).real
    w1, w2 = (n1 / den).real, (n2 / den).real
    return TwoPoint(float(joint), float(w1 * w2), float(joint - w1 * w2), float(w1), float(w2))


def _spectrum(Z: np.ndarray, Zp: np.ndarray) -> np.ndarray:
    S = _sqrtm_psd(Zp)
    Q = S @ Z @ S
    w = np.clip(np.linalg.eigvalsh(0.5 * (Q + Q.conj().T)), 0, None)[::-1]
    tot = w.sum()
    if not tot > 0:
        raise DegenerateImageError("entanglement spectrum has zero weight")
    return w / tot


def entanglement_spectrum(chain: MPSChain, j: int, burn: int | None = None) -> np.ndarray:
    """Spectrum of ``sqrt(Z'_{j+1}) Z_j sqrt(Z'_{j+1})`` normalized, descending (bond ``j ~ j+1``)."""
    Z, Zp, _ = _equilibria(chain, j, j + 1, burn)
    return _spectrum(Z, Zp)


def entanglement_spectrum_finite(chain: MPSChain, window, j: int) -> np.ndarray:
    """Exact spectrum across bond ``j ~ j+1`` of the open-boundary window state.

    Uses the boundary-seeded Gram matrices ``Q = phi_j ... phi_{lo+1}(B_lo)`` and
    ``Q' = phi*_{j+1} ... phi*_{hi-1}(B_hi)``.
    """
    lo, hi = window
    if not lo <= j < hi:
        raise ValidationError("bond must lie inside the window")
    Q = np.einsum("ia,ib->ab", chain.b_left, chain.b_left.conj())  # sum b b^dagger
    for s in range(lo + 1, j + 1):
        Q = _transfer(chain.tensor_at(s), Q)
        Q /= np.trace(Q).real
    Qp = np.einsum("ia,ib->ab", chain.b_right, chain.b_right.conj())
    for s in range(hi - 1, j, -1):
        A = chain.tensor_at(s)
        Qp = np.einsum("iab,bc,idc->ad", A, Qp, A.conj())
        Qp /= np.trace(Qp).real
    return _spectrum(Q, Qp)


def entropy(spectrum, alpha: float = 1.0) -> float:
    """Von Neumann (``alpha = 1``) or Renyi entropy in nats."""
    p = np.asarray(spectrum, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-10:
        raise ValidationError("spectrum must be a non-negative vector summing to 1")
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    p = np.clip(p, 0, None)
    if alpha == 1:
        nz = p[p > 0]
        return float(-(nz * np.log(nz)).sum())
    return float(math.log((p[p > 0] ** alpha).sum()) / (1 - alpha))


def correlation_profile(chain: MPSChain, O1: LocalObservable, O2: LocalObservable, x: int, ells,
                        burn: int | None = None) -> np.ndarray:
    """Connected correlators ``W(O1(x) O2(x+l)) - W(O1(x)) W(O2(x+l))`` for each ``l`` in ``ells``.

    Equivalent to calling :func:`two_point` per ``l`` but reuses one forward
    and one backward trajectory.
    """
    from .ergodic import z_backward

    ells = [int(l) for l in ells]
    if min(ells) < O1.length:
        raise ValidationError("supports must be disjoint: need ell >= support width of O1")
    A = O1.shifted(x)
    far = x + max(ells) + O2.length  # one past the furthest support end
    if burn is None:
        burn = max(burn_in_steps(chain, x - 1), burn_in_steps(chain, far))
    Z = equilibrium_forward(chain, x - 1, burn)
    back = z_backward(chain, A.end + 1, far + burn, companion=False)
    out = np.empty(len(ells))
    for k, ell in enumerate(ells):
        B = O2.shifted(x + ell)
        Zp = back.at(B.end + 1)
        nj, den = _thermo_ratio(chain, {A.start: A, B.start: B}, A.start, B.end, Z, Zp)
        n1, _ = _thermo_ratio(chain, {A.start: A}, A.start, B.end, Z, Zp)
        n2, _ = _thermo_ratio(chain, {B.start: B}, A.start, B.end, Z, Zp)
        out[k] = ((nj / den) - (n1 / den) * (n2 / den)).real
    return out
