"""Ergodic sequences of positive maps and their equilibrium dynamics.

A :class:`ChannelProcess` is an indexable, seeded two-sided sequence of maps
``phi_j`` (``j`` any integer). From it we build window compositions
``Psi_{n,m} = phi_n o ... o phi_m``, forward equilibrium trajectories
``Z_j = phi_j(Z_{j-1}) / tr[...]``, backward trajectories of the adjoints, the
contraction rate ``mu`` of the projective action in the Hennion metric, and
the distance of a long window from its rank-one limit
``M -> tr[Z'_m M] Z_n``.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._config import DEFAULT_TOL, ToleranceConfig
from ._kernels import kraus_chain
from ._rng import as_rng, index_rng
from .errors import ConvergenceError, DegenerateImageError, ValidationError
from .metric import metric_report, random_pd_pair
from .qcore import (
    CPMap,
    Positivity,
    apply,
    compose,
    dagger,
    is_strictly_positive,
    maximally_mixed,
    one_norm_lower,
    trace_norm,
)

__all__ = [
    "ChannelProcess",
    "MuEstimate",
    "PerronPair",
    "Trajectory",
    "burn_in_steps",
    "channel_at",
    "compose_window",
    "equilibrium_backward",
    "equilibrium_forward",
    "estimate_mu",
    "perron_pair",
    "rank_one_residual",
    "strict_positivity_window",
    "subdominant_modulus",
    "superoperator",
    "z_backward",
    "z_forward",
]

GOLDEN_ALPHA = math.sqrt(2.0) - 1.0
MODES = ("constant", "iid_haar", "iid", "markov", "quasiperiodic")


@dataclass(frozen=True, eq=False)
class ChannelProcess:
    """Seeded two-sided sequence of CP maps on ``D x D`` matrices.

    Use the constructors :meth:`constant`, :meth:`iid_haar`, :meth:`iid`,
    :meth:`markov` and :meth:`quasiperiodic`. ``channel_at(j)`` depends only on
    the constructor arguments and ``j``.
    """

    dim: int
    mode: str
    seed: int = 0
    base: tuple = ()
    env_dim: int | None = None
    generator: Callable | None = None
    transition: np.ndarray | None = None
    alpha: float = GOLDEN_ALPHA
    theta0: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)
    _states: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown process mode {self.mode!r}; choose from {MODES}")
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        for phi in self.base:
            if phi.dim != self.dim or phi.dim_out != self.dim:
                raise ValidationError("all base channels must act on the process dimension")
        if self.mode == "markov":
            P = np.asarray(self.transition, dtype=float)
            k = len(self.base)
            if P.shape != (k, k) or np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
                raise ValidationError("transition must be a k x k row-stochastic matrix")
            object.__setattr__(self, "transition", P)
            object.__setattr__(self, "_reverse", _time_reversal(P))
        if self.mode == "quasiperiodic" and len(self.base) < 2:
            raise ValidationError("quasiperiodic mode needs at least two base channels")

    @classmethod
    def constant(cls, phi: CPMap) -> "ChannelProcess":
        return cls(phi.dim, "constant", base=(phi,))

    @classmethod
    def iid_haar(cls, D: int, r: int, seed: int = 0) -> "ChannelProcess":
        if D < 2 or r < 2:
            raise ValidationError("iid Haar processes need D >= 2 and r >= 2")
        return cls(D, "iid_haar", seed=seed, env_dim=r)

    @classmethod
    def iid(cls, generator: Callable[[np.random.Generator], CPMap], dim: int, seed: int = 0) -> "ChannelProcess":
        """``phi_j = generator(rng_j)`` with an independent stream per index."""
        return cls(dim, "iid", seed=seed, generator=generator)

    @classmethod
    def markov(cls, channels: Sequence[CPMap], transition, seed: int = 0) -> "ChannelProcess":
        """Stationary Markov chain over ``channels`` with row-stochastic ``transition``."""
        return cls(channels[0].dim, "markov", seed=seed, base=tuple(channels), transition=np.asarray(transition))

    @classmethod
    def quasiperiodic(
        cls, channels: Sequence[CPMap], seed: int = 0, alpha: float = GOLDEN_ALPHA
    ) -> "ChannelProcess":
        """Convex mixtures of ``channels`` driven by the rotation ``theta_j = theta_0 + j alpha mod 1``.

        ``theta_0`` is drawn from the seed; the weight of channel ``k`` out of
        ``K`` is ``(1 + cos 2 pi (theta - k/K)) / K``.
        """
        theta0 = float(index_rng(seed, 0, "theta0").random())
        return cls(channels[0].dim, "quasiperiodic", seed=seed, base=tuple(channels), alpha=alpha, theta0=theta0)

    @property
    def trace_preserving(self) -> bool | None:
        if self.mode == "iid_haar":
            return True
        if self.base:
            return all(phi.trace_preserving for phi in self.base)
        return None

    def channel_at(self, j: int) -> CPMap:
        j = int(j)
        phi = self._cache.get(j)
        if phi is None:
            phi = self._make(j)
            self._cache[j] = phi
        return phi

    def maps(self, m: int, n: int) -> list[CPMap]:
        """``[phi_m, ..., phi_n]``."""
        return [self.channel_at(j) for j in range(m, n + 1)]

    def _make(self, j: int) -> CPMap:
        if self.mode == "constant":
            return self.base[0]
        if self.mode == "iid_haar":
            from .haar import sample_haar_isometry

            D, r = self.dim, self.env_dim
            V = sample_haar_isometry(r * D, D, index_rng(self.seed, j, "haar"))
            return CPMap(V.reshape(r, D, D), trace_preserving=True)
        if self.mode == "iid":
            phi = self.generator(index_rng(self.seed, j, "iid"))
            if phi.dim != self.dim:
                raise ValidationError("generator returned a map of the wrong dimension")
            return phi
        if self.mode == "markov":
            return self.base[self.markov_state(j)]
        theta = (self.theta0 + j * self.alpha) % 1.0
        K = len(self.base)
        parts, tp = [], True
        for k, phi in enumerate(self.base):
            w = (1.0 + math.cos(2 * math.pi * (theta - k / K))) / K
            if w > 0:
                parts.append(math.sqrt(w) * phi.kraus)
                tp = tp and bool(phi.trace_preserving)
        return CPMap(np.concatenate(parts), trace_preserving=True if tp else None)

    def markov_state(self, j: int) -> int:
        """Chain state at index ``j``; ``s_0`` is drawn from the stationary law."""
        with self._lock:
            st = self._states
            if not st:
                st[0] = _draw(self._pi(), index_rng(self.seed, 0, "markov"))
            if j in st:
                return st[j]
            step = 1 if j > 0 else -1
            P = self.transition if j > 0 else self._reverse
            i = max(st) if j > 0 else min(st)
            while i != j:
                i += step
                st[i] = _draw(P[st[i - step]], index_rng(self.seed, i, "markov"))
            return st[j]

    def _pi(self) -> np.ndarray:
        return _stationary(self.transition)


def _draw(p: np.ndarray, rng: np.random.Generator) -> int:
    c = np.cumsum(p)
    return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), len(p) - 1))


def _stationary(P: np.ndarray) -> np.ndarray:
    """Stationary distribution of ``P``; uniform when it is not unique."""
    k = P.shape[0]
    w, V = np.linalg.eig(P.T)
    ones = np.flatnonzero(np.abs(w - 1) < 1e-10)
    if ones.size != 1:
        return np.full(k, 1.0 / k)
    pi = np.abs(V[:, ones[0]].real)
    return pi / pi.sum()


def _time_reversal(P: np.ndarray) -> np.ndarray:
    """``P~_ab = pi_b P_ba / pi_a`` with rows renormalized; zero rows stay put."""
    pi = _stationary(P)
    R = (pi[None, :] * P.T) / np.where(pi > 0, pi, 1.0)[:, None]
    s = R.sum(axis=1)
    for a in range(len(s)):
        if s[a] > 0:
            R[a] /= s[a]
        else:
            R[a] = 0.0
            R[a, a] = 1.0
    return R


def channel_at(process, j: int) -> CPMap:
    return process.channel_at(j)


def compose_window(process, m: int, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Action of ``Psi_{n,m} = phi_n o ... o phi_m`` by sequential application."""
    if m > n:
        raise ValidationError(f"window needs m <= n, got m={m}, n={n}")
    maps = [process.channel_at(j) for j in range(m, n + 1)]

    def action(M):
        out = np.asarray(M, dtype=np.complex128)
        for phi in maps:
            out = apply(phi, out)
        return out

    return action


# ---------------------------------------------------------------------------
# Perron eigenmatrices


@dataclass(frozen=True)
class PerronPair:
    R: np.ndarray
    L: np.ndarray
    eigenvalue: float
    residual: float
    iterations: int


def _power_iterate(map: CPMap, tol: ToleranceConfig) -> tuple[np.ndarray, int]:
    Z = maximally_mixed(map.dim)
    prev_d = None
    for it in range(1, tol.max_power_iters + 1):
        W = apply(map, Z)
        tr = np.trace(W).real
        if not tr > tol.tol_trace:
            raise DegenerateImageError("power iteration reached a zero-trace image", index=it)
        W = W / tr
        W = 0.5 * (W + W.conj().T)
        d = metric_report(W, Z, tol, regularize=True).distance
        Z = W
        if d < tol.tol_fixedpoint:
            return Z, it
        prev_d = d
    raise ConvergenceError(
        f"power iteration did not converge in {tol.max_power_iters} steps", residual=prev_d,
        iterations=tol.max_power_iters,
    )


def perron_pair(map: CPMap, tol: ToleranceConfig = DEFAULT_TOL) -> PerronPair:
    """Perron eigenmatrices of ``map`` and of its adjoint, both of unit trace.

    Power iteration of the projective action from ``I/D``; stops when
    successive iterates are within ``tol_fixedpoint`` in the Hennion metric.
    """
    R, it_r = _power_iterate(map, tol)
    L, it_l = _power_iterate(map.adjoint(), tol)
    img = apply(map, R)
    lam = float(np.trace(img).real)
    res = float(np.linalg.norm(img - lam * R))
    return PerronPair(R, L, lam, res, max(it_r, it_l))


def superoperator(map: CPMap) -> np.ndarray:
    """Dense ``D_out^2 x D^2`` matrix of ``map`` acting on row-major ``vec``."""
    K = map.kraus
    return np.einsum("iab,icd->acbd", K, K.conj()).reshape(map.dim_out**2, map.dim**2)


def subdominant_modulus(map: CPMap) -> float:
    """``|lambda_2| / |lambda_1|`` of the dense superoperator spectrum."""
    w = np.sort(np.abs(np.linalg.eigvals(superoperator(map))))[::-1]
    return float(w[1] / w[0]) if w.size > 1 and w[0] > 0 else 0.0


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    """States ``Z_j`` (or ``Z'_j``) for ``j = start..end`` in increasing ``j``.

    ``residuals[k]`` is the trace distance at the ``k``-th step (in iteration
    order) to a companion trajectory started from a different seed state;
    ``converged`` says whether the last one is below the tolerance.
    """

    start: int
    end: int
    matrices: np.ndarray
    converged: bool
    residuals: np.ndarray
    direction: str = "forward"

    def at(self, j: int) -> np.ndarray:
        if not self.start <= j <= self.end:
            raise ValidationError(f"index {j} outside trajectory [{self.start}, {self.end}]")
        return self.matrices[j - self.start]

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "direction": self.direction,
            "converged": self.converged,
            "residuals": [float(x) for x in self.residuals],
            "matrices": [{"re": M.real.tolist(), "im": M.imag.tolist()} for M in self.matrices],
        }


def _run_chain(kraus_list: list[np.ndarray], Z0: np.ndarray, indices: list[int]) -> np.ndarray:
    """Normalized sequential application; returns every iterate."""
    shapes = {K.shape for K in kraus_list}
    if len(shapes) == 1:
        out, _, fail = kraus_chain(np.stack(kraus_list), Z0)
        if fail >= 0:
            raise DegenerateImageError(f"degenerate image at index {indices[fail]}", index=indices[fail])
        return out
    out = np.empty((len(kraus_list),) + Z0.shape, dtype=np.complex128)
    Z = Z0
    for t, K in enumerate(kraus_list):
        out_t, Z, fail = kraus_chain(K[None], Z)
        if fail >= 0:
            raise DegenerateImageError(f"degenerate image at index {indices[t]}", index=indices[t])
        out[t] = Z
    return out


def _companion_seed(seed_state: np.ndarray) -> np.ndarray:
    D = seed_state.shape[0]
    mixed = maximally_mixed(D)
    if np.linalg.norm(seed_state - mixed) > 1e-6:
        return mixed
    w = np.arange(1, D + 1, dtype=float)
    return np.diag(w / w.sum()).astype(np.complex128)


def _check_seed(seed_state, D: int, tol: ToleranceConfig) -> np.ndarray:
    if seed_state is None:
        return maximally_mixed(D)
    S = np.asarray(seed_state, dtype=np.complex128)
    if S.shape != (D, D):
        raise ValidationError(f"seed state must be {D}x{D}")
    if np.linalg.eigvalsh(0.5 * (S + S.conj().T))[0] <= tol.tol_psd:
        raise ValidationError("seed state must be positive definite")
    return S / np.trace(S).real


def _trajectory(process, m, n, seed_state, companion, tol, backward):
    if m > n:
        raise ValidationError(f"trajectory needs m <= n, got m={m}, n={n}")
    D = process.dim
    S = _check_seed(seed_state, D, tol)
    idx = list(range(n, m - 1, -1)) if backward else list(range(m, n + 1))
    kraus = [process.channel_at(j).kraus for j in idx]
    if backward:
        kraus = [dagger(K) for K in kraus]
    states = _run_chain(kraus, S, idx)
    if companion:
        other = _run_chain(kraus, _companion_seed(S), idx)
        residuals = 0.5 * trace_norm(states - other)
        converged = bool(residuals[-1] < tol.tol_fixedpoint * 1e2)
    else:
        residuals = np.zeros(0)
        converged = False
    if backward:
        states = states[::-1]
    return Trajectory(m, n, states, converged, residuals, "backward" if backward else "forward")


def z_forward(process, m: int, n: int, seed_state=None, companion: bool = True,
              tol: ToleranceConfig = DEFAULT_TOL) -> Trajectory:
    """Forward trajectory ``Z_m = phi_m . seed``, ``Z_j = phi_j . Z_{j-1}`` up to ``n``.

    ``converged`` is true when a companion trajectory from a different seed
    agrees with this one to within ``100 * tol_fixedpoint`` in trace distance
    at index ``n``.
    """
    return _trajectory(process, m, n, seed_state, companion, tol, backward=False)


def z_backward(process, m: int, n: int, seed_state=None, companion: bool = True,
               tol: ToleranceConfig = DEFAULT_TOL) -> Trajectory:
    """Backward trajectory ``Z'_n = phi*_n . seed``, ``Z'_j = phi*_j . Z'_{j+1}`` down to ``m``.

    Matrices are stored in increasing ``j``; ``residuals`` follow iteration
    order (from ``n`` down to ``m``).
    """
    return _trajectory(process, m, n, seed_state, companion, tol, backward=True)


# ---------------------------------------------------------------------------
# Contraction rate


@dataclass(frozen=True)
class MuEstimate:
    mu_hat: float
    standard_error: float
    per_pair: np.ndarray
    per_step_log_ratios: np.ndarray
    log_distance: np.ndarray
    trace_distance_mu: float
    collapsed: bool
    n_steps: int

    def to_dict(self) -> dict:
        return {
            "mu_hat": self.mu_hat,
            "standard_error": self.standard_error,
            "per_pair": [float(x) for x in self.per_pair],
            "per_step_log_ratios": [float(x) for x in self.per_step_log_ratios],
            "trace_distance_mu": self.trace_distance_mu,
            "collapsed": self.collapsed,
            "n_steps": self.n_steps,
        }


# Pairs closer than RENORM_BELOW are pulled apart to about RENORM_TARGET so the
# distance never sinks into round-off; the removed factor is kept in the log.
RENORM_BELOW = 1e-6
RENORM_TARGET = 1e-3
# A distance this small right after a step counts as exact collapse.
COLLAPSE_BELOW = 1e-13


def _slope(y: np.ndarray) -> float:
    x = np.arange(y.size, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def _fit_window(n: int) -> int:
    return max(1, n // 10)


def _track_pair(process, start, n_max, Y1, Y2, tol):
    logd = np.empty(n_max)
    logt = np.empty(n_max)
    offset = 0.0
    offset_t = 0.0
    count = 0
    collapsed = False
    for k in range(n_max):
        phi = process.channel_at(start + k)
        Y1 = _proj(phi, Y1, start + k, tol)
        Y2 = _proj(phi, Y2, start + k, tol)
        d = metric_report(Y1, Y2, tol, regularize=True).distance
        t = 0.5 * float(trace_norm(Y1 - Y2))
        if d < COLLAPSE_BELOW:
            collapsed = True
            break
        logd[count] = offset + math.log(d)
        logt[count] = offset_t + math.log(max(t, 1e-300))
        count += 1
        if d < RENORM_BELOW:
            s = RENORM_TARGET / d
            Y2 = Y1 + s * (Y2 - Y1)
            d_new = metric_report(Y2, Y1, tol, regularize=True).distance
            offset += math.log(d) - math.log(d_new)
            offset_t += math.log(max(t, 1e-300)) - math.log(max(0.5 * float(trace_norm(Y1 - Y2)), 1e-300))
    return logd[:count], logt[:count], collapsed


def _proj(phi, Y, j, tol):
    W = apply(phi, Y)
    tr = np.trace(W).real
    if not tr > tol.tol_trace:
        raise DegenerateImageError(f"degenerate image at index {j}", index=j)
    W = W / tr
    return 0.5 * (W + W.conj().T)


def estimate_mu(
    process,
    n_max: int = 100,
    pairs: int = 4,
    rng=None,
    start: int = 0,
    threads: int = 1,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> MuEstimate:
    """Contraction rate of the projective action in the Hennion metric.

    For each of ``pairs`` random positive definite pairs ``(Y1, Y2)``,
    ``log d(Psi_{n,start} . Y1, Psi_{n,start} . Y2)`` is tracked for
    ``n < n_max`` and ``mu`` is ``exp`` of its least-squares slope after the
    first tenth of the steps. Pairs that coincide to round-off are
    renormalized (pulled apart, the scale kept in the log). A pair that
    collapses exactly gives ``mu = 0`` and sets ``collapsed``.
    ``per_step_log_ratios`` is the pair-averaged increment series.
    """
    if n_max < 8:
        raise ValidationError("n_max must be >= 8")
    if pairs < 1:
        raise ValidationError("pairs must be >= 1")
    rng = as_rng(rng)
    seeds = rng.integers(0, 2**63, size=pairs)
    D = process.dim

    def task(s):
        r = np.random.default_rng(int(s))
        Y1, Y2 = random_pd_pair(D, r, "mixed")
        return _track_pair(process, start, n_max, Y1, Y2, tol)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(task, seeds))
    else:
        results = [task(s) for s in seeds]

    mus, mus_t, ratios = [], [], []
    any_collapse = False
    for logd, logt, collapsed in results:
        any_collapse |= collapsed
        k0 = _fit_window(n_max)
        if logd.size - k0 < 2:
            mus.append(0.0)
            mus_t.append(0.0)
        else:
            mus.append(min(1.0, math.exp(_slope(logd[k0:]))))
            mus_t.append(min(1.0, math.exp(_slope(logt[k0:]))))
        ratios.append(np.diff(logd))
    mus = np.array(mus)
    n_common = min(r.size for r in ratios)
    per_step = np.mean([r[:n_common] for r in ratios], axis=0) if n_common else np.zeros(0)
    longest = max(results, key=lambda t: t[0].size)[0]
    se = float(mus.std(ddof=1) / math.sqrt(pairs)) if pairs > 1 else 0.0
    return MuEstimate(
        mu_hat=float(mus.mean()),
        standard_error=se,
        per_pair=mus,
        per_step_log_ratios=per_step,
        log_distance=longest,
        trace_distance_mu=float(np.mean(mus_t)),
        collapsed=any_collapse,
        n_steps=n_max,
    )


# ---------------------------------------------------------------------------
# Equilibrium helpers

PILOT_STEPS = 8
BURN_FACTOR = 50
BURN_CAP = 5000


def burn_in_steps(process, at: int = 0, rng=None, cap: int = BURN_CAP) -> int:
    """``50 * ceil(1 / (1 - mu_coarse))`` from an 8-step pilot, capped at ``cap``.

    The pilot starts ``8`` steps before ``at``.
    """
    pilot = estimate_mu(process, n_max=PILOT_STEPS, pairs=2, rng=index_rng(0, at, "pilot") if rng is None else rng,
                        start=at - PILOT_STEPS)
    mu = pilot.mu_hat
    if mu >= 1.0:
        return cap
    return int(min(cap, BURN_FACTOR * math.ceil(1.0 / (1.0 - mu))))


def equilibrium_forward(process, j: int, burn: int | None = None) -> np.ndarray:
    """``Z_j`` started from ``I/D`` at index ``j - burn``."""
    burn = burn_in_steps(process, j) if burn is None else burn
    return z_forward(process, j - burn, j, companion=False).matrices[-1]


def equilibrium_backward(process, j: int, burn: int | None = None) -> np.ndarray:
    """``Z'_j`` started from ``I/D`` at index ``j + burn``."""
    burn = burn_in_steps(process, j) if burn is None else burn
    return z_backward(process, j, j + burn, companion=False).matrices[0]


# ---------------------------------------------------------------------------
# Rank-one limit


def rank_one_residual(
    process,
    m: int,
    n: int,
    x: int | None = None,
    samples: int = 200,
    rng=None,
    burn: int | None = None,
) -> float:
    """Sampled ``||Psi_{n,m} / tr[Psi*_{n,m}(I)] - P_{n,m}||_1`` with ``P(M) = tr[Z'_m M] Z_n``.

    ``Z_n`` and ``Z'_m`` are equilibrium states (burn-in from
    :func:`burn_in_steps` unless given). The returned value is the lower bound
    of :func:`ergoq.qcore.one_norm_lower` on the difference map. ``x`` is the
    reference site of the bound and must lie in ``[m, n]``; it does not enter
    the computation.
    """
    if m > n:
        raise ValidationError("need m <= n")
    if x is not None and not m <= x <= n:
        raise ValidationError("need m <= x <= n")
    if burn is None:
        burn = max(burn_in_steps(process, m), burn_in_steps(process, n))
    Zn = equilibrium_forward(process, n, burn=burn + (n - m))
    Zpm = equilibrium_backward(process, m, burn=burn + (n - m))
    D = process.dim
    psi = compose_window(process, m, n)
    scale = float(np.trace(psi(np.eye(D, dtype=np.complex128))).real)
    if not scale > 0:
        raise DegenerateImageError("window composition has zero trace")

    def diff(M):
        return psi(M) / scale - np.trace(Zpm @ M) * Zn

    return one_norm_lower(diff, samples, rng, dim=D)


def strict_positivity_window(process, start: int = 0, n0_max: int = 8, samples: int = 200, rng=None):
    """Smallest window length ``n0 + 1`` from ``start`` not refuted as strictly positive.

    Returns ``(n0, status)``. Windows are composed explicitly when the Kraus
    count allows (so the Choi certificate applies) and probed by random pure
    inputs otherwise. This is a probe: minimality is not claimed.
    """
    rng = as_rng(rng)
    D = process.dim
    tol = DEFAULT_TOL.tol_psd
    from .qcore import haar_unit_vectors

    for n0 in range(n0_max + 1):
        maps = [process.channel_at(j) for j in range(start + n0, start - 1, -1)]
        try:
            res = is_strictly_positive(compose(maps), samples, rng)
            if res:
                return n0, res.status
            continue
        except ValidationError:
            pass
        act = compose_window(process, start, start + n0)
        v = haar_unit_vectors(D, samples, rng)
        imgs = act(np.einsum("na,nb->nab", v, v.conj()))
        if np.linalg.eigvalsh(imgs)[:, 0].min() > tol:
            return n0, Positivity.PROBABLE
    return None, Positivity.COUNTEREXAMPLE
