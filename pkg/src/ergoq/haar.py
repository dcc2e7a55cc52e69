"""iid Haar channel ensemble and Monte Carlo statistics of its equilibrium states.

A Haar channel on ``C^D`` with environment dimension ``r`` is
``M -> tr_env[U (Q_r (x) M) U^dagger]`` for Haar ``U`` of size ``L = r D`` and
``Q_r = |e_1><e_1|``. The Kronecker order is environment (x) system, so the
input occupies the first ``D`` columns of ``U`` and the Kraus operators are
the ``r`` row blocks ``U[kD:(k+1)D, :D]``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ._kernels import kraus_chain
from ._rng import as_rng
from .errors import DegenerateImageError, ValidationError
from .qcore import CPMap

__all__ = [
    "HaarChannelSpec",
    "MomentEstimate",
    "WStatistics",
    "entropy_deficit_second_order",
    "haar_channel",
    "haar_channel_from_unitary",
    "ks_distance",
    "mean_estimate",
    "sample_haar_isometry",
    "sample_haar_unitary",
    "semicircle_cdf",
    "stationary_samples",
    "von_neumann_entropy",
    "w_matrices",
    "w_statistics",
]

# Isometries are drawn in blocks of this many steps; fixed so that streams do
# not depend on any tuning knob.
_CHUNK = 2048
# keep one chunk of Kraus operators near 64 MB
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class HaarChannelSpec:
    D: int
    r: int
    seed: int = 0

    def __post_init__(self):
        if self.D < 2:
            raise ValidationError("Haar channels need D >= 2")
        if self.r < 2:
            raise ValidationError("r = 1 gives a unitary channel, which is not strictly positive; need r >= 2")

    @property
    def L(self) -> int:
        return self.r * self.D


@dataclass(frozen=True)
class MomentEstimate:
    name: str
    value: float | np.ndarray
    standard_error: float | np.ndarray
    samples: int
    burn_in: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("value", "standard_error"):
            if isinstance(d[k], np.ndarray):
                d[k] = d[k].tolist()
        return d


def _phase_fix(Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    ph = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return Q * ph[..., None, :]


def sample_haar_unitary(L: int, rng=None) -> np.ndarray:
    """Haar-random ``L x L`` unitary: QR of a complex Ginibre matrix with R's diagonal phases removed."""
    if L < 1:
        raise ValidationError("L must be >= 1")
    rng = as_rng(rng)
    G = (rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    return _phase_fix(Q, R)


def sample_haar_isometry(L: int, k: int, rng=None, size: int | None = None) -> np.ndarray:
    """First ``k`` columns of a Haar unitary of size ``L`` (same law as thin QR of ``L x k`` Ginibre).

    With ``size`` a stack of ``size`` independent isometries is returned.
    """
    rng = as_rng(rng)
    shape = (L, k) if size is None else (size, L, k)
    G = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    return _phase_fix(Q, R)


def haar_channel_from_unitary(U: np.ndarray, D: int) -> CPMap:
    """Kraus form of ``M -> tr_env[U (Q_r (x) M) U^dagger]``."""
    U = np.asarray(U)
    L = U.shape[0]
    if L % D:
        raise ValidationError("unitary size must be a multiple of D")
    return CPMap(U[:, :D].reshape(L // D, D, D))


def haar_channel(spec: HaarChannelSpec, rng=None) -> CPMap:
    """Random Haar channel; Kraus operators are the ``r`` blocks of a Haar isometry."""
    V = sample_haar_isometry(spec.L, spec.D, rng)
    return CPMap(V.reshape(spec.r, spec.D, spec.D), trace_preserving=True)


def stationary_samples(
    spec: HaarChannelSpec,
    n_samples: int,
    burn_in: int,
    rng=None,
    stride: int = 5,
) -> np.ndarray:
    """Equilibrium states of the iid Haar shift equation.

    Starts from ``I/D``, applies ``burn_in`` random channels, then records
    every ``stride``-th state. Returns an array ``(n_samples, D, D)``.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    if stride < 1 or burn_in < 0:
        raise ValidationError("stride must be >= 1 and burn_in >= 0")
    rng = as_rng(rng)
    D, r = spec.D, spec.r
    total = burn_in + n_samples * stride

    def emitted(steps):
        return max(0, (steps - burn_in) // stride)

    out = np.empty((n_samples, D, D), dtype=np.complex128)
    Z = np.eye(D, dtype=np.complex128) / D
    done = 0
    while done < total:
        T = min(_CHUNK, max(1, _CHUNK_ENTRIES // (spec.L * D)), total - done)
        K = sample_haar_isometry(spec.L, D, rng, size=T).reshape(T, r, D, D)
        k0, k1 = emitted(done), emitted(done + T)
        states, Z, fail = kraus_chain(K, Z, burn=burn_in - done, stride=stride, nout=k1 - k0)
        if fail >= 0:
            raise DegenerateImageError("degenerate image in Haar chain", index=done + fail)
        out[k0:k1] = states
        done += T
    return out


def von_neumann_entropy(Z: np.ndarray) -> np.ndarray | float:
    """``-tr Z log Z`` in nats over the last two axes."""
    w = np.clip(np.linalg.eigvalsh(Z), 0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, -w * np.log(w), 0.0)
    return terms.sum(axis=-1)


def mean_estimate(name: str, values, burn_in: int = 0) -> MomentEstimate:
    v = np.asarray(values)
    n = v.shape[0]
    se = v.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(v[0], dtype=float)
    return MomentEstimate(name, v.mean(axis=0), se, n, burn_in)


def w_matrices(spec: HaarChannelSpec, samples: np.ndarray) -> np.ndarray:
    """Rescaled fluctuations ``sqrt(r D^2 + 1) (Z - I/D)``."""
    D, r = spec.D, spec.r
    return np.sqrt(r * D * D + 1) * (samples - np.eye(D) / D)


def semicircle_cdf(x) -> np.ndarray:
    """CDF of the semicircle law with support ``[-2, 2]`` (unit variance)."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + (x * np.sqrt(4 - x * x) / 2 + 2 * np.arcsin(x / 2)) / (2 * np.pi)


def ks_distance(values, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    F = cdf(x)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def entropy_deficit_second_order(D: int, r: int) -> float:
    """Second-order expansion of ``log D - E[S(Z)]`` for the Haar equilibrium.

    ``S(I/D + Y) = log D - (D/2) tr Y^2 + O(Y^3)`` and
    ``E tr Y^2 = (D^2 - 1) / (D (r D^2 + 1))``, giving
    ``(D^2 - 1) / (2 (r D^2 + 1))``, which tends to ``1/(2r)`` for large ``D``.
    """
    return (D * D - 1) / (2.0 * (r * D * D + 1))


@dataclass
class WStatistics:
    max_abs_trace_w: float
    tr_w2: MomentEstimate
    entropy: MomentEstimate
    entropy_deficit: MomentEstimate
    ks_semicircle: float
    histogram: tuple[np.ndarray, np.ndarray]
    lag1_autocorrelation: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        counts, edges = self.histogram
        return {
            "max_abs_trace_w": self.max_abs_trace_w,
            "tr_w2": self.tr_w2.to_dict(),
            "entropy": self.entropy.to_dict(),
            "entropy_deficit": self.entropy_deficit.to_dict(),
            "ks_semicircle": self.ks_semicircle,
            "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
            "lag1_autocorrelation": self.lag1_autocorrelation,
        }


def _lag1(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 3 or x.std() == 0:
        return 0.0
    x = x - x.mean()
    return float(np.dot(x[:-1], x[1:]) / np.dot(x, x))


def w_statistics(spec: HaarChannelSpec, samples: np.ndarray, bins: int = 40, burn_in: int = 0) -> WStatistics:
    """Summary statistics of ``W = sqrt(rD^2+1)(Z - I/D)`` over stationary samples."""
    W = w_matrices(spec, samples)
    trW = np.trace(W, axis1=1, axis2=2)
    trW2 = np.einsum("nab,nba->n", W, W).real
    ev = np.linalg.eigvalsh(W)
    S = von_neumann_entropy(samples)
    counts, edges = np.histogram(ev.ravel(), bins=bins, range=(-2.5, 2.5))
    return WStatistics(
        max_abs_trace_w=float(np.abs(trW).max()),
        tr_w2=mean_estimate("tr_w2", trW2, burn_in),
        entropy=mean_estimate("entropy", S, burn_in),
        entropy_deficit=mean_estimate("entropy_deficit", np.log(spec.D) - S, burn_in),
        ks_semicircle=ks_distance(ev, semicircle_cdf),
        histogram=(counts, edges),
        lag1_autocorrelation=_lag1(trW2),
    )
