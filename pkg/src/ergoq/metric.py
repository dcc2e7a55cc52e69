"""Hennion projective metric on positive definite density matrices.

For positive definite ``Y1, Y2`` let ``m(Y1, Y2) = max{t : t Y2 <= Y1}`` and

    d(Y1, Y2) = (1 - m(Y1,Y2) m(Y2,Y1)) / (1 + m(Y1,Y2) m(Y2,Y1)).

Writing ``K = Y2^{-1/2} (Y1 - Y2) Y2^{-1/2}`` with extreme eigenvalues
``a <= b`` gives ``m(Y1,Y2) = 1 + a`` and ``m(Y2,Y1) = 1 / (1 + b)``, hence
``d = (b - a) / (2 + a + b)``. That form is used for the distance because it
keeps full relative accuracy when ``Y1`` and ``Y2`` nearly coincide.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ._config import DEFAULT_TOL, ToleranceConfig
from ._rng import as_rng
from .errors import SingularInputError, ValidationError
from .qcore import CPMap, projective_action, random_density_matrix, trace_norm

__all__ = [
    "MetricReport",
    "contraction_coefficient",
    "hennion_distance",
    "m_ratio",
    "metric_report",
    "random_pd_pair",
    "trace_vs_hennion",
]

REGULARIZATION_EPS = 1e-12


@dataclass(frozen=True)
class MetricReport:
    m12: float
    m21: float
    distance: float
    regularized: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _regularize(Y: np.ndarray, eps: float) -> np.ndarray:
    D = Y.shape[-1]
    return (1 - eps) * Y + eps * np.eye(D) / D


def _inv_cholesky(Y: np.ndarray, tol: ToleranceConfig, regularize: bool) -> tuple[np.ndarray, bool]:
    """Inverse Cholesky factor ``C^{-1}`` with ``Y = C C^dagger``."""
    lam = np.linalg.eigvalsh(Y)[0]
    used = False
    if not lam > tol.tol_psd:
        if not regularize:
            raise SingularInputError(f"matrix is not positive definite (lambda_min = {lam:.3g})")
        Y = _regularize(Y, REGULARIZATION_EPS)
        used = True
    C = np.linalg.cholesky(Y)
    return np.linalg.inv(C), used


def _relative_spectrum(Y1, Y2, tol, regularize):
    """Extreme eigenvalues ``(a, b)`` of ``Y2^{-1/2} (Y1 - Y2) Y2^{-1/2}``."""
    Y1 = np.asarray(Y1, dtype=np.complex128)
    Y2 = np.asarray(Y2, dtype=np.complex128)
    Ci, used = _inv_cholesky(Y2, tol, regularize)
    if used:
        Y2 = _regularize(Y2, REGULARIZATION_EPS)
    K = Ci @ (Y1 - Y2) @ Ci.conj().T
    w = np.linalg.eigvalsh(0.5 * (K + K.conj().T))
    return w[0], w[-1], used


def m_ratio(Y1, Y2, tol: ToleranceConfig = DEFAULT_TOL, regularize: bool = False) -> float:
    """Largest ``t`` with ``t * Y2 <= Y1``, i.e. ``lambda_min(Y2^{-1/2} Y1 Y2^{-1/2})``.

    ``Y2`` must be positive definite unless ``regularize`` is set, in which
    case it is replaced by ``(1 - eps) Y2 + eps I / D`` with ``eps = 1e-12``.
    """
    a, _, _ = _relative_spectrum(Y1, Y2, tol, regularize)
    return max(0.0, 1.0 + a)


def metric_report(Y1, Y2, tol: ToleranceConfig = DEFAULT_TOL, regularize: bool = False) -> MetricReport:
    a, b, used = _relative_spectrum(Y1, Y2, tol, regularize)
    a = max(a, -1.0)
    m12 = 1.0 + a
    m21 = 1.0 / (1.0 + b)
    dist = (b - a) / (2.0 + a + b)
    return MetricReport(float(m12), float(m21), float(min(max(dist, 0.0), 1.0)), used)


def hennion_distance(Y1, Y2, tol: ToleranceConfig = DEFAULT_TOL, regularize: bool = False) -> float:
    """Hennion distance, a symmetric premetric with values in ``[0, 1]``.

    The denominator is ``1 + m(Y1,Y2) m(Y2,Y1)`` (the symmetric form).
    """
    # Either argument may be the singular one; check both.
    if not regularize:
        for Y in (Y1, Y2):
            if not np.linalg.eigvalsh(np.asarray(Y))[0] > tol.tol_psd:
                raise SingularInputError("Hennion distance needs positive definite arguments")
    return metric_report(Y1, Y2, tol, regularize).distance


def trace_vs_hennion(Y1, Y2, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, float]:
    """``(0.5 * ||Y1 - Y2||_1, d(Y1, Y2))``."""
    Y1 = np.asarray(Y1, dtype=np.complex128)
    Y2 = np.asarray(Y2, dtype=np.complex128)
    return 0.5 * float(trace_norm(Y1 - Y2)), hennion_distance(Y1, Y2, tol)


def random_pd_pair(D: int, rng, kind: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """A random pair of positive definite density matrices.

    ``kind`` selects the ensemble: ``"mixed"`` (two Ginibre-Wishart draws),
    ``"edge"`` (near-pure states mixed with ``1e-3 I/D``) or ``"close"`` (a
    draw and a small perturbation of it). ``None`` picks one at random.
    """
    rng = as_rng(rng)
    if kind is None:
        kind = ("mixed", "edge", "close")[rng.integers(3)]
    if kind == "mixed":
        return random_density_matrix(D, rng), random_density_matrix(D, rng)
    if kind == "edge":
        eps = 1e-3
        pure = [random_density_matrix(D, rng, rank=1) for _ in range(2)]
        return tuple((1 - eps) * P + eps * np.eye(D) / D for P in pure)
    if kind == "close":
        X = random_density_matrix(D, rng)
        P = random_density_matrix(D, rng)
        t = 10.0 ** rng.uniform(-4, -1)
        return X, (1 - t) * X + t * P
    raise ValidationError(f"unknown pair kind {kind!r}")


def contraction_coefficient(map: CPMap, pairs: int, rng=None, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Sampled lower bound on the contraction coefficient of ``map``.

    Returns the largest ratio ``d(phi.X, phi.Y) / d(X, Y)`` over ``pairs``
    random positive definite pairs (see :func:`random_pd_pair`); pairs with
    ``d(X, Y) < 1e-14`` are redrawn.
    """
    if pairs < 1:
        raise ValidationError("pairs must be >= 1")
    rng = as_rng(rng)
    best = 0.0
    done = 0
    while done < pairs:
        X, Y = random_pd_pair(map.dim, rng)
        dxy = hennion_distance(X, Y, tol)
        if dxy < 1e-14:
            continue
        fX = projective_action(map, X, tol)
        fY = projective_action(map, Y, tol)
        best = max(best, metric_report(fX, fY, tol, regularize=True).distance / dxy)
        done += 1
    return best
