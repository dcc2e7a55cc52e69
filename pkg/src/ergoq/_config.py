from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances shared by all modules."""

    tol_herm: float = 1e-10
    tol_psd: float = 1e-10
    tol_trace: float = 1e-10
    tol_tp: float = 1e-10
    tol_fixedpoint: float = 1e-12
    max_power_iters: int = 10_000

    def __post_init__(self):
        for name in ("tol_herm", "tol_psd", "tol_trace", "tol_tp", "tol_fixedpoint"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.max_power_iters < 1:
            raise ValidationError("max_power_iters must be a positive integer")


DEFAULT_TOL = ToleranceConfig()

# Products of more Kraus operators than this are refused by ``compose``.
MAX_COMPOSED_KRAUS = 4096


def numba_enabled() -> bool:
    """Whether the numba kernels are requested (``ERGOQ_DISABLE_NUMBA`` unset or 0)."""
    flag = os.environ.get("ERGOQ_DISABLE_NUMBA", "0").strip().lower()
    return flag in ("", "0", "false", "no")
