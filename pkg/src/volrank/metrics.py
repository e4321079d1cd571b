"""Reconstruction quality metrics: MSE, PSNR, relative error, and the
percentage-of-energy-retained (PER) curve over qsigma coefficients.
"""

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, ShapeError
from .tensor_core import as_tensor3, frobenius_norm

__all__ = [
    "MetricsReport",
    "mse",
    "per",
    "psnr",
    "rel_err",
    "select_rank_by_per",
]


@dataclass(frozen=True)
class MetricsReport:
    """One method/k cell of a benchmark table.

    ``per`` is ``None`` for methods without a qsigma sequence;
    ``psnr_db`` is ``math.inf`` when the reconstruction is exact.
    """

    method: str
    k: int
    psnr_db: float
    mse: float
    rel_err: float
    per: Optional[float] = None
    elapsed_seconds: Optional[float] = None


def _check_pair(x, xhat):
    x = as_tensor3(x)
    xhat = as_tensor3(xhat)
    if x.shape != xhat.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    return x, xhat


def mse(x, xhat):
    """Mean squared difference between ``x`` and ``xhat``."""
    x, xhat = _check_pair(x, xhat)
    return float(np.mean((x - xhat) ** 2))


def psnr(x, xhat):
    """Peak signal-to-noise ratio in dB, with peak taken from ``x``.

    ``10 * log10(max(x)**2 / mse)``; an exact reconstruction yields
    ``math.inf``.  A non-positive peak leaves the ratio meaningless.
    """
    x, xhat = _check_pair(x, xhat)
    peak = float(np.max(x))
    if peak <= 0.0:
        raise DegenerateInputError(
            f"psnr needs a positive peak in the reference volume, got max={peak}"
        )
    err = mse(x, xhat)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def rel_err(x, xhat):
    """Relative Frobenius error ``||x - xhat|| / ||x||``."""
    x, xhat = _check_pair(x, xhat)
    normx = frobenius_norm(x)
    if normx == 0.0:
        raise DegenerateInputError("rel_err is undefined for a zero reference")
    return frobenius_norm(x - xhat) / normx


def _qsigma_cumulative(model):
    """Cumulative squared-qsigma energy; sequential so partials are monotone."""
    energy = np.cumsum(model.qsigma**2)
    total = float(energy[-1])
    if total == 0.0:
        raise DegenerateInputError("per is undefined when all qsigma are zero")
    return energy, total


def per(model, k):
    """Fraction of qsigma energy captured by the first ``k`` coefficients.

    Coefficients are taken in index order with their signs squared away;
    ``per(model, model.r)`` is exactly 1.0.
    """
    k = int(k)
    if not 1 <= k <= model.r:
        raise ValueError(f"k must satisfy 1 <= k <= {model.r}, got {k}")
    energy, total = _qsigma_cumulative(model)
    return float(energy[k - 1] / total)


def select_rank_by_per(model, threshold):
    """Smallest ``k`` whose PER meets ``threshold``; ties pick the smaller ``k``."""
    threshold = float(threshold)
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    energy, total = _qsigma_cumulative(model)
    reached = np.nonzero(energy / total >= threshold)[0]
    # PER(r) == 1.0 exactly, so the threshold is always reachable.
    return int(reached[0]) + 1
