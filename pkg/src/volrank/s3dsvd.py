"""Structured 3D SVD: orthogonal per-mode factors, a dense core, and a
signed quasi-singular coefficient sequence for progressive reconstruction.

The decomposition computes a thin SVD of each unfolding, keeps the ``r``
leading left singular vectors per mode, contracts the input against them
to obtain an ``r x r x r`` core ``g``, and reads the signed core diagonal
``qsigma[i] = g[i, i, i]`` in index order (no re-sorting; magnitudes are
usually but not always non-increasing, see :func:`ordering_report`).

Truncated reconstruction at level ``k`` uses the leading ``k`` columns of
each factor and the leading ``k x k x k`` core block; the diagonal
expansion uses only the ``k`` leading rank-one terms weighted by
``qsigma``.  Both are orthogonal projections of the input, so their
errors are monotone non-increasing in ``k``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, NumericError
from .tensor_core import as_tensor3, frobenius_norm, mode_product, svd, unfold

__all__ = [
    "CoeffArray",
    "S3dModel",
    "coeff_array",
    "decompose",
    "diagonal_expansion",
    "epsilon_r",
    "ordering_report",
    "reconstruct",
]


@dataclass(frozen=True)
class S3dModel:
    """Structured 3D SVD of a volume.

    Attributes
    ----------
    dims : tuple of int
        Shape of the decomposed volume.
    r : int
        Number of retained columns per mode, ``1 <= r <= min(dims)``.
    factors : tuple of ndarray
        Per-mode factors ``(u1, u2, u3)``; ``u_m`` is ``dims[m-1] x r``
        with orthonormal columns.
    core : ndarray
        Dense ``r x r x r`` core tensor.
    qsigma : ndarray
        Signed quasi-singular coefficients, ``qsigma[i] == core[i, i, i]``
        exactly, kept in index order.

    Instances are frozen; treat the arrays as read-only.
    """

    dims: tuple
    r: int
    factors: tuple
    core: np.ndarray
    qsigma: np.ndarray


@dataclass(frozen=True)
class CoeffArray:
    """Diagonal coefficient tensor: ``s[i, i, i] = qsigma[i]``, zero elsewhere."""

    r: int
    s: np.ndarray


def _check_level(k, r, what="k"):
    k = int(k)
    if not 1 <= k <= r:
        raise ValueError(f"{what} must satisfy 1 <= {what} <= {r}, got {k}")
    return k


def decompose(x, r):
    """Decompose ``x`` at rank ``r``.

    Parameters
    ----------
    x : ndarray
        Third-order volume; must be finite.
    r : int
        Retained rank per mode, ``1 <= r <= min(x.shape)``.
    """
    x = as_tensor3(x)
    r = int(r)
    if not 1 <= r <= min(x.shape):
        raise ValueError(
            f"r must satisfy 1 <= r <= min(dims) = {min(x.shape)}, got {r}"
        )
    if not np.isfinite(x).all():
        raise NumericError("input tensor contains non-finite entries")
    factors = tuple(svd(unfold(x, mode)).u[:, :r].copy() for mode in (1, 2, 3))
    core = x
    for mode, u in enumerate(factors, start=1):
        core = mode_product(core, u.T, mode)
    qsigma = np.einsum("iii->i", core).copy()
    return S3dModel(dims=x.shape, r=r, factors=factors, core=core, qsigma=qsigma)


def reconstruct(model, k):
    """Truncated reconstruction from the leading ``k`` levels of ``model``."""
    k = _check_level(k, model.r)
    xk = np.ascontiguousarray(model.core[:k, :k, :k])
    for mode, u in enumerate(model.factors, start=1):
        xk = mode_product(xk, u[:, :k], mode)
    return xk


def diagonal_expansion(model, k):
    """Sum of the ``k`` leading qsigma-weighted rank-one terms.

    Uses only the diagonal of the core, so it is generally a coarser
    approximation than :func:`reconstruct` at the same ``k``.
    """
    k = _check_level(k, model.r)
    u1, u2, u3 = model.factors
    return np.einsum(
        "r,ir,jr,kr->ijk",
        model.qsigma[:k],
        u1[:, :k],
        u2[:, :k],
        u3[:, :k],
        optimize=True,
    )


def epsilon_r(model, x, k):
    """Relative energy shortfall of the ``k``-term diagonal expansion.

    Returns ``sqrt(max(0, 1 - sum(qsigma[:k]**2) / ||x||**2))``; because
    the expansion is an orthogonal projection this equals its relative
    error up to floating-point noise.
    """
    x = as_tensor3(x)
    k = _check_level(k, model.r)
    normx = frobenius_norm(x)
    if normx == 0.0:
        raise DegenerateInputError("epsilon_r is undefined for a zero tensor")
    captured = float(np.sum(model.qsigma[:k] ** 2))
    return float(np.sqrt(max(0.0, 1.0 - captured / normx**2)))


def coeff_array(model):
    """Materialize the quasi-singular coefficients as a diagonal tensor."""
    r = model.r
    s = np.zeros((r, r, r))
    idx = np.arange(r)
    s[idx, idx, idx] = model.qsigma
    return CoeffArray(r=r, s=s)


def ordering_report(model):
    """Per-index magnitude report for the qsigma sequence.

    Returns a list of ``(index, magnitude, is_violation)`` tuples where
    ``is_violation`` flags positions ``i`` with
    ``|qsigma[i]| < |qsigma[i+1]|``; the last position is never flagged.
    """
    mags = np.abs(model.qsigma)
    report = []
    for i in range(model.r):
        violation = i + 1 < model.r and mags[i] < mags[i + 1]
        report.append((i, float(mags[i]), bool(violation)))
    return report
