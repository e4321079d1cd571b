"""Dense third-order tensor primitives: unfolding, folding, mode products, SVD.

Conventions used throughout the package:

* A volume is a C-contiguous float64 ndarray of shape ``(n1, n2, n3)``,
  so the third index varies fastest in memory.
* Modes are numbered 1..3 to match the usual tensor literature.
* ``unfold(x, m)`` arranges mode-m fibers as columns of an
  ``n_m x (prod of the other dims)`` matrix, with the lower-numbered
  remaining mode varying fastest across columns.  For a 2x2x2 tensor
  with entries ``x[i, j, k] = 4i + 2j + k`` the mode-1 unfolding is::

      [[0, 2, 1, 3],
       [4, 6, 5, 7]]

* SVD factor signs are normalized so the largest-magnitude entry of each
  left singular vector is positive (ties broken by the first maximum),
  with the sign change compensated in the right factor.  This keeps
  decompositions reproducible run to run.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg

from .errors import NumericError, ShapeError

__all__ = [
    "SvdResult",
    "as_tensor3",
    "fold",
    "frobenius_norm",
    "inner_product",
    "mode_product",
    "outer3",
    "svd",
    "unfold",
]


def as_tensor3(data):
    """Coerce ``data`` to a C-contiguous float64 array of rank 3.

    Raises
    ------
    ShapeError
        If the input does not have exactly three axes or any axis is empty.
    """
    x = np.ascontiguousarray(data, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"expected a third-order tensor, got ndim={x.ndim}")
    if min(x.shape) < 1:
        raise ShapeError(f"all dimensions must be positive, got {x.shape}")
    return x


def _check_mode(mode):
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2, or 3, got {mode!r}")


def inner_product(a, b):
    """Frobenius inner product of two tensors of identical shape."""
    a = as_tensor3(a)
    b = as_tensor3(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def frobenius_norm(a):
    """Frobenius norm, equal to ``sqrt(inner_product(a, a))``."""
    return math.sqrt(inner_product(a, a))


def outer3(u, v, w):
    """Rank-one tensor ``T[i, j, k] = u[i] * v[j] * w[k]``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    for name, vec in (("u", u), ("v", v), ("w", w)):
        if vec.ndim != 1 or vec.size == 0:
            raise ShapeError(f"{name} must be a non-empty vector, got shape {vec.shape}")
    return np.einsum("i,j,k->ijk", u, v, w)


def unfold(x, mode):
    """Mode-``mode`` unfolding of ``x`` as an ``n_mode x rest`` matrix.

    Mode-``mode`` fibers become columns; columns are ordered so the
    lower-numbered remaining mode varies fastest.
    """
    x = as_tensor3(x)
    _check_mode(mode)
    axis = mode - 1
    m = np.reshape(np.moveaxis(x, axis, 0), (x.shape[axis], -1), order="F")
    return np.ascontiguousarray(m)


def fold(m, mode, dims):
    """Inverse of :func:`unfold`: rebuild a tensor of shape ``dims``.

    ``fold(unfold(x, mode), mode, x.shape)`` reproduces ``x`` bit for bit.
    """
    m = np.asarray(m, dtype=np.float64)
    _check_mode(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ShapeError(f"dims must be three positive integers, got {dims}")
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={m.ndim}")
    axis = mode - 1
    rest = [d for i, d in enumerate(dims) if i != axis]
    if m.shape != (dims[axis], rest[0] * rest[1]):
        raise ShapeError(
            f"matrix shape {m.shape} does not match mode-{mode} unfolding of {dims}"
        )
    t = np.reshape(m, (dims[axis], rest[0], rest[1]), order="F")
    return np.ascontiguousarray(np.moveaxis(t, 0, axis))


def mode_product(x, mat, mode):
    """Mode-``mode`` product ``x x_mode mat``.

    ``mat`` must have as many columns as ``x`` has entries along ``mode``;
    the result has ``mat.shape[0]`` entries along that mode.
    """
    x = as_tensor3(x)
    _check_mode(mode)
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={mat.ndim}")
    axis = mode - 1
    if mat.shape[1] != x.shape[axis]:
        raise ShapeError(
            f"matrix has {mat.shape[1]} columns but mode {mode} has "
            f"extent {x.shape[axis]}"
        )
    new_dims = list(x.shape)
    new_dims[axis] = mat.shape[0]
    return fold(mat @ unfold(x, mode), mode, new_dims)


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = u @ diag(singular_values) @ vt``.

    ``u`` has orthonormal columns with the deterministic sign convention
    described in the module docstring; ``singular_values`` is
    non-negative and non-increasing.
    """

    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray


def svd(m):
    """Thin SVD of a matrix with deterministic factor signs.

    Raises
    ------
    NumericError
        If ``m`` contains non-finite values or the factorization fails
        to converge even under the fallback driver.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={m.ndim}")
    if min(m.shape) < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {m.shape}")
    if not np.isfinite(m).all():
        raise NumericError("matrix contains non-finite entries")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # The divide-and-conquer driver occasionally fails; the slower
        # one-sided driver is more robust.
        try:
            u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except scipy.linalg.LinAlgError as exc:
            raise NumericError(f"SVD failed to converge under both drivers: {exc}") from exc
    # Flip signs so each left singular vector's largest-magnitude entry is
    # positive; argmax takes the first maximum, which settles ties.
    flip = u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])] < 0
    u[:, flip] = -u[:, flip]
    vt[flip, :] = -vt[flip, :]
    return SvdResult(u=u, singular_values=s, vt=vt)
