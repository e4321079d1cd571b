"""Binary volume/model file formats and synthetic volume generation.

Both formats are little-endian with fixed headers:

* Volume (magic ``S3DV``): u16 format version, u16 dtype code
  (0 = float32, 1 = float64), three u32 dims, then the payload in
  C order (mode-3 index fastest).
* Model (magic ``S3DM``): u16 format version, u16 method code
  (0 = s3dsvd, 1 = tucker, 2 = cpd), three u32 dims, u32 rank, the three
  factor matrices as column-major float64, then a method payload:
  core (C order) plus qsigma for s3dsvd, core alone for tucker, weights
  plus a u64 seed for cpd.

Factors are stored column-major and qsigma-ordered, so reading a prefix
of ``j`` columns per mode plus the leading ``j^3`` core block yields the
same reconstruction as truncating the fully parsed model.
"""

import struct

import numpy as np

from .baselines import CpModel, TuckerModel
from .errors import DegenerateInputError, NumericError, ParseError, ShapeError
from .s3dsvd import S3dModel
from .tensor_core import as_tensor3, mode_product

__all__ = [
    "gen_synthetic",
    "model_from_bytes",
    "model_to_bytes",
    "normalize_01",
    "read_model",
    "read_volume",
    "volume_from_bytes",
    "volume_to_bytes",
    "write_model",
    "write_volume",
]

VOLUME_MAGIC = b"S3DV"
MODEL_MAGIC = b"S3DM"
FORMAT_VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_NAMES = {"float32": 0, "float64": 1}
_METHOD_CODES = {"s3dsvd": 0, "tucker": 1, "cpd": 2}
_METHOD_NAMES = {code: name for name, code in _METHOD_CODES.items()}


def _check_payload_finite(x, what):
    if not np.isfinite(x).all():
        index = int(np.flatnonzero(~np.isfinite(x.ravel()))[0])
        raise NumericError(f"{what} contains a non-finite value at flat index {index}")


def volume_to_bytes(x, dtype="float64"):
    """Serialize a volume; ``dtype`` picks the payload precision."""
    x = as_tensor3(x)
    _check_payload_finite(x, "volume")
    if dtype not in _DTYPE_NAMES:
        raise ValueError(f"dtype must be float32 or float64, got {dtype!r}")
    code = _DTYPE_NAMES[dtype]
    header = VOLUME_MAGIC + struct.pack("<HHIII", FORMAT_VERSION, code, *x.shape)
    return header + np.ascontiguousarray(x, dtype=_DTYPE_CODES[code]).tobytes(order="C")


def volume_from_bytes(data):
    """Parse a serialized volume back into a float64 tensor."""
    if len(data) < 20:
        raise ParseError(
            f"volume header needs 20 bytes, found {len(data)}", offset=len(data)
        )
    if data[:4] != VOLUME_MAGIC:
        raise ParseError(f"bad volume magic {data[:4]!r}", offset=0)
    version, code = struct.unpack_from("<HH", data, 4)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {version}", offset=4)
    if code not in _DTYPE_CODES:
        raise ParseError(f"unknown dtype code {code}", offset=6)
    dims = struct.unpack_from("<III", data, 8)
    if min(dims) < 1:
        raise ParseError(f"dimensions must be positive, got {dims}", offset=8)
    dtype = _DTYPE_CODES[code]
    expected = 20 + dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(data) != expected:
        raise ParseError(
            f"payload size mismatch: expected {expected} bytes, found {len(data)}",
            offset=min(len(data), expected),
        )
    flat = np.frombuffer(data, dtype=dtype, count=dims[0] * dims[1] * dims[2], offset=20)
    x = flat.astype(np.float64).reshape(dims)
    _check_payload_finite(x, "volume payload")
    return x


def write_volume(path, x, dtype="float64"):
    with open(path, "wb") as fh:
        fh.write(volume_to_bytes(x, dtype=dtype))


def read_volume(path):
    with open(path, "rb") as fh:
        return volume_from_bytes(fh.read())


def _factor_bytes(factors):
    return b"".join(np.asarray(u, dtype="<f8").tobytes(order="F") for u in factors)


def model_to_bytes(model):
    """Serialize a decomposition model; the method is inferred from its type."""
    if isinstance(model, S3dModel):
        method, rank = "s3dsvd", model.r
        payload = (
            np.ascontiguousarray(model.core, dtype="<f8").tobytes(order="C")
            + np.asarray(model.qsigma, dtype="<f8").tobytes()
        )
    elif isinstance(model, TuckerModel):
        method, rank = "tucker", model.rank
        payload = np.ascontiguousarray(model.core, dtype="<f8").tobytes(order="C")
    elif isinstance(model, CpModel):
        method, rank = "cpd", model.rank
        payload = np.asarray(model.weights, dtype="<f8").tobytes() + struct.pack(
            "<Q", model.seed
        )
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    header = MODEL_MAGIC + struct.pack(
        "<HHIIII", FORMAT_VERSION, _METHOD_CODES[method], *model.dims, rank
    )
    return header + _factor_bytes(model.factors) + payload


def _take_floats(data, pos, count, what):
    end = pos + 8 * count
    if end > len(data):
        raise ParseError(
            f"truncated {what}: expected {8 * count} bytes", offset=len(data)
        )
    return np.frombuffer(data, dtype="<f8", count=count, offset=pos).copy(), end


def model_from_bytes(data, level=None):
    """Parse a serialized model, optionally truncated to its first ``level`` terms.

    A level-``j`` read keeps the leading ``j`` factor columns per mode and
    the leading ``j^3`` core block (s3dsvd and tucker only); it
    reconstructs identically to truncating the fully parsed model.
    """
    if len(data) < 24:
        raise ParseError(
            f"model header needs 24 bytes, found {len(data)}", offset=len(data)
        )
    if data[:4] != MODEL_MAGIC:
        raise ParseError(f"bad model magic {data[:4]!r}", offset=0)
    version, code = struct.unpack_from("<HH", data, 4)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {version}", offset=4)
    if code not in _METHOD_NAMES:
        raise ParseError(f"unknown method code {code}", offset=6)
    method = _METHOD_NAMES[code]
    *dims, rank = struct.unpack_from("<IIII", data, 8)
    dims = tuple(dims)
    if min(dims) < 1 or not 1 <= rank <= min(dims):
        raise ParseError(f"invalid dims {dims} / rank {rank}", offset=8)
    pos = 24
    factors = []
    for n in dims:
        flat, pos = _take_floats(data, pos, n * rank, "factor matrix")
        factors.append(flat.reshape((n, rank), order="F"))
    factors = tuple(factors)
    if method == "s3dsvd":
        core_flat, pos = _take_floats(data, pos, rank**3, "core tensor")
        qsigma, pos = _take_floats(data, pos, rank, "qsigma")
        core = core_flat.reshape((rank, rank, rank))
        model = S3dModel(dims=dims, r=rank, factors=factors, core=core, qsigma=qsigma)
    elif method == "tucker":
        core_flat, pos = _take_floats(data, pos, rank**3, "core tensor")
        core = core_flat.reshape((rank, rank, rank))
        model = TuckerModel(
            dims=dims, rank=rank, factors=factors, core=core, fit_history=()
        )
    else:
        weights, pos = _take_floats(data, pos, rank, "weights")
        if pos + 8 > len(data):
            raise ParseError("truncated seed: expected 8 bytes", offset=len(data))
        (seed,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        model = CpModel(
            dims=dims,
            rank=rank,
            factors=factors,
            weights=weights,
            seed=seed,
            iterations_run=0,
            converged=False,
            ridge_applied=False,
        )
    if pos != len(data):
        raise ParseError(f"trailing bytes after model payload", offset=pos)
    if level is None:
        return model
    return _truncate_model(model, int(level))


def _truncate_model(model, level):
    if isinstance(model, CpModel):
        raise ValueError("cpd models reconstruct at their fitted rank; level is not supported")
    rank = model.r if isinstance(model, S3dModel) else model.rank
    if not 1 <= level <= rank:
        raise ValueError(f"level must satisfy 1 <= level <= {rank}, got {level}")
    factors = tuple(u[:, :level].copy() for u in model.factors)
    core = np.ascontiguousarray(model.core[:level, :level, :level])
    if isinstance(model, S3dModel):
        return S3dModel(
            dims=model.dims,
            r=level,
            factors=factors,
            core=core,
            qsigma=model.qsigma[:level].copy(),
        )
    return TuckerModel(
        dims=model.dims, rank=level, factors=factors, core=core, fit_history=()
    )


def write_model(path, model):
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def read_model(path, level=None):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read(), level=level)


def normalize_01(x):
    """Affinely rescale ``x`` onto [0, 1]; constant volumes are degenerate."""
    x = as_tensor3(x)
    lo = float(np.min(x))
    hi = float(np.max(x))
    if hi == lo:
        raise DegenerateInputError("cannot normalize a constant volume")
    return (x - lo) / (hi - lo)


def gen_synthetic(kind, dims, seed=0, rho=4, blobs=32, noise=0.05):
    """Generate a deterministic synthetic volume.

    Kinds
    -----
    ``multirank``
        Exact multilinear rank ``(rho, rho, rho)``: a random Gaussian core
        expanded through per-mode orthonormal factors.
    ``blobs``
        Sum of ``blobs`` separable anisotropic Gaussian bumps (each an
        exact rank-one term) with random centers, widths, and amplitudes,
        scaled so the maximum is exactly 1 and values stay in [0, 1].
    ``blobs_noisy``
        The ``blobs`` volume plus uniform noise in [-noise, noise],
        clipped back to [0, 1].
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ShapeError(f"dims must be three positive integers, got {dims}")
    rng = np.random.default_rng(int(seed))
    if kind == "multirank":
        rho = int(rho)
        if not 1 <= rho <= min(dims):
            raise ValueError(
                f"rho must satisfy 1 <= rho <= min(dims) = {min(dims)}, got {rho}"
            )
        factors = [np.linalg.qr(rng.standard_normal((n, rho)))[0] for n in dims]
        x = rng.standard_normal((rho, rho, rho))
        for mode, q in enumerate(factors, start=1):
            x = mode_product(x, q, mode)
        return x
    if kind in ("blobs", "blobs_noisy"):
        blobs = int(blobs)
        if blobs < 1:
            raise ValueError(f"blobs must be at least 1, got {blobs}")
        noise = float(noise)
        if noise < 0.0:
            raise ValueError(f"noise must be non-negative, got {noise}")
        profiles = [np.zeros((n, blobs)) for n in dims]
        grids = [np.arange(n, dtype=np.float64) for n in dims]
        for b in range(blobs):
            amp = rng.uniform(0.5, 1.0)
            centers = [rng.uniform(0.25, 0.75) * (n - 1) for n in dims]
            widths = [rng.uniform(0.05, 0.2) * n for n in dims]
            for mode in range(3):
                profile = np.exp(
                    -((grids[mode] - centers[mode]) ** 2) / (2.0 * widths[mode] ** 2)
                )
                if mode == 0:
                    profile = amp * profile
                profiles[mode][:, b] = profile
        x = np.einsum("ib,jb,kb->ijk", *profiles, optimize=True)
        x /= np.max(x)
        if kind == "blobs_noisy":
            x = np.clip(x + rng.uniform(-noise, noise, size=dims), 0.0, 1.0)
        return np.ascontiguousarray(x)
    raise ValueError(f"unknown kind {kind!r}; expected multirank, blobs, or blobs_noisy")
