"""Baseline decompositions and the seeded multi-run study protocol.

Two baselines are provided for comparison against the structured 3D SVD:

* Tucker via HOOI (higher-order orthogonal iteration), initialized from
  the truncated per-mode SVD and swept until the relative-error
  improvement falls below tolerance.
* CPD via ALS (alternating least squares) with seeded random
  initialization, per-sweep column normalization into non-negative
  weights, and a ridge fallback when the normal equations go singular.

``cpd_study`` runs the ALS fit once per seed and aggregates each metric
into a mean and a Student-t 95% confidence half-width, optionally
fanning the runs out over a thread pool; serial and threaded execution
produce identical numbers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import time
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.stats

from . import metrics
from .errors import NumericError
from .tensor_core import as_tensor3, mode_product, svd, unfold

__all__ = [
    "CpModel",
    "CpStudy",
    "TuckerModel",
    "cpd_decompose",
    "cpd_reconstruct",
    "cpd_study",
    "tucker_decompose",
    "tucker_reconstruct",
]

STUDY_METRIC_KEYS = ("psnr_db", "mse", "rel_err", "time_s")


@dataclass(frozen=True)
class TuckerModel:
    """Tucker decomposition with orthonormal factors and a dense core.

    ``fit_history`` holds the relative error after initialization and
    after each completed sweep; HOOI never increases it beyond
    floating-point noise.
    """

    dims: tuple
    rank: int
    factors: tuple
    core: np.ndarray
    fit_history: tuple


@dataclass(frozen=True)
class CpModel:
    """Rank-``rank`` CPD: unit-norm factor columns and non-negative weights.

    ``seed`` records the initialization so a fit can be reproduced
    bit for bit; ``ridge_applied`` flags that at least one least-squares
    step needed diagonal regularization.
    """

    dims: tuple
    rank: int
    factors: tuple
    weights: np.ndarray
    seed: int
    iterations_run: int
    converged: bool
    ridge_applied: bool


@dataclass(frozen=True)
class CpStudy:
    """Aggregated multi-seed CPD runs.

    ``runs`` is a tuple of ``(seed, MetricsReport, elapsed_seconds)``;
    ``mean`` and ``ci_halfwidth`` map each of ``STUDY_METRIC_KEYS`` to the
    sample mean and the 95% Student-t confidence half-width (NaN when
    only one seed was run, 0.0 when all runs agree exactly).
    """

    k: int
    seeds: tuple
    runs: tuple
    mean: dict
    ci_halfwidth: dict


def _check_rank(x, k):
    k = int(k)
    if not 1 <= k <= min(x.shape):
        raise ValueError(
            f"rank must satisfy 1 <= rank <= min(dims) = {min(x.shape)}, got {k}"
        )
    return k


def _check_finite(x):
    if not np.isfinite(x).all():
        raise NumericError("input tensor contains non-finite entries")


def _expand(core, factors):
    y = core
    for mode, u in enumerate(factors, start=1):
        y = mode_product(y, u, mode)
    return y


def _contract(x, factors):
    g = x
    for mode, u in enumerate(factors, start=1):
        g = mode_product(g, u.T, mode)
    return g


def tucker_decompose(x, k, max_iters=50, tol=1e-6):
    """Fit a rank-``(k, k, k)`` Tucker model to ``x`` with HOOI.

    Starts from the truncated per-mode SVD and alternates mode updates
    until the relative-error improvement drops below ``tol`` or
    ``max_iters`` sweeps have run.
    """
    x = as_tensor3(x)
    k = _check_rank(x, k)
    _check_finite(x)
    normx = float(np.linalg.norm(x.ravel()))

    def relerr(factors):
        if normx == 0.0:
            return 0.0
        resid = x - _expand(_contract(x, factors), factors)
        return float(np.linalg.norm(resid.ravel())) / normx

    factors = [svd(unfold(x, mode)).u[:, :k].copy() for mode in (1, 2, 3)]
    history = [relerr(factors)]
    for _ in range(max_iters):
        for mode in (1, 2, 3):
            y = x
            for other in (1, 2, 3):
                if other != mode:
                    y = mode_product(y, factors[other - 1].T, other)
            factors[mode - 1] = svd(unfold(y, mode)).u[:, :k].copy()
        history.append(relerr(factors))
        if history[-2] - history[-1] < tol:
            break
    return TuckerModel(
        dims=x.shape,
        rank=k,
        factors=tuple(factors),
        core=_contract(x, factors),
        fit_history=tuple(history),
    )


def tucker_reconstruct(model, k=None):
    """Expand a Tucker model, optionally truncated to its leading ``k`` levels."""
    if k is None:
        k = model.rank
    k = int(k)
    if not 1 <= k <= model.rank:
        raise ValueError(f"k must satisfy 1 <= k <= {model.rank}, got {k}")
    core = np.ascontiguousarray(model.core[:k, :k, :k])
    return _expand(core, tuple(u[:, :k] for u in model.factors))


def _khatri_rao(hi, lo):
    """Column-wise Khatri-Rao product with the lower mode varying fastest."""
    r = hi.shape[1]
    return (hi[:, None, :] * lo[None, :, :]).reshape(-1, r)


def cpd_decompose(x, k, seed, max_iters=300, tol=1e-6):
    """Fit a rank-``k`` CPD to ``x`` with seeded ALS.

    Factors start as uniform [0, 1) draws from
    ``numpy.random.default_rng(seed)``.  Each sweep solves the three
    normal-equation least-squares problems, then renormalizes factor
    columns into non-negative ``weights``.  Iteration stops when the
    change in relative error between sweeps falls below ``tol`` or after
    ``max_iters`` sweeps.  Singular normal equations get a ``1e-12``
    diagonal ridge and the fit continues with ``ridge_applied`` set.
    """
    x = as_tensor3(x)
    k = _check_rank(x, k)
    _check_finite(x)
    seed = int(seed)
    rng = np.random.default_rng(seed)
    factors = [rng.random((n, k)) for n in x.shape]
    weights = np.ones(k)
    unfoldings = [unfold(x, mode) for mode in (1, 2, 3)]
    normx = float(np.linalg.norm(x.ravel()))
    ridge_applied = False
    prev_err = None
    iterations = 0
    converged = False
    for sweep in range(max_iters):
        for mode in range(3):
            lo, hi = [factors[m] for m in range(3) if m != mode]
            gram = (hi.T @ hi) * (lo.T @ lo)
            rhs = unfoldings[mode] @ _khatri_rao(hi, lo)
            try:
                cho = scipy.linalg.cho_factor(gram)
            except scipy.linalg.LinAlgError:
                gram = gram + 1e-12 * np.eye(k)
                ridge_applied = True
                cho = scipy.linalg.cho_factor(gram)
            factors[mode] = scipy.linalg.cho_solve(cho, rhs.T).T
        norms = [np.linalg.norm(f, axis=0) for f in factors]
        weights = norms[0] * norms[1] * norms[2]
        for f, n in zip(factors, norms):
            f /= np.where(n == 0.0, 1.0, n)
        iterations = sweep + 1
        resid = x - np.einsum(
            "r,ir,jr,kr->ijk", weights, *factors, optimize=True
        )
        err = float(np.linalg.norm(resid.ravel())) / (normx if normx else 1.0)
        if prev_err is not None and abs(prev_err - err) < tol:
            converged = True
            break
        prev_err = err
    return CpModel(
        dims=x.shape,
        rank=k,
        factors=tuple(factors),
        weights=weights,
        seed=seed,
        iterations_run=iterations,
        converged=converged,
        ridge_applied=ridge_applied,
    )


def cpd_reconstruct(model):
    """Sum of the model's weighted rank-one terms."""
    return np.einsum(
        "r,ir,jr,kr->ijk", model.weights, *model.factors, optimize=True
    )


def _study_run(x, k, seed, max_iters, tol):
    try:
        start = time.perf_counter()
        model = cpd_decompose(x, k, seed, max_iters=max_iters, tol=tol)
        elapsed = time.perf_counter() - start
        xhat = cpd_reconstruct(model)
        report = metrics.MetricsReport(
            method="cpd",
            k=k,
            psnr_db=metrics.psnr(x, xhat),
            mse=metrics.mse(x, xhat),
            rel_err=metrics.rel_err(x, xhat),
            per=None,
            elapsed_seconds=elapsed,
        )
    except Exception as exc:
        raise NumericError(f"cpd study run failed for seed {seed}: {exc}") from exc
    return seed, report, elapsed


def _aggregate(values):
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    mean = float(np.mean(values))
    if n < 2:
        return mean, math.nan
    if np.all(values == values[0]):
        return mean, 0.0
    sd = float(np.std(values, ddof=1))
    quantile = float(scipy.stats.t.ppf(0.975, n - 1))
    return mean, quantile * sd / math.sqrt(n)


def cpd_study(x, k, seeds, max_iters=300, tol=1e-6, threads=None):
    """Run one CPD fit per seed and aggregate the metrics.

    ``threads`` > 1 distributes the independent runs over a thread pool;
    results are identical to serial execution apart from wall-clock
    timings.  A failing run aborts the study, naming its seed.
    """
    x = as_tensor3(x)
    k = _check_rank(x, k)
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("seeds must be a non-empty sequence")
    if threads is not None and int(threads) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            runs = tuple(
                pool.map(lambda s: _study_run(x, k, s, max_iters, tol), seeds)
            )
    else:
        runs = tuple(_study_run(x, k, s, max_iters, tol) for s in seeds)
    samples = {
        "psnr_db": [report.psnr_db for _, report, _ in runs],
        "mse": [report.mse for _, report, _ in runs],
        "rel_err": [report.rel_err for _, report, _ in runs],
        "time_s": [elapsed for _, _, elapsed in runs],
    }
    mean = {}
    halfwidth = {}
    for key in STUDY_METRIC_KEYS:
        mean[key], halfwidth[key] = _aggregate(samples[key])
    return CpStudy(k=k, seeds=seeds, runs=runs, mean=mean, ci_halfwidth=halfwidth)
