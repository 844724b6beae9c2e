"""Sparse recovery: subspace pursuit and the least-squares solver.

The subspace pursuit inner loop has two interchangeable kernels: a compiled
Cython extension (``_spkernel``) and a pure-numpy fallback (``_sp_numpy``).
The compiled one is preferred when the extension built; ``active_backend()``
reports which is in use and every entry point accepts ``backend=`` to force
either, which is how the two are benchmarked against each other.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _sp_numpy

try:
    from . import _spkernel

    HAVE_COMPILED = True
except ImportError:  # extension not built; numpy fallback only
    _spkernel = None
    HAVE_COMPILED = False

DEFAULT_RANK_TOL = 1e-10

__all__ = [
    "HAVE_COMPILED",
    "active_backend",
    "NormalizedMatrix",
    "PursuitResult",
    "normalize_columns",
    "least_squares",
    "subspace_pursuit",
]


def active_backend():
    return "compiled" if HAVE_COMPILED else "python"


def _resolve_kernel(backend):
    if backend is None:
        backend = active_backend()
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise ValueError("compiled kernel requested but the extension is not built")
        return _spkernel.sp_kernel, backend
    if backend == "python":
        return _sp_numpy.sp_kernel, backend
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class NormalizedMatrix:
    """Unit-column matrix plus the diagonal scaling that undoes it."""

    normalized: np.ndarray
    scaling: np.ndarray     # per-column reciprocal norms; input @ diag(scaling) = normalized


def normalize_columns(a):
    a = np.asarray(a)
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise ValueError(f"zero column at index {int(np.argmin(norms))}; cannot normalize")
    scaling = 1.0 / norms
    return NormalizedMatrix(normalized=a * scaling, scaling=scaling)


def least_squares(a, r, rank_tol=DEFAULT_RANK_TOL):
    """Minimum-norm least-squares solution of a r = a x.

    Singular values below rank_tol times the largest are treated as zero.
    Returns (x, rank_deficient).
    """
    a = np.asarray(a, dtype=complex)
    r = np.asarray(r, dtype=complex)
    if a.shape[0] != r.shape[0]:
        raise ValueError("row count of the matrix must match the observation length")
    x, _, rank, _ = np.linalg.lstsq(a, r, rcond=rank_tol)
    return x, rank < a.shape[1]


@dataclass(frozen=True)
class PursuitResult:
    """Support, estimate and per-iteration residual norms of one pursuit run."""

    support: np.ndarray
    h_hat: np.ndarray
    residual_norms: np.ndarray

    @property
    def iterations(self):
        return len(self.residual_norms) - 1


def subspace_pursuit(a, r, k_total, max_iter=None, rank_tol=DEFAULT_RANK_TOL,
                     backend=None):
    """Recover a k_total-sparse vector from r = a h by subspace pursuit.

    Columns of `a` are normalized internally; the returned estimate is on
    the original column scaling.  Iterations stop when the refit residual
    stops decreasing (the increasing iterate is discarded) or after
    max_iter iterations, default k_total + 10.
    """
    a = np.asarray(a, dtype=complex)
    r = np.asarray(r, dtype=complex)
    n, m = a.shape
    if r.shape != (n,):
        raise ValueError("observation length must match the matrix row count")
    if not 1 <= k_total <= m:
        raise ValueError("need 1 <= k_total <= number of columns")
    if 2 * k_total > n:
        warnings.warn(
            f"subspace pursuit with 2*k_total={2 * k_total} > rows={n}; "
            "recovery guarantees degrade",
            stacklevel=2,
        )
    if max_iter is None:
        max_iter = k_total + 10

    norm = normalize_columns(a)
    kernel, _ = _resolve_kernel(backend)
    a_norm = np.asfortranarray(norm.normalized)
    support, coef, residual_norms = kernel(a_norm, np.ascontiguousarray(r),
                                           int(k_total), int(max_iter), float(rank_tol))
    h_hat = np.zeros(m, dtype=complex)
    h_hat[support] = norm.scaling[support] * coef
    return PursuitResult(support=support, h_hat=h_hat, residual_norms=residual_norms)
