"""Pure-numpy subspace pursuit kernel (fallback for the compiled extension).

Operates on a column-normalized measurement matrix.  Kept in lockstep with
``_spkernel.pyx``: both must make identical support selections on the same
input, including the lowest-index tie-break.
"""

import numpy as np


def sp_kernel(a_norm, r, k, max_iter, rcond):
    """Run subspace pursuit on a unit-column matrix.

    Returns (support, coefficients, residual_norms) where support is sorted
    ascending, coefficients are the least-squares refit on that support and
    residual_norms holds ||e_0|| .. ||e_stop|| including the rejected final
    iterate when the stop is triggered by a residual increase.
    """
    support = np.empty(0, dtype=np.intp)
    coef = np.empty(0, dtype=complex)
    resid = r
    norms = [float(np.linalg.norm(r))]
    ah = a_norm.conj().T
    for _ in range(max_iter):
        corr = np.abs(ah @ resid)
        cand = np.argsort(-corr, kind="stable")[:k]
        merged = np.union1d(support, cand).astype(np.intp)
        v = np.linalg.lstsq(a_norm[:, merged], r, rcond=rcond)[0]
        keep = np.argsort(-np.abs(v), kind="stable")[:k]
        trimmed = np.sort(merged[keep])
        x = np.linalg.lstsq(a_norm[:, trimmed], r, rcond=rcond)[0]
        e = r - a_norm[:, trimmed] @ x
        nrm = float(np.linalg.norm(e))
        norms.append(nrm)
        if nrm >= norms[-2]:
            break
        support, coef, resid = trimmed, x, e
    return support, coef, np.asarray(norms)
