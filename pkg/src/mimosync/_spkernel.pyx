# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled subspace pursuit kernel.

Same contract as ``_sp_numpy.sp_kernel``: column-normalized Fortran-ordered
matrix in, (support, coefficients, residual_norms) out.  Inner least-squares
solves use QR (zgels) with an SVD min-norm fallback (zgelss) whenever the
QR solve fails or returns non-finite values, matching the numpy fallback's
lstsq semantics on the well-conditioned subproblems the pursuit visits.
Support selections use a strict greater-than scan so exact magnitude ties
resolve to the lowest index, as a stable descending argsort does.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite
from scipy.linalg.cython_blas cimport zaxpy, zcopy, zgemv, dznrm2
from scipy.linalg.cython_lapack cimport zgels, zgelss

cnp.import_array()

ctypedef double complex zcomplex


cdef inline double _sqabs(zcomplex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _select_top(double* mag, Py_ssize_t n, Py_ssize_t k,
                      cnp.intp_t* out, cnp.uint8_t* taken) noexcept nogil:
    """Indices of the k largest entries of mag, lowest index on ties."""
    cdef Py_ssize_t pick, j, best
    cdef double bestv
    for j in range(n):
        taken[j] = 0
    for pick in range(k):
        best = 0
        bestv = -1.0
        for j in range(n):
            if not taken[j] and mag[j] > bestv:
                bestv = mag[j]
                best = j
        out[pick] = best
        taken[best] = 1


cdef int _solve_ls(zcomplex* a_norm, int n, cnp.intp_t* idx, int p,
                   zcomplex* r, zcomplex* asub, zcomplex* b, int maxnb,
                   double* sval, double rcond, zcomplex* work, int lwork,
                   double* rwork) except -1:
    """Min-norm LS solve on columns idx[0..p) of a_norm; solution in b[0..p)."""
    cdef int one = 1, nrhs = 1, info = 0, rank = 0
    cdef int t
    cdef bint ok

    for t in range(p):
        zcopy(&n, a_norm + idx[t] * n, &one, asub + t * n, &one)
    zcopy(&n, r, &one, b, &one)
    zgels("N", &n, &p, &nrhs, asub, &n, b, &maxnb, work, &lwork, &info)
    ok = info == 0
    if ok:
        for t in range(p):
            if not (isfinite(b[t].real) and isfinite(b[t].imag)):
                ok = False
                break
    if ok:
        return 0

    # Rank-deficient or failed QR path: SVD min-norm solve on fresh copies.
    for t in range(p):
        zcopy(&n, a_norm + idx[t] * n, &one, asub + t * n, &one)
    zcopy(&n, r, &one, b, &one)
    zgelss(&n, &p, &nrhs, asub, &n, b, &maxnb, sval, &rcond, &rank,
           work, &lwork, rwork, &info)
    if info != 0:
        raise np.linalg.LinAlgError("least-squares subproblem did not converge")
    return 0


def sp_kernel(zcomplex[::1, :] a_norm, zcomplex[::1] r, int k, int max_iter,
              double rcond):
    cdef int n = <int> a_norm.shape[0]
    cdef int m = <int> a_norm.shape[1]
    cdef int cap = 2 * k if 2 * k < m else m
    cdef int maxnb = n if n > cap else cap
    cdef int one = 1, nrhs = 1, info = 0, rank = 0
    cdef int p, i, j, t, it, n_supp
    cdef zcomplex zone = 1.0, zzero = 0.0, zneg
    cdef double nrm, prev

    corr_arr = np.empty(m, dtype=np.complex128)
    mag_arr = np.empty(m, dtype=np.float64)
    taken_arr = np.empty(m, dtype=np.uint8)
    member_arr = np.zeros(m, dtype=np.uint8)
    cand_arr = np.empty(cap, dtype=np.intp)
    merged_arr = np.empty(cap, dtype=np.intp)
    supp_arr = np.empty(k, dtype=np.intp)
    newsupp_arr = np.empty(k, dtype=np.intp)
    keep_arr = np.empty(k, dtype=np.intp)
    asub_arr = np.empty((n, cap), dtype=np.complex128, order="F")
    b_arr = np.empty(maxnb, dtype=np.complex128)
    vmag_arr = np.empty(cap, dtype=np.float64)
    sval_arr = np.empty(min(n, cap), dtype=np.float64)
    rwork_arr = np.empty(5 * min(n, cap), dtype=np.float64)
    e_arr = np.empty(n, dtype=np.complex128)
    xprev_arr = np.empty(k, dtype=np.complex128)

    cdef zcomplex[::1] corr = corr_arr
    cdef double[::1] mag = mag_arr
    cdef cnp.uint8_t[::1] taken = taken_arr
    cdef cnp.uint8_t[::1] member = member_arr
    cdef cnp.intp_t[::1] cand = cand_arr
    cdef cnp.intp_t[::1] merged = merged_arr
    cdef cnp.intp_t[::1] supp = supp_arr
    cdef cnp.intp_t[::1] newsupp = newsupp_arr
    cdef cnp.intp_t[::1] keep = keep_arr
    cdef zcomplex[::1, :] asub = asub_arr
    cdef zcomplex[::1] b = b_arr
    cdef double[::1] vmag = vmag_arr
    cdef double[::1] sval = sval_arr
    cdef double[::1] rwork = rwork_arr
    cdef zcomplex[::1] e = e_arr
    cdef zcomplex[::1] xprev = xprev_arr

    # Workspace: large enough for both zgels and zgelss at the widest solve.
    cdef int lwork = -1
    cdef zcomplex wq_gels, wq_gelss
    cdef int nn = cap
    zgels("N", &n, &nn, &nrhs, &asub[0, 0], &n, &b[0], &maxnb, &wq_gels,
          &lwork, &info)
    zgelss(&n, &nn, &nrhs, &asub[0, 0], &n, &b[0], &maxnb, &sval[0], &rcond,
           &rank, &wq_gelss, &lwork, &rwork[0], &info)
    lwork = <int> max(wq_gels.real, wq_gelss.real)
    work_arr = np.empty(lwork, dtype=np.complex128)
    cdef zcomplex[::1] work = work_arr

    # State: e holds the residual of the accepted support.
    zcopy(&n, &r[0], &one, &e[0], &one)
    norms = [float(dznrm2(&n, &e[0], &one))]
    prev = norms[0]
    n_supp = 0

    for it in range(max_iter):
        # Correlate all columns with the current residual.
        zgemv("C", &n, &m, &zone, &a_norm[0, 0], &n, &e[0], &one, &zzero,
              &corr[0], &one)
        for j in range(m):
            mag[j] = _sqabs(corr[j])
        _select_top(&mag[0], m, k, &cand[0], &taken[0])

        # Union of the accepted support with the new candidates, ascending.
        for i in range(n_supp):
            member[supp[i]] = 1
        for i in range(k):
            member[cand[i]] = 1
        p = 0
        for j in range(m):
            if member[j]:
                merged[p] = j
                p += 1
                member[j] = 0

        # Min-norm least squares on the merged columns.
        _solve_ls(&a_norm[0, 0], n, &merged[0], p, &r[0], &asub[0, 0], &b[0],
                  maxnb, &sval[0], rcond, &work[0], lwork, &rwork[0])

        # Prune to the k largest coefficients; sorted global indices.
        for t in range(p):
            vmag[t] = _sqabs(b[t])
        _select_top(&vmag[0], p, k, &keep[0], &taken[0])
        for i in range(k):
            member[merged[keep[i]]] = 1
        t = 0
        for j in range(m):
            if member[j]:
                newsupp[t] = j
                t += 1
                member[j] = 0

        # Refit on the pruned support and update the residual.
        _solve_ls(&a_norm[0, 0], n, &newsupp[0], k, &r[0], &asub[0, 0], &b[0],
                  maxnb, &sval[0], rcond, &work[0], lwork, &rwork[0])
        zcopy(&n, &r[0], &one, &e[0], &one)
        for t in range(k):
            zneg = -b[t]
            zaxpy(&n, &zneg, &a_norm[0, newsupp[t]], &one, &e[0], &one)
        nrm = dznrm2(&n, &e[0], &one)
        norms.append(float(nrm))

        if nrm >= prev:
            break
        for t in range(k):
            supp[t] = newsupp[t]
            xprev[t] = b[t]
        n_supp = k
        prev = nrm

    support = np.asarray(supp_arr[:n_supp]).copy()
    coef = np.asarray(xprev_arr[:n_supp]).copy()
    return support, coef, np.asarray(norms)
