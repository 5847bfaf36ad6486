# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels for Schrodinger and GKSL evolution.

Hot loops over the merged-CSR representation of A(t) = -iH(t) - G/2 plus
one-nonzero-per-row jump maps (see plan.py).  The inner arithmetic lives in
_hotloops.h as restrict-qualified vectorizable C; the transposed product
(y A^dag) is blocked over four output rows through a packed scratch so it
runs on contiguous SIMD lanes.  Work is partitioned by row block with a
fixed per-row accumulation order, so results are bitwise reproducible and
independent of the thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, threadid
from libc.math cimport cos, sin

USING_COMPILED = True

ctypedef double complex cplx

cdef extern from "_hotloops.h" nogil:
    void pg_caxpy(double* kr, const double* ys, double vr, double vi, Py_ssize_t n)
    void pg_pack4(double* yt, const double* y0, const double* y1,
                  const double* y2, const double* y3, Py_ssize_t n)
    void pg_scan4(const double* yt, const int* cols, const double* vals,
                  Py_ssize_t nnz, double* out0, double* out1, double* out2,
                  double* out3, Py_ssize_t r)
    void pg_scan1(const double* yi, const int* cols, const double* vals,
                  Py_ssize_t nnz, double* out, Py_ssize_t r)
    void pg_jump(double* kr, const double* ys, const int* cj, const int* cs,
                 const double* cv, Py_ssize_t n, double wr, double wi)
    void pg_jump_run(double* kr, const double* ys, const double* cv,
                     Py_ssize_t n, double wr, double wi)
    void pg_stage_first(double* acc, double* out, const double* base,
                        const double* k, double wa, double cb, Py_ssize_t n2)
    void pg_stage_mid(double* acc, double* out, const double* base,
                      const double* k, double wa, double cb, Py_ssize_t n2)
    void pg_stage_last(const double* acc, double* out, const double* k,
                       double wa, Py_ssize_t n2)
    void pg_zero(double* kr, Py_ssize_t n2)
    void pg_scan1_noconj(const double* yi, const int* cols, const double* vals,
                         Py_ssize_t nnz, double* out, Py_ssize_t r)


cdef inline void _rebuild(cplx[::1] vals, cplx[::1] static_vals,
                          double[::1] gfreq, int[::1] gptr,
                          int[::1] gslots, cplx[::1] gvals, double t) nogil:
    cdef Py_ssize_t n = vals.shape[0]
    cdef Py_ssize_t i
    cdef int g, lo, hi, k
    cdef double arg
    cdef cplx ph
    for i in range(n):
        vals[i] = static_vals[i]
    for g in range(gfreq.shape[0]):
        arg = gfreq[g] * t
        ph = cos(arg) + 1j * sin(arg)
        lo = gptr[g]; hi = gptr[g + 1]
        for k in range(lo, hi):
            vals[gslots[k]] = vals[gslots[k]] + ph * gvals[k]


cdef void _stage_dm(Py_ssize_t dim, double* Y, double* BASE, double* ACC, double* OUT,
                    int stage_kind, double wa, double cb,
                    int[::1] indptr, int[::1] indices, double* vals_d,
                    Py_ssize_t n_chan, int[:, ::1] jsrc, cplx[:, ::1] jrval,
                    int[::1] jptr, int[::1] jcj, int[::1] jcs, double* jcv_d,
                    int[::1] jrun_ptr, int[::1] jrun_j0, int[::1] jrun_s0,
                    int[::1] jrun_off, int[::1] jrun_len,
                    double* KR, double* YT, int n_threads) nogil:
    """One RK4 stage: k = A y + y A^dag + jumps(y), then the stage update.

    stage_kind: 0 first (acc = base + wa k), 1 middle (acc += wa k),
    2 last (OUT = acc + wa k, cb unused).  Y is the stage input, BASE the
    step's starting state, OUT the next stage input (or final state).
    """
    cdef Py_ssize_t nblocks = (dim + 3) // 4
    cdef Py_ssize_t b, i0, nb, r, i, off
    cdef int idx, lo, hi, c, si
    cdef double vr, vi
    cdef double* kr
    cdef double* yt
    cdef double* krr
    cdef Py_ssize_t tid

    for b in prange(nblocks, schedule='static', num_threads=n_threads):
        tid = threadid()
        kr = KR + tid * 8 * dim
        yt = YT + tid * 8 * dim
        i0 = 4 * b
        nb = dim - i0
        if nb > 4:
            nb = 4
        pg_zero(kr, 2 * dim * nb)

        # (A y)[i, :] for each row of the block - contiguous axpys
        for r in range(nb):
            i = i0 + r
            krr = kr + 2 * dim * r
            lo = indptr[i]; hi = indptr[i + 1]
            for idx in range(lo, hi):
                vr = vals_d[2 * idx]; vi = vals_d[2 * idx + 1]
                pg_caxpy(krr, Y + 2 * dim * <Py_ssize_t> indices[idx], vr, vi, dim)

        # (y A^dag)[i, r] = sum_s y[i, s] conj(A[r, s]) - packed 4-row form
        if nb == 4:
            pg_pack4(yt, Y + 2 * dim * i0, Y + 2 * dim * (i0 + 1),
                     Y + 2 * dim * (i0 + 2), Y + 2 * dim * (i0 + 3), dim)
            for r in range(dim):
                lo = indptr[r]; hi = indptr[r + 1]
                if hi > lo:
                    pg_scan4(yt, &indices[lo], vals_d + 2 * lo, hi - lo,
                             kr, kr + 2 * dim, kr + 4 * dim, kr + 6 * dim, r)
        else:
            for r in range(nb):
                i = i0 + r
                krr = kr + 2 * dim * r
                for idx in range(dim):
                    lo = indptr[idx]; hi = indptr[idx + 1]
                    if hi > lo:
                        pg_scan1(Y + 2 * dim * i, &indices[lo], vals_d + 2 * lo,
                                 hi - lo, krr, idx)

        # jump channels and the stage update, row by row
        for r in range(nb):
            i = i0 + r
            krr = kr + 2 * dim * r
            for c in range(n_chan):
                si = jsrc[c, i]
                if si >= 0:
                    lo = jrun_ptr[c]; hi = jrun_ptr[c + 1]
                    for idx in range(lo, hi):
                        pg_jump_run(krr + 2 * <Py_ssize_t> jrun_j0[idx],
                                    Y + 2 * (dim * <Py_ssize_t> si + jrun_s0[idx]),
                                    jcv_d + 2 * <Py_ssize_t> jrun_off[idx],
                                    jrun_len[idx],
                                    jrval[c, i].real, jrval[c, i].imag)
            off = 2 * dim * i
            if stage_kind == 0:
                pg_stage_first(ACC + off, OUT + off, BASE + off, krr, wa, cb, 2 * dim)
            elif stage_kind == 1:
                pg_stage_mid(ACC + off, OUT + off, BASE + off, krr, wa, cb, 2 * dim)
            else:
                pg_stage_last(ACC + off, OUT + off, krr, wa, 2 * dim)


def advance_dm(int[::1] indptr, int[::1] indices, cplx[::1] static_vals,
               double[::1] gfreq, int[::1] gptr, int[::1] gslots, cplx[::1] gvals,
               int[:, ::1] jsrc, cplx[:, ::1] jrval,
               int[::1] jptr, int[::1] jcj, int[::1] jcs, cplx[::1] jcv,
               int[::1] jrun_ptr, int[::1] jrun_j0, int[::1] jrun_s0,
               int[::1] jrun_off, int[::1] jrun_len,
               cplx[:, ::1] rho, cplx[:, ::1] acc,
               cplx[:, ::1] ya, cplx[:, ::1] yb,
               double t0, double dt, Py_ssize_t n_steps, int n_threads):
    """Advance a density matrix by n_steps of classical RK4, in place."""
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t n_chan = jsrc.shape[0]
    cdef cnp.ndarray vals_arr = np.empty(static_vals.shape[0], dtype=np.complex128)
    cdef cplx[::1] vals = vals_arr
    cdef cnp.ndarray kr_arr = np.empty((n_threads, 8 * dim), dtype=np.float64)
    cdef double[:, ::1] krows = kr_arr
    cdef cnp.ndarray yt_arr = np.empty((n_threads, 8 * dim), dtype=np.float64)
    cdef double[:, ::1] ytp = yt_arr

    cdef double* RHO = <double*> &rho[0, 0]
    cdef double* ACC = <double*> &acc[0, 0]
    cdef double* YA = <double*> &ya[0, 0]
    cdef double* YB = <double*> &yb[0, 0]
    cdef double* KR = &krows[0, 0]
    cdef double* YT = &ytp[0, 0]
    cdef double* vals_d = <double*> &vals[0]
    cdef double* jcv_d = NULL
    if jcv.shape[0] > 0:
        jcv_d = <double*> &jcv[0]

    cdef Py_ssize_t step
    cdef double t
    cdef double w1 = dt / 6.0, w2 = dt / 3.0, c12 = dt / 2.0

    for step in range(n_steps):
        t = t0 + step * dt
        with nogil:
            # k1: acc = rho + dt/6 k1; ya = rho + dt/2 k1
            _rebuild(vals, static_vals, gfreq, gptr, gslots, gvals, t)
            _stage_dm(dim, RHO, RHO, ACC, YA, 0, w1, c12, indptr, indices, vals_d,
                      n_chan, jsrc, jrval, jptr, jcj, jcs, jcv_d,
                      jrun_ptr, jrun_j0, jrun_s0, jrun_off, jrun_len, KR, YT, n_threads)
            # k2: acc += dt/3 k2; yb = rho + dt/2 k2
            _rebuild(vals, static_vals, gfreq, gptr, gslots, gvals, t + c12)
            _stage_dm(dim, YA, RHO, ACC, YB, 1, w2, c12, indptr, indices, vals_d,
                      n_chan, jsrc, jrval, jptr, jcj, jcs, jcv_d,
                      jrun_ptr, jrun_j0, jrun_s0, jrun_off, jrun_len, KR, YT, n_threads)
            # k3 (same A values): acc += dt/3 k3; ya = rho + dt k3
            _stage_dm(dim, YB, RHO, ACC, YA, 1, w2, dt, indptr, indices, vals_d,
                      n_chan, jsrc, jrval, jptr, jcj, jcs, jcv_d,
                      jrun_ptr, jrun_j0, jrun_s0, jrun_off, jrun_len, KR, YT, n_threads)
            # k4: rho = acc + dt/6 k4
            _rebuild(vals, static_vals, gfreq, gptr, gslots, gvals, t + dt)
            _stage_dm(dim, YA, RHO, ACC, RHO, 2, w1, 0.0, indptr, indices, vals_d,
                      n_chan, jsrc, jrval, jptr, jcj, jcs, jcv_d,
                      jrun_ptr, jrun_j0, jrun_s0, jrun_off, jrun_len, KR, YT, n_threads)


cdef inline void _matvec(Py_ssize_t dim, int[::1] indptr, int[::1] indices,
                         double* vals_d, double* x, double* out) nogil:
    cdef Py_ssize_t i
    cdef int lo, hi
    for i in range(dim):
        out[2 * i] = 0.0
        out[2 * i + 1] = 0.0
        lo = indptr[i]; hi = indptr[i + 1]
        if hi > lo:
            pg_scan1_noconj(x, &indices[lo], vals_d + 2 * lo, hi - lo, out, i)


def advance_ket(int[::1] indptr, int[::1] indices, cplx[::1] static_vals,
                double[::1] gfreq, int[::1] gptr, int[::1] gslots, cplx[::1] gvals,
                cplx[::1] psi, double t0, double dt, Py_ssize_t n_steps):
    """Advance a state vector by n_steps of classical RK4, in place."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef cnp.ndarray vals_arr = np.empty(static_vals.shape[0], dtype=np.complex128)
    cdef cplx[::1] vals = vals_arr
    cdef cnp.ndarray work_arr = np.empty((3, 2 * dim), dtype=np.float64)
    cdef double[:, ::1] work = work_arr
    cdef double* PSI = <double*> &psi[0]
    cdef double* K = &work[0, 0]
    cdef double* Y = &work[1, 0]
    cdef double* ACC = &work[2, 0]
    cdef double* vals_d = <double*> &vals[0]

    cdef Py_ssize_t step, j
    cdef double t
    cdef double w1 = dt / 6.0, w2 = dt / 3.0, c12 = dt / 2.0

    with nogil:
        for step in range(n_steps):
            t = t0 + step * dt

            _rebuild(vals, static_vals, gfreq, gptr, gslots, gvals, t)
            _matvec(dim, indptr, indices, vals_d, PSI, K)
            pg_stage_first(ACC, Y, PSI, K, w1, c12, 2 * dim)

            _rebuild(vals, static_vals, gfreq, gptr, gslots, gvals, t + c12)
            _matvec(dim, indptr, indices, vals_d, Y, K)
            pg_stage_mid(ACC, Y, PSI, K, w2, c12, 2 * dim)

            _matvec(dim, indptr, indices, vals_d, Y, K)
            pg_stage_mid(ACC, Y, PSI, K, w2, dt, 2 * dim)

            _rebuild(vals, static_vals, gfreq, gptr, gslots, gvals, t + dt)
            _matvec(dim, indptr, indices, vals_d, Y, K)
            pg_stage_last(ACC, PSI, K, w1, 2 * dim)
