/* Vectorizable inner loops for the RK4 kernels.
 *
 * All complex data is addressed as de-interleaved (re, im) double pairs;
 * `restrict` plus `omp simd` lets the compiler emit packed FMA code, which
 * the generic complex-typed loops do not achieve.
 */
#ifndef PARITYGATE_HOTLOOPS_H
#define PARITYGATE_HOTLOOPS_H

#include <stddef.h>

/* kr[j] += (vr + i vi) * ys[j] over n complex elements */
static inline void pg_caxpy(double *restrict kr, const double *restrict ys,
                            double vr, double vi, ptrdiff_t n)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n; ++j) {
        double ar = ys[2 * j], ai = ys[2 * j + 1];
        kr[2 * j] += vr * ar - vi * ai;
        kr[2 * j + 1] += vr * ai + vi * ar;
    }
}

/* Transpose 4 matrix rows into blocked split-layout scratch:
 * yt[c*8 + b] = Re row_b[c], yt[c*8 + 4 + b] = Im row_b[c]. */
static inline void pg_pack4(double *restrict yt, const double *restrict y0,
                            const double *restrict y1, const double *restrict y2,
                            const double *restrict y3, ptrdiff_t n)
{
    ptrdiff_t c;
    for (c = 0; c < n; ++c) {
        yt[8 * c + 0] = y0[2 * c];
        yt[8 * c + 1] = y1[2 * c];
        yt[8 * c + 2] = y2[2 * c];
        yt[8 * c + 3] = y3[2 * c];
        yt[8 * c + 4] = y0[2 * c + 1];
        yt[8 * c + 5] = y1[2 * c + 1];
        yt[8 * c + 6] = y2[2 * c + 1];
        yt[8 * c + 7] = y3[2 * c + 1];
    }
}

/* One transposed-product element for 4 packed rows:
 * out_b[r] += sum_idx yt_b[cols[idx]] * conj(vals[idx]).
 * The split layout keeps the 4-lane body on contiguous FMA groups. */
static inline void pg_scan4(const double *restrict yt, const int *restrict cols,
                            const double *restrict vals, ptrdiff_t nnz,
                            double *restrict out0, double *restrict out1,
                            double *restrict out2, double *restrict out3,
                            ptrdiff_t r)
{
    double sre[4] = {0.0, 0.0, 0.0, 0.0};
    double sim[4] = {0.0, 0.0, 0.0, 0.0};
    ptrdiff_t idx;
    int b;
    for (idx = 0; idx < nnz; ++idx) {
        const double vr = vals[2 * idx], vi = vals[2 * idx + 1];
        const double *c = yt + 8 * (ptrdiff_t) cols[idx];
#pragma omp simd
        for (b = 0; b < 4; ++b) {
            /* times conj(v) */
            sre[b] += c[b] * vr + c[4 + b] * vi;
            sim[b] += c[4 + b] * vr - c[b] * vi;
        }
    }
    out0[2 * r] += sre[0]; out0[2 * r + 1] += sim[0];
    out1[2 * r] += sre[1]; out1[2 * r + 1] += sim[1];
    out2[2 * r] += sre[2]; out2[2 * r + 1] += sim[2];
    out3[2 * r] += sre[3]; out3[2 * r + 1] += sim[3];
}

/* Single-row variant of pg_scan4 (remainder rows). */
static inline void pg_scan1(const double *restrict yi, const int *restrict cols,
                            const double *restrict vals, ptrdiff_t nnz,
                            double *restrict out, ptrdiff_t r)
{
    double sr = 0.0, si = 0.0;
    ptrdiff_t idx;
    for (idx = 0; idx < nnz; ++idx) {
        const double vr = vals[2 * idx], vi = vals[2 * idx + 1];
        const double ar = yi[2 * (ptrdiff_t) cols[idx]];
        const double ai = yi[2 * (ptrdiff_t) cols[idx] + 1];
        sr += ar * vr + ai * vi;
        si += ai * vr - ar * vi;
    }
    out[2 * r] += sr;
    out[2 * r + 1] += si;
}

/* Single-row CSR matvec contribution without conjugation:
 * out[r] += sum_idx vals[idx] * x[cols[idx]] */
static inline void pg_scan1_noconj(const double *restrict x, const int *restrict cols,
                                   const double *restrict vals, ptrdiff_t nnz,
                                   double *restrict out, ptrdiff_t r)
{
    double sr = 0.0, si = 0.0;
    ptrdiff_t idx;
    for (idx = 0; idx < nnz; ++idx) {
        const double vr = vals[2 * idx], vi = vals[2 * idx + 1];
        const double ar = x[2 * (ptrdiff_t) cols[idx]];
        const double ai = x[2 * (ptrdiff_t) cols[idx] + 1];
        sr += vr * ar - vi * ai;
        si += vr * ai + vi * ar;
    }
    out[2 * r] += sr;
    out[2 * r + 1] += si;
}

/* Jump-channel column pass:
 * kr[cj[t]] += (wr + i wi) * conj(cv[t]) * ys[cs[t]] */
static inline void pg_jump(double *restrict kr, const double *restrict ys,
                           const int *restrict cj, const int *restrict cs,
                           const double *restrict cv, ptrdiff_t n,
                           double wr, double wi)
{
    ptrdiff_t t;
    for (t = 0; t < n; ++t) {
        const double cr = cv[2 * t], ci = cv[2 * t + 1];
        const double pr = wr * cr - wi * ci;
        const double pi = wr * ci + wi * cr;
        const double *a = ys + 2 * (ptrdiff_t) cs[t];
        double *k = kr + 2 * (ptrdiff_t) cj[t];
        k[0] += pr * a[0] - pi * a[1];
        k[1] += pr * a[1] + pi * a[0];
    }
}

/* Consecutive-run jump segment: kr[j0+t] += (w * cv[t]) * ys[s0+t].
 * cv already carries the conjugated codomain weight. */
static inline void pg_jump_run(double *restrict kr, const double *restrict ys,
                               const double *restrict cv, ptrdiff_t n,
                               double wr, double wi)
{
    ptrdiff_t t;
#pragma omp simd
    for (t = 0; t < n; ++t) {
        const double cr = cv[2 * t], ci = cv[2 * t + 1];
        const double pr = wr * cr - wi * ci;
        const double pi = wr * ci + wi * cr;
        const double ar = ys[2 * t], ai = ys[2 * t + 1];
        kr[2 * t] += pr * ar - pi * ai;
        kr[2 * t + 1] += pr * ai + pi * ar;
    }
}

/* Stage updates: acc_op 0 -> acc = base + wa*k, 1 -> acc += wa*k,
 * 2 -> out = acc + wa*k (final). out receives base + cb*k otherwise. */
static inline void pg_stage_first(double *restrict acc, double *restrict out,
                                  const double *restrict base,
                                  const double *restrict k,
                                  double wa, double cb, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j) {
        const double kj = k[j];
        const double bj = base[j];
        acc[j] = bj + wa * kj;
        out[j] = bj + cb * kj;
    }
}

static inline void pg_stage_mid(double *restrict acc, double *restrict out,
                                const double *restrict base,
                                const double *restrict k,
                                double wa, double cb, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j) {
        const double kj = k[j];
        acc[j] += wa * kj;
        out[j] = base[j] + cb * kj;
    }
}

static inline void pg_stage_last(const double *restrict acc, double *restrict out,
                                 const double *restrict k,
                                 double wa, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j)
        out[j] = acc[j] + wa * k[j];
}

static inline void pg_zero(double *restrict kr, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j)
        kr[j] = 0.0;
}

/* First index in the sorted array with arr[idx] >= key. */
static inline ptrdiff_t pg_lower_bound(const int *restrict arr, ptrdiff_t n, int key)
{
    ptrdiff_t lo = 0, hi = n;
    while (lo < hi) {
        ptrdiff_t mid = (lo + hi) / 2;
        if (arr[mid] < key)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

/* Copy the conjugate transpose of a W block into contiguous scratch:
 * wt[r*w + c] = conj(W[(c0+c)*ld + r0+r]) for r < h, c < w (complex). */
static inline void pg_tile_ctranspose(double *restrict wt, const double *restrict W,
                                      ptrdiff_t ld, ptrdiff_t r0, ptrdiff_t c0,
                                      ptrdiff_t h, ptrdiff_t w)
{
    ptrdiff_t r, c;
    for (c = 0; c < w; ++c) {
        const double *src = W + 2 * ((c0 + c) * ld + r0);
        for (r = 0; r < h; ++r) {
            wt[2 * (r * w + c)] = src[2 * r];
            wt[2 * (r * w + c) + 1] = -src[2 * r + 1];
        }
    }
}

/* Hermitian-form stage updates on one tile row: k = wrow + wtrow where
 * wtrow already holds conj(W^T).  kind 0: acc = base + wa k, out = base + cb k;
 * kind 1: acc += wa k, out = base + cb k; kind 2: out = acc + wa k. */
static inline void pg_herm_stage_first(double *restrict acc, double *restrict out,
                                       const double *restrict base,
                                       const double *restrict wrow,
                                       const double *restrict wtrow,
                                       double wa, double cb, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j) {
        const double kj = wrow[j] + wtrow[j];
        const double bj = base[j];
        acc[j] = bj + wa * kj;
        out[j] = bj + cb * kj;
    }
}

static inline void pg_herm_stage_mid(double *restrict acc, double *restrict out,
                                     const double *restrict base,
                                     const double *restrict wrow,
                                     const double *restrict wtrow,
                                     double wa, double cb, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j) {
        const double kj = wrow[j] + wtrow[j];
        acc[j] += wa * kj;
        out[j] = base[j] + cb * kj;
    }
}

static inline void pg_herm_stage_last(const double *restrict acc, double *restrict out,
                                      const double *restrict wrow,
                                      const double *restrict wtrow,
                                      double wa, ptrdiff_t n2)
{
    ptrdiff_t j;
#pragma omp simd
    for (j = 0; j < n2; ++j)
        out[j] = acc[j] + wa * (wrow[j] + wtrow[j]);
}

#endif
