"""Prepared evolution plans consumed by the integration kernels.

A plan freezes everything the inner RK4 loop needs into flat numpy arrays:

- one merged CSR pattern for ``A(t) = -i H(t) - G/2`` with the static values
  pre-summed and one (frequency, slots, values) group per oscillating term,
- per-channel jump maps for collapse operators.  Every physical channel here
  (mode decay, qutrit relaxation, projector dephasing) has at most one
  nonzero per row, which both kernels exploit:
  ``(L y L^dag)[i, j] = w_i * conj(w_j) * y[src_i, src_j]``.

The same plan feeds the compiled core and the pure-Python fallback, so the
two backends are interchangeable term for term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class EvolutionPlan:
    dim: int
    indptr: np.ndarray          # int32 (dim+1,)
    indices: np.ndarray         # int32 (nnz,)
    static_vals: np.ndarray     # complex128 (nnz,)
    group_freqs: np.ndarray     # float64 (n_groups,)
    group_ptr: np.ndarray       # int32 (n_groups+1,)
    group_slots: np.ndarray     # int32 (sum of group sizes,)
    group_vals: np.ndarray      # complex128 (same,)
    # jump channels, one nonzero per row
    jump_row_src: np.ndarray    # int32 (C, dim); -1 marks an empty row
    jump_row_val: np.ndarray    # complex128 (C, dim); rate folded in
    jump_ptr: np.ndarray        # int32 (C+1,)
    jump_cols_j: np.ndarray     # int32 (total,)
    jump_cols_s: np.ndarray     # int32 (total,)
    jump_cols_v: np.ndarray     # complex128 (total,); conj(w_j)
    # the same column maps as maximal consecutive runs (vectorizable form)
    jump_run_ptr: np.ndarray = None    # int32 (C+1,)
    jump_run_j0: np.ndarray = None     # int32 (n_runs,)
    jump_run_s0: np.ndarray = None     # int32 (n_runs,)
    jump_run_off: np.ndarray = None    # int32 (n_runs,) offset into jump_cols_v
    jump_run_len: np.ndarray = None    # int32 (n_runs,)
    is_lindblad: bool = False
    # scratch template for value rebuilds
    _vals_scratch: np.ndarray = field(default=None, repr=False)

    @property
    def n_channels(self) -> int:
        return self.jump_row_src.shape[0]

    @property
    def nnz(self) -> int:
        return self.indices.shape[0]

    @property
    def max_frequency(self) -> float:
        if self.group_freqs.size == 0:
            return 0.0
        return float(np.max(np.abs(self.group_freqs)))

    def values_at(self, t: float) -> np.ndarray:
        """Merged CSR values of A(t); reuses one scratch buffer."""
        if self._vals_scratch is None:
            self._vals_scratch = np.empty_like(self.static_vals)
        vals = self._vals_scratch
        np.copyto(vals, self.static_vals)
        for g in range(self.group_freqs.shape[0]):
            lo, hi = self.group_ptr[g], self.group_ptr[g + 1]
            phase = np.exp(1j * self.group_freqs[g] * t)
            np.add.at(vals, self.group_slots[lo:hi], phase * self.group_vals[lo:hi])
        return vals

    def matrix_at(self, t: float) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values_at(t).copy(), self.indices, self.indptr), shape=(self.dim, self.dim)
        )


def _slots_for(pattern: sp.csr_matrix, op: sp.csr_matrix) -> np.ndarray:
    """Positions of ``op``'s nonzeros inside the merged CSR pattern."""
    op = op.tocsr()
    op.sum_duplicates()
    rows = np.repeat(np.arange(op.shape[0], dtype=np.int64), np.diff(op.indptr))
    cols = op.indices.astype(np.int64)
    slots = np.empty(rows.shape[0], dtype=np.int32)
    indptr, indices = pattern.indptr, pattern.indices
    for k in range(rows.shape[0]):
        r = rows[k]
        lo, hi = indptr[r], indptr[r + 1]
        pos = lo + np.searchsorted(indices[lo:hi], cols[k])
        assert indices[pos] == cols[k]
        slots[k] = pos
    return slots


def _one_nnz_per_row(op: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray] | None:
    """Row-map form (src, val) of an operator, or None if not one-per-row."""
    op = op.tocsr()
    op.sum_duplicates()
    op.eliminate_zeros()
    counts = np.diff(op.indptr)
    if np.any(counts > 1):
        return None
    dim = op.shape[0]
    src = np.full(dim, -1, dtype=np.int32)
    val = np.zeros(dim, dtype=np.complex128)
    rows = np.nonzero(counts)[0]
    src[rows] = op.indices[op.indptr[rows]]
    val[rows] = op.data[op.indptr[rows]]
    return src, val


def build_plan(
    dim: int,
    static_ops: list[sp.spmatrix],
    oscillating: list[tuple[float, sp.spmatrix]],
    channels: list[tuple[sp.spmatrix, float]] | None = None,
) -> EvolutionPlan:
    """Assemble the merged-CSR plan for ``A(t) = -iH(t) - G/2`` plus jumps.

    ``static_ops`` are Hermitian, included once.  Each ``(freq, O)`` in
    ``oscillating`` stands for ``O e^{i freq t} + h.c.``.  ``channels`` are
    ``(L, rate)`` collapse operators; all must have at most one nonzero per
    row (true for every operator in this library's models).
    """
    channels = channels or []

    contributors: list[sp.csr_matrix] = []
    for op in static_ops:
        contributors.append(sp.csr_matrix(op, dtype=np.complex128))
    osc_pairs: list[tuple[float, sp.csr_matrix, sp.csr_matrix]] = []
    for freq, op in oscillating:
        o = sp.csr_matrix(op, dtype=np.complex128)
        odag = o.conj().T.tocsr()
        osc_pairs.append((float(freq), o, odag))
        contributors.append(o)
        contributors.append(odag)

    # anticommutator part of the dissipators: G = sum rate * L^dag L (diagonal
    # for one-per-row channels)
    g_diag = np.zeros(dim, dtype=np.float64)
    row_srcs, row_vals, rates = [], [], []
    for op, rate in channels:
        L = sp.csr_matrix(op, dtype=np.complex128)
        rm = _one_nnz_per_row(L)
        if rm is None:
            raise ValueError("collapse operators must have at most one nonzero per row")
        src, val = rm
        row_srcs.append(src)
        row_vals.append(val)
        rates.append(float(rate))
        mask = src >= 0
        np.add.at(g_diag, src[mask], rate * np.abs(val[mask]) ** 2)

    if channels:
        contributors.append(sp.diags(np.ones(dim), format="csr", dtype=np.complex128))

    pattern = None
    for c in contributors:
        absc = sp.csr_matrix((np.ones_like(c.data, dtype=np.float64), c.indices, c.indptr),
                             shape=c.shape)
        pattern = absc if pattern is None else pattern + absc
    if pattern is None:
        pattern = sp.csr_matrix((dim, dim))
    pattern.sum_duplicates()
    pattern.sort_indices()

    nnz = pattern.nnz
    static_vals = np.zeros(nnz, dtype=np.complex128)
    for op in static_ops:
        o = sp.csr_matrix(op, dtype=np.complex128)
        o.sum_duplicates()
        slots = _slots_for(pattern, o)
        np.add.at(static_vals, slots, -1j * o.data)
    if channels:
        eye = np.arange(dim)
        diag_pattern = sp.csr_matrix((np.ones(dim), (eye, eye)), shape=(dim, dim))
        slots = _slots_for(pattern, diag_pattern)
        np.add.at(static_vals, slots, -0.5 * g_diag)

    group_freqs, group_slots_list, group_vals_list = [], [], []
    for freq, o, odag in osc_pairs:
        group_freqs.append(freq)
        group_slots_list.append(_slots_for(pattern, o))
        group_vals_list.append(-1j * o.data)
        group_freqs.append(-freq)
        group_slots_list.append(_slots_for(pattern, odag))
        group_vals_list.append(-1j * odag.data)

    sizes = [0] + [len(s) for s in group_slots_list]
    group_ptr = np.cumsum(sizes).astype(np.int32)
    group_slots = (np.concatenate(group_slots_list).astype(np.int32)
                   if group_slots_list else np.zeros(0, dtype=np.int32))
    group_vals = (np.concatenate(group_vals_list).astype(np.complex128)
                  if group_vals_list else np.zeros(0, dtype=np.complex128))

    C = len(channels)
    jump_row_src = np.full((C, dim), -1, dtype=np.int32)
    jump_row_val = np.zeros((C, dim), dtype=np.complex128)
    cols_j, cols_s, cols_v, jump_ptr = [], [], [], [0]
    for c in range(C):
        src, val = row_srcs[c], row_vals[c]
        jump_row_src[c] = src
        mask = src >= 0
        jump_row_val[c, mask] = rates[c] * val[mask]
        js = np.nonzero(mask)[0].astype(np.int32)
        cols_j.append(js)
        cols_s.append(src[js])
        cols_v.append(np.conj(val[js]))
        jump_ptr.append(jump_ptr[-1] + js.shape[0])

    jump_ptr_arr = np.asarray(jump_ptr, dtype=np.int32)
    jcj = (np.concatenate(cols_j).astype(np.int32) if cols_j
           else np.zeros(0, dtype=np.int32))
    jcs = (np.concatenate(cols_s).astype(np.int32) if cols_s
           else np.zeros(0, dtype=np.int32))
    jcv = (np.concatenate(cols_v).astype(np.complex128) if cols_v
           else np.zeros(0, dtype=np.complex128))
    runs = _column_runs(jump_ptr_arr, jcj, jcs)

    return EvolutionPlan(
        dim=dim,
        indptr=pattern.indptr.astype(np.int32),
        indices=pattern.indices.astype(np.int32),
        static_vals=static_vals,
        group_freqs=np.asarray(group_freqs, dtype=np.float64),
        group_ptr=group_ptr,
        group_slots=group_slots,
        group_vals=group_vals,
        jump_row_src=jump_row_src,
        jump_row_val=jump_row_val,
        jump_ptr=jump_ptr_arr,
        jump_cols_j=jcj,
        jump_cols_s=jcs,
        jump_cols_v=jcv,
        jump_run_ptr=runs[0],
        jump_run_j0=runs[1],
        jump_run_s0=runs[2],
        jump_run_off=runs[3],
        jump_run_len=runs[4],
        is_lindblad=bool(channels),
    )


def _column_runs(jump_ptr: np.ndarray, jcj: np.ndarray, jcs: np.ndarray):
    """Split each channel's column map into maximal consecutive runs.

    Within a run both the output column and the source column advance by one
    per element, so the kernel can process it as a contiguous segment.
    """
    n_chan = jump_ptr.shape[0] - 1
    run_ptr = [0]
    j0s, s0s, offs, lens = [], [], [], []
    for c in range(n_chan):
        lo, hi = int(jump_ptr[c]), int(jump_ptr[c + 1])
        t = lo
        while t < hi:
            start = t
            t += 1
            while (t < hi and jcj[t] == jcj[t - 1] + 1
                   and jcs[t] == jcs[t - 1] + 1):
                t += 1
            j0s.append(int(jcj[start]))
            s0s.append(int(jcs[start]))
            offs.append(start)
            lens.append(t - start)
        run_ptr.append(len(j0s))
    return (np.asarray(run_ptr, dtype=np.int32),
            np.asarray(j0s, dtype=np.int32),
            np.asarray(s0s, dtype=np.int32),
            np.asarray(offs, dtype=np.int32),
            np.asarray(lens, dtype=np.int32))
