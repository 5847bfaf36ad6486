"""Pure-numpy/scipy reference implementation of the integration kernels.

Identical math to the compiled core, expressed with vectorized array
operations.  It is the import-time fallback when the extension is missing
and the ground truth the compiled kernels are tested against.  Expect it to
be one to two orders of magnitude slower on density-matrix evolutions.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .plan import EvolutionPlan

USING_COMPILED = False


def _csr_at(plan: EvolutionPlan, t: float) -> sp.csr_matrix:
    return sp.csr_matrix(
        (plan.values_at(t).copy(), plan.indices, plan.indptr),
        shape=(plan.dim, plan.dim),
    )


def _jump_sum(plan: EvolutionPlan, y: np.ndarray, out: np.ndarray) -> None:
    for c in range(plan.n_channels):
        lo, hi = plan.jump_ptr[c], plan.jump_ptr[c + 1]
        js = plan.jump_cols_j[lo:hi]
        if js.size == 0:
            continue
        src = plan.jump_cols_s[lo:hi].astype(np.intp)
        rv = plan.jump_row_val[c, js]
        cv = plan.jump_cols_v[lo:hi]
        out[np.ix_(js, js)] += rv[:, None] * y[np.ix_(src, src)] * cv[None, :]


def _rhs_dm(plan: EvolutionPlan, y: np.ndarray, t: float) -> np.ndarray:
    a = _csr_at(plan, t)
    k = a @ y
    k += (a.conj() @ y.T).T
    _jump_sum(plan, y, k)
    return k


def _rhs_ket(plan: EvolutionPlan, y: np.ndarray, t: float) -> np.ndarray:
    return _csr_at(plan, t) @ y


def advance_ket(plan: EvolutionPlan, psi: np.ndarray, t0: float, dt: float,
                n_steps: int, n_threads: int = 0) -> None:
    """Classical RK4 on d psi/dt = A(t) psi, in place."""
    for step in range(n_steps):
        t = t0 + step * dt
        k1 = _rhs_ket(plan, psi, t)
        k2 = _rhs_ket(plan, psi + (dt / 2) * k1, t + dt / 2)
        k3 = _rhs_ket(plan, psi + (dt / 2) * k2, t + dt / 2)
        k4 = _rhs_ket(plan, psi + dt * k3, t + dt)
        psi += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def advance_dm(plan: EvolutionPlan, rho: np.ndarray, t0: float, dt: float,
               n_steps: int, n_threads: int = 0) -> None:
    """Classical RK4 on the GKSL right-hand side, in place."""
    for step in range(n_steps):
        t = t0 + step * dt
        k1 = _rhs_dm(plan, rho, t)
        k2 = _rhs_dm(plan, rho + (dt / 2) * k1, t + dt / 2)
        k3 = _rhs_dm(plan, rho + (dt / 2) * k2, t + dt / 2)
        k4 = _rhs_dm(plan, rho + dt * k3, t + dt)
        rho += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
