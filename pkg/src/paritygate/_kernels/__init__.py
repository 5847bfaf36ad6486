"""Integration kernels: compiled core with a pure-Python fallback.

The compiled extension is selected at import when available; otherwise the
numpy/scipy fallback takes over with identical semantics.  ``backend_name``
reports which one is active, and ``advance_ket``/``advance_dm`` hide the
difference from the dynamics layer.
"""

from __future__ import annotations

import os

import numpy as np

from .plan import EvolutionPlan, build_plan

try:
    from . import _core

    USING_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _core = None
    USING_COMPILED = False

from . import fallback


def backend_name() -> str:
    return "compiled" if USING_COMPILED else "fallback"


def default_threads() -> int:
    env = os.environ.get("PARITYGATE_THREADS") or os.environ.get("OMP_NUM_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def advance_ket(plan: EvolutionPlan, psi: np.ndarray, t0: float, dt: float,
                n_steps: int, use_compiled: bool | None = None) -> None:
    """Advance a state vector in place by ``n_steps`` RK4 steps."""
    if n_steps <= 0:
        return
    compiled = USING_COMPILED if use_compiled is None else (use_compiled and USING_COMPILED)
    if compiled:
        _core.advance_ket(plan.indptr, plan.indices, plan.static_vals,
                          plan.group_freqs, plan.group_ptr, plan.group_slots,
                          plan.group_vals, psi, t0, dt, n_steps)
    else:
        fallback.advance_ket(plan, psi, t0, dt, n_steps)


class DensityWorkspace:
    """Reusable stage buffers for density-matrix RK4."""

    def __init__(self, dim: int):
        self.acc = np.empty((dim, dim), dtype=np.complex128)
        self.ya = np.empty((dim, dim), dtype=np.complex128)
        self.yb = np.empty((dim, dim), dtype=np.complex128)


def advance_dm(plan: EvolutionPlan, rho: np.ndarray, t0: float, dt: float,
               n_steps: int, workspace: DensityWorkspace | None = None,
               n_threads: int | None = None,
               use_compiled: bool | None = None) -> None:
    """Advance a density matrix in place by ``n_steps`` RK4 steps."""
    if n_steps <= 0:
        return
    compiled = USING_COMPILED if use_compiled is None else (use_compiled and USING_COMPILED)
    if compiled:
        if workspace is None:
            workspace = DensityWorkspace(plan.dim)
        threads = n_threads if n_threads is not None else default_threads()
        _core.advance_dm(plan.indptr, plan.indices, plan.static_vals,
                         plan.group_freqs, plan.group_ptr, plan.group_slots,
                         plan.group_vals,
                         plan.jump_row_src, plan.jump_row_val,
                         plan.jump_ptr, plan.jump_cols_j, plan.jump_cols_s,
                         plan.jump_cols_v,
                         plan.jump_run_ptr, plan.jump_run_j0, plan.jump_run_s0,
                         plan.jump_run_off, plan.jump_run_len,
                         rho, workspace.acc, workspace.ya, workspace.yb,
                         t0, dt, n_steps, threads)
    else:
        fallback.advance_dm(plan, rho, t0, dt, n_steps)


__all__ = [
    "EvolutionPlan",
    "build_plan",
    "advance_ket",
    "advance_dm",
    "DensityWorkspace",
    "backend_name",
    "default_threads",
    "USING_COMPILED",
]
