"""Benchmark the compiled integration kernels against the pure-Python fallback.

Runs short chunks of the real lossy GHZ evolution (and the pure-state
accuracy sweep) with both backends and reports steps/second.  The compiled
core is the one used for full runs; the fallback exists for portability and
as the reference the compiled kernels are tested against.

Usage::

    python benchmarks/bench_kernels.py [--steps N] [--threads K]
"""

from __future__ import annotations

import argparse
import math
import time
import warnings

import numpy as np

warnings.simplefilter("ignore")

from paritygate import _kernels
from paritygate._kernels import fallback
from paritygate.dynamics import IntegratorConfig, _InternalBasis
from paritygate.experiments import bundled_config_path, load_config
from paritygate.ghz import GhzKind, build_scenario, collapse_channels
from paritygate.hilbert import HilbertLayout
from paritygate.model import (
    HamiltonianTier,
    HamiltonianToggles,
    build_hamiltonian,
    derive_detunings,
    effective_params,
)


def build_lossy_case(cavity_dims, alpha):
    params, dec, _ = load_config(bundled_config_path())
    det = derive_detunings(params)
    layout = HilbertLayout(cavity_dims=cavity_dims)
    h = build_hamiltonian(HamiltonianTier.FULL, params, det, layout,
                          HamiltonianToggles(True, True))
    scenario = build_scenario(GhzKind.SPIN_COHERENT, layout, alpha=alpha)
    channels, dephasing = collapse_channels(dec, layout)
    static, osc = h.static_and_oscillating()
    kept = ([(c.operator.sparse(), c.rate) for c in channels]
            + [(p.sparse(), r) for p, r in dephasing])
    basis = _InternalBasis(layout.dims,
                           [(m, m.nnz) for m in static]
                           + [(m, m.nnz) for _, m in osc]
                           + [(o, o.nnz) for o, _ in kept])
    plan = _kernels.build_plan(
        h.dim,
        [basis.op_in(m) for m in static],
        [(f, basis.op_in(m)) for f, m in osc],
        channels=[(basis.op_in(o), r) for o, r in kept])
    dt, n_total = IntegratorConfig().resolve_steps(
        plan.max_frequency, math.pi / effective_params(params, det).chi[0])
    rho = basis.mat_in(np.outer(scenario.initial.amplitudes,
                                scenario.initial.amplitudes.conj()))
    return plan, rho, dt, n_total


def bench_dm(plan, rho, dt, steps, threads):
    rows = []
    ws = _kernels.DensityWorkspace(plan.dim)
    if _kernels.USING_COMPILED:
        work = rho.copy()
        _kernels.advance_dm(plan, work, 0.0, dt, 3, workspace=ws, n_threads=threads)
        t0 = time.perf_counter()
        _kernels.advance_dm(plan, work, 0.0, dt, steps, workspace=ws,
                            n_threads=threads)
        rows.append(("compiled", steps / (time.perf_counter() - t0)))
    work = rho.copy()
    fb_steps = max(2, steps // 20)
    t0 = time.perf_counter()
    fallback.advance_dm(plan, work, 0.0, dt, fb_steps)
    rows.append(("fallback", fb_steps / (time.perf_counter() - t0)))
    return rows


def bench_ket(steps):
    from paritygate.experiments import fig8_params

    params = fig8_params(10)
    det = derive_detunings(params)
    layout = HilbertLayout(cavity_dims=(4, 10, 10))
    h = build_hamiltonian(HamiltonianTier.FULL, params, det, layout,
                          HamiltonianToggles(False, False))
    scenario = build_scenario(GhzKind.SPIN_COHERENT, layout, alpha=1.1)
    static, osc = h.static_and_oscillating()
    plan = _kernels.build_plan(h.dim, static, osc)
    dt, _ = IntegratorConfig().resolve_steps(
        plan.max_frequency, math.pi / effective_params(params, det).chi[0])
    rows = []
    for name, compiled in (("compiled", True), ("fallback", False)):
        if compiled and not _kernels.USING_COMPILED:
            continue
        psi = scenario.initial.amplitudes.copy()
        n = steps if compiled else max(50, steps // 20)
        _kernels.advance_ket(plan, psi, 0.0, dt, 5, use_compiled=compiled)
        t0 = time.perf_counter()
        _kernels.advance_ket(plan, psi, 0.0, dt, n, use_compiled=compiled)
        rows.append((name, n / (time.perf_counter() - t0)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200,
                        help="density-matrix steps per timing chunk")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()
    threads = args.threads or _kernels.default_threads()

    print(f"backend available: {_kernels.backend_name()} (threads={threads})")

    print("\nstate-vector RK4, dim 1200 (accuracy-sweep Hamiltonian):")
    for name, rate in bench_ket(args.steps * 40):
        print(f"  {name:9s} {rate:12.1f} steps/s")

    for dims, alpha in (((3, 6, 6), 0.8), ((4, 10, 10), 1.1)):
        plan, rho, dt, n_total = build_lossy_case(dims, alpha)
        print(f"\nlossy GHZ evolution, dims {dims} (dim {plan.dim}, "
              f"{n_total} steps per full run):")
        for name, rate in bench_dm(plan, rho, dt, args.steps, threads):
            eta_min = n_total / rate / 60.0
            print(f"  {name:9s} {rate:10.2f} steps/s   (full run ~ {eta_min:8.1f} min)")


if __name__ == "__main__":
    main()
