"""Time-dependent Schrodinger and GKSL integrators plus fidelity metrics.

The Hamiltonian is kept in the interaction picture exactly as modeled:
``H(t) = sum_k (O_k e^{i nu_k t} + h.c.) + static``.  Integration is
classical fixed-step RK4 with the step capped at ``1/resolution`` of the
fastest oscillation period; no renormalization is ever applied, so norm and
trace drift are honest accuracy diagnostics.  An optional step-halving rerun
flags unconverged results instead of silently accepting them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DimensionError, IntegrationAccuracyError, InvalidStateError
from .hilbert import DensityMatrix, HilbertLayout, Ket, Operator

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class HamiltonianTerm:
    """One term ``operator * e^{i frequency t} + h.c.`` (static when 0)."""

    operator: Operator
    frequency: float = 0.0


@dataclass
class TimeDependentHamiltonian:
    layout: HilbertLayout
    terms: list[HamiltonianTerm]
    label: str = ""

    def __post_init__(self):
        dim = self.layout.total_dim
        for term in self.terms:
            if term.operator.dim != dim:
                raise DimensionError(
                    f"term '{term.operator.label}' has dim {term.operator.dim}, "
                    f"layout needs {dim}"
                )
            if term.frequency == 0.0:
                defect = _hermiticity_defect(term.operator.sparse())
                if defect > HERMITICITY_RTOL:
                    raise InvalidStateError(
                        f"static term '{term.operator.label}' is not Hermitian "
                        f"(defect {defect:.2e})"
                    )

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def max_frequency(self) -> float:
        freqs = [abs(t.frequency) for t in self.terms]
        return max(freqs) if freqs else 0.0

    def evaluate(self, t: float) -> np.ndarray:
        """Dense H(t); used by the oracle and structural tests."""
        h = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for term in self.terms:
            m = term.operator.dense()
            if term.frequency == 0.0:
                h += m
            else:
                h += m * np.exp(1j * term.frequency * t)
                h += m.conj().T * np.exp(-1j * term.frequency * t)
        return h

    def static_and_oscillating(self):
        static = [t.operator.sparse() for t in self.terms if t.frequency == 0.0]
        osc = [(t.frequency, t.operator.sparse()) for t in self.terms if t.frequency != 0.0]
        return static, osc


def _hermiticity_defect(m: sp.spmatrix) -> float:
    diff = (m - m.conj().T).tocoo()
    if diff.nnz == 0:
        return 0.0
    scale = max(1.0, abs(m).max())
    return float(np.max(np.abs(diff.data)) / scale)


@dataclass(frozen=True)
class CollapseChannel:
    operator: Operator
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise InvalidStateError(f"collapse rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``dt`` is a base step; the effective step is additionally capped at
    ``(2 pi / nu_max) / max_frequency_resolution`` and then rounded down so an
    integer number of steps lands exactly on ``t_final``.
    """

    dt: float | None = None
    max_frequency_resolution: int = 20
    convergence_tol: float = 1e-6
    record_stride: int = 200
    verify_convergence: bool = False
    n_threads: int | None = None
    use_compiled: bool | None = None

    def resolve_steps(self, nu_max: float, t_final: float) -> tuple[float, int]:
        cap = math.inf
        if nu_max > 0:
            cap = (2.0 * math.pi / nu_max) / self.max_frequency_resolution
        dt = self.dt if self.dt is not None else cap
        if not math.isfinite(dt):
            dt = t_final / 1000.0
        dt = min(dt, cap)
        n_steps = max(1, int(math.ceil(t_final / dt - 1e-12)))
        return t_final / n_steps, n_steps


@dataclass
class Trajectory:
    times: np.ndarray
    records: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)


Observable = Callable[[np.ndarray, float], float]


def _subsystem_shifts(op: sp.csr_matrix, dims: tuple[int, ...]) -> tuple[int, ...] | None:
    """Constant per-subsystem index deltas of a ladder-product operator.

    Returns None when the operator's nonzeros do not share one multi-index
    displacement (then no reordering analysis is attempted).
    """
    coo = op.tocoo()
    if coo.nnz == 0:
        return tuple(0 for _ in dims)
    rows = np.array(np.unravel_index(coo.row, dims))
    cols = np.array(np.unravel_index(coo.col, dims))
    deltas = rows - cols
    first = deltas[:, 0]
    if np.any(deltas != first[:, None]):
        return None
    return tuple(int(d) for d in first)


def _optimal_ordering(shift_sets: list[tuple[tuple[int, ...], int]],
                      dims: tuple[int, ...]) -> tuple[int, ...]:
    """Subsystem order minimizing the largest flat index shift.

    The integration kernels stream matrix rows; gathers reach rows displaced
    by ``sum_s delta_s * stride_s``, so orderings that shrink the worst
    displacement keep every gather inside the cache-resident window.
    """
    from itertools import permutations

    n = len(dims)
    if n > 6:
        return tuple(range(n))
    best = None
    best_key = None
    for order in permutations(range(n)):
        strides = [0] * n
        acc = 1
        for s in reversed(order):
            strides[s] = acc
            acc *= dims[s]
        worst = 0
        weighted = 0
        for deltas, weight in shift_sets:
            shift = abs(sum(d * strides[s] for s, d in enumerate(deltas)))
            worst = max(worst, shift)
            weighted += shift * weight
        key = (worst, weighted, order)
        if best_key is None or key < best_key:
            best_key = key
            best = order
    return best


def _ordering_permutation(dims: tuple[int, ...], order: tuple[int, ...]) -> np.ndarray:
    """Flat index map: internal index -> physical index."""
    new_dims = tuple(dims[s] for s in order)
    grid_new = np.array(np.unravel_index(np.arange(int(np.prod(dims))), new_dims))
    grid_phys = np.empty_like(grid_new)
    for k, s in enumerate(order):
        grid_phys[s] = grid_new[k]
    return np.ravel_multi_index(tuple(grid_phys), dims)


class _InternalBasis:
    """Optional cache-friendly reordering used only inside the integrators."""

    def __init__(self, dims: tuple[int, ...],
                 ops: list[tuple[sp.csr_matrix, int]]):
        shift_sets = []
        analyzable = True
        for op, weight in ops:
            deltas = _subsystem_shifts(op, dims)
            if deltas is None:
                analyzable = False
                break
            shift_sets.append((deltas, weight))
        order = _optimal_ordering(shift_sets, dims) if analyzable else tuple(
            range(len(dims)))
        self.trivial = order == tuple(range(len(dims)))
        self.perm = None if self.trivial else _ordering_permutation(dims, order)

    def op_in(self, op: sp.spmatrix) -> sp.csr_matrix:
        m = sp.csr_matrix(op)
        if self.trivial:
            return m
        return m[self.perm][:, self.perm].tocsr()

    def vec_in(self, v: np.ndarray) -> np.ndarray:
        return v.copy() if self.trivial else np.ascontiguousarray(v[self.perm])

    def vec_out(self, v: np.ndarray) -> np.ndarray:
        if self.trivial:
            return v
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def mat_in(self, m: np.ndarray) -> np.ndarray:
        if self.trivial:
            return m.copy()
        return np.ascontiguousarray(m[np.ix_(self.perm, self.perm)])

    def mat_out(self, m: np.ndarray) -> np.ndarray:
        if self.trivial:
            return m
        out = np.empty_like(m)
        out[np.ix_(self.perm, self.perm)] = m
        return out


def _run_chunked(plan, state, dt: float, n_steps: int, cfg: IntegratorConfig,
                 observables: Mapping[str, Observable], advance,
                 to_physical=None) -> Trajectory:
    stride = max(1, cfg.record_stride)
    n_records = n_steps // stride + (1 if n_steps % stride else 0) + 1
    times = np.empty(n_records)
    records = {name: np.empty(n_records) for name in observables}

    def record(k: int, t: float) -> None:
        times[k] = t
        if observables:
            phys = state if to_physical is None else to_physical(state)
            for name, fn in observables.items():
                records[name][k] = fn(phys, t)

    record(0, 0.0)
    done = 0
    k = 1
    while done < n_steps:
        chunk = min(stride, n_steps - done)
        advance(plan, state, done * dt, dt, chunk)
        done += chunk
        record(k, done * dt)
        k += 1
    return Trajectory(times=times[:k], records={n: v[:k] for n, v in records.items()})


def evolve_schrodinger(
    hamiltonian: TimeDependentHamiltonian,
    psi0: Ket,
    t_final: float,
    cfg: IntegratorConfig | None = None,
    observables: Mapping[str, Observable] | None = None,
) -> tuple[Ket, Trajectory]:
    """Integrate i d|psi>/dt = H(t)|psi> with fixed-step RK4.

    The final norm drift is reported in ``Trajectory.meta`` and drift beyond
    1e-4 raises.  With ``cfg.verify_convergence`` the evolution is rerun at
    dt/2 and the result flagged unconverged when the final states differ by
    more than ``convergence_tol``.
    """
    cfg = cfg or IntegratorConfig()
    if not psi0.is_normalized(tol=1e-6):
        raise InvalidStateError(f"initial state norm {psi0.norm():.6f} is not 1")
    observables = dict(observables or {})
    observables.setdefault("norm", lambda s, t: float(np.linalg.norm(s)))

    static, osc = hamiltonian.static_and_oscillating()
    basis = _InternalBasis(hamiltonian.layout.dims,
                           [(m, m.nnz) for m in static] + [(m, m.nnz) for _, m in osc])
    plan = _kernels.build_plan(hamiltonian.dim,
                               [basis.op_in(m) for m in static],
                               [(f, basis.op_in(m)) for f, m in osc])
    dt, n_steps = cfg.resolve_steps(plan.max_frequency, t_final)

    def advance(p, s, t0, d, n):
        _kernels.advance_ket(p, s, t0, d, n, use_compiled=cfg.use_compiled)

    psi = basis.vec_in(psi0.amplitudes)
    traj = _run_chunked(plan, psi, dt, n_steps, cfg, observables, advance,
                        to_physical=basis.vec_out)

    norm_drift = abs(float(np.linalg.norm(psi)) - psi0.norm())
    traj.meta.update(dt=dt, n_steps=n_steps, norm_drift=norm_drift,
                     backend=_kernels.backend_name())
    if norm_drift > 1e-4:
        raise IntegrationAccuracyError(f"norm drift {norm_drift:.3e} exceeds 1e-4")

    if cfg.verify_convergence:
        psi_half = basis.vec_in(psi0.amplitudes)
        _kernels.advance_ket(plan, psi_half, 0.0, dt / 2, 2 * n_steps,
                             use_compiled=cfg.use_compiled)
        delta = float(np.linalg.norm(psi - psi_half))
        traj.meta["convergence_delta"] = delta
        traj.meta["converged"] = delta <= cfg.convergence_tol
    else:
        traj.meta["converged"] = norm_drift <= cfg.convergence_tol

    return Ket(basis.vec_out(psi), hamiltonian.layout), traj


def evolve_lindblad(
    hamiltonian: TimeDependentHamiltonian,
    channels: list[CollapseChannel],
    dephasing: list[tuple[Operator, float]],
    rho0: DensityMatrix,
    t_final: float,
    cfg: IntegratorConfig | None = None,
    observables: Mapping[str, Observable] | None = None,
    check_positivity: bool = True,
) -> tuple[DensityMatrix, Trajectory]:
    """Integrate the GKSL master equation with fixed-step RK4.

    ``channels`` enter as ``rate * (L rho L^dag - {L^dag L, rho}/2)``;
    ``dephasing`` pairs are projectors P with ``rate * (P rho P - {P, rho}/2)``,
    which is the same dissipator since P^2 = P.  Trace drift beyond 1e-6 or a
    final negativity below -1e-6 raises.
    """
    cfg = cfg or IntegratorConfig()
    observables = dict(observables or {})
    diag_idx = np.arange(rho0.layout.total_dim)
    observables.setdefault("trace", lambda s, t: float(np.real(s[diag_idx, diag_idx].sum())))

    # the compiled kernels evolve the Hermitian part; reject corrupted input
    defect0 = rho0.hermiticity_defect()
    if defect0 > 1e-10:
        raise InvalidStateError(
            f"initial density matrix Hermiticity defect {defect0:.3e} exceeds 1e-10")

    for proj, rate in dephasing:
        p = proj.sparse()
        defect = abs(p - p @ p).max()
        if defect > 1e-12:
            raise InvalidStateError(
                f"dephasing operator '{proj.label}' is not a projector (defect {defect:.2e})"
            )

    all_channels = [(ch.operator.sparse(), ch.rate) for ch in channels]
    all_channels += [(proj.sparse(), rate) for proj, rate in dephasing]
    for _, rate in all_channels:
        if rate < 0:
            raise InvalidStateError("collapse rates must be >= 0")

    static, osc = hamiltonian.static_and_oscillating()
    kept = [(op, r) for op, r in all_channels if r > 0]
    basis = _InternalBasis(
        hamiltonian.layout.dims,
        [(m, m.nnz) for m in static] + [(m, m.nnz) for _, m in osc]
        + [(op, op.nnz) for op, _ in kept])
    plan = _kernels.build_plan(hamiltonian.dim,
                               [basis.op_in(m) for m in static],
                               [(f, basis.op_in(m)) for f, m in osc],
                               channels=[(basis.op_in(op), r) for op, r in kept])
    dt, n_steps = cfg.resolve_steps(plan.max_frequency, t_final)

    workspace = _kernels.DensityWorkspace(plan.dim) if _kernels.USING_COMPILED else None

    def advance(p, s, t0, d, n):
        _kernels.advance_dm(p, s, t0, d, n, workspace=workspace,
                            n_threads=cfg.n_threads, use_compiled=cfg.use_compiled)

    rho = basis.mat_in(rho0.entries)
    trace0 = float(np.real(np.trace(rho)))
    traj = _run_chunked(plan, rho, dt, n_steps, cfg, observables, advance,
                        to_physical=basis.mat_out)

    trace_drift = abs(float(np.real(np.trace(rho))) - trace0)
    herm_defect = float(np.max(np.abs(rho - rho.conj().T)))
    traj.meta.update(dt=dt, n_steps=n_steps, trace_drift=trace_drift,
                     hermiticity_defect=herm_defect, backend=_kernels.backend_name())
    if trace_drift > 1e-6:
        raise IntegrationAccuracyError(f"trace drift {trace_drift:.3e} exceeds 1e-6")

    if check_positivity:
        min_eig = float(np.linalg.eigvalsh(rho)[0])
        traj.meta["min_eigenvalue"] = min_eig
        if min_eig < -1e-6:
            raise IntegrationAccuracyError(f"negativity {min_eig:.3e} below -1e-6")

    if cfg.verify_convergence:
        rho_half = basis.mat_in(rho0.entries)
        _kernels.advance_dm(plan, rho_half, 0.0, dt / 2, 2 * n_steps,
                            workspace=workspace, n_threads=cfg.n_threads,
                            use_compiled=cfg.use_compiled)
        delta = float(np.linalg.norm(rho - rho_half))
        traj.meta["convergence_delta"] = delta
        traj.meta["converged"] = delta <= cfg.convergence_tol
    else:
        traj.meta["converged"] = trace_drift <= cfg.convergence_tol

    return DensityMatrix(basis.mat_out(rho), rho0.layout), traj


def expm_oracle(h_static: Operator | np.ndarray, t: float) -> np.ndarray:
    """U = exp(-i H t) by dense eigendecomposition; small systems only.

    Independent of the RK4 path: used as the ground truth in integrator
    tests, never inside the integrators themselves.
    """
    m = h_static.dense() if isinstance(h_static, Operator) else np.asarray(h_static)
    if m.shape[0] > 64:
        raise DimensionError(f"oracle limited to dim <= 64, got {m.shape[0]}")
    if np.max(np.abs(m - m.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(m))):
        raise InvalidStateError("oracle requires a Hermitian matrix")
    evals, vecs = np.linalg.eigh(m)
    return (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T


def fidelity(rho: DensityMatrix | np.ndarray, psi_id: Ket | np.ndarray) -> float:
    """F = sqrt(<psi_id| rho |psi_id>) against a pure target."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    v = psi_id.amplitudes if isinstance(psi_id, Ket) else np.asarray(psi_id)
    expect = complex(np.vdot(v, m @ v))
    if abs(expect.imag) > 1e-10:
        raise InvalidStateError(f"imaginary expectation residual {expect.imag:.3e}")
    if expect.real < -1e-8:
        raise InvalidStateError(f"negative expectation {expect.real:.3e}")
    return math.sqrt(max(0.0, expect.real))


def ket_fidelity(psi: Ket | np.ndarray, target: Ket | np.ndarray) -> float:
    """|<target|psi>| for pure states."""
    a = psi.amplitudes if isinstance(psi, Ket) else np.asarray(psi)
    b = target.amplitudes if isinstance(target, Ket) else np.asarray(target)
    return abs(complex(np.vdot(b, a)))
