"""Truncated Fock-space and qutrit operator algebra.

The composite Hilbert space is a three-level artificial atom (``g``, ``e``,
``f``) tensored with a register of truncated cavity modes.  One index
convention is frozen here and relied on everywhere else: basis indices are
row-major over ``(qutrit, cavity 1, ..., cavity n)`` with the qutrit as the
slowest-varying factor.

Cavity-only spaces (used by the diagonal gate algebra) are expressed as a
layout with ``qutrit_dim == 1``; the physical composite space always has
``qutrit_dim == 3``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, InvalidStateError

QUTRIT_LEVELS = ("g", "e", "f")
QUTRIT_DIM = 3

#: tolerance below which a state reports itself as normalized
NORM_TOL = 1e-9


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered subsystem dimensions with the frozen index convention.

    ``dims = (qutrit_dim,) + cavity_dims`` and a flat basis index runs
    row-major over ``dims``, so the qutrit index varies slowest and the last
    cavity varies fastest.
    """

    cavity_dims: tuple[int, ...]
    qutrit_dim: int = QUTRIT_DIM

    def __post_init__(self):
        object.__setattr__(self, "cavity_dims", tuple(int(d) for d in self.cavity_dims))
        if self.qutrit_dim not in (1, QUTRIT_DIM):
            raise DimensionError(
                f"qutrit_dim must be 3 (or 1 for a cavity-only layout), got {self.qutrit_dim}"
            )
        if len(self.cavity_dims) == 0:
            raise DimensionError("layout needs at least one cavity")
        for j, d in enumerate(self.cavity_dims, start=1):
            if d < 2:
                raise DimensionError(f"cavity {j} dimension must be >= 2, got {d}")

    @property
    def n_cavities(self) -> int:
        return len(self.cavity_dims)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.qutrit_dim,) + self.cavity_dims

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def flatten(self, multi_index: Sequence[int]) -> int:
        """Flat basis index of ``(q, n_1, ..., n_n)``."""
        if len(multi_index) != len(self.dims):
            raise DimensionError(
                f"multi-index length {len(multi_index)} != subsystem count {len(self.dims)}"
            )
        return int(np.ravel_multi_index(tuple(multi_index), self.dims))

    def unflatten(self, index: int) -> tuple[int, ...]:
        """Multi-index ``(q, n_1, ..., n_n)`` of a flat basis index."""
        if not 0 <= index < self.total_dim:
            raise DimensionError(f"index {index} out of range for dim {self.total_dim}")
        return tuple(int(i) for i in np.unravel_index(index, self.dims))

    def cavity_only(self) -> "HilbertLayout":
        """The same cavity register without the qutrit factor."""
        return HilbertLayout(cavity_dims=self.cavity_dims, qutrit_dim=1)

    def subsystem_dim(self, subsystem: int) -> int:
        """Dimension of subsystem ``0`` (qutrit) or ``1..n`` (cavities)."""
        return self.dims[subsystem]

    def subsystem_name(self, subsystem: int) -> str:
        return "qutrit" if subsystem == 0 else f"cavity {subsystem}"

    def occupation_grid(self, cavity: int) -> np.ndarray:
        """Fock occupation of one cavity for every flat basis index."""
        grid = np.indices(self.dims).reshape(len(self.dims), -1)
        return grid[cavity]


@dataclass(frozen=True)
class Ket:
    """Complex state vector over a layout (or a bare single mode)."""

    amplitudes: np.ndarray
    layout: HilbertLayout | None = None
    tail_mass: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amp)
        if amp.ndim != 1:
            raise DimensionError("ket amplitudes must be one-dimensional")
        if self.layout is not None and amp.shape[0] != self.layout.total_dim:
            raise DimensionError(
                f"ket length {amp.shape[0]} != layout dim {self.layout.total_dim}"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> "Ket":
        n = self.norm()
        if n == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return Ket(self.amplitudes / n, self.layout, self.tail_mass)

    def overlap(self, other: "Ket") -> complex:
        """Inner product ``<self|other>``."""
        if self.dim != other.dim:
            raise DimensionError("overlap requires equal dimensions")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Complex density matrix with trace/Hermiticity diagnostics."""

    entries: np.ndarray
    layout: HilbertLayout

    def __post_init__(self):
        m = np.ascontiguousarray(self.entries, dtype=np.complex128)
        object.__setattr__(self, "entries", m)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise DimensionError(f"density matrix shape {m.shape} != ({d}, {d})")

    @classmethod
    def from_ket(cls, ket: Ket) -> "DensityMatrix":
        if ket.layout is None:
            raise DimensionError("ket must carry a layout")
        return cls(np.outer(ket.amplitudes, ket.amplitudes.conj()), ket.layout)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10,
                 positivity_tol: float | None = None) -> None:
        """Raise when the stored matrix violates its physicality bounds."""
        if abs(self.trace() - 1.0) > trace_tol:
            raise InvalidStateError(f"trace {self.trace():.3e} deviates from 1 beyond {trace_tol}")
        if self.hermiticity_defect() > herm_tol:
            raise InvalidStateError(f"Hermiticity defect {self.hermiticity_defect():.3e} > {herm_tol}")
        if positivity_tol is not None and self.min_eigenvalue() < -positivity_tol:
            raise InvalidStateError(f"min eigenvalue {self.min_eigenvalue():.3e} < -{positivity_tol}")


@dataclass(frozen=True)
class Operator:
    """Square operator over a layout (or a bare single mode)."""

    matrix: sp.spmatrix | np.ndarray
    layout: HilbertLayout | None = None
    label: str = ""

    def __post_init__(self):
        m = self.matrix
        if not sp.issparse(m):
            m = np.asarray(m, dtype=np.complex128)
            object.__setattr__(self, "matrix", m)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        if self.layout is not None and m.shape[0] != self.layout.total_dim:
            raise DimensionError(
                f"operator dim {m.shape[0]} != layout dim {self.layout.total_dim}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        if sp.issparse(self.matrix):
            return np.asarray(self.matrix.todense(), dtype=np.complex128)
        return self.matrix

    def sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.matrix, dtype=np.complex128)

    def dag(self) -> "Operator":
        return Operator(self.sparse().conj().T.tocsr(), self.layout, self.label + "^dag")

    def apply(self, ket: Ket) -> Ket:
        if ket.dim != self.dim:
            raise DimensionError("operator/ket dimension mismatch")
        return Ket(self.sparse() @ ket.amplitudes, ket.layout)


# ---------------------------------------------------------------------------
# single-mode and qutrit building blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeOperators:
    annihilation: Operator
    creation: Operator
    number: Operator
    parity: Operator


def mode_operators(dim: int) -> ModeOperators:
    """Ladder, number and photon-number-parity operators on one mode.

    ``<n-1|a|n> = sqrt(n)``, ``parity = diag((-1)^n)``.
    """
    if dim < 2:
        raise DimensionError(f"mode dimension must be >= 2, got {dim}")
    n = np.arange(dim)
    a = sp.diags(np.sqrt(n[1:]).astype(np.complex128), offsets=1, format="csr")
    adag = a.conj().T.tocsr()
    number = sp.diags(n.astype(np.complex128), format="csr")
    parity = sp.diags(((-1.0) ** n).astype(np.complex128), format="csr")
    return ModeOperators(
        annihilation=Operator(a, label=f"a[{dim}]"),
        creation=Operator(adag, label=f"a_dag[{dim}]"),
        number=Operator(number, label=f"n[{dim}]"),
        parity=Operator(parity, label=f"parity[{dim}]"),
    )


@dataclass(frozen=True)
class QutritOperators:
    sigma_fg: Operator   # |g><f|
    sigma_fe: Operator   # |e><f|
    sigma_eg: Operator   # |g><e|
    proj_gg: Operator
    proj_ee: Operator
    proj_ff: Operator


def _ketbra(i: int, j: int) -> sp.csr_matrix:
    m = sp.lil_matrix((QUTRIT_DIM, QUTRIT_DIM), dtype=np.complex128)
    m[i, j] = 1.0
    return m.tocsr()


def qutrit_operators() -> QutritOperators:
    """Lowering and projector operators in the fixed (g, e, f) basis order."""
    g, e, f = 0, 1, 2
    return QutritOperators(
        sigma_fg=Operator(_ketbra(g, f), label="sigma_fg"),
        sigma_fe=Operator(_ketbra(e, f), label="sigma_fe"),
        sigma_eg=Operator(_ketbra(g, e), label="sigma_eg"),
        proj_gg=Operator(_ketbra(g, g), label="proj_gg"),
        proj_ee=Operator(_ketbra(e, e), label="proj_ee"),
        proj_ff=Operator(_ketbra(f, f), label="proj_ff"),
    )


def qutrit_state(level: str | int) -> Ket:
    """Basis ket of the qutrit, by name ('g', 'e', 'f') or index."""
    idx = QUTRIT_LEVELS.index(level) if isinstance(level, str) else int(level)
    amp = np.zeros(QUTRIT_DIM, dtype=np.complex128)
    amp[idx] = 1.0
    return Ket(amp)


def fock_state(n: int, dim: int) -> Ket:
    if not 0 <= n < dim:
        raise DimensionError(f"Fock index {n} out of range for dim {dim}")
    amp = np.zeros(dim, dtype=np.complex128)
    amp[n] = 1.0
    return Ket(amp)


def coherent_state(alpha: complex, dim: int) -> Ket:
    """Truncated coherent state, renormalized, with a tail-mass diagnostic.

    Warns when the truncated Poisson tail exceeds 1e-8; the stored
    ``tail_mass`` makes the truncation error auditable either way.
    """
    if dim < 2:
        raise DimensionError(f"mode dimension must be >= 2, got {dim}")
    alpha = complex(alpha)
    n = np.arange(dim)
    # log-domain amplitudes to stay stable for large alpha/dim
    mag2 = abs(alpha) ** 2
    if alpha == 0:
        amp = np.zeros(dim, dtype=np.complex128)
        amp[0] = 1.0
        return Ket(amp, tail_mass=0.0)
    log_mag = -mag2 / 2 + n * math.log(abs(alpha)) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in range(dim)]
    )
    phase = np.exp(1j * np.angle(alpha) * n)
    amp = np.exp(log_mag) * phase
    included = float(np.sum(np.abs(amp) ** 2))
    tail = max(0.0, 1.0 - included)
    if tail > 1e-8:
        warnings.warn(
            f"coherent state |alpha|={abs(alpha):.3g} truncated at dim {dim} "
            f"leaves tail mass {tail:.3e} > 1e-8",
            stacklevel=2,
        )
    amp /= math.sqrt(included)
    return Ket(amp, tail_mass=tail)


# ---------------------------------------------------------------------------
# composite-space machinery
# ---------------------------------------------------------------------------


def embed(op: Operator, subsystem: int, layout: HilbertLayout) -> Operator:
    """Lift a single-subsystem operator to the full space: I x ... op ... x I."""
    dims = layout.dims
    if not 0 <= subsystem < len(dims):
        raise DimensionError(f"subsystem index {subsystem} out of range")
    if op.dim != dims[subsystem]:
        raise DimensionError(
            f"operator dim {op.dim} does not match {layout.subsystem_name(subsystem)} "
            f"dim {dims[subsystem]}"
        )
    left = int(np.prod(dims[:subsystem])) if subsystem > 0 else 1
    right = int(np.prod(dims[subsystem + 1:])) if subsystem + 1 < len(dims) else 1
    m = op.sparse()
    if left > 1:
        m = sp.kron(sp.identity(left, dtype=np.complex128, format="csr"), m, format="csr")
    if right > 1:
        m = sp.kron(m, sp.identity(right, dtype=np.complex128, format="csr"), format="csr")
    return Operator(m.tocsr(), layout, label=f"{op.label}@{layout.subsystem_name(subsystem)}")


def embed_product(ops: dict[int, Operator], layout: HilbertLayout, label: str = "") -> Operator:
    """Tensor product of operators on distinct subsystems, identity elsewhere."""
    dims = layout.dims
    factors = []
    for s, d in enumerate(dims):
        if s in ops:
            if ops[s].dim != d:
                raise DimensionError(
                    f"operator dim {ops[s].dim} does not match "
                    f"{layout.subsystem_name(s)} dim {d}"
                )
            factors.append(ops[s].sparse())
        else:
            factors.append(sp.identity(d, dtype=np.complex128, format="csr"))
    m = factors[0]
    for f in factors[1:]:
        m = sp.kron(m, f, format="csr")
    return Operator(m.tocsr(), layout, label=label)


def tensor_state(parts: Iterable[Ket | np.ndarray], layout: HilbertLayout) -> Ket:
    """Kronecker product of per-subsystem kets in layout order."""
    arrays = [p.amplitudes if isinstance(p, Ket) else np.asarray(p, dtype=np.complex128)
              for p in parts]
    dims = layout.dims
    if len(arrays) != len(dims):
        raise DimensionError(f"got {len(arrays)} parts for {len(dims)} subsystems")
    for s, (arr, d) in enumerate(zip(arrays, dims)):
        if arr.shape[0] != d:
            raise DimensionError(
                f"part for {layout.subsystem_name(s)} has dim {arr.shape[0]}, expected {d}"
            )
    amp = arrays[0]
    for arr in arrays[1:]:
        amp = np.kron(amp, arr)
    tail = sum(p.tail_mass for p in parts if isinstance(p, Ket))
    return Ket(amp, layout, tail_mass=tail)


def partial_trace(matrix: np.ndarray, layout: HilbertLayout, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix over the kept subsystems (indices into dims)."""
    dims = layout.dims
    k = len(dims)
    keep = tuple(sorted(keep))
    t = np.asarray(matrix).reshape(dims + dims)
    traced = [s for s in range(k) if s not in keep]
    for offset, s in enumerate(traced):
        ax = s - offset
        t = np.trace(t, axis1=ax, axis2=ax + (k - offset))
    d_keep = int(np.prod([dims[s] for s in keep]))
    return t.reshape(d_keep, d_keep)


def qutrit_populations(diag: np.ndarray, layout: HilbertLayout) -> np.ndarray:
    """Populations of g, e, f from a full-space diagonal."""
    if layout.qutrit_dim != QUTRIT_DIM:
        raise DimensionError("layout has no qutrit factor")
    block = layout.total_dim // QUTRIT_DIM
    return np.real(diag.reshape(QUTRIT_DIM, block).sum(axis=1))


def cavity_mean_occupations(diag: np.ndarray, layout: HilbertLayout) -> np.ndarray:
    """Mean photon number of each cavity from a full-space diagonal."""
    p = np.real(diag).reshape(layout.dims)
    out = np.empty(layout.n_cavities)
    for j in range(1, layout.n_cavities + 1):
        axes = tuple(s for s in range(len(layout.dims)) if s != j)
        marg = p.sum(axis=axes)
        out[j - 1] = float(np.dot(marg, np.arange(layout.dims[j])))
    return out
