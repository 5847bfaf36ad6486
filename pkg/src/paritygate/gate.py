"""Diagonal multi-target controlled-phase gate and its truth table.

The gate on n cavities is the diagonal unitary with Fock-basis phases
``exp(-i [eta n_1 + sum_l chi_1l n_1 n_l] t)``.  When the phase conditions
``chi_1l t = pi`` (every target) and ``eta t = 2 s pi`` hold, that phase is
exactly ``(-1)^{n_1 (n_2 + ... + n_n)}``: the control's parity flips the
parity phase of every target, whatever amplitudes the encodings carry.  The
exact branch assembles these signs in integer arithmetic, so truth tables
can be checked at machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np
import scipy.sparse as sp

from .encoding import ParityEncoding
from .errors import ConfigError, PhaseCoherenceError
from .hilbert import HilbertLayout, Ket, Operator, tensor_state
from .model import EffectiveParams

GATE_CONDITION_RTOL = 1e-6


@dataclass(frozen=True)
class GateSpec:
    """A concrete gate instance: encodings, phase rates and duration.

    ``exact=True`` asserts the phase conditions hold to 1e-6 relative and
    switches the truth-table machinery to integer-exponent phases.
    """

    n: int
    encodings: tuple[ParityEncoding, ...]
    chi: tuple[float, ...]
    eta: float
    duration: float
    s: int
    m_or_mprime: int = 0
    exact: bool = False

    def __post_init__(self):
        if len(self.encodings) != self.n:
            raise ConfigError(f"need {self.n} encodings, got {len(self.encodings)}")
        if len(self.chi) != self.n - 1:
            raise ConfigError(f"need {self.n - 1} cross-Kerr rates, got {len(self.chi)}")
        if self.exact:
            for c in self.chi:
                if abs(c * self.duration - math.pi) > GATE_CONDITION_RTOL * math.pi:
                    raise ConfigError(
                        "gate flagged exact but chi t deviates from pi by "
                        f"{abs(c * self.duration - math.pi):.3e}"
                    )
            target = 2.0 * math.pi * self.s
            if abs(self.eta * self.duration - target) > GATE_CONDITION_RTOL * max(
                2.0 * math.pi, abs(target)
            ):
                raise ConfigError("gate flagged exact but eta t is not 2 s pi")

    @classmethod
    def exact_conditions(cls, encodings: tuple[ParityEncoding, ...], s: int = 0,
                         m_or_mprime: int = 1, duration: float = 1.0) -> "GateSpec":
        """Synthesize rates that satisfy the phase conditions identically."""
        n = len(encodings)
        chi = tuple(math.pi / duration for _ in range(n - 1))
        eta = 2.0 * math.pi * s / duration
        return cls(n=n, encodings=tuple(encodings), chi=chi, eta=eta,
                   duration=duration, s=s, m_or_mprime=m_or_mprime, exact=True)

    @classmethod
    def from_effective(cls, eff: EffectiveParams, duration: float,
                       encodings: tuple[ParityEncoding, ...],
                       m_or_mprime: int = 0) -> "GateSpec":
        n = len(encodings)
        s = round(eff.eta * duration / (2.0 * math.pi))
        chi_ok = all(abs(c * duration - math.pi) <= GATE_CONDITION_RTOL * math.pi
                     for c in eff.chi)
        eta_ok = abs(eff.eta * duration - 2.0 * math.pi * s) <= GATE_CONDITION_RTOL * max(
            2.0 * math.pi, abs(eff.eta * duration))
        return cls(n=n, encodings=tuple(encodings), chi=tuple(eff.chi), eta=eff.eta,
                   duration=duration, s=int(s), m_or_mprime=m_or_mprime,
                   exact=bool(chi_ok and eta_ok))


@dataclass(frozen=True)
class TruthTable:
    """Measured phase factor per logical basis state (i_1, ..., i_n)."""

    phases: dict[tuple[int, ...], complex]

    def __post_init__(self):
        for bits, phase in self.phases.items():
            if abs(abs(phase) - 1.0) > 1e-9:
                raise PhaseCoherenceError(
                    f"phase for basis {bits} has modulus {abs(phase):.12f}"
                )

    def matches_controlled_phase(self, tol: float = 1e-9) -> bool:
        """True when the table equals the ideal multi-target phase gate."""
        for bits, phase in self.phases.items():
            expected = -1.0 if bits[0] == 1 and (sum(bits[1:]) % 2) == 1 else 1.0
            if abs(phase - expected) > tol:
                return False
        return True


def diagonal_phases(chi: tuple[float, ...], eta: float, t: float,
                    cavity_dims: tuple[int, ...]) -> np.ndarray:
    """Fock-basis phase exponents assembled as exp(-i [eta n1 + sum chi n1 nl] t)."""
    grids = np.indices(cavity_dims).reshape(len(cavity_dims), -1).astype(np.float64)
    exponent = eta * t * grids[0]
    for l, c in enumerate(chi, start=1):
        exponent = exponent + c * t * grids[0] * grids[l]
    return np.exp(-1j * exponent)


def exact_diagonal_phases(cavity_dims: tuple[int, ...]) -> np.ndarray:
    """Signs (-1)^(n_1 sum_l n_l), the gate diagonal under exact conditions."""
    grids = np.indices(cavity_dims).reshape(len(cavity_dims), -1)
    flips = grids[0] * grids[1:].sum(axis=0)
    return np.where(flips % 2 == 0, 1.0, -1.0).astype(np.complex128)


def diagonal_gate(eff: EffectiveParams, t: float, layout: HilbertLayout) -> Operator:
    """The cavity-only diagonal unitary for the given rates and duration."""
    cav = layout.cavity_only()
    phases = diagonal_phases(eff.chi, eff.eta, t, cav.cavity_dims)
    return Operator(sp.diags(phases, format="csr"), cav, label="diagonal_gate")


def gate_diagonal(spec: GateSpec, cavity_dims: tuple[int, ...]) -> np.ndarray:
    if spec.exact:
        return exact_diagonal_phases(cavity_dims)
    return diagonal_phases(spec.chi, spec.eta, spec.duration, cavity_dims)


def logical_basis_state(encodings: tuple[ParityEncoding, ...], bits: tuple[int, ...],
                        layout: HilbertLayout) -> Ket:
    """Tensor product of codewords selected by ``bits`` over the cavity register."""
    cav = layout.cavity_only()
    parts: list[np.ndarray | Ket] = [np.ones(1, dtype=np.complex128)]
    for enc, bit, dim in zip(encodings, bits, cav.cavity_dims):
        enc = enc.padded(dim)
        parts.append(enc.phi_o if bit else enc.phi_e)
    return tensor_state(parts, cav)


def verify_truth_table(spec: GateSpec, cavity_dims: tuple[int, ...] | None = None
                       ) -> tuple[TruthTable, float]:
    """Apply the gate to all 2^n logical basis states and read off phases.

    Returns the measured table and the worst eigenvector residual
    ``||U|b> - phase |b>||``; a residual above 1e-6 means the phase
    conditions are broken for that encoding and raises.
    """
    dims = cavity_dims or tuple(e.dim for e in spec.encodings)
    if len(dims) != spec.n:
        raise ConfigError(f"need {spec.n} cavity dims, got {len(dims)}")
    layout = HilbertLayout(cavity_dims=dims, qutrit_dim=1)
    diag = gate_diagonal(spec, dims)

    phases: dict[tuple[int, ...], complex] = {}
    max_dev = 0.0
    for bits in product((0, 1), repeat=spec.n):
        basis = logical_basis_state(spec.encodings, bits, layout)
        out = diag * basis.amplitudes
        ref = int(np.argmax(np.abs(basis.amplitudes)))
        phase = out[ref] / basis.amplitudes[ref]
        phase /= abs(phase)
        dev = float(np.linalg.norm(out - phase * basis.amplitudes))
        max_dev = max(max_dev, dev)
        if dev > 1e-6:
            raise PhaseCoherenceError(
                f"basis {bits} is not a gate eigenvector (residual {dev:.3e}); "
                "phase conditions are broken"
            )
        phases[bits] = complex(phase)
    return TruthTable(phases=phases), max_dev


class HybridizationClass(str, Enum):
    NONHYBRID = "nonhybrid"
    PARTIAL = "partial"
    MAXIMAL = "maximal"


def _same_codeword(a: Ket, b: Ket, tol: float = 1e-8) -> bool:
    return abs(a.overlap(b)) >= 1.0 - tol


def hybridization_class(encodings: list[ParityEncoding] | tuple[ParityEncoding, ...]
                        ) -> HybridizationClass:
    """Nonhybrid when all encodings coincide, maximal when all differ pairwise."""
    dim = max(e.dim for e in encodings)
    padded = [e.padded(dim) for e in encodings]
    pairs = [(a, b) for i, a in enumerate(padded) for b in padded[i + 1:]]
    equal = [
        _same_codeword(a.phi_e, b.phi_e) and _same_codeword(a.phi_o, b.phi_o)
        for a, b in pairs
    ]
    distinct = [
        not _same_codeword(a.phi_e, b.phi_e) and not _same_codeword(a.phi_o, b.phi_o)
        for a, b in pairs
    ]
    if all(equal):
        return HybridizationClass.NONHYBRID
    if all(distinct):
        return HybridizationClass.MAXIMAL
    return HybridizationClass.PARTIAL
