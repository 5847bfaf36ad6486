"""System parameters, derived couplings and the four Hamiltonian tiers.

All frequencies and rates are angular (rad/s) internally; configuration I/O
converts from the GHz-over-2pi / microsecond conventions of the parameter
tables.  Cavity 1 couples to the g-f transition (detuning delta_1), every
other cavity couples to the e-f transition (delta_l); the unwanted
assignments are the swapped ones, and direct cavity-cavity crosstalk is an
imperfection on top.  Crosstalk detunings are always derived from the cavity
frequencies so that every oscillation phase stays self-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .dynamics import HamiltonianTerm, TimeDependentHamiltonian
from .errors import ConfigError, DimensionError, RegimeError, SingularityError
from .hilbert import HilbertLayout, Operator, embed_product, mode_operators, qutrit_operators

GHZ = 2.0 * math.pi * 1e9   # angular rad/s per (omega/2pi) GHz
US = 1e-6

THREE_LEVEL_RTOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Qutrit and cavity frequencies plus every coupling strength (rad/s)."""

    omega_eg: float
    omega_fe: float
    omega_fg: float
    omega_c: tuple[float, ...]
    g: tuple[float, ...]
    g_prime: tuple[float, ...] | None = None
    g_cross: dict[tuple[int, int], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega_c", tuple(float(w) for w in self.omega_c))
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))
        if self.g_prime is not None:
            object.__setattr__(self, "g_prime", tuple(float(v) for v in self.g_prime))
        scale = max(abs(self.omega_fg), 1.0)
        if abs(self.omega_fg - (self.omega_eg + self.omega_fe)) > THREE_LEVEL_RTOL * scale:
            raise ConfigError(
                "three-level consistency violated: omega_fg != omega_eg + omega_fe "
                f"({self.omega_fg:.6e} vs {self.omega_eg + self.omega_fe:.6e})"
            )
        if len(self.g) != self.n_cavities:
            raise ConfigError(f"need {self.n_cavities} couplings, got {len(self.g)}")
        if self.g_prime is not None and len(self.g_prime) != self.n_cavities:
            raise ConfigError("g_prime length does not match cavity count")
        if self.g_cross is not None:
            for (k, l) in self.g_cross:
                if not (1 <= k < l <= self.n_cavities):
                    raise ConfigError(f"invalid crosstalk pair ({k}, {l})")

    @property
    def n_cavities(self) -> int:
        return len(self.omega_c)

    @property
    def g_max(self) -> float:
        return max(self.g)

    @classmethod
    def from_ghz(cls, omega_eg: float, omega_fe: float, omega_fg: float,
                 omega_c: tuple[float, ...], g: tuple[float, ...],
                 g_prime: tuple[float, ...] | None = None,
                 g_cross: dict[tuple[int, int], float] | None = None) -> "SystemParams":
        """Build from omega/2pi values in GHz (the table convention)."""
        return cls(
            omega_eg=omega_eg * GHZ, omega_fe=omega_fe * GHZ, omega_fg=omega_fg * GHZ,
            omega_c=tuple(w * GHZ for w in omega_c),
            g=tuple(v * GHZ for v in g),
            g_prime=None if g_prime is None else tuple(v * GHZ for v in g_prime),
            g_cross=None if g_cross is None else {k: v * GHZ for k, v in g_cross.items()},
        )

    def with_uniform_crosstalk(self, strength: float) -> "SystemParams":
        pairs = {(k, l): strength for k in range(1, self.n_cavities + 1)
                 for l in range(k + 1, self.n_cavities + 1)}
        return SystemParams(self.omega_eg, self.omega_fe, self.omega_fg,
                            self.omega_c, self.g, self.g_prime, pairs)


@dataclass(frozen=True)
class Detunings:
    """Wanted/unwanted detunings (cavity order 1..n) and pairwise splittings."""

    delta: tuple[float, ...]          # delta_1 = omega_fg - omega_c1, delta_l = omega_fe - omega_cl
    delta_prime: tuple[float, ...]    # the swapped-transition assignments
    gate: tuple[float, ...]           # Delta_1l = delta_l - delta_1 for l = 2..n
    cross: dict[tuple[int, int], float]   # omega_ck - omega_cl for k < l

    @property
    def delta_1(self) -> float:
        return self.delta[0]


def derive_detunings(params: SystemParams) -> Detunings:
    """Detunings from the frequency table; raises outside the gate regime."""
    delta = [params.omega_fg - params.omega_c[0]]
    delta_prime = [params.omega_fe - params.omega_c[0]]
    for wc in params.omega_c[1:]:
        delta.append(params.omega_fe - wc)
        delta_prime.append(params.omega_fg - wc)
    for j, d in enumerate(delta, start=1):
        if d <= 0:
            raise RegimeError(f"wanted detuning of cavity {j} must be positive, got {d:.3e}")
    gate = tuple(d - delta[0] for d in delta[1:])
    cross = {(k, l): params.omega_c[k - 1] - params.omega_c[l - 1]
             for k in range(1, params.n_cavities + 1)
             for l in range(k + 1, params.n_cavities + 1)}
    return Detunings(delta=tuple(delta), delta_prime=tuple(delta_prime),
                     gate=gate, cross=cross)


@dataclass(frozen=True)
class EffectiveParams:
    """Second-order dispersive rates (all rad/s)."""

    lambda_1: float
    lambda_targets: tuple[float, ...]   # lambda_l, l = 2..n
    lambda_pair: tuple[float, ...]      # lambda_1l
    chi: tuple[float, ...]              # chi_1l = lambda_1l^2 / Delta_1l
    eta: float                          # -lambda_1 + sum chi_1l


def effective_params(params: SystemParams, detunings: Detunings) -> EffectiveParams:
    g1 = params.g[0]
    d1 = detunings.delta_1
    lambda_1 = g1 ** 2 / d1
    lambda_targets, lambda_pair, chi = [], [], []
    for gl, dl, big in zip(params.g[1:], detunings.delta[1:], detunings.gate):
        if big == 0:
            raise SingularityError("Delta_1l = 0: cavity l degenerate with cavity 1")
        lam_l = gl ** 2 / dl
        lam_1l = (g1 * gl / 2.0) * (1.0 / d1 + 1.0 / dl)
        lambda_targets.append(lam_l)
        lambda_pair.append(lam_1l)
        chi.append(lam_1l ** 2 / big)
    eta = -lambda_1 + sum(chi)
    return EffectiveParams(lambda_1=lambda_1, lambda_targets=tuple(lambda_targets),
                           lambda_pair=tuple(lambda_pair), chi=tuple(chi), eta=eta)


class TargetCountParity(str, Enum):
    EVEN = "even"
    ODD = "odd"


def solve_coupling(target_count_parity: TargetCountParity | str, m_or_mprime: int,
                   delta_1: float, delta_l: float) -> float:
    """Coupling g_l that locks chi_1l to lambda_1/(2m) or lambda_1/(2m'+1).

    The even branch assumes lambda_1 t = 2 m pi, the odd branch
    lambda_1 t = (2m'+1) pi; either way the result is independent of g_1.
    """
    parity = TargetCountParity(target_count_parity)
    if delta_1 <= 0:
        raise RegimeError(f"delta_1 must be positive, got {delta_1:.3e}")
    if delta_l <= delta_1:
        raise RegimeError("delta_l must exceed delta_1 for a positive gate detuning")
    big = delta_l - delta_1
    if parity is TargetCountParity.EVEN:
        if m_or_mprime < 1:
            raise ConfigError("even branch needs m >= 1")
        return (delta_l / (delta_1 + delta_l)) * math.sqrt(2.0 * big * delta_1 / m_or_mprime)
    if m_or_mprime < 0:
        raise ConfigError("odd branch needs m' >= 0")
    denom = 2 * m_or_mprime + 1
    return (2.0 * delta_l / (delta_1 + delta_l)) * math.sqrt(big * delta_1 / denom)


@dataclass(frozen=True)
class GateConditionReport:
    chi_phase_residuals: tuple[float, ...]   # relative |chi_1l t - pi| / pi
    s: int                                   # nearest integer in eta t = 2 s pi
    eta_residual: float                      # relative residual of eta t - 2 s pi
    passes: bool


def check_gate_condition(eff: EffectiveParams, t: float, n: int | None = None,
                         rtol: float = 1e-6) -> GateConditionReport:
    """Residuals of chi_1l t = pi (per target) and eta t = 2 s pi."""
    if n is not None and len(eff.chi) != n - 1:
        raise ConfigError(f"expected {n-1} cross-Kerr rates, got {len(eff.chi)}")
    chi_res = tuple(abs(c * t - math.pi) / math.pi for c in eff.chi)
    s = round(eff.eta * t / (2.0 * math.pi))
    eta_res = abs(eff.eta * t - 2.0 * math.pi * s) / max(2.0 * math.pi, abs(eff.eta * t))
    passes = all(r <= rtol for r in chi_res) and eta_res <= rtol
    return GateConditionReport(chi_phase_residuals=chi_res, s=int(s),
                               eta_residual=eta_res, passes=passes)


@dataclass(frozen=True)
class RegimeReport:
    ratios: dict[str, float]
    flagged: tuple[str, ...]
    threshold: float


def check_regime(params: SystemParams, detunings: Detunings, eff: EffectiveParams,
                 threshold: float = 10.0) -> RegimeReport:
    """Dimensionless dispersive-validity ratios; flags anything below threshold."""
    ratios: dict[str, float] = {}
    ratios["delta_1/g_1"] = detunings.delta_1 / params.g[0]
    for l in range(2, params.n_cavities + 1):
        ratios[f"delta_{l}/g_{l}"] = detunings.delta[l - 1] / params.g[l - 1]
    # induced cavity-cavity interaction suppression between targets p, q
    for p in range(2, params.n_cavities + 1):
        for q in range(p + 1, params.n_cavities + 1):
            dp, dq = detunings.delta[p - 1], detunings.delta[q - 1]
            lhs = abs(dp - dq) / (1.0 / dp + 1.0 / dq)
            rhs = params.g[p - 1] * params.g[q - 1]
            ratios[f"pair_{p}{q}"] = lhs / rhs if rhs > 0 else math.inf
    for l, big in zip(range(2, params.n_cavities + 1), detunings.gate):
        lam_max = max(eff.lambda_1, eff.lambda_targets[l - 2], eff.lambda_pair[l - 2])
        ratios[f"Delta_1{l}/lambda"] = big / lam_max if lam_max > 0 else math.inf
    flagged = tuple(name for name, v in ratios.items() if v < threshold)
    return RegimeReport(ratios=ratios, flagged=flagged, threshold=threshold)


class HamiltonianTier(str, Enum):
    IDEAL = "ideal"
    DISPERSIVE = "dispersive"
    EFFECTIVE = "effective"
    FULL = "full"


@dataclass(frozen=True)
class HamiltonianToggles:
    unwanted_couplings: bool = False
    crosstalk: bool = False


def effective_diagonal(eff: EffectiveParams, layout: HilbertLayout) -> np.ndarray:
    """Diagonal of eta n_1 + sum_l chi_1l n_1 n_l over a cavity-only layout."""
    dims = layout.cavity_dims
    grids = np.indices(dims).reshape(len(dims), -1).astype(np.float64)
    diag = eff.eta * grids[0]
    for l, c in enumerate(eff.chi, start=1):
        diag = diag + c * grids[0] * grids[l]
    return diag


def build_hamiltonian(
    tier: HamiltonianTier | str,
    params: SystemParams,
    detunings: Detunings,
    layout: HilbertLayout,
    toggles: HamiltonianToggles | None = None,
) -> TimeDependentHamiltonian:
    """One of the four Hamiltonian tiers over the given layout.

    ``ideal``: wanted interaction-picture couplings only.  ``dispersive``:
    static second-order Stark/cross-Kerr form.  ``effective``: the diagonal
    cavity-only form driving the gate (returned on ``layout.cavity_only()``).
    ``full``: ideal plus (per toggles) the unwanted couplings and the
    intercavity crosstalk.  The g <-> e qutrit-cavity coupling never appears.
    """
    tier = HamiltonianTier(tier)
    toggles = toggles or HamiltonianToggles()
    n = params.n_cavities
    if layout.n_cavities != n:
        raise DimensionError(
            f"layout has {layout.n_cavities} cavities, parameters describe {n}"
        )

    if tier is HamiltonianTier.EFFECTIVE:
        cav = layout.cavity_only()
        eff = effective_params(params, detunings)
        diag = effective_diagonal(eff, cav)
        op = Operator(sp.diags(diag.astype(np.complex128), format="csr"), cav,
                      label="effective_diagonal")
        return TimeDependentHamiltonian(cav, [HamiltonianTerm(op, 0.0)], label="effective")

    qt = qutrit_operators()
    modes = [mode_operators(d) for d in layout.cavity_dims]
    terms: list[HamiltonianTerm] = []

    def coupling_term(cavity: int, sigma: Operator, strength: float, detuning: float,
                      label: str) -> HamiltonianTerm:
        op = embed_product({0: sigma, cavity: modes[cavity - 1].creation}, layout,
                           label=label)
        return HamiltonianTerm(Operator(strength * op.sparse(), layout, label), -detuning)

    if tier in (HamiltonianTier.IDEAL, HamiltonianTier.FULL):
        terms.append(coupling_term(1, qt.sigma_fg, params.g[0], detunings.delta[0],
                                   "g1 a1+ sigma_fg"))
        for l in range(2, n + 1):
            terms.append(coupling_term(l, qt.sigma_fe, params.g[l - 1],
                                       detunings.delta[l - 1], f"g{l} a{l}+ sigma_fe"))

        if tier is HamiltonianTier.FULL and toggles.unwanted_couplings:
            if params.g_prime is None:
                raise ConfigError("unwanted couplings requested but g_prime is unset")
            terms.append(coupling_term(1, qt.sigma_fe, params.g_prime[0],
                                       detunings.delta_prime[0], "g1' a1+ sigma_fe"))
            for l in range(2, n + 1):
                terms.append(coupling_term(l, qt.sigma_fg, params.g_prime[l - 1],
                                           detunings.delta_prime[l - 1],
                                           f"g{l}' a{l}+ sigma_fg"))
        if tier is HamiltonianTier.FULL and toggles.crosstalk:
            if not params.g_cross:
                raise ConfigError("crosstalk requested but g_cross is unset")
            for (k, l), strength in sorted(params.g_cross.items()):
                op = embed_product({k: modes[k - 1].creation,
                                    l: modes[l - 1].annihilation}, layout,
                                   label=f"a{k}+ a{l}")
                terms.append(HamiltonianTerm(
                    Operator(strength * op.sparse(), layout, f"crosstalk {k}{l}"),
                    detunings.cross[(k, l)],
                ))
        return TimeDependentHamiltonian(layout, terms, label=tier.value)

    # dispersive tier: static photon-number-dependent shifts plus cross-Kerr
    eff = effective_params(params, detunings)

    def proj_term(matrix, label):
        return HamiltonianTerm(Operator(matrix.tocsr(), layout, label), 0.0)

    n1 = embed_product({1: modes[0].number}, layout).sparse()
    pg = embed_product({0: qt.proj_gg}, layout).sparse()
    pe = embed_product({0: qt.proj_ee}, layout).sparse()
    pf = embed_product({0: qt.proj_ff}, layout).sparse()
    eye = sp.identity(layout.total_dim, dtype=np.complex128, format="csr")

    h = -eff.lambda_1 * (n1 @ pg) + eff.lambda_1 * ((eye + n1) @ pf)
    for l in range(2, n + 1):
        nl = embed_product({l: modes[l - 1].number}, layout).sparse()
        lam_l = eff.lambda_targets[l - 2]
        chi_l = eff.chi[l - 2]
        h = h - lam_l * (nl @ pe) + lam_l * ((eye + nl) @ pf)
        h = h + chi_l * (n1 @ (eye + nl) @ pg)
        h = h - chi_l * ((eye + n1) @ nl @ pe)
    return TimeDependentHamiltonian(layout, [proj_term(h, "dispersive")],
                                    label="dispersive")


def quality_factor(omega_c: float, kappa_inverse: float) -> float:
    """Q = omega_c * kappa^-1 for a cavity with angular frequency omega_c."""
    if omega_c <= 0 or kappa_inverse <= 0:
        raise ConfigError("quality factor needs positive frequency and lifetime")
    return omega_c * kappa_inverse


@dataclass(frozen=True)
class DecoherenceParams:
    """Qutrit and cavity loss rates (1/s)."""

    T: float
    kappa: tuple[float, ...]
    gamma_eg: float
    gamma_fe: float
    gamma_fg: float
    gamma_phi_e: float
    gamma_phi_f: float

    @classmethod
    def from_times(cls, T: float, kappa_inverse: float, n_cavities: int = 3) -> "DecoherenceParams":
        """Standard relations: gamma_eg = 1/(10T), gamma_fe = gamma_fg = 1/T,
        dephasing rates 2/T, and a common cavity decay 1/kappa_inverse."""
        if T <= 0 or kappa_inverse <= 0:
            raise ConfigError("coherence times must be positive")
        return cls(T=T, kappa=tuple(1.0 / kappa_inverse for _ in range(n_cavities)),
                   gamma_eg=1.0 / (10.0 * T), gamma_fe=1.0 / T, gamma_fg=1.0 / T,
                   gamma_phi_e=2.0 / T, gamma_phi_f=2.0 / T)

    @classmethod
    def lossless(cls, n_cavities: int = 3) -> "DecoherenceParams":
        return cls(T=math.inf, kappa=tuple(0.0 for _ in range(n_cavities)),
                   gamma_eg=0.0, gamma_fe=0.0, gamma_fg=0.0,
                   gamma_phi_e=0.0, gamma_phi_f=0.0)
