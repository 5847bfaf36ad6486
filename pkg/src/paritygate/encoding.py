"""Parity encodings of photonic qubits.

A logical qubit lives in one cavity mode: logical 0 is an even eigenstate of
the photon-number parity operator, logical 1 an odd one.  Seven concrete
families are provided, from bare Fock states to multicomponent cat states.
Opposite parity makes the two codewords orthogonal automatically, but every
constructed encoding is still validated against its invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError, EncodingConsistencyError, TruncationError
from .hilbert import Ket, coherent_state, fock_state, mode_operators

PARITY_TOL = 1e-9
OVERLAP_TOL = 1e-10
TAIL_TOL = 1e-8


class EncodingFamily(str, Enum):
    FOCK01 = "fock01"
    FOCK_PAIR = "fock_pair"
    FOCK_SUPERPOSITION = "fock_superposition"
    CAT_PAIR = "cat_pair"
    FOCK_CAT_MIX = "fock_cat_mix"
    SQUEEZED_VS_CAT = "squeezed_vs_cat"
    MULTICOMPONENT_CAT = "multicomponent_cat"


@dataclass(frozen=True)
class EncodingFamilySpec:
    """Parameters selecting one encoding family.

    Only the fields relevant to the chosen family are read:

    - ``fock_pair``: ``m``, ``n`` select ``|2m>`` and ``|2n+1>``.
    - ``fock_superposition``: ``even_coeffs`` over ``|0>,|2>,...`` and
      ``odd_coeffs`` over ``|1>,|3>,...`` (renormalized).
    - cat families: ``alpha``; ``fock_cat_mix`` additionally mixes with
      ``|2m>``/``|2n+1>`` using ``mix_even``/``mix_odd`` weights, and
      ``multicomponent_cat`` combines the alpha and i*alpha cat pairs with
      the same weights.
    - ``squeezed_vs_cat``: squeezing ``r``, ``theta`` for the even codeword,
      ``alpha`` for the odd cat.
    """

    family: EncodingFamily
    m: int = 0
    n: int = 0
    even_coeffs: tuple[complex, ...] | None = None
    odd_coeffs: tuple[complex, ...] | None = None
    alpha: complex = 0.0
    r: float = 0.0
    theta: float = 0.0
    mix_even: tuple[complex, complex] = (1.0, 1.0)
    mix_odd: tuple[complex, complex] = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "family", EncodingFamily(self.family))
        fam = self.family
        if fam in (EncodingFamily.CAT_PAIR, EncodingFamily.FOCK_CAT_MIX,
                   EncodingFamily.SQUEEZED_VS_CAT, EncodingFamily.MULTICOMPONENT_CAT):
            if abs(complex(self.alpha)) <= 0:
                raise ConfigError(f"family {fam.value} needs |alpha| > 0")
        if fam is EncodingFamily.FOCK_SUPERPOSITION:
            if not self.even_coeffs or not self.odd_coeffs:
                raise ConfigError("fock_superposition needs even_coeffs and odd_coeffs")
        if fam is EncodingFamily.SQUEEZED_VS_CAT and self.r <= 0:
            raise ConfigError("squeezed_vs_cat needs r > 0")
        if self.m < 0 or self.n < 0:
            raise ConfigError("Fock indices m, n must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "EncodingFamilySpec":
        kwargs = dict(data)
        for key in ("even_coeffs", "odd_coeffs", "mix_even", "mix_odd"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(complex(c) if not isinstance(c, list) else complex(*c)
                                    for c in kwargs[key])
        if "alpha" in kwargs and isinstance(kwargs["alpha"], list):
            kwargs["alpha"] = complex(*kwargs["alpha"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ParityEncoding:
    """Validated pair of even/odd parity codewords for one cavity."""

    phi_e: Ket
    phi_o: Ket
    dim: int
    family_label: str

    def __post_init__(self):
        if self.phi_e.dim != self.dim or self.phi_o.dim != self.dim:
            raise DimensionError("codeword dimension does not match encoding dim")

    def padded(self, dim: int) -> "ParityEncoding":
        """Zero-pad both codewords to a larger truncation."""
        if dim < self.dim:
            raise DimensionError("can only pad to a larger dimension")
        if dim == self.dim:
            return self
        pe = np.zeros(dim, dtype=np.complex128)
        po = np.zeros(dim, dtype=np.complex128)
        pe[: self.dim] = self.phi_e.amplitudes
        po[: self.dim] = self.phi_o.amplitudes
        return ParityEncoding(Ket(pe, tail_mass=self.phi_e.tail_mass),
                              Ket(po, tail_mass=self.phi_o.tail_mass),
                              dim, self.family_label)


@dataclass(frozen=True)
class EncodingReport:
    parity_residual_even: float
    parity_residual_odd: float
    overlap: float
    norm_even: float
    norm_odd: float
    tail_even: float
    tail_odd: float
    passed: bool

    @property
    def codewords_ok(self) -> bool:
        """Parity, orthogonality and norm invariants, ignoring tail mass."""
        return (self.parity_residual_even <= PARITY_TOL
                and self.parity_residual_odd <= PARITY_TOL
                and self.overlap <= OVERLAP_TOL
                and abs(self.norm_even - 1.0) <= PARITY_TOL
                and abs(self.norm_odd - 1.0) <= PARITY_TOL)


def squeezed_vacuum(r: float, theta: float, dim: int) -> Ket:
    """Squeezed vacuum with convention S(xi) = exp[(xi* a^2 - xi a^dag^2)/2].

    Amplitudes c_{2k} = (cosh r)^{-1/2} (-e^{i theta} tanh r)^k sqrt((2k)!)/(2^k k!).
    """
    amp = np.zeros(dim, dtype=np.complex128)
    base = -math.tanh(r) * np.exp(1j * theta)
    for k in range(0, (dim + 1) // 2):
        log_mag = 0.5 * math.lgamma(2 * k + 1) - k * math.log(2.0) - math.lgamma(k + 1)
        amp[2 * k] = (base ** k) * math.exp(log_mag)
    amp /= math.sqrt(math.cosh(r))
    included = float(np.sum(np.abs(amp) ** 2))
    tail = max(0.0, 1.0 - included)
    amp /= math.sqrt(included)
    return Ket(amp, tail_mass=tail)


def _cat_components(alpha: complex, dim: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Unnormalized even/odd cat amplitude vectors and their joint tail mass."""
    coh_p = coherent_state(alpha, dim)
    coh_m = coherent_state(-alpha, dim)
    even = coh_p.amplitudes + coh_m.amplitudes
    odd = coh_p.amplitudes - coh_m.amplitudes
    return even, odd, max(coh_p.tail_mass, coh_m.tail_mass)


def cat_normalizations(alpha: complex) -> tuple[float, float]:
    """Closed-form normalizations of the even and odd cat states."""
    q = math.exp(-2.0 * abs(alpha) ** 2)
    return 1.0 / math.sqrt(2.0 * (1.0 + q)), 1.0 / math.sqrt(2.0 * (1.0 - q))


def _estimate_tail(build, dim: int, probe_extra: int = 24) -> tuple[float, float]:
    """Tail mass of a state's even/odd construction beyond ``dim``.

    Rebuilds the (unnormalized) codewords at a larger cutoff and measures the
    probability weight on the discarded levels.
    """
    big = dim + probe_extra
    phi_e_big, phi_o_big = build(big)
    tails = []
    for v in (phi_e_big, phi_o_big):
        total = float(np.sum(np.abs(v) ** 2))
        beyond = float(np.sum(np.abs(v[dim:]) ** 2))
        tails.append(beyond / total if total > 0 else 0.0)
    return tails[0], tails[1]


def make_encoding(spec: EncodingFamilySpec, dim: int,
                  tail_tol: float = TAIL_TOL) -> ParityEncoding:
    """Construct and validate one encoding family at a Fock truncation.

    Raises ``TruncationError`` when either codeword would leave more than
    ``tail_tol`` of its weight beyond ``dim`` (1e-8 by default; reduced-
    accuracy profiles may relax this, the tail stays recorded either way),
    and ``EncodingConsistencyError`` when the constructed pair violates the
    parity-eigenstate invariants.
    """
    fam = spec.family

    def build(d: int) -> tuple[np.ndarray, np.ndarray]:
        if fam is EncodingFamily.FOCK01:
            return fock_state(0, d).amplitudes, fock_state(1, d).amplitudes
        if fam is EncodingFamily.FOCK_PAIR:
            if 2 * spec.m >= d or 2 * spec.n + 1 >= d:
                raise TruncationError(
                    f"Fock pair (|{2*spec.m}>, |{2*spec.n+1}>) exceeds dim {d}"
                )
            return fock_state(2 * spec.m, d).amplitudes, fock_state(2 * spec.n + 1, d).amplitudes
        if fam is EncodingFamily.FOCK_SUPERPOSITION:
            even = np.zeros(d, dtype=np.complex128)
            odd = np.zeros(d, dtype=np.complex128)
            for k, c in enumerate(spec.even_coeffs):
                if 2 * k >= d:
                    raise TruncationError(f"even coefficient on |{2*k}> exceeds dim {d}")
                even[2 * k] = c
            for k, c in enumerate(spec.odd_coeffs):
                if 2 * k + 1 >= d:
                    raise TruncationError(f"odd coefficient on |{2*k+1}> exceeds dim {d}")
                odd[2 * k + 1] = c
            return even, odd
        if fam is EncodingFamily.CAT_PAIR:
            even, odd, _ = _cat_components(spec.alpha, d)
            n_even, n_odd = cat_normalizations(spec.alpha)
            return n_even * even, n_odd * odd
        if fam is EncodingFamily.FOCK_CAT_MIX:
            even, odd, _ = _cat_components(spec.alpha, d)
            c0, c1 = spec.mix_even
            d0, d1 = spec.mix_odd
            ev = c1 * even
            od = d1 * odd
            ev[2 * spec.m] += c0
            od[2 * spec.n + 1] += d0
            return ev, od
        if fam is EncodingFamily.SQUEEZED_VS_CAT:
            sq = squeezed_vacuum(spec.r, spec.theta, d)
            _, odd, _ = _cat_components(spec.alpha, d)
            return sq.amplitudes, odd
        if fam is EncodingFamily.MULTICOMPONENT_CAT:
            even_a, odd_a, _ = _cat_components(spec.alpha, d)
            even_i, odd_i, _ = _cat_components(1j * complex(spec.alpha), d)
            c0, c1 = spec.mix_even
            d0, d1 = spec.mix_odd
            return c0 * even_a + c1 * even_i, d0 * odd_a + d1 * odd_i
        raise ConfigError(f"unknown family {fam}")

    tail_e, tail_o = _estimate_tail(build, dim)
    if max(tail_e, tail_o) > tail_tol:
        raise TruncationError(
            f"family {fam.value} at dim {dim} leaves tail mass "
            f"{max(tail_e, tail_o):.3e} > {tail_tol}"
        )

    raw_e, raw_o = build(dim)
    phi_e = Ket(raw_e / np.linalg.norm(raw_e), tail_mass=tail_e)
    phi_o = Ket(raw_o / np.linalg.norm(raw_o), tail_mass=tail_o)
    enc = ParityEncoding(phi_e, phi_o, dim, fam.value)

    report = validate_encoding(enc)
    if not report.codewords_ok:
        raise EncodingConsistencyError(
            f"family {fam.value} failed validation: parity residuals "
            f"({report.parity_residual_even:.2e}, {report.parity_residual_odd:.2e}), "
            f"overlap {report.overlap:.2e}"
        )
    return enc


def validate_encoding(enc: ParityEncoding) -> EncodingReport:
    """Measure parity residuals, codeword overlap, norms and tails."""
    parity = mode_operators(enc.dim).parity.sparse()
    res_e = float(np.linalg.norm(parity @ enc.phi_e.amplitudes - enc.phi_e.amplitudes))
    res_o = float(np.linalg.norm(parity @ enc.phi_o.amplitudes + enc.phi_o.amplitudes))
    overlap = abs(enc.phi_e.overlap(enc.phi_o))
    norm_e = enc.phi_e.norm()
    norm_o = enc.phi_o.norm()
    passed = (
        res_e <= PARITY_TOL
        and res_o <= PARITY_TOL
        and overlap <= OVERLAP_TOL
        and abs(norm_e - 1.0) <= PARITY_TOL
        and abs(norm_o - 1.0) <= PARITY_TOL
        and max(enc.phi_e.tail_mass, enc.phi_o.tail_mass) <= TAIL_TOL
    )
    return EncodingReport(
        parity_residual_even=res_e,
        parity_residual_odd=res_o,
        overlap=overlap,
        norm_even=norm_e,
        norm_odd=norm_o,
        tail_even=enc.phi_e.tail_mass,
        tail_odd=enc.phi_o.tail_mass,
        passed=passed,
    )


def rotated_states(enc: ParityEncoding) -> tuple[Ket, Ket]:
    """The orthogonal pair (phi_e +/- phi_o)/sqrt(2)."""
    plus = Ket((enc.phi_e.amplitudes + enc.phi_o.amplitudes) / math.sqrt(2.0))
    minus = Ket((enc.phi_e.amplitudes - enc.phi_o.amplitudes) / math.sqrt(2.0))
    return plus, minus


def logical_rotation(enc: ParityEncoding):
    """Unitary mapping plus -> phi_e and minus -> phi_o on the logical plane.

    Acts as the identity on the orthogonal complement of
    span{phi_e, phi_o} (= span{plus, minus}).
    """
    from .hilbert import Operator

    plus, minus = rotated_states(enc)
    e = enc.phi_e.amplitudes
    o = enc.phi_o.amplitudes
    u = (
        np.outer(e, plus.amplitudes.conj())
        + np.outer(o, minus.amplitudes.conj())
        + np.eye(enc.dim, dtype=np.complex128)
        - np.outer(e, e.conj())
        - np.outer(o, o.conj())
    )
    return Operator(u, label=f"logical_rotation[{enc.family_label}]")
