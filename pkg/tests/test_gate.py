"""Diagonal gate construction, truth tables and hybridization classes."""

import math
from itertools import product

import numpy as np
import pytest

from paritygate.encoding import EncodingFamily, EncodingFamilySpec, make_encoding
from paritygate.errors import ConfigError, PhaseCoherenceError
from paritygate.gate import (
    GateSpec,
    HybridizationClass,
    diagonal_gate,
    diagonal_phases,
    exact_diagonal_phases,
    gate_diagonal,
    hybridization_class,
    verify_truth_table,
)
from paritygate.hilbert import HilbertLayout, coherent_state, mode_operators
from paritygate.model import EffectiveParams, GHZ


def fock01(dim=8):
    return make_encoding(EncodingFamilySpec(EncodingFamily.FOCK01), dim)


def cat(alpha=1.1, dim=16):
    return make_encoding(EncodingFamilySpec(EncodingFamily.CAT_PAIR, alpha=alpha), dim)


def reference_effective():
    lam1 = 2 * math.pi * 0.016e9
    chi = lam1 / 20.0
    return EffectiveParams(lambda_1=lam1, lambda_targets=(0.0, 0.0),
                           lambda_pair=(0.0, 0.0), chi=(chi, chi),
                           eta=-lam1 + 2 * chi)


class TestDiagonalGate:
    def test_odd_odd_sector_flips(self):
        phases = exact_diagonal_phases((4, 4, 4))
        cav = HilbertLayout(cavity_dims=(4, 4, 4), qutrit_dim=1)
        assert phases[cav.flatten((0, 1, 1, 0))] == -1.0
        assert phases[cav.flatten((0, 2, 1, 0))] == 1.0
        assert phases[cav.flatten((0, 0, 3, 3))] == 1.0

    def test_float_path_matches_exact_at_reference_point(self):
        eff = reference_effective()
        t = math.pi / eff.chi[0]
        phases = diagonal_phases(eff.chi, eff.eta, t, (6, 6, 6))
        exact = exact_diagonal_phases((6, 6, 6))
        assert np.max(np.abs(phases - exact)) < 1e-10

    def test_unit_modulus_and_unitarity(self):
        eff = reference_effective()
        layout = HilbertLayout(cavity_dims=(5, 5, 5))
        op = diagonal_gate(eff, 1.7e-7, layout)
        diag = np.diag(op.dense())
        assert np.allclose(np.abs(diag), 1.0)

    def test_factorizes_over_target_pairs(self):
        # U = U1 (x) prod U_1l: phases add over targets
        chi = (3.0e6, 5.0e6)
        eta = 1.1e6
        t = 2.3e-7
        dims = (4, 3, 3)
        full = diagonal_phases(chi, eta, t, dims)
        one = diagonal_phases((chi[0],), 0.0, t, (4, 3))
        two = diagonal_phases((chi[1],), 0.0, t, (4, 3))
        control = diagonal_phases((), eta, t, (4,))
        rebuilt = np.einsum("a,ab,ac->abc",
                            control.reshape(4),
                            one.reshape(4, 3),
                            two.reshape(4, 3)).reshape(-1)
        assert np.max(np.abs(full - rebuilt)) < 1e-12

    def test_parity_control_on_coherent_target(self):
        # an odd control photon flips the target coherent state's sign
        dim = 16
        chi = (2.0e6,)
        t = math.pi / chi[0]
        phases = diagonal_phases(chi, 0.0, t, (2, dim)).reshape(2, dim)
        alpha = coherent_state(1.1, dim).amplitudes
        flipped = phases[1] * alpha
        expected = coherent_state(-1.1, dim).amplitudes
        assert np.linalg.norm(flipped - expected) < 1e-8
        assert np.linalg.norm(phases[0] * alpha - alpha) < 1e-12

    def test_gate_conserves_occupation(self):
        eff = reference_effective()
        layout = HilbertLayout(cavity_dims=(4, 4, 4))
        op = diagonal_gate(eff, 1.1e-7, layout).sparse()
        cav = layout.cavity_only()
        from paritygate.hilbert import embed

        for j in (1, 2, 3):
            n_j = embed(mode_operators(4).number, j, cav).sparse()
            assert abs(op @ n_j - n_j @ op).max() == 0.0


class TestGateSpec:
    def test_exact_flag_validates_conditions(self):
        encs = (fock01(), fock01())
        with pytest.raises(ConfigError):
            GateSpec(n=2, encodings=encs, chi=(1.0,), eta=0.0, duration=1.0,
                     s=0, exact=True)

    def test_from_effective_detects_exact_point(self):
        eff = reference_effective()
        encs = (fock01(), fock01(), fock01())
        spec = GateSpec.from_effective(eff, math.pi / eff.chi[0], encs)
        assert spec.exact
        spec_off = GateSpec.from_effective(eff, 1.01 * math.pi / eff.chi[0], encs)
        assert not spec_off.exact


class TestTruthTable:
    def test_two_qubit_controlled_phase(self):
        spec = GateSpec.exact_conditions((fock01(), fock01()))
        table, dev = verify_truth_table(spec)
        assert dev == 0.0
        assert table.phases[(1, 1)] == -1.0
        for bits in ((0, 0), (0, 1), (1, 0)):
            assert table.phases[bits] == 1.0

    def test_three_qubit_signs(self):
        spec = GateSpec.exact_conditions((fock01(), fock01(), fock01()))
        table, _ = verify_truth_table(spec)
        assert table.phases[(1, 1, 1)] == 1.0   # two flips cancel
        assert table.phases[(1, 1, 0)] == -1.0
        assert table.phases[(0, 1, 1)] == 1.0
        assert table.matches_controlled_phase()

    def test_hybrid_encodings_give_the_same_table(self):
        hybrid = (fock01(16), cat(), cat())
        table_h, dev_h = verify_truth_table(GateSpec.exact_conditions(hybrid))
        uniform = (fock01(16), fock01(16), fock01(16))
        table_u, _ = verify_truth_table(GateSpec.exact_conditions(uniform))
        for bits in table_u.phases:
            assert abs(table_h.phases[bits] - table_u.phases[bits]) < 1e-8
        assert dev_h < 1e-8

    def test_broken_phase_condition_raises(self):
        eff = reference_effective()
        encs = (cat(), cat(), cat())
        spec = GateSpec.from_effective(eff, 0.7 * math.pi / eff.chi[0], encs)
        with pytest.raises(PhaseCoherenceError):
            verify_truth_table(spec)

    def test_fock_encoding_phase_shift_scales_with_occupation(self):
        # detuned chi t shifts the odd-odd phase in proportion to the
        # occupied Fock indices; single-Fock codewords stay eigenvectors
        eps = 1e-3
        big = make_encoding(EncodingFamilySpec(EncodingFamily.FOCK_PAIR, m=2, n=2), 12)
        small = make_encoding(EncodingFamilySpec(EncodingFamily.FOCK01), 12)
        for enc, q1, q2 in ((small, 1, 1), (big, 5, 5)):
            chi = (1.0 + eps) * math.pi
            spec = GateSpec(n=2, encodings=(enc, enc), chi=(chi,), eta=0.0,
                            duration=1.0, s=0, exact=False)
            table, dev = verify_truth_table(spec)
            assert dev < 1e-12
            measured = np.angle(table.phases[(1, 1)] / (-1.0 + 0.0j))
            expected = -(chi - math.pi) * q1 * q2
            expected = (expected + math.pi) % (2 * math.pi) - math.pi
            assert abs(measured - expected) < 1e-9

    @pytest.mark.parametrize("n", [2, 3])
    def test_encoding_independence_across_families(self, n):
        from paritygate.experiments import standard_family_specs

        for name, family_spec in standard_family_specs().items():
            enc = make_encoding(family_spec, 20)
            spec = GateSpec.exact_conditions(tuple(enc for _ in range(n)))
            table, dev = verify_truth_table(spec)
            assert dev <= 1e-9, name
            assert table.matches_controlled_phase(), name


class TestHybridization:
    def test_identical_encodings_are_nonhybrid(self):
        encs = [fock01(), fock01(), fock01()]
        assert hybridization_class(encs) is HybridizationClass.NONHYBRID

    def test_all_distinct_families_are_maximal(self):
        encs = [
            make_encoding(EncodingFamilySpec(EncodingFamily.FOCK01), 16),
            make_encoding(EncodingFamilySpec(EncodingFamily.FOCK_PAIR, m=1, n=1), 16),
            make_encoding(EncodingFamilySpec(EncodingFamily.CAT_PAIR, alpha=1.1), 16),
        ]
        assert hybridization_class(encs) is HybridizationClass.MAXIMAL

    def test_two_equal_one_distinct_is_partial(self):
        encs = [fock01(16), fock01(16), cat()]
        assert hybridization_class(encs) is HybridizationClass.PARTIAL
