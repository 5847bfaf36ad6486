"""GHZ scenario construction and ideal preparation."""

import math

import numpy as np
import pytest

from paritygate.encoding import EncodingFamily, EncodingFamilySpec, make_encoding
from paritygate.errors import ConfigError
from paritygate.gate import GateSpec
from paritygate.ghz import GhzKind, build_scenario, prepare_ideal
from paritygate.hilbert import (
    HilbertLayout,
    coherent_state,
    fock_state,
    partial_trace,
    qutrit_state,
    tensor_state,
)

LAYOUT16 = HilbertLayout(cavity_dims=(16, 16, 16))


class TestScenarioStates:
    def test_spin_coherent_initial_and_target(self):
        sc = build_scenario(GhzKind.SPIN_COHERENT, LAYOUT16, alpha=1.1)
        plus = (fock_state(0, 16).amplitudes + fock_state(1, 16).amplitudes) / math.sqrt(2)
        coh = coherent_state(1.1, 16)
        expected = tensor_state([qutrit_state("g"), plus, coh, coh], LAYOUT16)
        assert np.linalg.norm(sc.initial.amplitudes - expected.amplitudes) < 1e-12

        cav = LAYOUT16.cavity_only()
        ones = np.ones(1, dtype=complex)
        branch0 = tensor_state([ones, fock_state(0, 16), coh, coh], cav).amplitudes
        branch1 = tensor_state([ones, fock_state(1, 16),
                                coherent_state(-1.1, 16),
                                coherent_state(-1.1, 16)], cav).amplitudes
        target = (branch0 + branch1) / math.sqrt(2)
        assert np.linalg.norm(sc.target.amplitudes - target) < 1e-12

    def test_nonhybrid_targets_before_and_after_rotation(self):
        layout = HilbertLayout(cavity_dims=(4, 4, 4))
        sc = build_scenario(GhzKind.NONHYBRID, layout)
        cav = layout.cavity_only()
        ones = np.ones(1, dtype=complex)
        plus = (fock_state(0, 4).amplitudes + fock_state(1, 4).amplitudes) / math.sqrt(2)
        minus = (fock_state(0, 4).amplitudes - fock_state(1, 4).amplitudes) / math.sqrt(2)
        pre = (tensor_state([ones, fock_state(0, 4), plus, plus], cav).amplitudes
               + tensor_state([ones, fock_state(1, 4), minus, minus], cav).amplitudes
               ) / math.sqrt(2)
        assert np.linalg.norm(sc.target.amplitudes - pre) < 1e-12
        post = (tensor_state([ones] + [fock_state(0, 4)] * 3, cav).amplitudes
                + tensor_state([ones] + [fock_state(1, 4)] * 3, cav).amplitudes
                ) / math.sqrt(2)
        assert np.linalg.norm(sc.target_rotated.amplitudes - post) < 1e-12

    def test_weighted_control_state(self):
        x = 0.1
        sc = build_scenario(GhzKind.SPIN_COHERENT, LAYOUT16, alpha=1.1, x=x)
        nx = 1.0 / math.sqrt(2.0 * (1.0 + x * x))
        control = nx * ((1 + x) * fock_state(0, 16).amplitudes
                        + (1 - x) * fock_state(1, 16).amplitudes)
        coh = coherent_state(1.1, 16)
        expected = tensor_state([qutrit_state("g"), control, coh, coh], LAYOUT16)
        assert np.linalg.norm(sc.initial.amplitudes - expected.amplitudes) < 1e-12
        assert abs(sc.initial.norm() - 1.0) < 1e-9

    def test_zero_weighting_reduces_to_equal_superposition(self):
        sc0 = build_scenario(GhzKind.SPIN_COHERENT, LAYOUT16, alpha=1.1, x=0.0)
        assert abs(1.0 / math.sqrt(2.0) - 1.0 / math.sqrt(2 * (1 + 0.0))) < 1e-15
        amp0 = sc0.initial.amplitudes[LAYOUT16.flatten((0, 0, 0, 0))]
        amp1 = sc0.initial.amplitudes[LAYOUT16.flatten((0, 1, 0, 0))]
        assert abs(amp0 - amp1) < 1e-12

    def test_weighting_restricted_to_spin_coherent(self):
        with pytest.raises(ConfigError):
            build_scenario(GhzKind.CAT_COHERENT, LAYOUT16, alpha=1.1, x=0.1)

    def test_branches_orthogonal_for_every_kind(self):
        for kind in (GhzKind.NONHYBRID, GhzKind.CAT_COHERENT, GhzKind.CAT_SPIN,
                     GhzKind.SPIN_COHERENT):
            sc = build_scenario(kind, LAYOUT16, alpha=1.1)
            # recover the two branches from the target and its codeword structure
            cav = LAYOUT16.cavity_only()
            n1 = cav.cavity_dims[0]
            block = sc.target.amplitudes.reshape(n1, -1)
            e_amp = sc.encodings[0].phi_e.amplitudes
            o_amp = sc.encodings[0].phi_o.amplitudes
            branch0 = np.kron(e_amp, e_amp.conj() @ block)
            branch1 = np.kron(o_amp, o_amp.conj() @ block)
            overlap = np.vdot(branch0, branch1)
            assert abs(overlap) < 1e-8

    def test_general_kind_requires_encodings(self):
        with pytest.raises(ConfigError):
            build_scenario(GhzKind.GENERAL, LAYOUT16)

    def test_quasi_orthogonality_reported(self):
        sc = build_scenario(GhzKind.SPIN_COHERENT, LAYOUT16, alpha=1.1)
        assert abs(sc.quasi_overlap - math.exp(-4.84)) < 1e-12
        assert sc.quasi_overlap < 1e-2

    def test_small_alpha_warns(self):
        with pytest.warns(UserWarning, match="quasi-orthogonal"):
            build_scenario(GhzKind.SPIN_COHERENT, HilbertLayout(cavity_dims=(8, 8, 8)),
                           alpha=0.5)


class TestPrepareIdeal:
    @pytest.mark.parametrize("kind", [GhzKind.NONHYBRID, GhzKind.CAT_COHERENT,
                                      GhzKind.CAT_SPIN, GhzKind.SPIN_COHERENT])
    def test_unit_fidelity_at_exact_conditions(self, kind):
        sc = build_scenario(kind, LAYOUT16, alpha=1.1)
        final, fid = prepare_ideal(sc)
        assert fid >= 1.0 - 1e-6

    def test_nonhybrid_is_exact_on_finite_support(self):
        layout = HilbertLayout(cavity_dims=(2, 2, 2))
        sc = build_scenario(GhzKind.NONHYBRID, layout)
        _, fid = prepare_ideal(sc)
        assert abs(fid - 1.0) < 1e-14

    def test_qutrit_factor_untouched(self):
        sc = build_scenario(GhzKind.SPIN_COHERENT, LAYOUT16, alpha=1.1)
        final, _ = prepare_ideal(sc)
        rho_q = partial_trace(np.outer(final.amplitudes, final.amplitudes.conj()),
                              LAYOUT16, keep=(0,))
        assert abs(rho_q[0, 0] - 1.0) < 1e-12
        assert np.max(np.abs(rho_q - np.diag([1.0, 0, 0]))) < 1e-12

    def test_four_qubit_general_scenario(self):
        layout = HilbertLayout(cavity_dims=(8, 8, 8, 8))
        enc = make_encoding(EncodingFamilySpec(EncodingFamily.FOCK_PAIR, m=1, n=1), 8)
        sc = build_scenario(GhzKind.GENERAL, layout, encodings=[enc] * 4)
        _, fid = prepare_ideal(sc)
        assert abs(fid - 1.0) < 1e-12

    def test_detuned_gate_degrades_fidelity(self):
        sc = build_scenario(GhzKind.SPIN_COHERENT, LAYOUT16, alpha=1.1)
        chi = (1.02 * math.pi, 1.02 * math.pi)
        spec = GateSpec(n=3, encodings=sc.encodings, chi=chi, eta=0.0,
                        duration=1.0, s=0, exact=False)
        _, fid = prepare_ideal(sc, spec)
        assert fid < 0.999


class TestPrepareFull:
    def test_lossy_preparation_end_to_end(self):
        # reduced truncation and coarse stepping: exercises the full pipeline
        # (scenario, full-tier Hamiltonian, channels, trajectory observables)
        from paritygate.dynamics import IntegratorConfig
        from paritygate.ghz import prepare_full
        from paritygate.model import DecoherenceParams, HamiltonianToggles, SystemParams
        from paritygate.model import GHZ as GHZ_UNIT

        params = SystemParams.from_ghz(
            omega_eg=8.0, omega_fe=12.0, omega_fg=20.0,
            omega_c=(18.4, 10.0, 9.6), g=(0.16, 0.19876, 0.30358),
            g_prime=(0.16, 0.19876, 0.30358))
        params = params.with_uniform_crosstalk(0.01 * params.g_max)
        layout = HilbertLayout(cavity_dims=(3, 6, 6))
        dec = DecoherenceParams.from_times(10e-6, 20e-6, 3)
        scenario = build_scenario(GhzKind.SPIN_COHERENT, layout, alpha=0.7)
        cfg = IntegratorConfig(max_frequency_resolution=4, record_stride=500)
        rho, traj = prepare_full(scenario, params, dec,
                                 toggles=HamiltonianToggles(False, False), cfg=cfg)

        assert 0.3 < traj.meta["fidelity_final"] <= 1.0 + 1e-9
        assert traj.meta["fidelity_at_max"] >= traj.meta["fidelity_final"] - 1e-12
        assert traj.meta["trace_drift"] < 1e-8
        assert traj.meta["min_eigenvalue"] > -1e-6
        assert traj.meta["hermiticity_defect"] < 1e-10
        assert {"fidelity", "qutrit_pop_ef", "n_cavity_1", "trace"} <= set(traj.records)
        assert np.max(traj.records["qutrit_pop_ef"]) < 5e-2
        rho.validate(trace_tol=1e-6, herm_tol=1e-9)
