"""Parameter derivations, coupling solvers and the Hamiltonian tiers."""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from paritygate.errors import ConfigError, RegimeError
from paritygate.hilbert import HilbertLayout, mode_operators, embed
from paritygate.model import (
    GHZ,
    DecoherenceParams,
    HamiltonianTier,
    HamiltonianToggles,
    SystemParams,
    TargetCountParity,
    build_hamiltonian,
    check_gate_condition,
    check_regime,
    derive_detunings,
    effective_params,
    quality_factor,
    solve_coupling,
)


def reference_params(rounded_couplings: bool = False) -> SystemParams:
    """Cavity-1 frequency chosen so the wanted detunings are 1.6/2.0/2.4 GHz."""
    if rounded_couplings:
        g = (0.16, 0.198, 0.303)
    else:
        d1 = 1.6 * GHZ
        g = (0.16 * GHZ,
             solve_coupling(TargetCountParity.EVEN, 10, d1, 2.0 * GHZ),
             solve_coupling(TargetCountParity.EVEN, 10, d1, 2.4 * GHZ))
        g = tuple(v / GHZ for v in g)
    params = SystemParams.from_ghz(
        omega_eg=8.0, omega_fe=12.0, omega_fg=20.0,
        omega_c=(18.4, 10.0, 9.6), g=g, g_prime=g)
    return params.with_uniform_crosstalk(0.01 * params.g_max)


class TestDetunings:
    def test_wanted_detunings(self):
        det = derive_detunings(reference_params())
        assert np.allclose([d / GHZ for d in det.delta], [1.6, 2.0, 2.4])

    def test_unwanted_detunings_follow_swapped_transitions(self):
        # with omega_c1 = 18.6 GHz the swapped-transition detuning is -6.6 GHz
        params = SystemParams.from_ghz(
            omega_eg=8.0, omega_fe=12.0, omega_fg=20.0,
            omega_c=(18.6, 10.0, 9.6), g=(0.16, 0.198, 0.303))
        det = derive_detunings(params)
        assert abs(det.delta_prime[0] / GHZ - (-6.6)) < 1e-9
        assert abs(det.delta_prime[1] / GHZ - 10.0) < 1e-9
        assert abs(det.delta_prime[2] / GHZ - 10.4) < 1e-9

    def test_crosstalk_detunings_derived_from_frequencies(self):
        det = derive_detunings(reference_params())
        assert abs(det.cross[(2, 3)] / GHZ - 0.4) < 1e-12
        assert abs(det.cross[(1, 2)] / GHZ - 8.4) < 1e-12
        assert abs(det.cross[(1, 3)] / GHZ - 8.8) < 1e-12

    def test_nonpositive_wanted_detuning_rejected(self):
        params = SystemParams.from_ghz(
            omega_eg=8.0, omega_fe=12.0, omega_fg=20.0,
            omega_c=(20.5, 10.0, 9.6), g=(0.16, 0.198, 0.303))
        with pytest.raises(RegimeError):
            derive_detunings(params)

    def test_three_level_consistency_enforced(self):
        with pytest.raises(ConfigError):
            SystemParams.from_ghz(omega_eg=8.0, omega_fe=12.0, omega_fg=19.0,
                                  omega_c=(18.4, 10.0), g=(0.16, 0.198))


class TestEffectiveParams:
    def test_stark_rate(self):
        params = reference_params()
        eff = effective_params(params, derive_detunings(params))
        assert abs(eff.lambda_1 / GHZ - 0.16 ** 2 / 1.6) < 1e-12

    def test_cross_kerr_with_rounded_coupling(self):
        params = reference_params(rounded_couplings=True)
        eff = effective_params(params, derive_detunings(params))
        # one-line arithmetic: ((0.16*0.198/2)(1/1.6+1/2))^2 / 0.4
        lam12 = (0.16 * 0.198 / 2.0) * (1 / 1.6 + 1 / 2.0)
        assert abs(eff.chi[0] / GHZ - lam12 ** 2 / 0.4) < 1e-12
        assert abs(eff.chi[0] / GHZ - 7.94e-4) < 1e-6

    def test_cross_kerr_with_solved_coupling_is_exact_fraction(self):
        params = reference_params()
        eff = effective_params(params, derive_detunings(params))
        for chi in eff.chi:
            assert abs(chi - eff.lambda_1 / 20.0) < 1e-9 * eff.lambda_1
        assert abs(eff.chi[0] / GHZ - 8e-4) < 1e-12

    def test_total_stark_shift(self):
        params = reference_params()
        eff = effective_params(params, derive_detunings(params))
        assert abs(eff.eta / GHZ - (-0.016 + 2 * 8e-4)) < 1e-12


class TestSolveCoupling:
    def test_even_branch_matches_tabulated_values(self):
        d1 = 1.6 * GHZ
        g2 = solve_coupling("even", 10, d1, 2.0 * GHZ)
        g3 = solve_coupling("even", 10, d1, 2.4 * GHZ)
        assert abs(g2 / GHZ - 0.198) < 1e-3
        assert abs(g3 / GHZ - 0.303) < 1e-3

    def test_odd_branch_against_root_finder(self):
        # independent oracle: solve chi(g) = lambda_1/(2m'+1) numerically
        d1, d2 = 1.6 * GHZ, 2.0 * GHZ
        g1 = 0.2 * GHZ
        mprime = 0

        def mismatch(g2):
            lam12 = (g1 * g2 / 2.0) * (1 / d1 + 1 / d2)
            chi = lam12 ** 2 / (d2 - d1)
            return chi - (g1 ** 2 / d1) / (2 * mprime + 1)

        root = brentq(mismatch, 1e-4 * GHZ, 5.0 * GHZ, xtol=1e-6)
        solved = solve_coupling("odd", mprime, d1, d2)
        assert abs(solved - root) < 1e-3
        assert abs(solved / GHZ - (2 * 2.0 / 3.6) * math.sqrt(0.4 * 1.6)) < 1e-9

    @pytest.mark.parametrize("g1_ghz", [0.05, 0.16, 0.4, 1.0])
    def test_locked_ratio_independent_of_control_coupling(self, g1_ghz):
        d1, d2, m = 1.6 * GHZ, 2.0 * GHZ, 10
        g2 = solve_coupling("even", m, d1, d2)
        g1 = g1_ghz * GHZ
        lam1 = g1 ** 2 / d1
        lam12 = (g1 * g2 / 2.0) * (1 / d1 + 1 / d2)
        chi = lam12 ** 2 / (d2 - d1)
        assert abs(chi * 2 * m / lam1 - 1.0) < 1e-12

    def test_degenerate_detunings_rejected(self):
        with pytest.raises(RegimeError):
            solve_coupling("even", 10, 2.0 * GHZ, 1.6 * GHZ)


class TestGateCondition:
    def test_reference_point_passes(self):
        params = reference_params()
        eff = effective_params(params, derive_detunings(params))
        t = math.pi / eff.chi[0]
        assert abs(t - 625e-9) < 1e-15
        report = check_gate_condition(eff, t, n=3)
        assert report.passes
        assert report.s == -9
        assert max(report.chi_phase_residuals) < 1e-9

    def test_doubled_duration_fails(self):
        params = reference_params()
        eff = effective_params(params, derive_detunings(params))
        report = check_gate_condition(eff, 2 * math.pi / eff.chi[0], n=3)
        assert not report.passes
        assert max(report.chi_phase_residuals) > 0.9

    def test_two_qubit_case_closes_at_s_zero(self):
        # one target: chi t = pi and lambda_1 t = pi give eta t = 0
        chi = 2.0e6
        t = math.pi / chi
        from paritygate.model import EffectiveParams

        eff = EffectiveParams(lambda_1=chi, lambda_targets=(0.0,),
                              lambda_pair=(0.0,), chi=(chi,), eta=-chi + chi)
        report = check_gate_condition(eff, t, n=2)
        assert report.passes
        assert report.s == 0


class TestRegimeReport:
    def test_reference_ratios(self):
        params = reference_params(rounded_couplings=True)
        det = derive_detunings(params)
        report = check_regime(params, det, effective_params(params, det))
        assert abs(report.ratios["delta_1/g_1"] - 10.0) < 1e-9
        pair = report.ratios["pair_23"]
        expected = (0.4 / (1 / 2.0 + 1 / 2.4)) / (0.198 * 0.303)
        assert abs(pair - expected) < 1e-9
        assert abs(pair - 7.3) < 0.1

    def test_vanishing_couplings_clear_all_flags(self):
        params = SystemParams.from_ghz(
            omega_eg=8.0, omega_fe=12.0, omega_fg=20.0,
            omega_c=(18.4, 10.0, 9.6), g=(1e-6, 1e-6, 1e-6))
        det = derive_detunings(params)
        report = check_regime(params, det, effective_params(params, det))
        assert report.flagged == ()


class TestHamiltonianTiers:
    layout = HilbertLayout(cavity_dims=(3, 3, 3))

    def test_effective_tier_diagonal_entries(self):
        params = reference_params()
        det = derive_detunings(params)
        h = build_hamiltonian(HamiltonianTier.EFFECTIVE, params, det, self.layout)
        eff = effective_params(params, det)
        mat = h.terms[0].operator.dense()
        assert np.count_nonzero(mat - np.diag(np.diag(mat))) == 0
        cav = self.layout.cavity_only()
        idx = cav.flatten((0, 1, 0, 0))
        assert abs(mat[idx, idx] - eff.eta) < 1e-6
        idx2 = cav.flatten((0, 1, 1, 0))
        assert abs(mat[idx2, idx2] - (eff.eta + eff.chi[0])) < 1e-6

    def test_effective_tier_commutes_with_occupations_and_parity(self):
        params = reference_params()
        det = derive_detunings(params)
        h = build_hamiltonian(HamiltonianTier.EFFECTIVE, params, det, self.layout)
        cav = self.layout.cavity_only()
        mat = h.terms[0].operator.sparse()
        for j in (1, 2, 3):
            n_j = embed(mode_operators(3).number, j, cav).sparse()
            assert abs(mat @ n_j - n_j @ mat).max() == 0.0
        parity = embed(mode_operators(3).parity, 1, cav).sparse()
        for j in (2, 3):
            parity = parity @ embed(mode_operators(3).parity, j, cav).sparse()
        assert abs(mat @ parity - parity @ mat).max() == 0.0

    def test_full_with_toggles_off_equals_ideal(self):
        params = reference_params()
        det = derive_detunings(params)
        ideal = build_hamiltonian(HamiltonianTier.IDEAL, params, det, self.layout)
        full = build_hamiltonian(HamiltonianTier.FULL, params, det, self.layout,
                                 HamiltonianToggles(False, False))
        for t in (0.0, 0.13e-9, 1.7e-9):
            assert np.allclose(ideal.evaluate(t), full.evaluate(t))

    def test_ideal_couples_only_the_intended_transitions(self):
        params = reference_params()
        det = derive_detunings(params)
        h = build_hamiltonian(HamiltonianTier.IDEAL, params, det, self.layout)
        mat = h.evaluate(0.0)
        blocks = mat.reshape(3, 27, 3, 27)
        # g<->e coupling absent everywhere
        assert np.allclose(blocks[0, :, 1, :], 0.0)
        assert np.allclose(blocks[1, :, 0, :], 0.0)
        assert np.abs(blocks[0, :, 2, :]).max() > 0  # g<->f via cavity 1
        assert np.abs(blocks[1, :, 2, :]).max() > 0  # e<->f via targets

    @pytest.mark.parametrize("tier", [HamiltonianTier.IDEAL, HamiltonianTier.DISPERSIVE,
                                      HamiltonianTier.FULL])
    def test_hermitian_at_random_times(self, tier):
        params = reference_params()
        det = derive_detunings(params)
        h = build_hamiltonian(tier, params, det, self.layout,
                              HamiltonianToggles(True, True))
        rng = np.random.default_rng(3)
        for t in rng.uniform(0, 2e-9, size=4):
            mat = h.evaluate(float(t))
            assert np.max(np.abs(mat - mat.conj().T)) < 1e-12 * max(1.0, np.abs(mat).max())

    def test_dispersive_ground_block_is_the_shifted_effective_form(self):
        params = reference_params()
        det = derive_detunings(params)
        eff = effective_params(params, det)
        h = build_hamiltonian(HamiltonianTier.DISPERSIVE, params, det, self.layout)
        mat = h.terms[0].operator.dense()
        gblock = mat.reshape(3, 27, 3, 27)[0, :, 0, :]
        cav = self.layout.cavity_only()
        grids = np.indices(cav.cavity_dims).reshape(3, -1).astype(float)
        expected = -eff.lambda_1 * grids[0]
        for l, chi in enumerate(eff.chi, start=1):
            expected = expected + chi * grids[0] * (1.0 + grids[l])
        assert np.allclose(np.diag(gblock), expected)
        # identical to eta n1 + sum chi n1 nl after absorbing the shift
        alt = eff.eta * grids[0]
        for l, chi in enumerate(eff.chi, start=1):
            alt = alt + chi * grids[0] * grids[l]
        assert np.allclose(expected, alt)

    def test_full_tier_requires_configured_imperfections(self):
        params = SystemParams.from_ghz(
            omega_eg=8.0, omega_fe=12.0, omega_fg=20.0,
            omega_c=(18.4, 10.0, 9.6), g=(0.16, 0.198, 0.303),
            g_prime=None, g_cross=None)
        det = derive_detunings(params)
        with pytest.raises(ConfigError):
            build_hamiltonian(HamiltonianTier.FULL, params, det, self.layout,
                              HamiltonianToggles(unwanted_couplings=True))
        with pytest.raises(ConfigError):
            build_hamiltonian(HamiltonianTier.FULL, params, det, self.layout,
                              HamiltonianToggles(crosstalk=True))


class TestQualityFactor:
    def test_reference_values(self):
        assert abs(quality_factor(2 * math.pi * 18.6e9, 20e-6) - 2.34e6) < 0.01e6
        assert abs(quality_factor(2 * math.pi * 9.6e9, 20e-6) - 1.21e6) < 0.01e6

    def test_linear_in_lifetime(self):
        q1 = quality_factor(2 * math.pi * 10e9, 20e-6)
        q2 = quality_factor(2 * math.pi * 10e9, 40e-6)
        assert abs(q2 - 2 * q1) < 1e-6 * q1

    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigError):
            quality_factor(-1.0, 20e-6)


class TestDecoherenceParams:
    def test_standard_relations(self):
        dec = DecoherenceParams.from_times(10e-6, 20e-6)
        assert abs(dec.gamma_eg - 1.0 / 100e-6) < 1e-6
        assert abs(dec.gamma_fe - 1.0 / 10e-6) < 1e-6
        assert abs(dec.gamma_phi_e - 2.0 / 10e-6) < 1e-6
        assert all(abs(k - 1.0 / 20e-6) < 1e-6 for k in dec.kappa)
