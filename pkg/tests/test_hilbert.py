"""Operator algebra, state constructors and the frozen index convention."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paritygate.errors import DimensionError
from paritygate.hilbert import (
    DensityMatrix,
    HilbertLayout,
    Ket,
    cavity_mean_occupations,
    coherent_state,
    embed,
    embed_product,
    fock_state,
    mode_operators,
    partial_trace,
    qutrit_operators,
    qutrit_populations,
    qutrit_state,
    tensor_state,
)


class TestModeOperators:
    def test_ladder_matrix_elements(self):
        ops = mode_operators(3)
        a = ops.annihilation.dense()
        assert np.isclose(a[1, 2], math.sqrt(2))
        assert np.isclose(a[0, 1], 1.0)

    def test_parity_signs(self):
        parity = mode_operators(4).parity.dense()
        assert np.allclose(np.diag(parity), [1, -1, 1, -1])

    def test_creation_annihilation_gives_number(self):
        ops = mode_operators(7)
        n = np.asarray((ops.creation.sparse() @ ops.annihilation.sparse()).todense())
        # sqrt(n)*sqrt(n) rounds once, so entrywise equality holds to one ulp
        assert np.allclose(n, ops.number.dense(), rtol=1e-15, atol=0.0)

    @pytest.mark.parametrize("dim", [2, 3, 8, 17])
    def test_parity_squares_to_identity(self, dim):
        p = mode_operators(dim).parity.sparse()
        assert np.allclose((p @ p).todense(), np.eye(dim))

    @pytest.mark.parametrize("dim", [2, 5, 11])
    def test_commutator_is_identity_below_truncation(self, dim):
        ops = mode_operators(dim)
        comm = (ops.annihilation.sparse() @ ops.creation.sparse()
                - ops.creation.sparse() @ ops.annihilation.sparse()).todense()
        for n in range(dim - 1):
            e = np.zeros(dim)
            e[n] = 1.0
            assert np.allclose(comm @ e, e)
        # the truncation corner absorbs the remainder
        assert np.isclose(comm[dim - 1, dim - 1], -(dim - 1))

    def test_rejects_trivial_dimension(self):
        with pytest.raises(DimensionError):
            mode_operators(1)


class TestQutritOperators:
    def test_lowering_maps_f_to_g(self):
        qt = qutrit_operators()
        f = qutrit_state("f").amplitudes
        assert np.allclose(qt.sigma_fg.dense() @ f, qutrit_state("g").amplitudes)

    def test_lowering_annihilates_ground(self):
        qt = qutrit_operators()
        g = qutrit_state("g").amplitudes
        assert np.allclose(qt.sigma_fg.dense() @ g, 0.0)

    def test_projectors_idempotent(self):
        qt = qutrit_operators()
        for p in (qt.proj_gg, qt.proj_ee, qt.proj_ff):
            m = p.dense()
            assert np.array_equal(m @ m, m)


class TestCoherentState:
    def test_vacuum(self):
        ket = coherent_state(0.0, 4)
        assert np.allclose(ket.amplitudes, fock_state(0, 4).amplitudes)

    def test_mean_occupation_matches_truncated_sum(self):
        # independent oracle: Poisson-weighted sum over the kept levels
        alpha, dim = 1.1, 16
        ket = coherent_state(alpha, dim)
        n = np.arange(dim)
        weights = np.abs(ket.amplitudes) ** 2
        mean = float(np.dot(n, weights))
        assert abs(mean - abs(alpha) ** 2) < 1e-6
        assert abs(mean - 1.21) < 1e-6

    def test_parity_flips_amplitude_sign(self):
        alpha, dim = 1.1, 16
        ket = coherent_state(alpha, dim)
        flipped = mode_operators(dim).parity.sparse() @ ket.amplitudes
        assert np.linalg.norm(flipped - coherent_state(-alpha, dim).amplitudes) < 1e-8

    def test_warns_on_heavy_truncation(self):
        with pytest.warns(UserWarning, match="tail mass"):
            coherent_state(2.0, 5)


class TestEmbedding:
    def test_embedded_dimension(self):
        layout = HilbertLayout(cavity_dims=(4, 4, 4))
        a = mode_operators(4).annihilation
        assert embed(a, 2, layout).dim == 192

    def test_disjoint_subsystems_commute(self):
        layout = HilbertLayout(cavity_dims=(3, 4))
        a1 = embed(mode_operators(3).annihilation, 1, layout).sparse()
        a2dag = embed(mode_operators(4).creation, 2, layout).sparse()
        comm = a1 @ a2dag - a2dag @ a1
        assert abs(comm).max() == 0.0

    def test_identity_embeds_to_identity(self):
        layout = HilbertLayout(cavity_dims=(3, 5))
        from paritygate.hilbert import Operator

        eye = Operator(np.eye(5, dtype=complex))
        assert np.allclose(embed(eye, 2, layout).dense(), np.eye(45))

    def test_dimension_mismatch_names_subsystem(self):
        layout = HilbertLayout(cavity_dims=(3, 4))
        a = mode_operators(5).annihilation
        with pytest.raises(DimensionError, match="cavity 2"):
            embed(a, 2, layout)

    @pytest.mark.parametrize("subsystem", [0, 1, 2])
    def test_embedding_preserves_spectrum(self, subsystem):
        layout = HilbertLayout(cavity_dims=(3, 2))
        dim = layout.dims[subsystem]
        rng = np.random.default_rng(7 + subsystem)
        h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = h + h.conj().T
        from paritygate.hilbert import Operator

        lifted = embed(Operator(h), subsystem, layout).dense()
        expected = np.sort(np.repeat(np.linalg.eigvalsh(h),
                                     layout.total_dim // dim))
        assert np.allclose(np.sort(np.linalg.eigvalsh(lifted)), expected)


class TestLayoutIndexing:
    def test_ground_state_is_index_zero(self):
        layout = HilbertLayout(cavity_dims=(4, 4, 4))
        psi = tensor_state([qutrit_state("g"), fock_state(0, 4), fock_state(0, 4),
                            fock_state(0, 4)], layout)
        assert psi.amplitudes[0] == 1.0
        assert np.count_nonzero(psi.amplitudes) == 1

    def test_single_photon_lands_on_its_multi_index(self):
        layout = HilbertLayout(cavity_dims=(4, 4, 4))
        psi = tensor_state([qutrit_state("g"), fock_state(1, 4), fock_state(0, 4),
                            fock_state(0, 4)], layout)
        idx = layout.flatten((0, 1, 0, 0))
        assert psi.amplitudes[idx] == 1.0

    def test_tensor_preserves_normalization(self):
        layout = HilbertLayout(cavity_dims=(6, 6))
        psi = tensor_state([qutrit_state("e"), coherent_state(0.7, 6),
                            coherent_state(0.4, 6)], layout)
        assert abs(psi.norm() - 1.0) < 1e-12

    @given(st.tuples(st.integers(2, 5), st.integers(2, 5)))
    @settings(max_examples=25, deadline=None)
    def test_index_round_trip(self, dims):
        layout = HilbertLayout(cavity_dims=dims)
        for i in range(layout.total_dim):
            assert layout.flatten(layout.unflatten(i)) == i

    def test_part_count_mismatch_raises(self):
        layout = HilbertLayout(cavity_dims=(4, 4))
        with pytest.raises(DimensionError):
            tensor_state([qutrit_state("g"), fock_state(0, 4)], layout)


class TestReductions:
    def test_partial_trace_of_product_state(self):
        layout = HilbertLayout(cavity_dims=(3, 4))
        psi = tensor_state([qutrit_state("e"), fock_state(2, 3), fock_state(1, 4)],
                           layout)
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        rq = partial_trace(rho, layout, keep=(0,))
        assert np.allclose(rq, np.diag([0, 1, 0]))
        rc1 = partial_trace(rho, layout, keep=(1,))
        assert np.allclose(rc1, np.diag([0, 0, 1]))

    def test_diagonal_marginals(self):
        layout = HilbertLayout(cavity_dims=(3, 3))
        psi = tensor_state([qutrit_state("g"), fock_state(1, 3), fock_state(2, 3)],
                           layout)
        diag = np.abs(psi.amplitudes) ** 2
        assert np.allclose(qutrit_populations(diag, layout), [1, 0, 0])
        assert np.allclose(cavity_mean_occupations(diag, layout), [1.0, 2.0])


class TestStateTypes:
    def test_density_matrix_validation(self):
        layout = HilbertLayout(cavity_dims=(2,))
        rho = DensityMatrix(np.eye(6) / 6.0, layout)
        rho.validate(positivity_tol=1e-10)
        assert abs(rho.trace() - 1.0) < 1e-12

    def test_ket_normalization_flag(self):
        ket = Ket(np.array([1.0, 1.0], dtype=complex))
        assert not ket.is_normalized()
        assert ket.normalized().is_normalized()
