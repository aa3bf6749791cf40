"""Unit and property tests for Fock states, operator algebra and Gaussian unitaries."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesoscope.errors import ModeMismatch, NotSymplectic, TruncationOverflow
from mesoscope.fock import (
    FockVector,
    OperatorPoly,
    apply_operator,
    displacement,
    expectation,
    hermite_functions,
    phase_rotation,
    quadrature_wavefunction,
    squeeze,
)


def op_a(modes=1, mode=0):
    return OperatorPoly.destroy(mode, modes)


def op_ad(modes=1, mode=0):
    return OperatorPoly.create(mode, modes)


class TestOperatorAlgebra:
    def test_commutator_a_ad(self):
        a, ad = op_a(), op_ad()
        comm = a * ad - ad * a
        assert comm.terms == OperatorPoly.identity(1).terms

    def test_normal_ordering_aad(self):
        a, ad = op_a(), op_ad()
        prod = a * ad
        assert prod.coefficient(((1, 1),)) == 1
        assert prod.coefficient(((0, 0),)) == 1

    def test_two_modes_commute(self):
        a0 = OperatorPoly.destroy(0, 2)
        ad1 = OperatorPoly.create(1, 2)
        assert (a0 * ad1).terms == (ad1 * a0).terms

    def test_adjoint_and_hermiticity(self):
        a, ad = op_a(), op_ad()
        h = 2.0 * (ad * a) + (1 + 2j) * ad * ad + (1 - 2j) * a * a
        assert h.is_hermitian()
        assert not (1j * ad * a).is_hermitian()

    def test_from_product_reorders(self):
        # a ad a = (ad a + 1) a = ad a^2 + a
        poly = OperatorPoly.from_product(1.0, [(0, "a"), (0, "ad"), (0, "a")], 1)
        assert poly.coefficient(((1, 2),)) == 1
        assert poly.coefficient(((0, 1),)) == 1
        assert len(poly.terms) == 2

    def test_substitute_identity(self):
        h = (op_ad() * op_a()) * 2.0 + OperatorPoly.position(0, 1)
        same = h.substitute(0, 1.0, 0.0, 0.0)
        for w in set(h.terms) | set(same.terms):
            assert same.coefficient(w) == pytest.approx(h.coefficient(w))

    @given(
        st.lists(
            st.tuples(st.sampled_from([0]), st.sampled_from(["a", "ad"])),
            min_size=1,
            max_size=5,
        ),
        st.lists(
            st.tuples(st.sampled_from([0]), st.sampled_from(["a", "ad"])),
            min_size=1,
            max_size=5,
        ),
    )
    @settings(max_examples=60, deadline=None)
    def test_canonicalization_preserves_action(self, word1, word2):
        """Normal ordering is idempotent and preserves the operator action."""
        modes, dim = 1, 12
        poly = OperatorPoly.from_product(0.7, word1, modes) + OperatorPoly.from_product(
            -0.3j, word2, modes
        )
        recanon = OperatorPoly(modes, dict(poly.terms))
        assert recanon.terms == poly.terms

        rng = np.random.default_rng(7)
        amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        amps[-4:] = 0.0  # keep raising chains inside the truncation
        state = FockVector(amps).normalize()

        # action as the canonical polynomial vs as a literal factor chain
        via_poly = apply_operator(poly, state, tail_tol=np.inf).amplitudes
        mat = poly.to_matrix((dim,)).toarray()
        via_matrix = mat @ state.amplitudes
        np.testing.assert_allclose(via_poly, via_matrix, atol=1e-10)

    def test_matrix_matches_tensor_application_two_modes(self):
        h = OperatorPoly.from_product(0.5, [(0, "ad"), (0, "ad"), (1, "a")], 2)
        h = h + h.adjoint()
        dims = (6, 5)
        rng = np.random.default_rng(3)
        amps = rng.normal(size=dims) + 1j * rng.normal(size=dims)
        amps[-2:, :] = 0.0
        amps[:, -2:] = 0.0
        state = FockVector(amps).normalize()
        via_tensor = apply_operator(h, state, tail_tol=np.inf).amplitudes.ravel()
        via_matrix = h.to_matrix(dims) @ state.amplitudes.ravel()
        np.testing.assert_allclose(via_tensor, via_matrix, atol=1e-12)


class TestApplyAndExpectation:
    def test_annihilate_vacuum(self):
        out = apply_operator(op_a(), FockVector.vacuum(5))
        assert np.all(out.amplitudes == 0)

    def test_ladder_coefficient(self):
        out = apply_operator(op_ad(), FockVector.fock(10, 3))
        assert out.amplitudes[4] == pytest.approx(2.0)

    def test_number_on_coherent(self):
        state = FockVector.coherent(1.0, 30)
        val = expectation(OperatorPoly.number(0, 1), state)
        assert val.real == pytest.approx(1.0, abs=1e-8)
        assert abs(val.imag) < 1e-12

    def test_poisson_statistics_oracle(self):
        # coherent-state photon distribution is Poisson
        alpha, dim = 1.3, 40
        state = FockVector.coherent(alpha, dim)
        probs = np.abs(state.amplitudes) ** 2
        n = np.arange(dim)
        log_poisson = -abs(alpha) ** 2 + 2 * n * math.log(abs(alpha)) - np.array(
            [math.lgamma(k + 1) for k in n]
        )
        np.testing.assert_allclose(probs, np.exp(log_poisson), atol=1e-12)

    def test_vacuum_number_zero(self):
        assert expectation(OperatorPoly.number(0, 1), FockVector.vacuum(5)) == 0

    def test_coherent_eigenvalue(self):
        state = FockVector.coherent(2j, 60)
        val = expectation(op_a(), state, tail_tol=1e-6)
        assert val == pytest.approx(2j, abs=1e-8)

    def test_x_squared_on_fock1(self):
        # x^2 = (a^2 + ad^2 + 2 ad a + 1)/4 so <1|x^2|1> = 3/4
        x2 = OperatorPoly.position(0, 1) ** 2
        val = expectation(x2, FockVector.fock(6, 1))
        assert val.real == pytest.approx(0.75, abs=1e-12)

    def test_mode_mismatch(self):
        with pytest.raises(ModeMismatch):
            apply_operator(OperatorPoly.destroy(0, 2), FockVector.vacuum(5))

    def test_truncation_overflow(self):
        state = FockVector.fock(4, 3)
        with pytest.raises(TruncationOverflow):
            apply_operator(op_ad(), state)


class TestDisplacement:
    def test_coherent_from_vacuum(self):
        alpha = 1 + 0.5j
        state = displacement(alpha, FockVector.vacuum(40))
        assert expectation(op_a(), state) == pytest.approx(alpha, abs=1e-10)

    def test_inverse_pair_on_random_state(self):
        rng = np.random.default_rng(11)
        amps = np.zeros(40, dtype=complex)
        amps[:12] = rng.normal(size=12) + 1j * rng.normal(size=12)
        state = FockVector(amps).normalize()
        out = displacement(-0.7 + 0.2j, displacement(0.7 - 0.2j, state))
        assert abs(state.overlap(out)) ** 2 >= 1 - 1e-8

    def test_poisson_distribution(self):
        state = displacement(1.0, FockVector.vacuum(40))
        probs = np.abs(state.amplitudes) ** 2
        n = np.arange(40)
        poisson = np.exp(-1.0) / np.array([math.factorial(int(k)) for k in n])
        assert np.max(np.abs(probs - poisson)) < 1e-8

    def test_overflow_raises(self):
        with pytest.raises(TruncationOverflow):
            displacement(3.0, FockVector.vacuum(6))

    def test_norm_preserved(self):
        state = displacement(0.8j, FockVector.vacuum(50))
        assert state.norm == pytest.approx(1.0, abs=1e-10)


class TestSqueeze:
    def test_identity(self):
        state = FockVector.fock(12, 2)
        out = squeeze(1.0, 0.0, state)
        assert abs(state.overlap(out)) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_variance_stretch(self):
        r = 0.5
        out = squeeze(math.cosh(r), math.sinh(r), FockVector.vacuum(60))
        x2 = OperatorPoly.position(0, 1) ** 2
        p2 = OperatorPoly.momentum(0, 1) ** 2
        assert expectation(x2, out).real == pytest.approx(math.exp(2 * r) / 4, abs=1e-6)
        assert expectation(p2, out).real == pytest.approx(math.exp(-2 * r) / 4, abs=1e-6)

    def test_inverse_pair(self):
        r = 0.4
        state = FockVector.fock(40, 2)
        fwd = squeeze(math.cosh(r), math.sinh(r), state)
        back = squeeze(math.cosh(r), -math.sinh(r), fwd)
        assert abs(state.overlap(back)) ** 2 >= 1 - 1e-8

    def test_complex_parameters_action(self):
        # conjugation action S^dag a S = mu a + nu ad checked via expectations
        mu = math.cosh(0.3) * np.exp(0.4j)
        nu = math.sinh(0.3) * np.exp(-0.9j)
        state = displacement(0.5, FockVector.vacuum(50))
        out = squeeze(mu, nu, state, tail_tol=1e-7)
        want = mu * 0.5 + nu * 0.5  # <S psi|a|S psi> = mu <a> + nu <ad>
        assert expectation(op_a(), out, tail_tol=1e-6) == pytest.approx(want, abs=1e-8)

    def test_not_symplectic(self):
        with pytest.raises(NotSymplectic):
            squeeze(1.0, 0.5, FockVector.vacuum(10))

    @given(st.floats(-0.6, 0.6), st.floats(0, 2 * math.pi))
    @settings(max_examples=20, deadline=None)
    def test_unitarity_property(self, r, phase):
        mu = math.cosh(r)
        nu = math.sinh(r) * np.exp(1j * phase)
        out = squeeze(mu, nu, FockVector.vacuum(70), tail_tol=1e-7)
        assert out.norm == pytest.approx(1.0, abs=1e-8)


class TestQuadratureWavefunction:
    def test_vacuum_peak(self):
        psi = quadrature_wavefunction(FockVector.vacuum(4), np.array([0.0]))
        assert abs(psi[0]) ** 2 == pytest.approx(math.sqrt(2 / math.pi), abs=1e-10)

    def test_fock1_odd_parity(self):
        psi = quadrature_wavefunction(FockVector.fock(5, 1), np.array([0.0]))
        assert abs(psi[0]) < 1e-14

    def test_fock3_normalization(self):
        xs = np.linspace(-8, 8, 3201)
        psi = quadrature_wavefunction(FockVector.fock(8, 3), xs)
        norm = np.trapezoid(np.abs(psi) ** 2, xs)
        assert norm == pytest.approx(1.0, abs=1e-6)

    def test_orthonormality_up_to_60(self):
        xs = np.linspace(-14, 14, 6001)
        phi = hermite_functions(xs, 61)
        gram = np.trapezoid(phi[:, None, :] * phi[None, :, :], xs, axis=-1)
        assert np.max(np.abs(gram - np.eye(61))) < 1e-6

    def test_two_mode_contraction_shape(self):
        state = FockVector.vacuum((4, 6))
        out = quadrature_wavefunction(state, np.linspace(-1, 1, 11), mode=1)
        assert out.shape == (4, 11)

    def test_phase_rotation_homodyne_semantics(self):
        # measuring x on the rotated state == measuring x cos(t) + p sin(t)
        # on the original, so a p-displaced state lands on the x axis
        state = displacement(1.2j, FockVector.vacuum(40))
        rot = phase_rotation(math.pi / 2, state)
        x_op = OperatorPoly.position(0, 1)
        assert expectation(x_op, rot).real == pytest.approx(1.2, abs=1e-10)


class TestFockVector:
    def test_normalize_invariant(self):
        rng = np.random.default_rng(0)
        state = FockVector(rng.normal(size=8) + 1j * rng.normal(size=8)).normalize()
        assert state.norm == pytest.approx(1.0, abs=1e-10)

    def test_tail_mass(self):
        state = FockVector.fock(5, 4)
        assert state.tail_mass() == pytest.approx(1.0)
        assert not state.is_trusted()
        assert FockVector.vacuum(5).tail_mass() == 0.0

    def test_immutable(self):
        state = FockVector.vacuum(4)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 2.0
