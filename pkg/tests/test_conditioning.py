"""Tests for pump homodyne, conditional preparation, and the xp+px QND protocol."""

import math
import warnings

import numpy as np
import pytest

from mesoscope.errors import MesoscopeError, RegimeWarning, ZeroDensity
from mesoscope.conditioning import (
    ConditioningResult,
    condition_on_xb,
    homodyne_grid,
    pump_homodyne_density,
    qnd_xppx_protocol,
    reduced_density_matrix,
    sample_outcome,
    sandwich_hamiltonian,
    xppx_operator,
)
from mesoscope.fock import (
    FockVector,
    OperatorPoly,
    expectation,
    phase_rotation,
    squeezed_vacuum,
)
from mesoscope.frame import HamiltonianSpec
from mesoscope.opa import full_oracle_evolve
from mesoscope.phase_space import state_fidelity


class TestHomodyneDensity:
    def test_coherent_pump_marginal(self):
        beta = 0.8 + 0.3j
        state = FockVector.product(FockVector.fock(4, 1), FockVector.coherent(beta, 30))
        xs = homodyne_grid()
        dens = pump_homodyne_density(state, xs)
        mean = np.trapezoid(dens * xs, xs)
        var = np.trapezoid(dens * xs ** 2, xs) - mean ** 2
        assert mean == pytest.approx(beta.real, abs=1e-4)
        assert var == pytest.approx(0.25, abs=1e-4)

    def test_lo_phase_selects_quadrature(self):
        beta = 0.8 + 0.3j
        state = FockVector.product(FockVector.vacuum(3), FockVector.coherent(beta, 30))
        xs = homodyne_grid()
        dens = pump_homodyne_density(state, xs, lo_phase=math.pi / 2)
        assert np.trapezoid(dens * xs, xs) == pytest.approx(beta.imag, abs=1e-4)

    def test_fock1_pump_node_at_origin(self):
        state = FockVector.product(FockVector.vacuum(3), FockVector.fock(6, 1))
        assert pump_homodyne_density(state, np.array([0.0]))[0] < 1e-14

    def test_normalization_after_interaction(self):
        spec = HamiltonianSpec(g=1.0)
        joint = FockVector.product(
            FockVector.vacuum(12), FockVector.coherent(2j, 20)
        )
        evolved = full_oracle_evolve(spec, joint, 0.25, 0.05)
        xs = homodyne_grid(stretch=1.5, half_width_sigmas=8.0, resolution=0.02)
        dens = pump_homodyne_density(evolved, xs, lo_phase=math.pi / 2)
        # grid centered on the displaced pump amplitude
        xs2 = xs + 2.0
        dens2 = pump_homodyne_density(evolved, xs2, lo_phase=math.pi / 2)
        assert np.trapezoid(dens2, xs2) == pytest.approx(1.0, abs=1e-4)
        assert np.all(dens >= 0)


class TestConditioning:
    def test_product_state_gives_unconditional_signal(self):
        sig = FockVector(np.array([0.6, 0.0, 0.8j]))
        joint = FockVector.product(sig, FockVector.coherent(0.5, 20))
        for outcome in (-0.7, 0.0, 1.2):
            res = condition_on_xb(joint, outcome)
            assert state_fidelity(res.conditional_state, sig.normalize()) == \
                pytest.approx(1.0, abs=1e-12)

    def test_conditional_state_normalized(self):
        spec = HamiltonianSpec(g=1.0)
        joint = FockVector.product(FockVector.vacuum(10), FockVector.coherent(1j, 15))
        evolved = full_oracle_evolve(spec, joint, 0.3, 0.05)
        res = condition_on_xb(evolved, 0.2)
        assert res.conditional_state.norm == pytest.approx(1.0, abs=1e-12)
        assert res.density > 0

    def test_zero_density_rejected(self):
        state = FockVector.product(FockVector.vacuum(3), FockVector.fock(40, 1))
        with pytest.raises(ZeroDensity):
            condition_on_xb(state, 0.0)  # exact node of |1>

    def test_decomposition_completeness(self):
        # sum_x density(x) |cond(x)><cond(x)| dx reproduces the reduced signal
        # density operator
        spec = HamiltonianSpec(g=1.0, delta=0.5)
        joint = FockVector.product(FockVector.vacuum(12), FockVector.coherent(1.5j, 18))
        evolved = full_oracle_evolve(spec, joint, 0.4, 0.05)
        xs = homodyne_grid(stretch=2.0, half_width_sigmas=8.0, resolution=0.02)
        dens = pump_homodyne_density(evolved, xs)
        projectors = []
        for i in range(len(xs)):
            if dens[i] > 1e-12:
                c = condition_on_xb(evolved, xs[i]).conditional_state.amplitudes
                projectors.append(dens[i] * np.outer(c, c.conj()))
            else:
                projectors.append(np.zeros((12, 12), dtype=complex))
        table_rho = np.trapezoid(np.array(projectors), xs, axis=0)
        rho = reduced_density_matrix(evolved, mode=0)
        evals = np.linalg.eigvalsh(table_rho - rho)
        assert 0.5 * np.sum(np.abs(evals)) < 1e-3  # trace distance


class TestSampling:
    def test_delta_like_density(self):
        xs = np.linspace(-1, 1, 201)
        dens = np.zeros_like(xs)
        dens[100] = 1.0
        out = sample_outcome(xs, dens, seed=0)
        assert abs(out - xs[100]) <= xs[1] - xs[0]

    def test_gaussian_statistics(self):
        xs = np.linspace(-5, 5, 2001)
        dens = np.exp(-xs ** 2 / 2) / math.sqrt(2 * math.pi)
        n = 10_000
        samples = np.array([sample_outcome(xs, dens, seed) for seed in range(n)])
        assert abs(samples.mean()) < 3.0 / math.sqrt(n)

    def test_seed_determinism(self):
        xs = np.linspace(-3, 3, 301)
        dens = np.exp(-2 * xs ** 2)
        assert sample_outcome(xs, dens, 42) == sample_outcome(xs, dens, 42)
        assert sample_outcome(xs, dens, 42) != sample_outcome(xs, dens, 43)


class TestQndProtocol:
    def test_sandwich_hamiltonian_structure(self):
        # exact conjugation: g lam (xp+px) p_b + (g/lam)(x^2 - p^2) x_b
        g, lam = 1.0, 10.0
        h = sandwich_hamiltonian(g, lam)
        lead = (g * lam) * (xppx_operator(2, 0) * OperatorPoly.momentum(1, 2))
        sub = (g / lam) * (
            (OperatorPoly.position(0, 2) ** 2 - OperatorPoly.momentum(0, 2) ** 2)
            * OperatorPoly.position(1, 2)
        )
        expect_h = lead + sub
        words = set(h.terms) | set(expect_h.terms)
        for w in words:
            assert h.coefficient(w) == pytest.approx(expect_h.coefficient(w), abs=1e-12)

    def test_vacuum_signal_zero_mean(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            res = qnd_xppx_protocol(
                FockVector.vacuum(40), 10.0, 1.0, 0.2, FockVector.vacuum(50),
                mode="exact", tail_tol=1.0, xs=np.linspace(-4, 4, 801),
            )
        assert abs(res.inferred_mean) < 1e-10

    def test_effective_mode_reproduces_expectation(self):
        r = 0.5
        sig = phase_rotation(-math.pi / 4, squeezed_vacuum(math.cosh(r), math.sinh(r), 60))
        direct = expectation(xppx_operator(), sig, tail_tol=np.inf).real
        res = qnd_xppx_protocol(sig, 10.0, 1.0, 0.05, FockVector.vacuum(40),
                                mode="effective", tail_tol=1e-6)
        assert res.inferred_mean == pytest.approx(direct, rel=1e-3)

    def test_qnd_consistency_of_conditional_states(self):
        # conditioning near outcome x selects signal components with
        # <xp+px> ~ x / (g lam t / 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            res = qnd_xppx_protocol(
                FockVector.vacuum(50), 10.0, 1.0, 0.2, FockVector.vacuum(60),
                mode="exact", outcome=1.0, tail_tol=1e-4,
            )
        cond = res.conditioning.conditional_state
        val = expectation(xppx_operator(), cond, tail_tol=np.inf).real
        # measurement noise floor: vacuum sigma over the shift scale
        noise = 0.5 / res.pump_shift_scale
        assert abs(val - res.inferred) < 3 * noise

    def test_lambda_warning(self):
        with pytest.warns(RegimeWarning):
            qnd_xppx_protocol(FockVector.vacuum(10), 2.0, 1.0, 0.05,
                              FockVector.vacuum(20), mode="effective",
                              tail_tol=1.0, xs=np.linspace(-2, 2, 11))

    def test_invalid_lambda(self):
        with pytest.raises(MesoscopeError):
            qnd_xppx_protocol(FockVector.vacuum(4), 0.5, 1.0, 0.1,
                              FockVector.vacuum(4))
