"""Pump homodyne and conditional signal-state preparation.

Homodyne is modeled as ideal projection onto quadrature eigenstates on a
finite grid.  ``lo_phase`` selects the measured quadrature
x_phi = x cos(phi) + p sin(phi): conditioning displaces different pump
quadratures in different regimes (the cubic QND interaction writes onto the
pump p quadrature under the beta = i sqrt(n) pump-phase convention, the
ponderomotive one onto x), so scenarios pick the local-oscillator phase that
reads the displaced quadrature.

The squeeze-sandwich protocol measures <xp + px> of the signal: with
S_b† b S_b = lambda^{-1} x_b + i lambda p_b, the sandwich
S_b† e^{-iHt} S_b equals evolution under the exactly conjugated Hamiltonian

    H_tilde = g lambda (x p + p x)_a p_b + g lambda^{-1} (x^2 - p^2)_a x_b,

whose leading term displaces the pump x quadrature by
(g lambda t / 2) (xp + px).  "exact" mode evolves under the full H_tilde
(operator-identical to the literal squeeze/evolve/unsqueeze sandwich but
without the astronomically squeezed intermediate state, which would need a
pump truncation in the thousands at lambda = 20); "effective" mode keeps only
the leading term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .errors import GridEmpty, MesoscopeError, RegimeWarning, ZeroDensity
from .fock import (
    FockVector,
    OperatorPoly,
    expectation,
    hermite_functions,
    phase_rotation,
)
from .frame import HamiltonianSpec

#: default homodyne grid resolution in quadrature units
DEFAULT_RESOLUTION = 0.01


@dataclass(frozen=True)
class ConditioningResult:
    """Outcome, its marginal density, and the normalized conditional state."""

    outcome: float
    density: float
    conditional_state: FockVector
    lo_phase: float = 0.0
    metadata: dict = field(default_factory=dict)


def homodyne_grid(stretch: float = 1.0, resolution: float = DEFAULT_RESOLUTION,
                  half_width_sigmas: float = 6.0, center: float = 0.0) -> np.ndarray:
    """Grid spanning +/- half_width_sigmas vacuum sigmas times the frame stretch."""
    half = half_width_sigmas * 0.5 * max(stretch, 1e-12)
    n = max(int(math.ceil(2 * half / resolution)) + 1, 3)
    return center + np.linspace(-half, half, n)


def _pump_amplitude_table(state: FockVector, xs: np.ndarray, lo_phase: float
                          ) -> np.ndarray:
    """<x_phi, pump| Psi> as an array [n_signal, x]."""
    if state.modes != 2:
        raise MesoscopeError("pump homodyne expects a two-mode state")
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise GridEmpty("empty homodyne grid")
    rotated = phase_rotation(lo_phase, state, mode=1) if lo_phase else state
    phi = hermite_functions(xs, state.mode_dims[1])
    return np.tensordot(rotated.amplitudes, phi, axes=([1], [0]))


def pump_homodyne_density(state: FockVector, xs: np.ndarray,
                          lo_phase: float = 0.0) -> np.ndarray:
    """Marginal density P(x_phi) of the pump quadrature; nonnegative, and
    integrates to 1 over a grid covering the support."""
    table = _pump_amplitude_table(state, xs, lo_phase)
    return np.sum(np.abs(table) ** 2, axis=0)


def condition_on_xb(state: FockVector, outcome: float, lo_phase: float = 0.0,
                    zero_density_tol: float = 1e-12) -> ConditioningResult:
    """Project the pump onto the quadrature value ``outcome``.

    The conditional signal state is <x_phi | Psi> normalized; its squared norm
    is the marginal density at the outcome.  Essentially impossible outcomes
    (density below ``zero_density_tol``) raise ZeroDensity rather than being
    silently renormalized.
    """
    table = _pump_amplitude_table(state, np.array([float(outcome)]), lo_phase)
    amps = table[:, 0]
    density = float(np.sum(np.abs(amps) ** 2))
    if density < zero_density_tol:
        raise ZeroDensity(
            f"marginal density {density:.3e} at outcome {outcome}; conditioning "
            "would amplify numerical noise"
        )
    cond = FockVector(amps / math.sqrt(density), state.label)
    return ConditioningResult(float(outcome), density, cond, lo_phase)


def sample_outcome(xs: np.ndarray, density: np.ndarray, seed: int) -> float:
    """Inverse-CDF sample from a gridded density; deterministic per seed."""
    xs = np.asarray(xs, dtype=float)
    density = np.asarray(density, dtype=float)
    if xs.size < 2:
        if xs.size == 1:
            return float(xs[0])
        raise GridEmpty("empty outcome grid")
    if np.any(density < 0):
        raise MesoscopeError("density must be nonnegative")
    widths = np.diff(xs)
    bins = 0.5 * (density[:-1] + density[1:]) * widths
    total = float(np.sum(bins))
    if total <= 0:
        raise MesoscopeError("density integrates to zero")
    cdf = np.concatenate(([0.0], np.cumsum(bins))) / total
    u = np.random.default_rng(seed).uniform()
    k = int(np.searchsorted(cdf, u, side="right") - 1)
    k = min(max(k, 0), xs.size - 2)
    span = cdf[k + 1] - cdf[k]
    frac = 0.0 if span == 0 else (u - cdf[k]) / span
    return float(xs[k] + frac * widths[k])


def reduced_density_matrix(state: FockVector, mode: int = 0) -> np.ndarray:
    """Reduced density matrix of one mode; diagnostic for completeness tests."""
    if state.modes != 2:
        raise MesoscopeError("reduced_density_matrix expects a two-mode state")
    a = state.amplitudes if mode == 0 else state.amplitudes.T
    return a @ a.conj().T


# ---------------------------------------------------------------------------
# QND measurement of xp + px via a squeezed pump
# ---------------------------------------------------------------------------

def xppx_operator(modes: int = 1, mode: int = 0) -> OperatorPoly:
    """xp + px = (i/2)(ad^2 - a^2) under the module convention."""
    x = OperatorPoly.position(mode, modes)
    p = OperatorPoly.momentum(mode, modes)
    return x * p + p * x


def sandwich_hamiltonian(g: float, lam: float) -> OperatorPoly:
    """S_b† H S_b for the squeeze factor lambda, exact in lambda."""
    spec = HamiltonianSpec(g=g, delta=0.0)
    mu_b = 0.5 * (1.0 / lam + lam)
    nu_b = 0.5 * (1.0 / lam - lam)
    return spec.hamiltonian().substitute(1, mu_b, nu_b, 0.0)


def leading_sandwich_hamiltonian(g: float, lam: float) -> OperatorPoly:
    """The lambda-leading term g lambda (xp + px)_a p_b alone."""
    return (g * lam) * (xppx_operator(2, 0) * OperatorPoly.momentum(1, 2))


@dataclass
class QndProtocolResult:
    """Evolved joint state, homodyne data, and the inferred <xp + px>."""

    mode: str
    lam: float
    g: float
    t: float
    joint_final: FockVector
    xs: np.ndarray
    density: np.ndarray
    conditioning: ConditioningResult
    inferred: float
    inferred_mean: float
    pump_shift_scale: float


def qnd_xppx_protocol(signal: FockVector, lam: float, g: float, t: float,
                      pump_state: FockVector, mode: str = "exact",
                      outcome: float | None = None, seed: int | None = None,
                      xs: np.ndarray | None = None, dt: float | None = None,
                      tail_tol: float = 1e-6) -> QndProtocolResult:
    """Squeeze-sandwich QND measurement of <xp + px> on the signal.

    Evolves signal (x) pump under the sandwich Hamiltonian (mode="exact") or
    its leading term (mode="effective"), homodynes the pump x quadrature, and
    converts the outcome to an estimate via the displacement relation
    x_b(t) = x_b(0) + (g lambda t / 2)(xp + px).  The conditioning outcome is
    taken from ``outcome`` if given, else sampled with ``seed``, else set to
    the density mean.
    """
    if lam <= 1:
        raise MesoscopeError(f"squeeze factor lambda must exceed 1, got {lam}")
    if mode not in ("exact", "effective"):
        raise MesoscopeError(f"mode must be 'exact' or 'effective', got {mode!r}")
    if signal.modes != 1 or pump_state.modes != 1:
        raise MesoscopeError("signal and pump_state must be single-mode")
    if lam < 5:
        warnings.warn(
            f"lambda = {lam} < 5: O(1/lambda) terms are not negligible",
            RegimeWarning,
            stacklevel=2,
        )
    joint = FockVector.product(signal, pump_state)
    h = sandwich_hamiltonian(g, lam) if mode == "exact" else \
        leading_sandwich_hamiltonian(g, lam)
    mat = h.to_matrix(joint.mode_dims)
    psi = joint.amplitudes.ravel()
    steps = max(int(math.ceil(t / dt)), 1) if dt else 1
    for _ in range(steps):
        psi = scipy.sparse.linalg.expm_multiply(-1j * (t / steps) * mat, psi)
    final = FockVector(psi.reshape(joint.mode_dims), signal.label)
    tail = final.tail_mass()
    if tail > tail_tol:
        from .errors import TruncationOverflow

        raise TruncationOverflow(
            f"evolved state tail mass {tail:.3e} above {tail_tol:.1e}; "
            "enlarge dims (dominant failure at large lambda)"
        )

    shift_scale = 0.5 * g * lam * t
    x_b = OperatorPoly.position(1, 2)
    mean = expectation(x_b, final, tail_tol=np.inf).real
    var = expectation(x_b * x_b, final, tail_tol=np.inf).real - mean ** 2
    if xs is None:
        half = 6.0 * math.sqrt(max(var, 1e-12)) + 0.5
        n_pts = max(int(math.ceil(2 * half / DEFAULT_RESOLUTION)) + 1, 3)
        xs = mean + np.linspace(-half, half, n_pts)
    density = pump_homodyne_density(final, xs)

    if outcome is None:
        outcome = sample_outcome(xs, density, seed) if seed is not None else mean
    conditioning = condition_on_xb(final, outcome)
    inferred = float(outcome) / shift_scale
    inferred_mean = mean / shift_scale
    return QndProtocolResult(
        mode=mode, lam=lam, g=g, t=t, joint_final=final, xs=np.asarray(xs),
        density=density, conditioning=conditioning, inferred=inferred,
        inferred_mean=inferred_mean, pump_shift_scale=shift_scale,
    )
