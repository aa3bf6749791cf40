"""Exact two-mode chi(2) dynamics and the reduced single-mode models.

The oracle evolves |psi> under H = (g/2)(ad^2 b + a^2 bd) + delta ad a by
norm-checked sparse exponential stepping.  Truncation never breaks the sector
structure: H couples |n_a, n_b> only to |n_a +/- 2, n_b -/+ 1>, so the
truncated matrix still commutes with the charge N = ad a + 2 bd b, and charge
drift measures solver health rather than truncation.

Reduced models (pump at the convention phase beta = i sqrt(n), signal frame
as in :mod:`mesoscope.frame`):

  phase matched (delta = 0): H_eff = g_eff(t) x_a^2 x_b with
      g_eff(t) = g e^{2 sqrt(n) g t};
      the pump fluctuation quadrature p_b acquires the -x_a^2/2 displacement.

  phase mismatched (delta > g sqrt(n)): H_eff = -g_eff (A†A) p_b with
      A = cosh(u) a + i sinh(u) ad,  u = atanh(g sqrt(n)/delta)/2,
      g_eff = g sinh(2u),  Delta = sqrt(delta^2 - g^2 n);
      here x_b acquires the photon-number-dependent displacement (a pump
      phase shift, the QND readout of A†A).

The i in A reflects the beta = i sqrt(n) pump phase; with a real pump phase A
reduces to the familiar cosh(u) a - sinh(u) ad form.  The scalar part of the
averaged coupling (a fixed pump displacement) is dropped as a trivial Gaussian
transformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .errors import DomainError, MesoscopeError, NormDrift, RegimeViolation
from .fock import FockVector, OperatorPoly
from .frame import HamiltonianSpec


@dataclass(frozen=True)
class OpaRegime:
    """Operating-point classification with the mismatched-regime parameters.

    u and big_delta are populated only for the phase_mismatched class, where
    Delta cosh(2u) = delta and Delta sinh(2u) = g sqrt(n) hold exactly.
    """

    n: float
    g: float
    delta: float
    classification: str
    u: float | None = None
    big_delta: float | None = None


def classify_regime(n: float, g: float, delta: float) -> OpaRegime:
    """phase_matched at delta = 0; phase_mismatched for delta > g sqrt(n);
    intermediate in between."""
    if n < 0 or g < 0:
        raise DomainError("need n >= 0 and g >= 0")
    if delta < 0:
        raise DomainError("delta < 0; fold the sign into the mode phases")
    gsn = g * math.sqrt(n)
    if delta == 0.0:
        return OpaRegime(n, g, delta, "phase_matched")
    if delta > gsn:
        u = 0.5 * math.atanh(gsn / delta)
        big_delta = math.sqrt(delta ** 2 - gsn ** 2)
        return OpaRegime(n, g, delta, "phase_mismatched", u=u, big_delta=big_delta)
    return OpaRegime(n, g, delta, "intermediate")


# ---------------------------------------------------------------------------
# exact oracle
# ---------------------------------------------------------------------------

#: conserved charge ad a + 2 bd b
def charge_operator() -> OperatorPoly:
    return OperatorPoly.number(0, 2) + 2.0 * OperatorPoly.number(1, 2)


def full_oracle_evolve(spec: HamiltonianSpec, state: FockVector, t: float,
                       dt: float, norm_tol: float = 1e-8) -> FockVector:
    """Schroedinger evolution under the full two-mode Hamiltonian.

    Stepping uses the scaling-and-squaring Krylov exponential on the sparse
    matrix; dt sets the checkpoint granularity at which norm and charge
    conservation are verified (NormDrift beyond norm_tol aborts).
    """
    return oracle_checkpoints(spec, state, [t], dt, norm_tol=norm_tol)[-1]


def oracle_checkpoints(spec: HamiltonianSpec, state: FockVector,
                       times, dt: float, norm_tol: float = 1e-8
                       ) -> list[FockVector]:
    """States at the requested times (sorted, >= 0), sharing one evolution."""
    if state.modes != 2:
        raise MesoscopeError("oracle expects a two-mode state")
    times = list(times)
    if any(tb < ta for ta, tb in zip(times, times[1:])) or (times and times[0] < 0):
        raise MesoscopeError("checkpoint times must be sorted and nonnegative")
    if dt <= 0:
        raise MesoscopeError("need dt > 0")
    dims = state.mode_dims
    h_mat = spec.hamiltonian().to_matrix(dims)
    n_mat = charge_operator().to_matrix(dims)

    psi = state.amplitudes.ravel().copy()
    norm0 = np.linalg.norm(psi)
    charge0 = float(np.vdot(psi, n_mat @ psi).real)
    out = []
    t_now = 0.0
    for t_target in times:
        span = t_target - t_now
        steps = max(int(math.ceil(span / dt - 1e-12)), 0)
        for k in range(steps):
            h_step = span / steps
            psi = scipy.sparse.linalg.expm_multiply(-1j * h_step * h_mat, psi)
            drift = abs(np.linalg.norm(psi) - norm0)
            if drift > norm_tol:
                raise NormDrift(
                    f"norm drifted by {drift:.3e} at t={t_now + (k + 1) * h_step:.4f}"
                )
        t_now = t_target
        charge = float(np.vdot(psi, n_mat @ psi).real)
        if abs(charge - charge0) > max(norm_tol * max(abs(charge0), 1.0), norm_tol):
            raise NormDrift(
                f"conserved charge drifted by {abs(charge - charge0):.3e}"
            )
        out.append(FockVector(psi.reshape(dims), state.label))
    return out


# ---------------------------------------------------------------------------
# reduced models
# ---------------------------------------------------------------------------

def effective_phase_matched(n: float, g: float, t: float
                            ) -> tuple[OperatorPoly, float]:
    """Cubic QND Hamiltonian g_eff(t) x_a^2 x_b and the enhancement g_eff(t)."""
    if n < 1:
        raise DomainError(f"need n >= 1 for the phase-matched reduction, got {n}")
    g_eff = g * math.exp(2.0 * math.sqrt(n) * g * t)
    x_a = OperatorPoly.position(0, 2)
    x_b = OperatorPoly.position(1, 2)
    return (g_eff * (x_a * x_a * x_b)), g_eff


def cubic_phase_strength(n: float, g: float, t: float) -> float:
    """Time integral of g_eff: (e^{2 sqrt(n) g t} - 1) / (2 sqrt(n)).

    The exponential enhancement integrates in closed form, so evolution under
    the time-dependent cubic model is the single unitary
    exp(-i Theta(t) x_a^2 x_b) with this Theta.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    return (math.exp(2.0 * math.sqrt(n) * g * t) - 1.0) / (2.0 * math.sqrt(n))


def evolve_cubic_model(state: FockVector, theta: float) -> FockVector:
    """Apply exp(-i theta x_a^2 x_b) to a two-mode (signal, pump-fluctuation) state."""
    if state.modes != 2:
        raise MesoscopeError("cubic model expects a two-mode state")
    x2xb = OperatorPoly.position(0, 2) ** 2 * OperatorPoly.position(1, 2)
    mat = x2xb.to_matrix(state.mode_dims)
    psi = scipy.sparse.linalg.expm_multiply(
        -1j * theta * mat, state.amplitudes.ravel()
    )
    return FockVector(psi.reshape(state.mode_dims), state.label)


def effective_phase_mismatched(n: float, g: float, delta: float
                               ) -> tuple[OperatorPoly, float, float, float]:
    """Ponderomotive Hamiltonian -g_eff A†A p_b plus (g_eff, u, Delta).

    Requires delta > g sqrt(n) (RegimeViolation otherwise).  A†A is built
    with A = cosh(u) a + i sinh(u) ad; the scalar -g_eff/2 p_b part of the
    averaged coupling is dropped as a trivial pump displacement.
    """
    regime = classify_regime(n, g, delta)
    if regime.classification != "phase_mismatched":
        raise RegimeViolation(
            f"ponderomotive reduction needs delta > g sqrt(n); got delta={delta}, "
            f"g sqrt(n)={g * math.sqrt(n):.6g}"
        )
    u, big_delta = regime.u, regime.big_delta
    g_eff = g * math.sinh(2.0 * u)
    c, s = math.cosh(u), math.sinh(u)
    a_op = OperatorPoly.destroy(0, 2)
    ad_op = OperatorPoly.create(0, 2)
    big_a = c * a_op + (1j * s) * ad_op
    number_a = big_a.adjoint() * big_a
    p_b = OperatorPoly.momentum(1, 2)
    return (-g_eff) * (number_a * p_b), g_eff, u, big_delta
