"""Gaussian-frame model reduction for the two-mode chi(2) interaction.

The lab-frame state is factorized as |psi> = D_a(alpha) D_b(beta) S_a(mu, nu)
|phi>: classical mean fields in the displacements, linearized squeezing of the
signal mode in S, and a residual |phi> carrying everything non-Gaussian.  The
frame parameters follow classical ODEs; the residual evolves under the
effective Hamiltonian U† H U - i U† dU/dt, built symbolically by
``conjugate_hamiltonian``.  The pump mode keeps mean-field treatment only
(its symplectic parameters stay (1, 0)); a fully symplectic two-mode frame is
out of scope here.

Hamiltonian (mode 0 = signal a, mode 1 = pump b):

    H = (g/2) (a†^2 b + a^2 b†) + delta a† a

Classical equations derived canonically from H (note the g/2 in the pump
equation, which is what conserves the Manley-Rowe charge |alpha|^2+2|beta|^2):

    i d(alpha)/dt = g alpha* beta + delta alpha
    i d(beta)/dt  = (g/2) alpha^2

With the pump phase convention beta_0 = i sqrt(n), the signal x quadrature is
the amplified one: mu = cosh(sqrt(n) g t), nu = sinh(sqrt(n) g t) at delta=0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .errors import (
    FrameInconsistent,
    MesoscopeError,
    NormDrift,
    NotSymplectic,
    StepTooLarge,
)
from .fock import FockVector, OperatorPoly, displacement, squeeze

SYMPLECTIC_TOL = 1e-8
CHARGE_TOL = 1e-6


@dataclass(frozen=True)
class HamiltonianSpec:
    """Coupling rate g, phase mismatch delta, and the Hamiltonian form.

    form="chi2" selects the two-mode interaction above; a custom normal-ordered
    OperatorPoly may be supplied instead (classical/mean-field helpers then
    refuse to run, since they encode the chi2 equations specifically).
    """

    g: float
    delta: float = 0.0
    form: str = "chi2"
    custom: OperatorPoly | None = None

    def __post_init__(self):
        if self.g < 0:
            raise MesoscopeError(f"coupling rate g must be >= 0, got {self.g}")
        if self.form not in ("chi2", "custom"):
            raise MesoscopeError(f"unknown Hamiltonian form {self.form!r}")
        if self.form == "custom" and self.custom is None:
            raise MesoscopeError("form='custom' requires an OperatorPoly")

    def hamiltonian(self) -> OperatorPoly:
        if self.form == "custom":
            return self.custom
        ad2b = OperatorPoly.from_product(
            0.5 * self.g, [(0, "ad"), (0, "ad"), (1, "a")], 2
        )
        h = ad2b + ad2b.adjoint()
        if self.delta != 0.0:
            h = h + self.delta * OperatorPoly.number(0, 2)
        return h

    def _require_chi2(self, what: str):
        if self.form != "chi2":
            raise MesoscopeError(f"{what} is defined for the chi2 form only")


@dataclass(frozen=True)
class GaussianFrame:
    """Mean fields and signal symplectic parameters at one instant.

    alpha, beta: signal and pump mean-field amplitudes; mu, nu: signal-mode
    symplectic parameters (S† a S = mu a + nu a†).  The pump symplectic
    parameters are identically (1, 0).  Time is in units of 1/g.
    """

    alpha: complex
    beta: complex
    mu: complex = 1.0
    nu: complex = 0.0
    time: float = 0.0

    @property
    def symplectic_defect(self) -> float:
        return abs(abs(self.mu) ** 2 - abs(self.nu) ** 2 - 1.0)

    def require_symplectic(self, tol: float = SYMPLECTIC_TOL):
        if self.symplectic_defect > tol:
            raise NotSymplectic(
                f"|mu|^2-|nu|^2 deviates by {self.symplectic_defect:.3e} at t={self.time}"
            )

    @staticmethod
    def pump_photons(n: float, alpha: complex = 0.0) -> "GaussianFrame":
        """Frame for a coherent pump of n photons at the convention phase i sqrt(n)."""
        return GaussianFrame(alpha=alpha, beta=1j * np.sqrt(n))


@dataclass(frozen=True)
class FrameRhs:
    """Time derivatives of the frame parameters at one instant."""

    dalpha: complex
    dbeta: complex
    dmu: complex
    dnu: complex


@dataclass
class MeanFieldTrajectory:
    times: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    charge_drift: float

    def charge(self) -> np.ndarray:
        return np.abs(self.alphas) ** 2 + 2 * np.abs(self.betas) ** 2


@dataclass
class FrameTrajectory:
    frames: list[GaussianFrame]
    dt: float
    charge_drift: float
    symplectic_drift: float

    @property
    def final(self) -> GaussianFrame:
        return self.frames[-1]


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def mean_field_rhs(spec: HamiltonianSpec, alpha: complex, beta: complex
                   ) -> tuple[complex, complex]:
    """Canonical classical equations of the chi2 Hamiltonian.

    d(alpha)/dt = -i (g alpha* beta + delta alpha)
    d(beta)/dt  = -i (g/2) alpha^2

    The g/2 makes |alpha|^2 + 2|beta|^2 an exact invariant of the flow, the
    classical image of the conserved charge a†a + 2 b†b.
    """
    spec._require_chi2("mean_field_rhs")
    dalpha = -1j * (spec.g * np.conj(alpha) * beta + spec.delta * alpha)
    dbeta = -0.5j * spec.g * alpha * alpha
    return complex(dalpha), complex(dbeta)


def gaussian_rhs(spec: HamiltonianSpec, frame: GaussianFrame
                 ) -> tuple[complex, complex]:
    """Linearized (mu, nu) equations for the signal mode.

    With H_G = (g/2)(beta ad^2 + beta* a^2) + delta ad a the double-commutator
    expressions reduce to

        d(mu)/dt = -i (delta mu + g beta nu*)
        d(nu)/dt = -i (delta nu + g beta mu*)

    which preserve |mu|^2 - |nu|^2 exactly.
    """
    spec._require_chi2("gaussian_rhs")
    frame.require_symplectic()
    dmu = -1j * (spec.delta * frame.mu + spec.g * frame.beta * np.conj(frame.nu))
    dnu = -1j * (spec.delta * frame.nu + spec.g * frame.beta * np.conj(frame.mu))
    return complex(dmu), complex(dnu)


def frame_rhs(spec: HamiltonianSpec, frame: GaussianFrame) -> FrameRhs:
    dalpha, dbeta = mean_field_rhs(spec, frame.alpha, frame.beta)
    dmu, dnu = gaussian_rhs(spec, frame)
    return FrameRhs(dalpha, dbeta, dmu, dnu)


# ---------------------------------------------------------------------------
# fixed-step RK4 integration (deterministic, reproducible)
# ---------------------------------------------------------------------------

def _rk4_step(f, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _n_steps(t_final: float, dt: float) -> int:
    if dt <= 0 or t_final < 0:
        raise MesoscopeError("need dt > 0 and t_final >= 0")
    return max(int(round(t_final / dt)), 0 if t_final == 0 else 1)


def integrate_mean_field(spec: HamiltonianSpec, initial: tuple[complex, complex],
                         t_final: float, dt: float) -> MeanFieldTrajectory:
    """Classical RK4 trajectory of (alpha, beta); charge-conservation checked."""
    spec._require_chi2("integrate_mean_field")

    def f(y):
        da, db = mean_field_rhs(spec, y[0], y[1])
        return np.array([da, db])

    steps = _n_steps(t_final, dt)
    h = t_final / steps if steps else dt
    y = np.array([complex(initial[0]), complex(initial[1])])
    times = [0.0]
    traj = [y.copy()]
    for k in range(steps):
        y = _rk4_step(f, y, h)
        times.append((k + 1) * h)
        traj.append(y.copy())
    traj = np.array(traj)
    charge = np.abs(traj[:, 0]) ** 2 + 2 * np.abs(traj[:, 1]) ** 2
    scale = max(charge[0], 1.0)
    drift = float(np.max(np.abs(charge - charge[0])) / scale)
    if drift > CHARGE_TOL:
        raise StepTooLarge(
            f"classical charge drifted by {drift:.3e} relative; reduce dt"
        )
    return MeanFieldTrajectory(np.array(times), traj[:, 0], traj[:, 1], drift)


def integrate_frame(spec: HamiltonianSpec, initial: GaussianFrame,
                    t_final: float, dt: float) -> FrameTrajectory:
    """Joint RK4 trajectory of (alpha, beta, mu, nu).

    Symplectic drift above 1e-8 raises NotSymplectic rather than being
    silently renormalized; charge drift above 1e-6 relative raises
    StepTooLarge.
    """
    spec._require_chi2("integrate_frame")
    initial.require_symplectic()

    def f(y):
        da = -1j * (spec.g * np.conj(y[0]) * y[1] + spec.delta * y[0])
        db = -0.5j * spec.g * y[0] * y[0]
        dmu = -1j * (spec.delta * y[2] + spec.g * y[1] * np.conj(y[3]))
        dnu = -1j * (spec.delta * y[3] + spec.g * y[1] * np.conj(y[2]))
        return np.array([da, db, dmu, dnu])

    steps = _n_steps(t_final, dt)
    h = t_final / steps if steps else dt
    y = np.array([initial.alpha, initial.beta, initial.mu, initial.nu],
                 dtype=complex)
    frames = [GaussianFrame(alpha=y[0], beta=y[1], mu=y[2], nu=y[3],
                            time=initial.time)]
    for k in range(steps):
        y = _rk4_step(f, y, h)
        frames.append(GaussianFrame(alpha=y[0], beta=y[1], mu=y[2], nu=y[3],
                                    time=initial.time + (k + 1) * h))
    sympl = max(fr.symplectic_defect for fr in frames)
    if sympl > SYMPLECTIC_TOL:
        raise NotSymplectic(
            f"symplectic invariant drifted by {sympl:.3e}; reduce dt"
        )
    charges = np.array(
        [abs(fr.alpha) ** 2 + 2 * abs(fr.beta) ** 2 for fr in frames]
    )
    drift = float(np.max(np.abs(charges - charges[0])) / max(charges[0], 1.0))
    if drift > CHARGE_TOL:
        raise StepTooLarge(
            f"classical charge drifted by {drift:.3e} relative; reduce dt"
        )
    return FrameTrajectory(frames, h, drift, sympl)


# ---------------------------------------------------------------------------
# effective Hamiltonian in the frame
# ---------------------------------------------------------------------------

def _squeeze_generator(frame: GaussianFrame, rhs: FrameRhs,
                       tol: float = 1e-6) -> OperatorPoly:
    """Quadratic W = -i S† dS/dt matching the (mu, nu) derivatives.

    From d(S† a S)/dt = i [S† a S, W] with W = w20 ad^2 + w20* a^2 + w11 ad a:

        w20 = (mu* dnu - nu dmu*) / (2i)
        w11 = -i (dmu + 2i nu w20*) / mu   (real for a consistent frame)

    The constant part of W is a global-phase convention and is set to zero.
    """
    mu, nu = frame.mu, frame.nu
    w20 = (np.conj(mu) * rhs.dnu - nu * np.conj(rhs.dmu)) / 2j
    w11_c = -1j * (rhs.dmu + 2j * nu * np.conj(w20)) / mu
    scale = max(abs(rhs.dmu), abs(rhs.dnu), 1.0)
    if abs(w11_c.imag) > tol * scale:
        raise FrameInconsistent(
            f"(mu, nu) derivatives admit no Hermitian generator "
            f"(Im w11 = {w11_c.imag:.3e}); frame does not satisfy its ODEs"
        )
    # consistency of the remaining matching equation
    dnu_back = 1j * (2 * mu * w20 - nu * w11_c.real)
    if abs(dnu_back - rhs.dnu) > tol * scale:
        raise FrameInconsistent(
            f"dnu mismatch {abs(dnu_back - rhs.dnu):.3e}; frame does not "
            "satisfy its ODEs"
        )
    ad2 = OperatorPoly.from_product(1.0, [(0, "ad"), (0, "ad")], 2)
    a2 = OperatorPoly.from_product(1.0, [(0, "a"), (0, "a")], 2)
    return w20 * ad2 + np.conj(w20) * a2 + w11_c.real * OperatorPoly.number(0, 2)


def _is_low_order(word, quadratic: bool) -> bool:
    """Words the frame must absorb: pure-signal degree <= 2 (degree <= 1 when
    the squeeze part of the frame is static and absorbs nothing).

    Pump-linear terms are deliberately not examined: their classical part
    cancels against the pump displacement generator, but squeezing leaves a
    residual (g/2) mu* nu* b + h.c. that is real physics -- the quantum
    pump-depletion drive sourced by amplified vacuum.
    """
    (ja, ka), (jb, kb) = word
    return jb + kb == 0 and 0 < ja + ka <= (2 if quadratic else 1)


def conjugate_hamiltonian(h: OperatorPoly, frame: GaussianFrame, rhs: FrameRhs,
                          prune_tol: float = 1e-9,
                          fail_tol: float = 1e-6) -> OperatorPoly:
    """Effective Hamiltonian U† H U - i U† dU/dt in the Gaussian frame.

    Substitutes a -> mu a + nu ad + alpha and b -> b + beta, re-normal-orders,
    and subtracts the frame-generator terms built from ``rhs``.  When the
    frame satisfies its ODEs all constant, linear and pure-signal-quadratic
    terms cancel; residuals below ``prune_tol`` are dropped, residuals above
    ``fail_tol`` raise FrameInconsistent.  Constant terms (global phase) are
    always dropped.

    A frame whose squeeze part is static (dmu = dnu = 0) claims no quadratic
    absorption -- conjugation by a fixed S is a legitimate use -- so
    pure-signal quadratic terms are then left in place unexamined.
    """
    if h.modes != 2:
        raise MesoscopeError("conjugate_hamiltonian expects a two-mode Hamiltonian")
    frame.require_symplectic()
    mu, nu, alpha, beta = frame.mu, frame.nu, frame.alpha, frame.beta

    eff = h.substitute(0, mu, nu, alpha).substitute(1, 1.0, 0.0, beta)

    # -i U^dag dU/dt: signal displacement generator conjugated through S,
    # pump displacement generator, and the squeeze generator W.
    a_sub = OperatorPoly(2, {((0, 1), (0, 0)): mu, ((1, 0), (0, 0)): nu})
    ad_sub = a_sub.adjoint()
    b_op = OperatorPoly.destroy(1, 2)
    bd_op = OperatorPoly.create(1, 2)
    gen = (-1j) * (rhs.dalpha * ad_sub - np.conj(rhs.dalpha) * a_sub) \
        + (-1j) * (rhs.dbeta * bd_op - np.conj(rhs.dbeta) * b_op) \
        + _squeeze_generator(frame, rhs, tol=fail_tol)
    eff = eff + gen

    quadratic_claimed = abs(rhs.dmu) + abs(rhs.dnu) > 0
    cleaned: dict = {}
    const_word = ((0, 0), (0, 0))
    for word, coeff in eff.terms.items():
        if word == const_word:
            continue  # global phase
        if _is_low_order(word, quadratic_claimed):
            if abs(coeff) > fail_tol:
                raise FrameInconsistent(
                    f"residual low-order coefficient {abs(coeff):.3e} on "
                    f"{word}; frame does not satisfy its ODEs"
                )
            if abs(coeff) <= prune_tol:
                continue
        cleaned[word] = coeff
    return OperatorPoly(2, cleaned)


# ---------------------------------------------------------------------------
# co-evolution of frame and residual
# ---------------------------------------------------------------------------

@dataclass
class GifResult:
    """Frame trajectory plus the residual state it carries."""

    spec: HamiltonianSpec
    frames: list[GaussianFrame]
    residual: FockVector
    norm_drift: float
    charge_drift: float
    symplectic_drift: float

    @property
    def final_frame(self) -> GaussianFrame:
        return self.frames[-1]

    def reconstruct_lab_state(self, tail_tol: float = 1e-3) -> FockVector:
        """D_a(alpha) D_b(beta) S_a(mu, nu) |phi>, the lab-frame state."""
        fr = self.final_frame
        out = squeeze(fr.mu, fr.nu, self.residual, mode=0, tail_tol=tail_tol)
        if fr.beta != 0:
            out = displacement(fr.beta, out, mode=1, tail_tol=tail_tol)
        if fr.alpha != 0:
            out = displacement(fr.alpha, out, mode=0, tail_tol=tail_tol)
        return out


def gif_evolve(spec: HamiltonianSpec, initial_frame: GaussianFrame,
               initial_residual: FockVector, t_final: float, dt: float,
               norm_tol: float = 1e-8) -> GifResult:
    """Co-integrate mean field, (mu, nu), and the residual state.

    The frame advances by RK4 half-steps; the residual advances by the
    exponential midpoint rule under the effective Hamiltonian evaluated at the
    half-step frame.  Norm drift beyond ``norm_tol`` raises NormDrift (the
    propagator is anti-Hermitian, so drift indicates a step-size problem).
    """
    if initial_residual.modes != 2:
        raise MesoscopeError("gif_evolve expects a two-mode residual state")
    spec._require_chi2("gif_evolve")
    h = spec.hamiltonian()
    dims = initial_residual.mode_dims

    def f(y):
        da = -1j * (spec.g * np.conj(y[0]) * y[1] + spec.delta * y[0])
        db = -0.5j * spec.g * y[0] * y[0]
        dmu = -1j * (spec.delta * y[2] + spec.g * y[1] * np.conj(y[3]))
        dnu = -1j * (spec.delta * y[3] + spec.g * y[1] * np.conj(y[2]))
        return np.array([da, db, dmu, dnu])

    steps = _n_steps(t_final, dt)
    hstep = t_final / steps if steps else dt
    y = np.array([initial_frame.alpha, initial_frame.beta,
                  initial_frame.mu, initial_frame.nu], dtype=complex)
    t0 = initial_frame.time
    frames = [GaussianFrame(alpha=y[0], beta=y[1], mu=y[2], nu=y[3], time=t0)]
    phi = initial_residual.amplitudes.ravel().copy()
    norm0 = np.linalg.norm(phi)
    worst_norm = 0.0

    for k in range(steps):
        y_half = _rk4_step(f, y, hstep / 2)
        fr_half = GaussianFrame(alpha=y_half[0], beta=y_half[1],
                                mu=y_half[2], nu=y_half[3],
                                time=t0 + (k + 0.5) * hstep)
        rhs_half = frame_rhs(spec, fr_half)
        h_eff = conjugate_hamiltonian(h, fr_half, rhs_half)
        mat = h_eff.to_matrix(dims)
        phi = scipy.sparse.linalg.expm_multiply(-1j * hstep * mat, phi)
        worst_norm = max(worst_norm, abs(np.linalg.norm(phi) - norm0))
        y = _rk4_step(f, y_half, hstep / 2)
        frames.append(GaussianFrame(alpha=y[0], beta=y[1], mu=y[2], nu=y[3],
                                    time=t0 + (k + 1) * hstep))

    if worst_norm > norm_tol:
        raise NormDrift(f"residual norm drifted by {worst_norm:.3e}")
    sympl = max(fr.symplectic_defect for fr in frames)
    if sympl > SYMPLECTIC_TOL:
        raise NotSymplectic(f"symplectic invariant drifted by {sympl:.3e}")
    charges = np.array([abs(fr.alpha) ** 2 + 2 * abs(fr.beta) ** 2 for fr in frames])
    charge_drift = float(np.max(np.abs(charges - charges[0])) / max(charges[0], 1.0))

    residual = FockVector(phi.reshape(dims), initial_residual.label)
    return GifResult(spec, frames, residual, worst_norm, charge_drift, sympl)
