"""Truncated Fock-space states, normal-ordered operator polynomials, and exact
Gaussian unitaries (displacement, squeezing).

Quadrature convention (fixed globally, used by every module):

    x = (a + a†)/2,   p = (a - a†)/(2i),   [x, p] = i/2

so the vacuum variance is <x^2> = 1/4 and the vacuum position wavefunction is
phi_0(x) = (2/pi)^{1/4} exp(-x^2).  All quadrature grids, homodyne outcomes
and Wigner axes are expressed in these units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import (
    GridEmpty,
    MesoscopeError,
    ModeMismatch,
    NotSymplectic,
    TruncationOverflow,
)

#: serialized tag identifying the quadrature convention in output files
CONVENTION_TAG = "x=(a+adag)/2; p=(a-adag)/(2i); vacuum_var=1/4"

#: default tolerance on the probability allowed in the top Fock levels
DEFAULT_TAIL_TOL = 1e-8


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockVector:
    """Pure state of one or two bosonic modes on a truncated Fock space.

    ``amplitudes[n]`` (or ``amplitudes[n_a, n_b]``) is the coefficient of the
    photon-number basis state.  Instances are immutable; every operation
    returns a new vector.
    """

    amplitudes: np.ndarray
    label: str | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim not in (1, 2):
            raise ModeMismatch(f"expected 1 or 2 modes, got shape {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return self.amplitudes.shape

    @property
    def modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "FockVector":
        n = self.norm
        if n == 0.0:
            raise MesoscopeError("cannot normalize the zero vector")
        return FockVector(self.amplitudes / n, self.label)

    def tail_mass(self, levels: int = 3) -> float:
        """Largest probability held in the top ``levels`` Fock levels of any mode."""
        probs = np.abs(self.amplitudes) ** 2
        worst = 0.0
        for axis, dim in enumerate(self.mode_dims):
            top = probs.take(range(max(dim - levels, 0), dim), axis=axis).sum()
            worst = max(worst, float(top))
        return worst

    def is_trusted(self, tail_tol: float = DEFAULT_TAIL_TOL) -> bool:
        return self.tail_mass() <= tail_tol

    def overlap(self, other: "FockVector") -> complex:
        if self.mode_dims != other.mode_dims:
            raise ModeMismatch(
                f"mode dims differ: {self.mode_dims} vs {other.mode_dims}"
            )
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def with_label(self, label: str) -> "FockVector":
        return FockVector(self.amplitudes, label)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def vacuum(dims: int | tuple[int, ...]) -> "FockVector":
        dims = (dims,) if isinstance(dims, int) else tuple(dims)
        amps = np.zeros(dims, dtype=np.complex128)
        amps[(0,) * len(dims)] = 1.0
        return FockVector(amps)

    @staticmethod
    def fock(dims: int | tuple[int, ...], occupation: int | tuple[int, ...]) -> "FockVector":
        dims = (dims,) if isinstance(dims, int) else tuple(dims)
        occ = (occupation,) if isinstance(occupation, int) else tuple(occupation)
        if len(occ) != len(dims) or any(n >= d for n, d in zip(occ, dims)):
            raise MesoscopeError(f"occupation {occ} does not fit dims {dims}")
        amps = np.zeros(dims, dtype=np.complex128)
        amps[occ] = 1.0
        return FockVector(amps)

    @staticmethod
    def coherent(alpha: complex, dim: int) -> "FockVector":
        if alpha == 0:
            return FockVector.vacuum(dim)
        n = np.arange(dim)
        log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, dim)))))
        amps = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(complex(alpha)) - log_fact / 2)
        return FockVector(amps)

    @staticmethod
    def product(a: "FockVector", b: "FockVector") -> "FockVector":
        if a.modes != 1 or b.modes != 1:
            raise ModeMismatch("product() expects two single-mode states")
        return FockVector(np.outer(a.amplitudes, b.amplitudes))


# ---------------------------------------------------------------------------
# normal-ordered operator polynomials
# ---------------------------------------------------------------------------

# A word is a per-mode tuple of (creation power, annihilation power); the
# operator it denotes is the product over modes of (a_m^dag)^j_m a_m^k_m.
Word = tuple[tuple[int, int], ...]


def _mode_product(j1: int, k1: int, j2: int, k2: int):
    """Normal-order (ad^j1 a^k1)(ad^j2 a^k2) using [a, ad] = 1.

    Yields (integer factor, creation power, annihilation power) triples of
    a^k1 ad^j2 = sum_i C(k1,i) C(j2,i) i! ad^(j2-i) a^(k1-i).
    """
    for i in range(min(k1, j2) + 1):
        f = math.comb(k1, i) * math.comb(j2, i) * math.factorial(i)
        yield f, j1 + j2 - i, k1 + k2 - i


class OperatorPoly:
    """Polynomial in mode creation/annihilation operators, stored normal-ordered.

    Every Hamiltonian in the toolkit is one of these.  Construction from
    arbitrary operator products (via ``from_product`` or ``*``) re-orders all
    factors canonically with [a, a†] = 1, so two polynomials are equal iff
    their term dictionaries are.
    """

    __slots__ = ("modes", "terms")

    def __init__(self, modes: int, terms: dict[Word, complex] | None = None):
        self.modes = int(modes)
        self.terms: dict[Word, complex] = {}
        if terms:
            for word, coeff in terms.items():
                if len(word) != self.modes:
                    raise ModeMismatch(f"word {word} does not have {modes} modes")
                c = complex(coeff)
                if c != 0:
                    self.terms[word] = self.terms.get(word, 0) + c

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(modes: int) -> "OperatorPoly":
        return OperatorPoly(modes)

    @staticmethod
    def identity(modes: int, coeff: complex = 1.0) -> "OperatorPoly":
        word = ((0, 0),) * modes
        return OperatorPoly(modes, {word: coeff})

    @staticmethod
    def create(mode: int, modes: int) -> "OperatorPoly":
        word = tuple((1, 0) if m == mode else (0, 0) for m in range(modes))
        return OperatorPoly(modes, {word: 1.0})

    @staticmethod
    def destroy(mode: int, modes: int) -> "OperatorPoly":
        word = tuple((0, 1) if m == mode else (0, 0) for m in range(modes))
        return OperatorPoly(modes, {word: 1.0})

    @staticmethod
    def number(mode: int, modes: int) -> "OperatorPoly":
        return OperatorPoly.create(mode, modes) * OperatorPoly.destroy(mode, modes)

    @staticmethod
    def position(mode: int, modes: int) -> "OperatorPoly":
        """x = (a + ad)/2 under the module convention."""
        return 0.5 * (OperatorPoly.destroy(mode, modes) + OperatorPoly.create(mode, modes))

    @staticmethod
    def momentum(mode: int, modes: int) -> "OperatorPoly":
        """p = (a - ad)/(2i) under the module convention."""
        return (-0.5j) * (OperatorPoly.destroy(mode, modes) - OperatorPoly.create(mode, modes))

    @staticmethod
    def from_product(coeff: complex, letters, modes: int) -> "OperatorPoly":
        """Build coeff * (ordered product of ladder operators), normal-ordering it.

        ``letters`` is a sequence of ``(mode, kind)`` with kind ``"a"`` or
        ``"ad"``, read left to right as written.
        """
        poly = OperatorPoly.identity(modes, coeff)
        for mode, kind in letters:
            if kind == "a":
                poly = poly * OperatorPoly.destroy(mode, modes)
            elif kind == "ad":
                poly = poly * OperatorPoly.create(mode, modes)
            else:
                raise MesoscopeError(f"unknown ladder kind {kind!r}")
        return poly

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms.get(w, 0) + c
        return OperatorPoly(self.modes, terms)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPoly(self.modes, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if np.isscalar(other):
            return OperatorPoly(self.modes, {w: c * other for w, c in self.terms.items()})
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        if other.modes != self.modes:
            raise ModeMismatch("cannot multiply polynomials on different mode counts")
        terms: dict[Word, complex] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                # expand mode by mode; modes commute with each other
                partial: list[tuple[float, list[tuple[int, int]]]] = [(1.0, [])]
                for (j1, k1), (j2, k2) in zip(w1, w2):
                    new = []
                    for f0, word0 in partial:
                        for f, j, k in _mode_product(j1, k1, j2, k2):
                            new.append((f0 * f, word0 + [(j, k)]))
                    partial = new
                for f, word in partial:
                    w = tuple(word)
                    terms[w] = terms.get(w, 0) + c1 * c2 * f
        return OperatorPoly(self.modes, terms)

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        return NotImplemented

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise MesoscopeError("negative operator powers are not defined")
        out = OperatorPoly.identity(self.modes)
        for _ in range(exponent):
            out = out * self
        return out

    def _coerce(self, other) -> "OperatorPoly":
        if isinstance(other, OperatorPoly):
            if other.modes != self.modes:
                raise ModeMismatch("mode counts differ")
            return other
        if np.isscalar(other):
            return OperatorPoly.identity(self.modes, other)
        raise MesoscopeError(f"cannot combine OperatorPoly with {type(other)!r}")

    def adjoint(self) -> "OperatorPoly":
        """Formal adjoint; normal-ordered words map to normal-ordered words."""
        return OperatorPoly(
            self.modes,
            {tuple((k, j) for j, k in w): np.conj(c) for w, c in self.terms.items()},
        )

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        adj = self.adjoint()
        words = set(self.terms) | set(adj.terms)
        return all(
            abs(self.terms.get(w, 0) - adj.terms.get(w, 0)) <= tol for w in words
        )

    def simplify(self, tol: float = 0.0) -> "OperatorPoly":
        return OperatorPoly(
            self.modes, {w: c for w, c in self.terms.items() if abs(c) > tol}
        )

    def coefficient(self, word: Word) -> complex:
        return self.terms.get(tuple(word), 0.0)

    def mode_degree(self, word: Word, mode: int) -> int:
        j, k = word[mode]
        return j + k

    def max_degree(self) -> int:
        return max((sum(j + k for j, k in w) for w in self.terms), default=0)

    def substitute(self, mode: int, coeff_a: complex, coeff_ad: complex,
                   coeff_const: complex = 0.0) -> "OperatorPoly":
        """Replace a_mode -> coeff_a a + coeff_ad ad + coeff_const (and the
        adjoint replacement for ad_mode), re-normal-ordering the result.

        This is the Bogoliubov/displacement substitution used to transform
        Hamiltonians into a Gaussian frame.
        """
        sub_a = (coeff_a * OperatorPoly.destroy(mode, self.modes)
                 + coeff_ad * OperatorPoly.create(mode, self.modes)
                 + OperatorPoly.identity(self.modes, coeff_const))
        sub_ad = sub_a.adjoint()
        # cache small powers; Hamiltonians here are at most quartic
        max_j = max((w[mode][0] for w in self.terms), default=0)
        max_k = max((w[mode][1] for w in self.terms), default=0)
        pow_ad = [OperatorPoly.identity(self.modes)]
        for _ in range(max_j):
            pow_ad.append(pow_ad[-1] * sub_ad)
        pow_a = [OperatorPoly.identity(self.modes)]
        for _ in range(max_k):
            pow_a.append(pow_a[-1] * sub_a)

        out = OperatorPoly.zero(self.modes)
        for word, coeff in self.terms.items():
            j, k = word[mode]
            rest = tuple((0, 0) if m == mode else jk for m, jk in enumerate(word))
            piece = OperatorPoly(self.modes, {rest: coeff}) * pow_ad[j] * pow_a[k]
            out = out + piece
        return out

    def to_matrix(self, dims: tuple[int, ...]) -> scipy.sparse.csr_matrix:
        """Sparse matrix of the polynomial on the truncated Fock space."""
        if len(dims) != self.modes:
            raise ModeMismatch(f"dims {dims} do not match {self.modes} modes")
        total = int(np.prod(dims))
        out = scipy.sparse.csr_matrix((total, total), dtype=np.complex128)
        for word, coeff in self.terms.items():
            mats = [_ladder_word_matrix(d, j, k) for d, (j, k) in zip(dims, word)]
            term = mats[0]
            for m in mats[1:]:
                term = scipy.sparse.kron(term, m, format="csr")
            out = out + coeff * term
        return out.tocsr()

    def __repr__(self):
        def fmt(word):
            parts = []
            for m, (j, k) in enumerate(word):
                if j:
                    parts.append(f"ad{m}^{j}" if j > 1 else f"ad{m}")
                if k:
                    parts.append(f"a{m}^{k}" if k > 1 else f"a{m}")
            return " ".join(parts) if parts else "1"

        body = " + ".join(f"({c:.6g})*{fmt(w)}" for w, c in sorted(self.terms.items()))
        return f"OperatorPoly[{self.modes} mode(s)]({body or '0'})"


@lru_cache(maxsize=None)
def _ladder_word_matrix(dim: int, j: int, k: int) -> scipy.sparse.csr_matrix:
    """Single-mode matrix of ad^j a^k on a dim-truncated space."""
    # a^k |n> = sqrt(n!/(n-k)!) |n-k>, then ad^j raises by j
    rows, cols, vals = [], [], []
    for src in range(k, dim):
        dst = src - k + j
        if dst >= dim:
            continue
        v = 1.0
        for i in range(k):
            v *= src - i
        for i in range(j):
            v *= src - k + 1 + i
        rows.append(dst)
        cols.append(src)
        vals.append(math.sqrt(v))
    return scipy.sparse.csr_matrix(
        (vals, (rows, cols)), shape=(dim, dim), dtype=np.complex128
    )


# ---------------------------------------------------------------------------
# operator application and expectation values
# ---------------------------------------------------------------------------

def _destroy_axis(amps: np.ndarray, axis: int) -> np.ndarray:
    """Apply a along one tensor axis.  Exact on the truncated space."""
    a = np.moveaxis(amps, axis, 0)
    out = np.zeros_like(a)
    d = a.shape[0]
    sqrt_n = np.sqrt(np.arange(1, d)).reshape((-1,) + (1,) * (a.ndim - 1))
    out[: d - 1] = sqrt_n * a[1:]
    return np.moveaxis(out, 0, axis)


def _create_axis(amps: np.ndarray, axis: int) -> tuple[np.ndarray, float]:
    """Apply ad along one tensor axis; returns (result, lost |amplitude|^2)."""
    a = np.moveaxis(amps, axis, 0)
    out = np.zeros_like(a)
    d = a.shape[0]
    sqrt_n = np.sqrt(np.arange(1, d)).reshape((-1,) + (1,) * (a.ndim - 1))
    out[1:] = sqrt_n * a[: d - 1]
    lost = d * float(np.sum(np.abs(a[d - 1]) ** 2))
    return np.moveaxis(out, 0, axis), lost


def apply_operator(op: OperatorPoly, state: FockVector,
                   tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Return op|psi> (unnormalized); the input state is unchanged.

    Raises TruncationOverflow if any creation factor pushes amplitude of
    magnitude > tail_tol past the top retained level.
    """
    if op.modes != state.modes:
        raise ModeMismatch(f"operator has {op.modes} modes, state has {state.modes}")
    result = np.zeros_like(state.amplitudes)
    lost_sq = 0.0
    for word, coeff in op.terms.items():
        amps = state.amplitudes
        for axis, (j, k) in enumerate(word):
            for _ in range(k):
                amps = _destroy_axis(amps, axis)
            for _ in range(j):
                amps, lost = _create_axis(amps, axis)
                lost_sq += abs(coeff) ** 2 * lost
        result = result + coeff * amps
    if math.sqrt(lost_sq) > tail_tol:
        raise TruncationOverflow(
            f"operator application lost amplitude {math.sqrt(lost_sq):.3e} "
            f"past the top Fock level (tol {tail_tol:.1e})"
        )
    return FockVector(result, state.label)


def expectation(op: OperatorPoly, state: FockVector,
                tail_tol: float = DEFAULT_TAIL_TOL) -> complex:
    """<psi|op|psi>.  Real to ~1e-10 when op is Hermitian and the state trusted."""
    applied = apply_operator(op, state, tail_tol=tail_tol)
    return complex(np.vdot(state.amplitudes, applied.amplitudes))


# ---------------------------------------------------------------------------
# Gaussian unitaries
# ---------------------------------------------------------------------------

def _apply_mode_matrix(state: FockVector, u: np.ndarray, mode: int) -> FockVector:
    amps = np.tensordot(u, state.amplitudes, axes=([1], [mode]))
    amps = np.moveaxis(amps, 0, mode)
    return FockVector(amps, state.label)


def _check_tail(state: FockVector, tail_tol: float, what: str) -> FockVector:
    tm = state.tail_mass()
    if tm > tail_tol:
        raise TruncationOverflow(
            f"{what} left tail mass {tm:.3e} above tolerance {tail_tol:.1e}"
        )
    return state


def displacement(alpha: complex, state: FockVector, mode: int = 0,
                 tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Apply D(alpha) with D†(alpha) a D(alpha) = a + alpha to one mode.

    Implemented as the scaling-and-squaring exponential of alpha ad - alpha* a
    on the truncated space, so unitarity holds on the trusted subspace by
    construction and D(alpha) D(-alpha) = 1 can be checked directly.
    """
    d = state.mode_dims[mode]
    ad = _ladder_word_matrix(d, 1, 0).toarray()
    gen = alpha * ad - np.conj(alpha) * ad.conj().T
    u = scipy.linalg.expm(gen)
    return _check_tail(_apply_mode_matrix(state, u, mode), tail_tol, "displacement")


def _squeeze_matrix(mu: complex, nu: complex, dim: int) -> np.ndarray:
    """Unitary with S†(mu,nu) a S(mu,nu) = mu a + nu ad on a truncated space.

    Decomposed as rotation * real squeeze * rotation; the middle factor is the
    matrix exponential of the quadratic generator r(a^2 - ad^2)/2.
    """
    if abs(abs(mu) ** 2 - abs(nu) ** 2 - 1.0) > 1e-10:
        raise NotSymplectic(
            f"|mu|^2 - |nu|^2 = {abs(mu)**2 - abs(nu)**2:.3e} != 1"
        )
    r = math.asinh(abs(nu))
    phi_mu = np.angle(mu)
    if abs(nu) > 0:
        phi_nu = np.angle(nu)
        theta1 = 0.5 * (-phi_mu - phi_nu - math.pi)
        theta2 = 0.5 * (-phi_mu + phi_nu + math.pi)
    else:
        theta1, theta2 = -phi_mu, 0.0
    n = np.arange(dim)
    a2 = _ladder_word_matrix(dim, 0, 2).toarray()
    core = scipy.linalg.expm(0.5 * r * (a2 - a2.conj().T))
    return (np.exp(-1j * theta1 * n)[:, None] * core) * np.exp(-1j * theta2 * n)[None, :]


def squeeze(mu: complex, nu: complex, state: FockVector, mode: int = 0,
            tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Apply the symplectic unitary S(mu, nu) with S† a S = mu a + nu ad.

    Requires |mu|^2 - |nu|^2 = 1 (NotSymplectic otherwise).  The inverse of
    S(mu, nu) is S(conj(mu), -nu).
    """
    u = _squeeze_matrix(mu, nu, state.mode_dims[mode])
    return _check_tail(_apply_mode_matrix(state, u, mode), tail_tol, "squeeze")


def phase_rotation(theta: float, state: FockVector, mode: int = 0) -> FockVector:
    """Apply exp(-i theta n) to one mode, i.e. rotate x -> x cos(theta) + p sin(theta)."""
    d = state.mode_dims[mode]
    phases = np.exp(-1j * theta * np.arange(d))
    amps = np.moveaxis(state.amplitudes.copy(), mode, 0)
    amps = phases.reshape((-1,) + (1,) * (amps.ndim - 1)) * amps
    return FockVector(np.moveaxis(amps, 0, mode), state.label)


def squeezed_vacuum(mu: complex, nu: complex, dim: int) -> FockVector:
    return squeeze(mu, nu, FockVector.vacuum(dim), tail_tol=np.inf)


# ---------------------------------------------------------------------------
# quadrature wavefunctions
# ---------------------------------------------------------------------------

def hermite_functions(xs: np.ndarray, n_max: int) -> np.ndarray:
    """Oscillator eigenfunctions phi_n(x), n < n_max, normalized so that
    <x^2>_vac = 1/4 (phi_0 = (2/pi)^{1/4} e^{-x^2}).

    Computed by the stable upward recurrence
    phi_{n+1} = (2 x phi_n - sqrt(n) phi_{n-1}) / sqrt(n+1).
    """
    xs = np.asarray(xs, dtype=float)
    phi = np.zeros((n_max, xs.size))
    phi[0] = (2.0 / math.pi) ** 0.25 * np.exp(-xs ** 2)
    if n_max > 1:
        phi[1] = 2.0 * xs * phi[0]
    for n in range(1, n_max - 1):
        phi[n + 1] = (2.0 * xs * phi[n] - math.sqrt(n) * phi[n - 1]) / math.sqrt(n + 1)
    return phi


def quadrature_wavefunction(state: FockVector, xs: np.ndarray, mode: int = 0) -> np.ndarray:
    """psi(x) = sum_n c_n phi_n(x) for the selected mode.

    For a single-mode state returns an array over xs.  For a two-mode state
    the selected mode is contracted against phi_n and moved to the last axis,
    so the result has shape (other_dim, len(xs)).
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise GridEmpty("empty quadrature grid")
    phi = hermite_functions(xs, state.mode_dims[mode])
    out = np.tensordot(state.amplitudes, phi, axes=([mode], [0]))
    return out
