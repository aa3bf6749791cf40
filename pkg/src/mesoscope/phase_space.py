"""Wigner functions, negativity, marginals and fidelities.

W(x, p) is computed from the displaced-parity form

    W(alpha) = (2/pi) <psi| D(alpha) Pi D†(alpha) |psi>,  alpha = x + i p,

with Pi the photon-number parity operator.  Under the toolkit convention
(vacuum variance 1/4) the vacuum Wigner function is (2/pi) exp(-2(x^2+p^2))
and |W| <= 2/pi everywhere.

Because Pi D†(alpha) = D(alpha) Pi, the displaced parity equals D(2 alpha) Pi,
and with the normal-ordered splitting of D this becomes

    W(alpha) = (2/pi) e^{-2|alpha|^2} < e^{2 alpha* a} psi , e^{-2 alpha* a} Pi psi >.

Both exponential series only lower photon number, so they terminate on a
truncated state and the evaluation is exact in exact arithmetic -- no grid
point can overflow the truncation.  In floating point the series suffers
cancellation once the grid radius times the state radius is large; the noise
floor is estimated up front from the largest intermediate term and the call
fails loudly (TruncationOverflow) rather than return digits it cannot back.
States carrying a numerically irrelevant high-n tail are trimmed first, since
such tails inflate the intermediate terms without changing W.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridEmpty, ModeMismatch, TruncationOverflow
from .fock import CONVENTION_TAG, FockVector

#: floating-point format used in CSV emission (17 significant digits)
CSV_FLOAT = "%.16e"


@dataclass(frozen=True)
class WignerGrid:
    """Sampled quasi-probability W(x, p) with normalization diagnostics.

    ``values[i, j]`` is W(xs[j], ps[i]); rows sweep p, columns sweep x.
    """

    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray
    norm_defect: float
    convention: str = CONVENTION_TAG

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.xs, axis=1), self.ps))

    def write_csv(self, path) -> None:
        """Header row of x values, first column p values."""
        with open(path, "w", newline="") as f:
            f.write("," + ",".join(CSV_FLOAT % x for x in self.xs) + "\n")
            for p, row in zip(self.ps, self.values):
                f.write(CSV_FLOAT % p + "," + ",".join(CSV_FLOAT % v for v in row) + "\n")

    def write_sidecar(self, path) -> None:
        with open(path, "w") as f:
            json.dump(
                {
                    "norm_defect": self.norm_defect,
                    "convention": self.convention,
                    "shape": list(self.values.shape),
                    "x_range": [float(self.xs[0]), float(self.xs[-1])],
                    "p_range": [float(self.ps[0]), float(self.ps[-1])],
                },
                f,
                indent=2,
                sort_keys=True,
            )
            f.write("\n")


def _lowering_series(psi_rows: np.ndarray, z: np.ndarray, sq: np.ndarray) -> np.ndarray:
    """exp(z a) applied rowwise: psi_rows is (m, d), z is (m,).  Exact."""
    out = psi_rows.copy()
    cur = psi_rows
    d = psi_rows.shape[1]
    for j in range(1, d):
        nxt = np.zeros_like(cur)
        nxt[:, :-1] = sq * cur[:, 1:]
        cur = nxt * (z / j)[:, None]
        out += cur
    return out


def _trim_tail(psi: np.ndarray, rel_tol: float) -> np.ndarray:
    """Drop trailing amplitudes below rel_tol * ||psi||; perturbs W by O(rel_tol)."""
    keep = np.abs(psi) > rel_tol * np.linalg.norm(psi)
    if not np.any(keep):
        return psi[:1]
    return psi[: int(np.max(np.nonzero(keep)[0])) + 1]


def _series_noise_log(a_max: float, psi: np.ndarray) -> float:
    """log of the largest term in the damped series sum_j (2a)^j/j! a^j psi,
    maximized over grid radii a <= a_max (the worst radius is usually near the
    state radius, not the grid corner, where e^{-a^2} has already won).

    Cancellation noise in W is roughly machine epsilon times the square of
    this magnitude (one factor per vector in the inner product).
    """
    from scipy.special import gammaln

    d = psi.size
    log_amp = np.full(d, -np.inf)
    nz = np.abs(psi) > 0
    log_amp[nz] = np.log(np.abs(psi[nz]))
    if a_max == 0.0:
        return float(np.max(log_amp))
    j = np.arange(d, dtype=float)[:, None]
    n = np.arange(d, dtype=float)[None, :]
    with np.errstate(invalid="ignore"):
        base = (
            -gammaln(j + 1)
            + 0.5 * (gammaln(n + 1) - gammaln(n - j + 1))
            + log_amp[None, :]
        )
    best_by_j = np.max(np.where(j <= n, base, -np.inf), axis=1)
    radii = np.linspace(0.0, a_max, 65)[1:]
    jj = np.arange(d, dtype=float)[:, None]
    table = jj * np.log(2.0 * radii)[None, :] + best_by_j[:, None] - (radii ** 2)[None, :]
    return max(float(np.max(table)), float(np.max(log_amp)))


def wigner(state: FockVector, xs: np.ndarray, ps: np.ndarray,
           chunk: int = 2048, noise_tol: float = 1e-6,
           trim_tol: float = 1e-9) -> WignerGrid:
    """Wigner function of a single-mode pure state on a rectangular grid.

    Raises TruncationOverflow when the estimated cancellation noise exceeds
    noise_tol (large grids on photon-rich states); evaluate such states in a
    frame where they are compact -- the negativity volume and all symplectic
    invariants are unchanged by that.
    """
    if state.modes != 1:
        raise ModeMismatch("wigner expects a single-mode state")
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if xs.size == 0 or ps.size == 0:
        raise GridEmpty("empty Wigner grid")
    psi = _trim_tail(state.amplitudes, trim_tol)
    d = psi.size

    a_max = math.hypot(max(abs(xs[0]), abs(xs[-1])), max(abs(ps[0]), abs(ps[-1])))
    log_peak = _series_noise_log(a_max, psi)
    noise = math.exp(min(2 * log_peak, 700.0)) * 1e-15 * d
    if noise > noise_tol:
        raise TruncationOverflow(
            f"displaced-parity series noise ~{noise:.1e} exceeds {noise_tol:.1e} "
            f"for grid radius {a_max:.1f} at dimension {d}; use a smaller grid "
            "or evaluate in a frame where the state is compact"
        )

    X, P = np.meshgrid(xs, ps)
    alphas = (X + 1j * P).ravel()
    w_vals = np.empty(alphas.size)
    sq = np.sqrt(np.arange(1.0, d))
    parity = (-1.0) ** np.arange(d)
    psi_parity = parity * psi

    for start in range(0, alphas.size, chunk):
        al = alphas[start:start + chunk]
        z = 2.0 * np.conj(al)
        damp = np.exp(-np.abs(al) ** 2)[:, None]
        left = _lowering_series(damp * psi, z, sq)
        right = _lowering_series(damp * psi_parity, -z, sq)
        w_vals[start:start + al.size] = (2.0 / math.pi) * np.sum(
            np.conj(left) * right, axis=1
        ).real

    values = w_vals.reshape(P.shape)
    integral = float(np.trapezoid(np.trapezoid(values, xs, axis=1), ps))
    return WignerGrid(xs, ps, values, norm_defect=abs(integral - 1.0))


def negativity_volume(grid: WignerGrid) -> float:
    """Integrated negative part of W by trapezoid quadrature."""
    neg = np.maximum(-grid.values, 0.0)
    return float(np.trapezoid(np.trapezoid(neg, grid.xs, axis=1), grid.ps))


def wigner_marginal(grid: WignerGrid, axis: str = "x") -> np.ndarray:
    """Integrate W over the conjugate variable: axis="x" returns P(x) = int W dp."""
    if axis == "x":
        return np.trapezoid(grid.values, grid.ps, axis=0)
    if axis == "p":
        return np.trapezoid(grid.values, grid.xs, axis=1)
    raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")


def state_fidelity(a: FockVector, b: FockVector) -> float:
    """|<a|b>|^2 for pure states of identical mode structure."""
    if a.mode_dims != b.mode_dims:
        raise ModeMismatch(f"mode dims differ: {a.mode_dims} vs {b.mode_dims}")
    return float(abs(a.overlap(b)) ** 2)


def default_grid(stretch: float = 1.0, half_width_sigmas: float = 4.0,
                 points: int = 201) -> np.ndarray:
    """Symmetric grid spanning +/- half_width_sigmas stretched vacuum sigmas."""
    half = half_width_sigmas * 0.5 * stretch  # vacuum sigma is 1/2
    return np.linspace(-half, half, points)
