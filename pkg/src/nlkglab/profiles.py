"""Ground-state profiles and Lorentz-boosted solitary waves.

The scalar ground state solves -phi'' + (m - omega^2) phi = phi^p.  In 1D
it has the closed form

    phi_tilde(x) = ((p+1)/2)^(1/(p-1)) * sech((p-1) x / 2)^(2/(p-1)),

for the normalized equation (coefficient 1), and the general profile is
obtained from the scaling

    phi_omega(x) = (m - omega^2)^(1/(p-1)) * phi_tilde(sqrt(m - omega^2) x).

For radial dimensions 2 and 3 the profile is computed by shooting on the
radial ODE.  Boosting a standing wave with velocity v contracts the
profile by the Lorentz factor gamma and tilts the phase:

    u1(x) = e^{-i gamma omega v x} phi(gamma x)
    u2(x) = e^{-i gamma omega v x} gamma (i omega phi(gamma x) - v phi'(gamma x))

and the full soliton at time t carries the extra phase e^{i (omega/gamma) t + i theta}
with argument x - v t - x0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .grids import (
    Field,
    Grid,
    norm_l2,
    spectral_derivative,
    spectral_second_derivative,
    wrap_coordinate,
)

__all__ = [
    "ModelParams",
    "SolitonParams",
    "GroundState",
    "FrequencyRangeError",
    "DomainTooSmallError",
    "ShootingError",
    "ground_state_1d",
    "ground_state_radial",
    "boost_profile",
    "sample_soliton",
    "phi_tilde",
    "phi_omega",
    "standing_wave_energy",
    "standing_wave_energy_scaling",
    "suggested_length",
]


class FrequencyRangeError(ValueError):
    """|omega| is not below sqrt(m)."""


class DomainTooSmallError(ValueError):
    """The profile has not decayed at the domain boundary."""


class ShootingError(RuntimeError):
    """Radial shooting failed to bracket or converge."""


@dataclass
class ModelParams:
    """Mass and nonlinearity exponent of u_tt - Lap u + m u - |u|^(p-1) u = 0."""

    m: float = 1.0
    p: float = 3.0
    d: int = 1

    def __post_init__(self) -> None:
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        # profiles exist in the full energy-subcritical range; the narrower
        # p < 1 + 4/d window only gates orbital stability (see ``stable``)
        h1_limit = math.inf if self.d <= 2 else 1.0 + 4.0 / (self.d - 2.0)
        if not 1.0 < self.p < h1_limit:
            raise ValueError(
                f"exponent p={self.p} outside the energy-subcritical range "
                f"(1, {h1_limit}) for d={self.d}"
            )

    @property
    def mass_subcritical(self) -> bool:
        """p < 1 + 4/d, required for a nonempty stability window."""
        return self.p < 1.0 + 4.0 / self.d

    def stability_threshold(self) -> float:
        """Value of omega^2/m above which boosted ground states are stable."""
        if not self.mass_subcritical:
            return math.inf
        return 1.0 / (1.0 + 4.0 / (self.p - 1.0) - self.d)


@dataclass
class SolitonParams:
    """One solitary wave: frequency, phase, velocity and initial position."""

    model: ModelParams
    omega: float
    theta: float = 0.0
    v: float = 0.0
    x0: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.v) >= 1.0:
            raise ValueError(f"|v| must be below the speed of light 1, got {self.v}")
        if abs(self.omega) >= math.sqrt(self.model.m):
            raise FrequencyRangeError(
                f"|omega|={abs(self.omega)} must be below sqrt(m)={math.sqrt(self.model.m)}"
            )

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.v * self.v)

    @property
    def stable(self) -> bool:
        """True when (omega, v) lies in the orbital-stability window."""
        return self.omega**2 / self.model.m > self.model.stability_threshold()


def phi_tilde(y: np.ndarray | float, p: float):
    """Normalized 1D ground state of -phi'' + phi = phi^p."""
    amp = ((p + 1.0) / 2.0) ** (1.0 / (p - 1.0))
    return amp * np.cosh(0.5 * (p - 1.0) * np.asarray(y, dtype=float)) ** (
        -2.0 / (p - 1.0)
    )


def phi_omega(y: np.ndarray | float, model: ModelParams, omega: float):
    """Ground state at frequency omega via the (m - omega^2) scaling."""
    mu = model.m - omega * omega
    if mu <= 0:
        raise FrequencyRangeError(f"omega={omega} outside (-sqrt m, sqrt m)")
    return mu ** (1.0 / (model.p - 1.0)) * phi_tilde(math.sqrt(mu) * np.asarray(y), model.p)


def suggested_length(model: ModelParams, omega: float, translation_extent: float = 0.0) -> float:
    """Heuristic domain size: tails below ~1e-12 plus room for translations."""
    mu = model.m - omega * omega
    return 60.0 / math.sqrt(mu) + 2.0 * translation_extent


@dataclass
class GroundState:
    """Sampled radial profile with its discrete ODE residual.

    ``kind`` selects how off-grid values are evaluated: the 1D closed form
    is re-evaluated analytically, shooting output is interpolated with a
    cubic spline in |x|.
    """

    model: ModelParams
    omega: float
    samples: np.ndarray
    residual: float
    kind: str
    grid: Optional[Grid] = None
    radial_mesh: Optional[np.ndarray] = None
    _spline: Optional[CubicSpline] = field(default=None, repr=False, compare=False)

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        if self.kind == "closed-form-1d":
            return phi_omega(y, self.model, self.omega)
        if self._spline is None:
            self._spline = CubicSpline(self.radial_mesh, self.samples, bc_type="clamped")
        r = np.abs(np.asarray(y, dtype=float))
        out = np.zeros_like(r)
        inside = r <= self.radial_mesh[-1]
        out[inside] = self._spline(r[inside])
        return out


def _residual_1d(samples: np.ndarray, model: ModelParams, omega: float, grid: Grid) -> float:
    mu = model.m - omega * omega
    res = (
        -spectral_second_derivative(samples, grid)
        + mu * samples
        - np.abs(samples) ** (model.p - 1.0) * samples
    )
    return float(np.max(np.abs(res)))


def _check_boundary_decay(samples: np.ndarray, what: str) -> None:
    peak = float(np.max(np.abs(samples)))
    edge = float(max(abs(samples[0]), abs(samples[-1])))
    if peak == 0.0:
        return
    rel = edge / peak
    if rel > 1e-6:
        raise DomainTooSmallError(
            f"{what}: boundary value {rel:.2e} of peak; enlarge the domain "
            f"(heuristic: length >= 60/sqrt(m - omega^2) plus translation extent)"
        )
    if rel > 1e-10:
        warnings.warn(
            f"{what}: boundary value {rel:.2e} of peak exceeds 1e-10", stacklevel=3
        )


def ground_state_1d(model: ModelParams, omega: float, grid: Grid) -> GroundState:
    """Closed-form 1D ground state sampled on the periodic grid."""
    if model.d != 1:
        raise ValueError("ground_state_1d requires d=1")
    samples = np.asarray(phi_omega(grid.x, model, omega), dtype=float)
    _check_boundary_decay(samples, "ground state")
    res = _residual_1d(samples, model, omega, grid)
    return GroundState(model, omega, samples, res, "closed-form-1d", grid=grid)


def _shoot(a: float, mu: float, p: float, d: int, rmax: float, n: int):
    """Integrate the radial ODE from phi(0)=a; RK4 with a series start at r=0.

    Returns (classification, r, phi):
      'cross' -- phi hit zero (initial height too large),
      'turn'  -- phi turned upward while positive (too small),
      'decay' -- reached rmax monotonically decaying.
    """
    h = rmax / n
    r = np.linspace(0.0, rmax, n + 1)
    phi = np.zeros(n + 1)
    phi[0] = a

    def rhs(rr, y):
        f, g = y  # phi, phi'
        curv = mu * f - np.sign(f) * abs(f) ** p
        if rr == 0.0:
            return np.array([g, curv / d])
        return np.array([g, curv - (d - 1) / rr * g])

    # series start: phi ~ a + phi''(0) r^2 / 2 with phi''(0) = (mu a - a^p)/d
    y = np.array([a, 0.0])
    for i in range(n):
        rr = r[i]
        k1 = rhs(rr, y)
        k2 = rhs(rr + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(rr + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(rr + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        phi[i + 1] = y[0]
        if y[0] <= 0.0:
            return "cross", r[: i + 2], phi[: i + 2]
        if y[1] > 0.0:
            return "turn", r[: i + 2], phi[: i + 2]
    return "decay", r, phi


def _linear_tail(r: np.ndarray, kappa: float, d: int) -> np.ndarray:
    """Decaying solution of the linearized radial equation (exact for d=1,2,3)."""
    if d == 1:
        return np.exp(-kappa * r)
    if d == 3:
        return np.exp(-kappa * r) / r
    from scipy.special import k0

    return k0(kappa * r)


def _radial_stencil_residual(phi: np.ndarray, r: np.ndarray, mu: float, p: float, d: int):
    """4th-order FD residual of phi'' + (d-1)/r phi' - mu phi + phi^p on rows 0..n-2.

    Row 0 uses the regularized form d * phi''(0) = mu phi - phi^p and the even
    extension phi(-r) = phi(r); the last two rows are Dirichlet (handled by the
    caller) and excluded here.
    """
    n = len(phi) - 1
    h = r[1] - r[0]
    ext = np.concatenate([phi[2:0:-1], phi, phi[-1:]])  # phi[-2], phi[-1], ..., pad
    idx = np.arange(0, n - 1) + 2
    d2 = (
        -ext[idx - 2] + 16 * ext[idx - 1] - 30 * ext[idx] + 16 * ext[idx + 1] - ext[idx + 2]
    ) / (12 * h * h)
    d1 = (ext[idx - 2] - 8 * ext[idx - 1] + 8 * ext[idx + 1] - ext[idx + 2]) / (12 * h)
    res = np.empty(n - 1)
    res[0] = d * d2[0] - mu * phi[0] + np.abs(phi[0]) ** (p - 1.0) * phi[0]
    ri = r[1 : n - 1]
    res[1:] = (
        d2[1 : n - 1]
        + (d - 1) / ri * d1[1 : n - 1]
        - mu * phi[1 : n - 1]
        + np.abs(phi[1 : n - 1]) ** (p - 1.0) * phi[1 : n - 1]
    )
    return res


def _polish_radial(phi: np.ndarray, r: np.ndarray, mu: float, p: float, d: int):
    """Newton iteration on the 4th-order FD system, pentadiagonal Jacobian.

    The last two mesh values are pinned to the matched linear tail, which
    removes the kink left by the shooting splice and drives the discrete
    residual to rounding level.
    """
    from scipy.linalg import solve_banded

    n = len(phi) - 1
    h = r[1] - r[0]
    kappa = math.sqrt(mu)
    tail = _linear_tail(r[-2:], kappa, d)
    scale = phi[-3] / _linear_tail(r[-3:-2], kappa, d)[0]
    pin = scale * tail

    # band template for the interior 5-point stencil (rows 1..n-2)
    for _ in range(30):
        phi[-2:] = pin
        res = _radial_stencil_residual(phi, r, mu, p, d)
        # floor set by rounding in the 1/(12 h^2) stencil, well below 1e-8
        if np.max(np.abs(res)) < 1e-10:
            break
        # assemble banded Jacobian for unknowns phi[0..n-2] (rows 0..n-2)
        m_size = n - 1
        ab = np.zeros((5, m_size))  # diagonals +2, +1, 0, -1, -2
        c2 = 1.0 / (12 * h * h)
        c1 = 1.0 / (12 * h)
        dnl = mu - p * np.abs(phi[: n - 1]) ** (p - 1.0)
        # row 0: d * d2(0) - mu phi0 + phi0^p, even fold: cols 0,1,2
        ab[2, 0] += d * (-30 * c2) - dnl[0]
        if m_size > 1:
            ab[1, 1] += d * (16 + 16) * c2
        if m_size > 2:
            ab[0, 2] += d * (-1 - 1) * c2
        # row 1: fold maps col -1 -> 1
        i = 1
        a_d1 = (d - 1) / r[i]
        ab[2, i] += -30 * c2 - dnl[i]  # col 1
        ab[3, i - 1] += 16 * c2 - 8 * c1 * a_d1  # col 0
        ab[2, i] += (-1) * c2 + 1 * c1 * a_d1  # fold col -1 -> col 1
        if m_size > 2:
            ab[1, i + 1] += 16 * c2 + 8 * c1 * a_d1
        if m_size > 3:
            ab[0, i + 2] += (-1) * c2 - 1 * c1 * a_d1
        # rows 2..n-2
        for i in range(2, m_size):
            a_d1 = (d - 1) / r[i]
            if i - 2 >= 0:
                ab[4, i - 2] += (-1) * c2 + 1 * c1 * a_d1
            ab[3, i - 1] += 16 * c2 - 8 * c1 * a_d1
            ab[2, i] += -30 * c2 - dnl[i]
            if i + 1 < m_size:
                ab[1, i + 1] += 16 * c2 + 8 * c1 * a_d1
            if i + 2 < m_size:
                ab[0, i + 2] += (-1) * c2 - 1 * c1 * a_d1
        step = solve_banded((2, 2), ab, -res)
        phi[: n - 1] += step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, float(np.max(np.abs(phi)))):
            phi[-2:] = pin
            break
    phi[-2:] = pin
    return phi


def ground_state_radial(
    model: ModelParams,
    omega: float,
    rmax: float = 20.0,
    n: int = 4000,
    bisect_tol: float = 1e-12,
) -> GroundState:
    """Radial ground state by bisection shooting on phi(0), then an FD polish.

    Brackets the threshold height between turning-up (too small) and
    zero-crossing (too large) trajectories, bisects phi(0) to ``bisect_tol``,
    splices the matched decaying tail where the trajectory degenerates, and
    polishes the whole mesh with Newton on the 4th-order finite-difference
    system so the reported discrete residual is at rounding level.
    """
    mu = model.m - omega * omega
    if mu <= 0:
        raise FrequencyRangeError(f"omega={omega} outside (-sqrt m, sqrt m)")
    p, d = model.p, float(model.d)

    a_lo = a_hi = None
    a = mu ** (1.0 / (p - 1.0))  # below the ground-state height: starts as 'turn'
    for _ in range(200):
        kind, _, _ = _shoot(a, mu, p, model.d, rmax, n)
        if kind == "cross":
            a_hi = a
            break
        a_lo = a
        a *= 1.3
    if a_hi is None or a_lo is None:
        raise ShootingError("failed to bracket the ground-state height")

    while a_hi - a_lo > bisect_tol * max(1.0, a_hi):
        mid = 0.5 * (a_lo + a_hi)
        kind, _, _ = _shoot(mid, mu, p, model.d, rmax, n)
        if kind == "cross":
            a_hi = mid
        else:
            a_lo = mid

    a_star = 0.5 * (a_lo + a_hi)
    _, _, phi_part = _shoot(a_star, mu, p, model.d, rmax, n)
    r = np.linspace(0.0, rmax, n + 1)
    phi = np.zeros(n + 1)
    kappa = math.sqrt(mu)
    # keep the trajectory only while it is trusted (above 1e-4 of the height)
    trusted = int(np.argmax(phi_part < 1e-4 * a_star)) or len(phi_part)
    trusted = min(trusted, len(phi_part))
    phi[:trusted] = phi_part[:trusted]
    if trusted <= n:
        base = _linear_tail(np.array([r[trusted - 1]]), kappa, model.d)[0]
        phi[trusted - 1 :] = (
            phi[trusted - 1] / base * _linear_tail(r[trusted - 1 :], kappa, model.d)
        )
    phi = _polish_radial(phi, r, mu, p, d)
    if np.any(phi < 0) or np.any(np.diff(phi) > 1e-12 * a_star):
        raise ShootingError("polished profile is not positive decreasing")
    res = _radial_stencil_residual(phi, r, mu, p, d)
    return GroundState(
        model, omega, phi, float(np.max(np.abs(res))), "radial-shooting", radial_mesh=r
    )


def _resampled_profile(gs: GroundState, sp: SolitonParams, grid: Grid, shift: float):
    """phi(gamma * y) and its x-derivative on the grid, y = wrapped(x - shift)."""
    y = wrap_coordinate(grid.x - shift, grid.length)
    prof = np.asarray(gs.evaluate(sp.gamma * y), dtype=float)
    dprof = spectral_derivative(prof, grid)  # = gamma * phi'(gamma y)
    return y, prof, dprof


def boost_profile(gs: GroundState, sp: SolitonParams, grid: Grid) -> Field:
    """Lorentz-boosted Hamiltonian profile of the standing wave."""
    if gs.model != sp.model or gs.omega != sp.omega:
        raise ValueError("ground state and soliton parameters disagree")
    y, prof, dprof = _resampled_profile(gs, sp, grid, 0.0)
    _check_boundary_decay(prof, "boosted profile")
    phase = np.exp(-1j * sp.gamma * sp.omega * sp.v * y)
    u1 = phase * prof
    u2 = phase * (1j * sp.omega * sp.gamma * prof - sp.v * dprof)
    return Field(u1, u2, grid)


def sample_soliton(sp: SolitonParams, t: float, grid: Grid) -> Field:
    """Exact soliton at time t, translation argument wrapped onto the torus."""
    if sp.model.d != 1:
        raise ValueError("soliton sampling is implemented for d=1 dynamics")
    gs = ground_state_1d(sp.model, sp.omega, grid)
    shift = sp.v * t + sp.x0
    y, prof, dprof = _resampled_profile(gs, sp, grid, shift)
    phase = np.exp(1j * ((sp.omega / sp.gamma) * t + sp.theta)) * np.exp(
        -1j * sp.gamma * sp.omega * sp.v * y
    )
    u1 = phase * prof
    u2 = phase * (1j * sp.omega * sp.gamma * prof - sp.v * dprof)
    return Field(u1, u2, grid)


def standing_wave_energy(model: ModelParams, omega: float, grid: Grid) -> float:
    """Energy of the standing wave (phi_omega, i omega phi_omega) by quadrature."""
    gs = ground_state_1d(model, omega, grid)
    phi = gs.samples
    dphi = spectral_derivative(phi, grid)
    dens = (
        0.5 * omega**2 * phi**2
        + 0.5 * dphi**2
        + 0.5 * model.m * phi**2
        - np.abs(phi) ** (model.p + 1.0) / (model.p + 1.0)
    )
    return float(np.sum(dens) * grid.spacing)


def standing_wave_energy_scaling(
    model: ModelParams, omega: float, corrected: bool = True
) -> float:
    """Closed-form standing-wave energy per unit ||phi_tilde||_2^2.

    The scaling relations reduce E(Phi_omega) to powers of (m - omega^2)
    times ||phi_tilde||^2.  The gradient term carries the Pohozaev factor
    d(p-1)/(2d-(d-2)(p+1)); with ``corrected=False`` that factor is replaced
    by 1, which reproduces a commonly quoted but inconsistent collapsed
    formula (0.492 vs 0.456 at m=1, p=3, d=1, omega=0.8).  Direct quadrature
    (``standing_wave_energy``) is the ground truth and matches the corrected
    form.
    """
    m, p, d = model.m, model.p, model.d
    mu = m - omega * omega
    a_grad = (p * (2 - d) + 2 + d) / (2 * (p - 1))
    a_mass = (4 - d * (p - 1)) / (2 * (p - 1))
    poho = d * (p - 1) / (2 * d - (d - 2) * (p + 1)) if corrected else 1.0
    return (
        (p - 1) / (2 * (p + 1)) * (poho * mu**a_grad + m * mu**a_mass)
        + (p + 3) / (2 * (p + 1)) * omega**2 * mu**a_mass
    )


def pohozaev_ratio(model: ModelParams) -> float:
    """||grad phi_tilde||^2 / ||phi_tilde||^2 from the Pohozaev identity."""
    p, d = model.p, model.d
    return d * (p - 1) / (2 * d - (d - 2) * (p + 1))


def profile_norms(gs: GroundState) -> tuple[float, float]:
    """(||phi||_2^2, ||phi'||_2^2) of a grid-sampled ground state."""
    if gs.grid is None:
        raise ValueError("profile_norms needs a grid-sampled ground state")
    n2 = norm_l2(gs.samples, gs.grid) ** 2
    dn2 = norm_l2(spectral_derivative(gs.samples, gs.grid), gs.grid) ** 2
    return n2, dn2


def tail_log_slope(gs: GroundState) -> float:
    """Log-linear slope of the profile tail over the outer quarter of the domain.

    For an exponentially decaying profile this approaches -sqrt(m - omega^2).
    """
    if gs.grid is None:
        raise ValueError("tail_log_slope needs a grid-sampled ground state")
    x = gs.grid.x
    mask = (x > 0.25 * gs.grid.length) & (x < 0.5 * gs.grid.length - 2 * gs.grid.spacing)
    vals = gs.samples[mask]
    usable = vals > 1e-280
    coef = np.polyfit(x[mask][usable], np.log(vals[usable]), 1)
    return float(coef[0])
