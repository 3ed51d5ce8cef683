"""Conserved functionals, the action, Nehari projection and moving cutoffs.

The flow conserves the energy E, the charge Q = Im int u1 conj(u2) and the
momentum P = Re int (d/dx u1) conj(u2).  A soliton with frequency omega and
velocity v is a critical point of the action

    S = E + (omega/gamma) Q + v P,

whose gradient in the real L2 pairing is

    S'(W) = ( -u1'' + m u1 - |u1|^(p-1) u1 + i (omega/gamma) u2 - v u2',
              u2 - i (omega/gamma) u1 + v u1' ).

Along a ray s -> S(sW) the quadratic part scales as s^2 and the nonlinear
part as s^(p+1), so the Nehari constraint <S'(sW), sW> = 0 has the unique
positive solution written in closed form below; it is the maximum of the
ray, which is how the mountain-pass level is represented here.

The moving cutoff partition splits the line between solitons with ramps of
width sqrt(t) centered at the velocity midpoints; the ramp is

    psi(s) = sin^2(pi (s+1) / 4)  on [-1, 1],  0 below,  1 above,

which satisfies |psi'| = (pi/2) sqrt(psi) |cos(pi(s+1)/4)| <= (pi/2) sqrt(psi),
the bound needed for IMS-style localization of the gradient term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grids import (
    Field,
    Grid,
    norm_l2l2,
    pair_inner,
    spectral_derivative,
    spectral_second_derivative,
)
from .profiles import ModelParams, SolitonParams

__all__ = [
    "ActionParams",
    "CutoffPartition",
    "LocalizedQuantities",
    "NehariProjectionError",
    "energy",
    "charge",
    "momentum",
    "action",
    "action_gradient",
    "gradient_norm",
    "nehari_value",
    "nehari_project",
    "ramp",
    "ramp_derivative",
    "build_cutoffs",
    "localized_quantities",
]


class NehariProjectionError(ValueError):
    """The ray through W has no interior action maximum."""


@dataclass
class ActionParams:
    """Coefficients of S = E + omega_over_gamma * Q + v * P."""

    omega_over_gamma: float
    v: float
    model: ModelParams

    def __post_init__(self) -> None:
        if abs(self.v) >= 1.0:
            raise ValueError(f"|v| must be < 1, got {self.v}")

    @classmethod
    def from_soliton(cls, sp: SolitonParams) -> "ActionParams":
        return cls(sp.omega / sp.gamma, sp.v, sp.model)


def energy(w: Field, model: ModelParams) -> float:
    du1 = spectral_derivative(w.u1, w.grid)
    dens = (
        0.5 * np.abs(w.u2) ** 2
        + 0.5 * np.abs(du1) ** 2
        + 0.5 * model.m * np.abs(w.u1) ** 2
        - np.abs(w.u1) ** (model.p + 1.0) / (model.p + 1.0)
    )
    return float(np.sum(dens) * w.grid.spacing)


def charge(w: Field) -> float:
    return float(np.sum(np.imag(w.u1 * np.conj(w.u2))) * w.grid.spacing)


def momentum(w: Field) -> float:
    du1 = spectral_derivative(w.u1, w.grid)
    return float(np.sum(np.real(du1 * np.conj(w.u2))) * w.grid.spacing)


def action(w: Field, ap: ActionParams) -> float:
    return energy(w, ap.model) + ap.omega_over_gamma * charge(w) + ap.v * momentum(w)


def action_gradient(w: Field, ap: ActionParams) -> Field:
    """S'(W) in the real L2 pairing, as a Field."""
    g = w.grid
    og, v, model = ap.omega_over_gamma, ap.v, ap.model
    d2u1 = spectral_second_derivative(w.u1, g)
    du1 = spectral_derivative(w.u1, g)
    du2 = spectral_derivative(w.u2, g)
    g1 = (
        -d2u1
        + model.m * w.u1
        - np.abs(w.u1) ** (model.p - 1.0) * w.u1
        + 1j * og * w.u2
        - v * du2
    )
    g2 = w.u2 - 1j * og * w.u1 + v * du1
    return Field(g1, g2, g)


def gradient_norm(w: Field, ap: ActionParams) -> float:
    """||S'(W)|| in L2 x L2."""
    return norm_l2l2(action_gradient(w, ap))


def nehari_value(w: Field, ap: ActionParams) -> float:
    """Nehari functional I(W) = <S'(W), W>."""
    return pair_inner(action_gradient(w, ap), w)


def _ray_parts(w: Field, ap: ActionParams) -> tuple[float, float]:
    """(quadratic part of I, nonlinear part of I): I(sW) = s^2 a - s^(p+1) b."""
    p = ap.model.p
    h = w.grid.spacing
    nonlin = float(np.sum(np.abs(w.u1) ** (p + 1.0)) * h)
    quad = nehari_value(w, ap) + nonlin
    return quad, nonlin


def nehari_project(w: Field, ap: ActionParams) -> tuple[float, Field]:
    """Scale W onto the Nehari set: s* with I(s* W) = 0, maximizing s -> S(sW)."""
    quad, nonlin = _ray_parts(w, ap)
    if nonlin <= 0.0:
        raise NehariProjectionError("first component vanishes; no ray maximum")
    if quad <= 0.0:
        raise NehariProjectionError("quadratic part non-positive; no interior maximum")
    s_star = (quad / nonlin) ** (1.0 / (ap.model.p - 1.0))
    return s_star, s_star * w


def ramp(s: np.ndarray | float):
    """C^1 ramp: 0 for s < -1, sin^2(pi (s+1)/4) on [-1, 1], 1 above."""
    s = np.asarray(s, dtype=float)
    out = np.where(s <= -1.0, 0.0, np.where(s >= 1.0, 1.0, np.sin(np.pi * (s + 1.0) / 4.0) ** 2))
    return out


def ramp_derivative(s: np.ndarray | float):
    s = np.asarray(s, dtype=float)
    inside = (s > -1.0) & (s < 1.0)
    out = np.zeros_like(s)
    out[inside] = (np.pi / 4.0) * np.sin(np.pi * (s[inside] + 1.0) / 2.0)
    return out


@dataclass
class CutoffPartition:
    """Moving partition of unity separating solitons by velocity.

    weight j is psi_j - psi_{j+1} (the last one is psi_N), where
    psi_j(x) = ramp((x - midpoint_j * t)/sqrt(t)) and psi_1 = 1. The
    telescoping sum is identically 1.
    """

    velocities: np.ndarray
    midpoints: np.ndarray
    time: float
    grid: Grid
    weights: np.ndarray  # (N, points)
    weight_derivatives: np.ndarray  # (N, points), analytic d/dx

    @property
    def count(self) -> int:
        return len(self.velocities)


def build_cutoffs(velocities: Sequence[float], t: float, grid: Grid) -> CutoffPartition:
    """Instantiate the partition at time t > 0 (ramp width sqrt(t))."""
    if t <= 0:
        raise ValueError(f"cutoff time must be positive, got {t}")
    vel = np.asarray(sorted(velocities), dtype=float)
    if np.any(np.diff(vel) <= 0):
        raise ValueError("velocities must be strictly increasing")
    n = len(vel)
    mids = 0.5 * (vel[:-1] + vel[1:])
    w = math.sqrt(t)
    psi = np.ones((n + 1, grid.points))
    dpsi = np.zeros((n + 1, grid.points))
    for j in range(1, n):
        s = (grid.x - mids[j - 1] * t) / w
        psi[j] = ramp(s)
        dpsi[j] = ramp_derivative(s) / w
    psi[n] = 0.0  # sentinel psi_{N+1}
    weights = psi[:n] - psi[1 : n + 1]
    dweights = dpsi[:n] - dpsi[1 : n + 1]
    return CutoffPartition(vel, mids, t, grid, weights, dweights)


@dataclass
class LocalizedQuantities:
    """Per-soliton weighted E_j, Q_j, P_j and the localized action total."""

    e: np.ndarray
    q: np.ndarray
    p: np.ndarray
    action_total: float


def localized_quantities(
    w: Field, cp: CutoffPartition, params: Sequence[ActionParams]
) -> LocalizedQuantities:
    """Cutoff-weighted energies, charges, momenta and their action sum."""
    if len(params) != cp.count:
        raise ValueError(f"need {cp.count} ActionParams, got {len(params)}")
    g = w.grid
    h = g.spacing
    model = params[0].model
    du1 = spectral_derivative(w.u1, g)
    e_dens = (
        0.5 * np.abs(du1) ** 2
        + 0.5 * model.m * np.abs(w.u1) ** 2
        + 0.5 * np.abs(w.u2) ** 2
        - np.abs(w.u1) ** (model.p + 1.0) / (model.p + 1.0)
    )
    q_dens = np.imag(w.u1 * np.conj(w.u2))
    p_dens = np.real(du1 * np.conj(w.u2))
    e_j = cp.weights @ e_dens * h
    q_j = cp.weights @ q_dens * h
    p_j = cp.weights @ p_dens * h
    total = float(
        sum(
            e_j[j] + params[j].omega_over_gamma * q_j[j] + params[j].v * p_j[j]
            for j in range(cp.count)
        )
    )
    return LocalizedQuantities(e_j, q_j, p_j, total)
