"""Symmetrized Lorentz force, dyon pusher and electromagnetic stress-energy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .action import SourceField, _F_uu
from .potentials import fields_from_jacobians
from .tensor import METRIC, FieldState, FourVector

__all__ = [
    "DyonState",
    "StressEnergy",
    "lorentz_force_3",
    "lorentz_force_covariant",
    "effective_fields",
    "boris_kick",
    "push_dyon",
    "integrate",
    "stress_energy",
    "stress_energy_symmetrized",
    "stress_energy_array",
    "force_density_check",
    "force_density_array",
    "divergence_identity_sides",
    "fit_circle",
]

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class DyonState:
    """Particle with rest mass ``m0`` and charges ``q_e``, ``q_m`` (Gaussian units).

    ``u`` holds the spatial part ``gamma v`` of the four-velocity; the time
    part ``gamma c`` is derived, so ``u . u = c^2`` holds by construction.
    """

    m0: float
    q_e: float
    q_m: float
    x: np.ndarray
    u: np.ndarray
    t: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if not self.m0 > 0:
            raise ValueError("rest mass must be positive")
        for name in ("x", "u"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_velocity(cls, m0, q_e, q_m, x, v, t: float = 0.0, c: float = 1.0) -> "DyonState":
        v = np.asarray(v, dtype=float)
        b2 = float(v @ v) / c**2
        if b2 >= 1.0:
            raise ValueError("initial speed must be below c")
        return cls(m0, q_e, q_m, x, v / np.sqrt(1.0 - b2), t, c)

    @property
    def gamma(self) -> float:
        return float(np.sqrt(1.0 + (self.u @ self.u) / self.c**2))

    @property
    def velocity(self) -> np.ndarray:
        return self.u / self.gamma

    @property
    def four_velocity(self) -> FourVector:
        return FourVector.from_time_space(self.gamma * self.c, self.u)

    @property
    def momentum(self) -> np.ndarray:
        return self.m0 * self.u

    @property
    def energy(self) -> float:
        return self.gamma * self.m0 * self.c**2

    @property
    def kinetic_energy(self) -> float:
        # (gamma - 1) written to avoid cancellation at low speed
        u2 = float(self.u @ self.u) / self.c**2
        return self.m0 * self.c**2 * u2 / (self.gamma + 1.0)

    def dual(self) -> "DyonState":
        """Duality image ``(q_e, q_m) -> (q_m, -q_e)``."""
        return DyonState(self.m0, self.q_m, -self.q_e, self.x, self.u, self.t, self.c)


def lorentz_force_3(d: DyonState, f: FieldState) -> np.ndarray:
    """``q_e (E + v/c x B) + q_m (B - v/c x E)``."""
    beta = d.velocity / d.c
    return d.q_e * (f.E + np.cross(beta, f.B)) + d.q_m * (f.B - np.cross(beta, f.E))


def lorentz_force_covariant(d: DyonState, f: FieldState) -> np.ndarray:
    """Covariant four-force ``F_k = (1/c)[q_e F_kl u^l + q_m G_kl u^l]``."""
    u = d.four_velocity.components
    return (d.q_e * f.F_dd @ u + d.q_m * f.G_dd @ u) / d.c


def effective_fields(d: DyonState, f: FieldState) -> tuple[np.ndarray, np.ndarray]:
    """Per-unit-mass fields that turn the dyon force into an ordinary Lorentz force.

    ``E_eff = (q_e E + q_m B)/m0`` and ``B_eff = (q_e B - q_m E)/m0``.
    """
    E_eff = (d.q_e * f.E + d.q_m * f.B) / d.m0
    B_eff = (d.q_e * f.B - d.q_m * f.E) / d.m0
    return E_eff, B_eff


def _cross(a, b):
    # np.cross carries heavy per-call overhead for single 3-vectors
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def boris_kick(u, E_eff, B_eff, dt: float, c: float) -> np.ndarray:
    """Advance ``u = gamma v`` by ``dt`` under ``du/dt = E_eff + (u/(gamma c)) x B_eff``.

    Half electric kick, exact-norm rotation, half electric kick.
    """
    u_minus = u + 0.5 * dt * E_eff
    gamma = np.sqrt(1.0 + (u_minus @ u_minus) / c**2)
    t = (0.5 * dt / (gamma * c)) * B_eff
    s = 2.0 * t / (1.0 + t @ t)
    u_prime = u_minus + _cross(u_minus, t)
    u_plus = u_minus + _cross(u_prime, s)
    return u_plus + 0.5 * dt * E_eff


def push_dyon(d: DyonState, field_at: Callable, dt: float) -> DyonState:
    """One drift-kick-drift step.

    ``field_at(event)`` maps ``(t, x, y, z)`` to a :class:`FieldState`; it is
    sampled once, at the mid-step position and time.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    c = d.c
    x_half = d.x + 0.5 * dt * d.velocity
    f = field_at(np.concatenate([[d.t + 0.5 * dt], x_half]))
    E_eff, B_eff = effective_fields(d, f)
    u_new = boris_kick(d.u, E_eff, B_eff, dt, c)
    gamma_new = np.sqrt(1.0 + (u_new @ u_new) / c**2)
    x_new = x_half + 0.5 * dt * u_new / gamma_new
    return DyonState(d.m0, d.q_e, d.q_m, x_new, u_new, d.t + dt, c)


def integrate(d: DyonState, field_at: Callable, dt: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Positions and spatial four-velocities ``(steps + 1, 3)`` along a run."""
    xs = np.empty((steps + 1, 3))
    us = np.empty((steps + 1, 3))
    xs[0], us[0] = d.x, d.u
    for n in range(steps):
        d = push_dyon(d, field_at, dt)
        xs[n + 1], us[n + 1] = d.x, d.u
    return xs, us


@dataclass(frozen=True)
class StressEnergy:
    """Mixed stress-energy tensor ``T^i_k`` stored as ``mixed[i, k]``."""

    mixed: np.ndarray

    @property
    def raised(self) -> np.ndarray:
        """``T^{ik} = T^i_j g^{jk}``."""
        return self.mixed @ METRIC

    @property
    def trace(self) -> float:
        return float(np.trace(self.mixed))

    @property
    def energy_density(self) -> float:
        return float(self.mixed[0, 0])


def stress_energy_array(E, B) -> np.ndarray:
    """Vectorized ``T^i_k = (1/4pi)[F^li F_kl + 1/4 delta^i_k F^pq F_pq]``."""
    F_uu = _F_uu(E, B)
    F_dd = _F_uu(-E, B)
    ff = np.sum(F_uu * F_dd, axis=(-2, -1))
    T = np.einsum("...li,...kl->...ik", F_uu, F_dd) + 0.25 * ff[..., None, None] * np.eye(4)
    return T / FOUR_PI


def stress_energy(f: FieldState) -> StressEnergy:
    return StressEnergy(stress_energy_array(f.E, f.B))


def stress_energy_symmetrized(f: FieldState) -> StressEnergy:
    """``T^i_k = (1/8pi)[F^li F_kl + G^li G_kl]``."""
    T = np.einsum("li,kl->ik", f.F_uu, f.F_dd) + np.einsum("li,kl->ik", f.G_uu, f.G_dd)
    return StressEnergy(T / (2 * FOUR_PI))


def force_density_array(E, B, j, k, c: float) -> np.ndarray:
    """``f_k = (1/c)[F_kl j^l + G_kl k^l]`` (covariant), vectorized."""
    F_dd = _F_uu(-E, B)
    G_dd = _F_uu(-B, -E)
    return (np.einsum("...kl,...l->...k", F_dd, j) + np.einsum("...kl,...l->...k", G_dd, k)) / c


def force_density_check(p, s: SourceField, point, step=None) -> tuple[np.ndarray, np.ndarray]:
    """``(-d_i T^i_k, (1/c)[F_kl j^l + G_kl k^l])`` at one event.

    The divergence is taken by central differences of the stress-energy built
    from the potentials ``p``; the right side uses exact local values.
    """
    from .action import _outer_step

    point = np.asarray(point, dtype=float)
    h = _outer_step(p, point, step)
    c = p.c
    div = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h[i]
        ev = np.stack([point + e, point - e])
        E, B = fields_from_jacobians(*p.jacobians(ev))
        T = stress_energy_array(E, B)
        width = (point[i] + h[i]) - (point[i] - h[i])
        d = (T[0, i, :] - T[1, i, :]) / width
        div += d / c if i == 0 else d
    E, B = fields_from_jacobians(*p.jacobians(point[None, :]))
    jj, kk = s.currents(point[None, :])
    return -div, force_density_array(E[0], B[0], jj[0], kk[0], c)


def divergence_identity_sides(E, B, dE, dB) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``F_kl d_i F^li + G_kl d_i G^li = G^li d_i G_kl + F^li d_i F_kl``.

    ``E``, ``B`` are 3-vectors at the point and ``dE``, ``dB`` are ``(4, 3)``
    arrays of derivatives ``d_m`` (with ``x^0 = ct``).  The identity is purely
    algebraic, so any consistent derivative (exact or differenced) may be
    supplied.
    """
    F_uu, F_dd = _F_uu(E, B), _F_uu(-E, B)
    G_uu, G_dd = _F_uu(B, -E), _F_uu(-B, -E)
    dF_uu, dF_dd = _F_uu(dE, dB), _F_uu(-dE, dB)     # (4, 4, 4): [m, row, col]
    dG_uu, dG_dd = _F_uu(dB, -dE), _F_uu(-dB, -dE)
    div_F = np.einsum("ili->l", dF_uu)               # d_i F^li
    div_G = np.einsum("ili->l", dG_uu)
    lhs = F_dd @ div_F + G_dd @ div_G
    rhs = np.einsum("li,ikl->k", G_uu, dG_dd) + np.einsum("li,ikl->k", F_uu, dF_dd)
    return lhs, rhs


def fit_circle(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic least-squares circle through 2-D points: ``(center, radius)``."""
    x, y = points[:, 0], points[:, 1]
    M = np.column_stack([x, y, np.ones_like(x)])
    rhs = x * x + y * y
    (a, b, cc), *_ = np.linalg.lstsq(M, rhs, rcond=None)
    center = np.array([a / 2.0, b / 2.0])
    return center, float(np.sqrt(cc + center @ center))
