"""Retarded (Lienard-Wiechert form) potentials and fields of point dyons."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .action import SourceField
from .errors import NumericalError, SingularityError
from .potentials import AnalyticPotentials, fields_from_potentials
from .tensor import FieldState

__all__ = [
    "Trajectory",
    "static_trajectory",
    "uniform_trajectory",
    "circular_trajectory",
    "PointDyonSource",
    "retarded_time",
    "retarded_potentials",
    "retarded_potential_arrays",
    "fields_of_point_dyon",
    "smoothed_sources",
]


@dataclass(frozen=True)
class Trajectory:
    """Worldline given by vectorized closures ``t (N,) -> (N, 3)``."""

    position: Callable
    velocity: Callable
    max_speed: float | None = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.position(t), dtype=float), np.asarray(self.velocity(t), dtype=float)


def static_trajectory(x0) -> Trajectory:
    x0 = np.asarray(x0, dtype=float)
    return Trajectory(
        lambda t: np.broadcast_to(x0, np.shape(t) + (3,)).copy(),
        lambda t: np.zeros(np.shape(t) + (3,)),
        0.0,
    )


def uniform_trajectory(x0, v, t0: float = 0.0) -> Trajectory:
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    return Trajectory(
        lambda t: x0 + (np.asarray(t)[..., None] - t0) * v,
        lambda t: np.broadcast_to(v, np.shape(t) + (3,)).copy(),
        float(np.linalg.norm(v)),
    )


def circular_trajectory(center, radius: float, omega: float, phase: float = 0.0) -> Trajectory:
    """Circle in the plane ``z = center[2]`` traversed counter-clockwise."""
    center = np.asarray(center, dtype=float)

    def pos(t):
        a = omega * np.asarray(t) + phase
        return center + radius * np.stack([np.cos(a), np.sin(a), np.zeros_like(a)], axis=-1)

    def vel(t):
        a = omega * np.asarray(t) + phase
        return radius * omega * np.stack([-np.sin(a), np.cos(a), np.zeros_like(a)], axis=-1)

    return Trajectory(pos, vel, abs(radius * omega))


@dataclass(frozen=True)
class PointDyonSource:
    """Point particle with electric charge ``q_e`` and magnetic charge ``q_m``."""

    q_e: float
    q_m: float
    trajectory: Trajectory
    c: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self):
        vmax = self.trajectory.max_speed
        if vmax is not None and vmax >= self.c:
            raise ValueError(f"trajectory speed {vmax} is not below c = {self.c}")

    def potentials(self, step=None, scale: float = 1.0) -> AnalyticPotentials:
        """Potential representation differentiated by central differences."""
        return AnalyticPotentials(
            A=lambda ev: retarded_potential_arrays(self, ev)[0],
            C=lambda ev: retarded_potential_arrays(self, ev)[1],
            c=self.c,
            step=step,
            scale=scale,
        )


def retarded_time(src: PointDyonSource, events, max_iter: int = 200) -> np.ndarray:
    """Solve ``tau + |r - r(tau)|/c = t`` for each event.

    The residual is strictly increasing for subluminal worldlines, so a
    bracket ``[lo, t]`` always exists; Newton steps that leave the bracket are
    replaced by bisection.
    """
    events = np.asarray(events, dtype=float)
    flat = events.reshape(-1, 4)
    t = flat[:, 0]
    r = flat[:, 1:]
    c = src.c
    tol = 1e-12 * np.maximum(src.time_scale, np.abs(t))

    def resid(tau):
        pos, _ = src.trajectory(tau)
        return tau + np.linalg.norm(r - pos, axis=-1) / c - t

    hi = t.copy()
    f_hi = resid(hi)
    if np.any(f_hi * c <= 1e-14 * np.maximum(1.0, np.linalg.norm(r, axis=-1))):
        raise SingularityError("event lies on the source worldline")
    gap = f_hi.copy()
    lo = t - 2.0 * gap
    f_lo = resid(lo)
    for _ in range(200):
        bad = f_lo >= 0
        if not np.any(bad):
            break
        gap = np.where(bad, 2.0 * gap, gap)
        lo = np.where(bad, t - 2.0 * gap, lo)
        f_lo = np.where(bad, resid(lo), f_lo)
    else:
        raise NumericalError("could not bracket the retarded time")

    tau = hi.copy()
    done = np.zeros(t.shape, dtype=bool)
    for _ in range(max_iter):
        pos, vel = src.trajectory(tau)
        R = r - pos
        dist = np.linalg.norm(R, axis=-1)
        f = tau + dist / c - t
        # shrink bracket
        hi = np.where(f > 0, tau, hi)
        lo = np.where(f <= 0, tau, lo)
        df = 1.0 - np.sum(R * vel, axis=-1) / (c * np.maximum(dist, 1e-300))
        newton = tau - f / df
        # inclusive: an exact root sits on the bracket end it just moved
        inside = (newton >= lo) & (newton <= hi)
        new = np.where(inside, newton, 0.5 * (lo + hi))
        step = np.abs(new - tau)
        tau = np.where(done, tau, new)
        done |= (f == 0) | (step <= tol) | (hi - lo <= tol)
        if np.all(done):
            return tau.reshape(events.shape[:-1])
    raise NumericalError("retarded-time iteration did not converge")


def retarded_potential_arrays(src: PointDyonSource, events) -> tuple[np.ndarray, np.ndarray]:
    """``(A, C)`` at events, each ``(..., 4)``: ``q u^i / (u . (x - x_ret))``."""
    events = np.asarray(events, dtype=float)
    shape = events.shape[:-1]
    flat = events.reshape(-1, 4)
    if src.q_e == 0.0 and src.q_m == 0.0:
        z = np.zeros(shape + (4,))
        return z, z.copy()
    tau = retarded_time(src, flat).reshape(-1)
    pos, vel = src.trajectory(tau)
    c = src.c
    R = flat[:, 1:] - pos
    dist = c * (flat[:, 0] - tau)
    beta2 = np.sum(vel * vel, axis=-1) / c**2
    if np.any(beta2 >= 1.0):
        raise ValueError("trajectory is not subluminal at the retarded time")
    gamma = 1.0 / np.sqrt(1.0 - beta2)
    u = np.concatenate([(gamma * c)[:, None], gamma[:, None] * vel], axis=-1)
    u_dot_R = gamma * c * dist - np.sum(u[:, 1:] * R, axis=-1)
    if np.any(u_dot_R <= 0):
        raise SingularityError("event lies on the source worldline")
    base = u / u_dot_R[:, None]
    return (src.q_e * base).reshape(shape + (4,)), (src.q_m * base).reshape(shape + (4,))


def retarded_potentials(src: PointDyonSource, point) -> tuple[np.ndarray, np.ndarray]:
    A, C = retarded_potential_arrays(src, np.asarray(point, dtype=float)[None, :])
    return A[0], C[0]


def fields_of_point_dyon(src: PointDyonSource, point, step=None) -> FieldState:
    """(E, B) from the retarded potentials by central differences."""
    point = np.asarray(point, dtype=float)
    scale = max(1.0, float(np.linalg.norm(point[1:])))
    return fields_from_potentials(src.potentials(step=step, scale=scale), point)


def smoothed_sources(src: PointDyonSource, sigma: float) -> SourceField:
    """Currents of a dyon whose charge is spread by a normalized Gaussian.

    ``j = q_e S(r - r(t)) (c, v(t))`` and likewise for ``k``; continuity holds
    identically for any trajectory.
    """
    norm = (2.0 * np.pi * sigma**2) ** -1.5

    def shape(ev):
        ev = np.asarray(ev, dtype=float)
        pos, vel = src.trajectory(ev[..., 0])
        d2 = np.sum((ev[..., 1:] - pos) ** 2, axis=-1)
        w = norm * np.exp(-0.5 * d2 / sigma**2)
        four = np.concatenate([np.full(w.shape + (1,), src.c), vel], axis=-1)
        return w[..., None] * four

    return SourceField(
        j=lambda ev: src.q_e * shape(ev),
        k=lambda ev: src.q_m * shape(ev),
        c=src.c,
    )
