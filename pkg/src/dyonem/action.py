"""Lagrangian density, action integral and field-equation residuals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError
from .potentials import (
    AnalyticPotentials,
    GridPotentials,
    central_jacobian,
    default_step,
    fields_from_jacobians,
)
from .tensor import METRIC

__all__ = [
    "SourceField",
    "ActionDomain",
    "field_matrices",
    "lagrangian_density",
    "lagrangian_density_array",
    "action_value",
    "euler_lagrange_residuals",
    "continuity_residuals",
    "CompactBump",
    "compact_bump",
    "first_order_action_change",
    "MAGNETIC_SIGN_PRINTED",
    "MAGNETIC_SIGN_ALTERNATE",
]

# sign in front of the (1/c) k^i C_i interaction term
MAGNETIC_SIGN_PRINTED = +1
MAGNETIC_SIGN_ALTERNATE = -1

_G = np.diag(METRIC)


@dataclass(frozen=True)
class SourceField:
    """Electric and magnetic four-currents as vectorized closures.

    ``j(events)`` and ``k(events)`` return ``(..., 4)`` contravariant arrays
    ``(rho c, jx, jy, jz)`` in Gaussian units.  ``None`` means zero.
    """

    j: Callable | None = None
    k: Callable | None = None
    c: float = 1.0

    def currents(self, events) -> tuple[np.ndarray, np.ndarray]:
        events = np.asarray(events, dtype=float)
        zero = np.zeros(events.shape[:-1] + (4,))
        jj = zero if self.j is None else np.asarray(self.j(events), dtype=float)
        kk = zero if self.k is None else np.asarray(self.k(events), dtype=float)
        return np.broadcast_to(jj, zero.shape), np.broadcast_to(kk, zero.shape)

    @classmethod
    def vacuum(cls, c: float = 1.0) -> "SourceField":
        return cls(None, None, c)


@dataclass(frozen=True)
class ActionDomain:
    """Spacetime box ``[t0, t1] x [lo, hi]`` with ``resolution`` cells per axis."""

    t0: float
    t1: float
    lo: tuple
    hi: tuple
    resolution: tuple

    def __post_init__(self):
        extents = [self.t1 - self.t0] + [h - l for l, h in zip(self.lo, self.hi)]
        if len(extents) != 4 or min(extents) <= 0:
            raise ConfigurationError("action domain extents must be positive on all four axes")
        res = tuple(int(r) for r in np.broadcast_to(self.resolution, (4,)))
        if min(res) < 4:
            raise ConfigurationError(f"resolution {res} too coarse: need at least 4 cells per axis")
        object.__setattr__(self, "resolution", res)

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.t0, *self.lo], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.t1, *self.hi], dtype=float)

    @property
    def cell(self) -> np.ndarray:
        return (self.upper - self.lower) / np.array(self.resolution)

    def four_volume(self, c: float) -> float:
        """Measure in ``dOmega = c dt dx dy dz``."""
        return float(c * np.prod(self.upper - self.lower))

    def midpoints(self) -> np.ndarray:
        axes = [lo + h * (np.arange(n) + 0.5) for lo, h, n in zip(self.lower, self.cell, self.resolution)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def field_matrices(p, events):
    """``(F^ik, G^ik)`` stacks ``(..., 4, 4)`` at events."""
    JA, JC = p.jacobians(events)
    E, B = fields_from_jacobians(JA, JC)
    return _F_uu(E, B), _F_uu(B, -E)


def _F_uu(E, B):
    z = np.zeros(E.shape[:-1])
    Ex, Ey, Ez = np.moveaxis(E, -1, 0)
    Bx, By, Bz = np.moveaxis(B, -1, 0)
    rows = [
        [z, -Ex, -Ey, -Ez],
        [Ex, z, -Bz, By],
        [Ey, Bz, z, -Bx],
        [Ez, -By, Bx, z],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def lagrangian_density_array(p, s: SourceField, events, magnetic_sign: int = MAGNETIC_SIGN_PRINTED):
    """Vectorized Lagrangian density

    ``(sign/c) k^i C_i - (1/c) j^i A_i - (1/16 pi) F^ik F_ik``.
    """
    events = np.asarray(events, dtype=float)
    A, C = p.values(events)
    JA, JC = p.jacobians(events)
    E, B = fields_from_jacobians(JA, JC)
    jj, kk = s.currents(events)
    c = p.c
    ff = 2.0 * (np.sum(B * B, axis=-1) - np.sum(E * E, axis=-1))   # F^ik F_ik
    jA = np.sum(jj * A * _G, axis=-1)
    kC = np.sum(kk * C * _G, axis=-1)
    return magnetic_sign * kC / c - jA / c - ff / (16.0 * np.pi)


def lagrangian_density(p, s: SourceField, point, magnetic_sign: int = MAGNETIC_SIGN_PRINTED) -> float:
    point = np.asarray(point, dtype=float)
    if isinstance(p, GridPotentials):
        p.index_of(point)
    return float(lagrangian_density_array(p, s, point[None, :], magnetic_sign)[0])


def action_value(p, s: SourceField, d: ActionDomain, magnetic_sign: int = MAGNETIC_SIGN_PRINTED) -> float:
    """``S = (1/c) int Lambda dOmega`` by the midpoint rule on ``d``."""
    events = d.midpoints().reshape(-1, 4)
    lam = lagrangian_density_array(p, s, events, magnetic_sign)
    cell_volume = p.c * float(np.prod(d.cell))
    # numpy's sum is pairwise, so the reduction order is fixed
    return float(np.sum(lam)) * cell_volume / p.c


def _outer_step(p, point, step):
    if step is not None:
        return np.broadcast_to(np.asarray(step, dtype=float), (4,))
    if isinstance(p, GridPotentials):
        return np.asarray(p.spacing)
    exact = isinstance(p, AnalyticPotentials) and p.jac_A is not None and p.jac_C is not None
    if not isinstance(p, AnalyticPotentials):
        exact = True   # symbolic
    return default_step(point, getattr(p, "scale", 1.0), power=1 / 3 if exact else 1 / 4)


def _divergence_first_index(fn, point, c, h) -> np.ndarray:
    """``d_i M^{il}`` for a matrix-valued closure by central differences."""
    out = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h[i]
        pts = np.stack([point + e, point - e])
        m = fn(pts)
        width = (point[i] + h[i]) - (point[i] - h[i])
        d = (m[0, i, :] - m[1, i, :]) / width
        out += d / c if i == 0 else d
    return out


def euler_lagrange_residuals(p, s: SourceField, point, step=None):
    """``(d_i F^il - (4pi/c) j^l, d_i G^il - (4pi/c) k^l)`` at one event.

    Zero exactly where both covariant field equations hold; the central
    differences make it ``O(step**2)`` otherwise.
    """
    point = np.asarray(point, dtype=float)
    if isinstance(p, GridPotentials):
        p.index_of(point, margin=2)
    h = _outer_step(p, point, step)
    c = p.c
    divF = _divergence_first_index(lambda ev: field_matrices(p, ev)[0], point, c, h)
    divG = _divergence_first_index(lambda ev: field_matrices(p, ev)[1], point, c, h)
    jj, kk = s.currents(point[None, :])
    return divF - 4 * np.pi / c * jj[0], divG - 4 * np.pi / c * kk[0]


def continuity_residuals(s: SourceField, point, step=None) -> tuple[float, float]:
    """``(d_l j^l, d_l k^l)`` by central differences."""
    point = np.asarray(point, dtype=float)[None, :]
    Jj = central_jacobian(lambda ev: s.currents(ev)[0], point, s.c, step)
    Jk = central_jacobian(lambda ev: s.currents(ev)[1], point, s.c, step)
    return float(np.trace(Jj[0])), float(np.trace(Jk[0]))


class CompactBump(AnalyticPotentials):
    """Smooth compactly supported perturbation of one potential component.

    ``component`` 0..3 selects ``A^0..A^3`` and 4..7 selects ``C^0..C^3``.  The
    profile is ``prod_m (1 - s_m^2)^4`` with ``s_m = (x^m - center_m)/width_m``
    inside the box and zero outside; its Jacobian is exact.
    """

    def __init__(self, center, width, component: int, amplitude: float = 1.0, c: float = 1.0):
        center = np.asarray(center, dtype=float)
        width = np.array(np.broadcast_to(np.asarray(width, dtype=float), (4,)))
        slot = np.zeros(8)
        slot[component] = amplitude

        def profile(ev):
            s = (np.asarray(ev, dtype=float) - center) / width
            inside = np.abs(s) < 1.0
            base = np.where(inside, 1.0 - s * s, 0.0)
            df = np.where(inside, -8.0 * s * base**3, 0.0) / width
            df[..., 0] /= c
            return base**4, df

        def values(ev):
            f1, _ = profile(ev)
            return np.prod(f1, axis=-1)[..., None] * slot

        def jac(ev):
            f1, df = profile(ev)
            grad = np.stack(
                [df[..., m] * np.prod(np.delete(f1, m, axis=-1), axis=-1) for m in range(4)],
                axis=-1,
            )
            return grad[..., :, None] * slot[None, :]

        super().__init__(
            A=lambda ev: values(ev)[..., :4],
            C=lambda ev: values(ev)[..., 4:],
            c=c,
            jac_A=lambda ev: jac(ev)[..., :, :4],
            jac_C=lambda ev: jac(ev)[..., :, 4:],
        )
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "component", component)

    def support_mask(self, events) -> np.ndarray:
        s = (np.asarray(events, dtype=float) - self.center) / self.width
        return np.all(np.abs(s) < 1.0, axis=-1)


def compact_bump(center, width, component: int, amplitude: float = 1.0, c: float = 1.0) -> CompactBump:
    return CompactBump(center, width, component, amplitude, c)


def first_order_action_change(p, s: SourceField, d: ActionDomain, bump, eps: float = 1e-3,
                              magnetic_sign: int = MAGNETIC_SIGN_PRINTED, return_scale: bool = False):
    """Symmetric-difference coefficient ``(S[p + eps b] - S[p - eps b]) / (2 eps)``.

    The action is quadratic in the potentials, so this is the exact first-order
    coefficient of ``S`` along ``b`` up to quadrature and rounding.  For a
    :class:`CompactBump` only cells inside its support contribute and the
    quadrature is restricted to them.  With ``return_scale`` the midpoint sum
    of the absolute integrand is returned as well, a natural magnitude to
    compare the coefficient against.
    """
    from .potentials import superpose

    events = d.midpoints().reshape(-1, 4)
    if isinstance(bump, CompactBump):
        events = events[bump.support_mask(events)]
    plus = superpose(p, (eps, bump))
    minus = superpose(p, (-eps, bump))
    diff = (lagrangian_density_array(plus, s, events, magnetic_sign)
            - lagrangian_density_array(minus, s, events, magnetic_sign)) / (2 * eps)
    cell = float(np.prod(d.cell))
    coef = float(np.sum(diff)) * cell
    if return_scale:
        return coef, float(np.sum(np.abs(diff))) * cell
    return coef
