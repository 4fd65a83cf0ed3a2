"""Two four-potentials, gauge transformations and field construction.

Every potential representation answers two questions at a batch of events
``(t, x, y, z)`` (arrays of shape ``(..., 4)``):

``values(events)``
    ``(A, C)``, each ``(..., 4)`` contravariant: ``A^i = (V, Ax, Ay, Az)`` and
    ``C^i = (V', Cx, Cy, Cz)``.
``jacobians(events)``
    ``(JA, JC)``, each ``(..., 4, 4)`` with ``J[..., m, n] = d_m A^n`` where
    ``d_m = d/dx^m`` and ``x^0 = ct``.

Fields follow from the Jacobians alone, so the same assembly serves the
symbolic, closure and grid representations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .errors import DomainError, ShapeError
from .tensor import METRIC, FieldState, epsilon_upper_array

__all__ = [
    "T", "X", "Y", "Z", "COORDS",
    "AnalyticPotentials",
    "SymbolicPotentials",
    "GridPotentials",
    "GaugeScalars",
    "GridGaugeScalars",
    "fields_from_jacobians",
    "field_tensor_from_jacobians",
    "fields_from_potentials",
    "field_arrays",
    "apply_gauge",
    "lorenz_residuals",
    "superpose",
    "central_jacobian",
    "default_step",
]

T, X, Y, Z = sp.symbols("t x y z", real=True)
COORDS = (T, X, Y, Z)

_EPS = np.finfo(float).eps


def default_step(events: np.ndarray, scale: float = 1.0, power: float = 1 / 3) -> np.ndarray:
    """Per-coordinate central-difference step ``eps**power * max(scale, |coord|)``."""
    return _EPS**power * np.maximum(scale, np.abs(events))


def central_jacobian(func: Callable, events: np.ndarray, c: float, step=None, scale: float = 1.0):
    """``d_m f^n`` of a vectorized closure by second-order central differences.

    ``func`` maps ``(..., 4)`` events to ``(..., n)`` values.  ``step`` is the
    coordinate step in ``(t, x, y, z)`` units, either a scalar or per-axis.
    Returns ``(..., 4, n)``.
    """
    events = np.asarray(events, dtype=float)
    if step is None:
        h = default_step(events, scale)
    else:
        h = np.broadcast_to(np.asarray(step, dtype=float), events.shape)
    cols = []
    for m in range(4):
        shift = np.zeros(events.shape)
        shift[..., m] = h[..., m]
        # use the representable step so the denominator matches the stencil
        hi = events + shift
        lo = events - shift
        width = (hi[..., m] - lo[..., m])
        d = (np.asarray(func(hi)) - np.asarray(func(lo))) / width[..., None]
        if m == 0:
            d = d / c
        cols.append(d)
    return np.stack(cols, axis=-2)


def fields_from_jacobians(JA: np.ndarray, JC: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(E, B) arrays ``(..., 3)`` from potential Jacobians.

    E = -curl C - (1/c) dA/dt - grad V
    B =  curl A - (1/c) dC/dt - grad V'
    """
    def curl(J):
        return np.stack([
            J[..., 2, 3] - J[..., 3, 2],
            J[..., 3, 1] - J[..., 1, 3],
            J[..., 1, 2] - J[..., 2, 1],
        ], axis=-1)

    E = -curl(JC) - JA[..., 0, 1:] - JA[..., 1:, 0]
    B = curl(JA) - JC[..., 0, 1:] - JC[..., 1:, 0]
    return E, B


def field_tensor_from_jacobians(JA: np.ndarray, JC: np.ndarray) -> np.ndarray:
    """``F^ik = delta^{ik}_{pq} d^p A^q - eps^{ikpq} d_p C_q`` by explicit contraction."""
    g = np.diag(METRIC)
    dA_uu = g[:, None] * JA          # d^p A^q
    dC_dd = JC * g[None, :]          # d_p C_q
    delta = np.einsum("ip,kq->ikpq", np.eye(4), np.eye(4))
    delta = delta - delta.transpose(0, 1, 3, 2)
    return (np.einsum("ikpq,...pq->...ik", delta, dA_uu)
            - np.einsum("ikpq,...pq->...ik", epsilon_upper_array(), dC_dd))


class _PotentialBase:
    c: float

    def values(self, events):  # pragma: no cover - interface
        raise NotImplementedError

    def jacobians(self, events):  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class AnalyticPotentials(_PotentialBase):
    """Potentials given by vectorized closures.

    Parameters
    ----------
    A, C : callable
        ``events (..., 4) -> (..., 4)`` contravariant four-potentials.
    c : float
        Speed of light in code units.
    jac_A, jac_C : callable, optional
        Exact Jacobian closures ``events -> (..., 4, 4)`` with
        ``J[..., m, n] = d_m A^n``.  Central differences are used otherwise.
    step : float or array, optional
        Difference step in ``(t, x, y, z)`` units; cube-root-of-epsilon
        scaling when omitted.
    scale : float
        Length/time scale for the adaptive step.
    """

    A: Callable
    C: Callable
    c: float = 1.0
    jac_A: Callable | None = None
    jac_C: Callable | None = None
    step: object = None
    scale: float = 1.0

    def values(self, events):
        events = np.asarray(events, dtype=float)
        return np.asarray(self.A(events), dtype=float), np.asarray(self.C(events), dtype=float)

    def jacobians(self, events):
        events = np.asarray(events, dtype=float)
        if self.jac_A is not None:
            JA = np.asarray(self.jac_A(events), dtype=float)
        else:
            JA = central_jacobian(self.A, events, self.c, self.step, self.scale)
        if self.jac_C is not None:
            JC = np.asarray(self.jac_C(events), dtype=float)
        else:
            JC = central_jacobian(self.C, events, self.c, self.step, self.scale)
        return JA, JC

    def with_step(self, step) -> "AnalyticPotentials":
        """Copy that differentiates numerically with a fixed step."""
        return AnalyticPotentials(self.A, self.C, self.c, None, None, step, self.scale)


def superpose(*terms, c: float | None = None) -> AnalyticPotentials:
    """Weighted sum of potential representations.

    ``terms`` are potential objects or ``(weight, potential)`` pairs; the
    Jacobians are summed so exactness of each term is kept.
    """
    pairs = [t if isinstance(t, tuple) else (1.0, t) for t in terms]
    c = pairs[0][1].c if c is None else c

    def _sum(method):
        def f(ev):
            out_a = out_c = 0.0
            for w, p in pairs:
                a, cc = getattr(p, method)(ev)
                out_a = out_a + w * a
                out_c = out_c + w * cc
            return out_a, out_c
        return f

    vals = _sum("values")
    jacs = _sum("jacobians")
    return AnalyticPotentials(
        A=lambda ev: vals(ev)[0],
        C=lambda ev: vals(ev)[1],
        c=c,
        jac_A=lambda ev: jacs(ev)[0],
        jac_C=lambda ev: jacs(ev)[1],
    )


def _lambdify_components(exprs, shape):
    """Vectorized closure over ``(..., 4)`` events for a nested list of sympy exprs."""
    flat = [sp.sympify(e) for e in np.asarray(exprs, dtype=object).ravel()]
    fn = sp.lambdify(COORDS, flat, modules=["scipy", "numpy"])

    def call(events):
        events = np.asarray(events, dtype=float)
        cols = fn(events[..., 0], events[..., 1], events[..., 2], events[..., 3])
        cols = [np.broadcast_to(np.asarray(v, dtype=float), events.shape[:-1]) for v in cols]
        return np.stack(cols, axis=-1).reshape(events.shape[:-1] + shape)

    return call


class SymbolicPotentials(_PotentialBase):
    """Potentials as sympy expressions in ``(t, x, y, z)``; derivatives are exact.

    Parameters
    ----------
    A, C : sequence of 4 sympy expressions
        Contravariant components.
    c : float or sympy expression
    """

    def __init__(self, A, C, c=1):
        self.A = tuple(sp.sympify(a) for a in A)
        self.C = tuple(sp.sympify(a) for a in C)
        if len(self.A) != 4 or len(self.C) != 4:
            raise ValueError("each potential needs four components")
        self.c_sym = sp.sympify(c)
        self.c = float(self.c_sym)
        self._analytic = None

    def _d(self, expr, m):
        if m == 0:
            return sp.diff(expr, T) / self.c_sym
        return sp.diff(expr, COORDS[m])

    def jacobian_exprs(self):
        JA = [[self._d(self.A[n], m) for n in range(4)] for m in range(4)]
        JC = [[self._d(self.C[n], m) for n in range(4)] for m in range(4)]
        return JA, JC

    def fields(self) -> tuple[sp.Matrix, sp.Matrix]:
        """Symbolic (E, B) as 3x1 sympy matrices."""
        JA, JC = self.jacobian_exprs()

        def curl(J):
            return sp.Matrix([J[2][3] - J[3][2], J[3][1] - J[1][3], J[1][2] - J[2][1]])

        E = -curl(JC) - sp.Matrix(JA[0][1:]) - sp.Matrix([JA[m][0] for m in (1, 2, 3)])
        B = curl(JA) - sp.Matrix(JC[0][1:]) - sp.Matrix([JC[m][0] for m in (1, 2, 3)])
        return E, B

    def lorenz_exprs(self):
        JA, JC = self.jacobian_exprs()
        return sum(JA[m][m] for m in range(4)), sum(JC[m][m] for m in range(4))

    def to_analytic(self) -> AnalyticPotentials:
        if self._analytic is None:
            JA, JC = self.jacobian_exprs()
            self._analytic = AnalyticPotentials(
                A=_lambdify_components(self.A, (4,)),
                C=_lambdify_components(self.C, (4,)),
                c=self.c,
                jac_A=_lambdify_components(JA, (4, 4)),
                jac_C=_lambdify_components(JC, (4, 4)),
            )
        return self._analytic

    def values(self, events):
        return self.to_analytic().values(events)

    def jacobians(self, events):
        return self.to_analytic().jacobians(events)


@dataclass(frozen=True)
class GridPotentials(_PotentialBase):
    """Potentials sampled on a uniform ``(t, x, y, z)`` lattice.

    ``A`` and ``C`` have shape ``(4, nt, nx, ny, nz)``; node ``idx`` sits at
    ``origin + idx * spacing``.  Derivatives are second-order central
    differences and need a one-node margin on every axis.
    """

    A: np.ndarray
    C: np.ndarray
    spacing: tuple
    origin: tuple = (0.0, 0.0, 0.0, 0.0)
    c: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if A.shape != C.shape:
            raise ShapeError(f"A and C sampled differently: {A.shape} vs {C.shape}")
        if A.ndim != 5 or A.shape[0] != 4:
            raise ShapeError(f"expected (4, nt, nx, ny, nz), got {A.shape}")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 4 or min(spacing) <= 0:
            raise ValueError("grid spacings must be four positive numbers")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def sample(cls, source, origin, spacing, shape) -> "GridPotentials":
        """Sample any potential representation on a lattice."""
        ev = node_events(origin, spacing, shape)
        a, cc = source.values(ev)
        return cls(np.moveaxis(a, -1, 0), np.moveaxis(cc, -1, 0), spacing, origin, source.c)

    @property
    def shape(self) -> tuple:
        return self.A.shape[1:]

    def events(self) -> np.ndarray:
        return node_events(self.origin, self.spacing, self.shape)

    def index_of(self, event, margin: int = 1) -> tuple:
        """Lattice index of ``event``; it must coincide with a node."""
        pos = (np.asarray(event, dtype=float) - np.asarray(self.origin)) / np.asarray(self.spacing)
        idx = np.rint(pos).astype(int)
        if np.any(np.abs(pos - idx) > 1e-9 * np.maximum(1.0, np.abs(pos))):
            raise DomainError(f"event {tuple(event)} is not a lattice node")
        for n, i in zip(self.shape, idx):
            if i < margin or i > n - 1 - margin:
                raise DomainError(f"event {tuple(event)} lacks a {margin}-node stencil margin")
        return tuple(int(i) for i in idx)

    def _coord_steps(self):
        return (self.c * self.spacing[0],) + self.spacing[1:]

    def interior_jacobians(self) -> tuple[np.ndarray, np.ndarray]:
        """Jacobians on all interior nodes, shape ``(nt-2, nx-2, ny-2, nz-2, 4, 4)``."""
        return _grid_jacobian(self.A, self._coord_steps()), _grid_jacobian(self.C, self._coord_steps())

    def jacobians_at(self, idx) -> tuple[np.ndarray, np.ndarray]:
        h = self._coord_steps()
        out = []
        for arr in (self.A, self.C):
            J = np.empty((4, 4))
            for m in range(4):
                up = list(idx)
                dn = list(idx)
                up[m] += 1
                dn[m] -= 1
                J[m] = (arr[(slice(None),) + tuple(up)] - arr[(slice(None),) + tuple(dn)]) / (2 * h[m])
            out.append(J)
        return out[0], out[1]

    def values(self, events):
        events = np.asarray(events, dtype=float)
        flat = events.reshape(-1, 4)
        a = np.array([self.A[(slice(None),) + self.index_of(e, margin=0)] for e in flat])
        cc = np.array([self.C[(slice(None),) + self.index_of(e, margin=0)] for e in flat])
        return a.reshape(events.shape), cc.reshape(events.shape)

    def jacobians(self, events):
        events = np.asarray(events, dtype=float)
        flat = events.reshape(-1, 4)
        pairs = [self.jacobians_at(self.index_of(e)) for e in flat]
        JA = np.array([p[0] for p in pairs]).reshape(events.shape[:-1] + (4, 4))
        JC = np.array([p[1] for p in pairs]).reshape(events.shape[:-1] + (4, 4))
        return JA, JC

    def interior_fields(self) -> tuple[np.ndarray, np.ndarray]:
        JA, JC = self.interior_jacobians()
        return fields_from_jacobians(JA, JC)


def node_events(origin, spacing, shape) -> np.ndarray:
    axes = [o + s * np.arange(n) for o, s, n in zip(origin, spacing, shape)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _grid_jacobian(arr: np.ndarray, h) -> np.ndarray:
    """Central-difference Jacobian of a ``(4, nt, nx, ny, nz)`` sample on interior nodes."""
    inner = tuple(slice(1, -1) for _ in range(4))
    cols = []
    for m in range(4):
        up = list(inner)
        dn = list(inner)
        up[m] = slice(2, None)
        dn[m] = slice(None, -2)
        cols.append((arr[(slice(None),) + tuple(up)] - arr[(slice(None),) + tuple(dn)]) / (2 * h[m]))
    J = np.stack(cols, axis=0)          # (m, n, ...)
    return np.moveaxis(J, (0, 1), (-2, -1))


def field_arrays(p, events) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (E, B) at a batch of events."""
    JA, JC = p.jacobians(events)
    return fields_from_jacobians(JA, JC)


def fields_from_potentials(p, point) -> FieldState:
    """(E, B) at one event from any potential representation."""
    E, B = field_arrays(p, np.asarray(point, dtype=float)[None, :])
    return FieldState(E[0], B[0])


def lorenz_residuals(p, point) -> tuple[float, float]:
    """``(d_i A^i, d_i C^i)`` at one event."""
    JA, JC = p.jacobians(np.asarray(point, dtype=float)[None, :])
    return float(np.trace(JA[0])), float(np.trace(JC[0]))


class GaugeScalars:
    """Gauge functions ``psi`` and ``psi'``.

    Either sympy expressions in ``(t, x, y, z)`` (exact derivatives) or
    vectorized closures with optional gradient/Hessian closures in
    ``x^m`` coordinates (``x^0 = ct``).
    """

    def __init__(self, psi, psi_prime, c: float = 1.0, grad=None, hess=None):
        self.c = float(c)
        self.symbolic = isinstance(psi, sp.Basic) or isinstance(psi_prime, sp.Basic)
        if self.symbolic:
            self.psi = sp.sympify(psi)
            self.psi_prime = sp.sympify(psi_prime)
            self._grad = []
            self._hess = []
            csym = sp.nsimplify(c) if isinstance(c, (int, float)) else c
            d = lambda e, m: sp.diff(e, T) / csym if m == 0 else sp.diff(e, COORDS[m])  # noqa: E731
            for e in (self.psi, self.psi_prime):
                g = [d(e, m) for m in range(4)]
                self._grad.append(_lambdify_components(g, (4,)))
                self._hess.append(_lambdify_components([[d(gm, n) for n in range(4)] for gm in g], (4, 4)))
            self._csym = csym
        else:
            self.psi = psi
            self.psi_prime = psi_prime
            self._grad = list(grad) if grad is not None else [None, None]
            self._hess = list(hess) if hess is not None else [None, None]

    def gradient(self, which: int, events):
        """``d_m psi`` (lower index) at events, shape ``(..., 4)``."""
        fn = self._grad[which]
        if fn is not None:
            return fn(events)
        f = self.psi if which == 0 else self.psi_prime
        return central_jacobian(lambda ev: np.asarray(f(ev))[..., None], events, self.c)[..., 0]

    def hessian(self, which: int, events):
        fn = self._hess[which]
        if fn is not None:
            return fn(events)
        return central_jacobian(lambda ev: self.gradient(which, ev), events, self.c,
                                step=default_step(np.asarray(events), power=0.25))


@dataclass(frozen=True)
class GridGaugeScalars:
    """Gauge functions sampled on the lattice of a :class:`GridPotentials`."""

    psi: np.ndarray
    psi_prime: np.ndarray


_G = np.diag(METRIC)


def apply_gauge(p, g):
    """Gauge-transformed pair ``A* = A - d^i psi``, ``C* = C - d^i psi'``.

    Since ``d^i = ((1/c) d_t, -grad)``, the scalar part drops by
    ``(1/c) d_t psi`` and the vector part gains ``grad psi``.
    """
    if isinstance(p, SymbolicPotentials):
        if not (isinstance(g, GaugeScalars) and g.symbolic):
            raise TypeError("symbolic potentials need symbolic gauge scalars")
        c = p.c_sym

        def shifted(comp, psi):
            up = [sp.diff(psi, T) / c, -sp.diff(psi, X), -sp.diff(psi, Y), -sp.diff(psi, Z)]
            return [a - u for a, u in zip(comp, up)]

        return SymbolicPotentials(shifted(p.A, g.psi), shifted(p.C, g.psi_prime), c)

    if isinstance(p, GridPotentials):
        if isinstance(g, GridGaugeScalars):
            return _grid_gauge_sampled(p, g)
        ev = p.events()
        A = p.A.copy()
        C = p.C.copy()
        for arr, which in ((A, 0), (C, 1)):
            grad_up = g.gradient(which, ev) * _G   # d^m psi
            arr -= np.moveaxis(grad_up, -1, 0)
        return GridPotentials(A, C, p.spacing, p.origin, p.c)

    if isinstance(g, GridGaugeScalars):
        raise ShapeError("sampled gauge scalars need grid potentials")

    def vals(ev, which):
        base = p.values(ev)[which]
        return base - g.gradient(which, ev) * _G

    def jac(ev, which):
        base = p.jacobians(ev)[which]
        return base - g.hessian(which, ev) * _G[None, :]

    return AnalyticPotentials(
        A=lambda ev: vals(ev, 0),
        C=lambda ev: vals(ev, 1),
        c=p.c,
        jac_A=lambda ev: jac(ev, 0),
        jac_C=lambda ev: jac(ev, 1),
    )


def _grid_gauge_sampled(p: GridPotentials, g: GridGaugeScalars) -> GridPotentials:
    psi = np.asarray(g.psi, dtype=float)
    psi_p = np.asarray(g.psi_prime, dtype=float)
    if psi.shape != p.shape or psi_p.shape != p.shape:
        raise ShapeError(f"gauge scalars sampled on {psi.shape}/{psi_p.shape}, potentials on {p.shape}")
    h = p._coord_steps()
    inner = (slice(None),) + tuple(slice(1, -1) for _ in range(4))
    A = p.A[inner].copy()
    C = p.C[inner].copy()
    for arr, f in ((A, psi), (C, psi_p)):
        grad = _grid_jacobian(f[None], h)[..., 0]     # (..., 4) lower-index gradient
        arr -= np.moveaxis(grad * _G, -1, 0)
    origin = tuple(o + s for o, s in zip(p.origin, p.spacing))
    return GridPotentials(A, C, p.spacing, origin, p.c)
