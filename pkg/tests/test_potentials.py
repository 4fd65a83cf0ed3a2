import numpy as np
import pytest
import sympy as sp

from dyonem.action import _F_uu
from dyonem.errors import DomainError, ShapeError
from dyonem.potentials import (
    COORDS,
    AnalyticPotentials,
    GaugeScalars,
    GridGaugeScalars,
    GridPotentials,
    SymbolicPotentials,
    apply_gauge,
    field_tensor_from_jacobians,
    fields_from_jacobians,
    fields_from_potentials,
    lorenz_residuals,
    superpose,
)
from dyonem.tensor import FieldState

T, X, Y, Z = COORDS
R = sp.sqrt(X**2 + Y**2 + Z**2)
zero4 = [0, 0, 0, 0]


def coulomb_closure(q):
    def V(ev):
        r = np.linalg.norm(ev[..., 1:], axis=-1)
        out = np.zeros(ev.shape)
        out[..., 0] = q / r
        return out
    return V


def plane_wave_symbolic(E0=1.0, k=2.0, c=1.0, carrier="A"):
    wave = E0 / k * sp.sin(k * X - k * c * T)
    A, C = list(zero4), list(zero4)
    if carrier == "A":
        A[2] = wave
    else:
        C[3] = wave
    return SymbolicPotentials(A, C, c)


def test_zero_potentials_give_zero_field():
    p = SymbolicPotentials(zero4, zero4)
    assert fields_from_potentials(p, [0.0, 1.0, 2.0, 3.0]) == FieldState.zero()


@pytest.mark.parametrize("point", [[0.0, 1.0, 0.0, 0.0], [0.3, -0.4, 1.2, 2.0]])
def test_coulomb_scalar_potentials(point):
    q, g = 3.0, -2.0
    p = SymbolicPotentials([q / R, 0, 0, 0], [g / R, 0, 0, 0])
    f = fields_from_potentials(p, point)
    r = np.asarray(point[1:])
    expect = r / np.linalg.norm(r) ** 3
    assert np.allclose(f.E, q * expect, rtol=1e-14, atol=0)
    assert np.allclose(f.B, g * expect, rtol=1e-14, atol=0)


def test_coulomb_by_central_differences():
    p = AnalyticPotentials(coulomb_closure(2.0), lambda ev: np.zeros(ev.shape), scale=1.0)
    f = fields_from_potentials(p, [0.0, 1.5, 0.0, 0.0])
    assert np.allclose(f.E, [2.0 / 1.5**2, 0, 0], rtol=1e-9)
    assert np.allclose(f.B, 0.0, atol=1e-9)


def test_tensor_assembly_matches_vector_relations(rng):
    JA = rng.normal(size=(10, 4, 4))
    JC = rng.normal(size=(10, 4, 4))
    E, B = fields_from_jacobians(JA, JC)
    assert np.allclose(field_tensor_from_jacobians(JA, JC), _F_uu(E, B), atol=1e-14)


def test_swapping_potentials_is_duality(rng):
    JA = rng.normal(size=(5, 4, 4))
    JC = rng.normal(size=(5, 4, 4))
    E, B = fields_from_jacobians(JA, JC)
    E2, B2 = fields_from_jacobians(JC, -JA)
    assert np.array_equal(E2, B) and np.array_equal(B2, -E)


def test_plane_wave_in_either_potential():
    ev = np.array([[0.3, 0.1, 0.2, -0.5]])
    for carrier in "AC":
        p = plane_wave_symbolic(carrier=carrier)
        E, B = fields_from_jacobians(*p.jacobians(ev))
        phase = 2.0 * 0.1 - 2.0 * 0.3
        assert np.allclose(E[0], [0, np.cos(phase), 0], atol=1e-15)
        assert np.allclose(B[0], [0, 0, np.cos(phase)], atol=1e-15)


def test_superpose_keeps_exact_jacobians():
    a = plane_wave_symbolic(carrier="A").to_analytic()
    b = plane_wave_symbolic(carrier="C").to_analytic()
    s = superpose((0.5, a), (0.5, b))
    assert s.jac_A is not None
    ev = np.array([[0.0, 0.25, 0, 0]])
    E, B = fields_from_jacobians(*s.jacobians(ev))
    assert np.allclose(E[0], [0, np.cos(0.5), 0], atol=1e-15)


def test_gauge_constant_is_identity():
    p = plane_wave_symbolic()
    q = apply_gauge(p, GaugeScalars(sp.Integer(5), sp.Integer(-2)))
    assert q.A == p.A and q.C == p.C


def test_gauge_linear_in_time_shifts_scalar_potential():
    c = 3.0
    p = SymbolicPotentials([X, Y, 0, 0], zero4, c)
    q = apply_gauge(p, GaugeScalars(c * T, sp.Integer(0), c=c))
    assert sp.simplify(q.A[0] - (p.A[0] - 1)) == 0
    assert q.A[1:] == p.A[1:]


def test_symbolic_gauge_invariance_exact():
    p = plane_wave_symbolic()
    psi = sp.exp(-(X**2 + Y**2 + Z**2) - T**2) + X**2 * T - 3 * Y * Z
    psi_p = sp.sin(X * Y) * T**3
    q = apply_gauge(p, GaugeScalars(psi, psi_p))
    Ep, Bp = p.fields()
    Eq, Bq = q.fields()
    assert sp.simplify(Eq - Ep) == sp.zeros(3, 1)
    assert sp.simplify(Bq - Bp) == sp.zeros(3, 1)


def test_closure_gauge_invariance(rng):
    p = plane_wave_symbolic().to_analytic()
    g = GaugeScalars(sp.exp(-(X**2 + Y**2) - T**2) * Z, X * Y * Z * T)
    q = apply_gauge(p, g)
    ev = rng.normal(size=(20, 4))
    Ep, Bp = fields_from_jacobians(*p.jacobians(ev))
    Eq, Bq = fields_from_jacobians(*q.jacobians(ev))
    assert np.abs(Eq - Ep).max() < 1e-13
    assert np.abs(Bq - Bp).max() < 1e-13


def _grid_gauge_error(n):
    p = plane_wave_symbolic(k=2.0)
    h = 1.0 / n
    shape = (5, 5, 5, 5)
    origin = (0.1, 0.2, -0.1, 0.05)
    grid = GridPotentials.sample(p, origin, (h,) * 4, shape)
    g = GaugeScalars(sp.exp(-((X - 0.2) ** 2 + (Y - 0.1) ** 2) - (T - 0.1) ** 2) + X**2 * Y * T,
                     sp.cos(3 * X + Y - 2 * T))
    moved = apply_gauge(grid, g)
    E0, B0 = grid.interior_fields()
    E1, B1 = moved.interior_fields()
    return max(np.abs(E1 - E0).max(), np.abs(B1 - B0).max())


def test_grid_gauge_invariance_second_order():
    errs = [_grid_gauge_error(n) for n in (20, 40, 80)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.2), orders


def test_sampled_gauge_commutes_exactly():
    p = plane_wave_symbolic()
    h = 0.05
    shape = (6, 6, 6, 6)
    grid = GridPotentials.sample(p, (0, 0, 0, 0), (h,) * 4, shape)
    ev = grid.events()
    psi = np.sin(ev[..., 1] * ev[..., 0]) + ev[..., 2] ** 2
    psi_p = np.exp(-ev[..., 3] ** 2)
    moved = apply_gauge(grid, GridGaugeScalars(psi, psi_p))
    assert moved.shape == (4, 4, 4, 4)
    E0, B0 = grid.interior_fields()
    E1, B1 = moved.interior_fields()
    assert np.abs(E1 - E0[1:-1, 1:-1, 1:-1, 1:-1]).max() < 1e-12
    assert np.abs(B1 - B0[1:-1, 1:-1, 1:-1, 1:-1]).max() < 1e-12


def test_gauge_shape_mismatch():
    grid = GridPotentials.sample(plane_wave_symbolic(), (0, 0, 0, 0), (0.1,) * 4, (4, 4, 4, 4))
    bad = GridGaugeScalars(np.zeros((3, 4, 4, 4)), np.zeros((4, 4, 4, 4)))
    with pytest.raises(ShapeError):
        apply_gauge(grid, bad)
    with pytest.raises(ShapeError):
        GridPotentials(np.zeros((4, 3, 3, 3, 3)), np.zeros((4, 3, 3, 3, 4)), (1, 1, 1, 1))


def test_grid_domain_errors():
    grid = GridPotentials.sample(plane_wave_symbolic(), (0, 0, 0, 0), (0.1,) * 4, (4, 4, 4, 4))
    with pytest.raises(DomainError):
        fields_from_potentials(grid, [0.0, 0.1, 0.1, 0.1])      # on the boundary
    with pytest.raises(DomainError):
        fields_from_potentials(grid, [0.1, 0.15, 0.1, 0.1])     # between nodes
    f = fields_from_potentials(grid, [0.1, 0.1, 0.2, 0.1])
    assert np.isfinite(f.E).all()


def test_lorenz_residuals_static_coulomb():
    p = SymbolicPotentials([2 / R, 0, 0, 0], [1 / R, 0, 0, 0])
    assert lorenz_residuals(p, [0.0, 1.0, 1.0, 0.0]) == (0.0, 0.0)


def test_lorenz_residual_of_wave_gauge_function():
    """A^i = d^i psi with a solution of the wave equation is in Lorenz gauge."""
    psi = sp.sin(2 * X + Y - sp.sqrt(5) * T)
    up = [sp.diff(psi, T), -sp.diff(psi, X), -sp.diff(psi, Y), -sp.diff(psi, Z)]
    p = SymbolicPotentials(up, zero4)
    assert sp.simplify(p.lorenz_exprs()[0]) == 0
    errs = []
    point = np.array([0.3, 0.2, 0.1, 0.4])
    for n in (10, 20, 40):
        h = 1.0 / n
        grid = GridPotentials.sample(p, tuple(point - h), (h,) * 4, (3, 3, 3, 3))
        errs.append(abs(lorenz_residuals(grid, grid.events()[1, 1, 1, 1])[0]))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.2)
