import numpy as np
import pytest
from hypothesis import given, strategies as st

from dyonem.errors import ConfigurationError, NumericalError
from dyonem.grid import (
    DepositBuffer,
    FieldGrid,
    StepSources,
    bspline_weights,
    deposit_density,
    deposit_dyon_step,
    dual_map_fields,
    dual_map_sources,
    electrostatic_field,
    gather_fields,
    gauss_residuals,
    grid_step,
    magnetostatic_field,
    read_field_dump,
    stability_limit,
    surface_flux,
    write_field_dump,
)

FOUR_PI = 4 * np.pi


def plane_wave(k, c=1.0):
    def fn(t, pos):
        phase = np.cos(k * (pos[..., 0] - c * t))
        zero = np.zeros_like(phase)
        return np.stack([zero, phase, zero], -1), np.stack([zero, zero, phase], -1)
    return fn


def plane_wave_error(n, periods=1.0):
    h = 1.0 / n
    k = 2 * np.pi
    dt = 0.5 * h
    g = FieldGrid((n, 4, 4), h, dt)
    g.set_fields(plane_wave(k))
    steps = int(round(periods / dt))
    for _ in range(steps):
        g.step_inplace()
    exact = FieldGrid((n, 4, 4), h, dt, time=g.time)
    exact.set_fields(plane_wave(k))
    diff = np.concatenate([(g.E - exact.E).ravel(), (g.B - exact.B).ravel()])
    return np.sqrt(np.mean(diff**2))


def circling_dyon(n=16, q_e=0.3, q_m=-0.2, steps=40):
    """Grid with one dyon on a circle, started from its discrete static field."""
    h = 1.0 / n
    dt = 0.5 * stability_limit(h, 1.0)
    L3 = 1.0
    center = np.array([0.5, 0.5, 0.5])
    pos = lambda i: center + 0.2 * np.array([np.cos(0.3 * i), np.sin(0.3 * i), 0.1 * i / steps])
    buf = DepositBuffer((n, n, n), -q_e / L3, -q_m / L3)
    g = FieldGrid((n, n, n), h, dt)
    g.rho_e = deposit_density(g.shape, h, pos(0), q_e) - q_e / L3
    g.rho_m = deposit_density(g.shape, h, pos(0), q_m, offset=(0.5, 0.5, 0.5)) - q_m / L3
    g.add_static_fields()
    return g, buf, pos


def test_stability_bound():
    h = 0.1
    assert stability_limit(h, 2.0) == pytest.approx(h / (2 * np.sqrt(3)))
    g = FieldGrid((4, 4, 4), h, stability_limit(h, 1.0) * 1.01)
    with pytest.raises(ConfigurationError, match="stability"):
        g.step_inplace()


def test_bad_lattice_parameters():
    with pytest.raises(ConfigurationError):
        FieldGrid((4, 4), 0.1, 0.01)
    with pytest.raises(ConfigurationError):
        FieldGrid((4, 4, 4), -0.1, 0.01)
    with pytest.raises(ConfigurationError):
        FieldGrid((4, 4, 4), 0.1, 0.01, boundary="reflecting")
    with pytest.raises(ValueError):
        FieldGrid((4, 4, 4), 0.1, 0.01).step_inplace(splitting="EEB")


def test_grid_step_leaves_input_alone():
    g = FieldGrid((8, 4, 4), 0.125, 0.05)
    g.set_fields(plane_wave(2 * np.pi))
    before = g.E.copy()
    out = grid_step(g)
    assert np.array_equal(g.E, before)
    assert out.time == pytest.approx(0.05) and g.time == 0.0


def test_plane_wave_second_order():
    e1, e2 = plane_wave_error(16), plane_wave_error(32)
    assert np.log2(e1 / e2) == pytest.approx(2.0, abs=0.2)


def test_vacuum_energy_conserved_closely():
    g = FieldGrid((16, 4, 4), 1 / 16, 1 / 32)
    g.set_fields(plane_wave(2 * np.pi))
    w0 = g.field_energy()
    for _ in range(64):
        g.step_inplace()
    assert g.field_energy() == pytest.approx(w0, rel=1e-2)


def test_absorbing_boundary_drains_energy():
    g = FieldGrid((32, 4, 4), 1 / 32, 1 / 64, boundary="absorbing")
    g.set_fields(plane_wave(2 * np.pi))
    w0 = g.field_energy()
    for _ in range(64):
        g.step_inplace()
    assert g.field_energy() < 0.5 * w0


@given(st.floats(-3, 3), st.sampled_from([1, 2, 3]))
def test_bspline_partition_of_unity(s, order):
    i = np.arange(np.floor(s) - 3, np.ceil(s) + 4)
    assert np.sum(bspline_weights(order, s - i)) == pytest.approx(1.0, abs=1e-14)
    assert np.sum((s - i) * bspline_weights(order, s - i)) == pytest.approx(0.0, abs=1e-13)


def test_deposit_density_total_charge():
    rho = deposit_density((8, 8, 8), 0.25, [0.1, 1.9, 1.3], 2.5, order=3)
    assert rho.sum() * 0.25**3 == pytest.approx(2.5, rel=1e-14)
    with pytest.raises(ValueError):
        bspline_weights(4, np.zeros(3))


def test_gather_uniform_field_is_exact():
    g = FieldGrid((8, 8, 8), 0.25, 0.1)
    g.set_fields(lambda t, p: (np.broadcast_to([1.0, -2.0, 3.0], p.shape),
                               np.broadcast_to([0.5, 0.0, -1.0], p.shape)))
    E, B = gather_fields(g, [0.37, 1.91, 0.02])
    assert np.allclose(E, [1, -2, 3], atol=1e-14) and np.allclose(B, [0.5, 0, -1], atol=1e-14)


def test_static_solvers_satisfy_discrete_gauss(rng):
    rho = rng.normal(size=(8, 8, 8))
    rho -= rho.mean()
    g = FieldGrid((8, 8, 8), 0.2, 0.05, rho_e=rho, rho_m=-2 * rho)
    g.add_static_fields()
    rE, rB = gauss_residuals(g)
    assert np.abs(rE).max() < 1e-11 * np.abs(FOUR_PI * rho).max()
    assert np.abs(rB).max() < 1e-11 * np.abs(FOUR_PI * rho).max()
    assert np.allclose(electrostatic_field(rho + 3.0, 0.2), electrostatic_field(rho, 0.2), atol=1e-12)
    assert magnetostatic_field(np.zeros((4, 4, 4)), 1.0).shape == (3, 4, 4, 4)


def test_monopole_flux_is_enclosed_charge():
    n, h, q_m = 16, 1 / 16, 0.7
    rho = deposit_density((n,) * 3, h, [0.5, 0.5, 0.5], q_m, offset=(0.5, 0.5, 0.5)) - q_m
    g = FieldGrid((n,) * 3, h, 0.01, rho_m=rho)
    g.add_static_fields()
    lo, hi = (3, 3, 3), (13, 12, 14)
    enclosed = q_m * (1.0 - np.prod(np.subtract(hi, lo)) / n**3)   # minus neutralizing background
    assert surface_flux(g, "B", lo, hi) == pytest.approx(FOUR_PI * enclosed, rel=1e-13)
    assert abs(surface_flux(g, "E", lo, hi)) < 1e-13


def test_deposit_buffer_matches_fresh_deposit():
    shape, h, dt = (12, 12, 12), 1 / 12, 0.02
    buf = DepositBuffer(shape, -0.4, 0.25)
    x = np.array([0.3, 0.4, 0.5])
    for i in range(5):
        x1 = x + np.array([0.02, -0.01, 0.015 * i])
        got = buf.deposit(h, dt, x, x1, 0.4, -0.25)
        ref = deposit_dyon_step(shape, h, dt, x, x1, 0.4, -0.25)
        assert np.array_equal(got.je, ref.je) and np.array_equal(got.jm, ref.jm)
        assert np.array_equal(got.rho_e, ref.rho_e - 0.4)
        assert np.array_equal(got.rho_m, ref.rho_m + 0.25)
        x = x1


def test_gauss_laws_preserved_with_deposition():
    g, buf, pos = circling_dyon()
    scale = FOUR_PI * max(np.abs(g.rho_e).max(), np.abs(g.rho_m).max())
    for i in range(40):
        g.step_inplace(buf.deposit(g.h, g.dt, pos(i), pos(i + 1), 0.3, -0.2))
    rE, rB = gauss_residuals(g)
    assert np.abs(rE).max() < 1e-12 * scale and np.abs(rB).max() < 1e-12 * scale
    assert np.abs(g.E).max() > 0 and np.abs(g.B).max() > 0


def test_deposition_without_charge_breaks_gauss():
    g, buf, pos = circling_dyon()
    src = buf.deposit(g.h, g.dt, pos(0), pos(1), 0.3, -0.2)
    src.je *= 0.5
    g.step_inplace(src)
    assert np.abs(gauss_residuals(g)[0]).max() > 1e-3


def test_duality_map_is_exact_with_mirrored_splitting():
    g, buf, pos = circling_dyon(steps=10)
    d = dual_map_fields(g)
    for i in range(10):
        src = buf.deposit(g.h, g.dt, pos(i), pos(i + 1), 0.3, -0.2)
        dsrc = dual_map_sources(src)
        g.step_inplace(src, "BEB")
        d.step_inplace(dsrc, "EBE")
    mapped = dual_map_fields(g)
    for name in ("E", "B", "rho_e", "rho_m"):
        assert np.array_equal(getattr(mapped, name), getattr(d, name)), name


def test_dual_map_twice_is_negated_cell_shift(rng):
    g = FieldGrid((4, 5, 6), 0.1, 0.01, E=rng.normal(size=(3, 4, 5, 6)), B=rng.normal(size=(3, 4, 5, 6)))
    out = dual_map_fields(dual_map_fields(g))
    # two half-cell translations make one whole cell along each axis
    shift = lambda a: np.roll(a, (1, 1, 1), axis=(-3, -2, -1))
    assert np.array_equal(out.E, -shift(g.E)) and np.array_equal(out.B, -shift(g.B))
    s = StepSources(rng.normal(size=(3, 4, 5, 6)), rng.normal(size=(3, 4, 5, 6)))
    assert np.array_equal(dual_map_sources(dual_map_sources(s)).je, -shift(s.je))


def test_field_dump_round_trip(tmp_path, rng):
    g = FieldGrid((3, 4, 5), 0.5, 0.1, E=rng.normal(size=(3, 3, 4, 5)), B=rng.normal(size=(3, 3, 4, 5)),
                  rho_e=rng.normal(size=(3, 4, 5)), time=1.25)
    bin_path, hdr_path = write_field_dump(g, tmp_path / "f")
    assert (tmp_path / "f.bin").stat().st_size == 8 * 8 * 60
    header, arrays = read_field_dump(tmp_path / "f")
    assert header["dimensions"] == "3 4 5" and float(header["time"]) == 1.25
    assert header["units"] == "Gaussian"
    assert np.array_equal(arrays["Ey"], g.E[1]) and np.array_equal(arrays["Bz"], g.B[2])
    assert np.array_equal(arrays["rho_e"], g.rho_e) and not arrays["rho_m"].any()


def test_non_finite_fields_reported_with_step():
    g = FieldGrid((4, 4, 4), 0.1, 0.01)
    g.E[0, 1, 1, 1] = np.nan
    with pytest.raises(NumericalError, match="step 17"):
        g.check_finite(17)
