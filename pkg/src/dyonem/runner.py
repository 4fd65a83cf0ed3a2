"""Execute scenarios and summarize their records.

Output layout inside ``output_dir``:

``records.jsonl``
    One JSON object per recorded step: ``step``, ``time``, ``particles``
    (``x``, ``v``, ``gamma``, ``kinetic_energy``, ``energy``, ``momentum``) and
    ``field`` (``null`` unless the fields live on a lattice).
``summary.json``
    Result of :func:`emit_report` plus run metadata.
``dumps/field_<step>.bin`` and ``.hdr``
    Lattice snapshots, see :func:`dyonem.grid.write_field_dump`.

In grid mode every particle carries its own lattice holding its self-field,
and one more lattice carries the external field.  The physical field is the
sum.  A particle is pushed by the sum of all lattices except its own, so the
energy and momentum that balance the particles are those of the field minus
the self-field energies.
"""
from __future__ import annotations

import json
import math
import os
import dataclasses
from pathlib import Path

import numpy as np
import sympy as sp

from .dynamics import DyonState, boris_kick, effective_fields, fit_circle, push_dyon
from .errors import ConfigurationError, NumericalError
from .grid import (
    CENTER_OFFSET,
    NODE_OFFSET,
    DepositBuffer,
    FieldGrid,
    deposit_density,
    gather_fields,
    gauss_residuals,
    read_field_dump,
    write_field_dump,
)
from .potentials import COORDS, SymbolicPotentials, fields_from_jacobians
from .scenario import Scenario, scenario_to_dict
from .tensor import FieldState, run_identity_suite

__all__ = ["run", "emit_report", "build_particles", "analytic_field_function", "RunResult"]

EPS = np.finfo(float).eps


@dataclasses.dataclass
class RunResult:
    summary: dict
    records_path: Path
    summary_path: Path
    dump_paths: list


def _f(x) -> float:
    # adding 0.0 folds -0.0 into 0.0 so equal runs print equal text
    return float(x) + 0.0


def _vec(v) -> list:
    return [_f(a) for a in v]


def build_particles(s: Scenario) -> list[DyonState]:
    """Listed particles followed by those drawn from the seeded generator."""
    out = [DyonState.from_velocity(p.m0, p.q_e, p.q_m, p.x0, p.v0, 0.0, s.c) for p in s.particles]
    r = s.random_particles
    if r.count:
        rng = np.random.default_rng(s.seed)
        for _ in range(r.count):
            x = rng.uniform(r.lo, r.hi, size=3)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            speed = rng.uniform(0.0, r.max_speed)
            out.append(DyonState.from_velocity(r.m0, r.q_e, r.q_m, x, speed * direction, 0.0, s.c))
    return out


def _symbolic_preset(s: Scenario) -> SymbolicPotentials:
    f = s.field
    T, X, Y, Z = COORDS
    r = sp.Matrix([X, Y, Z])
    zero = [sp.Integer(0)] * 4
    A, C = list(zero), list(zero)
    E = sp.Matrix([sp.nsimplify(v) if float(v).is_integer() else sp.Float(v) for v in f.E])
    B = sp.Matrix([sp.nsimplify(v) if float(v).is_integer() else sp.Float(v) for v in f.B])
    if f.preset == "uniform":
        if f.split == "scalar":
            A[0] = -E.dot(r)
            C[0] = -B.dot(r)
        else:
            a = B.cross(r) / 2
            cc = -E.cross(r) / 2
            A[1:] = list(a)
            C[1:] = list(cc)
    elif f.preset == "plane-wave":
        k = sp.Float(f.wavenumber)
        phase = k * X - k * s.c * T
        wave = sp.Float(f.amplitude) / k * sp.sin(phase)
        if f.polarization == "A":
            A[2] = wave
        else:
            C[3] = wave
    elif f.preset == "point-dyon":
        x0 = [sp.Float(v) for v in f.position]
        dist = sp.sqrt((X - x0[0]) ** 2 + (Y - x0[1]) ** 2 + (Z - x0[2]) ** 2)
        A[0] = sp.Float(f.q_e) / dist
        C[0] = sp.Float(f.q_m) / dist
    return SymbolicPotentials(A, C, c=s.c)


def analytic_field_function(s: Scenario):
    """``event -> FieldState`` for the external field of an analytic scenario."""
    p = _symbolic_preset(s).to_analytic()

    def field_at(event):
        JA, JC = p.jacobians(np.asarray(event, dtype=float)[None, :])
        E, B = fields_from_jacobians(JA, JC)
        return FieldState(E[0], B[0])

    return field_at


def _particle_row(d: DyonState, u=None) -> dict:
    if u is not None and u is not d.u:
        d = dataclasses.replace(d, u=u)
    return {
        "x": _vec(d.x),
        "v": _vec(d.velocity),
        "gamma": _f(d.gamma),
        "kinetic_energy": _f(d.kinetic_energy),
        "energy": _f(d.energy),
        "momentum": _vec(d.momentum),
    }


class _RecordWriter:
    def __init__(self, path: Path):
        self.path = path
        self.fh = open(path, "w")
        self.rows = []

    def write(self, row: dict) -> None:
        self.rows.append(row)
        self.fh.write(json.dumps(row, allow_nan=True) + "\n")

    def close(self):
        self.fh.close()


def _check_particles(particles, step):
    for d in particles:
        if not (np.all(np.isfinite(d.x)) and np.all(np.isfinite(d.u))):
            raise NumericalError(f"non-finite particle state at step {step}")


def _run_analytic(s: Scenario, writer, particles):
    field_at = analytic_field_function(s)
    cadence = s.diagnostics.cadence
    for n in range(s.steps + 1):
        if n % cadence == 0 or n == s.steps:
            writer.write({
                "step": n,
                "time": _f(n * s.dt),
                "particles": [_particle_row(d) for d in particles],
                "field": None,
            })
        if n == s.steps:
            break
        particles = [push_dyon(d, field_at, s.dt) for d in particles]
        _check_particles(particles, n + 1)
    return particles, []


def _external_grid(s: Scenario) -> FieldGrid:
    g = s.grid
    ext = FieldGrid(g.shape, g.h, s.dt, s.c, boundary=g.boundary)
    f = s.field
    if f.preset == "uniform":
        ext.E[:] = np.asarray(f.E)[:, None, None, None]
        ext.B[:] = np.asarray(f.B)[:, None, None, None]
    elif f.preset == "plane-wave":
        k = f.wavenumber if f.wavenumber is not None else 2 * np.pi / g.extent[0]
        E0 = f.amplitude

        def wave(t, pos):
            val = E0 * np.cos(k * pos[..., 0] - k * s.c * t)
            z = np.zeros_like(val)
            return np.stack([z, val, z], axis=-1), np.stack([z, z, val], axis=-1)

        ext.set_fields(wave, 0.0)
    elif f.preset == "point-dyon":
        ext.rho_e = deposit_density(ext.shape, g.h, f.position, f.q_e, g.shape_order, NODE_OFFSET)
        ext.rho_m = deposit_density(ext.shape, g.h, f.position, f.q_m, g.shape_order, CENTER_OFFSET)
        ext.rho_e -= ext.rho_e.mean()
        ext.rho_m -= ext.rho_m.mean()
        ext.add_static_fields()
    elif f.preset == "grid-init":
        header, arrays = read_field_dump(f.path)
        dims = tuple(int(v) for v in header["dimensions"].split())
        if dims != ext.shape or not math.isclose(float(header["spacing"]), g.h, rel_tol=1e-12):
            raise ConfigurationError(
                f"field dump {f.path} has dimensions {dims} and spacing {header['spacing']}, "
                f"scenario needs {ext.shape} and {g.h}"
            )
        ext.E = np.stack([arrays[k] for k in ("Ex", "Ey", "Ez")]).copy()
        ext.B = np.stack([arrays[k] for k in ("Bx", "By", "Bz")]).copy()
        ext.rho_e = arrays["rho_e"].copy()
        ext.rho_m = arrays["rho_m"].copy()
    ext.check_stability()
    return ext


def _self_grid(s: Scenario, d: DyonState) -> tuple[FieldGrid, DepositBuffer]:
    g = s.grid
    sg = FieldGrid(g.shape, g.h, s.dt, s.c, boundary=g.boundary)
    sg.rho_e = deposit_density(sg.shape, g.h, d.x, d.q_e, g.shape_order, NODE_OFFSET)
    sg.rho_m = deposit_density(sg.shape, g.h, d.x, d.q_m, g.shape_order, CENTER_OFFSET)
    # uniform neutralizing background so the periodic problem is solvable
    bg_e, bg_m = -sg.rho_e.mean(), -sg.rho_m.mean()
    sg.rho_e += bg_e
    sg.rho_m += bg_m
    sg.add_static_fields()
    return sg, DepositBuffer(sg.shape, bg_e, bg_m)


def _sum_grids(grids) -> FieldGrid:
    total = grids[0].copy()
    for g in grids[1:]:
        total.E += g.E
        total.B += g.B
        total.rho_e += g.rho_e
        total.rho_m += g.rho_m
    return total


def _field_row(ext, selfs) -> dict:
    grids = [ext] + selfs
    total = _sum_grids(grids)
    res_e = np.zeros(ext.shape)
    res_m = np.zeros(ext.shape)
    for g in grids:
        re, rm = gauss_residuals(g)
        res_e += re
        res_m += rm
    W_total = total.field_energy()
    P_total = total.field_momentum()
    W_self = sum(g.field_energy() for g in selfs)
    P_self = sum((g.field_momentum() for g in selfs), np.zeros(3))
    return {
        "gauss_residual_e": _f(np.max(np.abs(res_e))),
        "gauss_residual_m": _f(np.max(np.abs(res_m))),
        "charge_scale_e": _f(4 * np.pi * np.max(np.abs(total.rho_e))),
        "charge_scale_m": _f(4 * np.pi * np.max(np.abs(total.rho_m))),
        "energy": _f(W_total),
        "momentum": _vec(P_total),
        "self_energy": _f(W_self),
        "self_momentum": _vec(P_self),
        "net_energy": _f(W_total - W_self),
        "net_momentum": _vec(P_total - P_self),
    }


def _run_grid(s: Scenario, writer, particles, dump_dir):
    g = s.grid
    dt, c = s.dt, s.c
    ext = _external_grid(s)
    selfs, buffers = [], []
    if g.self_field:
        for d in particles:
            sg, buf = _self_grid(s, d)
            selfs.append(sg)
            buffers.append(buf)

    def pushing_fields(i, x):
        others = [ext] + [sg for j, sg in enumerate(selfs) if j != i]
        E = np.zeros(3)
        B = np.zeros(3)
        for og in others:
            e, b = gather_fields(og, x, g.shape_order)
            E += e
            B += b
        return FieldState(E, B)

    # leapfrog: positions at integer steps, u at half steps
    u_half = []
    for i, d in enumerate(particles):
        E_eff, B_eff = effective_fields(d, pushing_fields(i, d.x))
        u_half.append(boris_kick(d.u, E_eff, B_eff, -0.5 * dt, c))

    dumps = []
    cadence = s.diagnostics.cadence
    for n in range(s.steps + 1):
        u_next = []
        for i, d in enumerate(particles):
            E_eff, B_eff = effective_fields(d, pushing_fields(i, d.x))
            u_next.append(boris_kick(u_half[i], E_eff, B_eff, dt, c))
        if n % cadence == 0 or n == s.steps:
            writer.write({
                "step": n,
                "time": _f(n * dt),
                "particles": [_particle_row(d, 0.5 * (u_half[i] + u_next[i]))
                              for i, d in enumerate(particles)],
                "field": _field_row(ext, selfs),
            })
        if s.output.dump_every and (n % s.output.dump_every == 0 or n == s.steps):
            dumps.append(write_field_dump(_sum_grids([ext] + selfs), dump_dir / f"field_{n:06d}"))
        if n == s.steps:
            break
        u_half = u_next
        moved = []
        for i, d in enumerate(particles):
            u = u_half[i]
            x1 = d.x + dt * u / np.sqrt(1.0 + (u @ u) / c**2)
            if selfs:
                src = buffers[i].deposit(g.h, dt, d.x, x1, d.q_e, d.q_m, g.shape_order)
                selfs[i].step_inplace(src, s.splitting)
            moved.append(DyonState(d.m0, d.q_e, d.q_m, x1, u, d.t + dt, c))
        ext.step_inplace(None, s.splitting)
        particles = moved
        _check_particles(particles, n + 1)
        for grid in [ext] + selfs:
            grid.check_finite(n + 1)
    return particles, dumps


def _drift_scale(records) -> tuple[float, float]:
    """Magnitudes against which rounding in the bookkeeping is measured."""
    e_scale, p_scale = 0.0, 0.0
    for r in records:
        e = sum(abs(p["energy"]) for p in r["particles"])
        pm = sum(np.linalg.norm(p["momentum"]) for p in r["particles"])
        f = r.get("field")
        if f:
            e += abs(f["energy"]) + abs(f["self_energy"])
            pm += np.linalg.norm(f["momentum"]) + np.linalg.norm(f["self_momentum"])
            pm += (abs(f["energy"]) + abs(f["self_energy"]))  # E x B / c is bounded by W / c
        e_scale, p_scale = max(e_scale, e), max(p_scale, pm)
    return e_scale, p_scale


def _totals(r) -> tuple[float, np.ndarray]:
    E = sum(p["energy"] for p in r["particles"])
    P = sum((np.asarray(p["momentum"]) for p in r["particles"]), np.zeros(3))
    f = r.get("field")
    if f:
        E += f["net_energy"]
        P = P + np.asarray(f["net_momentum"])
    return E, P


def emit_report(records) -> dict:
    """Conservation and orbit diagnostics from a record stream.

    Energy and momentum totals add the particle values to the field values
    with self-fields removed; when the field is prescribed (no lattice) only
    the particles enter.  Drifts are the largest deviation from the first
    record.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty record stream")
    E0, P0 = _totals(records[0])
    e_drift, p_drift = 0.0, 0.0
    for r in records:
        E, P = _totals(r)
        e_drift = max(e_drift, abs(E - E0))
        p_drift = max(p_drift, float(np.linalg.norm(P - P0)))
    has_field = records[0].get("field") is not None
    out = {
        "records": len(records),
        "first_step": records[0]["step"],
        "last_step": records[-1]["step"],
        "final_time": records[-1]["time"],
        "energy_accounting": "field minus self-field plus particles" if has_field else "particles only",
        "total_energy_initial": E0,
        "energy_drift": e_drift,
        "momentum_drift": p_drift,
    }
    if has_field:
        out["gauss_residual_e_max"] = max(r["field"]["gauss_residual_e"] for r in records)
        out["gauss_residual_m_max"] = max(r["field"]["gauss_residual_m"] for r in records)
        out["charge_scale_e"] = max(r["field"]["charge_scale_e"] for r in records)
        out["charge_scale_m"] = max(r["field"]["charge_scale_m"] for r in records)
        out["field_energy_drift"] = max(abs(r["field"]["energy"] - records[0]["field"]["energy"]) for r in records)
    nparticles = len(records[0]["particles"])
    parts = []
    for i in range(nparticles):
        xs = np.array([r["particles"][i]["x"] for r in records])
        kin = np.array([r["particles"][i]["kinetic_energy"] for r in records])
        entry = {
            "kinetic_energy_drift": float(np.max(np.abs(kin - kin[0]))),
            "gyroradius": _gyroradius(xs),
        }
        parts.append(entry)
    out["particles"] = parts
    return out


def _gyroradius(xs: np.ndarray):
    """Radius of the best circle through the positions, in their best-fit plane."""
    if len(xs) < 3:
        return None
    centered = xs - xs.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        return None
    plane = centered @ vt[:2].T
    _, radius = fit_circle(plane)
    return radius


def _expected_gyroradius(s: Scenario, d: DyonState):
    if s.field.preset != "uniform":
        return None
    f = FieldState(np.asarray(s.field.E), np.asarray(s.field.B))
    E_eff, B_eff = effective_fields(d, f)
    b = np.linalg.norm(B_eff)
    if b == 0 or np.any(E_eff != 0):
        return None
    u_perp = d.u - (d.u @ B_eff) * B_eff / b**2
    return float(np.linalg.norm(u_perp) * s.c / b)


def _estimate(s: Scenario, summary, records):
    """Drift bound ``O(h^2) + O(dt^2)`` from a companion run at 2h and 2dt.

    The coarse drift is scaled by 1/4 for second order and doubled for
    safety; a rounding floor covers runs whose truncation drift vanishes.
    """
    g = s.grid
    shape = g.shape
    e_scale, p_scale = _drift_scale(records)
    ncells = float(np.prod(shape))
    nsteps = max(1, s.steps)
    floor = 64 * EPS * math.sqrt(ncells * nsteps)
    est = {"energy_rounding_floor": floor * e_scale, "momentum_rounding_floor": floor * p_scale}
    coarse_ok = all(n % 2 == 0 and n // 2 >= 2 * g.shape_order + 2 for n in shape) and s.steps >= 2
    if coarse_ok and s.diagnostics.error_estimate:
        coarse = dataclasses.replace(
            s,
            dt=2 * s.dt,
            steps=s.steps // 2,
            grid=dataclasses.replace(g, h=2 * g.h),
            diagnostics=dataclasses.replace(s.diagnostics, cadence=1, error_estimate=False),
            output=dataclasses.replace(s.output, dump_every=0),
        )
        rows = []

        class _Mem:
            def write(self, row):
                rows.append(row)

        _run_grid(coarse, _Mem(), build_particles(coarse), None)
        crep = emit_report(rows)
        est["coarse_energy_drift"] = crep["energy_drift"]
        est["coarse_momentum_drift"] = crep["momentum_drift"]
        est["energy_drift_estimate"] = 2 * crep["energy_drift"] / 4 + est["energy_rounding_floor"]
        est["momentum_drift_estimate"] = 2 * crep["momentum_drift"] / 4 + est["momentum_rounding_floor"]
    else:
        est["energy_drift_estimate"] = None
        est["momentum_drift_estimate"] = None
    est["energy_within_estimate"] = (
        None if est["energy_drift_estimate"] is None else bool(summary["energy_drift"] <= est["energy_drift_estimate"])
    )
    est["momentum_within_estimate"] = (
        None if est["momentum_drift_estimate"] is None
        else bool(summary["momentum_drift"] <= est["momentum_drift_estimate"])
    )
    return est


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(s: Scenario, output_dir=".", seed: int | None = None, threads: int | None = None) -> RunResult:
    """Execute ``s`` and write records, summary and dumps under ``output_dir``.

    Raises :class:`NumericalError` (after writing a summary marked aborted)
    when a non-finite value appears.
    """
    if seed is not None:
        s = s.with_seed(seed)
    if threads is not None:
        if threads < 1:
            raise ConfigurationError("threads must be at least 1")
        import numba

        numba.set_num_threads(min(int(threads), numba.config.NUMBA_NUM_THREADS))
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from None
    records_path = out / s.output.records
    summary_path = out / s.output.summary
    meta = {"mode": s.mode, "seed": s.seed, "label": s.output.label, "scenario": scenario_to_dict(s)}

    if s.mode == "identity-suite":
        results = run_identity_suite()
        with open(records_path, "w") as fh:
            for name, (count, failures) in results.items():
                fh.write(json.dumps({"identity": name, "checked": count, "failures": len(failures),
                                     "failing_tuples": [list(t) for t in failures]}) + "\n")
        summary = {
            **meta,
            "status": "ok" if all(not f for _, f in results.values()) else "failed",
            "identities": {k: {"checked": c, "failures": len(f)} for k, (c, f) in results.items()},
        }
        _write_json(summary_path, summary)
        if summary["status"] != "ok":
            raise NumericalError("identity suite reported failures")
        return RunResult(summary, records_path, summary_path, [])

    particles = build_particles(s)
    writer = _RecordWriter(records_path)
    dump_dir = out / "dumps"
    if s.output.dump_every and s.mode == "grid-evolution":
        dump_dir.mkdir(exist_ok=True)
    try:
        if s.mode == "analytic-fields":
            _, dumps = _run_analytic(s, writer, particles)
        else:
            _, dumps = _run_grid(s, writer, particles, dump_dir)
    except NumericalError as exc:
        writer.close()
        _write_json(summary_path, {**meta, "status": "aborted", "error": str(exc),
                                   "records": len(writer.rows)})
        raise
    writer.close()

    summary = {**meta, "status": "ok", **emit_report(writer.rows)}
    for i, d in enumerate(particles):
        summary["particles"][i]["gyroradius_expected"] = _expected_gyroradius(s, d)
    if s.mode == "grid-evolution":
        summary["error_estimate"] = _estimate(s, summary, writer.rows)
    summary["dumps"] = [os.path.relpath(b, out) for b, _ in dumps]
    _write_json(summary_path, summary)
    return RunResult(summary, records_path, summary_path, [Path(b) for b, _ in dumps])
