"""Configuration-driven command line: k-sweeps and spectral scans to CSV/JSON.

A run description is a single JSON object with four blocks::

    {
      "geometry": {"kind": "ring", "radius": 1.0, "angles": [0.0]},
      "boundary": {"kind": "neumann_type", "B": ..., "A": ..., "C": ...},
      "task":     {"type": "smatrix_sweep", "k_min": 0.1, "k_max": 3.0, "steps": 200},
      "output":   {"format": "csv", "path": "sweep.csv"}
    }

Matrices are arrays of rows of [re, im] pairs.  Geometry kind "none" (with a
lead count "n") runs pure-vertex conditions without a manifold.  Singular
energies never abort a sweep; the row is flagged instead.  Exit codes:
0 ok, 1 error, 2 every row singular.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import boundary, geometry, scattering, spectral
from .geometry import SingularAtEnergy
from .numerics import SingularMatrix
from .scattering import UnitarityError

_MAX_WORKERS = 8


class SchemaError(Exception):
    """Config validation failure, with a JSON-pointer-style path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        raise SchemaError(path or "/", "expected an object")
    if key not in obj:
        raise SchemaError(f"{path}/{key}", "missing")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"{path}/{key}", f"expected {kind.__name__}")
    return val


def _number(obj, key, path):
    val = _get(obj, key, path)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"{path}/{key}", "expected a number")
    return float(val)


def _complex_scalar(val, path):
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(val)
    if isinstance(val, list) and len(val) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        return complex(val[0], val[1])
    raise SchemaError(path, "expected a number or an [re, im] pair")


def _matrix(val, path):
    if not isinstance(val, list) or not val:
        raise SchemaError(path, "expected a non-empty array of rows")
    rows = []
    for i, row in enumerate(val):
        if not isinstance(row, list):
            raise SchemaError(f"{path}/{i}", "expected a row array")
        rows.append([_complex_scalar(v, f"{path}/{i}/{j}") for j, v in enumerate(row)])
    if any(len(r) != len(rows[0]) for r in rows):
        raise SchemaError(path, "ragged rows")
    return np.array(rows, dtype=complex)


def _real_vector(val, path):
    if not isinstance(val, list):
        raise SchemaError(path, "expected an array")
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{path}/{i}", "expected a number")
        out.append(float(v))
    return out


class _NoManifold:
    """Trivial provider for pure-vertex boundary conditions (Q0 = 0)."""

    def __init__(self, n):
        self.n = n

    def q0(self, p, tol=1e-10):
        return np.zeros((self.n, self.n), dtype=complex)

    def spectrum_hint(self, e_max):
        return []


def _build_geometry(cfg, path="/geometry"):
    kind = _get(cfg, "kind", path, str)
    try:
        if kind == "none":
            n = int(_number(cfg, "n", path))
            return _NoManifold(n)
        if kind == "ring":
            return geometry.Ring(_number(cfg, "radius", path),
                                 tuple(_real_vector(_get(cfg, "angles", path), f"{path}/angles")))
        if kind == "flux_ring":
            return geometry.FluxRing(
                _number(cfg, "radius", path),
                tuple(_real_vector(_get(cfg, "angles", path), f"{path}/angles")),
                _number(cfg, "flux", path))
        if kind == "torus":
            gens = [_real_vector(r, f"{path}/generators/{i}")
                    for i, r in enumerate(_get(cfg, "generators", path, list))]
            pts = [_real_vector(r, f"{path}/points/{i}")
                   for i, r in enumerate(_get(cfg, "points", path, list))]
            flux = cfg.get("flux")
            if flux is not None:
                flux = _real_vector(flux, f"{path}/flux")
            return geometry.Torus(gens, pts, flux)
        if kind == "sphere2":
            return geometry.Sphere2(_number(cfg, "radius", path))
        if kind == "sphere3":
            dist = cfg.get("distances")
            if dist is not None:
                dist = np.real(_matrix(dist, f"{path}/distances"))
            return geometry.Sphere3(_number(cfg, "radius", path), dist)
    except (ValueError, geometry.UnsupportedLeads) as exc:
        raise SchemaError(path, str(exc))
    raise SchemaError(f"{path}/kind", f"unknown geometry kind {kind!r}")


_MATRIX_PARAMS = {"B", "A", "C", "L", "M", "Z"}
_SCALAR_PARAMS = {"alpha1", "alpha2", "gamma", "zeta"}


def _build_boundary(cfg, path="/boundary"):
    kind = _get(cfg, "kind", path, str)
    params = {}
    for key, val in cfg.items():
        if key == "kind":
            continue
        if key in _MATRIX_PARAMS:
            params[key] = _matrix(val, f"{path}/{key}")
        elif key in _SCALAR_PARAMS:
            params[key] = _complex_scalar(val, f"{path}/{key}")
        else:
            raise SchemaError(f"{path}/{key}", "unknown boundary parameter")
    return boundary.make(kind, params)


_TASK_TYPES = ("smatrix_sweep", "conductance_sweep", "spectrum_scan",
               "point_levels", "validate")


@dataclass(frozen=True)
class RunConfig:
    provider: object
    bc: boundary.BoundaryCondition
    task: dict
    out_format: str
    out_path: str
    raw: dict = field(repr=False, default=None)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run description (boundary included)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"invalid JSON: {exc}")
    provider = _build_geometry(_get(raw, "geometry", "", dict))
    bc = _build_boundary(_get(raw, "boundary", "", dict))
    if provider.n != bc.n:
        raise SchemaError("/boundary", f"boundary has n = {bc.n} but the geometry "
                                       f"has {provider.n} attachment points")
    task = _get(raw, "task", "", dict)
    ttype = _get(task, "type", "/task", str)
    if ttype not in _TASK_TYPES:
        raise SchemaError("/task/type", f"unknown task {ttype!r}; known: {_TASK_TYPES}")
    if ttype in ("smatrix_sweep", "conductance_sweep"):
        k_min = _number(task, "k_min", "/task")
        k_max = _number(task, "k_max", "/task")
        steps = int(_number(task, "steps", "/task"))
        if k_min <= 0:
            raise SchemaError("/task/k_min", "must be positive")
        if k_max <= k_min:
            raise SchemaError("/task/k_max", "must exceed k_min")
        if steps < 2:
            raise SchemaError("/task/steps", "at least 2 steps")
        if ttype == "conductance_sweep" and bc.n != 2:
            raise SchemaError("/task", "conductance needs exactly two leads")
    elif ttype in ("spectrum_scan", "point_levels"):
        _number(task, "e_min", "/task")
        _number(task, "e_max", "/task")
        if ttype == "point_levels":
            _number(task, "beta", "/task")
            if bc.n != 1:
                raise SchemaError("/task", "point levels need a single lead")
    out = _get(raw, "output", "", dict)
    fmt = _get(out, "format", "/output", str)
    if fmt not in ("csv", "json"):
        raise SchemaError("/output/format", "must be 'csv' or 'json'")
    return RunConfig(provider, bc, task, fmt, _get(out, "path", "/output", str), raw)


# ---------------------------------------------------------------------------
# Sweep execution

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(float(x))


def _sweep_columns(n: int, with_conductance: bool):
    cols = ["k", "E"]
    for l in range(1, n + 1):
        for j in range(1, n + 1):
            cols += [f"re_s{l}{j}", f"im_s{l}{j}"]
    cols += [f"R_{j}" for j in range(1, n + 1)]
    cols += [f"T_{l}{j}" for l in range(1, n + 1) for j in range(1, n + 1) if l != j]
    if with_conductance:
        cols.append("conductance")
    cols += ["unitarity_residual", "status"]
    return cols


def _sweep_row(cfg: RunConfig, k: float, tol: float, eps_imag: float,
               prefactor: float):
    n = cfg.bc.n
    with_cond = n == 2
    row = {"k": k, "E": k * k, "status": "ok"}
    try:
        s = scattering.smatrix(
            cfg.bc, cfg.provider, k, tol=tol, eps_imag=eps_imag,
            unitarity_tol=math.inf if eps_imag else 1e-8)
    except (SingularAtEnergy, SingularMatrix, UnitarityError):
        row["status"] = "singular"
        return row
    coeff = scattering.amplitudes(s)
    for l in range(n):
        for j in range(n):
            row[f"re_s{l + 1}{j + 1}"] = float(s.matrix[l, j].real)
            row[f"im_s{l + 1}{j + 1}"] = float(s.matrix[l, j].imag)
    for j in range(n):
        row[f"R_{j + 1}"] = float(coeff.reflection[j])
    for l in range(n):
        for j in range(n):
            if l != j:
                row[f"T_{l + 1}{j + 1}"] = float(coeff.transmission[l, j])
    if with_cond:
        row["conductance"] = scattering.conductance(s, prefactor)
    row["unitarity_residual"] = s.unitarity_residual
    return row


def _run_sweep(cfg: RunConfig, tol: float, eps_imag: float):
    task = cfg.task
    ks = np.linspace(task["k_min"], task["k_max"], int(task["steps"]))
    prefactor = float(task.get("prefactor", 1.0))
    with ThreadPoolExecutor(max_workers=_MAX_WORKERS) as pool:
        rows = list(pool.map(
            lambda k: _sweep_row(cfg, float(k), tol, eps_imag, prefactor), ks))
    cols = _sweep_columns(cfg.bc.n, cfg.bc.n == 2)
    status = 2 if all(r["status"] == "singular" for r in rows) else 0
    return cols, rows, status


def _run_scan(cfg: RunConfig, tol: float):
    task = cfg.task
    scan_cfg = spectral.ScanConfig(
        e_min=task["e_min"], e_max=task["e_max"],
        grid_points=int(task.get("grid_points", 512)),
        refine_tol=float(task.get("refine_tol", 1e-9)))
    if cfg.task["type"] == "spectrum_scan":
        result = spectral.scan_q_poles(cfg.provider, scan_cfg, tol=tol)
    else:
        result = spectral.point_levels(cfg.provider, float(task["beta"]),
                                       scan_cfg, tol=tol)
    rows = [{"location": loc, "kind": kind, "residual": res}
            for loc, kind, res in zip(result.locations, result.kinds, result.residuals)]
    return ["location", "kind", "residual"], rows, 0


def _run_validate(cfg: RunConfig):
    res = boundary.skew_residual(cfg.bc)
    u = boundary.cayley_unitary(cfg.bc)
    unit = float(np.max(np.abs(u @ u.conj().T - np.eye(2 * cfg.bc.n))))
    rows = [{"n": cfg.bc.n, "kind": cfg.bc.kind, "skew_residual": res,
             "cayley_unitarity_residual": unit, "status": "ok"}]
    return ["n", "kind", "skew_residual", "cayley_unitarity_residual", "status"], rows, 0


def _write_csv(path, cols, rows, header: bool):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# generated {datetime.datetime.now().isoformat()}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            cells = []
            for c in cols:
                v = row.get(c)
                cells.append(str(v) if isinstance(v, (str, int)) else _fmt(v))
            fh.write(",".join(cells) + "\n")


def _write_json(path, cols, rows, task_type, header: bool):
    doc = {"task": task_type, "columns": cols, "rows": rows}
    if header:
        doc["generated"] = datetime.datetime.now().isoformat()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def run(cfg: RunConfig, *, tol: float = 1e-10, eps_imag: float = 0.0,
        no_header: bool = False, output_path: str = None) -> int:
    """Execute the configured task and write the output file."""
    ttype = cfg.task["type"]
    if ttype in ("smatrix_sweep", "conductance_sweep"):
        cols, rows, status = _run_sweep(cfg, tol, eps_imag)
    elif ttype in ("spectrum_scan", "point_levels"):
        cols, rows, status = _run_scan(cfg, tol)
    else:
        cols, rows, status = _run_validate(cfg)
    path = output_path or cfg.out_path
    if cfg.out_format == "csv":
        _write_csv(path, cols, rows, header=not no_header)
    else:
        _write_json(path, cols, rows, ttype, header=not no_header)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hedgehog",
        description="Scattering matrices and spectral scans for manifolds with leads.")
    parser.add_argument("--config", required=True, help="JSON run description")
    parser.add_argument("--output", help="override the output path from the config")
    parser.add_argument("--tol", type=float, default=1e-10,
                        help="lattice-sum truncation tolerance")
    parser.add_argument("--eps-imag", type=float, default=0.0,
                        help="diagnostic imaginary energy offset")
    parser.add_argument("--no-header", action="store_true",
                        help="omit the timestamp header line")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        return run(cfg, tol=args.tol, eps_imag=args.eps_imag,
                   no_header=args.no_header, output_path=args.output)
    except (SchemaError, boundary.ValidationError, boundary.InvalidParams,
            spectral.GridTooCoarse, spectral.NonRealDeterminant,
            geometry.ToleranceNotReached, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
