"""Figure-reproduction experiments and their CSV / JSON outputs.

CSV layout: UTF-8, comma separated, ``# key=value`` comment lines first,
then a header whose first column is ``tau``, then one row per sample.
Floats are written with 17 significant digits so that identical runs give
byte-identical bodies. Each experiment also writes ``<id>.meta.json`` with
parameters, versions, the integrator identity and derived fits.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, TextIO

import numpy as np

from . import __version__
from ._compute import thread_count
from .asym import asymptotic_coefficients, evaluate_polynomial, residual_order_fit
from .core import BeamModel, uniform_grid
from .fem import (SCHEME_NAME, assemble, detect_power_law_window, fit_power_law,
                  impulse_initial_state, integrate, IntegratorConfig)
from .modal import ModalSeries, slope_response

__all__ = [
    "FIGURES",
    "ExperimentSpec",
    "figure_defaults",
    "read_csv",
    "run_experiment",
    "write_csv",
]

# Parameters of each figure; any of them may be overridden.
FIGURES: dict[str, dict] = {
    "eb-artifact": {"length": 1.0, "elements": (640, 1280), "dt": (4e-5, 2e-5, 1e-5, 5e-6),
                    "t_max": 0.012, "window_tol": 0.05},
    "series-vs-fem": {"length": math.pi, "n_terms": 100_000, "elements": 1280, "dt": 4e-4,
                      "t_max": 4.0},
    "load-independence": {"length": 12.0, "n_terms": 100_000, "dt": 0.01, "t_max": 1.0,
                          "load_pos": (6.0, 3.0)},
    "asym-compare": {"length": math.pi, "n_terms": 100_000, "dt": 1e-3, "t_max": 1.0},
    "residual-order": {"length": math.pi, "n_terms": 100_000, "dt": 1e-3, "t_max": 0.3,
                       "fit_window": (0.02, 0.2), "method": "accelerated"},
}

OVERRIDABLE = {"length", "n_terms", "elements", "dt", "t_max", "load_pos", "eval_pos",
               "method", "fit_window", "window_tol"}


def figure_defaults(figure_id: str) -> dict:
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; expected one of {sorted(FIGURES)}")
    return dict(FIGURES[figure_id])


@dataclass(frozen=True)
class ExperimentSpec:
    """Which figure to reproduce, plus parameter overrides (``None`` values are ignored)."""

    figure_id: str
    overrides: Mapping = field(default_factory=dict)

    def __post_init__(self):
        figure_defaults(self.figure_id)
        unknown = set(self.overrides) - OVERRIDABLE
        if unknown:
            raise ValueError(f"unknown override(s): {sorted(unknown)}")

    def parameters(self) -> dict:
        params = figure_defaults(self.figure_id)
        params.update({k: v for k, v in self.overrides.items() if v is not None})
        return params


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if math.isfinite(v) else str(v)


def _meta_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_meta_value(x) for x in v)
    return str(v)


def write_csv(target: Path | str | TextIO, columns: Mapping[str, np.ndarray],
              meta: Mapping | None = None) -> None:
    """Write ``columns`` (``tau`` first) with ``# key=value`` comment lines."""
    names = list(columns)
    if not names or names[0] != "tau":
        raise ValueError("the first column must be 'tau'")
    data = [np.asarray(columns[n], dtype=float) for n in names]
    if any(d.shape != data[0].shape for d in data):
        raise ValueError("all columns must have the same length")

    def emit(fh):
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={_meta_value(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_fmt(x) for x in row])

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
    else:
        emit(target)


def read_csv(path: Path | str) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Inverse of :func:`write_csv`: metadata strings and float columns."""
    meta = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip()]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            k, _, v = ln[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(ln)
    reader = csv.reader(body)
    header = next(reader)
    rows = [[float(x) for x in r] for r in reader]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return meta, {h: arr[:, i] for i, h in enumerate(header)}


def _write_meta(path: Path, figure_id: str, params: dict, results: dict) -> None:
    doc = {
        "figure_id": figure_id,
        "parameters": {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()},
        "results": results,
        "versions": {"beamlab": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "integrator": SCHEME_NAME,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# figure runners
# ---------------------------------------------------------------------------

def _as_tuple(v) -> tuple:
    return tuple(v) if isinstance(v, (list, tuple)) else (v,)


def _eb_artifact(p: dict, out: Path) -> tuple[list[Path], dict]:
    beam = BeamModel(rho_I=0.0, length=p["length"])
    meshes = tuple(int(m) for m in _as_tuple(p["elements"]))
    dts = tuple(float(d) for d in _as_tuple(p["dt"]))
    models = {ne: assemble(beam, ne) for ne in meshes}

    def run(key):
        ne, dt = key
        fe = models[ne]
        return integrate(fe, impulse_initial_state(fe), IntegratorConfig(dt, p["t_max"])).rotation

    keys = [(ne, dt) for dt in dts for ne in meshes]
    with ThreadPoolExecutor(max_workers=min(thread_count(), len(keys))) as pool:
        runs = dict(zip(keys, pool.map(run, keys)))

    files, fits = [], []
    for dt in dts:
        ref = runs[(meshes[0], dt)]
        cols = {"tau": ref.tau}
        for ne in meshes:
            ts = runs[(ne, dt)]
            cols[f"mesh_{ne}"] = ts.values
            lo, hi = detect_power_law_window(ts, tol=p["window_tol"])
            f = fit_power_law(ts, (lo, hi))
            fits.append({"elements": ne, "dt": dt, "window": [lo, hi], "duration": hi - lo,
                         "exponent": f.exponent, "coefficient": f.coefficient,
                         "r_squared": f.r_squared})
        path = out / f"eb-artifact_dt{dt:g}.csv"
        # the exact Euler-Bernoulli slope diverges at tau = 0; the FE sample there is 0
        write_csv(path, cols, {"figure": "eb-artifact", "dt": dt, "length": p["length"],
                               "rho_I": 0.0, "divergent_at_tau0": "true"})
        files.append(path)
    return files, {"fits": fits}


def _series_vs_fem(p: dict, out: Path) -> tuple[list[Path], dict]:
    beam = BeamModel(length=p["length"])
    x0 = p.get("load_pos") or beam.length / 2
    fe = assemble(beam, int(p["elements"]), x0)
    res = integrate(fe, impulse_initial_state(fe), IntegratorConfig(p["dt"], p["t_max"]))
    x = p.get("eval_pos") or fe.load_pos
    series = slope_response(ModalSeries(beam, int(p["n_terms"]), fe.load_pos), x, res.tau)
    path = out / "series-vs-fem.csv"
    write_csv(path, {"tau": res.tau, "series": series.values, "fem": res.rotation.values,
                     "fem_energy": res.energy},
              {"figure": "series-vs-fem", "length": beam.length, "n_terms": p["n_terms"],
               "elements": p["elements"], "dt": p["dt"], "scheme": SCHEME_NAME})
    return [path], {"max_abs_difference": float(np.max(np.abs(series.values - res.rotation.values)))}


def _load_independence(p: dict, out: Path) -> tuple[list[Path], dict]:
    beam = BeamModel(length=p["length"])
    tau = uniform_grid(p["t_max"], p["dt"])
    cols = {"tau": tau}
    for x0 in _as_tuple(p["load_pos"]):
        ms = ModalSeries(beam, int(p["n_terms"]), float(x0))
        cols[f"x0_{float(x0):g}"] = slope_response(ms, x0, tau).values
    curves = list(cols.values())[1:]
    diff = float(max(np.max(np.abs(c - curves[0])[1:]) for c in curves))
    path = out / "load-independence.csv"
    write_csv(path, cols, {"figure": "load-independence", "length": beam.length,
                           "n_terms": p["n_terms"]})
    return [path], {"max_abs_difference_tau_gt_0": diff}


def _asym_compare(p: dict, out: Path) -> tuple[list[Path], dict]:
    beam = BeamModel(length=p["length"])
    tau = uniform_grid(p["t_max"], p["dt"])
    ap = asymptotic_coefficients(beam)
    series = slope_response(ModalSeries(beam, int(p["n_terms"])), beam.length / 2, tau)
    poly = evaluate_polynomial(ap, tau)
    path = out / "asym-compare.csv"
    write_csv(path, {"tau": tau, "series": series.values, "asymptotic": poly.values},
              {"figure": "asym-compare", "length": beam.length, "n_terms": p["n_terms"],
               "coefficients": list(ap.coefficients)})
    return [path], {"coefficients": list(ap.coefficients)}


def _residual_order(p: dict, out: Path) -> tuple[list[Path], dict]:
    beam = BeamModel(length=p["length"])
    tau = uniform_grid(p["t_max"], p["dt"])
    ap = asymptotic_coefficients(beam)
    series = slope_response(ModalSeries(beam, int(p["n_terms"])), beam.length / 2, tau,
                            method=p["method"])
    poly = evaluate_polynomial(ap, tau)
    fit = residual_order_fit(series, poly, tuple(p["fit_window"]))
    path = out / "residual-order.csv"
    write_csv(path, {"tau": tau, "series": series.values, "asymptotic": poly.values,
                     "residual": series.values - poly.values},
              {"figure": "residual-order", "length": beam.length, "n_terms": p["n_terms"],
               "method": p["method"], "fit_window": list(p["fit_window"])})
    return [path], {"exponent": fit.exponent, "coefficient": fit.coefficient,
                    "r_squared": fit.r_squared, "n_points": fit.n_points}


_RUNNERS = {
    "eb-artifact": _eb_artifact,
    "series-vs-fem": _series_vs_fem,
    "load-independence": _load_independence,
    "asym-compare": _asym_compare,
    "residual-order": _residual_order,
}


def run_experiment(spec: ExperimentSpec, output_dir: Path | str) -> tuple[list[Path], dict]:
    """Run one figure; returns the written files (CSV then metadata) and derived results."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = spec.parameters()
    files, results = _RUNNERS[spec.figure_id](params, out)
    meta = out / f"{spec.figure_id}.meta.json"
    _write_meta(meta, spec.figure_id, params, results)
    return files + [meta], results
