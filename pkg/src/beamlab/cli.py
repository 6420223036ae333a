"""Command-line runner: single computations, figure reproduction and the acceptance suite.

Subcommands
-----------
``series``      modal-series slope (or displacement) at one point
``asymptotic``  short-time cubic on a grid
``fem``         finite-element run, optional state snapshots
``convolve``    response to a constant, impulsive or sampled moment history
``figure``      reproduce one figure as CSV + ``<id>.meta.json``
``accept``      run the acceptance criteria, write ``acceptance.json``

Every subcommand accepts ``--config FILE`` (TOML or JSON). The file may set
any flag by its long name (``n_terms`` or ``n-terms``) and may contain a
``beam`` table with ``rho_A``, ``rho_I``, ``EI`` and ``length``. Flags
given on the command line override the file.

Exit codes: 0 success, 1 computational or acceptance failure, 2 usage error.

Snapshot dump (``fem --snapshot-every K --snapshot-out FILE``): a CSV in
the usual layout whose rows are the full DOF vector every ``K`` steps,
columns ``tau, w_0, theta_0, w_1, theta_1, ...``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asym import MomentProfile, asymptotic_coefficients, convolve_moment, evaluate_polynomial
from .core import BeamModel, TimeSeries, nondimensionalize, uniform_grid
from .experiments import FIGURES, ExperimentSpec, read_csv, run_experiment, write_csv
from .fem import SCHEME_NAME, IntegratorConfig, assemble, impulse_initial_state, integrate
from .modal import DEFAULT_TERMS, METHODS, ModalSeries, displacement_response, slope_response

DEFAULTS = {
    "series": {"n_terms": DEFAULT_TERMS, "dt": 1e-3, "t_max": 1.0, "method": "truncated",
               "quantity": "slope"},
    "asymptotic": {"dt": 1e-3, "t_max": 1.0},
    "fem": {"elements": 1280, "dt": 4e-4, "t_max": 4.0, "snapshot_every": 0},
    "convolve": {"n_terms": DEFAULT_TERMS, "dt": 1e-3, "t_max": 1.0, "profile": "constant",
                 "amplitude": 1.0, "kernel": "asymptotic", "method": "truncated"},
    "figure": {"out": "results"},
    "accept": {"out": "results"},
}


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    g = shared.add_argument_group("shared options")
    g.add_argument("--config", type=Path, help="TOML or JSON file supplying any option")
    g.add_argument("--length", type=_positive_float, help="beam length L (nondimensional)")
    g.add_argument("--n-terms", type=_positive_int, help="modal truncation (default 1e5)")
    g.add_argument("--elements", type=_positive_int, help="finite-element count (even)")
    g.add_argument("--dt", type=_positive_float, help="grid spacing / time step")
    g.add_argument("--t-max", type=_positive_float, help="final time")
    g.add_argument("--load-pos", type=float, help="impulse position x0 (default L/2)")
    g.add_argument("--eval-pos", type=float, help="evaluation point x (default x0)")
    g.add_argument("--out", help="output CSV file (default stdout) or directory for figure/accept")

    parser = argparse.ArgumentParser(
        prog="beamlab",
        description="Angular-impulse response of simply supported Rayleigh beams.",
    )
    parser.add_argument("--version", action="version", version=f"beamlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("series", parents=[shared], help="modal series at one point")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--quantity", choices=("slope", "displacement"))

    sub.add_parser("asymptotic", parents=[shared], help="short-time cubic polynomial")

    p = sub.add_parser("fem", parents=[shared], help="finite-element time integration")
    p.add_argument("--snapshot-every", type=int, help="dump the full state every K steps")
    p.add_argument("--snapshot-out", type=Path, help="snapshot CSV path")

    p = sub.add_parser("convolve", parents=[shared], help="response to a moment history")
    p.add_argument("--profile", choices=("impulse", "constant", "sampled"))
    p.add_argument("--amplitude", type=float, help="M0, or the scale of sampled values")
    p.add_argument("--samples", type=Path, help="CSV with columns tau, M (sampled profile)")
    p.add_argument("--kernel", choices=("asymptotic", "series"))
    p.add_argument("--method", choices=METHODS, help="series kernel evaluation")

    p = sub.add_parser("figure", parents=[shared], help="reproduce a figure as CSV")
    p.add_argument("--id", dest="figure_id", required=True, choices=sorted(FIGURES))

    p = sub.add_parser("accept", parents=[shared], help="run the acceptance criteria")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,9")
    return parser


def _load_config(path: Path) -> dict:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        if path.suffix.lower() == ".json":
            return json.loads(raw)
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(raw.decode("utf-8"))
    except Exception as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None


def resolve_options(args: argparse.Namespace) -> tuple[dict, BeamModel]:
    """Merge command line, config file and subcommand defaults (in that priority)."""
    cfg = _load_config(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise UsageError("config root must be a table / object")
    cfg = {str(k).replace("-", "_"): v for k, v in cfg.items()}
    beam_cfg = cfg.pop("beam", {})
    known = set(vars(args)) - {"command", "config"}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config key(s): {sorted(unknown)}")
    opts = dict(DEFAULTS.get(args.command, {}))
    opts.update(cfg)
    opts.update({k: v for k, v in vars(args).items() if v is not None and k in known})
    try:
        beam = BeamModel.from_mapping(beam_cfg) if beam_cfg else BeamModel()
        if opts.get("length") is not None:
            beam = BeamModel(beam.rho_A, beam.rho_I, beam.EI, float(opts["length"]))
        elif "length" in beam_cfg:
            opts["length"] = beam.length
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return opts, beam


def _unit_beam(beam: BeamModel, meta: dict) -> BeamModel:
    """Series and asymptotics work in nondimensional form; rescale other beams."""
    if beam.is_unit or beam.is_euler_bernoulli:
        return beam
    unit, _ = nondimensionalize(beam, 0.0)
    meta["rescaled_from"] = json.dumps(beam.to_dict(), sort_keys=True)
    return unit


def _emit(out, columns: dict, meta: dict) -> None:
    if out in (None, "-"):
        write_csv(sys.stdout, columns, meta)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        write_csv(out, columns, meta)


def _cmd_series(o: dict, beam: BeamModel) -> int:
    meta = {}
    beam = _unit_beam(beam, meta)
    ms = ModalSeries(beam, int(o["n_terms"]), o.get("load_pos"))
    x = ms.load_pos if o.get("eval_pos") is None else o["eval_pos"]
    tau = uniform_grid(o["t_max"], o["dt"])
    if o["quantity"] == "slope":
        ts = slope_response(ms, x, tau, method=o["method"])
    else:
        ts = displacement_response(ms, x, tau)
    meta.update({"quantity": o["quantity"], "length": beam.length, "n_terms": ms.n_terms,
                 "load_pos": ms.load_pos, "eval_pos": x, "method": ts.metadata.get("method", "truncated")})
    _emit(o.get("out"), {"tau": ts.tau, o["quantity"]: ts.values}, meta)
    return 0


def _cmd_asymptotic(o: dict, beam: BeamModel) -> int:
    meta = {}
    beam = _unit_beam(beam, meta)
    ap = asymptotic_coefficients(beam)
    ts = evaluate_polynomial(ap, uniform_grid(o["t_max"], o["dt"]))
    meta.update({"length": beam.length, "a": ap.a, "c0": ap.c0, "c1": ap.c1, "c2": ap.c2, "c3": ap.c3})
    _emit(o.get("out"), {"tau": ts.tau, "asymptotic": ts.values}, meta)
    return 0


def _cmd_fem(o: dict, beam: BeamModel) -> int:
    fe = assemble(beam, int(o["elements"]), o.get("load_pos"))
    every = int(o["snapshot_every"])
    if every and not o.get("snapshot_out"):
        raise UsageError("--snapshot-every needs --snapshot-out")
    cfg = IntegratorConfig(o["dt"], o["t_max"], snapshot_every=every)
    probe = None
    if o.get("eval_pos") is not None:
        node = int(round(o["eval_pos"] / beam.length * fe.n_elements))
        probe = fe.rotation_dof(node)
    res = integrate(fe, impulse_initial_state(fe), cfg, probe_dof=probe)
    meta = {"length": beam.length, "rho_I": beam.rho_I, "elements": fe.n_elements,
            "load_pos": fe.load_pos, "dof": res.rotation.metadata["dof"], "dt": cfg.dt,
            "scheme": SCHEME_NAME, "gamma": cfg.gamma}
    _emit(o.get("out"), {"tau": res.tau, "rotation": res.rotation.values, "energy": res.energy}, meta)
    if every:
        names = [f"{k}_{i}" for i in range(fe.n_elements + 1) for k in ("w", "theta")]
        snaps = np.array([y for _, y in res.snapshots])
        cols = {"tau": np.array([t for t, _ in res.snapshots])}
        cols.update({n: snaps[:, j] for j, n in enumerate(names)})
        _emit(str(o["snapshot_out"]), cols, {**meta, "snapshot_every": every})
    return 0


def _cmd_convolve(o: dict, beam: BeamModel) -> int:
    meta = {}
    beam = _unit_beam(beam, meta)
    tau = uniform_grid(o["t_max"], o["dt"])
    samples = None
    if o["profile"] == "sampled":
        if not o.get("samples"):
            raise UsageError("--profile sampled needs --samples FILE")
        _, cols = read_csv(o["samples"])
        if "tau" not in cols or len(cols) < 2:
            raise UsageError("samples CSV needs a tau column and one value column")
        name = next(k for k in cols if k != "tau")
        samples = TimeSeries(cols["tau"], cols[name], "convolution")
        tau = samples.tau
    profile = MomentProfile(o["profile"], float(o["amplitude"]), samples)
    ts = convolve_moment(beam, profile, tau, kernel=o["kernel"],
                         n_terms=int(o["n_terms"]), method=o["method"])
    meta.update({"length": beam.length, "profile": o["profile"], "amplitude": o["amplitude"],
                 "kernel": o["kernel"]})
    _emit(o.get("out"), {"tau": ts.tau, "response": ts.values}, meta)
    return 0


def _cmd_figure(o: dict, beam: BeamModel) -> int:
    overrides = {k: o.get(k) for k in ("length", "n_terms", "elements", "dt", "t_max",
                                       "load_pos", "eval_pos")}
    files, _ = run_experiment(ExperimentSpec(o["figure_id"], overrides), o["out"])
    for f in files:
        print(f)
    return 0


def _cmd_accept(o: dict, beam: BeamModel) -> int:
    from .acceptance import run_acceptance

    criteria = None
    if o.get("criteria"):
        try:
            criteria = [int(c) for c in str(o["criteria"]).split(",") if c.strip()]
        except ValueError:
            raise UsageError(f"--criteria must be comma-separated integers, got {o['criteria']!r}") from None
    try:
        report = run_acceptance(o["out"], criteria, echo=print)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(report.text().splitlines()[-1])
    return 0 if report.passed else 1


COMMANDS = {"series": _cmd_series, "asymptotic": _cmd_asymptotic, "fem": _cmd_fem,
            "convolve": _cmd_convolve, "figure": _cmd_figure, "accept": _cmd_accept}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad usage
    try:
        opts, beam = resolve_options(args)
        return COMMANDS[args.command](opts, beam)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"beamlab: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"beamlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
