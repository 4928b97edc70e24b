"""Command-line entry point: ``nprgflow {flow,oracle,compare,scan,fit,surface}``."""
from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import RunConfig, resolve
from .errors import ConfigError, InvalidParameterError, NPRGError
from .flow import run_flow
from .model import bare_potential
from .observables import NearCriticalWarning, effective_couplings
from .oracle import diagonalize, exact_susceptibility
from .outputs import SCAN_COLUMNS, SCHEMA_VERSION, read_scan_csv, scan_rows, write_csv, write_json
from .scan import critical_surface, eta_sweep, instanton_baseline, power_law_fit, refined_sweep

ENV_OUT = "NPRG_FLOW_OUT"

# flag name -> config key
FLAG_KEYS = {
    "lambda0": "lambda0", "eta": "eta", "cutoff": "cutoff", "grid_n": "grid_n",
    "qmax": "qmax", "dt": "dt", "tmax": "tmax", "jobs": "jobs", "out": "out",
    "format": "format", "scan_table": "scan_table",
}


def _document(command, config: RunConfig, results):
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "results": results,
    }


def _emit(command, config, results, tables=()):
    """Write <out>/<command>.json, its metadata sidecar and, for csv format, the tables."""
    out = config.out
    paths = [os.path.join(out, f"{command}.json")]
    write_json(paths[0], _document(command, config, results))
    if config.format == "csv":
        for name, header, rows in tables:
            path = os.path.join(out, f"{command}_{name}.csv")
            write_csv(path, header, rows)
            paths.append(path)
    meta = {
        "schema": SCHEMA_VERSION,
        "config_hash": config.config_hash(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "files": [os.path.basename(p) for p in paths],
    }
    write_json(os.path.join(out, f"{command}.meta.json"), meta)
    return paths


def _flow(config):
    params = config.dimensionless()
    initial = bare_potential(config.lambda0, config.qmax, config.grid_n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearCriticalWarning)
        outcome = run_flow(params, config.flow_settings(), initial)
        obs = effective_couplings(outcome, config.fit_window)
    return initial, outcome, obs


def cmd_flow(config):
    initial, outcome, obs = _flow(config)
    results = {
        "stop_reason": outcome.stop_reason,
        "valid": obs.valid,
        "omega_eff_sq": obs.omega_eff_sq,
        "omega_eff": obs.omega_eff if obs.omega_eff_sq > 0 else None,
        "lambda_eff": obs.lambda_eff,
        "chi": obs.chi,
        "curvature_origin_stencil": obs.stencil_curvature,
        "final_scale": outcome.final_scale,
        "t_final": outcome.t_final,
        "min_log_argument": outcome.min_log_argument,
        "vacuum_energy": outcome.vacuum_energy,
        "steps": outcome.n_steps,
        "implicit_steps": outcome.n_implicit,
        "spinodal_q": outcome.spinodal_q,
    }
    if config.physical:
        mp = config.model_params()
        results["physical"] = {
            "omega_eff": obs.omega_eff * mp.omega0 if obs.valid else None,
            "chi": obs.chi / (mp.mass * mp.omega0**2) if obs.valid else None,
        }
    potential = zip(initial.q.tolist(), initial.values.tolist(), outcome.final.values.tolist())
    trace = zip(outcome.trace_scale.tolist(), outcome.trace_curvature.tolist())
    return results, [("potential", ("q", "v0", "v_eff"), potential),
                     ("trace", ("scale", "curvature_origin"), trace)]


def cmd_oracle(config):
    settings = config.spectral_settings()
    levels = diagonalize(config.lambda0, 0.0, settings)
    chi = exact_susceptibility(config.lambda0, settings)
    results = {"eigenvalues": levels.eigenvalues.tolist(), "gap": levels.gap,
               "ground": levels.ground, "chi_exact": chi}
    rows = [(k, e) for k, e in enumerate(levels.eigenvalues.tolist())]
    return results, [("levels", ("level", "energy"), rows)]


def cmd_compare(config):
    if config.eta != 0:
        raise InvalidParameterError("eta", "the gap comparison is defined at eta = 0 only")
    _, outcome, obs = _flow(config)
    settings = config.spectral_settings()
    gap = diagonalize(config.lambda0, 0.0, settings).gap
    chi_exact = exact_susceptibility(config.lambda0, settings)
    omega = obs.omega_eff if obs.valid else float("nan")
    results = {
        "stop_reason": outcome.stop_reason,
        "nprg_omega_eff": omega,
        "oracle_gap": gap,
        "relative_deviation": (omega - gap) / gap,
        "nprg_chi": obs.chi,
        "oracle_chi": chi_exact,
        "chi_relative_deviation": (obs.chi - chi_exact) / chi_exact if obs.valid else None,
    }
    row = [(config.lambda0, omega, gap, results["relative_deviation"])]
    return results, [("gap", ("lambda0", "nprg_omega_eff", "oracle_gap", "relative_deviation"), row)]


def _scan_table(config):
    kw = dict(qmax=config.qmax, n=config.grid_n, cutbar=config.cutoff, n_jobs=config.jobs)
    if config.etas is not None:
        return eta_sweep(config.lambda0, config.etas, config.flow_settings(), **kw)
    return refined_sweep(config.lambda0, config.flow_settings(), coarse_points=config.coarse_points,
                         bisections=config.bisections, window_points=config.window_points,
                         policy=config.window_policy(), **kw)


def _fit_summary(table, config):
    try:
        fit = power_law_fit(table, config.window_policy(), config.fit_span)
    except NPRGError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    return fit.to_dict()


def cmd_scan(config):
    table = _scan_table(config)
    records = [{"eta": r.eta, "omega_eff_sq": r.omega_eff_sq, "chi": r.chi, "status": r.stop_reason,
                "message": r.message} for r in table.records]
    gap = table.censoring_boundary()
    results = {"lambda0": table.lam, "records": records, "fit": _fit_summary(table, config),
               "instanton_eta_c": instanton_baseline(table.lam),
               "censoring_boundary": list(gap) if gap else None}
    rows = list(scan_rows(table))
    header = SCAN_COLUMNS
    if config.physical:
        mp = config.model_params()
        header = header + ("eta_physical", "chi_physical")
        rows = [row + (row[0] * mp.mass * mp.omega0,
                       row[2] / (mp.mass * mp.omega0**2) if row[2] is not None else None)
                for row in rows]
    return results, [("table", header, rows)]


def cmd_fit(config):
    if not config.scan_table:
        raise InvalidParameterError("scan_table", "the fit command needs --scan-table <csv>")
    table = read_scan_csv(config.scan_table, config.lambda0)
    fit = power_law_fit(table, config.window_policy(), config.fit_span)
    results = fit.to_dict()
    results["scan_table"] = os.path.basename(config.scan_table)
    row = [(fit.amplitude, fit.eta_c, fit.gamma, fit.residual, fit.n_points)]
    return results, [("params", ("amplitude", "eta_c", "gamma", "residual", "n_points"), row)]


def cmd_surface(config):
    rows, _ = critical_surface(
        config.lambdas, config.flow_settings(), config.window_policy(),
        sweep_kwargs=dict(coarse_points=config.coarse_points, bisections=config.bisections,
                          window_points=config.window_points,
                          qmax=config.qmax, n=config.grid_n, cutbar=config.cutoff,
                          n_jobs=config.jobs))
    results = {"rows": [vars(r) for r in rows]}
    gammas = [r.gamma for r in rows if r.gamma is not None and not r.low_confidence]
    if len(gammas) >= 2:
        results["gamma_spread"] = (max(gammas) - min(gammas)) / min(gammas)
    table = [(r.lam, r.eta_c, r.gamma, r.residual, r.baseline, r.boundary, r.low_confidence,
              "ok" if r.error is None else "failed") for r in rows]
    header = ("lambda0", "eta_c", "gamma", "residual", "instanton_eta_c", "censoring_boundary",
              "low_confidence", "status")
    return results, [("table", header, table)]


COMMANDS = {
    "flow": (cmd_flow, "integrate the flow for one (lambda0, eta)"),
    "oracle": (cmd_oracle, "exact diagonalization of the undamped double well"),
    "compare": (cmd_compare, "flow omega_eff against the exact gap at eta = 0"),
    "scan": (cmd_scan, "susceptibility sweep over eta plus critical fit"),
    "fit": (cmd_fit, "critical power-law fit of a scan CSV"),
    "surface": (cmd_surface, "critical eta and exponent across couplings"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flat keys)")
    common.add_argument("--lambda0", type=float, help="dimensionless quartic coupling")
    common.add_argument("--eta", type=float, help="dimensionless dissipation strength")
    common.add_argument("--cutoff", type=float, help="dimensionless UV cutoff")
    common.add_argument("--grid-n", dest="grid_n", type=int, help="grid points on [0, qmax]")
    common.add_argument("--qmax", type=float, help="grid half-width")
    common.add_argument("--dt", type=float, help="flow-time step")
    common.add_argument("--tmax", type=float, help="maximum flow time")
    common.add_argument("--jobs", type=int, help="concurrent flow solves in scans")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUT} or .)")
    common.add_argument("--format", choices=("json", "csv"), help="also write CSV tables with csv")
    common.add_argument("--scan-table", dest="scan_table", help="scan CSV for the fit command")

    parser = argparse.ArgumentParser(prog="nprgflow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, flag) for flag, key in FLAG_KEYS.items()}
    try:
        config = resolve(args.config, overrides, env_out=os.environ.get(ENV_OUT))
    except (ConfigError, InvalidParameterError) as exc:
        print(f"nprgflow: configuration error: {exc}", file=sys.stderr)
        return 2
    handler = COMMANDS[args.command][0]
    try:
        with np.errstate(all="ignore"):
            results, tables = handler(config)
        paths = _emit(args.command, config, results, tables)
    except InvalidParameterError as exc:
        print(f"nprgflow: invalid parameter: {exc}", file=sys.stderr)
        return 2
    except (NPRGError, ConfigError) as exc:
        print(f"nprgflow: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"nprgflow: cannot write output {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
