"""Command-line entry point.

Exit codes: 0 success, 2 configuration or parameter error, 3 numerical
failure.  Errors are reported on stderr as a one-line JSON record.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import commutators, simulate, spectrum, steady_state
from .io import (
    ConfigError,
    bundled_config,
    format_table,
    parse_config,
    write_manifest,
    write_table,
)
from .kernels import Model, NoiseModel
from .params import ParameterError, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMMANDS = ("spectrum", "steady-state", "sweep", "simulate", "audit", "compare-models", "fig2")

log = logging.getLogger("mirrornoise")


def parse_grid(text: str) -> tuple[str, float, float, int]:
    """``lin:MIN:MAX:N`` or ``log:MIN:MAX:N`` (angular frequency, rad/s)."""
    parts = text.split(":")
    if len(parts) != 4 or parts[0] not in ("lin", "log"):
        raise ConfigError(f"grid must look like lin:MIN:MAX:N or log:MIN:MAX:N, got {text!r}", grid=text)
    try:
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise ConfigError(f"grid bounds/count not numeric in {text!r}", grid=text) from None
    return parts[0], lo, hi, n


def parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise ConfigError(f"range must look like MIN:MAX:N, got {text!r}", range=text) from None
    if len(parts) != 3:
        raise ConfigError(f"range must look like MIN:MAX:N, got {text!r}", range=text)
    return lo, hi, n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mirrornoise",
                                 description="Homodyne spectrum of a cavity with a Brownian mirror.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="key = value parameter file")
    ap.add_argument("--out", metavar="PATH", help="output table (stdout if omitted, no manifest)")
    ap.add_argument("--model", choices=[m.value for m in Model])
    ap.add_argument("--grid", metavar="SPEC", help="lin:MIN:MAX:N or log:MIN:MAX:N in rad/s")
    ap.add_argument("--seed", type=int, metavar="U64")
    ap.add_argument("--traj", type=int, metavar="N")
    ap.add_argument("--dt", type=float, metavar="F", help="time step in units of 1/omega_S")
    ap.add_argument("--steps", type=int, metavar="N")
    ap.add_argument("--segment", type=int, metavar="N", help="Welch segment length (samples)")
    ap.add_argument("--burn-in", type=float, metavar="F")
    ap.add_argument("--workers", type=int, metavar="N")
    ap.add_argument("--adiabatic", action="store_true", default=None)
    ap.add_argument("--dump-trajectory", metavar="PATH", help="simulate: write trajectory 0 (binary)")
    ap.add_argument("--detuning", metavar="MIN:MAX:N", help="sweep: bare detuning grid, rad/s")
    ap.add_argument("--audit", choices=("commutator", "naive"), default="commutator")
    ap.add_argument("--t-max", type=float, default=10.0, help="audit span in units of 1/omega_S")
    ap.add_argument("--n-grid", type=int, default=201)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _option(args, cfg_opts, flag, key, default):
    value = getattr(args, flag)
    if value is not None:
        return value
    return cfg_opts.get(key, default)


def _load(args):
    if args.config:
        return parse_config(args.config)
    if args.command in ("fig2", "simulate"):
        return bundled_config("fig2.cfg" if args.command == "fig2" else "sim.cfg")
    raise ConfigError("--config is required for this command")


def _noise_model(kind: str, params) -> NoiseModel:
    return NoiseModel.from_params(Model(kind), params)


def _grid(args, opts, params):
    spec = args.grid or opts.get("grid")
    if spec is None:
        return spectrum.fig2_grid(params)
    kind, lo, hi, n = parse_grid(spec)
    try:
        return spectrum.make_grid(lo, hi, n, kind)
    except ValueError as exc:
        raise ConfigError(str(exc), grid=spec) from None


def _run(args) -> tuple[dict, dict, object]:
    """Dispatch; returns (table columns, echoed options, seed)."""
    cfg = _load(args)
    params, opts = cfg.params, cfg.options
    report = validate(params)
    report.raise_if_invalid()
    for w in report.warnings:
        log.warning(w)
    model_kind = _option(args, opts, "model", "model", "exact")
    used: dict = {"model": model_kind}
    seed = None
    cmd = args.command

    if cmd in ("spectrum", "fig2"):
        op = steady_state.solve_resonant(params)
        grid = _grid(args, opts, params)
        used["grid"] = args.grid or opts.get("grid") or "default"
        used["omega_0_locked"] = op.omega_0
        res = spectrum.spectrum_on(grid, params, op, _noise_model(model_kind, params))
        return res.columns(), used, seed

    if cmd == "compare-models":
        op = steady_state.solve_resonant(params)
        grid = _grid(args, opts, params)
        used["grid"] = args.grid or opts.get("grid") or "default"
        return spectrum.compare_models(params, op, grid).columns(), used, seed

    if cmd == "steady-state":
        states = steady_state.solve_all(params)
        cols = {
            "B_st": [s.B_st for s in states],
            "intensity": [s.intensity for s in states],
            "q_st": [s.q_st for s in states],
            "Delta": [s.Delta for s in states],
            "stability": [s.stability for s in states],
        }
        return cols, used, seed

    if cmd == "sweep":
        if not args.detuning:
            raise ConfigError("sweep needs --detuning MIN:MAX:N")
        lo, hi, n = parse_range(args.detuning)
        used["detuning"] = args.detuning
        try:
            rows = steady_state.sweep_bistability(params, (lo, hi), n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cols = {"Delta0": [r.Delta0 for r in rows], "n_roots": [r.n_roots for r in rows]}
        # absent roots are left as empty cells
        for j in range(3):
            cols[f"I_root{j + 1}"] = [r.intensities[j] if j < r.n_roots else None for r in rows]
        for j in range(3):
            cols[f"stability_root{j + 1}"] = [r.stabilities[j] if j < r.n_roots else None for r in rows]
        return cols, used, seed

    if cmd == "simulate":
        base = simulate.SimConfig()
        seed = _option(args, opts, "seed", "seed", 0)
        sim_cfg = simulate.SimConfig(
            dt=_option(args, opts, "dt", "dt", base.dt),
            n_steps=_option(args, opts, "steps", "steps", base.n_steps),
            n_traj=_option(args, opts, "traj", "traj", base.n_traj),
            seed=seed,
            burn_in=_option(args, opts, "burn_in", "burn_in", base.burn_in),
            welch_segment=_option(args, opts, "segment", "welch_segment", base.welch_segment),
            adiabatic=bool(_option(args, opts, "adiabatic", "adiabatic", False)),
            workers=_option(args, opts, "workers", "workers", 1),
        )
        used.update({k: getattr(sim_cfg, k) for k in
                     ("dt", "n_steps", "n_traj", "burn_in", "welch_segment", "adiabatic")})
        op = steady_state.solve_resonant(params)
        model = _noise_model(model_kind, params)
        if args.dump_trajectory:
            simulate.write_trajectory(args.dump_trajectory, simulate.integrate(params, op, model, sim_cfg, 0))
            used["dump_trajectory"] = args.dump_trajectory
        est = simulate.simulate_spectrum(params, op, model, sim_cfg)
        return est.columns(), used, seed

    if cmd == "audit":
        used.update({"audit": args.audit, "t_max": args.t_max, "n_grid": args.n_grid})
        rep = commutators.audit_qp_commutator(
            params, args.t_max / params.omega_S, args.n_grid, include_noise=args.audit == "commutator"
        )
        for note in rep.notes:
            log.warning(note)
        return rep.columns(), used, seed

    raise ConfigError(f"unknown command {cmd!r}")  # pragma: no cover


def _error(kind: str, exc: Exception, code: int) -> int:
    record = {"status": "error", "kind": kind, "exit_code": code,
              "type": type(exc).__name__, "message": str(exc)}
    details = getattr(exc, "details", None)
    if details:
        record["details"] = details
    report = getattr(exc, "report", None)
    if report is not None:
        record["details"] = {"errors": report.errors, "warnings": report.warnings}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cols, used, seed = _run(args)
    except (ConfigError, ParameterError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        return _error("numerical", exc, EXIT_NUMERIC)
    except ValueError as exc:
        return _error("config", exc, EXIT_CONFIG)

    if args.out:
        try:
            text = write_table(args.out, cols)
            cfg_src = args.config or f"<bundled {'fig2.cfg' if args.command == 'fig2' else 'sim.cfg'}>"
            write_manifest(args.out, command=args.command, argv=argv, params=_load(args).params,
                           options=used, seed=seed, config_source=cfg_src, payload=text)
        except OSError as exc:
            return _error("io", exc, EXIT_CONFIG)
    else:
        sys.stdout.write(format_table(cols))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
