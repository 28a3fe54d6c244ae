"""Command-line front end.

Subcommands: sweep-b, sweep-delta, fit, shift-scan, decay, fano-min.
Exit status: 0 success, 1 configuration, 2 numerics, 3 fit
non-convergence, 4 I/O.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, io, spectrum, trapsim
from .errors import FanoPAError, NonConvergence
from .io import GridSpec

EXIT_CONFIG, EXIT_NUMERIC, EXIT_FIT, EXIT_IO = 1, 2, 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_common(p):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output path (overrides io.output)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides seed)")
    p.add_argument("--quad-nodes", type=int, help="Gauss-Laguerre node count")


def build_parser():
    parser = _Parser(prog="fanopa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep-b", help="thermal loss rate versus magnetic field")
    _add_common(p)
    p.add_argument("--b-start", type=float)
    p.add_argument("--b-stop", type=float)
    p.add_argument("--b-count", type=int)

    p = sub.add_parser("sweep-delta", help="thermal loss rate versus laser detuning")
    _add_common(p)
    p.add_argument("--delta-start", type=float)
    p.add_argument("--delta-stop", type=float)
    p.add_argument("--delta-count", type=int)
    p.add_argument("--fixed-b", type=float)

    p = sub.add_parser("fit", help="least-squares fit of the model to a spectrum CSV")
    _add_common(p)
    p.add_argument("--input", help="spectrum CSV (overrides io.input)")
    p.add_argument("--fixed-b", type=float)

    p = sub.add_parser("shift-scan", help="PA shift slope versus field")
    _add_common(p)
    p.add_argument("--delta-start", type=float)
    p.add_argument("--delta-stop", type=float)
    p.add_argument("--delta-count", type=int)

    p = sub.add_parser("decay", help="simulate a two-body decay trace and refit K")
    _add_common(p)

    p = sub.add_parser("fano-min", help="field of the single-resonance Fano minimum")
    _add_common(p)
    p.add_argument("--resonance", type=int, choices=(1, 2), default=1)
    return parser


def _override_grid(grid, start, stop, count, name):
    if start is None and stop is None and count is None:
        return grid
    if grid is None and None in (start, stop, count):
        raise _UsageError(f"no {name} grid in config; give start, stop and count")
    base = grid or GridSpec(0.0, 1.0, 2)
    return GridSpec(base.start if start is None else start,
                    base.stop if stop is None else stop,
                    base.count if count is None else count)


def _require(value, what):
    if value is None:
        raise _UsageError(f"{what} is required (config or command line)")
    return value


def _output(args, cfg):
    out = args.out if args.out is not None else cfg.output
    return Path(_require(out, "output path (--out or io.output)"))


def _local_extrema(axis, rates):
    d = np.sign(np.diff(rates))
    maxima = [i + 1 for i in range(d.size - 1) if d[i] > 0 and d[i + 1] < 0]
    minima = [i + 1 for i in range(d.size - 1) if d[i] < 0 and d[i + 1] > 0]
    return axis[maxima], axis[minima]


def _fmt(values):
    return "[" + ", ".join(f"{v:.6g}" for v in values) + "]"


def _write_json(path, payload):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# subcommands

def _cmd_sweep_b(args, cfg):
    grid = _require(_override_grid(cfg.field_grid, args.b_start, args.b_stop, args.b_count,
                                   "field"), "field grid")
    spec = spectrum.sweep_field(grid.values(), cfg.model, cfg.quadrature)
    io.write_spectrum_csv(spec, _output(args, cfg))
    maxima, minima = _local_extrema(spec.axis, spec.rates)
    return (f"sweep-b: {len(spec)} points, {len(maxima)} maxima at B = {_fmt(maxima)} G, "
            f"{len(minima)} minima at B = {_fmt(minima)} G")


def _cmd_sweep_delta(args, cfg):
    grid = _require(_override_grid(cfg.detuning_grid, args.delta_start, args.delta_stop,
                                   args.delta_count, "detuning"), "detuning grid")
    fixed_b = _require(args.fixed_b if args.fixed_b is not None else cfg.fixed_b, "fixed_b")
    spec = spectrum.sweep_detuning(grid.values(), fixed_b, cfg.model, cfg.quadrature)
    io.write_spectrum_csv(spec, _output(args, cfg))
    fit = analysis.lorentzian_fit(spec)
    return (f"sweep-delta: {len(spec)} points at B = {fixed_b:.6g} G, peak at "
            f"delta = {fit.center:.6g} MHz (Lorentzian fwhm {fit.fwhm:.6g} MHz)")


def _cmd_fit(args, cfg):
    path = args.input if args.input is not None else cfg.input
    data = io.read_spectrum_csv(_require(path, "input spectrum (--input or io.input)"))
    initial = cfg.model.replace(**cfg.fit.initial)
    fixed_b = args.fixed_b if args.fixed_b is not None else cfg.fixed_b
    result = analysis.fit_model(data, initial, cfg.fit.free, cfg.fit.bounds, cfg.quadrature,
                                fixed_b=fixed_b, max_iter=cfg.fit.max_iter)
    payload = {
        "converged": result.converged,
        "iterations": result.iterations,
        "residual_norm": result.residual_norm,
        "values": dict(zip(result.names, result.values)),
        "sigma": dict(zip(result.names, result.sigma)),
        "model": result.params.to_dict(),
    }
    _write_json(_output(args, cfg), payload)
    fitted = ", ".join(f"{n} = {v:.8g} +- {s:.2g}"
                       for n, v, s in zip(result.names, result.values, result.sigma))
    return (f"fit: converged = {str(result.converged).lower()} after {result.iterations} "
            f"iterations, {fitted or 'no free parameters'}, "
            f"residual_norm = {result.residual_norm:.6g}")


def _cmd_shift_scan(args, cfg):
    grid = _require(_override_grid(cfg.detuning_grid, args.delta_start, args.delta_stop,
                                   args.delta_count, "detuning"), "detuning grid")
    fields = cfg.shift.fields or ((cfg.fixed_b,) if cfg.fixed_b is not None else ())
    fields = np.asarray(_require(fields or None, "shift_scan.fields"), dtype=float)
    slopes, sigmas = np.empty(fields.size), np.empty(fields.size)
    for i, b in enumerate(fields):
        scan = analysis.shift_scan(
            cfg.model, cfg.shift.intensities, b, grid.values(), cfg.quadrature,
            rabi_scaling=cfg.shift.rabi_scaling, omega_share=cfg.shift.omega_share,
            light_shift_slope=cfg.shift.light_shift_slope)
        slopes[i], sigmas[i] = scan.slope, scan.slope_sigma
    order = np.argsort(fields)
    io.write_csv(_output(args, cfg), ("B_G", "slope_MHz_per_W_cm2", "sigma_MHz_per_W_cm2"),
                 [fields[order], slopes[order], sigmas[order]])
    changes = int(np.sum(np.diff(np.sign(slopes[order])) != 0))
    return (f"shift-scan: {fields.size} fields, slope from {slopes.min():.6g} to "
            f"{slopes.max():.6g} MHz/(W/cm^2), {changes} sign changes")


def _cmd_decay(args, cfg):
    d = cfg.decay
    k_av = d.k_av
    if k_av is None:
        b = _require(d.b_field if d.b_field is not None else cfg.fixed_b, "decay.b_field")
        k_av = spectrum.thermal_average(b, cfg.model, cfg.quadrature)
    times = np.linspace(0.0, d.t_stop, d.count)
    trace = trapsim.synthesize_trace(d.n0, k_av, times, d.noise_rel, cfg.seed)
    io.write_trace_csv(trace, _output(args, cfg))
    k_fit, sigma = trapsim.extract_k(trace)
    return (f"decay: K_in = {k_av:.6g} cm^3/s, K_fit = {k_fit:.6g} +- {sigma:.2g} cm^3/s "
            f"from {len(trace)} samples")


def _cmd_fano_min(args, cfg):
    b = analysis.fano_minimum_field(cfg.model, args.resonance)
    q = cfg.model.q(args.resonance)
    if args.out is not None or cfg.output is not None:
        _write_json(_output(args, cfg), {"resonance": args.resonance, "q": q, "b_min_G": b})
    return f"fano-min: resonance {args.resonance}, q = {q:.6g}, B_min = {b:.10g} G"


_COMMANDS = {
    "sweep-b": _cmd_sweep_b,
    "sweep-delta": _cmd_sweep_delta,
    "fit": _cmd_fit,
    "shift-scan": _cmd_shift_scan,
    "decay": _cmd_decay,
    "fano-min": _cmd_fano_min,
}


def run_command(argv=None, stdout=None, stderr=None):
    """Run one subcommand; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = io.load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.quad_nodes is not None:
            cfg = replace(cfg, quadrature=replace(cfg.quadrature, node_count=args.quad_nodes))
        summary = _COMMANDS[args.command](args, cfg)
    except _UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_FIT
    except FanoPAError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return exc.category
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_IO
    print(summary, file=stdout)
    return 0


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
