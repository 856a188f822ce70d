"""Command-line front-end.

Every subcommand reads a JSON configuration (``--config`` or a bundled
``--preset``), applies command-line overrides, writes a resolved-config echo
plus its report files into ``--out`` and prints one summary line.  Exit
statuses: 0 ok, 2 configuration error, 3 numerical failure, 4 precondition
rejection.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import discretize, normalform, resolvent, spectrum
from .errors import ConfigError, FieldError
from .model import DEFAULT_GRID_NODES, ModelParams, SpatialGrid

SECTIONS = ("spectrum", "eigfun", "resolvent_check", "hopf", "double_hopf", "simulate",
            "discrete_spectrum")
_TERM_OVERRIDE = re.compile(r"^--(mu|c-hat)(\d+)$")


def _pair(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _as_complex(value: Any, key: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"'{key}' must be a number or [re, im], got {value!r}", key=key)


def _number_list(value: Any, key: str, length: int, kind=float) -> list:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ConfigError(f"'{key}' must be a list of {length} numbers, got {value!r}", key=key)
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and v != int(v)):
            raise ConfigError(f"'{key}' must hold {kind.__name__} values, got {value!r}", key=key)
        out.append(kind(v))
    return out


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


class Run:
    """Resolved configuration of one command invocation."""

    def __init__(self, command: str, args: argparse.Namespace, term_overrides: dict):
        self.command = command
        self.section_name = command.replace("-", "_")
        raw = self._load(args)
        unknown = set(raw) - {"model", "grid", "tol", *SECTIONS}
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown configuration key '{key}'", key=key)
        if "model" not in raw:
            raise ConfigError("configuration has no 'model' section", key="model")
        overrides = {"alpha": args.alpha, "tau0": args.tau0, "r": args.r, **term_overrides}
        self.params = ModelParams.from_dict(raw["model"]).with_overrides(**overrides)
        section = raw.get(self.section_name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"'{self.section_name}' must be a JSON object", key=self.section_name)
        self.section = dict(section)
        self.grid_nodes = self._int_option(args.grid, raw.get("grid"), DEFAULT_GRID_NODES, "grid")
        tol = args.tol if args.tol is not None else raw.get("tol", spectrum.NEWTON_TOL)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
            raise ConfigError(f"'tol' must be a positive number, got {tol!r}", key="tol")
        self.tol = float(tol)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.resolved: dict = {}

    @staticmethod
    def _load(args) -> dict:
        if args.config and args.preset:
            raise ConfigError("give either --config or --preset, not both", key="config")
        if args.preset:
            try:
                text = resources.files("delayfield.presets").joinpath(f"{args.preset}.json").read_text()
            except FileNotFoundError as exc:
                raise ConfigError(f"unknown preset '{args.preset}'", key="preset") from exc
            source = f"preset {args.preset}"
        elif args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}", key="config") from exc
            source = args.config
        else:
            raise ConfigError("a --config file or --preset is required", key="config")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {source}: {exc}", key="json") from exc
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object", key="config")
        return data

    @staticmethod
    def _int_option(flag, configured, default, key) -> int:
        value = flag if flag is not None else configured if configured is not None else default
        if isinstance(value, bool) or not isinstance(value, int) or value < 2:
            raise ConfigError(f"'{key}' must be an integer >= 2, got {value!r}", key=key)
        return value

    def option(self, name: str, flag, default=None, convert: Callable | None = None):
        """Flag value if given, else the config section entry, else ``default``."""
        if flag is not None:
            value = flag
        elif name in self.section:
            value = self.section[name]
        elif default is not None:
            value = default
        else:
            raise ConfigError(f"'{self.section_name}.{name}' is required", key=f"{self.section_name}.{name}")
        if convert is not None:
            value = convert(value, f"{self.section_name}.{name}")
        self.resolved[name] = value
        return value

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid.uniform(self.grid_nodes)

    def echo(self) -> None:
        _write_json(self.out / "resolved_config.json", {
            "model": self.params.to_dict(),
            "grid": self.grid_nodes,
            "tol": self.tol,
            self.section_name: self.resolved,
        })


def _region(value, key):
    return _number_list(value, key, 4)


def _seed_shape(value, key):
    return _number_list(value, key, 2, int)


def _complex_option(value, key):
    return _pair(_as_complex(value, key))


def _refine(seed: complex, run: Run) -> complex:
    return spectrum.newton_solve(seed, run.params, run.tol)


def cmd_spectrum(run: Run, args) -> str:
    region = run.option("region", args.region, convert=_region)
    seeds = run.option("seeds", args.seeds, [40, 40], _seed_shape)
    result = spectrum.spectrum_scan(region, tuple(seeds), run.params, run.grid, run.tol)
    result.to_csv(run.out / "spectrum.csv")
    report = {
        "accepted": [_pair(r.lam) for r in result.accepted],
        "rejected": [{"lambda": _pair(r.lam), "reason": r.reason} for r in result.rejected],
        "unresolved": [{"lambda": _pair(r.lam), "reason": r.reason} for r in result.unresolved],
    }
    _write_json(run.out / "spectrum.json", report)
    lead = max(result.accepted, key=lambda r: (r.lam.real, r.lam.imag), default=None)
    tail = f", rightmost {lead.lam:.10g}" if lead else ""
    return (f"{len(result.accepted)} accepted, {len(result.rejected)} rejected, "
            f"{len(result.unresolved)} unresolved{tail}")


def _eigen_report(e: spectrum.EigenData) -> dict:
    return {
        "lambda": _pair(e.lam),
        "rho": [_pair(v) for v in e.poly.rho],
        "gamma": [_pair(v) for v in e.gamma],
        "residual": e.residual,
        "smin_ratio": e.smin,
        "grid_nodes": e.grid.size,
    }


def cmd_eigfun(run: Run, args) -> str:
    seed = complex(*run.option("seed", args.seed, convert=_complex_option))
    lam = _refine(seed, run)
    e = spectrum.eigen_data(lam, run.params, run.grid)
    with open(run.out / "eigfun.csv", "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["x", "re_q", "im_q", "abs_q", "arg_q"])
        for x, q in zip(e.grid.nodes, e.qsamples):
            out.writerow([f"{v:.17g}" for v in (x, q.real, q.imag, abs(q), np.angle(q))])
    _write_json(run.out / "eigfun.json", _eigen_report(e))
    return f"eigenvalue {lam:.15g}, residual {e.residual:.3g}"


def cmd_resolvent_check(run: Run, args) -> str:
    z = complex(*run.option("z", args.z, convert=_complex_option))
    grid = run.grid
    # smooth non-trivial right-hand side
    h = np.cos(2.0 * grid.nodes) + 0.5j * grid.nodes
    res = resolvent.resolve(z, h, run.params, grid)
    residual = resolvent.resolvent_residual(res, h, run.params)
    with open(run.out / "resolvent.csv", "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["x", "re_q", "im_q", "abs_residual"])
        for x, q, r in zip(grid.nodes, res.qsamples, residual):
            out.writerow([f"{x:.17g}", f"{q.real:.17g}", f"{q.imag:.17g}", f"{abs(r):.17g}"])
    worst = float(np.max(np.abs(residual)))
    _write_json(run.out / "resolvent.json", {
        "z": _pair(z),
        "rhs": "cos(2x) + 0.5i x",
        "max_residual": worst,
        "t_condition": res.t_cond,
        "s_condition": res.s_cond,
        "gamma0": [_pair(v) for v in res.gamma0],
    })
    return f"max residual {worst:.3g} at z = {z:.6g}"


def _gamma_from_config(run: Run, n: int) -> np.ndarray:
    values = run.section.get("gamma")
    if not isinstance(values, list) or len(values) != 2 * n:
        raise ConfigError(f"'hopf.gamma' must list {2 * n} coefficients", key="hopf.gamma")
    run.resolved["gamma"] = values
    return np.array([_as_complex(v, "hopf.gamma") for v in values])


def cmd_hopf(run: Run, args) -> str:
    seed = complex(*run.option("seed", args.seed, convert=_complex_option))
    source = run.option("gamma_source", args.gamma, "own")
    if source not in ("own", "config"):
        raise ConfigError("'hopf.gamma_source' must be 'own' or 'config'", key="hopf.gamma_source")
    radius = run.option("radius", args.radius, 0.0)
    nodes = run.option("nodes", args.nodes, normalform.DEFAULT_NODES)
    lam = _refine(seed, run)
    e = spectrum.eigen_data(lam, run.params, run.grid)
    if source == "config":
        e = e.with_gamma(_gamma_from_config(run, run.params.n_terms))
    contour = normalform.certify_contour(e, run.params, radius or None, nodes)
    nf = normalform.hopf_g21(e, run.params, contour)
    report = {
        "eigen": _eigen_report(e),
        "gamma_source": source,
        "omega0": nf.omega0,
        "g21": _pair(nf.g21),
        "l1": nf.l1,
        "verdict": nf.verdict.value,
        "contour": {"center": _pair(contour.center), "radius": contour.radius, "nodes": contour.nodes},
        "fit_residual": nf.fit_residual,
    }
    _write_json(run.out / "hopf.json", report)
    return nf.summary()


def cmd_double_hopf(run: Run, args) -> str:
    def two_seeds(value, key):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError(f"'{key}' must list two seeds", key=key)
        return [_complex_option(v, key) for v in value]

    seeds = run.option("seeds", args.seeds, convert=two_seeds)
    crits = [spectrum.eigen_data(_refine(complex(*s), run), run.params, run.grid) for s in seeds]
    nf = normalform.doublehopf_coeffs(crits[0], crits[1], run.params)
    report = {
        "eigen": [_eigen_report(e) for e in crits],
        "normalization": "largest |gamma| entry equals 1",
        "omega": [nf.omega1, nf.omega2],
        "g2100": _pair(nf.g2100),
        "g1011": _pair(nf.g1011),
        "g1110": _pair(nf.g1110),
        "g0021": _pair(nf.g0021),
        "p": nf.p.tolist(),
        "theta": nf.theta,
        "delta": nf.delta,
        "kind": nf.kind,
        "subtype": nf.subtype,
        "contours": [{"center": _pair(c.center), "radius": c.radius, "nodes": c.nodes}
                     for c in nf.contours],
        "fit_residuals": list(nf.fit_residuals),
        "note": nf.note,
    }
    _write_json(run.out / "double_hopf.json", report)
    return nf.summary()


def parse_history(spec: str) -> tuple[Callable, str]:
    """``const:eps``, ``linear:eps`` or ``file:path`` (CSV ``t,x,V`` rows)."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "const":
            return discretize.constant_history(float(arg)), spec
        if kind == "linear":
            return discretize.linear_history(float(arg)), spec
    except ValueError as exc:
        raise ConfigError(f"bad history amplitude in '{spec}'", key="simulate.history") from exc
    if kind == "file":
        return _history_from_file(Path(arg)), spec
    raise ConfigError(f"history must be const:eps, linear:eps or file:path, got '{spec}'",
                      key="simulate.history")


def _history_from_file(path: Path) -> Callable:
    """Tabulated history on a rectangular ``(t, x)`` grid, bilinearly interpolated."""
    from scipy.interpolate import RegularGridInterpolator

    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read history table {path}: {exc}", key="simulate.history") from exc
    if data.shape[1] != 3:
        raise ConfigError("history table needs columns t,x,V", key="simulate.history")
    ts, xs = np.unique(data[:, 0]), np.unique(data[:, 1])
    if ts.size * xs.size != data.shape[0]:
        raise ConfigError("history table must cover a full (t, x) grid", key="simulate.history")
    order = np.lexsort((data[:, 1], data[:, 0]))
    values = data[order, 2].reshape(ts.size, xs.size)
    table = RegularGridInterpolator((ts, xs), values, bounds_error=False, fill_value=None)

    def history(t, x):
        t, x = np.broadcast_arrays(t, x)
        return table(np.stack([t.ravel(), x.ravel()], axis=-1)).reshape(t.shape)

    return history


def _as_int(value, key):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}", key=key)
    return value


def _as_float(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}", key=key)
    return float(value)


def cmd_simulate(run: Run, args) -> str:
    m = run.option("m", args.m, 50, _as_int)
    dt_div = run.option("dt_div", args.dt_div, 4, _as_int)
    t_end = run.option("t_end", args.t_end, 400.0, _as_float)
    window = run.option("window", args.window, 40.0, _as_float)
    keep = run.option("keep_every", args.keep_every, 1, _as_int)
    history, tag = parse_history(run.option("history", args.history, "const:0.01"))
    dm = discretize.build(m, run.params)
    tr = discretize.simulate(dm, history, t_end, dt_div=dt_div, keep_every=keep, tag=tag)
    tr.to_csv(run.out / "trajectory.csv")
    report: dict = {"m": m, "dt": tr.metadata["dt"], "t_end": tr.metadata["t_end"], "history": tag}
    try:
        diag = discretize.attractor_diagnostics(tr, window)
    except (FieldError, ValueError) as exc:
        report["attractor"] = {"converged": False, "error": str(exc)}
        _write_json(run.out / "simulate.json", report)
        return f"no periodic attractor detected ({exc})"
    report["attractor"] = {
        "period": diag.period,
        "previous_period": diag.previous_period,
        "converged": diag.converged,
        "node": diag.node,
        "amplitude_profile": diag.amplitude_profile.tolist(),
    }
    _write_json(run.out / "simulate.json", report)
    state = "converged" if diag.converged else "not converged"
    return f"period {diag.period:.6g}, {state}"


def cmd_discrete_spectrum(run: Run, args) -> str:
    m = run.option("m", args.m, 50, _as_int)
    region = run.option("region", args.region, convert=_region)
    seeds = run.option("seeds", args.seeds, [10, 24], _seed_shape)
    dm = discretize.build(m, run.params)
    roots = discretize.discrete_spectrum_scan(dm, region, tuple(seeds), tol=run.tol)
    with open(run.out / "discrete_spectrum.csv", "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["re_lambda", "im_lambda"])
        for z in roots:
            out.writerow([f"{z.real:.17g}", f"{z.imag:.17g}"])
    _write_json(run.out / "discrete_spectrum.json", {"m": m, "roots": [_pair(z) for z in roots]})
    lead = f", rightmost {roots[0]:.10g}" if roots else ""
    return f"{len(roots)} roots for m = {m}{lead}"


COMMANDS = {
    "spectrum": cmd_spectrum,
    "eigfun": cmd_eigfun,
    "resolvent-check": cmd_resolvent_check,
    "hopf": cmd_hopf,
    "double-hopf": cmd_double_hopf,
    "simulate": cmd_simulate,
    "discrete-spectrum": cmd_discrete_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON configuration file")
    shared.add_argument("--preset", help="bundled configuration: hopf, doublehopf or fig1")
    shared.add_argument("--out", default=".", help="output directory (default: current)")
    shared.add_argument("--tol", type=float, help="Newton tolerance")
    shared.add_argument("--grid", type=int, help="spatial quadrature nodes")
    shared.add_argument("--alpha", type=float)
    shared.add_argument("--tau0", type=float)
    shared.add_argument("--r", type=float, help="activation steepness")

    parser = argparse.ArgumentParser(
        prog="delayfield",
        description="Spectra, normal forms and simulations of delayed neural fields.",
        epilog="Connectivity terms can be overridden with --mu<i> and --c-hat<i> (1-based).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def region_args(p):
        p.add_argument("--region", type=float, nargs=4, metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
        p.add_argument("--seeds", type=int, nargs=2, metavar=("NX", "NY"))

    p = sub.add_parser("spectrum", parents=[shared], help="scan for eigenvalues")
    region_args(p)
    p = sub.add_parser("eigfun", parents=[shared], help="eigenfunction at a refined eigenvalue")
    p.add_argument("--seed", type=float, nargs=2, metavar=("RE", "IM"))
    p = sub.add_parser("resolvent-check", parents=[shared], help="solve Delta(z) q = h and report residuals")
    p.add_argument("--z", type=float, nargs=2, metavar=("RE", "IM"))
    p = sub.add_parser("hopf", parents=[shared], help="Hopf normal form coefficient")
    p.add_argument("--seed", type=float, nargs=2, metavar=("RE", "IM"))
    p.add_argument("--gamma", choices=("own", "config"),
                   help="use the computed null vector or the coefficients listed in the config")
    p.add_argument("--radius", type=float, help="contour radius (default: certified)")
    p.add_argument("--nodes", type=int, help="contour nodes")
    p = sub.add_parser("double-hopf", parents=[shared], help="double Hopf normal form coefficients")
    p.add_argument("--seeds", type=float, nargs=4, metavar=("RE1", "IM1", "RE2", "IM2"))
    p = sub.add_parser("simulate", parents=[shared], help="integrate the discretized field")
    p.add_argument("--m", type=int, help="mesh intervals (even)")
    p.add_argument("--dt-div", type=int, help="time steps per mesh spacing")
    p.add_argument("--t-end", type=float)
    p.add_argument("--history", help="const:EPS, linear:EPS or file:PATH")
    p.add_argument("--window", type=float, help="trailing window for period detection")
    p.add_argument("--keep-every", type=int)
    p = sub.add_parser("discrete-spectrum", parents=[shared], help="roots of the discretized determinant")
    p.add_argument("--m", type=int, help="mesh intervals (even)")
    region_args(p)
    return parser


def _split_term_overrides(argv: list) -> tuple[list, dict]:
    rest, terms = [], {}
    it = iter(argv)
    for token in it:
        name, eq, inline = token.partition("=")
        match = _TERM_OVERRIDE.match(name)
        if not match:
            rest.append(token)
            continue
        raw = inline if eq else next(it, None)
        key = f"{match.group(1).replace('-', '_')}{match.group(2)}"
        try:
            terms[key] = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"override {name} needs a number, got {raw!r}", key=key) from None
    return rest, terms


def main(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv, terms = _split_term_overrides(argv)
        args = build_parser().parse_args(argv)
        if args.command == "double-hopf" and args.seeds is not None:
            args.seeds = [args.seeds[:2], args.seeds[2:]]
        run = Run(args.command, args, terms)
        summary = COMMANDS[args.command](run, args)
        run.echo()
    except FieldError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0) if isinstance(exc.code, int) else 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
