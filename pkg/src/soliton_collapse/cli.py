"""Command-line frontend: simulate, fit, predict, stability and converge.

Every subcommand reads one JSON config and writes CSV files (and optionally
SVG plots) into an output directory.  Exit codes: 0 success, 1 bad config or
usage, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import convergence, fitting, predictions, stability, workflows
from .core import ConfigError, InitialProfile, SimConfig, StopReason, make_grid
from .integrator import run


class RuntimeFailure(RuntimeError):
    """A run or fit failed after the config was accepted."""


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.12g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def svg_polyline(series, title="", xlabel="", ylabel="", width=640, height=400) -> str:
    """A bare-bones line plot; ``series`` is a list of ``(label, xs, ys)``."""
    pad = 50
    xs_all = np.concatenate([np.asarray(s[1], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], float) for s in series])
    finite = np.isfinite(xs_all) & np.isfinite(ys_all)
    x0, x1 = (xs_all[finite].min(), xs_all[finite].max()) if finite.any() else (0.0, 1.0)
    y0, y1 = (ys_all[finite].min(), ys_all[finite].max()) if finite.any() else (0.0, 1.0)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" '
        f'text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" font-size="10" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad + 8}" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, (label, xs, ys) in enumerate(series):
        color = colors[i % len(colors)]
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)
        )
        out.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 4}" y="{pad + 16 * (i + 1)}" fill="{color}" '
                   f'text-anchor="end" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


class Output:
    """Writes files into one directory, refusing to clobber unless forced."""

    def __init__(self, root: Path, force: bool):
        self.root, self.force = root, force
        self.pending = {}

    def add(self, name: str, text: str):
        self.pending[name] = text

    def commit(self):
        # check everything first so a refused run leaves no partial output
        if not self.force:
            clash = [n for n in self.pending if (self.root / n).exists()]
            if clash:
                raise ConfigError(f"{clash[0]} exists in {self.root}; pass --force to overwrite")
        for name, text in self.pending.items():
            path = self.root / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)


# --- config parsing ----------------------------------------------------------


def _get(cfg, key, kind=float, default=...):
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"missing config field '{key}'")
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{key}': {cfg[key]!r}") from exc


def sim_config_from(cfg: dict) -> SimConfig:
    """Build a :class:`SimConfig` from a JSON dict mirroring its field names."""
    if not isinstance(cfg, dict):
        raise ConfigError("simulation config must be an object")
    grid = cfg.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("missing config object 'grid' with 'dr' and 'r_max'")
    prof = cfg.get("profile")
    if not isinstance(prof, dict):
        raise ConfigError("missing config object 'profile' with 'f0'")
    try:
        return SimConfig(
            model=_get(cfg, "model", str),
            grid=make_grid(_get(grid, "dr"), _get(grid, "r_max")),
            dt=_get(cfg, "dt"),
            v0=_get(cfg, "v0"),
            profile=InitialProfile(
                f0=_get(prof, "f0"), kind=_get(prof, "kind", str, "Flat"), p=_get(prof, "p", float, 0.0)
            ),
            t_end=_get(cfg, "t_end"),
            outer_bc=_get(cfg, "outer_bc", str, "Flat"),
            corrector_iterations=_get(cfg, "corrector_iterations", int, 6),
            stop_fraction=_get(cfg, "stop_fraction", float, 1e-3),
            snapshot_times=tuple(float(t) for t in cfg.get("snapshot_times", ())),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _window_from(spec):
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "AfterFraction":
        return fitting.AfterFraction(_get(spec, "fraction"), _get(spec, "f0", float, None))
    if kind == "TimeRange":
        return fitting.TimeRange(_get(spec, "t_start"), _get(spec, "t_stop"))
    if kind == "BeforeBoundaryHit":
        return fitting.BeforeBoundaryHit(_get(spec, "a_max"))
    raise ConfigError(f"unknown window kind {kind!r}")


def _times_from(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if isinstance(spec, dict):
        count = _get(spec, "count", int)
        if count < 2:
            raise ConfigError("times.count must be at least 2")
        return np.linspace(_get(spec, "start"), _get(spec, "stop"), count)
    raise ConfigError("'times' must be a list or {start, stop, count}")


def _read_csv(path: Path):
    if not path.exists():
        raise ConfigError(f"missing input file {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


# --- commands ------------------------------------------------------------------


def cmd_simulate(cfg, out: Output, svg: bool, threads: int):
    config = sim_config_from(cfg)
    result = run(config)
    out.add("origin.csv", csv_text(["t", "f0_t"], zip(result.times, result.origin)))
    r = config.grid.radii
    for t, f in result.snapshots:
        out.add(f"snapshots/snapshot_{t:g}.csv", csv_text(["r", "f"], zip(r, f)))
    out.add("run.csv", csv_text(["stop_reason", "steps", "t_final"],
                                [(result.stop_reason.value, len(result.times) - 1, result.times[-1])]))
    if svg:
        out.add("origin.svg", svg_polyline([("f(0,t)", result.times, result.origin)],
                                           title="origin height", xlabel="t", ylabel="f(0,t)"))
    out.commit()
    if result.stop_reason is StopReason.NON_FINITE:
        raise RuntimeFailure(f"run became non-finite at t={result.times[-1]:g}")


def _load_snapshots(source: Path):
    files = sorted((source / "snapshots").glob("snapshot_*.csv"))
    if not files:
        raise ConfigError(f"no snapshots under {source}")
    snaps = []
    r = None
    for path in files:
        rr, f = _read_csv(path)
        r = rr if r is None else r
        snaps.append((float(path.stem[len("snapshot_"):]), f))
    snaps.sort(key=lambda s: s[0])
    return r, snaps


def cmd_fit(cfg, out: Output, svg: bool, threads: int):
    # relative input paths are resolved against the working directory
    source = Path(_get(cfg, "input", str))
    fitter = _get(cfg, "fitter", str)
    window = _window_from(cfg.get("window"))
    wdesc = window.describe() if window is not None else "all"
    try:
        if fitter in ("line", "parabola"):
            t, f = _read_csv(source / "origin.csv")
            if window is not None:
                t, f = fitting.select_fit_window(t, f, window)
            if fitter == "line":
                fit = fitting.fit_line(t, f)
                header, row = ["m", "b", "zero_crossing", "rms"], [fit.m, fit.b, fit.zero_crossing, fit.rms]
            else:
                fit = fitting.fit_parabola_vertex(t, f)
                header, row = ["a", "T", "offset", "rms"], [fit.a, fit.T, fit.offset, fit.rms]
            out.add("fit.csv", csv_text(["fitter", "window", *header], [[fitter, wdesc, *row]]))
            if svg:
                out.add("fit.svg", svg_polyline([("data", t, f), (fitter, t, fit(t))], title=f"{fitter} fit",
                                                xlabel="t", ylabel="f(0,t)"))
        elif fitter == "c_R":
            t, f = _read_csv(source / "origin.csv")
            trim = tuple(cfg.get("trim", (0.1, 0.1)))
            c, R, line = predictions.extract_c_R(t, f, trim)
            out.add("fit.csv", csv_text(["fitter", "window", "c", "R_eff", "m", "b", "rms"],
                                        [[fitter, f"trim {trim[0]:g}/{trim[1]:g}", c, R, line.m, line.b,
                                          line.rms]]))
        elif fitter in ("ellipse", "hyperbola", "ellipse_laws", "asymptote_line"):
            r, snaps = _load_snapshots(source)
            kind = "hyperbola" if fitter in ("hyperbola", "asymptote_line") else "ellipse"
            series = workflows.conic_series(r, snaps, kind, cfg.get("height_fraction"))
            if fitter == "ellipse_laws":
                laws = workflows.ellipse_laws(series, _get(cfg, "r_max", float, r[-1]),
                                              _get(cfg, "t_start", float, 10.0))
                names = ["m_a", "b_a", "c", "m_k", "b_k", "samples"]
                out.add("fit.csv", csv_text(["fitter", "window", *names],
                                            [[fitter, f"a < {r[-1]:g}", *(getattr(laws, n) for n in names)]]))
            elif fitter == "asymptote_line":
                line = workflows.asymptote_line(series, _get(cfg, "t_start", float, 5.0),
                                                _get(cfg, "t_stop", float, math.inf))
                out.add("fit.csv", csv_text(["fitter", "window", "m", "b", "rms"],
                                            [[fitter, wdesc, line.m, line.b, line.rms]]))
            else:
                rows = [[fitter, "bump", t, a, b, k, e]
                        for t, a, b, k, e in zip(series.times, series.a, series.b, series.k, series.rms)]
                out.add("fit.csv", csv_text(["fitter", "window", "t", "a", "b", "k", "rms"], rows))
        else:
            raise ConfigError(f"unknown fitter {fitter!r}")
    except fitting.FitError as exc:
        raise RuntimeFailure(f"fit failed: {exc}") from exc
    out.commit()


def cmd_predict(cfg, out: Output, svg: bool, threads: int):
    kind = _get(cfg, "kind", str)
    times = _times_from(cfg.get("times"))
    try:
        if kind == "parabola":
            pred = predictions.predict_parabola(_get(cfg, "model", str), _get(cfg, "f0"), _get(cfg, "v0"))
            f = pred(times)
            params = ["a", "T"], [pred.a, pred.T]
        elif kind == "trajectory_q1":
            traj = predictions.trajectory_q1(_get(cfg, "f0"), _get(cfg, "c"), _get(cfg, "R"), times)
            f = traj.f
            params = ["c", "R_eff", "collapse_time"], [traj.c, traj.R_eff, traj.collapse_time]
        else:
            raise ConfigError(f"unknown prediction kind {kind!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out.add("predicted.csv", csv_text(["t", "f"], zip(times, f)))
    out.add("prediction.csv", csv_text(["kind", *params[0]], [[kind, *params[1]]]))
    if svg:
        out.add("predicted.svg", svg_polyline([(kind, times, f)], title="prediction", xlabel="t", ylabel="f(0,t)"))
    out.commit()


def _contexts(cfg):
    model = _get(cfg, "model", str)
    if "sweep" in cfg:
        sw = cfg["sweep"]
        grid = [[float(v) for v in sw.get(k, [])] for k in ("f0", "fdot0", "dr")]
        ns = [int(n) for n in sw.get("n", [])]
        return model, [(f0, v, dr, n) for f0 in grid[0] for v in grid[1] for dr in grid[2] for n in ns]
    return model, [(_get(cfg, "f0"), _get(cfg, "fdot0"), _get(cfg, "dr"), _get(cfg, "n", int))]


def cmd_stability(cfg, out: Output, svg: bool, threads: int):
    model, combos = _contexts(cfg)
    if not combos:
        raise ConfigError("empty stability sweep")
    spec_rows, mat_rows = [], []
    try:
        for f0, v, dr, n in combos:
            ctx = stability.StabilityContext(model, n, f0, v, dr)
            mat = stability.build_linearized_matrix(ctx)
            spec = stability.eigenvalues(mat)
            for z in spec.eigenvalues:
                spec_rows.append([ctx.model.value, n, f0, v, dr, z.real, z.imag])
            if len(combos) == 1:
                dense = mat.dense()
                mat_rows = [[i + 1, j + 1, dense[i, j]] for i in range(n) for j in range(n) if dense[i, j] != 0]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except stability.EigenvalueError as exc:
        raise RuntimeFailure(str(exc)) from exc
    out.add("spectrum.csv", csv_text(["model", "n", "f0", "fdot0", "dr", "re", "im"], spec_rows))
    if mat_rows:
        out.add("matrix.csv", csv_text(["i", "j", "value"], mat_rows))
    vn = cfg.get("von_neumann")
    if vn is not None:
        dr, count = _get(vn, "dr"), _get(vn, "kappa_count", int, 64)
        kappas = np.linspace(0.0, math.pi / dr, count + 1)[1:-1]
        rows = []
        try:
            for kappa in kappas:
                query = stability.VNQuery(model, kappa, _get(vn, "r"), _get(vn, "f0"), dr, _get(vn, "dt"))
                res = stability.von_neumann(query)
                rows.append([kappa, res.J.real, res.J.imag, res.growth_plus, res.growth_minus])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        out.add("vn.csv", csv_text(["kappa", "re_J", "im_J", "growth_plus", "growth_minus"], rows))
        if svg:
            k = np.array([r[0] for r in rows])
            out.add("vn.svg", svg_polyline([("|x+|", k, [r[3] for r in rows]), ("|x-|", k, [r[4] for r in rows])],
                                           title="growth factors", xlabel="kappa", ylabel="|x|"))
    out.commit()


def _probe_job(args):
    cfg, probes, t_probe, lag = args
    return convergence.probe_values(cfg, probes, t_probe, lag)


def cmd_converge(cfg, out: Output, svg: bool, threads: int):
    base = sim_config_from(cfg.get("base"))
    vary = _get(cfg, "vary", str)
    values = [float(v) for v in cfg.get("values", [])]
    if not values:
        raise ConfigError("'values' must list the step sizes to run")
    reference = _get(cfg, "reference")
    t_probe = _get(cfg, "t_probe")
    lag = _get(cfg, "lag_steps", int, workflows.standard_lag(base.model))
    if "probes" in cfg:
        probes = tuple(convergence.Probe(float(p["r"]), str(p["label"]), int(p.get("node_offset", 0)))
                       for p in cfg["probes"])
    else:
        probes = workflows.STANDARD_PROBES
    if vary == "dt":
        make = lambda s: dataclasses.replace(base, dt=s)  # noqa: E731
        refine = convergence.refine_time
    elif vary == "dr":
        make = lambda s: dataclasses.replace(base, grid=make_grid(s, base.grid.r_max))  # noqa: E731
        refine = convergence.refine_space
    else:
        raise ConfigError("'vary' must be 'dt' or 'dr'")
    cache = {}
    if threads > 1:
        configs = [make(s) for s in [reference, *values]]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = pool.map(_probe_job, [(c, probes, t_probe, lag) for c in configs])
            for c, res in zip(configs, results):
                cache[(c, t_probe, lag, tuple(probes))] = res
    try:
        table = refine(base, values, reference, probes, t_probe, lag, cache)
    except RuntimeError as exc:
        raise RuntimeFailure(str(exc)) from exc
    labels = [p.label for p in probes]
    qlabels = ["q" + (lab[1:] if lab.startswith("E") else lab) for lab in labels]
    rows = []
    for row in table.rows:
        q = row.quotients or {}
        rows.append([row.h, *(row.errors[lab] for lab in labels), *(q.get(lab, math.nan) for lab in labels)])
    out.add("table.csv", csv_text(["h", *labels, *qlabels], rows))
    ref_row = [[table.reference_step, *(table.reference_values[lab] for lab in labels)]]
    out.add("reference.csv", csv_text(["step", *labels], ref_row))
    if svg:
        hs = [r.h for r in table.rows]
        curves = [(lab, hs, table.column("errors", lab)) for lab in labels]
        out.add("table.svg", svg_polyline(curves, title=f"error vs {vary}", xlabel="h", ylabel="error"))
    out.commit()


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "stability": cmd_stability,
    "converge": cmd_converge,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="soliton-collapse", description="Simulate and analyse shrinking solitons.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} step")
        p.add_argument("--config", required=True, type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        p.add_argument("--force", action="store_true", help="overwrite existing output files")
        p.add_argument("--svg", action="store_true", help="also write SVG plots")
        p.add_argument("--threads", type=int, default=1, help="worker processes for converge")
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        try:
            cfg = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        out = Output(args.out, args.force)
        COMMANDS[args.command](cfg, out, args.svg, args.threads)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except RuntimeFailure as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return 2
    return 0


def main():
    sys.exit(run_cli())
