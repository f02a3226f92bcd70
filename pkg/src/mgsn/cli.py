"""Command-line interface: ``mgsn <command> [flags]``.

Commands: simulate, fit, test, moments, pdf-grid, bench-tables, stiffness.
Reports go to stdout, the run manifest goes to stderr (and to
``--manifest`` if given).  Exit codes: 0 success, 2 input or validation
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import PRESETS, STIFFNESS_LABELS, simulation_params, stiffness
from .distribution import MgsnParams, mgsn_logpdf, mgsn_moments, moment_relation, params_from_moments
from .errors import MgsnError
from .estimation import DataMatrix, EmControl, default_grid, fit_normal, profile_fit
from .inference import TESTS
from .sampling import RNG_ALGORITHM, RngStream, sample_mgsn
from .series import SeriesControl

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

CONSTRAINT_NAMES = {"none": "none", "mu0": "mu_zero", "diag": "diag_sigma", "normal": "normal_p1"}


class UsageError(Exception):
    """Bad flags or input data; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    flags: dict
    rng: str = RNG_ALGORITHM
    seed: int | None = None
    series: dict = field(default_factory=dict)
    em: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    version: str = __version__

    def lines(self):
        out = [f"command = {self.command}"]
        out += [f"flag.{k} = {v}" for k, v in sorted(self.flags.items())]
        out.append(f"rng = {self.rng}")
        out.append(f"seed = {self.seed}")
        out += [f"series.{k} = {v}" for k, v in self.series.items()]
        out += [f"em.{k} = {v}" for k, v in self.em.items()]
        out.append(f"wall_clock_s = {self.wall_clock_s:.3f}")
        out.append(f"version = {self.version}")
        return out


# ---------------------------------------------------------------- parsing


def parse_vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.replace(" ", "").split(",") if s], dtype=float)
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}; expected comma-separated reals") from None
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise UsageError(f"vector {text!r} is empty or not finite")
    return v


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ';', entries by ','."""
    rows = [parse_vector(r) for r in text.split(";") if r.strip()]
    if not rows or len({r.size for r in rows}) != 1:
        raise UsageError(f"matrix {text!r} has ragged or missing rows")
    return np.vstack(rows)


def read_matrix_file(path) -> np.ndarray:
    """A square matrix file, one row per line, comma or whitespace separated."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    lines = [ln.replace(",", " ").split() for ln in text.splitlines() if ln.strip()]
    rows = []
    for i, parts in enumerate(lines, 1):
        try:
            rows.append([float(s) for s in parts])
        except ValueError:
            raise UsageError(f"{path}: row {i} is not numeric") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise UsageError(f"{path}: rows have different lengths")
    return np.array(rows)


def read_csv(path) -> DataMatrix:
    """Read a header + numeric-rows CSV; errors name the offending row and column."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise UsageError(f"{path}: not UTF-8 text") from None
    if not rows:
        raise UsageError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header)
    values = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d:
            raise UsageError(f"{path}: row {line} has {len(row)} columns, header has {d}")
        rec = []
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise UsageError(f"{path}: row {line}, column {j + 1} ({header[j]}): bad value {cell!r}")
            rec.append(v)
        values.append(rec)
    if len(values) < 2:
        raise UsageError(f"{path}: need at least two data rows, found {len(values)}")
    return DataMatrix(np.array(values), tuple(header))


def write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])


def _num(v) -> str:
    return repr(float(v))


def _grid(text):
    """``lo:hi:step`` or a comma-separated list of p values."""
    if text is None:
        return default_grid()
    try:
        if ":" in text:
            lo, hi, step = (float(s) for s in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            g = np.round(lo + step * np.arange(n), 12)
        else:
            g = parse_vector(text)
    except (ValueError, UsageError):
        raise UsageError(f"cannot parse grid {text!r}; use lo:hi:step or a list") from None
    if np.any(g <= 0) or np.any(g > 1):
        raise UsageError("grid values must lie in (0, 1]")
    return g


def _params(args) -> MgsnParams:
    try:
        if getattr(args, "preset", None):
            if args.preset == "sim":
                return simulation_params(0.5 if args.p is None else args.p)
            base = PRESETS[args.preset]
            return base if args.p is None else base.replace(p=args.p)
        if args.p is None or args.mu is None or (args.sigma is None and args.sigma_file is None):
            raise UsageError("need --p, --mu and --sigma or --sigma-file (or --preset)")
        sigma = read_matrix_file(args.sigma_file) if args.sigma_file else parse_matrix(args.sigma)
        return MgsnParams(args.p, parse_vector(args.mu), sigma)
    except MgsnError as exc:
        raise UsageError(str(exc)) from None


def _data(args) -> DataMatrix:
    if args.stiffness and args.input:
        raise UsageError("give either an input file or --stiffness, not both")
    if args.stiffness:
        return stiffness(raw=args.raw)
    if not args.input:
        raise UsageError("an input CSV or --stiffness is required")
    try:
        return read_csv(args.input)
    except MgsnError as exc:
        raise UsageError(str(exc)) from None


def _controls(args):
    try:
        ctl = EmControl(max_iter=args.max_iter, rel_tol=args.em_tol, paper_mode=args.paper_mode)
        sctl = SeriesControl(k_max=args.k_max, rel_tol=args.series_tol, paper_mode=args.paper_mode)
    except MgsnError as exc:
        raise UsageError(str(exc)) from None
    return ctl, sctl


# ---------------------------------------------------------------- output


def _fmt_vec(v, spec=".6f"):
    return "(" + ", ".join(format(float(x), spec) for x in v) + ")"


def _fmt_mat(m, spec="10.6f", indent="  "):
    return "\n".join(indent + " ".join(format(float(x), spec) for x in row) for row in np.atleast_2d(m))


def _kv_params(prefix, params: MgsnParams):
    out = [(f"{prefix}p", params.p)]
    out += [(f"{prefix}mu[{i}]", v) for i, v in enumerate(params.mu)]
    d = params.dim
    out += [(f"{prefix}sigma[{i}][{j}]", params.sigma[i, j]) for i in range(d) for j in range(d)]
    return out


def _write_kv(path, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in pairs:
            fh.write(f"{k} = {_num(v) if isinstance(v, (float, np.floating)) else v}\n")


def _fit_lines(title, fit):
    p = fit.params
    lines = [
        f"{title}",
        f"  constraint: {fit.constraint}",
        f"  p: {p.p:.6f}",
        f"  loglik: {fit.loglik:.6f}",
        f"  iterations: {fit.n_iter} (converged: {fit.converged})",
        f"  mu: {_fmt_vec(p.mu)}",
        "  sigma:",
        _fmt_mat(p.sigma, indent="    "),
    ]
    if fit.failures:
        lines.append(f"  skipped grid points: {', '.join(f'{q:g}' for q, _ in fit.failures)}")
    return lines


# ---------------------------------------------------------------- commands


def cmd_simulate(args, man):
    params = _params(args)
    if args.n < 1:
        raise UsageError("--n must be positive")
    try:
        rng = RngStream(args.seed, args.stream)
    except MgsnError as exc:
        raise UsageError(str(exc)) from None
    man.seed = args.seed
    x = sample_mgsn(rng, params, args.n)
    header = [f"x{j + 1}" for j in range(params.dim)]
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(fh, header, x)
        print(f"wrote {args.n} x {params.dim} sample to {args.out}")
    else:
        write_csv(sys.stdout, header, x)


def cmd_fit(args, man):
    data = _data(args)
    grid = _grid(args.grid)
    ctl, sctl = _controls(args)
    man.series, man.em = asdict(sctl), asdict(ctl)
    constraint = CONSTRAINT_NAMES[args.constraint]
    if constraint == "normal_p1":
        fit = fit_normal(data)
    else:
        fit = profile_fit(data, grid, ctl, sctl, constraint=constraint)
    lines = [f"data: n = {data.n}, d = {data.d}, columns {', '.join(data.labels)}"]
    lines += _fit_lines("fit", fit)
    trace = fit.trace_array()
    if trace.size:
        lines.append("profile log-likelihood:")
        lines.append("  p,loglik")
        lines += [f"  {q:.6f},{ll:.6f}" for q, ll in trace]
    print("\n".join(lines))
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            write_csv(fh, ["p", "loglik"], trace)
    if args.out:
        pairs = [("constraint", fit.constraint), ("loglik", fit.loglik), ("iterations", fit.n_iter)]
        _write_kv(args.out, pairs + _kv_params("", fit.params))


def cmd_test(args, man):
    data = _data(args)
    grid = _grid(args.grid)
    ctl, sctl = _controls(args)
    man.series, man.em = asdict(sctl), asdict(ctl)
    kw = {"df": args.df} if args.which == "diagonal" and args.df else {}
    if args.df and args.which != "diagonal":
        raise UsageError("--df applies to --which diagonal only")
    res = TESTS[args.which](data, ctl, sctl, grid, **kw)
    lines = [
        f"test: {res.name}",
        f"statistic: {res.statistic:.6f}",
        f"reference: {res.reference}",
        f"p-value: {res.p_value:.6g}",
    ]
    lines += _fit_lines("null model", res.null_fit)
    lines += _fit_lines("alternative model", res.alt_fit)
    print("\n".join(lines))
    if args.out:
        pairs = [
            ("test", res.name),
            ("statistic", res.statistic),
            ("reference", str(res.reference)),
            ("p_value", res.p_value),
            ("null.loglik", res.null_fit.loglik),
            ("alt.loglik", res.alt_fit.loglik),
        ]
        _write_kv(args.out, pairs + _kv_params("null.", res.null_fit.params) + _kv_params("alt.", res.alt_fit.params))


def cmd_moments(args, man):
    params = _params(args)
    s = mgsn_moments(params)
    mean, disp = moment_relation(params)
    back = params_from_moments(mean, disp, params.p)
    err = max(np.max(np.abs(back.mu - params.mu)), np.max(np.abs(back.sigma - params.sigma)))
    lines = [
        f"p: {params.p:.6g}",
        f"mean: {_fmt_vec(s.mean)}",
        "covariance:",
        _fmt_mat(s.covariance),
        "correlation:",
        _fmt_mat(s.correlation),
        f"mardia beta1: {s.mardia_beta1:.6g}",
        f"moment relation p*mean = mu, p^2*cov = p*Sigma + (1-p)*mu*mu^T: max abs error {err:.3g}",
    ]
    print("\n".join(lines))
    if args.out:
        d = params.dim
        pairs = [(f"mean[{i}]", v) for i, v in enumerate(s.mean)]
        pairs += [(f"cov[{i}][{j}]", s.covariance[i, j]) for i in range(d) for j in range(d)]
        pairs += [("mardia_beta1", s.mardia_beta1)]
        _write_kv(args.out, pairs)


def cmd_pdf_grid(args, man):
    params = _params(args)
    if params.dim != 2:
        raise UsageError(f"pdf-grid needs d = 2, got d = {params.dim}")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    if args.range:
        r = parse_vector(args.range)
        if r.size != 4 or r[1] <= r[0] or r[3] <= r[2]:
            raise UsageError("--range is xmin,xmax,ymin,ymax with xmin < xmax and ymin < ymax")
    else:
        mean, cov = moment_relation(params)
        sd = np.sqrt(np.diag(cov))
        r = np.array([mean[0] - 5 * sd[0], mean[0] + 5 * sd[0], mean[1] - 5 * sd[1], mean[1] + 5 * sd[1]])
    xs = np.linspace(r[0], r[1], args.steps)
    ys = np.linspace(r[2], r[3], args.steps)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pdf = np.exp(mgsn_logpdf(pts, params))
    mass = pdf.sum() * (xs[1] - xs[0]) * (ys[1] - ys[0])
    rows = np.column_stack([pts, pdf])
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(fh, ["x", "y", "pdf"], rows)
        i = int(np.argmax(pdf))
        print(f"wrote {args.steps}x{args.steps} grid to {args.out}")
        print(f"grid maximum {pdf[i]:.6g} at ({pts[i, 0]:.4f}, {pts[i, 1]:.4f}); cell-weighted mass {mass:.6f}")
    else:
        write_csv(sys.stdout, ["x", "y", "pdf"], rows)


def cmd_bench_tables(args, man):
    from .bench import format_table, run_table

    if args.replications < 10:
        raise UsageError("--replications must be at least 10")
    if args.threads < 1:
        raise UsageError("--threads must be positive")
    grid = _grid(args.grid)
    ctl, sctl = _controls(args)
    man.series, man.em, man.seed = asdict(sctl), asdict(ctl), args.seed
    res = run_table(args.table, args.replications, args.seed, args.threads, grid, ctl, sctl)
    print(format_table(res))
    if args.out:
        d = res.mu_avg.size
        pairs = [("table", res.table), ("replications", res.replications), ("p_avg", res.p_avg), ("p_mse", res.p_mse)]
        pairs += [(f"mu[{i}]", res.mu_avg[i]) for i in range(d)]
        pairs += [(f"mu_mse[{i}]", res.mu_mse[i]) for i in range(d)]
        pairs += [(f"sigma[{i}][{j}]", res.sigma_avg[i, j]) for i in range(d) for j in range(d)]
        pairs += [(f"sigma_mse[{i}][{j}]", res.sigma_mse[i, j]) for i in range(d) for j in range(d)]
        _write_kv(args.out, pairs)


def cmd_stiffness(args, man):
    data = stiffness(raw=args.raw)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(fh, STIFFNESS_LABELS, data.values)
    else:
        write_csv(sys.stdout, STIFFNESS_LABELS, data.values)


# ---------------------------------------------------------------- wiring


def _add_params(sp, presets):
    sp.add_argument("--p", type=float, help="geometric parameter in (0, 1]")
    sp.add_argument("--mu", help="comma-separated location vector")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--sigma", help="matrix, rows separated by ';'")
    g.add_argument("--sigma-file", help="file with one matrix row per line")
    sp.add_argument("--preset", choices=presets, help="named parameter set (--p overrides its p)")


def _add_data(sp):
    sp.add_argument("input", nargs="?", help="CSV file with a header row")
    sp.add_argument("--stiffness", action="store_true", help="use the embedded stiffness data")
    sp.add_argument("--raw", action="store_true", help="do not divide the stiffness data by 100")


def _add_controls(sp):
    sp.add_argument("--grid", help="profile grid for p: lo:hi:step or a list (default 0.02:1:0.02)")
    sp.add_argument("--paper-mode", action="store_true", help="50 series terms, 20 EM iterations")
    sp.add_argument("--max-iter", type=int, default=EmControl.max_iter)
    sp.add_argument("--em-tol", type=float, default=EmControl.rel_tol)
    sp.add_argument("--k-max", type=int, default=SeriesControl.k_max)
    sp.add_argument("--series-tol", type=float, default=SeriesControl.rel_tol)


def build_parser():
    ap = _Parser(prog="mgsn", description="Multivariate geometric skew-normal toolkit")
    ap.add_argument("--manifest", help="also write the run manifest to this file")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    all_presets = sorted(PRESETS) + ["sim"]

    sp = sub.add_parser("simulate", help="draw an MGSN sample as CSV")
    _add_params(sp, all_presets)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--stream", type=int, default=0, help="stream id within the seed")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="profile-likelihood EM fit")
    _add_data(sp)
    sp.add_argument("--constraint", choices=sorted(CONSTRAINT_NAMES), default="none")
    _add_controls(sp)
    sp.add_argument("--trace", help="write the profile trace CSV (p,loglik) here")
    sp.add_argument("--out", help="key = value result file")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("test", help="likelihood ratio test")
    _add_data(sp)
    sp.add_argument("--which", choices=sorted(TESTS), required=True)
    sp.add_argument("--df", type=int, help="override the reference df (diagonal test)")
    _add_controls(sp)
    sp.add_argument("--out", help="key = value result file")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("moments", help="mean, covariance, correlation and skewness")
    _add_params(sp, all_presets)
    sp.add_argument("--out", help="key = value result file")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("pdf-grid", help="bivariate density on a regular grid")
    _add_params(sp, all_presets)
    sp.add_argument("--range", help="xmin,xmax,ymin,ymax (default mean +- 5 sd)")
    sp.add_argument("--steps", type=int, default=101, help="grid points per axis")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_pdf_grid)

    sp = sub.add_parser("bench-tables", help="simulation study for tables 1-4")
    sp.add_argument("--table", type=int, choices=[1, 2, 3, 4], required=True)
    sp.add_argument("--replications", type=int, default=100)
    sp.add_argument("--seed", type=int, default=2024)
    sp.add_argument("--threads", type=int, default=1)
    _add_controls(sp)
    sp.add_argument("--out", help="key = value result file")
    sp.set_defaults(func=cmd_bench_tables)

    sp = sub.add_parser("stiffness", help="print the embedded stiffness data as CSV")
    sp.add_argument("--raw", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_stiffness)
    return ap


def _flag_dict(args):
    return {k: v for k, v in vars(args).items() if k not in ("func", "command", "manifest")}


def main(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    man = RunManifest(args.command, _flag_dict(args), seed=getattr(args, "seed", None))
    try:
        args.func(args, man)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MgsnError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    man.wall_clock_s = time.perf_counter() - t0
    text = "\n".join(man.lines()) + "\n"
    sys.stderr.write(text)
    if args.manifest:
        Path(args.manifest).write_text(text, encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
