"""Command-line front end: ``billiard-forge <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input or failed construction,
3 failed verification, 64 usage error. Every failure prints a single line
``error[<kind>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import reports
from .construction import admissible_tau0, derive_blueprint
from .errors import BilliardForgeError, GeometryError, VerificationError
from .gamma import (
    build_table,
    check_strip,
    clearance_report,
    curvature_report,
    synthesize,
    tau0_window_convex,
)
from .stability import classify, r0_from_k0, trace_closed_form, trace_report, window_bounds
from .svg import PhasePortraitData, render_phase_portrait, render_scene
from .tablespec import read_table, write_table
from .verification import (
    area_preservation,
    island_probe,
    linear_rotation_number,
    monodromy_check,
    probe_base,
    rotation_number,
    twist_estimate,
    verify_periodic,
)

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_USAGE = 0, 2, 3, 64
AB_TAU0_FRACTION = 0.35
MONODROMY_TOL = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _say(args, text):
    if not args.quiet:
        print(text)


def resolve_tau0(N, r, eps, tau0, variant):
    """Numeric ``tau0``, or the default for ``"auto"``."""
    if tau0 != "auto":
        return float(tau0)
    if variant == "c":
        lo, hi = tau0_window_convex(N, r, eps)
        return 0.5 * (lo + hi)
    return AB_TAU0_FRACTION * admissible_tau0(N, r, eps)[1]


def _tau0_arg(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}")


def _grid_arg(text):
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"expected VALUE or LO:HI:COUNT, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("grid count must be positive")
    return list(np.linspace(lo, hi, n)) if n > 1 else [lo]


def _outdir(args) -> Path | None:
    return Path(args.out) if args.out else None


def _sidecar(table_path: Path) -> Path:
    return table_path.with_name("blueprint.json")


def load_table_and_blueprint(table_path, blueprint_path=None):
    table_path = Path(table_path)
    table = read_table(table_path)
    side = Path(blueprint_path) if blueprint_path else _sidecar(table_path)
    doc = reports.load_bundle(side)
    if "blueprint" not in doc:
        raise reports.ValidationError(f"{side.name} has no blueprint section")
    b = doc["blueprint"]
    bp = derive_blueprint(int(b["N"]), float(b["r"]), float(b["eps"]), float(b["tau0"]))
    return table, bp, doc


def _write_bundle(args, name, **sections):
    doc = reports.make_bundle(**sections)
    out = _outdir(args)
    if out is not None:
        reports.export_reports(doc, out / name)
    return doc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_blueprint(args):
    tau0 = resolve_tau0(args.n, args.r, args.eps, args.tau0, args.variant)
    bp = derive_blueprint(args.n, args.r, args.eps, tau0)
    doc = _write_bundle(args, "blueprint.json", blueprint=bp)
    _say(args, reports.dumps(doc).rstrip())
    return EXIT_OK


def cmd_windows(args):
    tau0 = resolve_tau0(args.n, args.r, args.eps, args.tau0, args.variant)
    bp = derive_blueprint(args.n, args.r, args.eps, tau0)
    w = window_bounds(bp)
    _write_bundle(args, "windows.json", blueprint=bp, windows=w)
    _say(args, f"tau0 = {tau0:.6g}")
    _say(args, f"R1 = {w.R1:.6g}")
    _say(args, f"R2 = {w.R2:.6g}")
    _say(args, f"low window  = ({w.window_low[0]:.6g}, {w.window_low[1]:.6g})")
    if w.window_high is not None:
        _say(args, f"high window = ({w.window_high[0]:.6g}, {w.window_high[1]:.6g})")
    _say(args, f"case Item {w.case[-1]}")
    return EXIT_OK


def cmd_synthesize(args):
    tau0 = resolve_tau0(args.n, args.r, args.eps, args.tau0, args.variant)
    bp = derive_blueprint(args.n, args.r, args.eps, tau0)
    k0 = None if args.k0 == "auto" else float(args.k0)
    gp = synthesize(bp, args.variant, k0, require_elliptic=not args.allow_unstable)
    table = build_table(gp, bp)
    cur = curvature_report(gp, bp)
    tr = trace_report(bp, gp.k0)
    clear = clearance_report(gp, bp)
    _say(args, f"tau0 = {tau0:.6g}")
    _say(args, f"k0 = {gp.k0 + 0.0:.9g}")
    _say(args, f"trace = {tr.trace:.9g} ({tr.classification})")
    _say(args, f"curvature ratio sup|K| H^2 / Delta = {cur.ratio:.6g} (C = {cur.C:g}, "
               f"{'pass' if cur.passed else 'fail'})")
    _say(args, f"min clearance = {clear['min_separation']:.3e}, strip = {check_strip(gp, bp):.3e}")
    out = _outdir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        try:
            write_table(table, out / "table.tbl")
        except OSError as e:
            raise reports.ExportError(f"cannot write table: {e}") from e
        side = reports.make_bundle(blueprint=bp, gamma=gp)
        reports.export_reports(side, out / "blueprint.json")
        doc = reports.make_bundle(blueprint=bp, windows=window_bounds(bp), trace=tr, curvature=cur, gamma=gp)
        reports.export_reports(doc, out / "report.json", table=table, bp=bp, gamma=gp)
        _say(args, f"wrote {out / 'table.tbl'}")
    return EXIT_OK


def cmd_verify(args):
    table, bp, _ = load_table_and_blueprint(args.table, args.blueprint)
    closure = verify_periodic(table, bp, tol=args.tol)
    _say(args, f"closure error = {closure.closure_error:.3e} ({'ok' if closure.ok else 'FAIL'})")
    if not closure.ok:
        _write_bundle(args, "verify.json", blueprint=bp, closure=closure)
        raise VerificationError(f"orbit does not close: error {closure.closure_error:.3e} > {args.tol:.1e}")
    mono = monodromy_check(table, bp, h=args.h)
    mono["area_determinant"] = area_preservation(table, probe_base(table, bp), n=args.samples, seed=args.seed)
    tr = classify(mono["trace"])
    _say(args, f"monodromy relative error = {mono['relative_error']:.3e}")
    _say(args, f"trace = {tr.trace:.9g} ({tr.classification}"
               f"{', resonant' if tr.resonant else ''})")
    _write_bundle(args, "verify.json", blueprint=bp, closure=closure, monodromy=mono, trace=tr)
    if not mono["relative_error"] < MONODROMY_TOL:
        raise VerificationError(f"finite-difference monodromy disagrees: {mono['relative_error']:.3e}")
    return EXIT_OK


def cmd_probe(args):
    table, bp, _ = load_table_and_blueprint(args.table, args.blueprint)
    rep = island_probe(table, bp, args.delta, args.iters, n_traj=args.n_traj, workers=args.workers)
    _say(args, f"probe: {rep.verdict}, max deviation {rep.max_deviation:.3e}"
               + (f", escaped at step {rep.escaped_at}" if rep.escaped_at else ""))
    sections = {"blueprint": bp, "probe": rep}
    try:
        rho_lin = linear_rotation_number(table, bp)
    except BilliardForgeError:
        rho_lin = None
    if rho_lin is not None and rep.bounded:
        rho = rotation_number(table, bp, delta=args.rotation_delta)
        sections["rotation"] = {"measured": rho, "linear": rho_lin, "delta": args.rotation_delta}
        _say(args, f"rotation number = {rho:.6f} (linear {rho_lin:.6f})")
        if not args.no_twist:
            tw = twist_estimate(table, bp)
            sections["twist"] = tw
            _say(args, f"twist: {tw.verdict}, slope {tw.slope:.4g} +- {tw.slope_stderr:.2g} ({tw.note})")
    doc = reports.make_bundle(**sections)
    out = _outdir(args)
    if out is not None:
        phase = PhasePortraitData([rep.trajectory], ["trajectory-0"]) if len(rep.trajectory) else None
        reports.export_reports(doc, out / "probe.json", phase=phase)
    if rep.verdict == "aborted":
        raise VerificationError(f"probe aborted: {rep.message}")
    if args.expect and rep.verdict != args.expect:
        raise VerificationError(f"probe verdict {rep.verdict!r}, expected {args.expect!r}")
    return EXIT_OK


def _sweep_cell(job):
    N, r, eps, tau0, k0 = job
    bp = derive_blueprint(N, r, eps, tau0)
    R0 = r0_from_k0(bp, k0)
    tr = 2.0 * trace_closed_form(bp, R0)
    return tau0, k0, R0, tr, classify(tr).classification


def cmd_sweep(args):
    lo, hi = admissible_tau0(args.n, args.r, args.eps)
    for t in args.tau0_grid:
        if not lo < t < hi:
            raise reports.ValidationError(f"tau0 = {t!r} outside admissible range ({lo:.6g}, {hi:.6g})")
    jobs = [(args.n, args.r, args.eps, t, k) for t in args.tau0_grid for k in args.k0_grid]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            rows = list(ex.map(_sweep_cell, jobs, chunksize=64))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau0", "k0", "R0", "trace", "class"])
    for t, k, R0, tr, cls in rows:
        w.writerow([repr(float(t)), repr(float(k)), repr(float(R0)), repr(float(tr)), cls])
    out = _outdir(args)
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        reports._write(out / "sweep.csv", buf.getvalue())
        counts = {c: sum(1 for row in rows if row[4] == c) for c in ("elliptic", "parabolic", "hyperbolic")}
        _say(args, f"{len(rows)} cells: " + ", ".join(f"{v} {k}" for k, v in counts.items()))
    return EXIT_OK


def cmd_render(args):
    from .dynamics import billiard_step, birkhoff, from_birkhoff, position

    table, bp, _ = load_table_and_blueprint(args.table, args.blueprint)
    out = _outdir(args) or Path(".")
    trajs, phase = [], None
    if args.steps > 0:
        base = probe_base(table, bp)
        S0, u0 = birkhoff(table, base)
        p = from_birkhoff(table, S0 + args.delta, u0)
        pos, bk = [position(table, p)], [birkhoff(table, p)]
        for _ in range(args.steps):
            try:
                p = billiard_step(table, p)
            except GeometryError:
                break
            pos.append(position(table, p))
            bk.append(birkhoff(table, p))
        trajs.append(np.array(pos))
        phase = PhasePortraitData([np.array(bk)], ["trajectory-0"])
    reports._write(out / "scene.svg", render_scene(table, bp=bp, trajectories=trajs))
    if phase is not None:
        reports._write(out / "phase.svg", render_phase_portrait(phase))
    _say(args, f"wrote {out / 'scene.svg'}" + (f" and {out / 'phase.svg'}" if phase else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="billiard-forge", description="Billiard tables with a stable periodic orbit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="suppress stdout summaries")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def params(sp, variant=True):
        sp.add_argument("--n", type=int, default=4, help="number of arc reflections (>= 3)")
        sp.add_argument("--r", type=float, default=1.0, help="base circle radius")
        sp.add_argument("--eps", type=float, default=0.01, help="tilt angle")
        sp.add_argument("--tau0", type=_tau0_arg, default="auto", help="vertical free path or 'auto'")
        if variant:
            sp.add_argument("--variant", choices=("a", "b", "c"), default="a")

    def tabled(sp):
        sp.add_argument("--table", required=True, help="tablespec file")
        sp.add_argument("--blueprint", help="blueprint JSON (default: blueprint.json next to the table)")

    sp = sub.add_parser("blueprint", parents=[common], help="scaffold orbit quantities")
    params(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_blueprint)

    sp = sub.add_parser("windows", parents=[common], help="elliptic windows in R0")
    params(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_windows)

    sp = sub.add_parser("synthesize", parents=[common], help="build the wall and write the table")
    params(sp)
    sp.add_argument("--k0", default="auto", help="contact curvature (positive = dispersing) or 'auto'")
    sp.add_argument("--allow-unstable", action="store_true", help="accept a non-elliptic contact curvature")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("verify", parents=[common], help="orbit closure and monodromy agreement")
    tabled(sp)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--h", type=float, default=1e-6, help="finite-difference step")
    sp.add_argument("--samples", type=int, default=10_000, help="Monte Carlo points for the area check")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("probe", parents=[common], help="island, rotation number and twist")
    tabled(sp)
    sp.add_argument("--delta", type=float, default=1e-4)
    sp.add_argument("--iters", type=int, default=100_000)
    sp.add_argument("--n-traj", type=int, default=8)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--rotation-delta", type=float, default=1e-5)
    sp.add_argument("--no-twist", action="store_true")
    sp.add_argument("--expect", choices=("bounded", "escaped"))
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("sweep", parents=[common], help="classification over a (tau0, k0) grid")
    params(sp, variant=False)
    sp.add_argument("--tau0-grid", type=_grid_arg, required=True, metavar="LO:HI:COUNT")
    sp.add_argument("--k0-grid", type=_grid_arg, required=True, metavar="LO:HI:COUNT")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("render", parents=[common], help="SVG of the table, orbit and a sample trajectory")
    tabled(sp)
    sp.add_argument("--steps", type=int, default=0, help="billiard steps of a sample trajectory")
    sp.add_argument("--delta", type=float, default=1e-3, help="offset of the sample trajectory")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_render)
    return p


def _kind(e: BaseException, verifying: bool) -> tuple[str, int]:
    if isinstance(e, VerificationError) or (verifying and isinstance(e, GeometryError)):
        return "verification", EXIT_VERIFY
    if isinstance(e, reports.ExportError):
        return "io", EXIT_INVALID
    return "validation", EXIT_INVALID


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error[usage]: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        return args.func(args)
    except BilliardForgeError as e:
        kind, code = _kind(e, args.func in (cmd_verify, cmd_probe, cmd_render))
        print(f"error[{kind}]: {' '.join(str(e).split())}", file=sys.stderr)
        return code
    except (OSError, json.JSONDecodeError) as e:
        print(f"error[io]: {' '.join(str(e).split())}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
