"""Command line front end: ``hardballs construct | verify | cone-demo | export | rerun``.

Every command writes a machine-readable ``manifest.json`` and a
human-readable ``summary.txt`` into its run directory.  Exit codes:
0 all verified, 1 mismatch, 2 usage error, 3 numeric abort.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__, atraj
from .ball_config import angles_from_lambda, find_theta, hat_configuration, perturbed_configuration
from .cone_billiard import build_right_angle_example, simulate_cone
from .errors import HardBallsError
from .events import csv_from_json
from .numeric import EXACT, Numeric
from .simulator import VerifyParams, verify_exponential

OK, MISMATCH, USAGE, NUMERIC = 0, 1, 2, 3
OUT_ENV = "HARDBALLS_OUT"
EXPORT_FORMATS = ("csv", "json")


def _write(run: Path, name: str, text: str, artifacts: list) -> None:
    (run / name).write_text(text)
    artifacts.append(name)


def _finish(run: Path, manifest: dict, summary: str, artifacts: list) -> None:
    manifest["artifacts"] = sorted(artifacts + ["summary.txt"])
    (run / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (run / "summary.txt").write_text(summary + "\n")
    print(summary)


def _manifest(command: str, args, params: dict) -> dict:
    return {
        "command": command,
        "argv": getattr(args, "argv", None),
        "version": __version__,
        "parameters": params,
    }


def _run_dir(args, name: str) -> Path:
    run = Path(args.out_dir) / name
    run.mkdir(parents=True, exist_ok=True)
    return run


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def parse_range(text: str) -> list:
    """``"3"``, ``"3..6"`` or ``"3,5,7"`` to a list of integers."""
    text = text.strip()
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    if re.fullmatch(r"\d+(,\d+)*", text):
        return [int(x) for x in text.split(",")]
    raise argparse.ArgumentTypeError(f"malformed range {text!r}; use N, A..B or A,B,C")


# ---------------------------------------------------------------------------
# construct
# ---------------------------------------------------------------------------

def cmd_construct(args) -> int:
    m = args.m if args.m is not None else args.n - 1
    if m < 1:
        raise SystemExit(_usage("need m >= 1 (n >= 2)"))
    n = m + 1
    num = Numeric.for_bits(args.precision_bits)
    run = _run_dir(args, f"construct_m{m}")
    artifacts = []

    f, schedule = atraj.build_inductive(m)
    A = atraj.build_Am(m)
    if not atraj.validate(f, A, atraj.GENERALIZED).ok:
        raise HardBallsError("inductive construction failed validation")
    g = atraj.perturb_to_genuine(f, A, jitter=args.jitter, seed=args.seed)
    theta = args.theta if args.theta is not None else find_theta(n)
    if args.lambda_ratio is None:
        ratio = atraj.find_lambda_ratio(g) / 2 if m > 1 else Fraction(1, 2)
        while not 2 * ratio < math.sin(theta):
            ratio /= 2
    else:
        ratio = args.lambda_ratio
    lam = atraj.geometric_lambda(m, ratio)
    At = atraj.build_Atilde(m, lam)
    B = atraj.rescale(At, lam)
    config = perturbed_configuration(n, angles_from_lambda([num.num(x) for x in lam], theta, num), theta)

    predicted = atraj.closed_form_count(m)
    k = (m + 1) // 2
    bound = 2 ** (n // 2) if n >= 3 else None
    _write(run, "hat_configuration.json", hat_configuration(n, EXACT).to_json(), artifacts)
    _write(run, "configuration.json", config.to_json(), artifacts)
    _write(run, "matrices.json", json.dumps(
        {"A": A.to_json(), "A_tilde": At.to_json(), "B": B.to_json()}, indent=1), artifacts)
    _write(run, "schedule.json", json.dumps(schedule.to_json(), indent=1), artifacts)
    _write(run, "trajectory.json", json.dumps(f.to_json()), artifacts)
    _write(run, "genuine_trajectory.json", json.dumps(g.to_json()), artifacts)
    _write(run, "collisions.csv", g.to_csv(), artifacts)

    manifest = _manifest("construct", args, {
        "m": m, "n": n, "lambda_ratio": str(ratio), "delta": str(ratio * ratio),
        "theta": theta, "jitter": None if args.jitter is None else str(args.jitter),
        "seed": args.seed, "precision_bits": num.bits,
    })
    manifest["events"] = {"file": "genuine_trajectory.json", "kind": "pl"}
    manifest["outcome"] = {"N": predicted, "N_generalized": f.collision_count(),
                           "N_genuine": g.collision_count(), "bound": bound}
    count_line = f"N = {predicted}" + (f", bound 2^{n // 2} = {bound}" if bound else "")
    summary = (f"m = {m} (n = {n} balls), k = {k}\n{count_line}\n"
               f"roots: generalized {f.collision_count()}, genuine {g.collision_count()}\n"
               f"lambda ratio {ratio}, theta {theta:.6g}\nrun directory: {run}")
    _finish(run, manifest, summary, artifacts)
    ok = f.collision_count() == g.collision_count() == predicted
    return OK if ok else MISMATCH


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    table = [("n", "N_predicted", "N_observed", "2^floor(n/2)", "match", "seconds")]
    status = OK
    results = []
    for n in args.n:
        if n < 3:
            raise SystemExit(_usage(f"verify needs n >= 3, got {n}"))
    for n in args.n:
        params = VerifyParams(precision_bits=args.precision_bits, lambda_ratio=args.lambda_ratio,
                              theta=args.theta, jitter=args.jitter, seed=args.seed,
                              max_events=args.max_events)
        run = _run_dir(args, f"verify_n{n}")
        artifacts = []
        clock = time.perf_counter()
        try:
            report = verify_exponential(n, params)
        except HardBallsError as exc:
            secs = time.perf_counter() - clock
            table.append((n, atraj.collision_count_formula(n - 1), "-", 2 ** (n // 2), "abort", f"{secs:.2f}"))
            manifest = _manifest("verify", args, {"n": n})
            manifest["outcome"] = {"error": str(exc)}
            _finish(run, manifest, f"n = {n}: numeric abort: {exc}", artifacts)
            status = max(status, NUMERIC)
            continue
        secs = time.perf_counter() - clock
        art = report.artifacts
        num = art["config"].numeric
        _write(run, "configuration.json", art["config"].to_json(), artifacts)
        _write(run, "cone.json", art["cone"].to_json(), artifacts)
        _write(run, "gram_trajectory.json", json.dumps(art["gram_trajectory"].to_json()), artifacts)
        if art["log"] is not None:
            _write(run, "events.json", json.dumps(art["log"].to_json(num.to_str)), artifacts)
            _write(run, "events.csv", art["log"].to_csv(num.to_str), artifacts)
        if art["state"] is not None:
            _write(run, "initial_state.json", art["state"].to_json(), artifacts)
        manifest = _manifest("verify", args, {
            "n": n, "precision_bits": report.precision_bits, "lambda_ratio": str(report.lambda_ratio),
            "delta": str(report.delta), "theta": report.theta, "seed": report.seed,
            "jitter": None if report.jitter is None else str(report.jitter),
            "lambda_scale_start": params.lam_start, "lambda_scale_cap": params.lam_cap,
            "tie_tol": 1e-12,
        })
        summ = report.summary()
        summ.pop("seconds")
        manifest["outcome"] = summ
        if art["log"] is not None:
            manifest["events"] = {"file": "events.json", "kind": "log"}
        line = (f"n = {n}: N = {report.predicted}, observed {report.observed}, "
                f"bound {report.bound}, match {report.matched}, Lambda {report.lam_scale}, "
                f"{secs:.2f} s")
        _finish(run, manifest, line + (f"\n{report.message}" if report.message else ""), artifacts)
        table.append((n, report.predicted, report.observed, report.bound,
                      "yes" if report.matched and report.observed >= report.bound else "NO",
                      f"{secs:.2f}"))
        results.append(report)
        if not (report.matched and report.observed >= report.bound):
            status = max(status, MISMATCH) if status != NUMERIC else status
    widths = [max(len(str(row[c])) for row in table) for c in range(len(table[0]))]
    print()
    for row in table:
        print("  ".join(str(x).rjust(w) for x, w in zip(row, widths)))
    return status


# ---------------------------------------------------------------------------
# cone-demo
# ---------------------------------------------------------------------------

def cmd_cone_demo(args) -> int:
    run = _run_dir(args, f"cone_m{args.m}")
    artifacts = []
    clock = time.perf_counter()
    ex = build_right_angle_example(args.m, args.eps)
    traj = simulate_cone(ex.cone, ex.x0, ex.v0, max_events=args.max_events, t0=ex.t0)
    secs = time.perf_counter() - clock
    log = traj.event_log()
    _write(run, "cone.json", ex.cone.to_json(), artifacts)
    _write(run, "events.json", json.dumps(log.to_json()), artifacts)
    _write(run, "events.csv", log.to_csv(), artifacts)
    manifest = _manifest("cone-demo", args, {"m": args.m, "eps": args.eps, "max_events": args.max_events})
    manifest["events"] = {"file": "events.json", "kind": "log"}
    manifest["outcome"] = {"collisions": traj.n_events, "expected": ex.expected, "status": traj.status}
    summary = (f"m = {args.m}, eps = {args.eps}: {traj.n_events} collisions "
               f"(expected 2^{args.m} - 1 = {ex.expected}), {secs:.3f} s")
    _finish(run, manifest, summary, artifacts)
    return OK if traj.n_events == ex.expected else MISMATCH


# ---------------------------------------------------------------------------
# export / rerun
# ---------------------------------------------------------------------------

def cmd_export(args) -> int:
    run = Path(args.run)
    manifest = json.loads((run / "manifest.json").read_text())
    entry = manifest.get("events")
    if entry is None:
        raise SystemExit(_usage(f"run {run} has no event data to export"))
    data = json.loads((run / entry["file"]).read_text())
    if args.format == "csv":
        if entry["kind"] == "pl":
            text = atraj.PLTrajectory.from_json(data).to_csv()
        else:
            text = csv_from_json(data)
        out = run / "export.csv"
    else:
        text = json.dumps({"manifest": manifest, "trajectory": data}, indent=1)
        out = run / "export.json"
    out.write_text(text)
    print(out)
    return OK


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest.get("argv")
    if not argv:
        raise SystemExit(_usage("manifest does not record its command line"))
    return main(argv)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _usage(msg: str) -> int:
    print(f"hardballs: error: {msg}", file=sys.stderr)
    return USAGE


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", default=os.environ.get(OUT_ENV, "runs"),
                   help=f"output directory (default ${OUT_ENV} or ./runs)")
    p.add_argument("--max-events", type=int, default=10**5)


def _pipeline(p: argparse.ArgumentParser) -> None:
    p.add_argument("--precision-bits", type=int, default=None,
                   help="53 for double, more for mpmath (default: 53 up to n=5, else 128)")
    p.add_argument("--lambda-ratio", type=_fraction, default=None,
                   help="ratio lam_{i+1}/lam_i (default: half the largest stable dyadic ratio)")
    p.add_argument("--theta", type=float, default=None, help="angle tolerance in radians")
    p.add_argument("--jitter", type=_fraction, default=None, help="initial-data jitter size")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardballs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build matrices, trajectories and a configuration")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=int, help="number of balls")
    size.add_argument("--m", type=int, help="number of contacts (n - 1)")
    _common(p)
    _pipeline(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="simulate the ball example and count collisions")
    p.add_argument("--n", type=parse_range, required=True, help="N, A..B or A,B,C")
    _common(p)
    _pipeline(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cone-demo", help="doubling example in a near-orthogonal cone")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    _common(p)
    p.set_defaults(func=cmd_cone_demo)

    p = sub.add_parser("export", help="convert a run's events to another format")
    p.add_argument("--run", required=True, help="run directory containing manifest.json")
    p.add_argument("--format", required=True, choices=EXPORT_FORMATS)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("rerun", help="repeat the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    if args.command == "cone-demo" and not (args.m >= 1 and 0 < args.eps < math.pi / 4):
        return _usage("cone-demo needs m >= 1 and 0 < eps < pi/4")
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE
    except (HardBallsError, ArithmeticError) as exc:
        print(f"hardballs: numeric abort: {exc}", file=sys.stderr)
        return NUMERIC


if __name__ == "__main__":
    sys.exit(main())
