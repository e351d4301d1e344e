"""Command line front end: ``eroders <subcommand> ...``.

Exit codes: 0 success or verified, 1 usage error, 2 negative verdict,
3 counterexample found.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from . import droplet as dr
from . import geometry as geo
from .ensemble import PureNoise, replica_trajectory
from .errors import ErodersError, InvalidCertificate, InvalidParameters, NoCertificateInSearchSpace, PreconditionFailed
from .lattice import sphere, to_svg
from .rules import MonotoneRule, load_rule

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE, EXIT_COUNTEREXAMPLE = 0, 1, 2, 3

CSV_COLUMNS = ["rule", "epsilon", "L", "t", "samples", "hits", "p_hat", "std_err", "minus_log_p", "seed"]
# options that change where results go or how fast, never what they are
NON_SEMANTIC = {"csv", "json", "dump_svg", "plot_svg", "threads", "config", "command", "func", "output"}


class UsageError(Exception):
    pass


# parsing helpers


def parse_int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(v) for v in text]
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return out


_SCHEDULE = re.compile(r"^\s*(\d*)\s*\*?\s*L\s*(?:([+-])\s*(\d+))?\s*$")


def parse_schedule(text, Ls: Sequence[int]) -> list[int]:
    """``16L``, ``4*L+2``, a single integer, or one integer per L."""
    if isinstance(text, int):
        return [text] * len(Ls)
    m = _SCHEDULE.match(str(text))
    if m:
        k = int(m.group(1) or 1)
        c = int(m.group(3) or 0) * (-1 if m.group(2) == "-" else 1)
        return [k * L + c for L in Ls]
    vals = parse_int_list(text)
    if len(vals) == 1:
        return vals * len(Ls)
    if len(vals) != len(Ls):
        raise UsageError("the t schedule needs one value per L")
    return vals


def parse_direction(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).strip("()[] ").split(","))


def resolve_rule(source: str, dimension: int = 2):
    if source == "pure-noise":
        return PureNoise(dimension)
    try:
        return load_rule(source)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load rule {source!r}: {exc}") from exc


def _need_monotone(rule) -> MonotoneRule:
    if not isinstance(rule, MonotoneRule):
        raise UsageError("this subcommand needs a deterministic rule, not pure-noise")
    return rule


def canonical_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in NON_SEMANTIC}
    cfg["command"] = args.command
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)


def render_csv(config: dict, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# eroders {__version__}\n")
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv_config(path: str | Path) -> dict:
    with open(path) as fh:
        for line in fh:
            if line.startswith("# config: "):
                return json.loads(line[len("# config: ") :])
    raise UsageError(f"{path} has no embedded config line")


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _emit(text: str, path) -> None:
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


# subcommands


def cmd_certify(args) -> int:
    rule = _need_monotone(resolve_rule(args.rule))
    verdict = geo.sigma_empty(rule, args.side)
    print(f"sigma_{0 if args.side == 'zeros' else 1}({rule.label()}): {verdict}")
    if not verdict.empty:
        print(f"witness point {verdict.witness}: no eroder certificate exists")
        return EXIT_NEGATIVE
    try:
        cert = geo.farkas_certificate(rule, args.side)
    except NoCertificateInSearchSpace as exc:
        print(f"no certificate found: {exc}")
        print("searched: " + json.dumps([sorted(map(list, S)) for S in exc.search_space]))
        return EXIT_NEGATIVE
    report = geo.certificate_validate(rule, cert)
    alpha_sq, p, q = geo.alpha_and_witness(cert)
    data = geo.certificate_to_dict(cert)
    print("certificate: " + json.dumps(data))
    print(f"validation: {report}")
    print(f"alpha^2 = {alpha_sq}  witness p = {p}  q = {q}")
    for phi in cert.functionals:
        print(f"  phi = {phi}")
    if args.json:
        data.update({"rule": rule.label(), "alpha_squared": [alpha_sq.numerator, alpha_sq.denominator], "q": q})
        _write(args.json, json.dumps(data, indent=2) + "\n")
    return EXIT_OK if report else EXIT_NEGATIVE


def _load_directions(path) -> list[tuple[int, ...]]:
    text = Path(path).read_text()
    try:
        return [tuple(int(c) for c in u) for u in json.loads(text)]
    except json.JSONDecodeError:
        return [parse_direction(line) for line in text.splitlines() if line.strip() and not line.startswith("#")]


def cmd_velocity(args) -> int:
    rule = _need_monotone(resolve_rule(args.rule))
    cls = geo.classify_velocity_condition(rule, bound=args.bound)
    if args.directions:
        dirs = _load_directions(args.directions)
    elif args.fan or rule.dimension <= 2:
        dirs = [u for u, _ in cls.rays]
    else:
        dirs = geo.sampled_directions(rule.dimension, args.bound)
    print(f"{'u':>12} {'v(u)':>6} {'v(-u)':>6} {'sum':>5}")
    rows = []
    for u in dirs:
        v, w = geo.scaled_front_velocity(rule, u), geo.scaled_front_velocity(rule, tuple(-c for c in u))
        rows.append({"u": list(u), "v": v, "v_neg": w, "sum": v + w})
        print(f"{str(tuple(u)):>12} {v:>6} {w:>6} {v + w:>5}")
    print(f"classification: {cls.label}")
    if args.json:
        _write(args.json, json.dumps({"rule": rule.label(), "rows": rows, "classification": cls.label}, indent=2) + "\n")
    return EXIT_OK


def _load_certificate(args, rule):
    if args.cert:
        with open(args.cert) as fh:
            return geo.certificate_from_dict(json.load(fh))
    return geo.farkas_certificate(rule, "ones")


def cmd_verify(args) -> int:
    rule = _need_monotone(resolve_rule(args.rule))
    try:
        if args.what == "spider":
            results = [(L, dr.verify_spider_growth(rule, L)) for L in parse_int_list(args.L)]
        elif args.what == "lemma2":
            results = [(None, dr.verify_lemma2(rule, _load_certificate(args, rule), args.t_max))]
        elif args.what == "lemma3":
            results = [(None, dr.verify_lemma3(_load_certificate(args, rule), args.t_max))]
        else:
            results = [(None, dr.verify_case_b_growth(rule, parse_direction(args.u), args.t_max))]
    except (InvalidCertificate, PreconditionFailed) as exc:
        print(f"{type(exc).__name__}: {exc}")
        return EXIT_NEGATIVE
    code = EXIT_OK
    for L, res in results:
        prefix = f"L={L}: " if L is not None else ""
        print(f"{args.what} {rule.label()} {prefix}{res}")
        if not res:
            code = EXIT_COUNTEREXAMPLE
    return code


def _mc_rule(args):
    return resolve_rule(args.rule, args.dimension)


def _estimate_rows(args, rule, Ls, ts):
    rows, ests = [], []
    for L, t in zip(Ls, ts):
        est = dr.estimate_cylinder_prob(rule, args.eps, sphere((0,) * rule.dimension, L), t, args.samples, args.seed, threads=args.threads)
        est.params["L"] = L
        ests.append(est)
        rows.append(
            {
                "rule": rule.label(),
                "epsilon": args.eps,
                "L": L,
                "t": t,
                "samples": est.samples,
                "hits": est.hits,
                "p_hat": est.p_hat,
                "std_err": est.std_err,
                "minus_log_p": est.minus_log_p,
                "seed": args.seed,
            }
        )
    return rows, ests


def _dump_svgs(args, rule, Ls, ts) -> None:
    if not isinstance(rule, MonotoneRule) or rule.dimension != 2:
        print("--dump-svg: only two-dimensional deterministic rules are rendered", file=sys.stderr)
        return
    from .ensemble import light_cone_boxes

    for L, t in zip(Ls, ts):
        target = sphere((0, 0), L)
        lo, hi = light_cone_boxes(rule, (-L, -L), (L, L), t)[0]
        cfg = replica_trajectory(rule, args.eps, t, args.seed, 0, lo, hi)
        _write(Path(args.dump_svg) / f"{rule.label()}_L{L}_t{t}.svg", to_svg(cfg, highlight=target))


def _fit_dict(fit) -> dict | None:
    if fit is None:
        return None
    lo, hi = fit.interval()
    return {
        "exponent": fit.exponent,
        "prefactor": fit.prefactor,
        "r_squared": fit.r_squared,
        "exponent_std_err": fit.exponent_std_err,
        "interval95": [lo, hi],
    }


def run_monte_carlo(config: dict, threads: int | None = None) -> tuple[str, dict]:
    """Recompute CSV text and a JSON record from a canonical config."""
    args = argparse.Namespace(**config)
    args.threads = threads
    rule = _mc_rule(args)
    Ls = parse_int_list(args.L)
    ts = parse_schedule(args.t, Ls)
    rows, ests = _estimate_rows(args, rule, Ls, ts)
    record: dict = {"version": __version__, "config": config, "estimates": [e.as_dict() for e in ests]}
    if config["command"] in ("scaling", "asp-probe"):
        curve = dr.ScalingCurve([(L, e.minus_log_p, e.minus_log_p_std_err) for L, e in zip(Ls, ests)], ests, args.min_hits)
        curve.refit(require=False)
        record["fit"] = _fit_dict(curve.fit)
        record["eligible_L"] = [Ls[k] for k in curve.eligible()]
        if config["command"] == "asp-probe":
            record["asp"] = [
                {"size": e.params["region_size"], "minus_log_p": e.minus_log_p, "per_site": e.minus_log_p / e.params["region_size"]}
                for e in ests
            ]
        baseline = dr.product_measure_curve(args.eps, Ls, rule.dimension) if len(Ls) >= 3 else None
        record["product_measure_fit"] = _fit_dict(baseline.fit) if baseline else None
    return render_csv(config, rows), record


def _scaling_svg(record: dict) -> str:
    pts = [(e["params"]["L"], e["minus_log_p"]) for e in record["estimates"] if 0 < e["minus_log_p"] < math.inf]
    W, H, pad = 360, 260, 40
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">', f'<rect width="{W}" height="{H}" fill="white"/>']
    if pts:
        xs = [math.log(L) for L, _ in pts]
        ys = [math.log(y) for _, y in pts]
        x0, x1 = min(xs), max(xs) if max(xs) > min(xs) else min(xs) + 1
        y0, y1 = min(ys), max(ys) if max(ys) > min(ys) else min(ys) + 1

        def px(x, y):
            return pad + (x - x0) / (x1 - x0) * (W - 2 * pad), H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad)

        for x, y in zip(xs, ys):
            cx, cy = px(x, y)
            out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3" fill="black"/>')
    out.append(f'<text x="{pad}" y="{H - 8}" font-size="11">ln L vs ln(-ln p)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_monte_carlo(args) -> int:
    config = canonical_config(args)
    text, record = run_monte_carlo(config, args.threads)
    _emit(text, args.csv)
    if args.json:
        _write(args.json, json.dumps(record, indent=2, default=str) + "\n")
    if "fit" in record:
        fit = record["fit"]
        if fit is None:
            print(f"# fit: fewer than 3 eligible points (min hits {args.min_hits}, p_hat < 1)", file=sys.stderr)
        else:
            print(f"# fit: exponent {fit['exponent']:.4f} +- {fit['exponent_std_err']:.4f}", file=sys.stderr)
    if getattr(args, "plot_svg", None):
        _write(args.plot_svg, _scaling_svg(record))
    if args.dump_svg:
        rule = _mc_rule(args)
        Ls = parse_int_list(args.L)
        _dump_svgs(args, rule, Ls, parse_schedule(args.t, Ls))
    return EXIT_OK


def cmd_replay(args) -> int:
    config = read_csv_config(args.csv_file)
    text, _ = run_monte_carlo(config, args.threads)
    original = Path(args.csv_file).read_text()
    if args.output:
        _write(args.output, text)
    if text == original:
        print("replay: identical")
        return EXIT_OK
    print("replay: output differs from the recorded CSV")
    return EXIT_NEGATIVE


# parser


def _add_mc_options(p: argparse.ArgumentParser, L_default: str, samples_default: int) -> None:
    p.add_argument("rule", help="builtin name, JSON rule file, or pure-noise")
    p.add_argument("--eps", type=float, default=0.25, help="noise level (default 0.25)")
    p.add_argument("--L", default=L_default, help=f"sphere radii, e.g. 2,3,4 or 2..6 (default {L_default})")
    p.add_argument("--t", default="16L", help="steps per L: 16L, 4*L+2, an integer, or a list (default 16L)")
    p.add_argument("--samples", type=int, default=samples_default, help=f"replicas per L (default {samples_default})")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--dimension", type=int, default=2, help="dimension for pure-noise (default 2)")
    p.add_argument("--min-hits", type=int, default=10, dest="min_hits", help="fit eligibility threshold (default 10)")
    p.add_argument("--csv", help="write CSV here instead of stdout")
    p.add_argument("--json", help="write a JSON record here")
    p.add_argument("--dump-svg", dest="dump_svg", help="directory for SVG renderings of replica 0")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default $ERODERS_THREADS or 1)")
    p.set_defaults(func=cmd_monte_carlo)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eroders", description="Monotone cellular automata with one-sided noise.")
    parser.add_argument("--version", action="version", version=f"eroders {__version__}")
    parser.add_argument("--config", help="JSON file of option defaults (command line flags take precedence)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="decide sigma emptiness and emit a certificate")
    p.add_argument("rule")
    p.add_argument("--side", choices=["zeros", "ones"], default="zeros", help="default zeros")
    p.add_argument("--json", help="write the certificate here")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("velocity", help="front velocities and condition classification")
    p.add_argument("rule")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--directions", help="file with directions (JSON list or one 'a,b' per line)")
    g.add_argument("--fan", action="store_true", help="use the exact fan rays (default in d=2)")
    p.add_argument("--bound", type=int, default=3, help="coordinate bound for sampled directions (default 3)")
    p.add_argument("--json")
    p.set_defaults(func=cmd_velocity)

    p = sub.add_parser("verify", help="exact growth checks")
    p.add_argument("what", choices=["lemma2", "lemma3", "spider", "case-b"])
    p.add_argument("rule")
    p.add_argument("--L", default="4", help="spider radii (default 4)")
    p.add_argument("--t-max", type=int, default=30, dest="t_max", help="last time checked (default 30)")
    p.add_argument("--cert", help="certificate JSON (default: computed)")
    p.add_argument("--u", default="0,1", help="layer direction for case-b (default 0,1)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("droplet", help="estimate P(sphere all ones) per L")
    _add_mc_options(p, "1..4", 100_000)
    p = sub.add_parser("scaling", help="droplet estimates plus a power-law fit")
    _add_mc_options(p, "2..6", 100_000)
    p.add_argument("--plot-svg", dest="plot_svg", help="write a log-log plot")
    p = sub.add_parser("asp-probe", help="suppression per site of all-ones sphere patterns")
    _add_mc_options(p, "1..4", 100_000)

    p = sub.add_parser("replay", help="rerun the config embedded in a CSV and compare")
    p.add_argument("csv_file")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--output", help="also write the regenerated CSV here")
    p.set_defaults(func=cmd_replay)
    return parser


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    """Precedence: command line > --config file > built-in defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        subparser = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        known = {a.dest for a in subparser._actions}
        unknown = set(file_values) - known - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        subparser.set_defaults(**{k: v for k, v in file_values.items() if k != "command"})
        args = parser.parse_args(argv)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "threads", None) is None and os.environ.get("ERODERS_THREADS"):
        args.threads = int(os.environ["ERODERS_THREADS"])
    try:
        return args.func(args)
    except (UsageError, InvalidParameters, ErodersError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
