"""Command-line entry points.

    bclab simulate --config cfg.json --out DIR [--format csv,jsonl,md]
                   [--predict {BC,not-BC,L1BC,SBC}]
    bclab criteria --spec spec.json [--out report.json]
    bclab mixing   --task {circle,kernel,dmr} [task options] [--out FILE]
    bclab report   --run DIR --format {csv,jsonl,md}

Exit codes: 0 pass, 2 verdict failure, 3 inconclusive, 4 configuration
error.  ``BCLAB_THREADS`` caps simulation workers.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .criteria import (
    INCONCLUSIVE,
    PathEnsemble,
    SATISFIED,
    VIOLATED,
    check_alpha,
    check_beta_strong,
    check_f_criteria,
    check_l2,
    check_pairwise,
    check_renewal_nested,
    check_tilde,
)
from .harness import (
    CalibrationMissingError,
    aggregate_verdict,
    config_from_json,
    emit_report,
    load_run,
    marginal_measure,
    report_from_records,
    run_experiment,
)
from .mixing import (
    circle_profile,
    dmr_beta_bounds,
    dmr_beta_profile,
    profile_from_csv,
    profile_to_csv,
)
from .processes import GOLDEN_CONJUGATE
from .seqcore import TabulatedSeq, seq_from_json

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_CONFIG = 4

_VERDICT_EXIT = {SATISFIED: EXIT_OK, VIOLATED: EXIT_FAIL,
                 INCONCLUSIVE: EXIT_INCONCLUSIVE}


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def _write_or_print(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    try:
        cfg = config_from_json(json.loads(Path(args.config).read_text()))
    except (OSError, ValueError, json.JSONDecodeError) as e:
        return _err(f"bad config: {e}")
    if args.out:
        cfg.out_dir = args.out
    if not cfg.out_dir:
        return _err("no output directory: pass --out or set out_dir")
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    try:
        report = run_experiment(cfg)
        paths = emit_report(report, formats=formats)
    except (CalibrationMissingError, ValueError) as e:
        return _err(str(e))

    print(f"run digest {paths['digest']}")
    if len(report.checkpoints):
        c = int(report.checkpoints[-1])
        print(f"final checkpoint {c}: mean ratio "
              f"{report.mean_ratio[-1]:.4f}, median S {report.median_s[-1]:.0f}, "
              f"late hit fraction {report.hit_frac_late[-1]:.4f}")
    code = EXIT_OK
    for token, rep in sorted(report.criteria.items()):
        print(f"criterion {token}: {rep.verdict}")
        code = max(code, _VERDICT_EXIT[rep.verdict])
    if args.predict:
        verdict = aggregate_verdict(report, args.predict)
        word = "pass" if verdict.passed else "fail"
        print(f"prediction {args.predict}: {word} ({verdict.reason})")
        if not verdict.passed:
            code = EXIT_FAIL
    return code


# ---------------------------------------------------------------------------
# criteria


def _seq_arg(obj):
    if obj is None:
        return None
    return seq_from_json(obj)


def _rate_arg(obj, kind_default):
    """A decay-rate input: sequence JSON or a profile CSV reference."""
    if isinstance(obj, dict) and "profile_csv" in obj:
        text = Path(obj["profile_csv"]).read_text()
        return profile_from_csv(text, obj.get("kind", kind_default))
    return _seq_arg(obj)


def _dispatch_criteria(doc: dict):
    check = doc.get("check")
    horizon = doc.get("horizon")
    if check == "l2":
        return check_l2(_seq_arg(doc["e"]), _seq_arg(doc["var"]),
                        horizon=horizon)
    if check == "alpha":
        return check_alpha(_rate_arg(doc.get("alpha"), "alpha_inf1"),
                           _seq_arg(doc["mu"]), doc["mode"],
                           params=doc.get("params"), horizon=horizon)
    if check == "beta-strong":
        q = float(doc.get("qstar_const", 1.0))
        return check_beta_strong(_rate_arg(doc["beta"], "beta_inf1"),
                                 lambda u: q,
                                 qstar_bound=doc.get("qstar_bound"),
                                 horizon=horizon)
    if check == "tilde":
        return check_tilde(_rate_arg(doc["rate"], "tilde_beta11"),
                           _seq_arg(doc["mu"]), doc.get("lq_bound"),
                           float(doc.get("p", 1.0)), doc.get("mode", "i"),
                           limsup_floor=doc.get("limsup_floor"),
                           horizon=horizon)
    if check == "pairwise":
        return check_pairwise(_seq_arg(doc["gamma"]), _seq_arg(doc["phi"]),
                              _seq_arg(doc["alpha"]), _seq_arg(doc["p"]),
                              doc.get("mode", "i"), horizon=horizon)
    if check == "renewal":
        return check_renewal_nested(_seq_arg(doc["nu"]),
                                    nested=bool(doc.get("nested", True)),
                                    horizon=horizon)
    if check == "f":
        cfg, records = load_run(doc["run"])
        report = report_from_records(cfg, records)
        ens = PathEnsemble(report.checkpoints, report.s_values)
        masses = cfg.family.measures(marginal_measure(cfg), cfg.n)
        e_seq = TabulatedSeq(np.cumsum(masses))
        return check_f_criteria(ens, e_seq, doc.get("mode", "ii"),
                                subsequence=doc.get("subsequence"),
                                mu_A=TabulatedSeq(masses))
    raise ValueError(f"unknown check {check!r}")


def _cmd_criteria(args) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text())
        report = _dispatch_criteria(doc)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        return _err(f"bad criteria spec: {e}")
    for clause in report.diagnostics.get("clauses", []):
        print(f"clause {clause['name']}: {clause['outcome']} ({clause['method']})")
    print(f"verdict {report.criterion}: {report.verdict}")
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    return _VERDICT_EXIT[report.verdict]


# ---------------------------------------------------------------------------
# mixing


def _parse_ns(text: str, default):
    if not text:
        return np.asarray(default, dtype=int)
    return np.asarray([int(t) for t in text.split(",") if t.strip()], dtype=int)


def _cmd_mixing(args) -> int:
    try:
        a = GOLDEN_CONJUGATE if args.a == "golden" else float(args.a)
        if args.task == "circle":
            ns = _parse_ns(args.ns, 2 ** np.arange(4, 15))
            prof = circle_profile(ns, a, k_max=args.k_max)
            _write_or_print(profile_to_csv(prof), args.out)
        elif args.task == "kernel":
            ns = _parse_ns(args.ns, np.arange(10, 101, 10))
            prof = dmr_beta_profile(a, ns, m=args.m)
            _write_or_print(profile_to_csv(prof), args.out)
        elif args.task == "dmr":
            ns = _parse_ns(args.ns, np.arange(10, 101, 10))
            lines = ["n,lower,upper"]
            for n in ns:
                s = dmr_beta_bounds(a, int(n))
                lines.append(f"{int(n)},{s.lower!r},{s.upper!r}")
            _write_or_print("\n".join(lines) + "\n", args.out)
        else:  # unreachable behind argparse choices
            return _err(f"unknown task {args.task!r}")
    except (OSError, ValueError) as e:
        return _err(str(e))
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _cmd_report(args) -> int:
    try:
        cfg, records = load_run(args.run)
        report = report_from_records(cfg, records)
        paths = emit_report(report, out_dir=args.run, formats=[args.format])
    except (OSError, ValueError, CalibrationMissingError) as e:
        return _err(str(e))
    print(f"run digest {paths['digest']}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bclab",
                                description="Monte Carlo hit-count experiments "
                                            "and limit-criterion evaluation")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a configured experiment")
    sim.add_argument("--config", required=True, help="experiment JSON file")
    sim.add_argument("--out", help="output directory (overrides config)")
    sim.add_argument("--format", default="csv,jsonl,md",
                     help="comma-separated subset of csv,jsonl,md")
    sim.add_argument("--predict", choices=["BC", "not-BC", "L1BC", "SBC"],
                     help="judge the run against a predicted limit behaviour")
    sim.set_defaults(func=_cmd_simulate)

    cri = sub.add_parser("criteria", help="evaluate a limit criterion")
    cri.add_argument("--spec", required=True, help="criterion spec JSON file")
    cri.add_argument("--out", help="write the full report JSON here")
    cri.set_defaults(func=_cmd_criteria)

    mix = sub.add_parser("mixing", help="dependence-decay profiles")
    mix.add_argument("--task", required=True, choices=["circle", "kernel", "dmr"])
    mix.add_argument("--a", default="golden",
                     help="step length / chain exponent ('golden' or a float)")
    mix.add_argument("--ns", default="", help="comma-separated lag list")
    mix.add_argument("--k-max", type=int, default=100_000, dest="k_max",
                     help="series truncation for the circle task")
    mix.add_argument("--m", type=int, default=200,
                     help="grid size for the kernel task")
    mix.add_argument("--out", help="output CSV path (default stdout)")
    mix.set_defaults(func=_cmd_mixing)

    rep = sub.add_parser("report", help="re-emit artifacts from a run directory")
    rep.add_argument("--run", required=True, help="run directory")
    rep.add_argument("--format", required=True, choices=["csv", "jsonl", "md"])
    rep.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
