"""Command-line front end: constants, predictions, simulations, merge checks.

Output is newline-delimited JSON records by default (``--format csv`` emits
the same numbers as CSV rows).  Exit codes: 0 success, 1 experiment-level
failure (for example a merge counterexample), 2 usage error.  The
``DARTSKETCH_THREADS`` environment variable caps the worker thread count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Dict, List, Optional

from . import analysis, harness

_EXIT_OK = 0
_EXIT_EXPERIMENT_FAILED = 1
_EXIT_USAGE = 2


def _q_value(text: str) -> float:
    q = math.e if text.lower() == "e" else float(text)
    if not q > 1.0:
        raise argparse.ArgumentTypeError(f"base q must exceed 1, got {text}")
    return q


def _smoothing_value(text: str) -> Optional[bool]:
    return {"auto": None, "on": True, "off": False}[text]


def _default_q(scheme: str, q: Optional[float]) -> float:
    if q is not None:
        return q
    return 2.91 if scheme == "mcurtain" else 2.0


def _emit(records: List[Dict[str, object]], fmt: str, out: Optional[str]) -> None:
    if fmt == "json":
        text = "\n".join(json.dumps(r) for r in records) + "\n"
    else:
        buf = io.StringIO()
        keys = list(records[0].keys())
        writer = csv.writer(buf)
        writer.writerow(keys)
        for r in records:
            writer.writerow([r.get(k) for k in keys])
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_constants(args) -> int:
    q = args.q if args.q is not None else 2.91
    rec: Dict[str, object] = {"q": q, "a": args.a, "h": args.h, "log2u": args.log2u}
    rec["kappa_pcsa"] = analysis.kappa_pcsa(q)
    rec["kappa_loglog"] = analysis.kappa_loglog(q)
    rec["kappa_curtain"] = analysis.kappa_curtain(q, args.a, args.h)
    rec["arv_pcsa"] = analysis.arv_factor(rec["kappa_pcsa"])
    rec["arv_loglog"] = analysis.arv_factor(rec["kappa_loglog"])
    rec["arv_curtain"] = analysis.arv_factor(rec["kappa_curtain"])
    rec["mvp_pcsa"] = args.log2u * rec["arv_pcsa"]
    rec["mvp_loglog"] = math.log2(args.log2u) * rec["arv_loglog"]
    rec["mvp_curtain"] = analysis.mvp_curtain(q, args.a, args.h)
    rec["h0"] = analysis.h0_constant()
    rec["i0"] = analysis.i0_constant()
    rec["h0_half"] = rec["h0"] / 2.0
    rec["h0_over_i0"] = rec["h0"] / rec["i0"]
    _emit([rec], args.format, args.out)
    return _EXIT_OK


def _cmd_predict(args) -> int:
    q = _default_q(args.scheme, args.q)
    pred = analysis.predict(args.scheme, args.m, q=q, a=args.a, h=args.h, k=args.k)
    _emit(
        [
            {
                "scheme": args.scheme,
                "m": args.m,
                "q": q,
                "relvar": pred.relvar,
                "stderr": pred.stderr,
            }
        ],
        args.format,
        args.out,
    )
    return _EXIT_OK


def _config_from(args) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(
        scheme=args.scheme,
        m=args.m,
        lam=args.lam,
        trials=args.trials,
        master_seed=args.seed,
        q=_default_q(args.scheme, args.q),
        a=args.a,
        h=args.h,
        k=args.k,
        smoothing=args.smoothing,
        budget_bits=args.budget_bits,
        histogram_bins=args.bins,
        duplicates=args.duplicates,
    )


def _cmd_simulate(args) -> int:
    stats = harness.run_trials(_config_from(args))
    _emit([stats.to_record()], args.format, args.out)
    return _EXIT_OK


def _cmd_distribution(args) -> int:
    record = harness.distribution_export(_config_from(args))
    if args.format == "json":
        recs = [{"summary": record["summary"]}] + list(record["histogram"])
        _emit(recs, "json", args.out)
    else:
        _emit(list(record["histogram"]), "csv", args.out)
    return _EXIT_OK


def _cmd_kappa_empirical(args) -> int:
    q = _default_q(args.scheme, args.q)
    kappa_hat = harness.empirical_kappa(
        args.scheme,
        args.m,
        args.lam,
        args.trials,
        master_seed=args.seed,
        q=q,
        a=args.a,
        h=args.h,
        k=args.k,
        smoothing=args.smoothing,
    )
    closed = analysis.kappa_for(args.scheme, q=q, a=args.a, h=args.h, k=args.k)
    _emit(
        [
            {
                "scheme": args.scheme,
                "m": args.m,
                "lambda_per_column": args.lam,
                "trials": args.trials,
                "kappa_empirical": kappa_hat,
                "kappa_closed_form": closed,
                "rel_err": kappa_hat / closed - 1.0,
            }
        ],
        args.format,
        args.out,
    )
    return _EXIT_OK


def _cmd_merge_check(args) -> int:
    report = harness.merge_check(
        args.scheme,
        shards=args.shards,
        lam=args.lam,
        trials=args.trials,
        master_seed=args.seed,
        m=args.m,
        q=_default_q(args.scheme, args.q),
        a=args.a,
        h=args.h,
        k=args.k,
    )
    _emit([report.to_record()], args.format, args.out)
    return _EXIT_OK if report.passed else _EXIT_EXPERIMENT_FAILED


def _cmd_table1(args) -> int:
    _emit(analysis.mvp_table(args.log2u), args.format, args.out)
    return _EXIT_OK


def _cmd_table3(args) -> int:
    rows = harness.run_table3(trials=args.trials, lam=args.lam, master_seed=args.seed)
    _emit(rows, args.format, args.out)
    return _EXIT_OK


_ALL_SCHEMES = tuple(harness.SCHEMES) + tuple(harness.SCHEME_ALIASES)


def _add_scheme_flags(p: argparse.ArgumentParser, schemes=_ALL_SCHEMES, default_m=None) -> None:
    p.add_argument("--scheme", required=True, choices=schemes)
    if default_m is None:
        p.add_argument("--m", type=int, required=True, help="column/bucket count")
    else:
        p.add_argument("--m", type=int, default=default_m, help="column/bucket count")
    p.add_argument("--q", type=_q_value, default=None,
                   help="base (real > 1, or 'e'); default 2, 2.91 for mcurtain")
    p.add_argument("--a", type=int, default=2, help="curtain offset bound (power of 2)")
    p.add_argument("--h", type=int, default=1, help="curtain window depth")
    p.add_argument("--k", type=int, default=1, help="mincount per-bucket capacity")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="dartsketch",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    top.add_argument("--format", choices=("json", "csv"), default="json")
    top.add_argument("--out", default=None, help="write output to this path")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="kappa / ARV / MVP and entropy constants")
    p.add_argument("--q", type=_q_value, default=None)
    p.add_argument("--a", type=int, default=2)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--log2u", type=int, default=64)
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("predict", help="relative variance / stderr prediction")
    _add_scheme_flags(p)
    p.set_defaults(fn=_cmd_predict)

    for name, fn, help_text in (
        ("simulate", _cmd_simulate, "Monte Carlo trial statistics"),
        ("distribution", _cmd_distribution, "histogram of estimate/lambda"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_scheme_flags(p)
        p.add_argument("--lambda", dest="lam", type=int, required=True)
        p.add_argument("--trials", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget-bits", type=int, default=None)
        p.add_argument("--bins", type=int, default=50)
        p.add_argument("--duplicates", type=int, default=1)
        p.add_argument("--smoothing", type=_smoothing_value, default=None,
                       choices=(None, True, False), metavar="{auto,on,off}")
        p.set_defaults(fn=fn)

    p = sub.add_parser("kappa-empirical", help="measure lambda * E[free area]")
    _add_scheme_flags(
        p,
        schemes=("mpcsa", "mloglog", "mcurtain", "mmincount")
        + tuple(harness.SCHEME_ALIASES),
    )
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="insertions per column")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smoothing", type=_smoothing_value, default=None,
                   choices=(None, True, False), metavar="{auto,on,off}")
    p.set_defaults(fn=_cmd_kappa_empirical)

    p = sub.add_parser("merge-check", help="shard/merge vs single-stream equality")
    _add_scheme_flags(p, default_m=8)
    p.add_argument("--shards", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=int, default=200)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_merge_check)

    p = sub.add_parser("table1", help="MVP summary for a given universe size")
    p.add_argument("--log2u", type=int, default=64)
    p.set_defaults(fn=_cmd_table1)

    p = sub.add_parser("table3", help="run the six bit-budget configurations")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--lambda", dest="lam", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=_cmd_table3)

    return top


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
