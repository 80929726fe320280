"""Command-line front end.

Every operation is exposed as a subcommand with machine-readable output:

    affdiv chi2  --family poisson --l1 1 --l2 2 --side pearson
    affdiv chik  --family poisson --l1 0.6 --l2 0.3 --k 3
    affdiv fdiv  --family poisson --l1 0.6 --l2 0.3 --gen kl --method auto
    affdiv kl    --family poisson --l1 0.6 --l2 0.3 --method bregman
    affdiv mc    --family poisson --l1 0.6 --l2 0.3 --gen kl --n 1000000 --seed 7
    affdiv oracle --family poisson --l1 1 --l2 2 --gen pearson-chi2
    affdiv paper-repro

Reports echo the full request (parameters, seed) so that re-running the
echoed request reproduces the values bit for bit.  Exit codes: 0 success,
2 bad arguments, 3 domain violation, 4 non-convergence; ``paper-repro``
exits 1 when a reference check fails.

Gaussian mean vectors are comma-separated; values starting with a minus
sign need the equals form (``--mu1=-1,0``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any

from .closed_form import (
    DivergenceResult,
    chi2_neyman,
    chi2_pearson,
    chi2_symmetric,
    chi_k_lambda,
    chi_k_vajda,
    kl_bregman,
)
from .errors import DomainError, NonConvergenceError
from .estimators import mc_fdiv, oracle_chi_k, oracle_fdiv
from .families import (
    FamilySpec,
    gaussian_mean,
    make_iso_gaussian,
    make_poisson,
    poisson_rate,
    to_natural,
)
from .generators import ANALYTIC_NAMES, GENERATOR_NAMES, make_generator
from .reference import run_reference_checks
from .taylor import kl_series, second_order_approx, taylor_fdiv, taylor_fdiv_auto

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_ARGS = 2
EXIT_DOMAIN = 3
EXIT_NON_CONVERGENCE = 4


def _family_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", required=True, choices=["poisson", "gaussian"])
    parser.add_argument("--l1", type=float, help="first Poisson rate")
    parser.add_argument("--l2", type=float, help="second Poisson rate")
    parser.add_argument("--mu1", type=str, help="first Gaussian mean, comma-separated")
    parser.add_argument("--mu2", type=str, help="second Gaussian mean, comma-separated")


def _output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["json", "csv", "plain"], default="plain")
    parser.add_argument("--output", type=str, default=None, help="write report here instead of stdout")


def _generator_args(parser: argparse.ArgumentParser, analytic_only: bool) -> None:
    names = list(ANALYTIC_NAMES if analytic_only else GENERATOR_NAMES)
    parser.add_argument("--gen", required=True, choices=names)
    parser.add_argument("--alpha", type=float, help="alpha-divergence parameter")
    parser.add_argument("--gen-k", type=int, help="order of the (abs-)pearson-vajda generator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affdiv",
        description="Divergences between members of one affine exponential family",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chi2", help="closed-form chi-square distance")
    _family_args(p)
    _output_args(p)
    p.add_argument("--side", choices=["pearson", "neyman", "symmetric"], default="pearson")

    p = sub.add_parser("chik", help="closed-form signed chi^k distance (generalized: --lam)")
    _family_args(p)
    _output_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lam", type=float, default=1.0, help="center (1 = signed Vajda)")
    p.add_argument("--k-max", type=int, default=30)

    p = sub.add_parser("fdiv", help="f-divergence via its Taylor series")
    _family_args(p)
    _output_args(p)
    _generator_args(p, analytic_only=True)
    p.add_argument("--method", choices=["taylor", "auto", "second-order"], default="auto")
    p.add_argument("--lam", type=float, default=1.0, help="expansion center")
    p.add_argument("--s", type=int, default=10, help="truncation order (method=taylor)")
    p.add_argument("--tol", type=float, default=1e-10, help="term tolerance (method=auto)")
    p.add_argument("--s-max", type=int, default=30)
    p.add_argument("--ratio-m", type=float, help="lower density-ratio bound for the remainder bound")
    p.add_argument("--ratio-M", type=float, help="upper density-ratio bound for the remainder bound")

    p = sub.add_parser("kl", help="Kullback-Leibler divergence")
    _family_args(p)
    _output_args(p)
    p.add_argument("--method", choices=["bregman", "series"], default="bregman")
    p.add_argument("--s", type=int, default=10, help="series truncation order (method=series)")

    p = sub.add_parser("mc", help="Monte Carlo f-divergence estimate")
    _family_args(p)
    _output_args(p)
    _generator_args(p, analytic_only=False)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("oracle", help="brute-force summation / quadrature reference")
    _family_args(p)
    _output_args(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--gen", choices=list(GENERATOR_NAMES))
    group.add_argument("--chi-k", type=int, help="evaluate the chi^k integrand instead of a generator")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gen-k", type=int)
    p.add_argument("--lam", type=float, default=1.0, help="center for --chi-k")
    p.add_argument("--absolute", action="store_true", help="absolute chi^k (with --chi-k)")

    p = sub.add_parser("paper-repro", help="recompute the built-in reference table")
    _output_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-runs", type=int, default=40)
    p.add_argument("--n", type=int, default=1_000_000)

    return parser


def _build_family(args: argparse.Namespace) -> tuple[FamilySpec, Any, Any, dict]:
    if args.family == "poisson":
        if args.l1 is None or args.l2 is None:
            raise ValueError("poisson family requires --l1 and --l2")
        fam = make_poisson()
        th1 = to_natural(fam, poisson_rate(args.l1))
        th2 = to_natural(fam, poisson_rate(args.l2))
        params = {"l1": args.l1, "l2": args.l2}
    else:
        if args.mu1 is None or args.mu2 is None:
            raise ValueError("gaussian family requires --mu1 and --mu2")
        mu1 = [float(t) for t in args.mu1.split(",")]
        mu2 = [float(t) for t in args.mu2.split(",")]
        if len(mu1) != len(mu2):
            raise ValueError("--mu1 and --mu2 must have the same dimension")
        fam = make_iso_gaussian(len(mu1))
        th1 = to_natural(fam, gaussian_mean(mu1))
        th2 = to_natural(fam, gaussian_mean(mu2))
        params = {"mu1": mu1, "mu2": mu2}
    return fam, th1, th2, params


def _build_generator(args: argparse.Namespace):
    return make_generator(args.gen, alpha=args.alpha, k=args.gen_k)


def _trace_dict(trace) -> dict:
    out = {
        "center": trace.center,
        "truncation_order": trace.truncation_order,
        "terms": list(trace.terms),
        "partial_sums": list(trace.partial_sums),
    }
    if trace.remainder_bound is not None:
        out["remainder_bound"] = trace.remainder_bound
    if trace.converged is not None:
        out["converged"] = trace.converged
    return out


def _report_from_result(
    command: str, params: dict, result: DivergenceResult, trace=None
) -> dict:
    report = {
        "command": command,
        "family": params.pop("_family"),
        "params": params,
        "method": result.method,
        "value": result.value,
    }
    if result.log1p_form is not None:
        report["log_exponent"] = result.log1p_form
    if result.bound is not None:
        report["bound"] = result.bound
    if trace is not None:
        report["trace"] = _trace_dict(trace)
    return report


def run(args: argparse.Namespace) -> tuple[dict, int]:
    """Execute one parsed request; returns (report, exit status)."""
    if args.command == "paper-repro":
        rows = run_reference_checks(seed=args.seed, mc_runs=args.mc_runs, mc_n=args.n)
        all_passed = all(r.passed for r in rows)
        report = {
            "command": "paper-repro",
            "params": {"seed": args.seed, "mc_runs": args.mc_runs, "n": args.n},
            "passed": all_passed,
            "rows": [
                {
                    "name": r.name,
                    "expected": r.expected,
                    "computed": r.computed,
                    "tol": r.tol,
                    "mode": r.mode,
                    "passed": r.passed,
                }
                for r in rows
            ],
        }
        return report, EXIT_OK if all_passed else EXIT_CHECK_FAILED

    fam, th1, th2, params = _build_family(args)
    params["_family"] = args.family

    if args.command == "chi2":
        op = {"pearson": chi2_pearson, "neyman": chi2_neyman, "symmetric": chi2_symmetric}
        result = op[args.side](fam, th1, th2)
        params["side"] = args.side
        return _report_from_result("chi2", params, result), EXIT_OK

    if args.command == "chik":
        params.update({"k": args.k, "lam": args.lam, "k_max": args.k_max})
        if args.lam == 1.0:
            result = chi_k_vajda(fam, th1, th2, args.k, k_max=args.k_max)
        else:
            value = chi_k_lambda(fam, th1, th2, args.k, args.lam, k_max=args.k_max)
            result = DivergenceResult(value=value)
        return _report_from_result("chik", params, result), EXIT_OK

    if args.command == "fdiv":
        gen = _build_generator(args)
        params.update({"gen": args.gen, "method": args.method, "lam": args.lam})
        if args.alpha is not None:
            params["alpha"] = args.alpha
        if args.gen_k is not None:
            params["gen_k"] = args.gen_k
        if args.method == "second-order":
            result = second_order_approx(gen, fam, th1, th2)
            return _report_from_result("fdiv", params, result), EXIT_OK
        if args.method == "taylor":
            bounds = None
            if args.ratio_m is not None and args.ratio_M is not None:
                bounds = (args.ratio_m, args.ratio_M)
            params["s"] = args.s
            result, trace = taylor_fdiv(gen, fam, th1, th2, lam=args.lam, s=args.s, ratio_bounds=bounds)
            return _report_from_result("fdiv", params, result, trace), EXIT_OK
        params.update({"tol": args.tol, "s_max": args.s_max})
        result, trace = taylor_fdiv_auto(
            gen, fam, th1, th2, lam=args.lam, tol=args.tol, s_max=args.s_max
        )
        status = EXIT_OK if trace.converged else EXIT_NON_CONVERGENCE
        return _report_from_result("fdiv", params, result, trace), status

    if args.command == "kl":
        params["method"] = args.method
        if args.method == "bregman":
            result = kl_bregman(fam, th1, th2)
            return _report_from_result("kl", params, result), EXIT_OK
        params["s"] = args.s
        result, trace = kl_series(fam, th1, th2, s=args.s)
        return _report_from_result("kl", params, result, trace), EXIT_OK

    if args.command == "mc":
        gen = _build_generator(args)
        params.update({"gen": args.gen, "n": args.n, "seed": args.seed, "workers": args.workers})
        if args.alpha is not None:
            params["alpha"] = args.alpha
        if args.gen_k is not None:
            params["gen_k"] = args.gen_k
        est = mc_fdiv(gen, fam, th1, th2, n=args.n, seed=args.seed, workers=args.workers)
        report = {
            "command": "mc",
            "family": params.pop("_family"),
            "params": params,
            "method": "monte_carlo",
            "value": est.value,
            "std_error": est.std_error,
            "seed": args.seed,
            "n": est.n,
        }
        return report, EXIT_OK

    if args.command == "oracle":
        if args.chi_k is not None:
            params.update({"chi_k": args.chi_k, "lam": args.lam, "absolute": args.absolute})
            est = oracle_chi_k(fam, th1, th2, args.chi_k, lam=args.lam, absolute=args.absolute)
        else:
            gen = _build_generator(args)
            params["gen"] = args.gen
            if args.alpha is not None:
                params["alpha"] = args.alpha
            if args.gen_k is not None:
                params["gen_k"] = args.gen_k
            est = oracle_fdiv(gen, fam, th1, th2)
        report = {
            "command": "oracle",
            "family": params.pop("_family"),
            "params": params,
            "method": "oracle",
            "value": est.value,
            "n": est.n,
        }
        if est.tail_mass_dropped is not None:
            report["tail_mass_dropped"] = est.tail_mass_dropped
        return report, EXIT_OK

    raise ValueError(f"unknown command {args.command!r}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _flatten_for_csv(report: dict) -> tuple[list[str], list[str]]:
    header: list[str] = []
    row: list[str] = []
    for key, value in report.items():
        if key == "rows":
            continue
        if isinstance(value, dict):
            for sub_key, sub_value in value.items():
                header.append(f"{key}.{sub_key}")
                row.append(_csv_cell(sub_value))
        else:
            header.append(key)
            row.append(_csv_cell(value))
    return header, row


def _csv_cell(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ";".join(_csv_cell(v) for v in value)
    return str(value)


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        if "rows" in report:
            writer.writerow(["name", "expected", "computed", "tol", "mode", "passed"])
            for r in report["rows"]:
                writer.writerow(
                    [r["name"], r["expected"], r["computed"], r["tol"], r["mode"], r["passed"]]
                )
        else:
            header, row = _flatten_for_csv(report)
            writer.writerow(header)
            writer.writerow(row)
        return buf.getvalue().rstrip("\n")
    # plain
    lines: list[str] = []
    if "rows" in report:
        name_width = max(len(r["name"]) for r in report["rows"])
        for r in report["rows"]:
            status = "PASS" if r["passed"] else "FAIL"
            lines.append(
                f"{status}  {r['name']:<{name_width}}  "
                f"expected={r['expected']:.6g}  computed={r['computed']:.10g}  "
                f"tol={r['tol']:g} ({r['mode']})"
            )
        lines.append("ALL PASS" if report["passed"] else "FAILURES PRESENT")
        return "\n".join(lines)
    for key, value in report.items():
        if isinstance(value, dict):
            for sub_key, sub_value in value.items():
                lines.append(f"{key}.{sub_key} = {sub_value}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines)


def _emit(text: str, output: str | None) -> None:
    if output is None:
        print(text)
    else:
        with open(output, "w") as fh:
            fh.write(text + "\n")


def _error_line(kind: str, exc: Exception) -> str:
    return json.dumps({"error": kind, "message": str(exc)})


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, status = run(args)
    except DomainError as exc:
        print(_error_line("domain_violation", exc), file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print(_error_line("non_convergence", exc), file=sys.stderr)
        return EXIT_NON_CONVERGENCE
    except (ValueError, RuntimeError) as exc:
        print(_error_line("bad_request", exc), file=sys.stderr)
        return EXIT_BAD_ARGS
    _emit(render_report(report, args.format), args.output)
    return status


if __name__ == "__main__":
    sys.exit(main())
