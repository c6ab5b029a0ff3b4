#!/usr/bin/env python3
"""Command-line front end for the verification-bias estimators.

Every subcommand reads a CSV with a header row (the bundled SPECT/CAD file
when --input is omitted) and prints a report as text, JSON or CSV.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
"""
import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import load_dotenv

from .common import dumps, log, set_quiet_mode
from .config import (
    CI_TYPES,
    DEFAULT_ALPHA,
    DEFAULT_CUTOFF,
    DEFAULT_REPLICATES,
    MARGINALIZATIONS,
    OUTPUT_FORMATS,
    RESAMPLE_MODES,
    BootConfig,
    EmConfig,
    MiConfig,
    RunConfig,
)
from .data.dataset import CAD_SPECT_PATH, Dataset, cross_table, dump_dataset, load_dataset
from .data.simgen import generate, load_sim_spec
from .errors import EXIT_DATA, UsageError, VerificationBiasError
from .estimators import AccuracyResult, acc_em, acc_mi, bg, cca, ebg
from .report import render, render_comparison, render_table, write_output

STOCHASTIC_HINT = "pass --seed N for a reproducible run, or --no-seed to accept a random one"


def _parse_bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _covariates(text: Optional[str]) -> tuple:
    if not text:
        return ()
    return tuple(name.strip() for name in text.split(",") if name.strip())


# ============================================================================
# PARSER
# ============================================================================

def _add_common(p: argparse.ArgumentParser, run: RunConfig) -> None:
    p.add_argument("--input", default=None, help=f"CSV input (default: bundled {CAD_SPECT_PATH.name})")
    p.add_argument("--test", default="T", help="Index test column (default: T)")
    p.add_argument("--disease", default="D", help="Disease status column (default: D)")
    p.add_argument("--format", choices=OUTPUT_FORMATS, default=run.output_format, dest="output_format",
                   help=f"Report format (default: {run.output_format})")
    p.add_argument("--output", default=None, help="Write the report here instead of stdout")
    p.add_argument("--debug", action="store_true", help="Enable verbose logging")
    p.add_argument("--quiet", action="store_true", default=run.quiet, help="Suppress progress logging")


def _add_alpha(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help=f"Two-sided significance level (default: {DEFAULT_ALPHA})")


def _add_seed(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, default=None, help="Random seed")
    group.add_argument("--no-seed", action="store_true", help="Run without a fixed seed")


def _add_bootstrap(p: argparse.ArgumentParser, run: RunConfig) -> None:
    p.add_argument("--R", type=int, default=DEFAULT_REPLICATES, dest="replicates",
                   help=f"Bootstrap replicates (default: {DEFAULT_REPLICATES})")
    p.add_argument("--ci-type", choices=CI_TYPES, default="bca", help="Bootstrap interval (default: bca)")
    p.add_argument("--resample", choices=RESAMPLE_MODES, default="verified",
                   help="Resample verified records only (default) or every record")
    p.add_argument("--no-ci", action="store_true", help="Point estimates only")
    p.add_argument("--threads", type=int, default=run.threads, help="Worker threads")


def _add_em(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mnar", type=_parse_bool, nargs="?", const=True, default=True,
                   help="Verification may depend on disease status (default: true)")
    p.add_argument("--t-max", type=int, default=None, dest="t_max",
                   help="Maximum EM iterations (default: 5000, or 50000 with covariates)")
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF,
                   help=f"Convergence cutoff on coefficient change (default: {DEFAULT_CUTOFF})")


def build_parser(run: Optional[RunConfig] = None) -> argparse.ArgumentParser:
    run = run or RunConfig()
    parser = argparse.ArgumentParser(
        prog="vbias",
        description="Diagnostic accuracy under partial verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="Cross-table of test result by disease status")
    _add_common(p, run)
    p.add_argument("--verified-only", action="store_true", help="Hide the unverified column")
    p.add_argument("--no-total", action="store_true", help="Hide the total column")

    for name, text in (("cca", "Complete case analysis"), ("bg", "Begg-Greenes correction")):
        p = sub.add_parser(name, help=text)
        _add_common(p, run)
        _add_alpha(p)
        p.add_argument("--no-ci", action="store_true", help="Point estimates only")

    p = sub.add_parser("ebg", help="Extended Begg-Greenes with covariates")
    _add_common(p, run)
    _add_alpha(p)
    _add_seed(p)
    _add_bootstrap(p, run)
    p.add_argument("--covariates", type=_covariates, default=(), help="Comma-separated covariate columns")
    p.add_argument("--saturated", action="store_true", help="Add every test x covariate interaction")

    p = sub.add_parser("mi", help="Multiple imputation with Rubin's rules")
    _add_common(p, run)
    _add_alpha(p)
    _add_seed(p)
    p.add_argument("--covariates", type=_covariates, default=(), help="Comma-separated covariate columns")
    p.add_argument("--m", type=int, default=None, help="Imputations (default: missing percentage, rounded up)")
    p.add_argument("--threads", type=int, default=run.threads, help="Worker threads")

    p = sub.add_parser("em", help="EM with disease, test and verification models")
    _add_common(p, run)
    _add_alpha(p)
    _add_seed(p)
    _add_bootstrap(p, run)
    _add_em(p)
    p.add_argument("--covariates", type=_covariates, default=(), help="Comma-separated covariate columns")
    p.add_argument("--verification-interaction", action="store_true",
                   help="Add the T:D term to the verification model")
    p.add_argument("--marginalization", choices=MARGINALIZATIONS, default="records",
                   help="Average over records (default) or covariate patterns")

    p = sub.add_parser("simulate", help="Generate a synthetic cohort from a spec file")
    p.add_argument("--spec", required=True, help="Key/value spec file")
    p.add_argument("--seed", type=int, default=None, help="Override SEED from the spec file")
    p.add_argument("--no-seed", action="store_true", help="Allow a spec without SEED")
    p.add_argument("--output", default=None, help="Dataset CSV (default: stdout)")
    p.add_argument("--truth", default=None, help="Truth JSON (default: next to --output, else stderr)")
    p.add_argument("--debug", action="store_true", help="Enable verbose logging")
    p.add_argument("--quiet", action="store_true", default=run.quiet, help="Suppress progress logging")

    p = sub.add_parser("compare", help="Every estimator side by side")
    _add_common(p, run)
    _add_alpha(p)
    _add_seed(p)
    _add_em(p)
    p.add_argument("--covariates", type=_covariates, default=(), help="Comma-separated covariate columns")
    p.add_argument("--saturated", action="store_true", help="Saturated EBG model with covariates")
    p.add_argument("--m", type=int, default=None, help="Imputations for MI")
    p.add_argument("--threads", type=int, default=run.threads, help="Worker threads")
    return parser


# ============================================================================
# COMMANDS
# ============================================================================

def _seed(args: argparse.Namespace, stochastic: bool = True) -> Optional[int]:
    if stochastic and args.seed is None and not args.no_seed:
        raise UsageError(f"{args.command} is stochastic: {STOCHASTIC_HINT}")
    return args.seed


def _load(args: argparse.Namespace, covariates: tuple = ()) -> Dataset:
    source = args.input or CAD_SPECT_PATH
    return load_dataset(source, args.test, args.disease, covariates)


def _boot(args: argparse.Namespace) -> Optional[BootConfig]:
    if args.no_ci:
        return None
    return BootConfig(
        replicates=args.replicates,
        seed=_seed(args),
        ci_type=args.ci_type,
        alpha=args.alpha,
        resample=args.resample,
        threads=args.threads,
    )


def run_estimator(args: argparse.Namespace) -> AccuracyResult:
    if args.command in ("cca", "bg"):
        table = cross_table(_load(args))
        estimator = cca if args.command == "cca" else bg
        return estimator(table, args.alpha, ci=not args.no_ci)

    if args.command == "ebg":
        data = _load(args, args.covariates)
        return ebg(data, args.covariates, args.saturated, args.alpha, boot=_boot(args))

    if args.command == "mi":
        data = _load(args, args.covariates)
        config = MiConfig(m=args.m, seed=_seed(args), covariates=args.covariates,
                          alpha=args.alpha, threads=args.threads)
        return acc_mi(data, config)

    data = _load(args, args.covariates)
    config = EmConfig(
        covariates=args.covariates,
        mnar=args.mnar,
        t_max=args.t_max,
        cutoff=args.cutoff,
        alpha=args.alpha,
        verification_interaction=args.verification_interaction,
        marginalization=args.marginalization,
        boot=_boot(args),
    )
    return acc_em(data, config)


def run_compare(args: argparse.Namespace) -> Dict[str, AccuracyResult]:
    """Point estimates of every method, without and then with covariates."""
    seed = _seed(args)
    data = _load(args, args.covariates)
    table = cross_table(data)
    results = {"CCA": cca(table, args.alpha), "BG": bg(table, args.alpha)}
    variants = [("", ())]
    if args.covariates:
        variants.append(("X", args.covariates))
    for suffix, covs in variants:
        results["EBG" + suffix] = ebg(data, covs, args.saturated and bool(covs), args.alpha)
    for suffix, covs in variants:
        results["MI" + suffix] = acc_mi(
            data, MiConfig(m=args.m, seed=seed, covariates=covs, alpha=args.alpha, threads=args.threads)
        )
    for suffix, covs in variants:
        results["EM" + suffix] = acc_em(
            data, EmConfig(covariates=covs, mnar=args.mnar, t_max=args.t_max, cutoff=args.cutoff)
        )
    return results


def run_simulate(args: argparse.Namespace) -> None:
    spec = load_sim_spec(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if spec.seed is None and not args.no_seed:
        raise UsageError(f"simulate is stochastic: set SEED in the spec file, {STOCHASTIC_HINT}")

    sim = generate(spec)
    truth = dumps(sim.truth.as_dict()).decode("utf-8")
    if args.output is None:
        dump_dataset(sim.dataset, sys.stdout)
    else:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        dump_dataset(sim.dataset, args.output)
        log(f"Wrote {args.output}")

    truth_path = args.truth
    if truth_path is None and args.output is not None:
        truth_path = str(Path(args.output).with_suffix(".truth.json"))
    if truth_path is None:
        print(truth, file=sys.stderr)
    else:
        write_output(truth, truth_path)


def _configure_logging(args: argparse.Namespace) -> None:
    # --debug wins over --quiet and VBIAS_QUIET
    if getattr(args, "debug", False):
        set_quiet_mode(False)
        log("Debug mode enabled. Verbose logging is active.")
    elif getattr(args, "quiet", False):
        set_quiet_mode(True)


def _report_error(err: VerificationBiasError) -> int:
    payload = {"error": {"category": err.category, "message": str(err)}}
    print(dumps(payload).decode("utf-8"), file=sys.stderr)
    return err.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point. Returns the process exit code."""
    load_dotenv()
    try:
        run = RunConfig.from_env()
    except VerificationBiasError as e:
        return _report_error(e)

    args = build_parser(run).parse_args(argv)
    _configure_logging(args)

    try:
        if args.command == "table":
            table = cross_table(_load(args))
            text = render_table(table, args.output_format, not args.verified_only, not args.no_total)
            write_output(text, args.output)
        elif args.command == "simulate":
            run_simulate(args)
        elif args.command == "compare":
            write_output(render_comparison(run_compare(args), args.output_format), args.output)
        else:
            write_output(render(run_estimator(args), args.output_format), args.output)
    except VerificationBiasError as e:
        return _report_error(e)
    except OSError as e:
        payload = {"error": {"category": "io", "message": str(e)}}
        print(dumps(payload).decode("utf-8"), file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
