"""Command-line interface wiring ingestion, estimation, and simulations.

Exit codes: 0 success, 1 data error (missing or malformed input, impossible
fit), 2 usage error (bad flag or flag combination, rejected before any work
starts). The root seed defaults to the fixed constant 1729 so bare
invocations are reproducible; every report embeds the config needed to
reproduce its payload byte for byte. Progress lines go to standard error
only; standard output carries the report when ``-o`` is omitted.

Randomness layout: sample draws use stream 0 of the root seed and bootstrap
resampling uses stream 1, so adding CIs never disturbs the simulated samples.
Worker threads (``--threads``, default from ``BESTOFN_THREADS``) change
wall-clock time but never results.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import Sequence

from .distributions import (
    KDE_PRESETS,
    KdeSpec,
    RngStream,
    fit_kde,
    load_distribution,
    save_distribution,
    scott_bandwidth,
)
from .estimators import (
    CurvePoint,
    EstimatorKind,
    ExpectedMaxCurve,
    budget_is_bounded,
    expected_max_curve,
    ks_lower_bound,
)
from .experiments import coverage as run_coverage
from .experiments import curves as run_curves
from .experiments import failure_scan as run_failure_scan
from .experiments import probe as run_probe
from .io_formats import (
    RunsFileError,
    emit_plot,
    make_envelope,
    read_report,
    read_runs,
    report_csv_text,
    report_json_text,
    write_report,
)
from .resampling import BootstrapConfig, percentile_bootstrap_ci

DEFAULT_SEED = 1729
THREADS_ENV = "BESTOFN_THREADS"

_ESTIMATOR_CHOICES = ("meanmax", "meanmax-prefix", "unbiased")


class UsageError(Exception):
    """A flag-level mistake, reported with exit status 2 before any work."""


def _positive(value: int, flag: str) -> int:
    if value < 1:
        raise UsageError(f"{flag} must be a positive integer, got {value}")
    return value


def _confidence(value: float, flag: str = "--confidence") -> float:
    if not 0.0 < value < 1.0:
        raise UsageError(f"{flag} must lie strictly between 0 and 1, got {value}")
    return value


def _resolve_threads(flag_value: int | None) -> int | None:
    if flag_value is not None:
        return _positive(flag_value, "--threads")
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return _positive(value, THREADS_ENV)


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_dist_flag(raw: str) -> tuple[str, str]:
    """Split NAME=PATH; a bare path is named after its file stem."""
    if "=" in raw:
        name, path = raw.split("=", 1)
        if not name or not path:
            raise UsageError(f"--dist expects NAME=PATH or a bare path, got {raw!r}")
        return name, path
    stem = os.path.splitext(os.path.basename(raw))[0]
    return stem, raw


def _deliver(envelope, args) -> int:
    if args.output is not None:
        write_report(envelope, args.output, args.format)
    else:
        text = report_json_text(envelope) if args.format == "json" else report_csv_text(envelope)
        sys.stdout.write(text)
    if getattr(args, "svg", None):
        emit_plot(envelope, args.svg)
    return 0


def _add_report_flags(p: argparse.ArgumentParser, svg: bool = True) -> None:
    p.add_argument("-o", "--output", metavar="PATH", default=None,
                   help="write the report to PATH (default: standard output)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="report format (default: json)")
    if svg:
        p.add_argument("--svg", metavar="PATH", default=None,
                       help="also write an SVG chart with a sidecar CSV (default: no chart)")


def _add_seed_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"root seed for all randomness (default: {DEFAULT_SEED})")


def _add_threads_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None, metavar="K",
                   help=f"worker threads; results never depend on this "
                        f"(default: ${THREADS_ENV} if set, else 1)")


def cmd_curve(args) -> int:
    names = args.estimator or ["unbiased"]
    kinds = []
    for name in names:
        kind = EstimatorKind.parse(name)
        if kind not in kinds:
            kinds.append(kind)
    if args.n_max is not None:
        _positive(args.n_max, "--n-max")
    _positive(args.resamples, "--resamples")
    _confidence(args.confidence)

    sample = read_runs(args.runs)
    n_max = args.n_max if args.n_max is not None else sample.size
    for kind in kinds:
        if budget_is_bounded(kind) and n_max > sample.size:
            raise UsageError(
                f"--n-max {n_max} exceeds the {sample.size} scores in {args.runs} "
                f"for estimator {kind}"
            )
    if n_max > sample.size:
        print(
            f"bestofn: warning: --n-max {n_max} extrapolates past the sample size "
            f"{sample.size}; meanmax estimates saturate at the sample maximum",
            file=sys.stderr,
        )

    payload = []
    for k, kind in enumerate(kinds):
        curve = expected_max_curve(sample, kind, n_max)
        if args.ci:
            base = BootstrapConfig(
                rng=RngStream(args.seed, 1), resamples=args.resamples, confidence=args.confidence
            )
            points = tuple(
                CurvePoint(
                    n=p.n,
                    estimate=p.estimate,
                    ci=(lambda ci: (ci.lo, ci.hi))(
                        percentile_bootstrap_ci(sample, kind, p.n, replace(base, rng=base.rng.child(k, p.n)))
                    ),
                )
                for p in curve.points
            )
            curve = ExpectedMaxCurve(points=points, estimator=kind, sample_size=curve.sample_size)
        payload.append(curve)

    config = {
        "command": "curve",
        "runs": args.runs,
        "estimators": [str(k) for k in kinds],
        "n_max": n_max,
        "ci": bool(args.ci),
        "resamples": args.resamples if args.ci else None,
        "confidence": args.confidence if args.ci else None,
        "seed": args.seed,
    }
    return _deliver(make_envelope("curve", tuple(payload), config), args)


def cmd_fit(args) -> int:
    preset = KDE_PRESETS[args.preset] if args.preset else None
    bins = args.bins if args.bins is not None else (preset.bins if preset else 511)
    if bins < 2:
        raise UsageError(f"--bins must be at least 2, got {bins}")

    raw_bw = args.bandwidth if args.bandwidth is not None else (
        preset.bandwidth if preset else "scott"
    )
    if raw_bw == "scott":
        bandwidth: float | str = "scott"
    else:
        try:
            bandwidth = float(raw_bw)
        except ValueError:
            raise UsageError(
                f"--bandwidth must be a positive number or 'scott', got {raw_bw!r}"
            ) from None
        if not bandwidth > 0:
            raise UsageError(f"--bandwidth must be positive, got {bandwidth}")
    if args.support_lo is not None and args.support_hi is not None:
        if not args.support_lo < args.support_hi:
            raise UsageError(
                f"--support-lo ({args.support_lo}) must be below --support-hi ({args.support_hi})"
            )

    sample = read_runs(args.runs)
    # Resolve the numeric bandwidth first: default support edges sit three
    # bandwidths beyond the observed score range.
    h = scott_bandwidth(sample) if bandwidth == "scott" else bandwidth
    if h == 0.0:
        raise ValueError(
            f"scores in {args.runs} are constant; Scott's rule gives bandwidth 0, "
            f"pass an explicit --bandwidth"
        )
    if args.support_lo is not None:
        lo = args.support_lo
    elif preset:
        lo = preset.support_lo
    else:
        lo = sample.min - 3.0 * h
    if args.support_hi is not None:
        hi = args.support_hi
    elif preset:
        hi = preset.support_hi
    else:
        hi = sample.max + 3.0 * h
    if not lo < hi:
        raise UsageError(f"--support-lo ({lo}) must be below --support-hi ({hi})")

    dist = fit_kde(sample, KdeSpec(bandwidth=bandwidth, support_lo=lo, support_hi=hi, bins=bins))
    if args.output is not None:
        save_distribution(dist, args.output)
    else:
        from .io_formats import canonical_json

        sys.stdout.write(canonical_json(dist.to_dict()))
    return 0


def cmd_probe(args) -> int:
    _positive(args.B, "--B")
    _positive(args.samples, "--samples")
    kind = EstimatorKind.parse(args.estimator)
    n_max = args.n_max if args.n_max is not None else args.B
    _positive(n_max, "--n-max")
    if budget_is_bounded(kind) and n_max > args.B:
        raise UsageError(f"--n-max {n_max} exceeds --B {args.B} for estimator {kind}")
    threads = _resolve_threads(args.threads)

    dist_id, path = _parse_dist_flag(args.dist)
    dist = load_distribution(path)
    report = run_probe(
        dist, args.B, n_max, args.samples, kind, RngStream(args.seed),
        threads=threads, dist_id=dist_id, progress=_progress,
    )
    config = {
        "command": "probe",
        "dist": path,
        "dist_id": dist_id,
        "B": args.B,
        "n_max": n_max,
        "samples": args.samples,
        "estimator": str(kind),
        "seed": args.seed,
    }
    return _deliver(make_envelope("probe", report, config), args)


def cmd_coverage(args) -> int:
    _positive(args.B, "--B")
    _positive(args.M, "--M")
    _positive(args.resamples, "--resamples")
    _confidence(args.confidence)
    kind = EstimatorKind.parse(args.estimator)
    n_max = args.n_max if args.n_max is not None else min(20, args.B)
    _positive(n_max, "--n-max")
    if budget_is_bounded(kind) and n_max > args.B:
        raise UsageError(f"--n-max {n_max} exceeds --B {args.B} for estimator {kind}")
    threads = _resolve_threads(args.threads)

    dist_id, path = _parse_dist_flag(args.dist)
    dist = load_distribution(path)
    boot = BootstrapConfig(
        rng=RngStream(args.seed, 1), resamples=args.resamples, confidence=args.confidence
    )
    report = run_coverage(
        dist, args.B, n_max, args.M, boot, kind, RngStream(args.seed),
        threads=threads, dist_id=dist_id, progress=_progress,
    )
    config = {
        "command": "coverage",
        "dist": path,
        "dist_id": dist_id,
        "B": args.B,
        "n_max": n_max,
        "M": args.M,
        "resamples": args.resamples,
        "confidence": args.confidence,
        "estimator": str(kind),
        "seed": args.seed,
    }
    return _deliver(make_envelope("coverage", report, config), args)


def cmd_curves_sim(args) -> int:
    _positive(args.B, "--B")
    _positive(args.samples, "--samples")
    kind = EstimatorKind.parse(args.estimator)
    threads = _resolve_threads(args.threads)

    named: dict[str, str] = {}
    for raw in args.dist:
        name, path = _parse_dist_flag(raw)
        if name in named:
            raise UsageError(f"--dist name {name!r} given twice; disambiguate with NAME=PATH")
        named[name] = path
    dists = {name: load_distribution(path) for name, path in named.items()}
    report = run_curves(
        dists, args.B, args.samples, kind, RngStream(args.seed),
        threads=threads, progress=_progress,
    )
    config = {
        "command": "curves-sim",
        "dists": named,
        "B": args.B,
        "samples": args.samples,
        "estimator": str(kind),
        "seed": args.seed,
    }
    return _deliver(make_envelope("curves", report, config), args)


def cmd_failure_scan(args) -> int:
    envelope = read_report(args.report)
    if envelope.payload_kind != "curves":
        raise UsageError(
            f"--report must point to a curves-sim JSON report, got {envelope.payload_kind!r}"
        )
    report = envelope.payload
    names = [m.name for m in report.models]
    if args.model_a is None and args.model_b is None and len(names) == 2:
        model_a, model_b = names
    elif args.model_a is not None and args.model_b is not None:
        model_a, model_b = args.model_a, args.model_b
    else:
        raise UsageError(
            f"report contains models {', '.join(names)}; pass both --model-a and --model-b"
        )
    for flag, name in (("--model-a", model_a), ("--model-b", model_b)):
        if name not in names:
            raise UsageError(f"{flag} {name!r} is not in the report (models: {', '.join(names)})")

    inversions = run_failure_scan(report, model_a, model_b)
    payload = {
        "model_a": model_a,
        "model_b": model_b,
        "B": report.B,
        "estimator": str(report.kind),
        "inversions": [
            {"n": inv.n, "true_leader": inv.true_leader, "estimated_leader": inv.estimated_leader}
            for inv in inversions
        ],
    }
    config = {
        "command": "failure-scan",
        "report": args.report,
        "model_a": model_a,
        "model_b": model_b,
    }
    return _deliver(make_envelope("failure_scan", payload, config), args)


def cmd_ks_bound(args) -> int:
    if not 0.0 <= args.cdf_at_max <= 1.0:
        raise UsageError(f"--cdf-at-max must lie in [0, 1], got {args.cdf_at_max}")
    _positive(args.n_max, "--n-max")

    sample = read_runs(args.runs)
    rows = [
        {"n": n, "bound": ks_lower_bound(sample, args.cdf_at_max, n)}
        for n in range(1, args.n_max + 1)
    ]
    payload = {"cdf_at_max": args.cdf_at_max, "B": sample.size, "rows": rows}
    config = {
        "command": "ks-bound",
        "runs": args.runs,
        "cdf_at_max": args.cdf_at_max,
        "n_max": args.n_max,
    }
    return _deliver(make_envelope("ks_bound", payload, config), args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bestofn",
        description="Expected-maximum-at-budget curves, estimator diagnostics, "
                    "and simulation batteries for hyperparameter search reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("curve", help="estimate an expected-max curve from a runs file")
    p.add_argument("--runs", required=True, metavar="CSV",
                   help="runs file with a score column and optional run_id column")
    p.add_argument("--estimator", action="append", choices=_ESTIMATOR_CHOICES, metavar="KIND",
                   help="estimator kind, repeatable: meanmax, meanmax-prefix, or unbiased "
                        "(default: unbiased)")
    p.add_argument("--n-max", type=int, default=None,
                   help="largest budget n (default: the number of scores B)")
    p.add_argument("--ci", action="store_true",
                   help="attach percentile-bootstrap CIs to every point (default: off)")
    p.add_argument("--resamples", type=int, default=1000,
                   help="bootstrap resamples per point when --ci is set (default: 1000)")
    p.add_argument("--confidence", type=float, default=0.95,
                   help="bootstrap CI confidence level (default: 0.95)")
    _add_seed_flag(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("fit", help="fit a discretized Gaussian KDE to a runs file")
    p.add_argument("--runs", required=True, metavar="CSV",
                   help="runs file with a score column")
    p.add_argument("--preset", choices=sorted(KDE_PRESETS), default=None,
                   help="published KDE hyperparameters: bandwidth, support, and bins only "
                        "(default: none)")
    p.add_argument("--bandwidth", default=None, metavar="H",
                   help="kernel bandwidth, a positive number or 'scott' (default: scott)")
    p.add_argument("--support-lo", type=float, default=None, metavar="X",
                   help="support lower edge (default: min score minus 3 bandwidths)")
    p.add_argument("--support-hi", type=float, default=None, metavar="X",
                   help="support upper edge (default: max score plus 3 bandwidths)")
    p.add_argument("--bins", type=int, default=None,
                   help="number of equal-width bins (default: 511)")
    p.add_argument("-o", "--output", metavar="PATH", default=None,
                   help="write the distribution JSON to PATH (default: standard output)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("probe", help="false-conclusion probing: underestimate proportions per n")
    p.add_argument("--dist", required=True, metavar="[NAME=]PATH",
                   help="ground-truth distribution JSON")
    p.add_argument("--B", type=int, default=50, help="size of each simulated sample (default: 50)")
    p.add_argument("--n-max", type=int, default=None, help="largest budget n (default: B)")
    p.add_argument("--samples", type=int, default=1000,
                   help="simulated samples per budget (default: 1000)")
    p.add_argument("--estimator", choices=_ESTIMATOR_CHOICES, default="meanmax",
                   help="estimator kind (default: meanmax)")
    _add_seed_flag(p)
    _add_threads_flag(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("coverage", help="bootstrap CI coverage probabilities per n")
    p.add_argument("--dist", required=True, metavar="[NAME=]PATH",
                   help="ground-truth distribution JSON")
    p.add_argument("--B", type=int, default=50, help="size of each simulated sample (default: 50)")
    p.add_argument("--n-max", type=int, default=None,
                   help="largest budget n (default: 20, capped at B)")
    p.add_argument("--M", type=int, default=300,
                   help="simulated samples per budget (default: 300)")
    p.add_argument("--resamples", type=int, default=1000,
                   help="bootstrap resamples per CI (default: 1000)")
    p.add_argument("--confidence", type=float, default=0.95,
                   help="nominal CI level under test (default: 0.95)")
    p.add_argument("--estimator", choices=_ESTIMATOR_CHOICES, default="meanmax",
                   help="estimator kind (default: meanmax)")
    _add_seed_flag(p)
    _add_threads_flag(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("curves-sim", help="averaged estimated curves vs. true curves per model")
    p.add_argument("--dist", action="append", required=True, metavar="[NAME=]PATH",
                   help="ground-truth distribution JSON, repeatable; bare paths are "
                        "named after the file stem")
    p.add_argument("--B", type=int, default=50, help="size of each simulated sample (default: 50)")
    p.add_argument("--samples", type=int, default=1000,
                   help="simulated samples averaged per model (default: 1000)")
    p.add_argument("--estimator", choices=_ESTIMATOR_CHOICES, default="meanmax",
                   help="estimator kind (default: meanmax)")
    _add_seed_flag(p)
    _add_threads_flag(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_curves_sim)

    p = sub.add_parser("failure-scan", help="budgets where averaged estimates invert the true leader")
    p.add_argument("--report", required=True, metavar="JSON",
                   help="curves-sim JSON report to scan")
    p.add_argument("--model-a", default=None, metavar="NAME",
                   help="first model (default: taken from a two-model report)")
    p.add_argument("--model-b", default=None, metavar="NAME",
                   help="second model (default: taken from a two-model report)")
    _add_report_flags(p, svg=False)
    p.set_defaults(func=cmd_failure_scan)

    p = sub.add_parser("ks-bound", help="lower bound on the KS error of the powered ECDF")
    p.add_argument("--runs", required=True, metavar="CSV",
                   help="runs file the bound is about")
    p.add_argument("--cdf-at-max", type=float, required=True, metavar="F",
                   help="true CDF value at the largest observed score, in [0, 1]")
    p.add_argument("--n-max", type=int, default=10, help="largest power n (default: 10)")
    _add_report_flags(p)
    p.set_defaults(func=cmd_ks_bound)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"bestofn: error: {err}", file=sys.stderr)
        return 2
    except RunsFileError as err:
        print(f"bestofn: error: {err}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, ArithmeticError) as err:
        print(f"bestofn: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
