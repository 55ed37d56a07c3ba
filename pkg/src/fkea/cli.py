"""Command-line interface: ``fkea score|exact|modes|sweep|gen``.

Exit codes: 0 ok, 2 usage, 3 data/format, 4 numeric, 5 capacity.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import check_alpha
from .entropy import (
    DEFAULT_ALPHAS,
    alpha_norm_score,
    format_alpha,
    proxy_spectrum,
    spectrum_error,
    theorem_bound,
    vendi_from_spectrum,
)
from .estimator import FKEA, ExactKernelEntropy
from .exceptions import FKEAError, InputError
from .io import (
    DEFAULT_BATCH_SIZE,
    MixtureSpec,
    embedding_shape,
    gen_mixture,
    iter_embedding_batches,
    read_embeddings,
    sample_rows,
    write_embeddings,
    write_labels,
    write_report,
)
from .kernel import DEFAULT_MAX_SAMPLES, exact_spectrum, median_heuristic
from .rff import ProxyCovariance, sample_fourier_basis

DELTA = 0.05
HEURISTIC_SUBSAMPLE = 1000


def _alpha_list(text: str) -> list[float]:
    try:
        return [check_alpha(a.strip(), allow_below_one=False) for a in text.split(",") if a.strip()]
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def _even_dim(text: str) -> int:
    value = int(text)
    if value < 2 or value % 2:
        raise argparse.ArgumentTypeError(f"--rff-dim must be even and >= 2, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not (np.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _add_sigma(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma", type=_positive_float, help="Gaussian kernel bandwidth")
    g.add_argument(
        "--sigma-heuristic",
        choices=["median"],
        help="set sigma to the median pairwise distance of a 1000-row subsample",
    )


def _add_fourier(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rff-dim", type=_even_dim, default=16000, help="Fourier feature dimension 2r (default 16000)")
    p.add_argument("--seed", type=int, default=0, help="seed for the Fourier frequencies")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $FKEA_THREADS or 1)")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", type=Path, help="report path")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--include-timings", action="store_true", help="store wall-clock timings in the JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fkea", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fkea {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="FKEA VENDI/RKE scores in one streaming pass")
    p.add_argument("input", type=Path)
    _add_sigma(p)
    _add_fourier(p)
    p.add_argument("--alphas", type=_alpha_list, default=list(DEFAULT_ALPHAS), help="e.g. 1,1.5,2,inf")
    p.add_argument("--checkpoint", type=Path, help="save the accumulator here after the pass")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint, skipping rows already seen")
    _add_output(p)

    p = sub.add_parser("exact", help="exact Gram-matrix scores (O(n^2) memory)")
    p.add_argument("input", type=Path)
    _add_sigma(p)
    p.add_argument("--alphas", type=_alpha_list, default=list(DEFAULT_ALPHAS))
    p.add_argument("--max-samples", type=int, default=DEFAULT_MAX_SAMPLES, help="sample cap for exact paths")
    _add_output(p)

    p = sub.add_parser("modes", help="top eigenvector modes and their highest-scoring samples")
    p.add_argument("input", type=Path)
    _add_sigma(p)
    _add_fourier(p)
    p.add_argument("--top-t", type=int, default=10, help="number of modes")
    p.add_argument("--top-k", type=int, default=25, help="samples listed per mode")
    p.add_argument("--rank-by", choices=["score", "abs"], default="score")
    _add_output(p)

    p = sub.add_parser("sweep", help="scores and errors versus r or versus cluster count")
    p.add_argument("input", type=Path, nargs="?", help="embeddings for an r sweep")
    _add_sigma(p)
    p.add_argument("--r-list", type=_int_list, help="frequency counts r to sweep over input")
    p.add_argument("--seeds", type=int, default=10, help="basis seeds per r")
    p.add_argument("--class-list", type=_int_list, help="cluster counts t for a synthetic mixture sweep")
    p.add_argument("--rff-dim", type=_even_dim, default=4000, help="2r for class sweeps")
    p.add_argument("--seed", type=int, default=0, help="basis seed for class sweeps, first seed for r sweeps")
    p.add_argument("--n-per-cluster", type=int, default=200)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--separation", type=_positive_float, default=50.0)
    p.add_argument("--std", type=_positive_float, default=1.0)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--alphas", type=_alpha_list, default=list(DEFAULT_ALPHAS))
    p.add_argument("--max-samples", type=int, default=DEFAULT_MAX_SAMPLES)
    p.add_argument("--output", "-o", type=Path, help="CSV path (default stdout)")

    p = sub.add_parser("gen", help="write a synthetic Gaussian mixture and its labels")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--n-per-cluster", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--separation", type=_positive_float, required=True)
    p.add_argument("--std", type=_positive_float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    p.add_argument("--output", "-o", type=Path, required=True)
    p.add_argument("--labels", type=Path, help="labels CSV (default: <output>.labels.csv)")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("FKEA_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"FKEA_THREADS must be an integer, got {env!r}") from None
    return 1


def _resolve_sigma(args) -> tuple[float, str]:
    if args.sigma is not None:
        return args.sigma, "user"
    sub = sample_rows(args.input, HEURISTIC_SUBSAMPLE, seed=0)
    return median_heuristic(sub, max_samples=HEURISTIC_SUBSAMPLE), "median-heuristic"


def _emit(report, args) -> None:
    if args.output is not None:
        write_report(report, args.output, args.format, include_timings=args.include_timings)


def _print_scores(report, bound: float | None, timings: dict) -> None:
    print(f"method: {report.method}")
    print(f"n: {report.n}")
    print(f"d: {report.d}")
    print(f"sigma: {report.sigma!r} ({report.sigma_source})")
    if report.rff_dim is not None:
        print(f"rff_dim: {report.rff_dim}  seed: {report.seed}")
    for alpha, score in report.scores.items():
        print(f"vendi[{alpha}]: {score:.10g}")
    print(f"rke: {report.rke:.10g}")
    if bound is not None:
        print(f"bound (delta={DELTA}): {bound:.6g}")
    for w in report.warnings:
        print(f"warning: {w}")
    print("timings: " + " ".join(f"{k}={v:.3f}s" for k, v in timings.items()))


def cmd_score(args) -> int:
    t0 = time.perf_counter()
    sigma, source = _resolve_sigma(args)
    est = FKEA(sigma, rff_dim=args.rff_dim, random_state=args.seed, batch_size=args.batch_size, n_jobs=_threads(args))

    skip = 0
    if args.resume:
        if args.checkpoint is None or not args.checkpoint.exists():
            raise InputError("--resume needs an existing --checkpoint file")
        _, d = embedding_shape(args.input)
        est.basis_ = sample_fourier_basis(d, args.rff_dim // 2, sigma, args.seed)
        est.covariance_ = ProxyCovariance.load(args.checkpoint)
        est.covariance_._check_basis(est.basis_)
        est.n_features_in_ = d
        est.n_samples_seen_ = skip = est.covariance_.samples_seen

    batches = iter_embedding_batches(args.input, args.batch_size)
    if skip:
        batches = _skip_rows(batches, skip)
    batches = iter(batches)
    first = next(batches, None)
    if first is not None:
        est.partial_fit_batches(itertools.chain([first], batches))
    elif not skip:
        raise InputError(f"{args.input}: no samples")
    t1 = time.perf_counter()
    if args.checkpoint is not None:
        est.covariance_.save(args.checkpoint)

    report = est.report(args.alphas, delta=DELTA, sigma_source=source)
    t2 = time.perf_counter()
    report.timings = {"accumulate": t1 - t0, "scores": t2 - t1, "total": t2 - t0}
    _emit(report, args)
    _print_scores(report, report.bound, report.timings)
    return 0


def _skip_rows(batches, skip: int):
    for batch in batches:
        if skip >= batch.shape[0]:
            skip -= batch.shape[0]
            continue
        yield batch[skip:]
        skip = 0


def cmd_exact(args) -> int:
    t0 = time.perf_counter()
    sigma, source = _resolve_sigma(args)
    X = read_embeddings(args.input)
    est = ExactKernelEntropy(sigma, max_samples=args.max_samples).fit(X)
    report = est.report(args.alphas, sigma_source=source)
    report.timings = {"total": time.perf_counter() - t0}
    _emit(report, args)
    _print_scores(report, None, report.timings)
    return 0


def cmd_modes(args) -> int:
    t0 = time.perf_counter()
    sigma, source = _resolve_sigma(args)
    est = FKEA(
        sigma,
        rff_dim=args.rff_dim,
        random_state=args.seed,
        n_modes=args.top_t,
        batch_size=args.batch_size,
        n_jobs=_threads(args),
    )
    est.partial_fit_batches(iter_embedding_batches(args.input, args.batch_size))
    t1 = time.perf_counter()
    report = est.rank(iter_embedding_batches(args.input, args.batch_size), args.top_k, by_abs=args.rank_by == "abs")
    t2 = time.perf_counter()
    report.provenance["sigma_source"] = source
    report.timings = {"accumulate": t1 - t0, "rank": t2 - t1, "total": t2 - t0}
    _emit(report, args)
    print(f"n: {report.n}  modes: {len(report.modes)}  top_k: {report.k}  rank_by: {report.rank_by}")
    for m in report.modes:
        head = ", ".join(str(i) for i in m.sample_indices[:10])
        print(f"mode {m.index}: eigenvalue={m.eigenvalue:.6g} top=[{head}{', ...' if report.k > 10 else ''}]")
    print("timings: " + " ".join(f"{k}={v:.3f}s" for k, v in report.timings.items()))
    return 0


SWEEP_FIELDS = [
    "sweep",
    "parameter",
    "seed",
    "n",
    "alpha",
    "score",
    "exact_score",
    "alpha_norm_gap",
    "spectrum_error",
    "bound",
]


def _sweep_rows(kind, parameter, seed, X, basis, exact, alphas):
    approx = proxy_spectrum(basis, X)
    err = spectrum_error(exact, approx)
    bound = theorem_bound(X.shape[0], basis.r, DELTA)
    for a in alphas:
        score = vendi_from_spectrum(approx, a)
        ref = vendi_from_spectrum(exact, a)
        gap = abs(alpha_norm_score(score, a) - alpha_norm_score(ref, a))
        yield {
            "sweep": kind,
            "parameter": parameter,
            "seed": seed,
            "n": X.shape[0],
            "alpha": format_alpha(a),
            "score": repr(score),
            "exact_score": repr(ref),
            "alpha_norm_gap": repr(gap),
            "spectrum_error": repr(err),
            "bound": repr(bound),
        }


def cmd_sweep(args) -> int:
    if (args.r_list is None) == (args.class_list is None):
        raise InputError("give exactly one of --r-list or --class-list")
    rows = []
    if args.r_list is not None:
        if args.input is None:
            raise InputError("an r sweep needs an input file")
        sigma, _ = _resolve_sigma(args)
        X = read_embeddings(args.input)
        exact = exact_spectrum(X, sigma, max_samples=args.max_samples)
        for r in args.r_list:
            for seed in range(args.seed, args.seed + args.seeds):
                basis = sample_fourier_basis(X.shape[1], r, sigma, seed)
                rows.extend(_sweep_rows("r", r, seed, X, basis, exact, args.alphas))
    else:
        if args.sigma is None:
            raise InputError("class sweeps need an explicit --sigma")
        sigma = args.sigma
        for t in args.class_list:
            spec = MixtureSpec(t, args.n_per_cluster, args.dim, args.separation, args.std, args.data_seed)
            X, _ = gen_mixture(spec)
            exact = exact_spectrum(X, sigma, max_samples=args.max_samples)
            basis = sample_fourier_basis(X.shape[1], args.rff_dim // 2, sigma, args.seed)
            rows.extend(_sweep_rows("classes", t, args.seed, X, basis, exact, args.alphas))

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.output:
            out.close()
    return 0


def cmd_gen(args) -> int:
    spec = MixtureSpec(args.clusters, args.n_per_cluster, args.dim, args.separation, args.std, args.seed)
    X, labels = gen_mixture(spec)
    write_embeddings(args.output, X, dtype=args.dtype)
    labels_path = args.labels or args.output.with_name(args.output.name + ".labels.csv")
    write_labels(labels_path, labels)
    print(f"wrote {X.shape[0]} x {X.shape[1]} embeddings to {args.output} and labels to {labels_path}")
    return 0


COMMANDS = {"score": cmd_score, "exact": cmd_exact, "modes": cmd_modes, "sweep": cmd_sweep, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FKEAError as exc:
        print(f"fkea {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fkea {args.command}: I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
