"""Command line driver: sense, recover, eval, bench.

    bigcs sense IMAGE --mr 0.25 --seed 42 --out shot.bund
    bigcs recover shot.bund --out back.pgm --trace-dir traces/
    bigcs eval original.pgm back.pgm --csv scores.csv
    bigcs bench --images a.pgm b.pgm --mrs 0.1 0.2 0.3 --seeds 1 2 3 \
        --out bench.csv

Exit codes: 0 success, 2 bad input or parameters, 3 solver failure,
4 malformed file.  The environment variable BIGCS_THREADS caps the FFT
worker threads (default 1).

Each subcommand is also available as a plain function (cmd_sense,
cmd_recover, cmd_eval, cmd_bench) taking the same values as keywords, so
scripts can drive the pipeline without string argv.
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass

import numpy as np

from .bundle import MeasurementBundle, read_bundle, write_bundle
from .errors import BigcsError, DivergenceError, DomainError, FormatError
from .images import read_image, to_square_pow2, write_image
from .linop import SrmSpec, compose, srm_op
from .metrics import psnr, ssim
from .solver import LassoProblem, SolverConfig, default_lambda, solve_lasso
from .tssp import TsspConfig, recover_tssp
from .wavelet import WaveletLayout, default_levels, wavelet_synthesis_op


@dataclass
class RecoveryReport:
    """What recovery produced: the image, plus effort accounting."""

    image: np.ndarray
    coefficients: np.ndarray
    method: str
    lam: float
    iterations: int
    seconds: float
    storage_scalars: int
    stages: list
    traces: list


def sense_array(img, mr, seed, levels=None, lambda_mode="auto",
                lambda_value=0.01, weighting="tssp", p_percent=10.0,
                epsilon_mode="relative", epsilon_value=1e-3,
                dynamic_range=255.0):
    """Measure a square power-of-two image; returns the bundle.

    m = round(mr * N^2), clamped into 1..N^2; mr must lie in (0, 1].
    The pixel mean rides along in the bundle: the sensing operator drops
    the constant component whenever the row subset misses the transform's
    first row, so recovery re-centers against the stored mean.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise DomainError("sensing expects a square image")
    size = img.shape[0]
    if size < 2 or size & (size - 1):
        raise DomainError("image side must be a power of two >= 2")
    if not 0 < mr <= 1:
        raise DomainError("measurement rate must lie in (0, 1]")
    n = size * size
    m = min(n, max(1, round(mr * n)))
    if levels is None:
        levels = default_levels(size)
    phi = srm_op(SrmSpec(n=n, m=m, seed=seed))
    y = phi.forward(img.ravel(order="F"))
    return MeasurementBundle(
        size=size, seed=seed, levels=levels, y=y,
        lambda_mode=lambda_mode, lambda_value=lambda_value,
        weighting=weighting, p_percent=p_percent,
        epsilon_mode=epsilon_mode, epsilon_value=epsilon_value,
        dynamic_range=dynamic_range, mean=float(img.mean()),
    )


def recover_bundle(bundle, levels=None, lambda_fixed=None, p_percent=None,
                   epsilon=None, weighting=None, warm_start=None,
                   tau_safety=1.9, beta=0.5, gamma=0.1, tol=1e-6,
                   max_iter=10000):
    """Reconstruct the image a bundle was sensed from.

    Parameters default to what the bundle recorded; pass a value to
    override.  Returns a RecoveryReport; the image is clamped to
    [0, dynamic range] but not quantized.

    The solve runs against re-centered measurements y - Phi(mean * 1):
    the flat component of the image is invisible to the operator when the
    subset misses the transform's first row, so it travels as the stored
    mean instead and is added back after synthesis.
    """
    size = bundle.size
    layout = WaveletLayout(size, bundle.levels if levels is None else levels)
    phi = srm_op(SrmSpec(n=layout.n, m=bundle.m, seed=bundle.seed))
    method = bundle.weighting if weighting is None else weighting
    if method not in ("tssp", "none"):
        raise DomainError(f"unknown weighting {method!r}")
    y = bundle.y
    if bundle.mean != 0.0:
        y = y - phi.forward(np.full(layout.n, bundle.mean))

    if lambda_fixed is not None:
        lam_mode, lam_value = "fixed", float(lambda_fixed)
    else:
        lam_mode, lam_value = bundle.lambda_mode, bundle.lambda_value
    if epsilon is not None:
        eps_mode, eps_value = "absolute", float(epsilon)
    else:
        eps_mode, eps_value = bundle.epsilon_mode, bundle.epsilon_value

    start = time.perf_counter()
    if method == "tssp":
        cfg = TsspConfig(
            p_percent=bundle.p_percent if p_percent is None else p_percent,
            epsilon=eps_value if eps_mode == "absolute" else None,
            epsilon_scale=eps_value if eps_mode == "relative" else 1e-3,
            lambda_fixed=lam_value if lam_mode == "fixed" else None,
            lambda_factor=lam_value if lam_mode == "auto" else 0.01,
            warm_start=True if warm_start is None else warm_start,
            tau_safety=tau_safety, beta=beta, gamma=gamma,
            tol=tol, max_iter=max_iter,
        )
        result = recover_tssp(y, phi, layout, cfg)
        coeffs = result.x
        stages = result.stages
        traces = [rec.trace for rec in stages]
        iterations = sum(rec.iterations for rec in stages)
        lam = stages[-1].lam
        synth = wavelet_synthesis_op(layout)
        storage = (phi.storage_scalars + synth.storage_scalars
                   + layout.n + layout.n)  # + diagonal + held weights
    else:
        synth = wavelet_synthesis_op(layout)
        A = compose([phi, synth])
        scfg = SolverConfig.for_operator(
            A, tau_safety=tau_safety, beta=beta, gamma=gamma,
            tol=tol, max_iter=max_iter,
        )
        if lam_mode == "fixed":
            lam = lam_value
        else:
            lam = default_lambda(A, y, lam_value)
        coeffs, trace = solve_lasso(LassoProblem(A, y, lam), scfg)
        stages = []
        traces = [trace]
        iterations = trace.iterations
        storage = A.storage_scalars
    seconds = time.perf_counter() - start

    synth = wavelet_synthesis_op(layout)
    flat = synth.forward(coeffs) + bundle.mean
    img = np.clip(flat.reshape((size, size), order="F"),
                  0.0, bundle.dynamic_range)
    return RecoveryReport(
        image=img, coefficients=coeffs, method=method, lam=lam,
        iterations=iterations, seconds=seconds, storage_scalars=storage,
        stages=stages, traces=traces,
    )


def cmd_sense(image, out, mr, seed=0, levels=None, lambda_fixed=None,
              p_percent=10.0, epsilon=None, no_weights=False,
              pad=False, crop=False):
    """Read an image, measure it, write the bundle.  Returns 0."""
    img, dynamic_range = read_image(image)
    img = to_square_pow2(img, pad=pad, crop=crop)
    bundle = sense_array(
        img, mr, seed,
        levels=levels,
        lambda_mode="fixed" if lambda_fixed is not None else "auto",
        lambda_value=lambda_fixed if lambda_fixed is not None else 0.01,
        weighting="none" if no_weights else "tssp",
        p_percent=p_percent,
        epsilon_mode="absolute" if epsilon is not None else "relative",
        epsilon_value=epsilon if epsilon is not None else 1e-3,
        dynamic_range=dynamic_range,
    )
    write_bundle(bundle, out)
    print(f"sensed {image}: N={bundle.size} m={bundle.m} "
          f"(rate {bundle.m / bundle.n:.4f}) seed={seed} -> {out}")
    return 0


def cmd_recover(bundle_path, out, trace_dir=None, levels=None,
                lambda_fixed=None, p_percent=None, epsilon=None,
                no_weights=False, no_warm_start=False, tau_safety=1.9,
                beta=0.5, gamma=0.1, tol=1e-6, max_iter=10000):
    """Recover a bundle to an image file.  Returns 0."""
    bundle = read_bundle(bundle_path)
    report = recover_bundle(
        bundle, levels=levels, lambda_fixed=lambda_fixed,
        p_percent=p_percent, epsilon=epsilon,
        weighting="none" if no_weights else None,
        warm_start=False if no_warm_start else None,
        tau_safety=tau_safety, beta=beta, gamma=gamma,
        tol=tol, max_iter=max_iter,
    )
    write_image(out, report.image, bundle.dynamic_range)
    if trace_dir is not None:
        _write_traces(trace_dir, bundle_path, report)
    print(f"recovered {bundle_path} [{report.method}]: "
          f"{report.iterations} iterations in {report.seconds:.2f}s -> {out}")
    return 0


def _write_traces(trace_dir, source, report):
    import pathlib

    d = pathlib.Path(trace_dir)
    d.mkdir(parents=True, exist_ok=True)
    stem = pathlib.Path(str(source)).stem
    if report.stages:
        rows = [["stage", "lambda", "inner_iterations", "final_objective",
                 "support_size"]]
        for rec in report.stages:
            rows.append([rec.stage, repr(rec.lam), rec.iterations,
                         repr(rec.final_objective), rec.support_size])
        with open(d / f"{stem}_stages.csv", "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        for rec in report.stages:
            rec.trace.write_csv(d / f"{stem}_{rec.stage}.csv")
    else:
        report.traces[0].write_csv(d / f"{stem}_solver.csv")


def cmd_eval(reference, reconstructed, dynamic_range=None, csv_path=None):
    """Print PSNR/SSIM of a reconstruction against its reference."""
    ref, ref_range = read_image(reference)
    rec, _ = read_image(reconstructed)
    rng = ref_range if dynamic_range is None else dynamic_range
    p = psnr(ref, rec, rng)
    s = ssim(ref, rec, rng)
    print(f"psnr={p:.4f} ssim={s:.6f}")
    if csv_path is not None:
        import os

        fresh = not os.path.exists(csv_path)
        with open(csv_path, "a", newline="") as fh:
            out = csv.writer(fh)
            if fresh:
                out.writerow(["reference", "reconstructed", "psnr", "ssim"])
            out.writerow([reference, reconstructed, f"{p:.6f}", f"{s:.8f}"])
    return 0


def cmd_bench(images, mrs, seeds, out, trace_dir=None, methods=("tssp", "none"),
              pad=False, crop=False, levels=None, lambda_fixed=None,
              p_percent=10.0, epsilon=None, tau_safety=1.9, beta=0.5,
              gamma=0.1, tol=1e-6, max_iter=10000):
    """Sweep images x rates x seeds x methods; write one CSV row per run.

    Timing covers recovery only.  iters_to_1e3 is the iteration at which
    the progress curve (F_k - F_final) / F_k of the run's final solve drops
    to 1e-3.  storage_scalars is the persistent operator state: m + 6n when
    weighting, m + 4n without.
    """
    import pathlib

    rows = []
    for image in images:
        img, dynamic_range = read_image(image)
        img = to_square_pow2(img, pad=pad, crop=crop)
        stem = pathlib.Path(str(image)).stem
        for mr in mrs:
            for seed in seeds:
                bundle = sense_array(
                    img, mr, seed, levels=levels,
                    lambda_mode="fixed" if lambda_fixed is not None else "auto",
                    lambda_value=lambda_fixed
                    if lambda_fixed is not None else 0.01,
                    p_percent=p_percent,
                    epsilon_mode="absolute"
                    if epsilon is not None else "relative",
                    epsilon_value=epsilon if epsilon is not None else 1e-3,
                    dynamic_range=dynamic_range,
                )
                for method in methods:
                    report = recover_bundle(
                        bundle, weighting=method, tau_safety=tau_safety,
                        beta=beta, gamma=gamma, tol=tol, max_iter=max_iter,
                    )
                    final = report.traces[-1]
                    curve = final.normalized_errors()
                    hits = np.nonzero(curve <= 1e-3)[0]
                    iters_to = int(hits[0]) if hits.size else -1
                    row = {
                        "image": stem,
                        "size": bundle.size,
                        "mr": mr,
                        "m": bundle.m,
                        "seed": seed,
                        "method": method,
                        "lambda": report.lam,
                        "psnr": psnr(img, report.image, dynamic_range),
                        "ssim": ssim(img, report.image, dynamic_range),
                        "iterations": report.iterations,
                        "iters_to_1e3": iters_to,
                        "seconds": report.seconds,
                        "storage_scalars": report.storage_scalars,
                    }
                    rows.append(row)
                    print(f"bench {stem} mr={mr} seed={seed} {method}: "
                          f"psnr={row['psnr']:.2f} ssim={row['ssim']:.4f} "
                          f"iters={row['iterations']} "
                          f"{row['seconds']:.2f}s")
                    if trace_dir is not None:
                        d = pathlib.Path(trace_dir)
                        d.mkdir(parents=True, exist_ok=True)
                        tag = f"{stem}_mr{mr}_s{seed}_{method}"
                        if report.stages:
                            rows_ = [["stage", "lambda", "inner_iterations",
                                      "final_objective", "support_size"]]
                            for rec in report.stages:
                                rows_.append([rec.stage, repr(rec.lam),
                                              rec.iterations,
                                              repr(rec.final_objective),
                                              rec.support_size])
                            with open(d / f"{tag}_stages.csv", "w",
                                      newline="") as fh:
                                csv.writer(fh).writerows(rows_)
                        final.write_csv(d / f"{tag}_final.csv")
    fields = list(rows[0].keys()) if rows else [
        "image", "size", "mr", "m", "seed", "method", "lambda", "psnr",
        "ssim", "iterations", "iters_to_1e3", "seconds", "storage_scalars"]
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows -> {out}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bigcs",
        description="Matrix-free compressive sensing of grayscale images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--tau-safety", type=float, default=1.9,
                       help="step = this / estimated largest eigenvalue")
        p.add_argument("--beta", type=float, default=0.5,
                       help="backtracking shrink factor")
        p.add_argument("--gamma", type=float, default=0.1,
                       help="sufficient decrease fraction")
        p.add_argument("--tol", type=float, default=1e-6,
                       help="stop when ||d|| <= tol * max(1, ||x||)")
        p.add_argument("--max-iter", type=int, default=10000)

    s = sub.add_parser("sense", help="measure an image into a bundle")
    s.add_argument("image")
    s.add_argument("--out", required=True)
    s.add_argument("--mr", type=float, required=True,
                   help="measurement rate m / N^2, in (0, 1]")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--levels", type=int, default=None)
    s.add_argument("--lambda", dest="lambda_fixed", type=float, default=None,
                   help="fix the penalty instead of the auto rule")
    s.add_argument("--p-percent", type=float, default=10.0)
    s.add_argument("--epsilon", type=float, default=None,
                   help="absolute pruning threshold")
    s.add_argument("--no-weights", action="store_true")
    s.add_argument("--pad", action="store_true")
    s.add_argument("--crop", action="store_true")

    r = sub.add_parser("recover", help="reconstruct an image from a bundle")
    r.add_argument("bundle")
    r.add_argument("--out", required=True)
    r.add_argument("--trace-dir", default=None)
    r.add_argument("--levels", type=int, default=None)
    r.add_argument("--lambda", dest="lambda_fixed", type=float, default=None)
    r.add_argument("--p-percent", type=float, default=None)
    r.add_argument("--epsilon", type=float, default=None)
    r.add_argument("--no-weights", action="store_true")
    r.add_argument("--no-warm-start", action="store_true")
    solver_flags(r)

    e = sub.add_parser("eval", help="PSNR/SSIM of a reconstruction")
    e.add_argument("reference")
    e.add_argument("reconstructed")
    e.add_argument("--dynamic-range", type=float, default=None)
    e.add_argument("--csv", dest="csv_path", default=None)

    b = sub.add_parser("bench", help="sweep rates and seeds, write a CSV")
    b.add_argument("--images", nargs="+", required=True)
    b.add_argument("--mrs", nargs="+", type=float, required=True)
    b.add_argument("--seeds", nargs="+", type=int, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--trace-dir", default=None)
    b.add_argument("--methods", nargs="+", default=["tssp", "none"],
                   choices=["tssp", "none"])
    b.add_argument("--levels", type=int, default=None)
    b.add_argument("--lambda", dest="lambda_fixed", type=float, default=None)
    b.add_argument("--p-percent", type=float, default=10.0)
    b.add_argument("--epsilon", type=float, default=None)
    b.add_argument("--pad", action="store_true")
    b.add_argument("--crop", action="store_true")
    solver_flags(b)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "sense":
            return cmd_sense(
                args.image, args.out, args.mr, seed=args.seed,
                levels=args.levels, lambda_fixed=args.lambda_fixed,
                p_percent=args.p_percent, epsilon=args.epsilon,
                no_weights=args.no_weights, pad=args.pad, crop=args.crop,
            )
        if args.command == "recover":
            return cmd_recover(
                args.bundle, args.out, trace_dir=args.trace_dir,
                levels=args.levels, lambda_fixed=args.lambda_fixed,
                p_percent=args.p_percent, epsilon=args.epsilon,
                no_weights=args.no_weights,
                no_warm_start=args.no_warm_start,
                tau_safety=args.tau_safety, beta=args.beta,
                gamma=args.gamma, tol=args.tol, max_iter=args.max_iter,
            )
        if args.command == "eval":
            return cmd_eval(
                args.reference, args.reconstructed,
                dynamic_range=args.dynamic_range, csv_path=args.csv_path,
            )
        if args.command == "bench":
            return cmd_bench(
                args.images, args.mrs, args.seeds, args.out,
                trace_dir=args.trace_dir, methods=args.methods,
                pad=args.pad, crop=args.crop, levels=args.levels,
                lambda_fixed=args.lambda_fixed, p_percent=args.p_percent,
                epsilon=args.epsilon, tau_safety=args.tau_safety,
                beta=args.beta, gamma=args.gamma, tol=args.tol,
                max_iter=args.max_iter,
            )
        parser.error(f"unknown command {args.command}")
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (BigcsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
