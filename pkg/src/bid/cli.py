"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 numerical or degenerate input.
Errors print a single ``bid: error: <kind>: <message>`` line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from ._threads import configure_threads
from .errors import ConvergenceError, DegenerateError, FormatError
from .manifest import Manifest

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _r_star(value: str):
    v = value.strip().lower()
    if v in ("auto", "median") or (v.startswith("q") and len(v) > 1):
        return v
    try:
        r = int(v)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"r* must be 'auto', 'median', 'q<fraction>' or an integer, got {value!r}"
        )
    if r < 0:
        raise argparse.ArgumentTypeError("r* must be non-negative")
    return r


def _float_list(value: str):
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def _int_list(value: str):
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _json_dumps(obj) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


# --- subcommands -----------------------------------------------------------------


def cmd_histogram(args, manifest: Manifest) -> int:
    from .bitdata import distance_histogram
    from .io import read_bidb, write_histogram

    ds = read_bidb(args.input)
    manifest.add_input(args.input)
    hist = distance_histogram(ds)
    write_histogram(args.out, hist)
    manifest.add_output(args.out)
    print(f"n_samples={hist.n_samples} n_bits={hist.n_bits} pairs={hist.n_pairs}")
    return EXIT_OK


def cmd_fit(args, manifest: Manifest) -> int:
    from .bayes import mcmc_sample, posterior_summary, write_chain_csv
    from .io import atomic_write_text, load_histogram
    from .model import fit_bid

    hist = load_histogram(args.input)
    manifest.add_input(args.input)
    fit = fit_bid(hist, args.r_star)
    out = fit.to_dict()
    out["n_samples"] = hist.n_samples
    if args.mcmc:
        sample = mcmc_sample(
            hist, steps=args.steps, burn_in=args.burn_in, step_fraction=args.step_fraction,
            seed=args.seed, r_star=fit.params.r_star, hastings=not args.paper_exact,
        )
        out["posterior"] = posterior_summary(sample).to_dict()
        out["posterior"]["hastings"] = not args.paper_exact
        out["posterior"]["seed"] = args.seed
        if args.chain_csv:
            write_chain_csv(args.chain_csv, sample, thin=args.thin)
            manifest.add_output(args.chain_csv)
    out["manifest"] = Path(Manifest.path_for(args.out)).name
    atomic_write_text(args.out, _json_dumps(out))
    manifest.add_output(args.out)
    print(f"d0={fit.d0:.6g} d1={fit.d1:.6g} bid_per_bit={fit.bid_per_bit:.6g} log_kl={fit.log_kl:.4g}")
    return EXIT_OK


def _sample_kwargs(args) -> dict:
    return dict(q=args.q, blocks=args.blocks, burn_in=args.burn_in,
                start=args.start, ferro=args.ferro)


def cmd_sample(args, manifest: Manifest) -> int:
    from .experiments import sample_system
    from .io import atomic_write_text, write_bidb

    trace_every = args.trace_every if args.energy_trace else 0
    result = sample_system(args.system, args.L, args.T, args.n_samples, args.seed,
                           trace_every=trace_every, **_sample_kwargs(args))
    write_bidb(args.out, result.dataset)
    manifest.add_output(args.out)
    manifest.config["resolved_burn_in"] = result.runs[0].burn_in_sweeps
    manifest.config["resolved_start"] = result.runs[0].start
    if args.energy_trace:
        buf = io.StringIO()
        buf.write("block,chain,sweep,energy\n")
        for b, run in enumerate(result.runs):
            for c, trace in enumerate(run.traces):
                for t, e in enumerate(trace):
                    buf.write(f"{b},{c},{(t + 1) * trace_every},{e:.1f}\n")
        atomic_write_text(args.energy_trace, buf.getvalue())
        manifest.add_output(args.energy_trace)
    ds = result.dataset
    print(f"n_samples={ds.n_samples} n_bits={ds.n_bits}")
    return EXIT_OK


def cmd_sweep(args, manifest: Manifest) -> int:
    from .experiments import SWEEP_COLUMNS, sweep
    from .io import atomic_write_text

    if not args.T_list or not args.L_list:
        raise ValueError("temperature and size lists must be non-empty")
    rows = sweep(args.system, args.T_list, args.L_list, args.n_samples, args.seed,
                 r_star=args.r_star, **_sample_kwargs(args))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    atomic_write_text(args.out, buf.getvalue())
    manifest.add_output(args.out)
    n_ok = sum(r["status"] == "ok" for r in rows)
    print(f"cells={len(rows)} ok={n_ok}")
    if n_ok == 0:
        raise DegenerateError("every sweep cell failed")
    return EXIT_OK


def cmd_binarize(args, manifest: Manifest) -> int:
    from .bitdata import binarize_sign, layer_stats, quantize_2bit
    from .io import read_real_matrix, write_bidb

    m = read_real_matrix(args.input)
    manifest.add_input(args.input)
    mean, std = layer_stats(m)
    manifest.config["layer_mean"] = mean
    manifest.config["layer_std"] = std
    if args.mode == "sign":
        ds = binarize_sign(m)
    else:
        mu = args.mu if args.mu is not None else (mean if args.center else 0.0)
        sigma = args.sigma if args.sigma is not None else std
        manifest.config["thresholds"] = [mu - sigma, mu, mu + sigma]
        ds = quantize_2bit(m, mu=mu, sigma=sigma)
    write_bidb(args.out, ds)
    manifest.add_output(args.out)
    print(f"n_samples={ds.n_samples} n_bits={ds.n_bits}")
    return EXIT_OK


def cmd_mle(args, manifest: Manifest) -> int:
    from .io import atomic_write_text, load_histogram
    from .mle import mle_profile

    hist = load_histogram(args.input)
    manifest.add_input(args.input)
    profile = mle_profile(hist)
    buf = io.StringIO()
    buf.write("r,r_over_N,d_hat,d_hat_over_N,n_A,n_B\n")
    for r, rn, d, dn, a, b in profile.rows():
        buf.write(f"{r},{rn!r},{d!r},{dn!r},{a},{b}\n")
    atomic_write_text(args.out, buf.getvalue())
    manifest.add_output(args.out)
    print(f"valid_scales={int(profile.valid_mask.sum())}")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------


def _add_sampler_options(p):
    p.add_argument("system", choices=("ising-square", "ising-tri", "potts", "chain-blocks"))
    p.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    p.add_argument("--n-samples", type=int, default=1000, help="independent chains")
    p.add_argument("--q", type=int, default=8, help="Potts colors")
    p.add_argument("--blocks", type=int, default=1, help="chain-blocks: number of blocks B")
    p.add_argument("--burn-in", type=int, default=None,
                   help="sweeps per chain (default: 1000, or 10000 near the transition)")
    p.add_argument("--start", choices=("hot", "cold"), default=None,
                   help="initial state (default: hot at or above the transition, cold below)")
    p.add_argument("--ferro", action="store_true",
                   help="chain-blocks: ferromagnetic sign instead of E = +sum s_i s_i+1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bid", description="Binary intrinsic dimension toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $BID_NUM_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("histogram", help="pairwise Hamming-distance histogram of a BIDB file")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("fit", help="fit the BID to a histogram JSON or BIDB dataset")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--r-star", type=_r_star, default="auto",
                   help="largest distance in the fit: auto (largest observed, default), "
                        "median, q<fraction> (empirical quantile) or an integer")
    p.add_argument("--mcmc", action="store_true", help="also sample the posterior")
    p.add_argument("--steps", type=int, default=110_000)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--step-fraction", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-exact", action="store_true",
                   help="omit the Hastings correction for the multiplicative proposal")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--chain-csv", default=None, help="write the thinned chain here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", help="generate a spin-system dataset")
    _add_sampler_options(p)
    p.add_argument("--L", type=int, required=True, help="lattice side, or block length")
    p.add_argument("--T", type=float, required=True, help="temperature")
    p.add_argument("--out", required=True)
    p.add_argument("--energy-trace", default=None, help="CSV of per-chain energies")
    p.add_argument("--trace-every", type=int, default=10)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="sample and fit over a grid of sizes and temperatures")
    _add_sampler_options(p)
    p.add_argument("--T-list", type=_float_list, required=True)
    p.add_argument("--L-list", type=_int_list, required=True)
    p.add_argument("--r-star", type=_r_star, default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("binarize", help="turn a real matrix (BIDF or CSV) into bits")
    p.add_argument("input")
    p.add_argument("--mode", choices=("sign", "2bit"), required=True)
    p.add_argument("--mu", type=float, default=None, help="2bit: center threshold (default 0)")
    p.add_argument("--sigma", type=float, default=None,
                   help="2bit: threshold half-width (default: std over the whole matrix)")
    p.add_argument("--center", action="store_true",
                   help="2bit: center thresholds on the matrix mean instead of 0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("mle", help="scale-dependent thin-shell MLE profile")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mle)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_threads(args.threads)
        manifest = Manifest.start(argv, args)
        code = args.func(args, manifest)
        manifest.finish(args.out)
        return code
    except (DegenerateError, ConvergenceError) as exc:
        err = CliError(EXIT_NUMERIC, "numerical", str(exc))
    except FormatError as exc:
        err = CliError(EXIT_INPUT, "format", str(exc))
    except (ValueError, OSError) as exc:
        err = CliError(EXIT_INPUT, "input", str(exc))
    msg = " ".join(str(err).split())
    print(f"bid: error: {err.kind}: {msg}", file=sys.stderr)
    return err.code


if __name__ == "__main__":
    sys.exit(main())
