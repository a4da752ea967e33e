"""Command-line entry point: ``fofgnbp {simulate,fit,extrapolate,eval,powerlaw}``.

Settings resolve as flags > ``--config`` file (``key=value`` lines, keys
spelled like the long flags) > built-in defaults. ``FOF_CACHE_DIR`` enables
the on-disk cache of R tables. Data goes to files or stdout, diagnostics to
stderr; the exit code is nonzero on any error.
"""
import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io
from .baselines import chi_squared, fit_powerlaw_tail, fit_report, plot_rows, rmse
from .cluster_structure import (
    sequential_sample,
    simulate_compound,
    simulate_fof_poisson,
    simulate_fof_stickbreak,
    simulate_pitman_yor,
)
from .extrapolation import ExtrapolationJob, run_extrapolation
from .inference import McmcConfig, fit_crp, fit_gnbp, fit_pitman_yor
from .params import GnbpParams, PyParams
from .recursions import set_cache_dir
from .rng import RngStream

__all__ = ["main", "build_parser"]

_MODEL_NAMES = {"gnbp": "gnbp", "py": "pitman_yor", "crp": "crp"}


class UsageError(Exception):
    pass


def _add_seed(p):
    p.add_argument("--seed", type=int, default=0)


def _add_mcmc(p):
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--burnin", type=int, default=500)
    p.add_argument("--T", dest="T", type=int, default=5, help="inner Gibbs sweeps per iteration")
    p.add_argument("--e0", type=float, default=0.01)
    p.add_argument("--f0", type=float, default=0.01)
    p.add_argument("--a-mode", default="free", help="free, negative, or fixed=V")


def _add_input(p, flag, default_format):
    p.add_argument(flag, required=True, help="input path")
    p.add_argument("--format", choices=["assignment", "counts", "text", "fof"],
                   default=default_format)


def build_parser():
    parser = argparse.ArgumentParser(prog="fofgnbp", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a population")
    p.add_argument("--model", choices=["gnbp", "crp"], default="gnbp")
    p.add_argument("--gamma0", type=float, required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--p", type=float)
    p.add_argument("--construction", choices=["poisson", "stickbreak", "compound", "sequential"],
                   default="compound")
    p.add_argument("--n", type=int, help="population size (sequential construction)")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="FoF CSV (or per-replicate summary CSV with --replicates)")
    p.add_argument("--assignment-out", help="assignment file")
    _add_seed(p)

    p = sub.add_parser("fit", help="posterior samples of the model parameters")
    _add_input(p, "--input", "assignment")
    p.add_argument("--model", choices=list(_MODEL_NAMES), default="gnbp")
    _add_mcmc(p)
    p.add_argument("--trace-out")
    _add_seed(p)

    p = sub.add_parser("extrapolate", help="posterior-mean population FoF from a sample")
    _add_input(p, "--sample", "fof")
    p.add_argument("--population-size", type=int, required=True)
    p.add_argument("--model", choices=list(_MODEL_NAMES), default="gnbp")
    _add_mcmc(p)
    p.add_argument("--out-fof")
    p.add_argument("--out-trace")
    p.add_argument("--dump-samples", metavar="DIR",
                   help="write one FoF CSV per kept iteration into DIR")
    _add_seed(p)

    p = sub.add_parser("eval", help="RMSE and chi-squared of a prediction")
    p.add_argument("--pop", required=True, help="population FoF CSV")
    p.add_argument("--pred", required=True, help="predicted FoF CSV (counts or mean_count)")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--plot-out", help="log-log plot TSV of the population FoF")

    p = sub.add_parser("powerlaw", help="power-law tail fit of a FoF vector")
    p.add_argument("--fof", required=True)
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--plot-out", help="log-log plot TSV")
    return parser


def read_config(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise io.ParseError(path, no, "expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _parse(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        sub = parser._subparsers._group_actions[0]
        for sp in sub.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
            # a config value satisfies a required flag
            for a in sp._actions:
                if a.dest in cfg:
                    a.required = False
    return parser.parse_args(argv)


def _load_partition(path, fmt):
    if fmt == "assignment":
        return io.read_assignment(path)
    if fmt == "fof":
        return io.read_fof(path).to_assignment()
    if fmt == "counts":
        return io.counts_to_assignment(io.read_counts(path))
    with open(path, "rb") as fh:
        return io.counts_to_assignment(io.tokenize(fh.read()))


def _mcmc_config(args):
    return McmcConfig(iterations=args.iters, burn_in=args.burnin, inner_sweeps=args.T,
                      e0=args.e0, f0=args.f0, seed=args.seed)


def _simulate_one(args, stream):
    if args.model == "crp":
        if args.construction != "sequential":
            raise UsageError("--model crp supports only --construction sequential")
        return simulate_pitman_yor(args.n, PyParams(args.gamma0, 0.0), stream)
    if args.p is None:
        raise UsageError("--model gnbp requires --p")
    params = GnbpParams(args.gamma0, args.a, args.p)
    if args.construction == "poisson":
        return simulate_fof_poisson(params, stream)
    if args.construction == "stickbreak":
        return simulate_fof_stickbreak(params, stream)
    if args.construction == "compound":
        return simulate_compound(params, stream)
    return sequential_sample(args.n, params, stream)


def cmd_simulate(args, out):
    if args.construction == "sequential" and (args.n is None or args.n < 1):
        raise UsageError("--construction sequential requires --n >= 1")
    if args.construction != "sequential" and args.n is not None:
        raise UsageError("--n applies only to --construction sequential")
    if args.replicates < 1:
        raise UsageError("--replicates must be >= 1")
    if args.replicates == 1:
        draw = _simulate_one(args, RngStream(args.seed))
        fof = draw if hasattr(draw, "items") else draw.fof()
        assign = draw.to_assignment() if hasattr(draw, "items") else draw
        if args.out:
            io.write_fof(fof, args.out)
        else:
            out.write(io.format_fof(fof))
        if args.assignment_out:
            io.write_assignment(assign, args.assignment_out)
        return
    streams = RngStream(args.seed).split(args.replicates)
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        draws = list(pool.map(lambda s: _simulate_one(args, s), streams))
    rows = ["replicate,n,l,m1,m2"]
    ls = []
    for r, d in enumerate(draws):
        fof = d if hasattr(d, "items") else d.fof()
        ls.append(fof.l)
        rows.append(f"{r},{fof.n},{fof.l},{fof.get(1)},{fof.get(2)}")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    out.write(f"replicates: {args.replicates}\nmean_l: {np.mean(ls):.10g}\n")


def _summary(trace, burn_in, out):
    means = trace.posterior_means(burn_in)
    for k in ("gamma0", "a", "p", "l"):
        out.write(f"mean_{k}: {means[k]:.10g}\n")


def cmd_fit(args, out):
    assign = _load_partition(args.input, args.format)
    cfg = _mcmc_config(args)
    rng = RngStream(args.seed)
    if args.model == "gnbp":
        trace = fit_gnbp(assign, cfg, args.a_mode, rng=rng)
    elif args.model == "py":
        trace = fit_pitman_yor(assign, cfg, rng=rng)
    else:
        trace = fit_crp(assign, cfg, rng=rng)
    if args.trace_out:
        io.write_trace(trace, args.trace_out)
    out.write(f"n: {assign.n}\nl: {assign.l}\nkept: {cfg.iterations - cfg.burn_in}\n")
    _summary(trace, cfg.burn_in, out)


def cmd_extrapolate(args, out):
    sample = _load_partition(args.sample, args.format)
    if args.population_size < sample.n:
        raise UsageError(f"--population-size {args.population_size} is smaller than "
                         f"the sample ({sample.n})")
    cfg = _mcmc_config(args)
    job = ExtrapolationJob(sample, args.population_size, _MODEL_NAMES[args.model],
                           args.a_mode, cfg, keep_samples=bool(args.dump_samples))
    post, trace = run_extrapolation(job, RngStream(args.seed))
    if args.out_fof:
        io.write_posterior(post, args.out_fof)
    else:
        out.write("size,mean_count\n")
        for k, v in post.as_dict().items():
            out.write(f"{k},{v!r}\n")
    if args.out_trace:
        io.write_trace(trace, args.out_trace)
    if args.dump_samples:
        os.makedirs(args.dump_samples, exist_ok=True)
        for k, fof in enumerate(trace.fofs):
            io.write_fof(fof, os.path.join(args.dump_samples, f"sample_{cfg.burn_in + k:06d}.csv"))


def _emit(text, path, out):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)


def _maybe_plot(fof, path):
    if path:
        io.write_plot(plot_rows(fof, fit_powerlaw_tail(fof)), path)


def cmd_eval(args, out):
    pop = io.read_fof(args.pop)
    pred = io.read_prediction(args.pred)
    _emit(f"rmse: {rmse(pop, pred):.10g}\nchi_squared: {chi_squared(pop, pred):.10g}\n",
          args.report, out)
    _maybe_plot(pop, args.plot_out)


def cmd_powerlaw(args, out):
    fof = io.read_fof(args.fof)
    _emit(fit_report(fit_powerlaw_tail(fof)), args.report, out)
    _maybe_plot(fof, args.plot_out)


_COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "extrapolate": cmd_extrapolate,
             "eval": cmd_eval, "powerlaw": cmd_powerlaw}


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = _parse(argv)
    except (OSError, ValueError) as exc:
        print(f"fofgnbp: error: {exc}", file=sys.stderr)
        return 2
    if os.environ.get("FOF_CACHE_DIR"):
        set_cache_dir(os.environ["FOF_CACHE_DIR"])
    try:
        _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"fofgnbp {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        print(f"fofgnbp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
