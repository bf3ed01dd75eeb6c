"""Command-line entry point: ``sgpmic fit | sweep-inducing | plot | gradcheck | synth``.

Exit codes: 0 success, 1 gradient check failed, 2 usage or input error,
3 numerical failure.
"""
import argparse
import configparser
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .checkpoint import save_checkpoint
from .datasets import Dataset, dataset_to_csv, load_csv, synth_circle_arcs, synth_spiral3d
from .errors import InputError, NumericalError
from .gradcheck import TOLERANCE, gradcheck, random_instance
from .initialization import pca_variance_dims
from .kernels import KernelSpec
from .metrics import clustering_accuracy, nmi
from .mixture import assign_clusters, em_fit
from .plot import read_embedding, render_svg

EXIT_OK, EXIT_GRADCHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
SYNTH = ("arcs", "spiral")


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_seeds(text):
    """``"1..10"``, ``"0,3,7"`` or a mix such as ``"1..3,9"``."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(v) for v in part.split("..", 1))
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise UsageError(f"bad seed specification {part!r}") from None
    if not seeds:
        raise UsageError("no seeds given")
    return seeds


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_config_file(path):
    """Key-value file (``key = value`` lines, optional ``[section]`` headers)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    cp = configparser.ConfigParser()
    try:
        cp.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key.replace("-", "_")] = value
    return out


# -- experiment plumbing --------------------------------------------------

def _load_dataset(args):
    if (args.data is None) == (args.synth is None):
        raise UsageError("give exactly one of --data or --synth")
    if args.synth is not None:
        if args.synth not in SYNTH:
            raise UsageError(f"--synth must be one of {SYNTH}")
        if args.synth == "arcs":
            return synth_circle_arcs(seed=args.data_seed)
        return synth_spiral3d(seed=args.data_seed, noise_sd=0.05)
    return load_csv(args.data, labels=args.labels)


def _resolve_dims(args, ds):
    if (args.variance_pct is None) == (args.q is None):
        raise UsageError("give exactly one of --variance-pct or --q")
    if args.q is not None:
        q = int(args.q)
    else:
        q = pca_variance_dims(ds.y, float(args.variance_pct))
    if str(args.clusters).lower() in ("auto", "auto-from-labels"):
        if ds.labels is None:
            raise UsageError("--clusters auto needs labelled data")
        m = ds.n_classes
    else:
        m = int(args.clusters)
    return m, q


def _n_prime(value, n):
    if str(value).upper() == "N":
        return n
    v = int(value)
    if not 1 <= v <= n:
        raise UsageError(f"inducing count {v} outside [1, {n}]")
    return v


def _fmt(v):
    return format(float(v), ".17g")


def _embedding_csv(X, clusters, labels):
    q = X.shape[1]
    lines = [",".join([f"x{j + 1}" for j in range(q)] + ["cluster", "label"])]
    for i in range(X.shape[0]):
        lab = "" if labels is None else str(labels[i])
        lines.append(",".join([_fmt(v) for v in X[i]] + [str(int(clusters[i])), lab]))
    return "\n".join(lines) + "\n"


def _trace_csv(trace):
    lines = ["iter,kl_bound,accuracy"]
    for it, kl, acc in trace:
        lines.append(f"{it},{_fmt(kl)},{'' if acc is None else _fmt(acc)}")
    return "\n".join(lines) + "\n"


def _run_seed(job):
    """One fit; returns the per-seed record (paths relative to ``out_dir``)."""
    ds, m, q, n_prime, seed, opts, out_dir = job
    t0 = time.perf_counter()
    state, r, report = em_fit(ds.y, m, q, n_prime, n_iter=opts["iterations"], seed=seed,
                              kernel=opts["kernel"], standardize_data=opts["standardize"],
                              inner_iters=opts["inner_iters"], labels=ds.labels,
                              k_neighbors=opts["k_neighbors"])
    wall = time.perf_counter() - t0
    clusters = assign_clusters(r)
    rec = {"seed": seed, "kl_bound": report.kl_corrected, "wall_time_s": wall,
           "accuracy": None, "nmi": None}
    if ds.labels is not None:
        rec["accuracy"] = clustering_accuracy(ds.labels, clusters)
        rec["nmi"] = nmi(ds.labels, clusters)
    stem = f"seed{seed}"
    rec["embedding_csv"] = f"{stem}_embedding.csv"
    rec["trace_csv"] = f"{stem}_trace.csv"
    atomic_write(os.path.join(out_dir, rec["embedding_csv"]),
                 _embedding_csv(state.X, clusters, ds.labels))
    atomic_write(os.path.join(out_dir, rec["trace_csv"]), _trace_csv(report.per_iteration_trace))
    if opts["checkpoint"]:
        rec["checkpoint"] = f"{stem}_model.npz"
        save_checkpoint(os.path.join(out_dir, rec["checkpoint"]), state, seed=seed,
                        trace=report.per_iteration_trace, responsibilities=r,
                        n_features=ds.y.shape[1])
    return rec


def _stats(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
    return float(np.mean(vals)), sd


def aggregate(runs):
    out = {}
    for key in ("accuracy", "nmi", "kl_bound", "wall_time_s"):
        mean, sd = _stats([r[key] for r in runs])
        out[f"{key}_mean"] = mean
        out[f"{key}_sd"] = sd
    return out


def _fit_opts(args):
    return {"iterations": int(args.iters), "kernel": KernelSpec.parse(args.kernel),
            "standardize": bool(args.standardize), "inner_iters": int(args.inner_iters),
            "k_neighbors": int(args.k_neighbors), "checkpoint": bool(args.checkpoint)}


def run_fit(ds, m, q, n_prime, seeds, opts, out_dir, jobs=1, config_echo=None):
    """Fit every seed, write per-seed files and ``run_record.json``."""
    os.makedirs(out_dir, exist_ok=True)
    job_list = [(ds, m, q, n_prime, s, opts, out_dir) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_seed, job_list))
    else:
        runs = [_run_seed(j) for j in job_list]
    record = {
        "config": config_echo or {},
        "dataset": ds.name,
        "n_points": int(ds.y.shape[0]),
        "n_features": int(ds.y.shape[1]),
        "clusters": m,
        "latent_dim": q,
        "n_inducing": n_prime,
        "runs": runs,
        "aggregate": aggregate(runs),
    }
    atomic_write(os.path.join(out_dir, "run_record.json"),
                 json.dumps(record, indent=2, sort_keys=True) + "\n")
    return record


def _echo(args, exclude=("func", "config", "corrupt")):
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in exclude:
            continue
        out[k] = v.value if isinstance(v, KernelSpec) else v
    return out


def _default_out(args, suffix=""):
    name = args.synth or os.path.splitext(os.path.basename(args.data))[0]
    return os.path.join("runs", name + suffix)


def cmd_fit(args):
    ds = _load_dataset(args)
    m, q = _resolve_dims(args, ds)
    n_prime = _n_prime(args.inducing, ds.y.shape[0])
    seeds = parse_seeds(args.seeds)
    out_dir = args.output_dir or _default_out(args)
    rec = run_fit(ds, m, q, n_prime, seeds, _fit_opts(args), out_dir, int(args.jobs),
                  _echo(args))
    agg = rec["aggregate"]
    print(f"{ds.name}: N={ds.y.shape[0]} P={ds.y.shape[1]} M={m} Q={q} N'={n_prime} "
          f"seeds={len(seeds)}")
    if agg["accuracy_mean"] is not None:
        print(f"ACC {agg['accuracy_mean']:.2f} +- {agg['accuracy_sd']:.2f}  "
              f"NMI {agg['nmi_mean']:.2f} +- {agg['nmi_sd']:.2f}")
    print(f"bound {agg['kl_bound_mean']:.4f}  time {agg['wall_time_s_mean']:.2f}s per seed")
    print(f"wrote {os.path.join(out_dir, 'run_record.json')}")
    return EXIT_OK


def cmd_sweep_inducing(args):
    ds = _load_dataset(args)
    m, q = _resolve_dims(args, ds)
    n = ds.y.shape[0]
    tokens = [t.strip() for t in str(args.inducing_list).split(",") if t.strip()]
    if not tokens:
        raise UsageError("empty --inducing-list")
    n_primes = [_n_prime(t, n) for t in tokens]
    seeds = parse_seeds(args.seeds)
    out_dir = args.output_dir or _default_out(args, "_sweep")
    os.makedirs(out_dir, exist_ok=True)
    opts = _fit_opts(args)
    lines = ["n_prime,accuracy_mean,nmi_mean,wall_time_s_mean"]
    for k in n_primes:
        rec = run_fit(ds, m, q, k, seeds, opts, os.path.join(out_dir, f"nprime{k}"),
                      int(args.jobs), dict(_echo(args), inducing=k))
        agg = rec["aggregate"]
        vals = [agg["accuracy_mean"], agg["nmi_mean"], agg["wall_time_s_mean"]]
        lines.append(",".join([str(k)] + ["" if v is None else _fmt(v) for v in vals]))
        print(f"N'={k}: ACC {agg['accuracy_mean']}  NMI {agg['nmi_mean']}  "
              f"time {agg['wall_time_s_mean']:.2f}s")
    atomic_write(os.path.join(out_dir, "summary.csv"), "\n".join(lines) + "\n")
    print(f"wrote {os.path.join(out_dir, 'summary.csv')}")
    return EXIT_OK


def cmd_plot(args):
    X, clusters, labels = read_embedding(args.embedding)
    if X.shape[1] != 2:
        raise UsageError(f"embedding has {X.shape[1]} latent columns; plot needs 2")
    atomic_write(args.out, render_svg(X, clusters, labels, title=args.title))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_gradcheck(args):
    failed = False
    for seed in parse_seeds(args.seeds):
        state, r, Y = random_instance(N=args.n, n_prime=args.inducing, M=args.clusters,
                                      Q=args.q, P=args.p, seed=seed, kernel=args.kernel)
        rep = gradcheck(state, r, Y, corrupt=args.corrupt)
        print(f"seed {seed}")
        for name, err in rep.block_errors.items():
            print(f"  {name:<14s} {err:.3e}")
        if not rep.passed(args.tol):
            failed = True
            print(f"  FAIL: worst block {rep.worst_block} ({rep.max_error:.3e} >= {args.tol:g})")
        else:
            print("  ok")
    return EXIT_GRADCHECK if failed else EXIT_OK


def cmd_synth(args):
    if args.kind == "arcs":
        ds = synth_circle_arcs(n_per_arc=args.n, seed=args.seed, noise_sd=args.noise)
    else:
        ds = synth_spiral3d(n=args.n, noise_sd=args.noise, seed=args.seed)
    text = dataset_to_csv(ds)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        atomic_write(args.out, text)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------

def _add_fit_args(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    src = p.add_argument_group("data")
    src.add_argument("--data", help="CSV file")
    src.add_argument("--synth", choices=SYNTH, help="generated dataset instead of --data")
    src.add_argument("--data-seed", type=int, default=0, help="seed for --synth (default 0)")
    src.add_argument("--labels", default=None,
                     help="label column: last, first, none or an index (default none)")
    model = p.add_argument_group("model")
    model.add_argument("--kernel", default="rbf", choices=[k.value for k in KernelSpec])
    model.add_argument("--clusters", default="auto",
                       help="number of components, or 'auto' for the number of classes")
    model.add_argument("--variance-pct", type=float, default=None,
                       help="choose Q as the PCA dimension retaining this much variance")
    model.add_argument("--q", type=int, default=None, help="latent dimension")
    model.add_argument("--inducing", default="50", help="inducing points N' (or N)")
    model.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    model.add_argument("--k-neighbors", type=int, default=10, help="ISOMAP neighbourhood")
    run = p.add_argument_group("run")
    run.add_argument("--iters", type=int, default=100, help="outer EM iterations")
    run.add_argument("--inner-iters", type=int, default=20, help="SCG iterations per M-step")
    run.add_argument("--seeds", default="0", help="e.g. 1..10 or 0,4,5")
    run.add_argument("--jobs", type=int, default=1, help="seeds fitted in parallel")
    run.add_argument("--output-dir", default=None)
    run.add_argument("--checkpoint", action="store_true", help="also save model archives")


def build_parser():
    parser = _Parser(prog="sgpmic", description="Sparse GP mixture clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the model for one or more seeds")
    _add_fit_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep-inducing", help="repeat fit over several N'")
    _add_fit_args(p)
    p.add_argument("--inducing-list", default="5,50,N",
                   help="comma-separated N' values; N means all points")
    p.set_defaults(func=cmd_sweep_inducing)

    p = sub.add_parser("plot", help="SVG scatter of a 2-D embedding CSV")
    p.add_argument("embedding")
    p.add_argument("out")
    p.add_argument("--title", default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gradcheck", help="finite-difference check of the bound gradient")
    p.add_argument("--n", type=int, default=15)
    p.add_argument("--inducing", type=int, default=4)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--kernel", default="rbf", choices=[k.value for k in KernelSpec])
    p.add_argument("--seeds", default="0")
    p.add_argument("--tol", type=float, default=TOLERANCE)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="write a generated dataset as CSV")
    p.add_argument("kind", choices=SYNTH)
    p.add_argument("--n", type=int, default=None,
                   help="points per arc (arcs, default 30) or total points (spiral, default 300)")
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config(parser, argv):
    """Re-parse with the config file's values installed as defaults."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for a in sub._actions:
            if a.dest in values:
                raw = values[a.dest]
                if isinstance(a, argparse.BooleanOptionalAction) or a.const is True:
                    val = raw.strip().lower() in ("1", "true", "yes", "on")
                elif a.type is not None:
                    val = a.type(raw)
                else:
                    val = raw
                sub.set_defaults(**{a.dest: val})
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "synth":
            if args.n is None:
                args.n = 30 if args.kind == "arcs" else 300
            if args.noise is None:
                args.noise = 0.02 if args.kind == "arcs" else 0.0
        return args.func(args)
    except NumericalError as exc:
        where = getattr(exc, "iteration", None)
        suffix = f" (iteration {where})" if where is not None else ""
        print(f"sgpmic: numerical failure{suffix}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError) as exc:
        print(f"sgpmic: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
