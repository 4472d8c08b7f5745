"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 usage or schema error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .design_space import DesignSpace, DesignSpaceError, FloatVariable
from .ego import EgoConfig, convergence_stats, propose_next, run_replications
from .io import (
    read_column_csv,
    read_doe_csv,
    read_json,
    write_doe_csv,
    write_json,
    write_manifest,
)
from .kernels import count_hyperparameters
from .kriging import KrigingConfig, KrigingModel, TrainingError, train
from .problems import PROBLEMS, get_problem
from .sampling import CRITERIA, METHODS, SamplerConfig, sample_values

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

CORR_KINDS = ("abs_exp", "squar_exp", "matern32", "matern52")
CAT_KINDS = ("GOWER", "CONT_RELAX", "EXP_HOMO_HSPHERE", "HOMO_HSPHERE")
HIER_KINDS = ("ALG_KERNEL", "ARC_KERNEL", "IMP_KERNEL")

log = logging.getLogger("hierkrig")


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _kind_list(choices):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if not items or bad:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad or text!r}; choose from {', '.join(choices)}")
        return items

    return parse


def _load_space(args) -> DesignSpace:
    if getattr(args, "problem", None):
        return get_problem(args.problem).space
    if not getattr(args, "space", None):
        raise UsageError("either --space or --problem is required")
    return DesignSpace.from_dict(read_json(args.space))


def _add_space_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--space", help="design-space JSON file")
    g.add_argument("--problem", choices=sorted(PROBLEMS), help="use a built-in problem's space")


def _add_kernel_args(p, lists=False):
    if lists:
        p.add_argument("--cat-kernel", type=_kind_list(CAT_KINDS), default=["HOMO_HSPHERE"],
                       help="comma-separated categorical kernels")
        p.add_argument("--hier-kernel", type=_kind_list(HIER_KINDS), default=["ALG_KERNEL"],
                       help="comma-separated hierarchical kernels")
    else:
        p.add_argument("--cat-kernel", choices=CAT_KINDS, default="HOMO_HSPHERE")
        p.add_argument("--hier-kernel", choices=HIER_KINDS, default="ALG_KERNEL")
    p.add_argument("--corr", choices=CORR_KINDS, default="squar_exp")
    p.add_argument("--nugget", type=float, default=1e-10)
    p.add_argument("--n-starts", type=_positive_int, default=10)


def _kriging_config(args, cat=None, hier=None, n_starts=None) -> KrigingConfig:
    return KrigingConfig(
        corr=args.corr,
        categorical_kernel=cat or args.cat_kernel,
        hierarchical_kernel=hier or args.hier_kernel,
        nugget=args.nugget,
        n_starts=n_starts or args.n_starts,
        seed=args.seed,
    )


def _manifest(args, outputs, t0, **extra):
    return {
        "command": [os.path.basename(sys.argv[0]) or "hierkrig", *sys.argv[1:]],
        "args": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "outputs": outputs,
        "wall_clock_s": round(time.time() - t0, 3),
        "version": __version__,
        **extra,
    }


def _out_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    return d


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_sample(args):
    t0 = time.time()
    space = _load_space(args)
    config = SamplerConfig(args.method, args.criterion, args.seed, args.n)
    values, _ = sample_values(space, config, args.stratify_meta)
    d = _out_dir(args.out)
    write_doe_csv(args.out, space, values)
    write_manifest(d, _manifest(args, [os.path.basename(args.out)], t0))
    return EXIT_OK


def _train_from_files(args):
    space = _load_space(args)
    X, _ = read_doe_csv(args.doe, space)
    y = read_column_csv(args.y)
    if len(X) != len(y):
        raise UsageError(f"DoE has {len(X)} rows but outputs have {len(y)}")
    return space, X, y


def cmd_fit(args):
    t0 = time.time()
    space, X, y = _train_from_files(args)
    config = _kriging_config(args)
    model = train(space, config, X, y)
    d = _out_dir(args.out)
    model.save(args.out)
    mu, s2 = model.predict(X)
    report = {
        "nll": float(model.nll),
        "n_hyperparameters": count_hyperparameters(space, config.kernel),
        "hyperparameters": model.hp.tolist(),
        "train_rmse": float(np.sqrt(np.mean((mu - y) ** 2))),
        "train_var_rmse": float(np.sqrt(np.mean(s2 ** 2))),
        "nugget": model.nugget,
        "n_train": int(len(y)),
    }
    print(_dumps(report))
    write_manifest(d, _manifest(args, [os.path.basename(args.out)], t0, kernel=config.kernel.to_dict()))
    return EXIT_OK


def cmd_predict(args):
    t0 = time.time()
    model = KrigingModel.load(args.model)
    X, _ = read_doe_csv(args.x, model.space)
    mu, s2 = model.predict(X)
    cols = {"mean": mu}
    if args.variances:
        cols["variance"] = s2
    if args.derivatives:
        floats = [i for i, v in enumerate(model.space.variables) if isinstance(v, FloatVariable)]
        if not floats:
            raise UsageError("the space has no continuous variable to differentiate")
        for i in floats:
            try:
                dm, dv = model.predict_derivatives(X, i)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            name = model.space.names[i]
            cols[f"d_mean_d_{name}"] = dm
            if args.variances:
                cols[f"d_variance_d_{name}"] = dv
    d = _out_dir(args.out)
    write_doe_csv(args.out, model.space, X, cols)
    write_manifest(d, _manifest(args, [os.path.basename(args.out)], t0))
    return EXIT_OK


def _methods(args, space):
    out = []
    for cat in args.cat_kernel:
        for hier in args.hier_kernel:
            if space.is_hierarchical:
                label = hier if len(args.cat_kernel) == 1 else f"{hier}_{cat}"
            else:
                label = cat
            if label not in [m[0] for m in out]:
                out.append((label, cat, hier))
    if args.random:
        out.append(("random", None, None))
    return out


def cmd_optimize(args):
    t0 = time.time()
    problem = get_problem(args.problem)
    os.makedirs(args.out, exist_ok=True)
    outputs, summary = [], {"problem": args.problem, "runs": args.runs, "doe_size": args.doe_size,
                            "n_iter": args.n_iter, "criterion": args.criterion, "methods": {}}
    for label, cat, hier in _methods(args, problem.space):
        if cat is None:
            hs = run_replications(args.problem, "random", args.runs, args.doe_size, args.n_iter, args.seed,
                                  jobs=args.jobs)
        else:
            config = EgoConfig(n_iter=args.n_iter, criterion=args.criterion, lcb_kappa=args.kappa,
                               candidate_pool_size=args.pool_size,
                               kriging=_kriging_config(args, cat, hier))
            hs = run_replications(args.problem, "ego", args.runs, args.doe_size, args.n_iter, args.seed,
                                  config, jobs=args.jobs)
        for r, h in enumerate(hs):
            name = f"{label}_run_{r:02d}.csv"
            h.write_csv(os.path.join(args.out, name))
            outputs.append(name)
        stats = convergence_stats(hs, args.n_iter)
        name = f"{label}_convergence.csv"
        _write_rows(os.path.join(args.out, name), ["iter", "median", "q1", "q3"], stats, int_cols=1)
        outputs.append(name)
        name = f"{label}_best.csv"
        _write_rows(os.path.join(args.out, name), ["run", "y_opt"],
                    [[r, h.y_opt] for r, h in enumerate(hs)], int_cols=1)
        outputs.append(name)
        best = [h.y_opt for h in hs]
        i = int(np.argmin(best))
        summary["methods"][label] = {
            "categorical_kernel": cat,
            "hierarchical_kernel": hier,
            "median_y_opt": float(np.median(best)),
            "x_opt": hs[i].summary()["x_opt"],
            "y_opt": float(best[i]),
            "n_eval": [int(len(h.y)) for h in hs],
        }
    write_json(os.path.join(args.out, "summary.json"), summary)
    outputs.append("summary.json")
    write_manifest(args.out, _manifest(args, outputs, t0))
    print(_dumps({k: {"median_y_opt": v["median_y_opt"], "y_opt": v["y_opt"]}
                  for k, v in summary["methods"].items()}))
    return EXIT_OK


def cmd_ask(args):
    t0 = time.time()
    space = _load_space(args)
    X, extra = read_doe_csv(args.doe, space, ("y",))
    y = extra["y"]
    model = train(space, _kriging_config(args), X, y)
    point = propose_next(space, model, args.criterion, args.seed, args.pool_size, args.kappa)
    if point is None:
        raise TrainingError("every candidate duplicates an evaluated point")
    d = _out_dir(args.out)
    write_doe_csv(args.out, space, point.values[None, :])
    write_manifest(d, _manifest(args, [os.path.basename(args.out)], t0))
    return EXIT_OK


def cmd_space(args):
    t0 = time.time()
    space = get_problem(args.problem).space
    d = _out_dir(args.out)
    write_json(args.out, {k: v for k, v in space.to_dict().items() if k != "format_version"})
    write_manifest(d, _manifest(args, [os.path.basename(args.out)], t0))
    return EXIT_OK


def _write_rows(path, header, rows, int_cols=0):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([int(v) if k < int_cols else repr(float(v)) for k, v in enumerate(row)])


def _dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True)


# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hierkrig", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="write a valid DoE CSV")
    _add_space_args(p)
    p.add_argument("--method", choices=METHODS, default="lhs")
    p.add_argument("--criterion", choices=CRITERIA, default="maximin")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify-meta", type=int, default=None,
                   help="index of a discrete variable to stratify the points over")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="train and save a Kriging model")
    _add_space_args(p)
    p.add_argument("--doe", required=True)
    p.add_argument("--y", required=True)
    _add_kernel_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variances", action="store_true")
    p.add_argument("--derivatives", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("optimize", help="run EGO / random-search replications on a built-in problem")
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    p.add_argument("--criterion", choices=("EI", "SBO", "LCB"), default="EI")
    p.add_argument("--kappa", type=float, default=1.96)
    p.add_argument("--doe-size", type=_positive_int, required=True)
    p.add_argument("--n-iter", type=_positive_int, required=True)
    p.add_argument("--runs", type=_positive_int, default=1)
    p.add_argument("--pool-size", type=_positive_int, default=1000)
    p.add_argument("--random", action="store_true", help="also run the random-search baseline")
    p.add_argument("--jobs", type=_positive_int, default=1)
    _add_kernel_args(p, lists=True)
    p.set_defaults(n_starts=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("ask", help="propose the next point from an evaluated DoE CSV (with a y column)")
    _add_space_args(p)
    p.add_argument("--doe", required=True)
    p.add_argument("--criterion", choices=("EI", "SBO", "LCB"), default="EI")
    p.add_argument("--kappa", type=float, default=1.96)
    p.add_argument("--pool-size", type=_positive_int, default=1000)
    _add_kernel_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("space", help="export a built-in problem's design-space JSON")
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_space)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, DesignSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
