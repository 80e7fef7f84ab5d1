"""Command-line entry point: ``gbrff {bench,sweep,fit,predict,check}``."""
import argparse
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from . import bench, boosting, checks, pbrff, serialize
from .data import DATASET_NAMES, fit_scaler, load_and_binarize, resolve_spec
from .rff import derive_seed

def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p):
    p.add_argument("--dataset-dir", help="directory holding <name>.json dataset specs (default: bundled)")
    p.add_argument("--spec", action="append", metavar="NAME_OR_JSON",
                   help="dataset name or spec file; repeatable (default: all 14 datasets)")
    p.add_argument("--method", action="append", choices=bench.METHODS, help="repeatable")
    p.add_argument("--k-features", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--fast", action="store_true",
                   help="desk-scale profile: 6 smallest datasets, 5 splits, c in {0, 32}, v in {1, 0.1}")
    p.add_argument("--splits", type=int, help="number of random train/test splits (default 20)")
    p.add_argument("--bandwidth", type=float, default=1.0, help="Gaussian kernel width (default 1)")
    p.add_argument("--out", default="results", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="gbrff", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="repeated-split benchmark with cross-validated hyperparameters")
    _common(p)
    p.add_argument("--rounds", type=int, default=200, help="boosting rounds T")
    p.add_argument("--landmarks", type=int, default=200, help="PBRFF landmark count")

    p = sub.add_parser("sweep", help="accuracy as a function of the landmark budget")
    _common(p)
    p.add_argument("--landmarks", type=_int_list, default=bench.SWEEP_BUDGETS,
                   help="comma-separated budgets, used as T for boosting and n_L for PBRFF")
    p.add_argument("--rounds", type=_int_list, help="boosting budgets if they differ from --landmarks")

    p = sub.add_parser("fit", help="train one model on a whole dataset")
    p.add_argument("--dataset-dir")
    p.add_argument("--spec", required=True, metavar="NAME_OR_JSON")
    p.add_argument("--method", choices=bench.METHODS, default="gbrff")
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--landmarks", type=int, default=200)
    p.add_argument("--k-features", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--c", type=float, default=0.0, help="boosting posterior temperature")
    p.add_argument("--v", type=float, default=1.0, help="boosting learning rate")
    p.add_argument("--beta", type=float, default=1.0, help="PBRFF posterior temperature")
    p.add_argument("--svm-c", type=float, default=1.0, help="PBRFF SVM regularization")
    p.add_argument("--cv", action="store_true", help="choose hyperparameters by 5-fold CV over the full grid")
    p.add_argument("--model-out", required=True)

    p = sub.add_parser("predict", help="predict labels with a saved model")
    p.add_argument("--dataset-dir")
    p.add_argument("--spec", required=True, metavar="NAME_OR_JSON")
    p.add_argument("--model-in", required=True)
    p.add_argument("--out", help="CSV of predictions (default: stdout)")

    p = sub.add_parser("check", help="run the numerical oracles")
    p.add_argument("--seed", type=int, default=0)
    return parser


def experiment_config(args, sweep=False):
    datasets = tuple(args.spec) if args.spec else DATASET_NAMES
    if sweep:
        landmarks = tuple(args.landmarks)
        rounds = tuple(args.rounds) if args.rounds else landmarks
        methods = tuple(args.method) if args.method else bench.METHODS
    else:
        landmarks, rounds = (args.landmarks,), (args.rounds,)
        methods = tuple(args.method) if args.method else ("gbrff", "pbrff")
    cfg = bench.ExperimentConfig(datasets=datasets, methods=methods, rounds=rounds, landmarks=landmarks,
                                 k_features=args.k_features, seed=args.seed, dataset_dir=args.dataset_dir,
                                 output_path=args.out, workers=args.workers, bandwidth=args.bandwidth)
    if args.fast:
        cfg = cfg.fast()
        if args.spec:
            cfg = replace(cfg, datasets=datasets)
    if args.splits:
        cfg = replace(cfg, plan=replace(cfg.plan, n_repeats=args.splits))
    return cfg


def cmd_bench(args, sweep=False):
    cfg = experiment_config(args, sweep)
    res = bench.run_benchmark(cfg)
    paths = bench.emit_results(res.records, res.summary, cfg.output_path, res.sweep if sweep else None)
    for row in res.summary:
        if row["dataset"] == bench.AVERAGE_ROW:
            print(f"average  {row['method']:<13} budget {row['landmark_budget']:>4}  "
                  f"accuracy {100 * row['mean_accuracy']:.2f}  rank {row['rank']:.2f}")
        else:
            print(f"{row['dataset']:<12} {row['method']:<13} budget {row['landmark_budget']:>4}  "
                  f"accuracy {100 * row['mean_accuracy']:.2f} +- {100 * row['std_accuracy']:.2f}")
    for name, err in res.failures.items():
        print(f"FAILED {name}: {err}", file=sys.stderr)
    print("wrote " + ", ".join(paths))
    return 1 if res.failures else 0


def cmd_fit(args):
    ds = load_and_binarize(resolve_spec(args.spec, args.dataset_dir))
    scaler = fit_scaler(ds.x)
    train = replace(ds, x=scaler.transform(ds.x))
    grid_cfg = bench.ExperimentConfig(datasets=(ds.name,), methods=(args.method,), rounds=(args.rounds,),
                                      landmarks=(args.landmarks,), k_features=args.k_features,
                                      seed=args.seed, bandwidth=args.bandwidth)
    if args.method == "pbrff":
        beta, svm_c = (args.beta, args.svm_c)
        if args.cv:
            beta, svm_c = bench.grid_search_cv(train, "pbrff", grid_cfg, derive_seed(args.seed, "cv"))
        model = pbrff.fit_pbrff(train, args.landmarks, args.k_features, beta, svm_c, args.seed,
                                bandwidth=args.bandwidth)
        chosen = bench.format_point("pbrff", (beta, svm_c))
    else:
        c, v = args.c, args.v
        if args.cv:
            c, v = bench.grid_search_cv(train, args.method, grid_cfg, derive_seed(args.seed, "cv"))
        mode = "random" if args.method == "gbrff_random" else "learned"
        gcfg = boosting.GbrffConfig(t_rounds=args.rounds, k_features=args.k_features, v=v, c=c,
                                    landmark_mode=mode, seed=args.seed, bandwidth=args.bandwidth)
        model = boosting.fit(train, gcfg)
        chosen = bench.format_point(args.method, (c, v))
    serialize.save(args.model_out, model, scaler)
    print(f"{args.method} on {ds.name} (n={ds.n}, d={ds.d}) with {chosen}; wrote {args.model_out}")
    return 0


def cmd_predict(args):
    model, scaler = serialize.load(args.model_in)
    ds = load_and_binarize(resolve_spec(args.spec, args.dataset_dir))
    x = scaler.transform(ds.x) if scaler is not None else ds.x
    if isinstance(model, pbrff.PbrffModel):
        raw = np.atleast_1d(pbrff.predict_raw(model, x))
    else:
        raw = np.atleast_1d(boosting.predict_raw(model, x))
    pred = np.where(raw >= 0, 1, -1)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "raw", "prediction", "label"])
        for i, (r, p, y) in enumerate(zip(raw, pred, ds.y)):
            w.writerow([i, f"{r:.6f}", int(p), int(y)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"accuracy {np.mean(pred == ds.y):.6f} on {ds.n} rows", file=sys.stderr)
    return 0


def cmd_check(args):
    ok = True
    for r in checks.run_all(args.seed):
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        ok &= r.passed
    return 0 if ok else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "sweep":
            return cmd_bench(args, sweep=True)
        if args.command == "fit":
            return cmd_fit(args)
        if args.command == "predict":
            return cmd_predict(args)
        return cmd_check(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
