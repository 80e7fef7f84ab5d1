"""Benchmark harness: cross-validated grid search, repeated splits, landmark sweeps.

A task is one (dataset, split, method) triple. Its result depends only on the
experiment seed and those three keys, so tasks can run in any order or in
parallel. Each task covers every budget slot at once: boosting budgets are
prefixes of one run with the largest budget, and PBRFF budgets are prefixes
of one landmark draw.
"""
import csv
import functools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from . import pbrff
from .base_learner import LandmarkDescentConfig
from .boosting import GbrffConfig, fit_lanes
from .data import (DATASET_NAMES, SMALLEST, SplitPlan, load_and_binarize, make_folds, make_splits,
                   resolve_spec, standardize)
from .rff import derive_seed

log = logging.getLogger(__name__)

METHODS = ("gbrff", "gbrff_random", "pbrff")
C_GRID = (0.0,) + tuple(2.0 ** i for i in range(11))
V_GRID = (1.0, 0.5, 0.1, 0.05, 0.01)
BETA_GRID = tuple(10.0 ** i for i in range(-3, 4))
SVM_C_GRID = tuple(10.0 ** i for i in range(-3, 4))
FAST_C_GRID = (0.0, 32.0)
FAST_V_GRID = (1.0, 0.1)
FAST_SPLITS = 5
SWEEP_BUDGETS = (1, 2, 3, 5, 10, 15, 25, 50, 100, 200)

RUN_FIELDS = ("dataset", "method", "split_index", "landmark_budget", "chosen_hyperparameters", "test_accuracy")
TIMING_FIELDS = ("dataset", "method", "split_index", "train_time_seconds")
SUMMARY_FIELDS = ("dataset", "method", "landmark_budget", "n_splits", "mean_accuracy", "std_accuracy", "rank")
SWEEP_FIELDS = ("budget", "method", "mean_accuracy", "win_count")
AVERAGE_ROW = "__average__"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run depends on.

    ``rounds`` are the boosting budgets and ``landmarks`` the PBRFF budgets;
    they are paired by position ("budget slots") when methods are ranked.
    Grid points are visited ``c`` outer / ``v`` inner and ``beta`` outer /
    ``svm_c`` inner; ties go to the first point visited.
    """

    datasets: tuple = DATASET_NAMES
    methods: tuple = ("gbrff", "pbrff")
    c_grid: tuple = C_GRID
    v_grid: tuple = V_GRID
    beta_grid: tuple = BETA_GRID
    svm_c_grid: tuple = SVM_C_GRID
    rounds: tuple = (200,)
    landmarks: tuple = (200,)
    k_features: int = 100
    plan: SplitPlan = field(default_factory=SplitPlan)
    seed: int = 0
    dataset_dir: str = None
    output_path: str = "results"
    workers: int = 1
    bandwidth: float = 1.0
    svm_epochs: int = pbrff.SVM_EPOCHS
    descent: LandmarkDescentConfig = field(default_factory=LandmarkDescentConfig)

    def __post_init__(self):
        for name in ("datasets", "methods", "c_grid", "v_grid", "beta_grid", "svm_c_grid", "rounds", "landmarks"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, value)
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; expected some of {METHODS}")
        if len(self.rounds) != len(self.landmarks):
            raise ValueError("rounds and landmarks must list the same number of budgets")
        for name in ("rounds", "landmarks"):
            b = getattr(self, name)
            if any(int(x) != x or x < 1 for x in b) or list(b) != sorted(set(b)):
                raise ValueError(f"{name} must be strictly increasing positive integers, got {b}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def budgets(self, method):
        return self.landmarks if method == "pbrff" else self.rounds

    def grid(self, method):
        if method == "pbrff":
            return [(b, c) for b in self.beta_grid for c in self.svm_c_grid]
        return [(c, v) for c in self.c_grid for v in self.v_grid]

    def fast(self):
        """Desk-scale profile: reduced boosting grid, 5 splits, the 6 smallest datasets."""
        return replace(self, datasets=SMALLEST, c_grid=FAST_C_GRID, v_grid=FAST_V_GRID,
                       plan=replace(self.plan, n_repeats=FAST_SPLITS))


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    method: str
    split_index: int
    chosen_hyperparameters: str
    test_accuracy: float
    train_time_seconds: float
    landmark_budget: int


def format_point(method, point):
    a, b = point
    if method == "pbrff":
        return f"beta={a!r};C={b!r}"
    return f"c={a!r};v={b!r}"


def _accuracy(raw, y):
    return float(np.mean(np.where(raw >= 0, 1, -1) == y))


# -- per-method cross-validation and refit ------------------------------------

def _gbrff_config(cfg, method, seed, t_rounds):
    mode = "random" if method == "gbrff_random" else "learned"
    return GbrffConfig(t_rounds=t_rounds, k_features=cfg.k_features, descent=cfg.descent,
                       landmark_mode=mode, seed=seed, bandwidth=cfg.bandwidth)


def _gbrff_scores(cfg, method, train, folds, grid, task_seed):
    """(n_budgets, n_grid) mean validation accuracies."""
    budgets = cfg.budgets(method)
    scores = np.zeros((len(budgets), len(grid)))
    for k, (fit_idx, val_idx) in enumerate(folds):
        gcfg = _gbrff_config(cfg, method, derive_seed(task_seed, k + 1), budgets[-1])
        res = fit_lanes(train.x[fit_idx], train.y[fit_idx], grid, gcfg,
                        eval_points=train.x[val_idx], budgets=budgets, keep_models=False)
        for i, b in enumerate(budgets):
            scores[i] += np.mean(np.where(res.staged_eval[b] >= 0, 1, -1) == train.y[val_idx], axis=1)
    return scores / len(folds)


def _gbrff_refit(cfg, method, train, test, points, task_seed):
    budgets = cfg.budgets(method)
    lanes = sorted(set(points), key=points.index)
    gcfg = _gbrff_config(cfg, method, task_seed, budgets[-1])
    res = fit_lanes(train.x, train.y, lanes, gcfg, eval_points=test.x, budgets=budgets, keep_models=False)
    return [_accuracy(res.staged_eval[b][lanes.index(p)], test.y) for b, p in zip(budgets, points)]


def _pbrff_features(cfg, rep, x_fit, points_list):
    """Mapped features of every point set, for every beta: {beta: [F_0, F_1, ...]}."""
    out = {beta: [np.empty((p.shape[0], len(rep.indices))) for p in points_list] for beta in cfg.beta_grid}
    qmats = {beta: np.array([q.q for q in pbrff.representation_weights(rep, beta)]) for beta in cfg.beta_grid}
    betas = list(cfg.beta_grid)
    qstack = np.stack([qmats[b] for b in betas], axis=1)  # (n_L, n_beta, K)
    for t, (i, rff) in enumerate(zip(rep.indices, rep.rffs)):
        for m, pts in enumerate(points_list):
            vals = np.clip(np.cos((x_fit[i] - pts) @ rff.omegas.T) @ qstack[t].T, -1.0, 1.0)
            for bi, beta in enumerate(betas):
                out[beta][m][:, t] = vals[:, bi]
    return out


def _svm_accuracies(cfg, f_fit, y_fit, f_eval, y_eval, lanes):
    """Accuracy on ``f_eval`` of the SVM of each ``(svm_c, width)`` lane."""
    cs = [c for c, _ in lanes]
    widths = [w for _, w in lanes]
    weights, bias, _ = pbrff.train_linear_lanes(f_fit, y_fit, cs, cfg.svm_epochs, widths)
    raw = f_eval @ weights + bias
    return np.mean(np.where(raw >= 0, 1, -1) == y_eval[:, None], axis=0)


def _pbrff_scores(cfg, train, folds, grid, task_seed):
    budgets = cfg.landmarks
    scores = np.zeros((len(budgets), len(grid)))
    lanes = [(svm_c, b) for svm_c in cfg.svm_c_grid for b in budgets]
    for k, (fit_idx, val_idx) in enumerate(folds):
        seed = derive_seed(task_seed, k + 1)
        x_fit, y_fit = train.x[fit_idx], train.y[fit_idx]
        rep = pbrff.learn_representation(x_fit, y_fit, budgets[-1], cfg.k_features, seed, cfg.bandwidth)
        feats = _pbrff_features(cfg, rep, x_fit, [x_fit, train.x[val_idx]])
        for beta in cfg.beta_grid:
            f_fit, f_val = feats[beta]
            accs = _svm_accuracies(cfg, f_fit, y_fit, f_val, train.y[val_idx], lanes)
            for (svm_c, b), acc in zip(lanes, accs):
                scores[budgets.index(b), grid.index((beta, svm_c))] += acc
    return scores / len(folds)


def _pbrff_refit(cfg, train, test, points, task_seed):
    budgets = cfg.landmarks
    rep = pbrff.learn_representation(train.x, train.y, budgets[-1], cfg.k_features, task_seed, cfg.bandwidth)
    feats = _pbrff_features(cfg, rep, train.x, [train.x, test.x])
    out = []
    for b, (beta, svm_c) in zip(budgets, points):
        f_tr, f_te = feats[beta]
        out.append(float(_svm_accuracies(cfg, f_tr[:, :b], train.y, f_te[:, :b], test.y, [(svm_c, b)])[0]))
    return out


def select_point(scores, grid):
    """Best mean score; ``argmax`` returns the first grid point on ties."""
    return grid[int(np.argmax(scores))]


def grid_search_cv(train, method, cfg, seed, budget_index=-1):
    """Chosen grid point for ``method`` by k-fold CV on ``train``.

    ``train`` should already be standardized. Returns the point for the
    budget slot ``budget_index`` (the largest budget by default).
    """
    grid = cfg.grid(method)
    if len(grid) == 1:
        return grid[0]
    return select_point(_cv_scores(cfg, method, train, seed)[budget_index], grid)


def _cv_scores(cfg, method, train, task_seed, fold_seed=None):
    fold_seed = task_seed if fold_seed is None else fold_seed
    folds = make_folds(np.arange(train.n), cfg.plan.fold_count, fold_seed)
    grid = cfg.grid(method)
    if method == "pbrff":
        return _pbrff_scores(cfg, train, folds, grid, task_seed)
    return _gbrff_scores(cfg, method, train, folds, grid, task_seed)


def task_seeds(cfg, dataset, split_index, method):
    """Model seed of a task and the method-independent seed of its CV folds."""
    return (derive_seed(cfg.seed, dataset, split_index, method),
            derive_seed(cfg.seed, dataset, split_index, "folds"))


def run_task(cfg, ds, split_index, train_idx, test_idx, method):
    """CV, refit and test one (dataset, split, method); one record per budget slot."""
    start = time.perf_counter()
    train, (test,) = standardize(ds.subset(train_idx), [ds.subset(test_idx)])
    task_seed, fold_seed = task_seeds(cfg, ds.name, split_index, method)
    grid = cfg.grid(method)
    budgets = cfg.budgets(method)
    if len(grid) == 1:
        points = [grid[0]] * len(budgets)
    else:
        scores = _cv_scores(cfg, method, train, task_seed, fold_seed)
        points = [select_point(s, grid) for s in scores]
    if method == "pbrff":
        accs = _pbrff_refit(cfg, train, test, points, task_seed)
    else:
        accs = _gbrff_refit(cfg, method, train, test, points, task_seed)
    elapsed = time.perf_counter() - start
    return [RunRecord(ds.name, method, split_index, format_point(method, p), a, elapsed, b)
            for b, p, a in zip(budgets, points, accs)]


# -- orchestration ------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _load(name, dataset_dir):
    return load_and_binarize(resolve_spec(name, dataset_dir))


def _task_worker(cfg, name, split_index, method):
    ds = _load(name, cfg.dataset_dir)
    train_idx, test_idx = make_splits(ds.n, cfg.plan)[split_index]
    return run_task(cfg, ds, split_index, train_idx, test_idx, method)


@dataclass
class BenchResult:
    records: list
    summary: list
    sweep: list
    failures: dict  # dataset -> error message


def _order(cfg):
    ds_rank = {d: i for i, d in enumerate(cfg.datasets)}
    m_rank = {m: i for i, m in enumerate(METHODS)}
    return lambda r: (ds_rank.get(r.dataset, len(ds_rank)), r.dataset, m_rank[r.method], r.split_index, r.landmark_budget)


def run_benchmark(cfg):
    """Run every (dataset, split, method) task; failures are isolated per dataset."""
    failures = {}
    tasks = []
    for name in cfg.datasets:
        try:
            ds = _load(name, cfg.dataset_dir)
            n_splits = len(make_splits(ds.n, cfg.plan))
        except Exception as exc:  # noqa: BLE001 -- any load error is reported, not fatal
            log.error("dataset %s failed to load: %s", name, exc)
            failures[name] = f"{type(exc).__name__}: {exc}"
            continue
        tasks += [(name, s, m) for s in range(n_splits) for m in cfg.methods]

    records = []

    def collect(task, result_fn):
        name = task[0]
        if name in failures:
            return
        try:
            records.extend(result_fn())
        except Exception as exc:  # noqa: BLE001
            log.error("dataset %s failed on split %d / %s: %s", name, task[1], task[2], exc)
            failures[name] = f"{type(exc).__name__}: {exc}"

    if cfg.workers == 1:
        for task in tasks:
            log.info("task %s split %d %s", *task)
            collect(task, lambda t=task: _task_worker(cfg, *t))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [(t, pool.submit(_task_worker, cfg, *t)) for t in tasks]
            for task, fut in futures:
                collect(task, fut.result)

    records = sorted((r for r in records if r.dataset not in failures), key=_order(cfg))
    summary = summarize(records, cfg)
    return BenchResult(records, summary, sweep_table(summary, cfg), failures)


def summarize(records, cfg):
    """Per (dataset, method, budget) mean/std and ranks, plus average-rank rows."""
    groups = {}
    for r in records:
        groups.setdefault((r.dataset, r.method, r.landmark_budget), []).append(r.test_accuracy)
    rows = []
    for (dataset, method, budget), accs in groups.items():
        accs = np.array(accs)
        std = float(accs.std(ddof=1)) if accs.size > 1 else 0.0
        rows.append({"dataset": dataset, "method": method, "landmark_budget": budget,
                     "n_splits": int(accs.size), "mean_accuracy": float(accs.mean()),
                     "std_accuracy": std, "rank": math.nan})
    # rank methods within each (dataset, budget slot); 1 is best, ties share the average rank
    slot = {m: {b: i for i, b in enumerate(cfg.budgets(m))} for m in METHODS}
    by_slot = {}
    for row in rows:
        by_slot.setdefault((row["dataset"], slot[row["method"]][row["landmark_budget"]]), []).append(row)
    for group in by_slot.values():
        for row, rank in zip(group, rankdata([-row["mean_accuracy"] for row in group], method="average")):
            row["rank"] = float(rank)
    rows.sort(key=lambda r: _order(cfg)(RunRecord(r["dataset"], r["method"], 0, "", 0.0, 0.0, r["landmark_budget"])))
    averages = []
    for method in METHODS:
        for budget in cfg.budgets(method):
            sel = [r for r in rows if r["method"] == method and r["landmark_budget"] == budget]
            if sel:
                averages.append({"dataset": AVERAGE_ROW, "method": method, "landmark_budget": budget,
                                 "n_splits": sum(r["n_splits"] for r in sel),
                                 "mean_accuracy": float(np.mean([r["mean_accuracy"] for r in sel])),
                                 "std_accuracy": math.nan,
                                 "rank": float(np.mean([r["rank"] for r in sel]))})
    return rows + averages


def sweep_table(summary, cfg):
    """Per budget slot and method: mean accuracy across datasets and win count.

    A dataset counts as a win for every method tied at its best mean. The
    reported budget is the boosting budget of the slot.
    """
    rows = [r for r in summary if r["dataset"] != AVERAGE_ROW]
    slot = {m: {b: i for i, b in enumerate(cfg.budgets(m))} for m in METHODS}
    out = []
    for i, budget in enumerate(cfg.rounds):
        at = [r for r in rows if slot[r["method"]][r["landmark_budget"]] == i]
        best = {}
        for r in at:
            best[r["dataset"]] = max(best.get(r["dataset"], -1.0), r["mean_accuracy"])
        for method in METHODS:
            mine = [r for r in at if r["method"] == method]
            if not mine:
                continue
            wins = sum(1 for r in mine if r["mean_accuracy"] >= best[r["dataset"]])
            out.append({"budget": budget, "method": method,
                        "mean_accuracy": float(np.mean([r["mean_accuracy"] for r in mine])),
                        "win_count": wins})
    return out


def landmark_sweep(cfg):
    return run_benchmark(cfg)


# -- output ---------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.6f}"
    return str(value)


def _write_csv(path, fields, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(fields)
            for row in rows:
                w.writerow([_fmt(row[f]) for f in fields])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_results(records, summary, path, sweep=None):
    """Write runs.csv, summary.csv, timings.csv and, for sweeps, sweep.csv under ``path``.

    Timings live in their own file so the other three are reproducible byte for byte.
    """
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror or exc}") from exc
    runs = [r.__dict__ for r in records]
    written = [os.path.join(path, "runs.csv"), os.path.join(path, "summary.csv"), os.path.join(path, "timings.csv")]
    _write_csv(written[0], RUN_FIELDS, runs)
    _write_csv(written[1], SUMMARY_FIELDS, summary)
    _write_csv(written[2], TIMING_FIELDS, _timings(records))
    if sweep is not None:
        written.append(os.path.join(path, "sweep.csv"))
        _write_csv(written[-1], SWEEP_FIELDS, sweep)
    return written


def _timings(records):
    seen = {}
    for r in records:
        seen.setdefault((r.dataset, r.method, r.split_index), r.train_time_seconds)
    return [{"dataset": d, "method": m, "split_index": s, "train_time_seconds": t}
            for (d, m, s), t in seen.items()]
