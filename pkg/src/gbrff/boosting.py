"""Least-squares gradient boosting over learned RFF landmark kernels."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .base_learner import BaseLearner, LandmarkDescentConfig, Projection, descend
from .rff import SimplexWeights, derive_seed, sample_rff, softmin_weights

log = logging.getLogger(__name__)

LANDMARK_MODES = ("learned", "random")
PATIENCE = 10
PATIENCE_RTOL = 1e-6


class DegenerateLearnerError(ValueError):
    """A base learner whose outputs are all zero on the training set."""


@dataclass(frozen=True)
class GbrffConfig:
    t_rounds: int = 200
    k_features: int = 100
    v: float = 1.0
    c: float = 0.0
    descent: LandmarkDescentConfig = field(default_factory=LandmarkDescentConfig)
    landmark_mode: str = "learned"
    seed: int = 0
    bandwidth: float = 1.0
    early_stop: bool = False

    def __post_init__(self):
        if int(self.t_rounds) != self.t_rounds or self.t_rounds < 1:
            raise ValueError(f"t_rounds must be a positive integer, got {self.t_rounds!r}")
        if int(self.k_features) != self.k_features or self.k_features < 1:
            raise ValueError(f"k_features must be a positive integer, got {self.k_features!r}")
        _check_lane(self.c, self.v)
        if self.landmark_mode not in LANDMARK_MODES:
            raise ValueError(f"landmark_mode must be one of {LANDMARK_MODES}, got {self.landmark_mode!r}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")


def _check_lane(c, v):
    if not 0 < v <= 1:
        raise ValueError(f"learning rate v must be in (0, 1], got {v!r}")
    if not c >= 0:
        raise ValueError(f"c must be non-negative, got {c!r}")


@dataclass(frozen=True, eq=False)
class Ensemble:
    h0: float
    v: float
    rounds: tuple = ()
    skipped: int = 0

    @property
    def dim(self):
        return self.rounds[0][1].rff.dim if self.rounds else None


def init_h0(labels):
    labels = np.asarray(labels, dtype=float)
    if labels.size == 0:
        raise ValueError("cannot initialise from an empty label vector")
    return float(labels.mean())


def residuals(labels, raw_predictions):
    labels = np.asarray(labels, dtype=float)
    raw_predictions = np.asarray(raw_predictions, dtype=float)
    if labels.shape != raw_predictions.shape:
        raise ValueError(f"length mismatch: {labels.shape} vs {raw_predictions.shape}")
    return labels - raw_predictions


def optimal_step(resid, base_outputs):
    """Exact line search: the alpha minimising ``sum (resid - alpha h)^2``."""
    resid = np.asarray(resid, dtype=float)
    base_outputs = np.asarray(base_outputs, dtype=float)
    if resid.shape != base_outputs.shape:
        raise ValueError(f"length mismatch: {resid.shape} vs {base_outputs.shape}")
    den = float(base_outputs @ base_outputs)
    if not den > 0:
        raise DegenerateLearnerError("base learner outputs are all zero")
    return float(resid @ base_outputs) / den


@dataclass
class LaneFit:
    """Output of :func:`fit_lanes`.

    ``ensembles`` is None when models were not kept. ``staged_eval`` maps a
    round count to the (n_lanes, n_eval) raw predictions on ``eval_points``
    after that many rounds. ``train_mse`` has one row per round (row 0 is the
    constant model).
    """

    ensembles: list
    staged_eval: dict
    train_mse: np.ndarray
    skipped: np.ndarray


def fit_lanes(x, y, lanes, cfg, eval_points=None, budgets=(), keep_models=True):
    """Boost one ensemble per ``(c, v)`` lane on shared frequency draws.

    Every lane sees the same ``Omega^t`` (drawn from ``derive_seed(cfg.seed,
    t)``) and, in random mode, the same landmark index; lanes differ only
    through their residuals. ``cfg.c`` and ``cfg.v`` are ignored in favour of
    the lane values.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError(f"bad training shapes {x.shape} / {y.shape}")
    if not np.all(np.abs(y) == 1):
        raise ValueError("labels must be in {-1, +1}")
    n, d = x.shape
    cs = np.array([float(c) for c, _ in lanes])
    vs = np.array([float(v) for _, v in lanes])
    for c, v in zip(cs, vs):
        _check_lane(c, v)
    n_lanes = len(lanes)
    budgets = sorted(set(int(b) for b in budgets))

    h0 = init_h0(y)
    raw = np.full((n_lanes, n), h0)
    rounds = [[] for _ in range(n_lanes)]
    skipped = np.zeros(n_lanes, dtype=int)
    mse = np.full((cfg.t_rounds + 1, n_lanes), np.nan)
    mse[0] = np.mean((y - raw) ** 2, axis=1)
    stalled = np.zeros(n_lanes, dtype=int)
    alive = np.ones(n_lanes, dtype=bool)
    staged = {}
    if eval_points is not None:
        eval_points = np.asarray(eval_points, dtype=float)
        eval_raw = np.full((n_lanes, eval_points.shape[0]), h0)
        if 0 in budgets:
            staged[0] = eval_raw.copy()

    for t in range(1, cfg.t_rounds + 1):
        act = np.flatnonzero(alive)
        if act.size == 0:
            break
        rff = sample_rff(cfg.k_features, d, derive_seed(cfg.seed, t), cfg.bandwidth)
        proj = Projection(rff.omegas, x)
        resid = y - raw[act]
        if cfg.landmark_mode == "learned":
            # start from the worst-fit training point; argmax keeps the lowest index on ties
            init = x[np.argmax(np.abs(resid), axis=1)]
            lm = descend(proj, resid, init, cfg.descent)
        else:
            pick = np.random.default_rng(derive_seed(cfg.seed, t, 1)).integers(n)
            lm = np.repeat(x[pick][None, :], act.size, axis=0)

        scores = cs[act, None] * proj.feature_losses(lm, resid)
        q = softmin_weights(scores)
        h = proj.weighted_kernel(lm, q)
        num = np.einsum("gi,gi->g", resid, h)
        den = np.einsum("gi,gi->g", h, h)
        ok = den > 0
        alpha = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
        if not np.all(ok):
            skipped[act[~ok]] += 1
            log.warning("round %d: %d degenerate learner(s) skipped", t, int((~ok).sum()))
        raw[act] += (vs[act] * alpha)[:, None] * h

        if keep_models:
            for k, g in enumerate(act):
                if ok[k]:
                    learner = BaseLearner(lm[k], rff, SimplexWeights(q[k]))
                    rounds[g].append((float(alpha[k]), learner))
        if eval_points is not None:
            he = Projection(rff.omegas, eval_points).weighted_kernel(lm, q)
            eval_raw[act] += (vs[act] * alpha)[:, None] * he
            if t in budgets:
                staged[t] = eval_raw.copy()

        mse[t] = np.mean((y - raw) ** 2, axis=1)
        if cfg.early_stop:
            prev, cur = mse[t - 1, act], mse[t, act]
            small = (prev - cur) <= PATIENCE_RTOL * np.maximum(prev, np.finfo(float).tiny)
            stalled[act] = np.where(small, stalled[act] + 1, 0)
            alive &= stalled < PATIENCE

    if eval_points is not None:
        # budgets past an early stop see the final model
        for b in budgets:
            staged.setdefault(b, eval_raw.copy())
    ensembles = None
    if keep_models:
        ensembles = [Ensemble(h0=h0, v=float(vs[g]), rounds=tuple(rounds[g]), skipped=int(skipped[g]))
                     for g in range(n_lanes)]
    return LaneFit(ensembles, staged, mse, skipped)


def fit(train, cfg):
    """Train a GBRFF ensemble on a :class:`~gbrff.data.Dataset`."""
    return fit_lanes(train.x, train.y, [(cfg.c, cfg.v)], cfg).ensembles[0]


def _as_points(ens, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if ens.rounds and pts.shape[1] != ens.dim:
        raise ValueError(f"input dimension {pts.shape[1]} does not match model dimension {ens.dim}")
    return pts, single


def staged_predict_raw(ens, x):
    """Raw predictions after 0, 1, ..., len(rounds) rounds."""
    pts, single = _as_points(ens, x)
    raw = np.full(pts.shape[0], ens.h0)
    yield raw[0] if single else raw.copy()
    for alpha, learner in ens.rounds:
        raw = raw + ens.v * alpha * learner.predict(pts)
        yield raw[0] if single else raw.copy()


def predict_raw(ens, x):
    pts, single = _as_points(ens, x)
    raw = np.full(pts.shape[0], ens.h0)
    for alpha, learner in ens.rounds:
        raw += ens.v * alpha * learner.predict(pts)
    return float(raw[0]) if single else raw


def sign(raw):
    """Sign with sign(0) = +1."""
    out = np.where(np.asarray(raw) >= 0, 1, -1)
    return int(out) if out.ndim == 0 else out


def predict(ens, x):
    return sign(predict_raw(ens, x))
