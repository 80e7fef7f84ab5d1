"""Two-step landmark baseline: per-landmark RFF posteriors, then a linear SVM.

Landmark t (1-based) is the training row drawn from ``derive_seed(seed, t, 1)``
and its frequencies come from ``derive_seed(seed, t)``. A model with n_L
landmarks is therefore a prefix of any model with more landmarks under the
same seed, which the landmark sweeps rely on.
"""
import math
from dataclasses import dataclass

import numpy as np

from .rff import SimplexWeights, derive_seed, kernel_value, sample_rff, softmin_weights

SVM_EPOCHS = 200


@dataclass(frozen=True, eq=False)
class PbrffModel:
    landmarks: tuple      # (point, label) pairs
    per_landmark: tuple   # (RffSet, SimplexWeights) pairs
    weights: np.ndarray
    bias: float

    def __post_init__(self):
        if len(self.landmarks) != len(self.per_landmark):
            raise ValueError(f"{len(self.landmarks)} landmarks but {len(self.per_landmark)} posteriors")
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(self.landmarks),):
            raise ValueError(f"linear weights shape {w.shape} does not match {len(self.landmarks)} landmarks")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n_landmarks(self):
        return len(self.landmarks)

    @property
    def dim(self):
        return self.per_landmark[0][0].dim if self.per_landmark else None


def _feature_cosines(omegas, landmark, points):
    # (n, K) matrix of cos(omega_j . (landmark - x_i))
    return np.cos((landmark - points) @ omegas.T)


def alignment_losses(rff, landmark, label, points, labels):
    """Linear alignment loss of every feature of ``rff`` for one landmark.

    ``points`` and ``labels`` are the comparison set (the landmark row already
    removed). Returns a length-K vector in [0, 1].
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    labels = np.asarray(labels, dtype=float)
    if points.shape[0] == 0:
        raise ValueError("alignment loss needs a non-empty comparison set")
    if points.shape[1] != rff.dim or labels.shape != (points.shape[0],):
        raise ValueError(f"comparison set shape {points.shape}/{labels.shape} does not match dim {rff.dim}")
    cos = _feature_cosines(rff.omegas, np.asarray(landmark, dtype=float), points)
    agree = float(label) * labels
    return np.clip(0.5 - 0.5 * (agree @ cos) / points.shape[0], 0.0, 1.0)


def alignment_loss(j, rff, landmark, points, labels):
    """Loss of feature ``j`` for a ``(point, label)`` landmark; see :func:`alignment_losses`."""
    point, label = landmark
    return float(alignment_losses(rff, point, label, points, labels)[j])


def compute_q_pbrff(losses, beta, n):
    """Weights proportional to ``exp(-beta sqrt(n) losses)``."""
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta!r}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n!r}")
    losses = np.asarray(losses, dtype=float)
    if beta == 0:
        return SimplexWeights.uniform(losses.size)
    return SimplexWeights(softmin_weights(beta * math.sqrt(n) * losses))


def map_features(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.array([kernel_value(rff, q, point, x)
                         for (point, _), (rff, q) in zip(model.landmarks, model.per_landmark)])
    return map_points(model, x)


def map_points(model, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if model.per_landmark and points.shape[1] != model.dim:
        raise ValueError(f"input dimension {points.shape[1]} does not match model dimension {model.dim}")
    out = np.empty((points.shape[0], model.n_landmarks))
    for t, ((point, _), (rff, q)) in enumerate(zip(model.landmarks, model.per_landmark)):
        out[:, t] = _feature_cosines(rff.omegas, point, points) @ q.q
    return np.clip(out, -1.0, 1.0)


def hinge_objective(features, labels, weights, bias, lam):
    margins = labels * (features @ weights + bias)
    return 0.5 * lam * (weights @ weights + bias * bias) + np.maximum(0.0, 1.0 - margins).mean()


@dataclass
class LinearFit:
    weights: np.ndarray
    bias: float
    objective: np.ndarray  # per-epoch objective of the returned iterate so far


def train_linear(features, labels, c_param, epochs=SVM_EPOCHS, seed=0):
    """L2-regularized hinge loss by full-batch projected subgradient descent.

    See :func:`train_linear_lanes`; ``seed`` is accepted for interface
    stability, the full-batch method consumes no randomness.
    """
    w, b, trace = train_linear_lanes(features, labels, [c_param], epochs)
    return LinearFit(w[:, 0], float(b[0]), trace[:, 0])


def train_linear_lanes(features, labels, c_params, epochs=SVM_EPOCHS, widths=None):
    """Solve several hinge-loss problems on one feature matrix at once.

    Lane m minimizes ``lam/2 (|w|^2 + b^2) + mean(hinge)`` with
    ``lam = 1 / (c_params[m] n)`` using only the first ``widths[m]`` feature
    columns (all of them by default). The bias is an extra constant feature
    regularized with the weights. Steps are ``1 / (lam t)``; iterates are
    projected on the ball of radius ``1 / sqrt(lam)`` that holds the optimum.
    After each epoch the running average of the iterates is scored and the
    best average so far is kept, so the returned objective trace never
    increases.

    Returns ``(weights (p, M), bias (M,), objective trace (epochs, M))``.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=float)
    n, p = x.shape
    if n < 1 or y.shape != (n,):
        raise ValueError(f"bad shapes {x.shape} / {y.shape}")
    c_params = np.asarray(c_params, dtype=float)
    if not np.all(c_params > 0):
        raise ValueError(f"c_param must be positive, got {c_params.tolist()!r}")
    if int(epochs) != epochs or epochs < 1:
        raise ValueError(f"epochs must be a positive integer, got {epochs!r}")
    m = c_params.size
    widths = np.full(m, p) if widths is None else np.asarray(widths, dtype=int)
    mask = np.vstack([np.arange(p)[:, None] < widths[None, :], np.ones((1, m), dtype=bool)])
    xa = np.hstack([x, np.ones((n, 1))])
    lam = 1.0 / (c_params * n)
    radius = 1.0 / np.sqrt(lam)
    w = np.zeros((p + 1, m))
    avg = np.zeros_like(w)
    best, best_obj = avg.copy(), np.full(m, np.inf)
    trace = np.empty((int(epochs), m))
    for t in range(1, int(epochs) + 1):
        viol = (y[:, None] * (xa @ w)) < 1.0
        sub = (xa.T @ (viol * y[:, None])) / n
        sub *= mask
        # (1 - eta lam) w + eta sub with eta = 1 / (lam t)
        w = (1.0 - 1.0 / t) * w + sub / (lam * t)
        norm = np.sqrt(np.einsum("pm,pm->m", w, w))
        w *= np.where(norm > radius, radius / np.where(norm > 0, norm, 1.0), 1.0)
        avg += (w - avg) / t
        obj = 0.5 * lam * np.einsum("pm,pm->m", avg, avg) \
            + np.maximum(0.0, 1.0 - y[:, None] * (xa @ avg)).mean(axis=0)
        better = obj <= best_obj
        best[:, better] = avg[:, better]
        best_obj = np.where(better, obj, best_obj)
        trace[t - 1] = best_obj
    return best[:-1], best[-1], trace


def sample_landmarks(n, n_landmarks, seed, start=1):
    """Row indices of landmarks ``start..n_landmarks`` (with replacement)."""
    return np.array([np.random.default_rng(derive_seed(seed, t, 1)).integers(n)
                     for t in range(start, n_landmarks + 1)], dtype=int)


@dataclass(frozen=True, eq=False)
class Representation:
    """Landmarks with their frequency draws and per-feature alignment losses."""

    indices: np.ndarray
    rffs: tuple
    losses: np.ndarray  # (n_L, K)
    n: int


def learn_representation(x, y, n_landmarks, k_features, seed, bandwidth=1.0):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    if n < 2:
        raise ValueError("need at least 2 training points")
    idx = sample_landmarks(n, n_landmarks, seed)
    rffs, losses = [], []
    for t, i in enumerate(idx, start=1):
        rff = sample_rff(k_features, d, derive_seed(seed, t), bandwidth)
        keep = np.arange(n) != i
        losses.append(alignment_losses(rff, x[i], y[i], x[keep], y[keep]))
        rffs.append(rff)
    return Representation(idx, tuple(rffs), np.array(losses), n)


def representation_weights(rep, beta):
    return [compute_q_pbrff(l, beta, rep.n) for l in rep.losses]


def build_model(x, y, rep, qs, fit):
    x = np.asarray(x, dtype=float)
    landmarks = tuple((x[i].copy(), int(y[i])) for i in rep.indices[:len(qs)])
    return PbrffModel(landmarks, tuple(zip(rep.rffs, qs)), fit.weights, fit.bias)


def fit_pbrff(train, n_landmarks, k_features, beta, c_param, seed, epochs=SVM_EPOCHS, bandwidth=1.0):
    if int(n_landmarks) != n_landmarks or n_landmarks < 1:
        raise ValueError(f"n_landmarks must be a positive integer, got {n_landmarks!r}")
    rep = learn_representation(train.x, train.y, n_landmarks, k_features, seed, bandwidth)
    qs = representation_weights(rep, beta)
    shell = PbrffModel(tuple((train.x[i], int(train.y[i])) for i in rep.indices),
                       tuple(zip(rep.rffs, qs)), np.zeros(len(qs)), 0.0)
    fit = train_linear(map_points(shell, train.x), train.y, c_param, epochs, seed)
    return build_model(train.x, train.y, rep, qs, fit)


def predict_raw(model, x):
    feats = map_points(model, x)
    raw = feats @ model.weights + model.bias
    return float(raw[0]) if np.asarray(x).ndim == 1 else raw


def predict(model, x):
    raw = np.asarray(predict_raw(model, x))
    out = np.where(raw >= 0, 1, -1)
    return int(out) if out.ndim == 0 else out


def kl_uniform(q):
    q = np.asarray(q.q if isinstance(q, SimplexWeights) else q, dtype=float)
    nz = q > 0
    return float(max(0.0, np.sum(q[nz] * np.log(q.size * q[nz]))))


def pac_bayes_bound(emp_losses, q, s, epsilon, n):
    """Bound value ``E_q[L] + (KL(q || uniform) + s^2 / (2(n-1)) + ln(1/epsilon)) / s``."""
    emp_losses = np.asarray(emp_losses, dtype=float)
    if not s > 0:
        raise ValueError(f"s must be positive, got {s!r}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon!r}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n!r}")
    if emp_losses.shape != (len(q),):
        raise ValueError(f"{emp_losses.size} losses for {len(q)} weights")
    if np.any(emp_losses < 0) or np.any(emp_losses > 1) or not np.all(np.isfinite(emp_losses)):
        raise ValueError("empirical losses must lie in [0, 1]")
    return float(q.q @ emp_losses + (kl_uniform(q) + s * s / (2.0 * (n - 1)) + math.log(1.0 / epsilon)) / s)
