"""One boosting round: landmark fitting and the pseudo-posterior over features.

All quantities are evaluated through :class:`Projection`, which caches
``cos`` and ``sin`` of ``X @ omegas.T`` for one frequency set. With
``a = omegas @ landmark`` the angle-addition identities

    cos(a_j - p_ij) = cos a_j cos p_ij + sin a_j sin p_ij
    sin(a_j - p_ij) = sin a_j cos p_ij - cos a_j sin p_ij

turn every evaluation into K trigonometric calls plus matrix products, and
let several landmarks ("lanes") be handled at once. Lanes are rows of the
landmark, residual and gap matrices.
"""
from dataclasses import dataclass

import numpy as np

from .rff import RffSet, SimplexWeights, kernel_value, kernel_values, softmin_weights

MAX_HALVINGS = 10


@dataclass(frozen=True)
class LandmarkDescentConfig:
    step_size: float = 1.0
    max_iterations: int = 100
    grad_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        if not self.grad_tolerance >= 0:
            raise ValueError(f"grad_tolerance must be non-negative, got {self.grad_tolerance!r}")


@dataclass(frozen=True, eq=False)
class BaseLearner:
    landmark: np.ndarray
    rff: RffSet
    q: SimplexWeights

    def __post_init__(self):
        landmark = np.array(self.landmark, dtype=float)
        if landmark.shape != (self.rff.dim,):
            raise ValueError(f"landmark shape {landmark.shape} does not match feature dim {self.rff.dim}")
        if len(self.q) != self.rff.k_count:
            raise ValueError(f"{len(self.q)} weights for {self.rff.k_count} features")
        landmark.flags.writeable = False
        object.__setattr__(self, "landmark", landmark)

    def predict(self, points):
        return kernel_values(self.rff, self.q, self.landmark, points)


def predict_base(learner, x):
    return kernel_value(learner.rff, learner.q, learner.landmark, x)


class Projection:
    """Cached projections of a point set on one set of frequencies.

    Lanes are rows: landmarks are (G, d), residuals and gaps are (G, n).
    """

    def __init__(self, omegas, points):
        self.omegas = np.asarray(omegas, dtype=float)
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.omegas.shape[1]:
            raise ValueError(f"points shape {points.shape} does not match feature dim {self.omegas.shape[1]}")
        proj = points @ self.omegas.T
        self.n, self.k = proj.shape
        # [cos p | sin p], shape (n, 2K)
        self.trig = np.hstack([np.cos(proj), np.sin(proj)])
        self._col_sums = None

    def angles(self, landmarks):
        """[cos a | sin a] for ``a = landmarks @ omegas.T``, shape (G, 2K)."""
        a = np.atleast_2d(landmarks) @ self.omegas.T
        return np.hstack([np.cos(a), np.sin(a)])

    def weighted_kernel(self, landmarks, weights):
        """(G, n) matrix of ``sum_j w_gj cos(omega_j . (l_g - x_i))``."""
        ang = self.angles(landmarks)
        return (ang * np.hstack([weights, weights])) @ self.trig.T

    def uniform_kernel(self, landmarks, ang=None):
        if ang is None:
            ang = self.angles(landmarks)
        return (ang @ self.trig.T) / self.k

    def loss(self, landmarks, residuals):
        """Mean squared gap between residuals and the uniform-weight kernel.

        Returns the per-lane losses, the (G, n) gap matrix and the angles,
        both reused by :meth:`gradient`.
        """
        ang = self.angles(landmarks)
        gap = residuals - self.uniform_kernel(landmarks, ang)
        return np.einsum("gi,gi->g", gap, gap) / self.n, gap, ang

    def gradient(self, gap, ang):
        k = self.k
        uw = gap @ self.trig
        # sum_i gap_i sin(a_j - p_ij) per lane and feature
        s = ang[:, k:] * uw[:, :k] - ang[:, :k] * uw[:, k:]
        return (2.0 / (self.n * k)) * (s @ self.omegas)

    def feature_losses(self, landmarks, residuals):
        """(G, K) losses of each single feature against the residuals.

        Expands ``sum_i (r_i - cos(a_j - p_ij))^2`` so that only column sums
        and matrix products are needed.
        """
        k = self.k
        if self._col_sums is None:
            c, s = self.trig[:, :k], self.trig[:, k:]
            self._col_sums = (np.einsum("ij,ij->j", c, c),
                              np.einsum("ij,ij->j", c, s),
                              np.einsum("ij,ij->j", s, s))
        cc, cs, ss = self._col_sums
        ang = self.angles(landmarks)
        ca, sa = ang[:, :k], ang[:, k:]
        r2 = np.einsum("gi,gi->g", residuals, residuals)[:, None]
        uw = residuals @ self.trig
        cross = ca * uw[:, :k] + sa * uw[:, k:]
        squares = ca * ca * cc + 2.0 * ca * sa * cs + sa * sa * ss
        return np.maximum(r2 - 2.0 * cross + squares, 0.0) / self.n


def descend(proj, residuals, init, cfg):
    """Batched gradient descent on :meth:`Projection.loss`, one lane per row of ``init``.

    A lane stops when its gradient infinity-norm is at most
    ``cfg.grad_tolerance``, after ``cfg.max_iterations`` accepted steps, or
    after ``MAX_HALVINGS`` consecutive halvings of its step failed to lower
    the loss. A step that would raise the loss is never taken, and a halved
    step size is kept for the rest of the descent.
    """
    lm = np.array(np.atleast_2d(init), dtype=float)
    residuals = np.asarray(residuals, dtype=float).reshape(-1, proj.n)
    loss, gap, ang = proj.loss(lm, residuals)
    grad = proj.gradient(gap, ang)
    n_lanes = lm.shape[0]
    step = np.full(n_lanes, float(cfg.step_size))
    taken = np.zeros(n_lanes, dtype=int)
    fails = np.zeros(n_lanes, dtype=int)
    live = np.ones(n_lanes, dtype=bool)
    while True:
        live &= ((taken < cfg.max_iterations) & (fails <= MAX_HALVINGS)
                 & (np.abs(grad).max(axis=1) > cfg.grad_tolerance))
        if live.all():
            idx = slice(None)
            cand = lm - step[:, None] * grad
            cand_loss, cand_gap, cand_ang = proj.loss(cand, residuals)
        else:
            idx = np.flatnonzero(live)
            if idx.size == 0:
                return lm
            cand = lm[idx] - step[idx, None] * grad[idx]
            cand_loss, cand_gap, cand_ang = proj.loss(cand, residuals[idx])
        ok = cand_loss <= loss[idx]
        acc = np.arange(n_lanes)[idx][ok]
        rej = np.arange(n_lanes)[idx][~ok]
        if acc.size:
            lm[acc] = cand[ok]
            loss[acc] = cand_loss[ok]
            grad[acc] = proj.gradient(cand_gap[ok], cand_ang[ok])
            taken[acc] += 1
            fails[acc] = 0
        step[rej] *= 0.5
        fails[rej] += 1


def _inputs(rff, residuals, points, landmark):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim != 1 or residuals.size < 1:
        raise ValueError("residuals must be a non-empty vector")
    if points.shape != (residuals.size, rff.dim):
        raise ValueError(f"points shape {points.shape} does not match ({residuals.size}, {rff.dim})")
    landmark = np.asarray(landmark, dtype=float)
    if landmark.shape != (rff.dim,):
        raise ValueError(f"landmark shape {landmark.shape} does not match ({rff.dim},)")
    return Projection(rff.omegas, points), residuals[None, :], landmark[None, :]


def landmark_loss(rff, residuals, points, landmark):
    proj, r, lm = _inputs(rff, residuals, points, landmark)
    return float(proj.loss(lm, r)[0][0])


def landmark_gradient(rff, residuals, points, landmark):
    proj, r, lm = _inputs(rff, residuals, points, landmark)
    _, gap, ang = proj.loss(lm, r)
    return proj.gradient(gap, ang)[0]


def optimize_landmark(rff, residuals, points, init, cfg=LandmarkDescentConfig()):
    proj, r, lm = _inputs(rff, residuals, points, init)
    return descend(proj, r, lm, cfg)[0]


def compute_q(rff, residuals, points, landmark, c):
    """Pseudo-posterior ``Q_j ∝ exp(-c f_j)`` where f_j is the single-feature loss."""
    if not c >= 0:
        raise ValueError(f"c must be non-negative, got {c!r}")
    proj, r, lm = _inputs(rff, residuals, points, landmark)
    if c == 0:
        return SimplexWeights.uniform(rff.k_count)
    return SimplexWeights(softmin_weights(c * proj.feature_losses(lm, r)[0]))
