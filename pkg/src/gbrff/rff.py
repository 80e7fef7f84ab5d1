"""Random Fourier features of the Gaussian kernel.

The Gaussian kernel ``exp(-||delta||^2 / 2)`` is the expectation of
``cos(omega . delta)`` under a standard normal ``omega``. A finite draw of K
frequencies plus a weighting on the simplex gives the landmark kernels used by
both learners in this package.
"""
import zlib
from dataclasses import dataclass

import numpy as np

SIMPLEX_ATOL = 1e-12


def derive_seed(seed, *keys):
    """Child seed of ``seed`` for the stream identified by ``keys``.

    Keys are non-negative ints or strings (hashed with crc32). The result is a
    64-bit int built from ``SeedSequence(seed, spawn_key=keys)``, so it is
    portable and independent of call order.
    """
    spawn_key = tuple(zlib.crc32(k.encode("utf-8")) if isinstance(k, str) else int(k)
                      for k in keys)
    words = np.random.SeedSequence(int(seed), spawn_key=spawn_key).generate_state(2)
    return (int(words[0]) << 32) | int(words[1])


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class RffSet:
    """K frequency vectors (rows of ``omegas``) drawn for one kernel."""

    omegas: np.ndarray
    seed: int = 0
    bandwidth: float = 1.0

    def __post_init__(self):
        omegas = _readonly(self.omegas)
        if omegas.ndim != 2 or omegas.shape[0] < 1 or omegas.shape[1] < 1:
            raise ValueError(f"omegas must be a non-empty K x d matrix, got shape {omegas.shape}")
        object.__setattr__(self, "omegas", omegas)

    @property
    def k_count(self):
        return self.omegas.shape[0]

    @property
    def dim(self):
        return self.omegas.shape[1]


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    q: np.ndarray

    def __post_init__(self):
        q = _readonly(self.q)
        if q.ndim != 1 or q.size < 1:
            raise ValueError("simplex weights must be a non-empty vector")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise ValueError("simplex weights must be finite and non-negative")
        if abs(q.sum() - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"simplex weights sum to {q.sum()!r}, not 1")
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, k_count):
        return cls(np.full(k_count, 1.0 / k_count))

    def __len__(self):
        return self.q.size


def softmin_weights(scores):
    """Weights proportional to ``exp(-scores)``, computed with a min shift.

    Falls back to uniform if the shifted exponentials are not usable (only
    possible with non-finite scores).
    """
    scores = np.asarray(scores, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        shifted = scores - scores.min(axis=-1, keepdims=True)
        w = np.exp(-shifted)
        z = w.sum(axis=-1, keepdims=True)
    bad = ~np.isfinite(z[..., 0]) | (z[..., 0] <= 0)
    if np.any(bad):
        w[bad] = 1.0
        z[bad] = w.shape[-1]
    return w / z


def sample_rff(k_count, dim, seed, bandwidth=1.0):
    """Draw ``k_count`` frequencies in ``dim`` dimensions.

    Frequencies are standard normal divided by ``bandwidth`` (the Fourier
    transform of a Gaussian kernel of that width). The draw is a pure function
    of ``(k_count, dim, seed, bandwidth)``.
    """
    if int(k_count) != k_count or k_count < 1:
        raise ValueError(f"k_count must be a positive integer, got {k_count!r}")
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    rng = np.random.default_rng(int(seed))
    omegas = rng.standard_normal((int(k_count), int(dim)))
    if bandwidth != 1.0:
        omegas = omegas / bandwidth
    return RffSet(omegas, seed=int(seed), bandwidth=float(bandwidth))


def _check_vector(name, v, dim):
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {v.shape}")
    return v


def kernel_value(rff, weights, landmark, x):
    """``sum_j q_j cos(omega_j . (landmark - x))`` for a single point."""
    if len(weights) != rff.k_count:
        raise ValueError(f"{len(weights)} weights for {rff.k_count} features")
    landmark = _check_vector("landmark", landmark, rff.dim)
    x = _check_vector("x", x, rff.dim)
    value = float(weights.q @ np.cos(rff.omegas @ (landmark - x)))
    return min(1.0, max(-1.0, value))


def kernel_values(rff, weights, landmark, points):
    """Vectorized :func:`kernel_value` over the rows of ``points``."""
    if len(weights) != rff.k_count:
        raise ValueError(f"{len(weights)} weights for {rff.k_count} features")
    landmark = _check_vector("landmark", landmark, rff.dim)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != rff.dim:
        raise ValueError(f"points have {points.shape[1]} columns, expected {rff.dim}")
    values = np.cos((landmark - points) @ rff.omegas.T) @ weights.q
    return np.clip(values, -1.0, 1.0)


def gaussian_kernel_exact(delta, bandwidth=1.0):
    delta = np.asarray(delta, dtype=float)
    return float(np.exp(-0.5 * np.dot(delta.ravel(), delta.ravel()) / bandwidth**2))
