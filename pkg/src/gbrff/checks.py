"""Numerical self-checks run by ``gbrff check``.

Each check compares a closed form against an independent numerical route:
the landmark gradient against central finite differences, the boosting step
against a bracketed golden-section search, and the RFF kernel against the
exact Gaussian kernel.
"""
from dataclasses import dataclass

import numpy as np

from .base_learner import landmark_gradient, landmark_loss
from .boosting import optimal_step
from .rff import SimplexWeights, derive_seed, gaussian_kernel_exact, kernel_value, sample_rff

FD_STEP = 1e-5
GRAD_RTOL = 1e-5
# coordinates below this are compared absolutely; finite differences carry ~1e-11 noise
GRAD_FLOOR = 1e-8
STEP_TOL = 1e-8
KERNEL_TOL = 0.05
GOLDEN = (np.sqrt(np.longdouble(5)) - 1) / 2


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def finite_difference_gradient(rff, residuals, points, landmark, h=FD_STEP):
    grad = np.empty(landmark.size)
    for k in range(landmark.size):
        e = np.zeros(landmark.size)
        e[k] = h
        grad[k] = (landmark_loss(rff, residuals, points, landmark + e)
                   - landmark_loss(rff, residuals, points, landmark - e)) / (2 * h)
    return grad


def relative_error(a, b, floor=GRAD_FLOOR):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def check_gradient(instances=50, seed=0):
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng(derive_seed(seed, "gradient", i))
        n, d, k = int(rng.integers(1, 51)), int(rng.integers(1, 11)), int(rng.integers(1, 21))
        rff = sample_rff(k, d, derive_seed(seed, "gradient-rff", i))
        points = rng.standard_normal((n, d))
        residuals = rng.standard_normal(n)
        landmark = rng.standard_normal(d)
        analytic = landmark_gradient(rff, residuals, points, landmark)
        numeric = finite_difference_gradient(rff, residuals, points, landmark)
        worst = max(worst, float(relative_error(analytic, numeric).max()))
    return CheckResult("gradient", worst < GRAD_RTOL,
                       f"{instances} instances, max relative error {worst:.2e} (limit {GRAD_RTOL:g})")


def squared_error(resid, h, alpha):
    r = np.asarray(resid, dtype=np.longdouble)
    return np.sum((r - np.longdouble(alpha) * np.asarray(h, dtype=np.longdouble)) ** 2)


def golden_section_minimum(resid, h, lo=-1e3, hi=1e3, grid=2001, tol=1e-13):
    """1-D minimizer of the squared error by grid bracketing then golden-section search."""
    alphas = np.linspace(lo, hi, grid)
    r = np.asarray(resid, dtype=np.longdouble)
    hl = np.asarray(h, dtype=np.longdouble)
    errs = np.sum((r[None, :] - alphas.astype(np.longdouble)[:, None] * hl[None, :]) ** 2, axis=1)
    i = int(np.argmin(errs))
    a, b = np.longdouble(alphas[max(i - 1, 0)]), np.longdouble(alphas[min(i + 1, grid - 1)])
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = squared_error(resid, h, c), squared_error(resid, h, d)
    while b - a > tol * max(1.0, abs(float(a))):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = squared_error(resid, h, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = squared_error(resid, h, d)
    return float((a + b) / 2)


def check_line_search(pairs=100, seed=0, n=30):
    worst, perturb_ok = 0.0, True
    for i in range(pairs):
        rng = np.random.default_rng(derive_seed(seed, "line-search", i))
        resid, h = rng.standard_normal(n), rng.standard_normal(n)
        alpha = optimal_step(resid, h)
        ref = golden_section_minimum(resid, h)
        worst = max(worst, abs(alpha - ref) / max(1.0, abs(ref)))
        base = squared_error(resid, h, alpha)
        for delta in (-1e-3, 1e-3):
            if squared_error(resid, h, alpha + delta) < base:
                perturb_ok = False
    return CheckResult("line_search", worst <= STEP_TOL and perturb_ok,
                       f"{pairs} pairs, max deviation {worst:.2e} (limit {STEP_TOL:g}), "
                       f"perturbation {'never improves' if perturb_ok else 'improved the error'}")


def check_kernel_convergence(k_count=10_000, shifts=20, dim=3, radius=3.0, seed=0):
    rng = np.random.default_rng(derive_seed(seed, "kernel"))
    rff = sample_rff(k_count, dim, derive_seed(seed, "kernel-rff"))
    q = SimplexWeights.uniform(k_count)
    worst = 0.0
    for _ in range(shifts):
        direction = rng.standard_normal(dim)
        delta = direction / np.linalg.norm(direction) * radius * rng.uniform()
        approx = kernel_value(rff, q, delta, np.zeros(dim))
        worst = max(worst, abs(approx - gaussian_kernel_exact(delta)))
    return CheckResult("kernel_convergence", worst <= KERNEL_TOL,
                       f"K={k_count}, {shifts} shifts, max deviation {worst:.4f} (limit {KERNEL_TOL:g})")


def run_all(seed=0):
    return [check_gradient(seed=seed), check_line_search(seed=seed), check_kernel_convergence(seed=seed)]
