"""Independent reference computations used by the tests.

These deliberately avoid the library's own code paths: the Jacobi rotation
eigensolver checks the Sturm inertia counts, composite Simpson checks the
closed-form antiderivative, and central differences check the closed-form
derivative.
"""

from __future__ import annotations

import numpy as np

from paraflow.grid import make_grid
from paraflow.operator import TridiagOperator


def jacobi_eigenvalues(M: np.ndarray, sweeps: int = 30, tol: float = 1e-13) -> np.ndarray:
    """Cyclic Jacobi rotations on a dense symmetric matrix."""
    A = np.array(M, dtype=np.float64, copy=True)
    n = A.shape[0]
    if n == 1:
        return A[0].copy()
    scale = max(np.linalg.norm(A), 1.0)
    for _ in range(sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
    return np.sort(np.diag(A))


def dense_from_tridiag(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    n = diag.size
    M = np.zeros((n, n))
    M[np.arange(n), np.arange(n)] = diag
    M[np.arange(n - 1), np.arange(1, n)] = off
    M[np.arange(1, n), np.arange(n - 1)] = off
    return M


def tridiag_from_arrays(diag, off) -> TridiagOperator:
    """Wrap raw arrays as an operator (the dummy grid is never consulted)."""
    diag = np.asarray(diag, dtype=np.float64)
    off = np.asarray(off, dtype=np.float64)
    g = make_grid(1.0, diag.size)
    return TridiagOperator(diag, off, g)


def count_below(eigs: np.ndarray, sigma: float) -> int:
    return int(np.searchsorted(eigs, sigma, side="left"))


def simpson(f, a: float, b: float, n_intervals: int = 1000) -> float:
    """Composite Simpson rule; n_intervals is rounded up to even."""
    n = n_intervals + (n_intervals % 2)
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), dtype=np.float64)
    h = (b - a) / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2])))


def central_diff(f, x: float, step: float = 1e-5) -> float:
    return (f(x + step) - f(x - step)) / (2.0 * step)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log ys against log xs."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    return float(np.polyfit(lx, ly, 1)[0])
