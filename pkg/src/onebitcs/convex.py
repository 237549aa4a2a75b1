"""Final estimation: maximize <c, z> over K = {||z||_2 <= 1, ||z||_1 <= sqrt(k)}.

The maximizer of a linear objective over K is a normalized soft-thresholding
of ``c``; :func:`solve_linear_over_K` finds the threshold by scanning the
breakpoints of ``|c|``.  :func:`pgd_oracle` is a slow iterative
cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import SignVector, SparseSignal


@dataclass(frozen=True)
class RecoveryProblem:
    c: np.ndarray
    k: int
    tol: float = 1e-9

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("objective must be finite")
        if self.k < 1 or self.tol <= 0:
            raise ValueError("need k >= 1 and tol > 0")
        object.__setattr__(self, "c", c)


def soft_threshold(c, lam: float) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)


def l1_l2_ratio(v) -> float:
    n2 = float(np.linalg.norm(v))
    return float(np.abs(v).sum()) / n2 if n2 > 0 else 0.0


def threshold_level(c, k: float) -> float:
    """Smallest lam >= 0 with ||S_lam(c)||_1 <= sqrt(k) ||S_lam(c)||_2.

    Returns ``max|c|`` when the ratio only drops below sqrt(k) as everything
    is thresholded away (the top magnitude is shared by more than k entries).
    """
    a = np.sort(np.abs(np.asarray(c, dtype=float)))[::-1]
    a = a[a > 0]
    root_k = math.sqrt(k)
    if a.size == 0 or l1_l2_ratio(a) <= root_k:
        return 0.0
    s1 = np.cumsum(a)
    s2 = np.cumsum(a * a)
    # piece s: the top s entries are active and lam ranges over [a[s], a[s-1])
    for s in range(a.size, 0, -1):
        lower = a[s] if s < a.size else 0.0
        t1 = s1[s - 1] - s * lower
        t2 = s2[s - 1] - 2 * lower * s1[s - 1] + s * lower * lower
        if t1 * t1 <= k * t2 or s <= k:
            return float(lower)
        disc = k * (s * s2[s - 1] - s1[s - 1] ** 2) / (s - k)
        lam = (s1[s - 1] - math.sqrt(max(disc, 0.0))) / s
        if lam < a[s - 1]:
            return float(max(lam, lower))
    return float(a[0])


def solve_linear_over_K(p: RecoveryProblem) -> np.ndarray:
    c, k = p.c, p.k
    if not np.any(c):
        return np.zeros_like(c)
    c = c / np.max(np.abs(c))  # the maximizer is scale free; this avoids under/overflow
    lam = threshold_level(c, k)
    top = 1.0
    if lam >= top:
        # ties at the top: spread sqrt(k) of l1 mass over the tied entries
        tied = np.abs(c) == top
        z = np.zeros_like(c)
        z[tied] = np.sign(c[tied]) * math.sqrt(k) / tied.sum()
        return z
    z = soft_threshold(c, lam)
    z /= np.linalg.norm(z)
    l1 = np.abs(z).sum()
    if l1 > math.sqrt(k):
        z *= math.sqrt(k) / l1
    return z


# ---------------------------------------------------------------------------
# iterative oracle


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto {||z||_1 <= radius} (sort-based, exact)."""
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, u.size + 1)
    rho = np.nonzero(u * ks > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def project_l2_ball(v, radius: float = 1.0) -> np.ndarray:
    nrm = np.linalg.norm(v)
    return v * (radius / nrm) if nrm > radius else np.array(v, dtype=float)


class ProjectionError(RuntimeError):
    pass


def project_K(v, k: float, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Projection onto the l2 ball intersected with the sqrt(k) l1 ball.

    Alternates the two exact projections with Dykstra's correction terms,
    which makes the fixpoint the true projection onto the intersection.
    """
    radius = math.sqrt(k)
    x = np.asarray(v, dtype=float).copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    scale = tol * max(1.0, float(np.linalg.norm(x)))
    for _ in range(max_iter):
        y = project_l2_ball(x + p)
        p = x + p - y
        x_new = project_l1_ball(y + q, radius)
        q = y + q - x_new
        if np.linalg.norm(x_new - x) <= scale and np.linalg.norm(x_new - y) <= scale:
            return x_new
        x = x_new
    raise ProjectionError("alternating projection did not converge")


def pgd_oracle(p: RecoveryProblem, iters: int = 5000, step: float | None = None) -> np.ndarray:
    """Projected gradient ascent on <c, z> over K."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    c = p.c
    nrm = np.linalg.norm(c)
    if nrm == 0:
        return np.zeros_like(c)
    step = 1.0 / nrm if step is None else step
    z = np.zeros_like(c)
    for _ in range(iters):
        z_new = project_K(z + step * c, p.k)
        if np.linalg.norm(z_new - z) <= 1e-12:
            return z_new
        z = z_new
    return z


def objective(c, z) -> float:
    return float(np.dot(c, z))


# ---------------------------------------------------------------------------


def recover_on_subset(phi, y, s, k: int, tol: float = 1e-9) -> SparseSignal:
    """Solve the restricted program on the columns ``s`` of ``phi`` and embed back."""
    n = phi.shape[1]
    s = np.unique(np.asarray(s, dtype=np.int64))
    bits = y.bits if isinstance(y, SignVector) else np.asarray(y)
    if bits.size != phi.shape[0]:
        raise ValueError("sign vector length does not match matrix rows")
    x_hat = np.zeros(n)
    if s.size == 0:
        warnings.warn("empty candidate set; returning the zero signal", stacklevel=2)
        return SparseSignal(x_hat, max(1, min(k, n)))
    cols = phi.columns(s)
    c = cols.T @ bits.astype(float)
    x_hat[s] = solve_linear_over_K(RecoveryProblem(c, k, tol))
    return SparseSignal(x_hat, max(1, min(k, n)))
