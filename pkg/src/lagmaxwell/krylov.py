"""Sparse iterative solvers: preconditioned CG for the real shifted systems,
restarted flexible GMRES for the complex harmonic system, and a symmetric
Gauss-Seidel smoother usable as the inner preconditioner.

All solvers are sequential and deterministic: rerunning a solve on one thread
reproduces the report bitwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class IndefiniteOperatorError(RuntimeError):
    """Raised when CG meets nonpositive curvature: the operator that was
    promised positive definite is not (upstream shift-coefficient violation)."""


@dataclass
class SolveReport:
    iterations: int
    residual_history: list
    converged: bool
    wall_time: float


def _as_op(X) -> Callable[[np.ndarray], np.ndarray]:
    if callable(X):
        return X
    return lambda v: X @ v


def spmv(A: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    """CSR matrix-vector product (deterministic row-sequential summation)."""
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A @ x


def pcg(B, b: np.ndarray, preconditioner=None, tol: float = 1e-10,
        max_it: Optional[int] = None) -> tuple:
    """Conjugate gradients on a symmetric positive definite system.

    residual_history holds relative recurrence residuals per iteration
    (entry 0 = initial guess); convergence is certified against the true
    residual.  Nonpositive curvature raises IndefiniteOperatorError.
    """
    t0 = time.perf_counter()
    Bop = _as_op(B)
    Mop = _as_op(preconditioner) if preconditioner is not None else None
    n = b.shape[0]
    if max_it is None:
        max_it = 10 * n
    bn = float(np.linalg.norm(b))
    x = np.zeros_like(b, dtype=float)
    if bn == 0.0:
        return x, SolveReport(0, [0.0], True, time.perf_counter() - t0)
    r = b.astype(float).copy()
    z = Mop(r) if Mop is not None else r
    p = z.copy()
    rz = float(r @ z)
    hist = [1.0]
    it = 0
    converged = False
    while it < max_it:
        q = Bop(p)
        pq = float(p @ q)
        if pq <= 0.0:
            raise IndefiniteOperatorError(
                f"nonpositive curvature p.Bp = {pq} at iteration {it}: "
                "operator is not positive definite")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        it += 1
        rel = float(np.linalg.norm(r)) / bn
        hist.append(rel)
        if rel <= tol:
            true_rel = float(np.linalg.norm(b - Bop(x))) / bn
            hist[-1] = true_rel
            if true_rel <= tol:
                converged = True
                break
            # recurrence drifted below the true residual: restart cleanly
            r = b - Bop(x)
            z = Mop(r) if Mop is not None else r
            rz = float(r @ z)
            p = z.copy()
            continue
        z = Mop(r) if Mop is not None else r
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    return x, SolveReport(it, hist, converged, time.perf_counter() - t0)


def fgmres(A, b: np.ndarray, right_preconditioner=None, restart_k: int = 100,
           tol: float = 1e-8, max_outer: int = 1000,
           x0: Optional[np.ndarray] = None) -> tuple:
    """Restarted flexible GMRES with right preconditioning.

    Modified Gram-Schmidt Arnoldi; a second orthogonalization pass fires when
    the remaining overlap with the basis exceeds 1e-3 of the vector norm.
    The preconditioned vectors are stored, so the preconditioner may vary
    between applications.  residual_history records the TRUE relative
    residual after every iteration (entry 0 = initial guess).  Running out
    of iterations is not an error: the history is the measurement.
    """
    if restart_k < 1:
        raise ValueError("restart_k must be >= 1")
    t0 = time.perf_counter()
    Aop = _as_op(A)
    Mop = _as_op(right_preconditioner) if right_preconditioner is not None else None
    n = b.shape[0]
    b = b.astype(complex)
    bn = float(np.linalg.norm(b))
    x = np.zeros(n, dtype=complex) if x0 is None else x0.astype(complex).copy()
    if bn == 0.0:
        return x, SolveReport(0, [0.0], True, time.perf_counter() - t0)

    hist = [float(np.linalg.norm(b - Aop(x))) / bn]
    it = 0
    k = restart_k
    while it < max_outer and hist[-1] > tol:
        r = b - Aop(x)
        beta = float(np.linalg.norm(r))
        if beta == 0.0:
            break
        V = np.zeros((k + 1, n), dtype=complex)
        Z = np.zeros((k, n), dtype=complex)
        H = np.zeros((k + 1, k), dtype=complex)
        V[0] = r / beta
        e1 = np.zeros(k + 1, dtype=complex)
        e1[0] = beta
        j = 0
        while j < k and it < max_outer:
            z = Mop(V[j]) if Mop is not None else V[j].copy()
            Z[j] = z
            w = Aop(z)
            for i in range(j + 1):
                h = np.vdot(V[i], w)
                H[i, j] += h
                w -= h * V[i]
            wn = float(np.linalg.norm(w))
            g = V[: j + 1].conj() @ w
            if float(np.linalg.norm(g)) > 1e-3 * max(wn, 1e-300):
                w -= V[: j + 1].T @ g
                H[: j + 1, j] += g
            hnext = float(np.linalg.norm(w))
            H[j + 1, j] = hnext
            y = np.linalg.lstsq(H[: j + 2, : j + 1], e1[: j + 2], rcond=None)[0]
            xj = x + Z[: j + 1].T @ y
            it += 1
            hist.append(float(np.linalg.norm(b - Aop(xj))) / bn)
            breakdown = hnext <= 1e-14 * max(1.0, abs(H[j, j]))
            if hist[-1] <= tol or breakdown or it >= max_outer:
                x = xj
                j += 1
                break
            V[j + 1] = w / hnext
            j += 1
        else:
            x = xj
        if hist[-1] <= tol:
            break
    converged = hist[-1] <= tol
    return x, SolveReport(it, hist, converged, time.perf_counter() - t0)


def _split_triangles(B: sp.spmatrix):
    B = B.tocsr()
    d = B.diagonal()
    if np.any(d == 0.0):
        raise ValueError("zero diagonal entry: Gauss-Seidel sweep undefined")
    lower = sp.tril(B, k=0).tocsr()
    upper = sp.triu(B, k=0).tocsr()
    return lower, upper


def smoother_sgs(B: sp.spmatrix, b: np.ndarray, x: np.ndarray,
                 sweeps: int = 1) -> np.ndarray:
    """Symmetric Gauss-Seidel: each sweep is a forward then a backward pass,
    written as residual corrections with triangular solves."""
    lower, upper = _split_triangles(B)
    x = x.astype(float).copy()
    for _ in range(sweeps):
        x += spla.spsolve_triangular(lower, b - B @ x, lower=True)
        x += spla.spsolve_triangular(upper, b - B @ x, lower=False)
    return x


def make_sgs_preconditioner(B: sp.spmatrix, sweeps: int = 1):
    """SGS as a linear operator z = M^{-1} r (zero initial guess), symmetric
    positive definite for symmetric positive definite B."""
    lower, upper = _split_triangles(B)
    Bc = B.tocsr()

    def apply(r: np.ndarray) -> np.ndarray:
        x = spla.spsolve_triangular(lower, r, lower=True)
        for _ in range(sweeps - 1):
            x += spla.spsolve_triangular(lower, r - Bc @ x, lower=True)
            x += spla.spsolve_triangular(upper, r - Bc @ x, lower=False)
        return x + spla.spsolve_triangular(upper, r - Bc @ x, lower=False)

    return apply


def lanczos_smallest_ritz(B, n: int, steps: int = 200, seed: int = 0) -> float:
    """Smallest Ritz value of a symmetric operator after a plain Lanczos run
    (no reorthogonalization; adequate for a sign check)."""
    from scipy.linalg import eigh_tridiagonal

    Bop = _as_op(B)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    v_prev = np.zeros(n)
    alphas, betas = [], []
    beta = 0.0
    for _ in range(steps):
        w = Bop(v) - beta * v_prev
        alpha = float(v @ w)
        w -= alpha * v
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        if beta < 1e-14:
            break
        betas.append(beta)
        v_prev, v = v, w / beta
    if len(betas) == len(alphas):
        betas = betas[:-1]
    vals = eigh_tridiagonal(np.array(alphas), np.array(betas),
                            eigvals_only=True)
    return float(vals[0])


def write_residual_csv(path: str, history) -> None:
    """CSV export: header `iteration,relative_residual`, one row per entry
    (row 0 = initial guess)."""
    with open(path, "w") as f:
        f.write("iteration,relative_residual\n")
        for i, r in enumerate(history):
            f.write(f"{i},{float(r)!r}\n")


def read_residual_csv(path: str) -> np.ndarray:
    with open(path) as f:
        header = f.readline().strip().replace(" ", "")
        if header != "iteration,relative_residual":
            raise ValueError(f"{path}: unexpected residual CSV header {header!r}")
        vals = []
        for line in f:
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split(",")
            vals.append(float(parts[1]))
    return np.array(vals)
