"""Discrete Lyapunov equation ``X = A X A^T + Q`` for stable ``A``."""

from __future__ import annotations

import numpy as np

from netemp.netmodel import InstabilityError

# Above this state dimension the Kronecker system (dim^2 unknowns) is
# slower than doubling.
DIRECT_MAX_DIM = 20
MAX_DOUBLINGS = 64


def solve_direct(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve ``(I - A (x) A) vec(X) = vec(Q)`` exactly."""
    n = A.shape[0]
    lhs = np.eye(n * n) - np.kron(A, A)
    X = np.linalg.solve(lhs, Q.reshape(-1)).reshape(n, n)
    return 0.5 * (X + X.T)


def solve_doubling(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Squared Smith iteration.

    ``Q`` may carry leading batch dimensions; every slice is solved with
    the same ``A``, so the matrix powers are computed once.
    """
    X = np.array(Q, dtype=float, copy=True)
    Ak = np.array(A, dtype=float, copy=True)
    for _ in range(MAX_DOUBLINGS):
        if not Ak.any():
            break
        with np.errstate(over="ignore", invalid="ignore"):
            term = Ak @ X @ Ak.T
        if not np.all(np.isfinite(term)):
            raise InstabilityError("Lyapunov doubling diverged")
        X = X + term
        tn = np.abs(term).max(axis=(-2, -1))
        xn = np.abs(X).max(axis=(-2, -1))
        if np.all(tn <= 1e-17 * xn):
            break
        with np.errstate(over="ignore", invalid="ignore"):
            Ak = Ak @ Ak
        if not np.all(np.isfinite(Ak)):
            raise InstabilityError("Lyapunov doubling diverged")
    else:
        raise InstabilityError("Lyapunov doubling did not converge")
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def solve(A: np.ndarray, Q: np.ndarray, check: bool = True) -> np.ndarray:
    """Dispatch on size. Pass ``check=False`` when stability is already
    known; eigenvalues of large nilpotent matrices are badly conditioned."""
    if check and A.size:
        rho = np.max(np.abs(np.linalg.eigvals(A)))
        if not rho < 1.0:
            raise InstabilityError(f"transition matrix has spectral radius {rho:.6g} >= 1")
    if A.shape[0] <= DIRECT_MAX_DIM and Q.ndim == 2:
        return solve_direct(A, Q)
    return solve_doubling(A, Q)


def residual(A: np.ndarray, Q: np.ndarray, X: np.ndarray) -> float:
    """Relative Frobenius residual of a candidate solution."""
    r = X - A @ X @ A.T - Q
    return float(np.linalg.norm(r) / max(np.linalg.norm(X), np.finfo(float).tiny))
