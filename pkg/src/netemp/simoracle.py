"""Time-domain Monte Carlo estimate of the information matrix.

The network and its parameter sensitivities are simulated directly:

    w(t)   = A w(t-1) + B r(t)
    s_k(t) = A s_k(t-1) + E_k w(t-1)

and ``sum_j psi_j psi_j^T / lambda_j`` is averaged over time. Standard
errors come from batch means. This is an independent check on
:mod:`netemp.infoengine`, which obtains the same expectation by a
Lyapunov solve.

Seeding: the input at node ``i`` is drawn from its own PCG64 stream seeded
with ``SeedSequence(seed, spawn_key=(i,))``, so each node's excitation
depends only on ``(seed, i)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from netemp.emp import Emp
from netemp.netmodel import InstabilityError, NetworkModel, SignalConfig, ValidationError, _require_stable

N_BATCHES = 32
MIN_T = 1000
DIVERGENCE = 1e12


@dataclass(frozen=True)
class SimTrace:
    T: int
    seed: int
    empirical_M: np.ndarray
    standard_error: np.ndarray
    empirical_W: np.ndarray
    W_standard_error: np.ndarray

    def z_scores(self, M: np.ndarray) -> np.ndarray:
        """Elementwise ``(empirical - M) / standard_error``."""
        se = np.where(self.standard_error > 0, self.standard_error, np.inf)
        z = (self.empirical_M - M) / se
        # zero standard error with an exact match is a perfect agreement
        exact = (self.standard_error == 0) & (self.empirical_M == M)
        return np.where(exact, 0.0, np.where(self.standard_error > 0, z, np.inf))


@numba.njit(cache=True)
def _simulate(A, src, dst, exc, R, mea, inv_lam, burn, bounds, sums, wsums):
    n = A.shape[0]
    K = src.shape[0]
    w = np.zeros(n)
    w_new = np.zeros(n)
    s = np.zeros((K, n))
    s_new = np.zeros((K, n))
    total = R.shape[0]
    batch = -1
    for t in range(total):
        u = t - burn
        if u >= 0 and (batch < 0 or u >= bounds[batch + 1]):
            batch += 1
        for k in range(K):
            for a in range(n):
                acc = 0.0
                for b in range(n):
                    acc += A[a, b] * s[k, b]
                s_new[k, a] = acc
            s_new[k, dst[k]] += w[src[k]]
        for a in range(n):
            acc = 0.0
            for b in range(n):
                acc += A[a, b] * w[b]
            w_new[a] = acc
        for c in range(exc.shape[0]):
            w_new[exc[c]] += R[t, c]
        for a in range(n):
            w[a] = w_new[a]
        for k in range(K):
            for a in range(n):
                s[k, a] = s_new[k, a]
        if t % 1024 == 0:
            big = 0.0
            for a in range(n):
                if abs(w[a]) > big:
                    big = abs(w[a])
            if not big < 1e12:
                return False
        if u >= 0:
            for c in range(mea.shape[0]):
                j = mea[c]
                for k in range(K):
                    pk = s[k, j] * inv_lam[c]
                    for m in range(K):
                        sums[batch, k, m] += pk * s[m, j]
            for a in range(n):
                for b in range(n):
                    wsums[batch, a, b] += w[a] * w[b]
    return True


def _batch_stats(sums: np.ndarray, counts: np.ndarray):
    means = sums / counts[:, None, None]
    total = sums.sum(axis=0) / counts.sum()
    se = means.std(axis=0, ddof=1) / np.sqrt(len(counts))
    total = 0.5 * (total + total.T)
    return total, se


def simulate_information(model: NetworkModel, emp: Emp, config: SignalConfig,
                         T: int, seed: int) -> SimTrace:
    if T < MIN_T:
        raise ValidationError(f"T must be >= {MIN_T}, got {T}")
    _require_stable(model)
    ex, me = emp.key()
    try:
        sig = [config.sigma2[i] for i in ex]
        lam = np.array([config.lam[j] for j in me])
    except KeyError as exc:
        raise ValidationError(f"missing variance for node {exc}") from None
    burn = max(1000, 50 * model.n)
    total = burn + T
    R = np.empty((total, len(ex)))
    for c, (i, s2) in enumerate(zip(ex, sig)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))
        R[:, c] = rng.standard_normal(total) * np.sqrt(s2)
    src = np.array([i - 1 for i, _ in model.parameters], dtype=np.int64)
    dst = np.array([j - 1 for _, j in model.parameters], dtype=np.int64)
    bounds = np.linspace(0, T, N_BATCHES + 1).astype(np.int64)
    K = model.n_params
    sums = np.zeros((N_BATCHES, K, K))
    wsums = np.zeros((N_BATCHES, model.n, model.n))
    ok = _simulate(model.gain_matrix(), src, dst, np.array([i - 1 for i in ex], dtype=np.int64),
                   R, np.array([j - 1 for j in me], dtype=np.int64), 1.0 / lam, burn, bounds,
                   sums, wsums)
    if not ok:
        raise InstabilityError("simulated state diverged")
    counts = np.diff(bounds).astype(float)
    M, se = _batch_stats(sums, counts)
    W, wse = _batch_stats(wsums, counts)
    return SimTrace(T, seed, M, se, W, wse)
