"""Asymptotic information and covariance of the module estimates.

With white measurement noise the optimal one-step predictor of a measured
node is its noise-free response to the known excitations, so the predictor
gradient with respect to module ``k`` (edge ``i -> j``) is ``C s_k(t)``
where the sensitivity ``s_k = dw/da_ji`` obeys

    s_k(t) = A s_k(t-1) + E_k w(t-1),      E_k = e_j e_i^T.

Stacking ``w`` and all ``s_k`` gives one block lower-triangular linear
system driven by ``r``; its stationary covariance (a discrete Lyapunov
solve) holds every second moment needed for

    M = sum_{j in C} E[psi_j psi_j^T] / lambda_j,     P = M^{-1}.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from netemp import lyapunov
from netemp.emp import Emp, validate_necessary
from netemp.netmodel import Edge, NetworkModel, SignalConfig, ValidationError, _require_stable

SINGULAR_COND = 1e12

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SensitivitySystem:
    n: int
    n_params: int
    A: np.ndarray  # augmented transition, n(1+K) square
    B: np.ndarray  # augmented input, n(1+K) x |excited|
    excited: tuple[int, ...]
    measured: tuple[int, ...]

    def psi_index(self, j: int, k: int) -> int:
        """Row of the augmented state holding d w_j / d theta_k."""
        return self.n * (1 + k) + (j - 1)


@dataclass(frozen=True)
class InfoResult:
    emp: Emp
    parameters: tuple[Edge, ...]
    M: np.ndarray
    P: np.ndarray | None
    trace_P: float
    condition_number: float
    singular: bool

    @property
    def per_param_variance(self) -> dict[Edge, float]:
        if self.P is None:
            return {e: math.inf for e in self.parameters}
        return {e: float(v) for e, v in zip(self.parameters, np.diag(self.P))}

    def to_dict(self) -> dict:
        ex, me = self.emp.key()
        return {
            "emp": {"label": self.emp.label, "excited": list(ex), "measured": list(me)},
            "trace": self.trace_P if not self.singular else "inf",
            "variances": {f"a{j}{i}" if max(i, j) < 10 else f"a{j},{i}": v
                          for (i, j), v in self.per_param_variance.items()},
            "singular": self.singular,
            "condition_number": self.condition_number,
        }


def transition_matrix(model: NetworkModel) -> np.ndarray:
    n, K = model.n, model.n_params
    A0 = model.gain_matrix()
    N = n * (1 + K)
    At = np.zeros((N, N))
    for b in range(K + 1):
        At[b * n:(b + 1) * n, b * n:(b + 1) * n] = A0
    for k, (i, j) in enumerate(model.parameters):
        At[(1 + k) * n + j - 1, i - 1] = 1.0
    return At


def build_sensitivity(model: NetworkModel, emp: Emp) -> SensitivitySystem:
    if not validate_necessary(emp, model.n):
        log.warning("pattern %s leaves some nodes neither excited nor measured", emp)
    ex, me = emp.key()
    N = model.n * (1 + model.n_params)
    B = np.zeros((N, len(ex)))
    for col, i in enumerate(ex):
        B[i - 1, col] = 1.0
    return SensitivitySystem(model.n, model.n_params, transition_matrix(model), B, ex, me)


def steady_state_covariance(sys: SensitivitySystem, config: SignalConfig,
                            check: bool = True) -> np.ndarray:
    try:
        sig = np.array([config.sigma2[i] for i in sys.excited])
    except KeyError as exc:
        raise ValidationError(f"no input variance for excited node {exc}") from None
    Q = (sys.B * sig) @ sys.B.T
    return lyapunov.solve(sys.A, Q, check=check)


def _finish(emp: Emp, parameters: Sequence[Edge], M: np.ndarray) -> InfoResult:
    M = 0.5 * (M + M.T)
    d = np.diag(M).copy()
    K = len(d)
    scale = float(d.max()) if K else 0.0
    if K == 0:
        return InfoResult(emp, tuple(parameters), M, M.copy(), 0.0, 1.0, False)
    if not scale > 0 or np.any(d <= 1e-14 * scale):
        return InfoResult(emp, tuple(parameters), M, None, math.inf, math.inf, True)
    # Conditioning is judged on the unit-diagonal scaling of M, so parameters
    # of very different magnitude do not by themselves count as singular.
    s = 1.0 / np.sqrt(d)
    S = M * s[:, None] * s[None, :]
    ev = np.linalg.eigvalsh(S)
    cond = math.inf if ev[0] <= 0 else float(ev[-1] / ev[0])
    if not cond < SINGULAR_COND:
        return InfoResult(emp, tuple(parameters), M, None, math.inf, cond, True)
    P = np.linalg.inv(S) * s[:, None] * s[None, :]
    P = 0.5 * (P + P.T)
    return InfoResult(emp, tuple(parameters), M, P, float(np.trace(P)), cond, False)


def _config_arrays(emp: Emp, config: SignalConfig):
    ex, me = emp.key()
    try:
        sig = np.array([config.sigma2[i] for i in ex])
    except KeyError as exc:
        raise ValidationError(f"no input variance for excited node {exc}") from None
    try:
        lam = np.array([config.lam[j] for j in me])
    except KeyError as exc:
        raise ValidationError(f"no noise variance for measured node {exc}") from None
    return ex, me, sig, lam


def information_matrix(model: NetworkModel, emp: Emp, config: SignalConfig) -> InfoResult:
    """Information matrix, covariance and trace for one pattern."""
    _require_stable(model)
    _, me, _, lam = _config_arrays(emp, config)
    sys = build_sensitivity(model, emp)
    X = steady_state_covariance(sys, config, check=False)
    K = model.n_params
    M = np.zeros((K, K))
    for j, l in zip(me, lam):
        idx = [sys.psi_index(j, k) for k in range(K)]
        M += X[np.ix_(idx, idx)] / l
    return _finish(emp, model.parameters, M)


class NetworkEvaluator:
    """Evaluates many patterns on one network.

    The stationary covariance is linear in the input variances, so it is
    computed once per node for a unit input; any pattern's information
    matrix is then a weighted sum of the stored blocks.
    """

    def __init__(self, model: NetworkModel):
        _require_stable(model)
        self.model = model
        n, K = model.n, model.n_params
        At = transition_matrix(model)
        N = At.shape[0]
        Q = np.zeros((n, N, N))
        for i in range(n):
            Q[i, i, i] = 1.0
        X = lyapunov.solve_doubling(At, Q)
        idx = np.array([[n * (1 + k) + j for k in range(K)] for j in range(n)])
        # blocks[i, j] = E[psi_j psi_j^T] for a unit-variance input at node i+1
        self.blocks = X[:, idx[:, :, None], idx[:, None, :]]

    def information(self, emp: Emp, config: SignalConfig) -> InfoResult:
        ex, me, sig, lam = _config_arrays(emp, config)
        b = self.blocks[np.ix_([i - 1 for i in ex], [j - 1 for j in me])]
        M = np.einsum("i,j,ijkl->kl", sig, 1.0 / lam, b)
        return _finish(emp, self.model.parameters, M)


def _rank_key(item):
    pos, res = item
    return (res.singular, res.trace_P, pos)


def rank_emps(model: NetworkModel, emps: Sequence[Emp], config: SignalConfig,
              workers: int | None = None) -> list[tuple[Emp, InfoResult]]:
    """Patterns sorted by ascending trace; singular ones last, ties by input order."""
    if not emps:
        raise ValidationError("no patterns to rank")
    ev = NetworkEvaluator(model)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda e: ev.information(e, config), emps))
    else:
        results = [ev.information(e, config) for e in emps]
    order = sorted(enumerate(results), key=_rank_key)
    return [(emps[pos], res) for pos, res in order]


def best_index(results: Sequence[InfoResult]) -> int | None:
    """Position of the smallest trace, first on ties; ``None`` if all singular."""
    best, best_tr = None, math.inf
    for k, r in enumerate(results):
        if not r.singular and r.trace_P < best_tr:
            best, best_tr = k, r.trace_P
    return best
