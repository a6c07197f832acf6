"""Single-delay dynamic networks in state-space form.

A network with ``n`` nodes evolves as ``w(t) = A w(t-1) + B r(t)`` where
entry ``(j, i)`` of ``A`` is the gain of the module from node ``i`` to node
``j``. Nodes are numbered from 1 throughout the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Any, Iterable, Mapping

import numpy as np

STABILITY_MARGIN = 1e-9

Edge = tuple[int, int]


class NetEmpError(Exception):
    """Base class for domain errors raised by this package."""


class InvalidSizeError(NetEmpError, ValueError):
    pass


class ValidationError(NetEmpError, ValueError):
    pass


class InstabilityError(NetEmpError):
    pass


class DegenerateParameterError(NetEmpError, ArithmeticError):
    """A formula's denominator vanishes (structurally non-identifiable case)."""


@dataclass(frozen=True)
class NetworkModel:
    """Directed graph with one real gain per edge.

    ``edges`` holds ``(from_node, to_node, gain)`` triples in canonical
    order, sorted by ``(to_node, from_node)``. That order also fixes the
    ordering of the parameter vector.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    topology: str = "general"
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSizeError(f"n must be >= 1, got {self.n}")
        ordered = tuple(sorted(((int(i), int(j), float(g)) for i, j, g in self.edges),
                               key=lambda e: (e[1], e[0])))
        seen = set()
        for i, j, g in ordered:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValidationError(f"edge {i}->{j} outside nodes 1..{self.n}")
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge {i}->{j}")
            if not math.isfinite(g):
                raise ValidationError(f"gain of edge {i}->{j} is not finite")
            seen.add((i, j))
        object.__setattr__(self, "edges", ordered)
        object.__setattr__(self, "_index", {(i, j): k for k, (i, j, _) in enumerate(ordered)})
        _check_tag(self)

    @property
    def parameters(self) -> list[Edge]:
        """Edge identifiers ``(i, j)`` in parameter-vector order."""
        return [(i, j) for i, j, _ in self.edges]

    @property
    def n_params(self) -> int:
        return len(self.edges)

    @property
    def gains(self) -> np.ndarray:
        return np.array([g for _, _, g in self.edges])

    def gain(self, i: int, j: int) -> float:
        return self.edges[self._index[(i, j)]][2]

    def param_index(self, i: int, j: int) -> int:
        return self._index[(i, j)]

    def gain_matrix(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j, g in self.edges:
            A[j - 1, i - 1] = g
        return A

    def with_gains(self, gains: Iterable[float]) -> "NetworkModel":
        """Same topology, new gains given in parameter order."""
        gains = list(gains)
        if len(gains) != self.n_params:
            raise ValidationError(f"expected {self.n_params} gains, got {len(gains)}")
        model = NetworkModel(self.n, tuple((i, j, g) for (i, j, _), g in zip(self.edges, gains)),
                             self.topology)
        _require_stable(model)
        return model

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "edges": [[i, j, g] for i, j, g in self.edges]}


def _check_tag(model: NetworkModel) -> None:
    pairs = {(i, j) for i, j, _ in model.edges}
    n = model.n
    chain = {(i, i + 1) for i in range(1, n)}
    if model.topology == "branch":
        if pairs != chain:
            raise ValidationError("branch edges must be exactly i->i+1")
    elif model.topology == "cycle":
        if pairs != chain | {(n, 1)}:
            raise ValidationError("cycle edges must be exactly i->i+1 and n->1")
    elif model.topology != "general":
        raise ValidationError(f"unknown topology tag {model.topology!r}")


def _is_acyclic(model: NetworkModel) -> bool:
    ts = TopologicalSorter({j: set() for j in range(1, model.n + 1)})
    for i, j, g in model.edges:
        if g != 0.0:
            ts.add(j, i)
    try:
        ts.prepare()
    except CycleError:
        return False
    return True


def spectral_radius(model: NetworkModel) -> float:
    """Largest eigenvalue magnitude of the gain matrix."""
    if _is_acyclic(model):
        return 0.0
    if model.topology == "cycle":
        return abs(float(np.prod(model.gains))) ** (1.0 / model.n)
    return float(np.max(np.abs(np.linalg.eigvals(model.gain_matrix()))))


def is_stable(model: NetworkModel) -> bool:
    return spectral_radius(model) < 1.0 - STABILITY_MARGIN


def _require_stable(model: NetworkModel) -> None:
    rho = spectral_radius(model)
    if not rho < 1.0 - STABILITY_MARGIN:
        raise InstabilityError(f"network is unstable (spectral radius {rho:.6g})")


def build_branch(n: int, gains: Iterable[float]) -> NetworkModel:
    """Chain 1 -> 2 -> ... -> n; ``gains[k]`` is the gain of edge k+1 -> k+2."""
    if n < 2:
        raise InvalidSizeError("n must be ≥ 2")
    gains = [float(g) for g in gains]
    if len(gains) != n - 1:
        raise ValidationError(f"a {n}-node branch needs {n - 1} gains, got {len(gains)}")
    return NetworkModel(n, tuple((i, i + 1, g) for i, g in zip(range(1, n), gains)), "branch")


def build_cycle(n: int, gains: Iterable[float]) -> NetworkModel:
    """Loop 1 -> 2 -> ... -> n -> 1; the last gain belongs to edge n -> 1."""
    if n < 2:
        raise InvalidSizeError("n must be ≥ 2")
    gains = [float(g) for g in gains]
    if len(gains) != n:
        raise ValidationError(f"a {n}-node cycle needs {n} gains, got {len(gains)}")
    if not abs(math.prod(gains)) < 1.0:
        raise InstabilityError(f"cycle gain product {math.prod(gains):.6g} has modulus >= 1")
    edges = [(i, i + 1, g) for i, g in zip(range(1, n), gains[:-1])]
    edges.append((n, 1, gains[-1]))
    model = NetworkModel(n, tuple(edges), "cycle")
    _require_stable(model)
    return model


def build_general(n: int, edges: Iterable[tuple[int, int, float]]) -> NetworkModel:
    if n < 1:
        raise InvalidSizeError("n must be >= 1")
    model = NetworkModel(n, tuple(tuple(e) for e in edges), "general")
    _require_stable(model)
    return model


def model_from_dict(spec: Mapping[str, Any]) -> NetworkModel:
    """Parse ``{"n", "edges"}`` or ``{"kind", "n", "gains"}`` descriptions."""
    try:
        kind = spec.get("kind")
        n = int(spec["n"])
        if kind is None:
            return build_general(n, [(int(i), int(j), float(g)) for i, j, g in spec["edges"]])
        if kind == "branch":
            return build_branch(n, spec["gains"])
        if kind == "cycle":
            return build_cycle(n, spec["gains"])
    except KeyError as exc:
        raise ValidationError(f"network description is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NetEmpError):
            raise
        raise ValidationError(f"malformed network description: {exc}") from None
    raise ValidationError(f"unknown network kind {kind!r}")


@dataclass(frozen=True)
class SignalConfig:
    """Input variances per excited node and noise variances per measured node.

    Maps may cover more nodes than a given pattern uses; only the entries
    of the pattern's excited and measured nodes are read.
    """

    sigma2: Mapping[int, float]
    lam: Mapping[int, float]

    def __post_init__(self):
        s = {int(k): float(v) for k, v in self.sigma2.items()}
        l = {int(k): float(v) for k, v in self.lam.items()}
        for name, d in (("sigma2", s), ("lambda", l)):
            for k, v in d.items():
                if not (v > 0 and math.isfinite(v)):
                    raise ValidationError(f"{name}[{k}] must be positive and finite, got {v}")
        object.__setattr__(self, "sigma2", s)
        object.__setattr__(self, "lam", l)

    @classmethod
    def uniform(cls, n: int, sigma2: float = 1.0, lam: float = 0.01) -> "SignalConfig":
        nodes = range(1, n + 1)
        return cls({k: sigma2 for k in nodes}, {k: lam for k in nodes})

    def scaled(self, sigma_factor: float = 1.0, lambda_factor: float = 1.0) -> "SignalConfig":
        return SignalConfig({k: v * sigma_factor for k, v in self.sigma2.items()},
                            {k: v * lambda_factor for k, v in self.lam.items()})


def config_from_dict(spec: Mapping[str, Any], n: int) -> SignalConfig:
    """Parse ``{"sigma2": {...} | {"uniform": v}, "lambda": {...} | {"uniform": v}}``."""

    def expand(block, name):
        if not isinstance(block, Mapping):
            if isinstance(block, (list, tuple)):
                raise ValidationError(f"{name}: cross-node covariances are not supported")
            raise ValidationError(f"{name} must be an object")
        if "uniform" in block:
            return {k: float(block["uniform"]) for k in range(1, n + 1)}
        out = {}
        for k, v in block.items():
            if isinstance(v, (list, tuple, Mapping)):
                raise ValidationError(f"{name}: cross-node covariances are not supported")
            out[int(k)] = float(v)
        return out

    try:
        return SignalConfig(expand(spec["sigma2"], "sigma2"), expand(spec["lambda"], "lambda"))
    except KeyError as exc:
        raise ValidationError(f"config is missing field {exc}") from None
