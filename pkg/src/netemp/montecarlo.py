"""Random-network studies: which pattern wins how often.

Every sampled network gets its own generator seeded with
``SeedSequence(master_seed, spawn_key=(index,))``, so a study is fully
determined by its spec no matter how the networks are split across
workers.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from netemp.emp import (
    Emp,
    enumerate_branch_emps,
    enumerate_cycle_emps,
    enumerate_constrained,
    hybrid_constraints,
    largest_module_is_direct,
)
from netemp.infoengine import NetworkEvaluator, best_index
from netemp.netmodel import (
    NetEmpError,
    NetworkModel,
    SignalConfig,
    ValidationError,
    build_branch,
    build_general,
    is_stable,
)

MAX_REJECTIONS = 1000

HYBRID_EDGES = ((1, 2), (2, 3), (3, 4), (4, 5), (5, 3), (5, 6))


class SamplingError(NetEmpError):
    pass


def hybrid_network(gains: Mapping[tuple[int, int], float] | float = 0.3) -> NetworkModel:
    """Six-node example: branch 1 -> 2 -> 3, loop 3 -> 4 -> 5 -> 3, exit 5 -> 6."""
    if not isinstance(gains, Mapping):
        gains = {e: float(gains) for e in HYBRID_EDGES}
    return build_general(6, [(i, j, gains[(i, j)]) for i, j in HYBRID_EDGES])


@dataclass(frozen=True)
class StudySpec:
    topology: str  # "branch" | "cycle" | "hybrid"
    n: int = 0
    num_networks: int = 2000
    gain_range: tuple[float, float] = (-1.0, 1.0)
    # None: every node uses the fixed sigma2 / lam below
    variance_range: tuple[float, float] | None = None
    sigma2: float = 1.0
    lam: float = 0.01
    master_seed: int = 42
    emp_source: str = "minimal"  # or "with_doubled" for even cycles

    def __post_init__(self):
        if self.topology not in ("branch", "cycle", "hybrid"):
            raise ValidationError(f"unknown topology {self.topology!r}")
        if self.topology == "hybrid":
            object.__setattr__(self, "n", 6)
        elif self.n < 2:
            raise ValidationError("n must be ≥ 2")
        if self.num_networks < 1:
            raise ValidationError("num_networks must be >= 1")
        lo, hi = self.gain_range
        if not lo < hi:
            raise ValidationError("gain_range needs lo < hi")
        if self.variance_range is not None:
            vlo, vhi = self.variance_range
            if not 0 <= vlo < vhi:
                raise ValidationError("variance_range needs 0 <= lo < hi")
        if self.emp_source not in ("minimal", "with_doubled"):
            raise ValidationError(f"unknown emp_source {self.emp_source!r}")

    def emps(self) -> list[Emp]:
        if self.topology == "branch":
            return enumerate_branch_emps(self.n)
        if self.topology == "cycle":
            return enumerate_cycle_emps(self.n, include_doubled=self.emp_source == "with_doubled")
        return enumerate_constrained(hybrid_constraints(), 6)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "StudySpec":
        d = dict(d)
        for key in ("gain_range", "variance_range"):
            if d.get(key) is not None:
                d[key] = tuple(float(x) for x in d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(f"bad study spec: {exc}") from None


def _rng(spec: StudySpec, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(spec.master_seed, spawn_key=(index,))))


def _draw_model(spec: StudySpec, rng: np.random.Generator) -> NetworkModel:
    lo, hi = spec.gain_range
    if spec.topology == "branch":
        return build_branch(spec.n, rng.uniform(lo, hi, spec.n - 1))
    for _ in range(MAX_REJECTIONS):
        if spec.topology == "cycle":
            g = rng.uniform(lo, hi, spec.n)
            edges = [(i, i + 1, x) for i, x in zip(range(1, spec.n), g[:-1])]
            edges.append((spec.n, 1, g[-1]))
            model = NetworkModel(spec.n, tuple(edges), "cycle")
        else:
            g = rng.uniform(lo, hi, len(HYBRID_EDGES))
            model = NetworkModel(6, tuple((i, j, x) for (i, j), x in zip(HYBRID_EDGES, g)))
        if is_stable(model):
            return model
    raise SamplingError(f"{MAX_REJECTIONS} consecutive unstable draws")


def sample_case(spec: StudySpec, index: int) -> tuple[NetworkModel, SignalConfig]:
    rng = _rng(spec, index)
    model = _draw_model(spec, rng)
    nodes = range(1, spec.n + 1)
    if spec.variance_range is None:
        config = SignalConfig({k: spec.sigma2 for k in nodes}, {k: spec.lam for k in nodes})
    else:
        vlo, vhi = spec.variance_range
        s = rng.uniform(vlo, vhi, spec.n)
        l = rng.uniform(vlo, vhi, spec.n)
        # U(0, hi) may in principle return exactly 0
        s[s == 0] = np.nextafter(0.0, 1.0)
        l[l == 0] = np.nextafter(0.0, 1.0)
        config = SignalConfig(dict(zip(nodes, s)), dict(zip(nodes, l)))
    return model, config


def sample_network(spec: StudySpec, index: int) -> NetworkModel:
    return sample_case(spec, index)[0]


@dataclass
class NetworkOutcome:
    index: int
    best: int | None  # position in the EMP list, None when all singular
    traces: list[float]
    largest_direct: bool | None


def _evaluate(spec: StudySpec, emps: Sequence[Emp], index: int) -> NetworkOutcome:
    model, config = sample_case(spec, index)
    ev = NetworkEvaluator(model)
    results = [ev.information(e, config) for e in emps]
    best = best_index(results)
    direct = None if best is None else largest_module_is_direct(emps[best], model)
    return NetworkOutcome(index, best, [r.trace_P for r in results], direct)


def _evaluate_chunk(args) -> list[NetworkOutcome]:
    spec, indices = args
    emps = spec.emps()
    return [_evaluate(spec, emps, i) for i in indices]


def evaluate_networks(spec: StudySpec, workers: int | None = None) -> list[NetworkOutcome]:
    indices = list(range(spec.num_networks))
    if not workers or workers <= 1:
        return _evaluate_chunk((spec, indices))
    chunks = [indices[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_evaluate_chunk, [(spec, c) for c in chunks]))
    return sorted((o for part in parts for o in part), key=lambda o: o.index)


@dataclass
class StudyReport:
    spec: StudySpec
    labels: list[str]
    wins: dict[str, int]
    percent: dict[str, float]
    best_per_network: list[str | None]
    degenerate: int
    largest_direct_rate: float
    seconds: float
    outcomes: list[NetworkOutcome] = field(default_factory=list, repr=False)

    @property
    def evaluated(self) -> int:
        return len(self.best_per_network) - self.degenerate

    def modal(self) -> str:
        return max(self.labels, key=lambda lab: (self.wins[lab], -self.labels.index(lab)))

    def share(self, labels: Sequence[str]) -> float:
        return sum(self.percent[lab] for lab in labels)

    def to_csv(self) -> str:
        lines = ["emp_label,wins,percent"]
        lines += [f"{lab},{self.wins[lab]},{self.percent[lab]:.2f}" for lab in self.labels]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": asdict(self.spec),
            "wins": self.wins,
            "percent": self.percent,
            "degenerate": self.degenerate,
            "largest_module_direct_rate": self.largest_direct_rate,
            "runtime_seconds": self.seconds,
        }


def run_study(spec: StudySpec, workers: int | None = None) -> StudyReport:
    start = time.perf_counter()
    emps = spec.emps()
    labels = [e.label for e in emps]
    outcomes = evaluate_networks(spec, workers)
    wins = Counter({lab: 0 for lab in labels})
    best_labels: list[str | None] = []
    direct = 0
    for o in outcomes:
        if o.best is None:
            best_labels.append(None)
            continue
        lab = labels[o.best]
        wins[lab] += 1
        best_labels.append(lab)
        direct += bool(o.largest_direct)
    degenerate = best_labels.count(None)
    counted = len(outcomes) - degenerate
    percent = {lab: (100.0 * wins[lab] / counted if counted else 0.0) for lab in labels}
    return StudyReport(spec, labels, dict(wins), percent, best_labels, degenerate,
                       direct / counted if counted else math.nan,
                       time.perf_counter() - start, outcomes)


@dataclass
class ConjectureReport:
    hit_rate: float
    median_ratio: float
    frac_ratio_above_100: float
    evaluated: int
    degenerate: int


def check_4cycle_conjecture(spec: StudySpec, workers: int | None = None) -> ConjectureReport:
    """Predict the better alternating pattern of a 4-node cycle from its gains.

    Pattern I (excite odd nodes) is predicted best when
    ``(a21 a43)^2 > (a32 a14)^2``, pattern II otherwise. Ties count as hits.
    """
    if spec.topology != "cycle" or spec.n != 4 or spec.emp_source != "minimal":
        raise ValidationError("conjecture check needs a 4-node cycle with the two minimal EMPs")
    outcomes = evaluate_networks(spec, workers)
    hits, ratios, degenerate = 0, [], 0
    for o in outcomes:
        t1, t2 = o.traces
        if math.isinf(t1) and math.isinf(t2):
            degenerate += 1
            continue
        model = sample_network(spec, o.index)
        direct_i = (model.gain(1, 2) * model.gain(3, 4)) ** 2
        direct_ii = (model.gain(2, 3) * model.gain(4, 1)) ** 2
        if t1 == t2 or direct_i == direct_ii:
            hits += 1
        else:
            hits += (direct_i > direct_ii) == (t1 < t2)
        ratios.append(max(t1, t2) / min(t1, t2))
    ratios = np.array(ratios)
    n = len(ratios)
    return ConjectureReport(hits / n if n else math.nan,
                            float(np.median(ratios)) if n else math.nan,
                            float(np.mean(ratios > 100)) if n else math.nan,
                            n, degenerate)
