"""Compare the engine against published tables.

Deterministic tables are checked cell by cell. Random-network tables are
checked against distribution-level claims, since the original draws cannot
be regenerated. Every check carries a ``gating`` flag: only gating checks
decide the verdict, the rest are reported for context.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

from netemp import closedform
from netemp.emp import enumerate_constrained, hybrid_constraints, largest_module_is_direct
from netemp.emp import enumerate_branch_emps, enumerate_cycle_emps, find_emp
from netemp.infoengine import NetworkEvaluator, information_matrix
from netemp.montecarlo import HYBRID_EDGES, StudySpec, check_4cycle_conjecture, hybrid_network, run_study
from netemp.netmodel import NetEmpError, SignalConfig, build_branch, build_cycle

DEFAULT_N = 2000
DEFAULT_SEED = 42


class UnknownTableError(NetEmpError, KeyError):
    pass


@dataclass
class Check:
    name: str
    expected: Any
    got: Any
    tol: str
    passed: bool
    gating: bool = True


@dataclass
class TableResult:
    table_id: str
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    @property
    def gating(self) -> list[Check]:
        return [c for c in self.checks if c.gating]

    def add(self, name, expected, got, tol, passed, gating=True) -> Check:
        c = Check(name, expected, got, tol, bool(passed), gating)
        self.checks.append(c)
        return c

    def abs_cell(self, name, expected, got, tol, gating=True) -> Check:
        return self.add(name, expected, _r(got), f"+/-{tol:g}",
                        abs(got - expected) <= tol + 1e-12, gating)

    def rel_cell(self, name, expected, got, tol, gating=True) -> Check:
        return self.add(name, expected, _r(got), f"+/-{100 * tol:g}%",
                        abs(got - expected) <= tol * abs(expected), gating)

    def pretty(self) -> str:
        rows = [("check", "expected", "got", "tol", "verdict")]
        for c in self.checks:
            verdict = ("PASS" if c.passed else "FAIL") + ("" if c.gating else " (info)")
            rows.append((c.name, _fmt(c.expected), _fmt(c.got), c.tol, verdict))
        widths = [max(len(r[k]) for r in rows) for k in range(5)]
        lines = [f"{self.table_id}: {self.title}"]
        for k, r in enumerate(rows):
            lines.append("  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        g = self.gating
        lines.append(f"{sum(c.passed for c in g)}/{len(g)} gating checks pass "
                     f"({self.seconds:.2f} s): {'PASS' if self.passed else 'FAIL'}")
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {"table": self.table_id, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "notes": self.notes,
                "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["table", "check", "expected", "got", "tol", "passed", "gating"])
        for c in self.checks:
            w.writerow([self.table_id, c.name, _fmt(c.expected), _fmt(c.got), c.tol,
                        c.passed, c.gating])
        return buf.getvalue()


def _r(x):
    return round(float(x), 6) if math.isfinite(x) else x


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (set, frozenset)):
        return "{" + ",".join(sorted(map(str, x))) + "}"
    return str(x)


def _band(ref_pct: float, n: int) -> float:
    """Half-width in percentage points: 3 pp or 3 binomial sigma, whichever is larger."""
    p = ref_pct / 100.0
    return max(3.0, 300.0 * math.sqrt(p * (1.0 - p) / n))


# ---------------------------------------------------------------- published values

TABLE1_CASES = {  # case: (a21, a12)
    1: (0.5, 0.5),
    2: (1.0, 0.5),
    3: (0.5, 1.0),
}
# var(a12), var(a21) for EMPs I..IV, times SNR
TABLE1 = {
    1: [0.92, 3.64, 3.64, 0.92, 3.64, 0.92, 0.92, 3.64],
    2: [0.66, 4.20, 0.41, 0.65, 0.41, 0.65, 0.66, 4.20],
    3: [0.65, 0.41, 4.20, 0.66, 4.20, 0.66, 0.65, 0.41],
}

TABLE4_GAINS = {  # experiment: (a13, a21, a32)
    1: (0.50, 0.50, 0.50), 2: (1.00, 0.50, 0.25), 3: (1.00, 0.25, 0.50),
    4: (0.50, 1.00, 0.25), 5: (0.25, 1.00, 0.50), 6: (0.25, 0.50, 1.00),
    7: (0.50, 0.25, 1.00),
}
TABLE4_EMPS = ("VII", "VIII", "IX", "X", "XI", "XII")
TABLE4 = {
    1: (0.083, 0.131, 0.083, 0.131, 0.083, 0.131),
    2: (0.349, 0.031, 0.027, 0.643, 0.099, 0.101),
    3: (0.099, 0.101, 0.027, 0.643, 0.349, 0.031),
    4: (0.349, 0.031, 0.099, 0.101, 0.027, 0.643),
    5: (0.099, 0.109, 0.349, 0.031, 0.027, 0.643),
    6: (0.027, 0.643, 0.349, 0.031, 0.099, 0.109),
    7: (0.027, 0.643, 0.099, 0.109, 0.349, 0.031),
}
TABLE4_BOLD = {1: {"VII", "IX", "XI"}, 2: {"IX"}, 3: {"IX"}, 4: {"XI"}, 5: {"XI"},
               6: {"VII"}, 7: {"VII"}}

TABLE6_GAINS = [(20.0, 1.0, 1.0), (1.0, 1.0, 20.0), (1.0, 20.0, 1.0)]
TABLE6 = [(0.03, 2.01, 4.04, 0.01), (0.03, 2.01, 0.01, 4.04), (8.03, 0.007, 4.02, 4.02)]
TABLE6_BEST = ["IV", "III", "II"]
TABLE6_WORST = ["III", "IV", "I"]

TABLE12 = {
    1: 0.755, 2: 1.646, 3: 15.87, 4: 2.484, 5: 0.438, 6: 0.721,
    7: 0.435, 8: 0.631, 9: 0.242, 10: 2.419, 11: 1.515, 12: 0.626,
    13: 0.795, 14: 1.448, 15: 13.656, 16: 2.718, 17: 0.958, 18: 1.268,
    19: 0.445, 20: 0.678, 21: 0.290, 22: 2.254, 23: 1.348, 24: 1.019,
}
TABLE12_RATIO = 75.0

TABLE13 = [  # tripled module (i, j), winning EMP, trace
    ((1, 2), "21", 0.1607), ((2, 3), "9", 0.1027), ((5, 3), "9", 0.1565),
    ((3, 4), "8", 0.1383), ((4, 5), "7", 0.1609), ((5, 6), "9", 0.1976),
]

TABLE3 = {"VII": 23.6, "VIII": 11.7, "IX": 20.1, "X": 10.5, "XI": 23.8, "XII": 10.3}
TABLE7 = {"I": 1.15, "II": 87.94, "III": 5.50, "IV": 5.41}
TABLE8 = {"1": 2.02, "2": 46.10, "3": 1.15, "4": 45.79, "5": 0.69, "6": 1.63, "7": 0.68,
          "8": 1.94}
TABLE9 = {"1": 0.40, "2": 16.63, "3": 0.26, "4": 60.33, "5": 0.27, "6": 2.39, "7": 0.34,
          "8": 17.66, "9": 0.10, "10": 0.37, "11": 0.10, "12": 0.27, "13": 0.17,
          "14": 0.25, "15": 0.13, "16": 0.33}
TABLE10 = {"2": 5.53, "4": 42.19, "6": 1.34, "8": 41.96, "12": 0.95, "16": 5.90}
TABLE11 = {"2": 1.69, "4": 21.37, "8": 50.09, "12": 1.53, "16": 20.19, "32": 1.77}
TABLE14 = {"4": 0.9, "5": 2.3, "6": 2.4, "7": 2.7, "8": 12.4, "9": 19.7, "10": 0.6,
           "11": 1.3, "12": 12.5, "13": 1.0, "14": 0.2, "16": 0.3, "17": 0.1, "18": 0.1,
           "19": 7.4, "20": 12.5, "21": 12.4, "22": 1.7, "23": 3.6, "24": 5.9}


# ---------------------------------------------------------------- deterministic

def table1(tol: float | None = None) -> TableResult:
    tol = 0.01 if tol is None else tol
    res = TableResult("table1", "2-node cycle variances x SNR, EMPs I-IV")
    emps = enumerate_cycle_emps(2)
    unit = SignalConfig.uniform(2, 1.0, 1.0)
    for case, (a21, a12) in TABLE1_CASES.items():
        model = build_cycle(2, (a21, a12))
        p = closedform.TwoNodeCycleParams(a12=a12, a21=a21)
        for k, label in enumerate(("I", "II", "III", "IV")):
            eng = information_matrix(model, find_emp(emps, label), unit).per_param_variance
            eng = (eng[(2, 1)], eng[(1, 2)])
            cf = closedform.twonode_variances(label, p)
            pub = closedform.twonode_variances(label, p, gammas="published")
            for m, name in enumerate(("a12", "a21")):
                exp = TABLE1[case][2 * k + m]
                cell = f"case {case} {label} {name}"
                res.abs_cell(f"{cell} engine", exp, eng[m], tol)
                res.abs_cell(f"{cell} closed form", exp, cf[m], tol)
                res.abs_cell(f"{cell} published gammas", exp, pub[m], tol, gating=False)
    res.notes.append("the 'published gammas' rows evaluate the printed gamma expressions; "
                     "they are shown for comparison only")
    return res


def table4(tol: float | None = None) -> TableResult:
    tol = 0.001 if tol is None else tol
    res = TableResult("table4", "3-node cycle traces, EMPs VII-XII, sigma2=1, lambda=0.01")
    emps = enumerate_cycle_emps(3)
    config = SignalConfig.uniform(3)
    for exp_id, (a13, a21, a32) in TABLE4_GAINS.items():
        model = build_cycle(3, (a21, a32, a13))
        ev = NetworkEvaluator(model)
        chosen = [find_emp(emps, lab) for lab in TABLE4_EMPS]
        results = [ev.information(e, config) for e in chosen]
        traces = [r.trace_P for r in results]
        for lab, want, got in zip(TABLE4_EMPS, TABLE4[exp_id], traces):
            res.abs_cell(f"exp {exp_id} {lab}", want, got, tol)
        low = min(traces)
        winners = {lab for lab, t in zip(TABLE4_EMPS, traces) if t <= low * (1 + 1e-9)}
        res.add(f"exp {exp_id} winner", TABLE4_BOLD[exp_id], winners, "exact",
                winners == TABLE4_BOLD[exp_id])
        direct = all(largest_module_is_direct(find_emp(emps, lab), model) for lab in winners)
        res.add(f"exp {exp_id} largest module direct", True, direct, "exact", direct)
    return res


def table6(tol: float | None = None) -> TableResult:
    tol = 0.005 if tol is None else tol
    res = TableResult("table6", "4-node branch traces, sigma2=1, lambda=0.01")
    emps = enumerate_branch_emps(4)
    labels = ("I", "II", "III", "IV")
    config = SignalConfig.uniform(4)
    for row, gains in enumerate(TABLE6_GAINS):
        model = build_branch(4, gains)
        ev = NetworkEvaluator(model)
        traces = [ev.information(find_emp(emps, lab), config).trace_P for lab in labels]
        tag = "gains " + ",".join(f"{g:g}" for g in gains)
        best = labels[traces.index(min(traces))]
        worst = labels[traces.index(max(traces))]
        res.add(f"{tag} best", TABLE6_BEST[row], best, "exact", best == TABLE6_BEST[row])
        res.add(f"{tag} worst", TABLE6_WORST[row], worst, "exact", worst == TABLE6_WORST[row])
        for lab, want, got in zip(labels, TABLE6[row], traces):
            res.abs_cell(f"{tag} {lab}", want, got, tol, gating=False)
    res.notes.append("absolute values are informational; the published table does not "
                     "state its variances and is checked by ordering")
    return res


def _hybrid_traces(gains):
    emps = enumerate_constrained(hybrid_constraints(), 6)
    model = hybrid_network(gains)
    ev = NetworkEvaluator(model)
    config = SignalConfig.uniform(6)
    return emps, model, [ev.information(e, config).trace_P for e in emps]


def table12(tol: float | None = None) -> TableResult:
    tol = 0.005 if tol is None else tol
    res = TableResult("table12", "hybrid network, all modules 0.3, sigma2=1, lambda=0.01")
    emps, _, traces = _hybrid_traces(0.3)
    by_label = {e.label: t for e, t in zip(emps, traces)}
    for k, want in TABLE12.items():
        res.rel_cell(f"EMP {k}", want, by_label[str(k)], tol)
    best = min(by_label, key=by_label.get)
    worst = max(by_label, key=by_label.get)
    res.add("best EMP", "9", best, "exact", best == "9")
    res.add("worst EMP", "3", worst, "exact", worst == "3")
    ratio = by_label[worst] / by_label[best]
    res.rel_cell("worst/best ratio", TABLE12_RATIO, ratio, 0.15)
    res.notes.append("the ratio of the published best and worst cells is "
                     f"{TABLE12[3] / TABLE12[9]:.1f}")
    return res


def table13(tol: float | None = None) -> TableResult:
    tol = 0.01 if tol is None else tol
    res = TableResult("table13", "hybrid network with one module tripled to 0.9")
    for edge, want_emp, want_trace in TABLE13:
        gains = {e: 0.3 for e in HYBRID_EDGES}
        gains[edge] = 0.9
        emps, model, traces = _hybrid_traces(gains)
        k = traces.index(min(traces))
        tag = f"a{edge[1]}{edge[0]} tripled"
        res.add(f"{tag} winner", want_emp, emps[k].label, "exact", emps[k].label == want_emp)
        res.rel_cell(f"{tag} trace", want_trace, traces[k], tol)
        direct = largest_module_is_direct(emps[k], model)
        res.add(f"{tag} largest module direct", True, direct, "exact", direct)
    return res


# ---------------------------------------------------------------- statistical

def _compare_shares(res: TableResult, report, reference: dict[str, float]):
    for lab, pct in reference.items():
        got = report.percent[lab]
        band = _band(pct, max(report.evaluated, 1))
        res.add(f"EMP {lab} share %", pct, round(got, 2), f"+/-{band:.2f}pp",
                abs(got - pct) <= band, gating=False)


def _study(spec: StudySpec, workers) -> Any:
    return run_study(spec, workers=workers)


def table3(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res = TableResult("table3", "3-node cycle winners, gains U[-1,1]")
    rep = _study(StudySpec("cycle", 3, n or DEFAULT_N, master_seed=seed), workers)
    odd = sum(rep.wins[lab] for lab in ("I", "II", "III", "IV", "V", "VI"))
    res.add("wins of EMPs I-VI", 0, odd, "exact", odd == 0)
    share = rep.share(["VII", "IX", "XI"])
    res.add("share of VII+IX+XI %", ">50", round(share, 2), "majority", share > 50)
    _compare_shares(res, rep, TABLE3)
    return res


def table5(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res = TableResult("table5", "5-node cycle winners, gains U[-1,1]")
    spec = StudySpec("cycle", 5, n or DEFAULT_N, master_seed=seed)
    rep = _study(spec, workers)
    balanced = [e.label for e in spec.emps() if len(e.excited) == len(e.measured)]
    share = rep.share(balanced)
    res.add("share of |B|=|C| EMPs %", ">50", round(share, 2), "majority", share > 50)
    res.add("largest module direct %", "-", round(100 * rep.largest_direct_rate, 2), "-",
            True, gating=False)
    res.notes.append("no published numbers exist for this study")
    return res


def _branch_study(table_id, n_nodes, reference, n, seed, workers) -> tuple[TableResult, Any]:
    res = TableResult(table_id, f"{n_nodes}-node branch winners, all quantities U(0,50)")
    spec = StudySpec("branch", n_nodes, n or DEFAULT_N, gain_range=(0.0, 50.0),
                     variance_range=(0.0, 50.0), master_seed=seed)
    rep = _study(spec, workers)
    _compare_shares(res, rep, reference)
    if rep.degenerate:
        res.notes.append(f"{rep.degenerate} networks had every EMP singular and were skipped")
    return res, rep


def _top_two(res, rep, expected: set[str]):
    ranked = sorted(rep.labels, key=lambda lab: -rep.wins[lab])[:2]
    res.add("two most frequent winners", expected, set(ranked), "exact", set(ranked) == expected)
    share = rep.share(sorted(expected))
    res.add("their joint share %", ">50", round(share, 2), "majority", share > 50)


def table7(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res, rep = _branch_study("table7", 4, TABLE7, n, seed, workers)
    got = rep.percent["II"]
    res.add("EMP II share in band %", "[85, 91]", round(got, 2), "band", 85.0 <= got <= 91.0)
    return res


def table8(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res, rep = _branch_study("table8", 5, TABLE8, n, seed, workers)
    _top_two(res, rep, {"2", "4"})
    return res


def table9(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res, rep = _branch_study("table9", 6, TABLE9, n, seed, workers)
    res.add("modal winner", "4", rep.modal(), "exact", rep.modal() == "4")
    return res


def table10(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res, rep = _branch_study("table10", 7, TABLE10, n, seed, workers)
    _top_two(res, rep, {"4", "8"})
    return res


def table11(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res, rep = _branch_study("table11", 8, TABLE11, n, seed, workers)
    res.add("modal winner", "8", rep.modal(), "exact", rep.modal() == "8")
    return res


def table14(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res = TableResult("table14", "hybrid network winners, gains U[-1,1]")
    rep = _study(StudySpec("hybrid", num_networks=n or DEFAULT_N, master_seed=seed), workers)
    share = rep.share(["8", "9", "12"])
    res.add("share of EMPs 8+9+12 %", ">=35", round(share, 2), "floor", share >= 35.0)
    res.add("modal winner", "9", rep.modal(), "exact", rep.modal() == "9")
    rate = 100 * rep.largest_direct_rate
    res.add("largest module direct %", ">=88", round(rate, 2), "floor", rate >= 88.0)
    _compare_shares(res, rep, TABLE14)
    return res


def conjecture(n=None, seed=DEFAULT_SEED, workers=None) -> TableResult:
    res = TableResult("conjecture", "4-node cycle: direct-module products predict the winner")
    rep = check_4cycle_conjecture(StudySpec("cycle", 4, n or DEFAULT_N, master_seed=seed),
                                  workers=workers)
    hit = 100 * rep.hit_rate
    res.add("hit rate %", ">=98", round(hit, 2), "floor", hit >= 98.0)
    res.add("median trace ratio", "[6, 12]", round(rep.median_ratio, 3), "band",
            6.0 <= rep.median_ratio <= 12.0)
    above = 100 * rep.frac_ratio_above_100
    res.add("ratios above 100 %", 20.0, round(above, 2), "+/-3pp", abs(above - 20.0) <= 3.0,
            gating=False)
    return res


DETERMINISTIC: dict[str, Callable[..., TableResult]] = {
    "table1": table1, "table4": table4, "table6": table6, "table12": table12,
    "table13": table13,
}
STATISTICAL: dict[str, Callable[..., TableResult]] = {
    "table3": table3, "table5": table5, "table7": table7, "table8": table8,
    "table9": table9, "table10": table10, "table11": table11, "table14": table14,
    "conjecture": conjecture,
}
TABLE_IDS: tuple[str, ...] = tuple(sorted(
    {**DETERMINISTIC, **STATISTICAL},
    key=lambda t: (t == "conjecture", int(t[5:]) if t[5:].isdigit() else 0)))


def normalize_id(table_id: str) -> str:
    t = str(table_id).strip().lower()
    if t.isdigit():
        t = "table" + t
    if t not in DETERMINISTIC and t not in STATISTICAL:
        raise UnknownTableError(f"unknown table id {table_id!r}; choose from {', '.join(TABLE_IDS)}")
    return t


def reproduce_table(table_id: str, n: int | None = None, seed: int = DEFAULT_SEED,
                    tol: float | None = None, workers: int | None = None) -> TableResult:
    """Run one comparison. ``tol`` overrides the cell tolerance of deterministic tables;
    ``n`` and ``seed`` apply to the statistical ones."""
    t = normalize_id(table_id)
    start = time.perf_counter()
    if t in DETERMINISTIC:
        res = DETERMINISTIC[t](tol)
    else:
        res = STATISTICAL[t](n, seed, workers)
    res.seconds = time.perf_counter() - start
    return res


def reproduce_all(ids: Sequence[str] | None = None, **kwargs) -> list[TableResult]:
    return [reproduce_table(t, **kwargs) for t in (ids or TABLE_IDS)]
