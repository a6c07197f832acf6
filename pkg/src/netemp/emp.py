"""Excitation and measurement patterns (EMPs).

An EMP is a pair of node sets: the excited nodes and the measured nodes.
The enumerators below generate the minimal patterns of branches, cycles
and of networks described by per-node role constraints.

Generic enumeration order: the doubled node of each cycle group varies
slowest (ascending), then the binary choice vector over the free nodes in
ascending node order, ``0`` meaning "excite" and ``1`` meaning "measure",
read as a big-endian number. Families with published numbering (2- and
3-node cycles, 3- and 4-node branches, even cycles, the six-node hybrid
example) are reordered and labelled by the static tables at the bottom
of this module.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from netemp.netmodel import Edge, InvalidSizeError, NetworkModel, ValidationError

ROLES = ("must_excite", "must_measure", "either", "both", "one_of_group_both")

_ROMAN = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII"]


@dataclass(frozen=True)
class Emp:
    excited: frozenset[int]
    measured: frozenset[int]
    label: str | None = field(default=None, compare=False)

    def __init__(self, excited: Iterable[int], measured: Iterable[int], label: str | None = None):
        object.__setattr__(self, "excited", frozenset(int(i) for i in excited))
        object.__setattr__(self, "measured", frozenset(int(j) for j in measured))
        object.__setattr__(self, "label", label)

    @property
    def nu(self) -> int:
        return len(self.excited) + len(self.measured)

    @property
    def doubled(self) -> frozenset[int]:
        return self.excited & self.measured

    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(sorted(self.excited)), tuple(sorted(self.measured))

    def with_label(self, label: str | None) -> "Emp":
        return Emp(self.excited, self.measured, label)

    def selection_matrices(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Binary ``B`` (n x |excited|) and ``C`` (|measured| x n)."""
        eye = np.eye(n)
        ex, me = self.key()
        B = eye[:, [i - 1 for i in ex]]
        C = eye[[j - 1 for j in me], :]
        return B, C

    def __str__(self) -> str:
        ex, me = self.key()
        body = f"({{{', '.join(map(str, ex))}}}, {{{', '.join(map(str, me))}}})"
        return f"{self.label}: {body}" if self.label else body


@dataclass(frozen=True)
class RoleConstraint:
    """Per-node role requirements.

    ``roles`` maps every node to one of :data:`ROLES`. Nodes with role
    ``one_of_group_both`` must belong to exactly one of ``groups``; within a
    group exactly one node is both excited and measured and the others take
    a single role each.
    """

    roles: Mapping[int, str]
    groups: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        roles = {int(k): v for k, v in self.roles.items()}
        groups = tuple(frozenset(int(i) for i in g) for g in self.groups)
        for k, v in roles.items():
            if v not in ROLES:
                raise ValidationError(f"node {k}: unknown role {v!r}")
        member: dict[int, int] = {}
        for gi, g in enumerate(groups):
            if not g:
                raise ValidationError("empty group")
            for i in g:
                if i in member:
                    raise ValidationError(f"node {i} belongs to more than one group")
                member[i] = gi
                if roles.setdefault(i, "one_of_group_both") != "one_of_group_both":
                    raise ValidationError(f"node {i} is grouped but has role {roles[i]!r}")
        for k, v in roles.items():
            if v == "one_of_group_both" and k not in member:
                raise ValidationError(f"node {k} has role one_of_group_both but no group")
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "groups", groups)

    def covers(self, n: int) -> bool:
        return set(self.roles) == set(range(1, n + 1))


def enumerate_constrained(constraints: RoleConstraint, n: int) -> list[Emp]:
    if not constraints.covers(n):
        raise ValidationError(f"constraints must cover exactly the nodes 1..{n}")
    roles = constraints.roles
    base_ex = {k for k, r in roles.items() if r in ("must_excite", "both")}
    base_me = {k for k, r in roles.items() if r in ("must_measure", "both")}
    either = [k for k in sorted(roles) if roles[k] == "either"]
    groups = [sorted(g) for g in constraints.groups]

    out: list[Emp] = []
    seen = set()
    for doubled in itertools.product(*groups):
        free = sorted(either + [i for g in groups for i in g if i not in doubled])
        for bits in itertools.product((0, 1), repeat=len(free)):
            ex = set(base_ex) | set(doubled)
            me = set(base_me) | set(doubled)
            for node, b in zip(free, bits):
                (me if b else ex).add(node)
            emp = Emp(ex, me)
            if emp.key() not in seen:
                seen.add(emp.key())
                out.append(emp)
    return _relabel(out)


def branch_constraints(n: int) -> RoleConstraint:
    roles = {k: "either" for k in range(2, n)}
    roles[1] = "must_excite"
    roles[n] = "must_measure"
    return RoleConstraint(roles)


def cycle_constraints(n: int) -> RoleConstraint:
    return RoleConstraint({}, (frozenset(range(1, n + 1)),))


def hybrid_constraints() -> RoleConstraint:
    """Constraints of the six-node example: a branch 1 -> 2 -> 3 feeding the
    loop 3 -> 4 -> 5 -> 3, which drains into node 6."""
    return RoleConstraint({1: "must_excite", 2: "either", 6: "must_measure"},
                          (frozenset({3, 4, 5}),))


def enumerate_branch_emps(n: int) -> list[Emp]:
    if n < 2:
        raise InvalidSizeError("n must be ≥ 2")
    return enumerate_constrained(branch_constraints(n), n)


def enumerate_cycle_emps(n: int, include_doubled: bool = False) -> list[Emp]:
    """Minimal EMPs of an ``n``-node cycle.

    Even cycles with ``n > 3`` admit the two alternating patterns. With
    ``include_doubled`` the one-doubled-node family (cardinality n+1) is
    appended after them for comparison studies.
    """
    if n < 2:
        raise InvalidSizeError("n must be ≥ 2")
    if n % 2 == 0 and n > 3:
        odd = range(1, n + 1, 2)
        even = range(2, n + 1, 2)
        emps = [Emp(odd, even, "I"), Emp(even, odd, "II")]
        if include_doubled:
            extra = enumerate_constrained(cycle_constraints(n), n)
            emps += [e.with_label(f"D{k}") for k, e in enumerate(extra, 1)]
        return emps
    return enumerate_constrained(cycle_constraints(n), n)


def direct_modules(emp: Emp, model: NetworkModel) -> set[Edge]:
    return {(i, j) for i, j, _ in model.edges if i in emp.excited and j in emp.measured}


def validate_necessary(emp: Emp, n: int) -> bool:
    return (emp.excited | emp.measured) == set(range(1, n + 1))


def largest_module_is_direct(emp: Emp, model: NetworkModel) -> bool:
    """Whether a largest-magnitude module is direct.

    With several modules tied for the largest magnitude, any one of them
    being direct is enough.
    """
    gains = np.abs(model.gains)
    top = gains.max()
    return any(g == top and i in emp.excited and j in emp.measured
               for (i, j), g in zip(model.parameters, gains))


def emps_to_csv(emps: Sequence[Emp], extra: Mapping[str, Sequence] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    extra = extra or {}
    writer.writerow(["label", "excited", "measured", "nu", *extra])
    for k, e in enumerate(emps):
        ex, me = e.key()
        writer.writerow([e.label or "", ";".join(map(str, ex)), ";".join(map(str, me)), e.nu,
                         *(col[k] for col in extra.values())])
    return buf.getvalue()


def emps_from_csv(text: str) -> list[Emp]:
    def parse(cell):
        return [int(x) for x in cell.split(";") if x.strip()]

    return [Emp(parse(row["excited"]), parse(row["measured"]), row.get("label") or None)
            for row in csv.DictReader(io.StringIO(text))]


# Published numbering, as (excited, measured) pairs in table order.
_TABLES: list[tuple[list[str], list[tuple[set[int], set[int]]]]] = [
    (_ROMAN[:4], [({1, 2}, {1}), ({1, 2}, {2}), ({1}, {1, 2}), ({2}, {1, 2})]),
    (_ROMAN[:12], [({1, 2, 3}, {1}), ({1, 2, 3}, {2}), ({1, 2, 3}, {3}),
                   ({1}, {1, 2, 3}), ({2}, {1, 2, 3}), ({3}, {1, 2, 3}),
                   ({1, 2}, {1, 3}), ({1, 3}, {1, 2}), ({2, 3}, {1, 2}),
                   ({1, 2}, {2, 3}), ({1, 3}, {2, 3}), ({2, 3}, {1, 3})]),
    (_ROMAN[:2], [({1, 2}, {3}), ({1}, {2, 3})]),
    (_ROMAN[:4], [({1, 3}, {2, 4}), ({1, 2}, {3, 4}), ({1, 2, 3}, {4}), ({1}, {2, 3, 4})]),
]


def _hybrid_table() -> list[tuple[set[int], set[int]]]:
    # Same ordering as the 3-node cycle table on nodes 3, 4, 5, first with
    # node 2 excited and then with node 2 measured.
    relabel = {1: 3, 2: 4, 3: 5}
    loop = [({relabel[i] for i in b}, {relabel[j] for j in c}) for b, c in _TABLES[1][1]]
    rows = [({1, 2} | b, c | {6}) for b, c in loop]
    rows += [({1} | b, {2} | c | {6}) for b, c in loop]
    return rows


_TABLES.append(([str(k) for k in range(1, 25)], _hybrid_table()))

_TABLE_INDEX = {
    frozenset((frozenset(b), frozenset(c)) for b, c in rows): (labels, rows)
    for labels, rows in _TABLES
}


def _relabel(emps: list[Emp]) -> list[Emp]:
    key = frozenset((e.excited, e.measured) for e in emps)
    if key in _TABLE_INDEX:
        labels, rows = _TABLE_INDEX[key]
        return [Emp(b, c, lab) for lab, (b, c) in zip(labels, rows)]
    return [e.with_label(str(k)) for k, e in enumerate(emps, 1)]


def find_emp(emps: Sequence[Emp], label: str) -> Emp:
    for e in emps:
        if e.label == label:
            return e
    raise KeyError(label)
