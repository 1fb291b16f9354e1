"""Problem data model: clustered customers, asymmetric dual cost matrices and
route-set solutions.

A problem instance is a complete directed graph over one depot (id 0) and n
customers. Customers are partitioned into clusters that must each be served
contiguously by a single vehicle. Every customer carries a delivery demand
(loaded at the depot) and a pickup demand (returned to the depot). Two dense
cost matrices price each arc in travel-seconds: one for the off-peak schedule
and a more expensive one for the 08:00-10:00 peak window. A set of ordered
forbidden arcs may never appear in a route.

Solutions are route lists over customer ids. The canonical flat encoding is a
permutation of all customer ids with a single 0 between consecutive routes and
no leading/trailing zeros, so empty routes are unrepresentable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

DAY_START_S = 0
PEAK_START_S = 7200
PEAK_END_S = 14400
DAY_END_S = 32400

OFFPEAK = "offpeak"
PEAK = "peak"

COST_DECIMALS = 2  # serialized cost precision; files are the reproducibility ground truth


@dataclass(frozen=True)
class Node:
    """Depot (id 0, cluster 0) or customer node.

    Coordinates are planar, in units where one distance unit equals one
    travel-second.
    """

    id: int
    x: float
    y: float
    delivery: int
    pickup: int
    cluster: int


@dataclass(frozen=True)
class Solution:
    """Ordered routes over customer ids; the depot is implicit at both ends."""

    routes: tuple[tuple[int, ...], ...]

    @classmethod
    def from_routes(cls, routes: Iterable[Iterable[int]]) -> "Solution":
        return cls(tuple(tuple(r) for r in routes))

    @property
    def vehicles(self) -> int:
        return len(self.routes)

    def customers(self) -> Iterator[int]:
        for route in self.routes:
            yield from route


class DecodeError(ValueError):
    """Flat encoding cannot be decoded; ``reason`` is a stable tag."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass
class Instance:
    """Immutable problem instance.

    ``nodes`` must list the depot first; matrix row/column order follows the
    node order (``index`` maps node id to matrix index, so derived instances
    can keep their original, non-contiguous ids). ``clusters`` is derived from
    the per-node cluster labels unless given explicitly.
    """

    name: str
    nodes: tuple[Node, ...]
    capacity: int
    cost_offpeak: list[list[float]]
    cost_peak: list[list[float]]
    forbidden: frozenset[tuple[int, int]] = frozenset()
    clusters: dict[int, tuple[int, ...]] | None = None
    day_start_s: int = DAY_START_S
    peak_window_s: tuple[int, int] = (PEAK_START_S, PEAK_END_S)
    day_end_s: int = DAY_END_S

    # derived lookups, built once; treat the instance as immutable afterwards
    index: dict[int, int] = field(init=False, repr=False)
    customers: tuple[int, ...] = field(init=False, repr=False)
    delivery: dict[int, int] = field(init=False, repr=False)
    pickup: dict[int, int] = field(init=False, repr=False)
    cluster_of: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.nodes = tuple(self.nodes)
        self.forbidden = frozenset((int(i), int(j)) for i, j in self.forbidden)
        self.index = {node.id: pos for pos, node in enumerate(self.nodes)}
        self.customers = tuple(node.id for node in self.nodes if node.id != 0)
        self.delivery = {node.id: node.delivery for node in self.nodes}
        self.pickup = {node.id: node.pickup for node in self.nodes}
        self.cluster_of = {node.id: node.cluster for node in self.nodes}
        if self.clusters is None:
            groups: dict[int, list[int]] = {}
            for node in self.nodes:
                if node.id != 0:
                    groups.setdefault(node.cluster, []).append(node.id)
            self.clusters = {label: tuple(ids) for label, ids in sorted(groups.items())}
        else:
            self.clusters = {int(k): tuple(v) for k, v in self.clusters.items()}

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    def node(self, node_id: int) -> Node:
        return self.nodes[self.index[node_id]]

    def offpeak(self, i: int, j: int) -> float:
        return self.cost_offpeak[self.index[i]][self.index[j]]

    def peak(self, i: int, j: int) -> float:
        return self.cost_peak[self.index[i]][self.index[j]]

    # ------------------------------------------------------------------ JSON

    def to_dict(self) -> dict:
        """JSON-ready dict; costs rounded to 2 decimals (file schema)."""
        return {
            "name": self.name,
            "capacity": int(self.capacity),
            "day_start_s": int(self.day_start_s),
            "peak_window_s": [int(self.peak_window_s[0]), int(self.peak_window_s[1])],
            "day_end_s": int(self.day_end_s),
            "nodes": [
                {
                    "id": n.id,
                    "x": n.x,
                    "y": n.y,
                    "delivery": n.delivery,
                    "pickup": n.pickup,
                    "cluster": n.cluster,
                }
                for n in self.nodes
            ],
            "forbidden": sorted([i, j] for i, j in self.forbidden),
            "cost_offpeak": [[round(c, COST_DECIMALS) for c in row] for row in self.cost_offpeak],
            "cost_peak": [[round(c, COST_DECIMALS) for c in row] for row in self.cost_peak],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Instance":
        nodes = tuple(
            Node(
                id=int(n["id"]),
                x=float(n["x"]),
                y=float(n["y"]),
                delivery=int(n["delivery"]),
                pickup=int(n["pickup"]),
                cluster=int(n["cluster"]),
            )
            for n in data["nodes"]
        )
        if "cost_offpeak" in data and "cost_peak" in data:
            off = [[float(c) for c in row] for row in data["cost_offpeak"]]
            peak = [[float(c) for c in row] for row in data["cost_peak"]]
        else:
            # matrices are optional in the file schema; rebuild them from the
            # coordinates with the benchmark cost rules
            from .generator import assign_costs

            off, peak = assign_costs(nodes)
        window = data.get("peak_window_s", (PEAK_START_S, PEAK_END_S))
        return cls(
            name=str(data["name"]),
            nodes=nodes,
            capacity=int(data["capacity"]),
            cost_offpeak=off,
            cost_peak=peak,
            forbidden=frozenset((int(i), int(j)) for i, j in data.get("forbidden", [])),
            day_start_s=int(data.get("day_start_s", DAY_START_S)),
            peak_window_s=(int(window[0]), int(window[1])),
            day_end_s=int(data.get("day_end_s", DAY_END_S)),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------- encoding


def encode(sol: Solution) -> list[int]:
    """Flatten routes into the canonical zero-separated permutation."""
    flat: list[int] = []
    for pos, route in enumerate(sol.routes):
        if pos:
            flat.append(0)
        flat.extend(route)
    return flat


def decode(flat: Sequence[int], inst: Instance) -> Solution:
    """Inverse of :func:`encode`; rejects non-canonical or invalid input."""
    if len(flat) == 0:
        raise DecodeError("non-canonical-separator", "empty encoding")
    if flat[0] == 0 or flat[-1] == 0:
        raise DecodeError("non-canonical-separator", "leading or trailing zero")
    routes: list[list[int]] = [[]]
    seen: set[int] = set()
    known = set(inst.customers)
    for value in flat:
        value = int(value)
        if value == 0:
            if not routes[-1]:
                raise DecodeError("non-canonical-separator", "consecutive zeros")
            routes.append([])
            continue
        if value not in known:
            raise DecodeError("unknown-customer", str(value))
        if value in seen:
            raise DecodeError("duplicate-customer", str(value))
        seen.add(value)
        routes[-1].append(value)
    missing = known - seen
    if missing:
        raise DecodeError("missing-customer", str(sorted(missing)))
    return Solution.from_routes(routes)


# -------------------------------------------------------------- validation


@dataclass(frozen=True)
class ValidationIssue:
    name: str
    detail: str


@dataclass
class ValidationReport:
    ok: bool
    violations: list[ValidationIssue]

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.violations]


def _hamiltonian_path_exists(
    members: Sequence[int], forbidden: frozenset[tuple[int, int]] | set[tuple[int, int]]
) -> bool:
    """Exact backtracking search for an order of ``members`` avoiding every
    forbidden arc (entry and exit arcs are unconstrained)."""
    members = list(members)
    if len(members) <= 1:
        return True
    blocked = {(i, j) for i, j in forbidden if i in set(members) and j in set(members)}
    if not blocked:
        return True
    remaining = set(members)

    def extend(last: int) -> bool:
        if not remaining:
            return True
        for nxt in list(remaining):
            if (last, nxt) in blocked:
                continue
            remaining.discard(nxt)
            if extend(nxt):
                return True
            remaining.add(nxt)
        return False

    for first in members:
        remaining.discard(first)
        if extend(first):
            return True
        remaining.add(first)
    return False


def _min_max_load(members: Sequence[int], inst: Instance) -> int:
    """Smallest achievable peak load when a vehicle serves ``members`` alone.

    Visiting customers in descending (delivery - pickup) order keeps every
    prefix sum maximal, which minimises the running load simultaneously at
    every position, so a single simulation suffices.
    """
    deltas = sorted((inst.delivery[m] - inst.pickup[m] for m in members), reverse=True)
    total = sum(inst.delivery[m] for m in members)
    load = total
    peak = total
    for delta in deltas:
        load -= delta
        peak = max(peak, load)
    return peak


def validate_instance(inst: Instance) -> ValidationReport:
    """Check every structural invariant; violations are data, not exceptions."""
    issues: list[ValidationIssue] = []

    def add(name: str, detail: str) -> None:
        issues.append(ValidationIssue(name, detail))

    ids = [n.id for n in inst.nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        add("duplicate-node-id", str(dupes))
    if not inst.nodes or inst.nodes[0].id != 0:
        add("depot-invalid", "node 0 must exist and come first")
    else:
        depot = inst.nodes[0]
        if depot.cluster != 0 or depot.delivery != 0 or depot.pickup != 0:
            add("depot-invalid", "depot must have cluster 0 and zero demands")

    for node in inst.nodes[1:]:
        if node.delivery <= 0 or node.pickup < 0:
            add("customer-demand-invalid", f"node {node.id}: d={node.delivery} p={node.pickup}")
        if node.cluster <= 0:
            add("customer-in-depot-cluster", f"node {node.id}")

    # cluster partition: disjoint, nonempty, covering all customers
    seen: dict[int, int] = {}
    for label, members in inst.clusters.items():
        if not members:
            add("cluster-empty", f"cluster {label}")
        for m in members:
            if m in seen:
                add("clusters-not-disjoint", f"node {m} in clusters {seen[m]} and {label}")
            seen[m] = label
    uncovered = set(inst.customers) - set(seen)
    if uncovered:
        add("clusters-incomplete", str(sorted(uncovered)))
    stray = set(seen) - set(inst.customers)
    if stray:
        add("cluster-member-unknown", str(sorted(stray)))

    size = len(inst.nodes)
    for tag, matrix in ((OFFPEAK, inst.cost_offpeak), (PEAK, inst.cost_peak)):
        if len(matrix) != size or any(len(row) != size for row in matrix):
            add("matrix-shape-invalid", tag)
            continue
        for a in range(size):
            row = matrix[a]
            for b in range(size):
                if a != b and row[b] < 0:
                    add("negative-cost", f"{tag}[{ids[a]}][{ids[b]}]")
            for b in range(a + 1, size):
                if row[b] == matrix[b][a]:
                    add("asymmetry-violated", f"{tag} arc ({ids[a]},{ids[b]})")

    known = set(inst.customers)
    for i, j in sorted(inst.forbidden):
        if i == 0 or j == 0:
            add("forbidden-arc-touches-depot", f"({i},{j})")
        elif i not in known or j not in known or i == j:
            add("forbidden-arc-invalid", f"({i},{j})")
        elif inst.cluster_of[i] != inst.cluster_of[j]:
            add("forbidden-arc-crosses-clusters", f"({i},{j})")

    for label, members in inst.clusters.items():
        if not members or any(m not in known for m in members):
            continue
        if not _hamiltonian_path_exists(members, inst.forbidden):
            add("cluster-path-infeasible", f"cluster {label}")
        if _min_max_load(members, inst) > inst.capacity:
            add("cluster-load-exceeds-capacity", f"cluster {label}")

    return ValidationReport(ok=not issues, violations=issues)
