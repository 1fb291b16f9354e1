"""Seeded regeneration of the 15-instance benchmark suite.

One 100-customer skeleton is drawn per seed: ten cluster centres uniform over
a 20000 x 16000 planar box (units are travel-seconds), ten customers per
cluster uniform in a disc of radius 1500 around their centre, and the depot
fixed at the box centre. Customer ids are assigned cluster by cluster (ids
10(s-1)+1..10s belong to cluster s) and demands follow the id modulo 4:

    i % 4 == 1 -> delivery 10, pickup 5
    i % 4 == 2 -> delivery 10, pickup 0
    i % 4 == 3 -> delivery  5, pickup 3
    i % 4 == 0 -> delivery  5, pickup 0

Costs are asymmetric by construction. With e = Euclid(i, j) for i < j:

    off-peak:  d_ij = e           d_ji = 1.2 e (j odd) | 0.8 e (j even)
    peak:      d_ij = 1.3 e       d_ji = 1.44 e (j odd) | 1.12 e (j even)

The 15 suite rows select node subsets of the shared skeleton (odd/even
clusters, first/last 5 nodes per cluster, first 8 clusters/nodes, or all) and
keep the original ids, so the parity-based cost rules survive subsetting.
Forbidden arcs are sampled per cluster and resampled until a feasible
intra-cluster order provably exists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance, Node, _hamiltonian_path_exists, validate_instance
from .operators import random_solution

BOX_W = 20000.0
BOX_H = 16000.0
CLUSTER_RADIUS = 1500.0
DEPOT_XY = (10000.0, 8000.0)
BASE_CLUSTERS = 10
NODES_PER_CLUSTER = 10
MIN_SEPARATION = 1.0  # resample points closer than this (keeps costs strictly asymmetric)

OFFPEAK_REVERSE_ODD = 1.2
OFFPEAK_REVERSE_EVEN = 0.8
PEAK_FORWARD = 1.3
PEAK_REVERSE_ODD = 1.2 * 1.2
PEAK_REVERSE_EVEN = 0.8 * 1.4

FORBIDDEN_RESAMPLE_LIMIT = 10_000


class GenerationError(RuntimeError):
    pass


def demand_for(customer_id: int) -> tuple[int, int]:
    """(delivery, pickup) by customer id modulo 4."""
    return {1: (10, 5), 2: (10, 0), 3: (5, 3), 0: (5, 0)}[customer_id % 4]


# ------------------------------------------------------------------ skeleton


@dataclass(frozen=True)
class Skeleton:
    """Coordinates, clusters and demands of the shared 100-customer layout;
    costs and forbidden arcs are assigned per derived instance."""

    nodes: tuple[Node, ...]


def generate_base(seed: int) -> Skeleton:
    rng = np.random.default_rng(seed)
    while True:
        centers = rng.uniform((0.0, 0.0), (BOX_W, BOX_H), size=(BASE_CLUSTERS, 2))
        points = [np.array(DEPOT_XY)]
        for c in range(BASE_CLUSTERS):
            for _ in range(NODES_PER_CLUSTER):
                while True:
                    # uniform in the disc via rejection from the bounding square
                    offset = rng.uniform(-CLUSTER_RADIUS, CLUSTER_RADIUS, size=2)
                    if offset[0] ** 2 + offset[1] ** 2 <= CLUSTER_RADIUS**2:
                        break
                points.append(centers[c] + offset)
        coords = np.array(points)
        deltas = coords[:, None, :] - coords[None, :, :]
        dists = np.sqrt((deltas**2).sum(axis=2))
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= MIN_SEPARATION:
            break
    nodes = [Node(0, float(coords[0, 0]), float(coords[0, 1]), 0, 0, 0)]
    for cid in range(1, BASE_CLUSTERS * NODES_PER_CLUSTER + 1):
        cluster = (cid - 1) // NODES_PER_CLUSTER + 1
        d, p = demand_for(cid)
        nodes.append(Node(cid, float(coords[cid, 0]), float(coords[cid, 1]), d, p, cluster))
    return Skeleton(nodes=tuple(nodes))


# --------------------------------------------------------------------- costs


def assign_costs(nodes: Sequence[Node]) -> tuple[list[list[float]], list[list[float]]]:
    """Dense (off-peak, peak) matrices over ``nodes`` (depot included).

    Direction and parity follow the original node ids: for each pair with
    ids i < j the forward arc is i->j and the reverse multiplier depends on
    whether j is odd. Matrix indices follow the node order.
    """
    size = len(nodes)
    xs = np.array([n.x for n in nodes])
    ys = np.array([n.y for n in nodes])
    euclid = np.sqrt((xs[:, None] - xs[None, :]) ** 2 + (ys[:, None] - ys[None, :]) ** 2)
    ids = [n.id for n in nodes]
    off = [[0.0] * size for _ in range(size)]
    peak = [[0.0] * size for _ in range(size)]
    for a in range(size):
        for b in range(size):
            if a == b:
                continue
            e = float(euclid[a, b])
            i, j = ids[a], ids[b]
            if i < j:
                forward = True
                j_odd = j % 2 == 1
            else:
                forward = False
                j_odd = i % 2 == 1
            if forward:
                off[a][b] = e
                peak[a][b] = e * PEAK_FORWARD
            elif j_odd:
                off[a][b] = e * OFFPEAK_REVERSE_ODD
                peak[a][b] = e * PEAK_REVERSE_ODD
            else:
                off[a][b] = e * OFFPEAK_REVERSE_EVEN
                peak[a][b] = e * PEAK_REVERSE_EVEN
    return off, peak


# ----------------------------------------------------------------- forbidden


def cluster_path_exists(members: Sequence[int], forbidden: Iterable[tuple[int, int]]) -> bool:
    """True iff some visiting order of ``members`` avoids every forbidden arc
    (exact backtracking; entry/exit arcs are unconstrained)."""
    return _hamiltonian_path_exists(members, frozenset(forbidden))


def select_forbidden(
    clusters: dict[int, tuple[int, ...]], per_cluster: int, rng: np.random.Generator
) -> frozenset[tuple[int, int]]:
    """Sample ``per_cluster`` distinct ordered intra-cluster arcs per cluster,
    rejecting any cluster set that kills every Hamiltonian path."""
    chosen: set[tuple[int, int]] = set()
    for label in sorted(clusters):
        members = clusters[label]
        arcs = [(i, j) for i in members for j in members if i != j]
        if per_cluster > len(arcs):
            raise GenerationError(
                f"cluster {label}: cannot forbid {per_cluster} of {len(arcs)} arcs"
            )
        for attempt in range(FORBIDDEN_RESAMPLE_LIMIT):
            picks = rng.choice(len(arcs), size=per_cluster, replace=False)
            subset = [arcs[int(p)] for p in sorted(int(p) for p in picks)]
            if cluster_path_exists(members, subset):
                chosen.update(subset)
                break
        else:
            raise GenerationError(f"cluster {label}: no feasible forbidden set found")
    return frozenset(chosen)


# --------------------------------------------------------------------- suite


@dataclass(frozen=True)
class SuiteRow:
    name: str
    nodes: int
    clusters: int
    capacity: int
    forbidden_per_cluster: int
    selection: str


SUITE: tuple[SuiteRow, ...] = (
    SuiteRow("Osaba_50_1_1", 50, 5, 240, 5, "odd-clusters"),
    SuiteRow("Osaba_50_1_2", 50, 5, 160, 10, "odd-clusters"),
    SuiteRow("Osaba_50_1_3", 50, 10, 240, 5, "first-5-nodes"),
    SuiteRow("Osaba_50_1_4", 50, 10, 160, 10, "first-5-nodes"),
    SuiteRow("Osaba_50_2_1", 50, 5, 240, 5, "even-clusters"),
    SuiteRow("Osaba_50_2_2", 50, 5, 160, 10, "even-clusters"),
    SuiteRow("Osaba_50_2_3", 50, 10, 240, 5, "last-5-nodes"),
    SuiteRow("Osaba_50_2_4", 50, 10, 160, 10, "last-5-nodes"),
    SuiteRow("Osaba_80_1", 80, 8, 240, 5, "first-8-clusters"),
    SuiteRow("Osaba_80_2", 80, 8, 160, 10, "first-8-clusters"),
    SuiteRow("Osaba_80_3", 80, 10, 240, 5, "first-8-nodes"),
    SuiteRow("Osaba_80_4", 80, 10, 160, 10, "first-8-nodes"),
    SuiteRow("Osaba_100_1", 100, 10, 140, 5, "all"),
    SuiteRow("Osaba_100_2", 100, 10, 260, 10, "all"),
    SuiteRow("Osaba_100_3", 100, 10, 320, 10, "all"),
)


def _selected_ids(selection: str) -> list[int]:
    def cluster_ids(s: int) -> list[int]:
        return list(range(NODES_PER_CLUSTER * (s - 1) + 1, NODES_PER_CLUSTER * s + 1))

    all_clusters = range(1, BASE_CLUSTERS + 1)
    if selection == "odd-clusters":
        return [cid for s in all_clusters if s % 2 == 1 for cid in cluster_ids(s)]
    if selection == "even-clusters":
        return [cid for s in all_clusters if s % 2 == 0 for cid in cluster_ids(s)]
    if selection == "first-5-nodes":
        return [cid for s in all_clusters for cid in cluster_ids(s)[:5]]
    if selection == "last-5-nodes":
        return [cid for s in all_clusters for cid in cluster_ids(s)[5:]]
    if selection == "first-8-clusters":
        return [cid for s in all_clusters if s <= 8 for cid in cluster_ids(s)]
    if selection == "first-8-nodes":
        return [cid for s in all_clusters for cid in cluster_ids(s)[:8]]
    if selection == "all":
        return [cid for s in all_clusters for cid in cluster_ids(s)]
    raise GenerationError(f"unknown selection rule {selection!r}")


def row_seed(base_seed: int, row_index: int) -> int:
    """Stable per-row RNG seed, independent of which rows are generated."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(row_index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_instance(base: Skeleton, row: SuiteRow, seed: int) -> Instance:
    """Build one suite row from the skeleton: subset nodes, price arcs, sample
    forbidden paths, and prove solvability by constructing a random solution."""
    rng = np.random.default_rng(seed)
    by_id = {n.id: n for n in base.nodes}
    selected = _selected_ids(row.selection)
    nodes = (by_id[0], *(by_id[cid] for cid in selected))
    if len(nodes) - 1 != row.nodes:
        raise GenerationError(f"{row.name}: selected {len(nodes) - 1} nodes, expected {row.nodes}")
    off, peak = assign_costs(nodes)
    clusters: dict[int, list[int]] = {}
    for n in nodes[1:]:
        clusters.setdefault(n.cluster, []).append(n.id)
    if len(clusters) != row.clusters:
        raise GenerationError(f"{row.name}: got {len(clusters)} clusters, expected {row.clusters}")
    forbidden = select_forbidden(
        {k: tuple(v) for k, v in clusters.items()}, row.forbidden_per_cluster, rng
    )
    inst = Instance(
        name=row.name,
        nodes=nodes,
        capacity=row.capacity,
        cost_offpeak=off,
        cost_peak=peak,
        forbidden=forbidden,
    )
    report = validate_instance(inst)
    if not report.ok:
        raise GenerationError(f"{row.name}: invalid instance: {report.names}")
    random_solution(inst, rng)  # constructive proof that a feasible solution exists
    return inst


def derive_suite(base: Skeleton, seed: int, only: Iterable[str] | None = None) -> list[Instance]:
    wanted = set(only) if only else None
    if wanted:
        unknown = wanted - {row.name for row in SUITE}
        if unknown:
            raise GenerationError(f"unknown instance names: {sorted(unknown)}")
    instances = []
    for idx, row in enumerate(SUITE):
        if wanted and row.name not in wanted:
            continue
        instances.append(derive_instance(base, row, row_seed(seed, idx)))
    return instances


def generate_suite(seed: int, only: Iterable[str] | None = None) -> list[Instance]:
    return derive_suite(generate_base(seed), seed, only=only)


def write_suite(instances: Sequence[Instance], out_dir: str | Path, seed: int) -> Path:
    """Write one JSON file per instance plus ``suite-manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    row_index = {row.name: idx for idx, row in enumerate(SUITE)}
    entries = []
    for inst in instances:
        path = inst.save(out / f"{inst.name}.json")
        entry = {"name": inst.name, "file": path.name}
        if inst.name in row_index:
            entry["seed"] = row_seed(seed, row_index[inst.name])
        entries.append(entry)
    manifest = out / "suite-manifest.json"
    manifest.write_text(
        json.dumps({"seed": seed, "instances": entries}, indent=1) + "\n", encoding="utf-8"
    )
    return manifest


def load_suite(suite_dir: str | Path) -> list[Instance]:
    """Load every instance listed by a directory's manifest."""
    suite_dir = Path(suite_dir)
    manifest = suite_dir / "suite-manifest.json"
    if not manifest.exists():
        raise FileNotFoundError(f"no suite-manifest.json in {suite_dir}")
    data = json.loads(manifest.read_text(encoding="utf-8"))
    return [Instance.load(suite_dir / entry["file"]) for entry in data["instances"]]


# ------------------------------------------------------------- small instances


def small_instance(
    seed: int,
    cluster_sizes: Sequence[int] = (4, 4),
    capacity: int | None = None,
    forbidden_per_cluster: int = 0,
    name: str | None = None,
) -> Instance:
    """Toy instance built with the benchmark geometry and demand/cost rules;
    handy for exact-enumeration oracles. Capacity defaults to a value that
    forces every cluster onto its own route."""
    rng = np.random.default_rng(seed)
    while True:
        centers = rng.uniform((0.0, 0.0), (BOX_W, BOX_H), size=(len(cluster_sizes), 2))
        points = [np.array(DEPOT_XY)]
        for c, size in enumerate(cluster_sizes):
            for _ in range(size):
                while True:
                    offset = rng.uniform(-CLUSTER_RADIUS, CLUSTER_RADIUS, size=2)
                    if offset[0] ** 2 + offset[1] ** 2 <= CLUSTER_RADIUS**2:
                        break
                points.append(centers[c] + offset)
        coords = np.array(points)
        deltas = coords[:, None, :] - coords[None, :, :]
        dists = np.sqrt((deltas**2).sum(axis=2))
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= MIN_SEPARATION:
            break
    nodes = [Node(0, float(coords[0, 0]), float(coords[0, 1]), 0, 0, 0)]
    cid = 0
    clusters: dict[int, list[int]] = {}
    for c, size in enumerate(cluster_sizes, start=1):
        for _ in range(size):
            cid += 1
            d, p = demand_for(cid)
            nodes.append(Node(cid, float(coords[cid, 0]), float(coords[cid, 1]), d, p, c))
            clusters.setdefault(c, []).append(cid)
    if capacity is None:
        per_cluster = [sum(demand_for(m)[0] for m in members) for members in clusters.values()]
        capacity = max(per_cluster) + max(sum(demand_for(m)[1] for m in members) for members in clusters.values())
    off, peak = assign_costs(nodes)
    forbidden: frozenset[tuple[int, int]] = frozenset()
    if forbidden_per_cluster:
        forbidden = select_forbidden(
            {k: tuple(v) for k, v in clusters.items()}, forbidden_per_cluster, rng
        )
    inst = Instance(
        name=name or f"small_{seed}",
        nodes=tuple(nodes),
        capacity=capacity,
        cost_offpeak=off,
        cost_peak=peak,
        forbidden=forbidden,
    )
    report = validate_instance(inst)
    if not report.ok:
        raise GenerationError(f"small instance invalid: {report.names}")
    return inst
