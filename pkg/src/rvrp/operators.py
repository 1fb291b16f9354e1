"""Discrete search operators shared by the solvers.

The firefly geometry is permutation-based: distance between two solutions is
a cluster-wise positional Hamming distance, the movement length shrinks over
generations through the light-absorption factor gamma, and a movement samples
a pool of single-insertion candidates and keeps the cheapest. Insertions stay
inside a customer's own cluster block, so cluster contiguity is preserved by
construction and only the load profile and intra-cluster forbidden arcs need
re-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .evaluation import route_cost
from .instance import Instance, Solution

MAX_RESAMPLES = 50


class InfeasibleClusterError(RuntimeError):
    """A cluster admits no feasible intra-cluster order."""


@dataclass(frozen=True)
class MoveParams:
    """Movement-length controls: light absorption gamma and generation count."""

    gamma: float = 0.95
    generation: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.generation < 1:
            raise ValueError("generation starts at 1")


# ---------------------------------------------------------------- distance


def _cluster_sequences(sol: Solution, inst: Instance) -> dict[int, list[int]]:
    cluster_of = inst.cluster_of
    seqs: dict[int, list[int]] = {label: [] for label in inst.clusters}
    for c in sol.customers():
        try:
            seqs[cluster_of[c]].append(c)
        except KeyError:
            raise ValueError(f"solution visits unknown customer {c}") from None
    return seqs


def hamming_distance(a: Solution, b: Solution, inst: Instance) -> int:
    """Positional mismatches between the two visit orders, cluster by cluster."""
    seq_a = _cluster_sequences(a, inst)
    seq_b = _cluster_sequences(b, inst)
    total = 0
    for label, sa in seq_a.items():
        sb = seq_b[label]
        if len(sa) != len(sb) or len(sa) != len(inst.clusters[label]):
            raise ValueError("solutions do not cover the same instance")
        total += sum(1 for x, y in zip(sa, sb) if x != y)
    return total


def movement_length(r: int, params: MoveParams, rng: np.random.Generator) -> int:
    """Uniform integer in [2, max(2, floor(r * gamma**generation))]."""
    upper = max(2, math.floor(r * params.gamma**params.generation))
    return int(rng.integers(2, upper + 1))


# ---------------------------------------------------------------- feasibility helpers


def _block_order_ok(block: Sequence[int], forbidden) -> bool:
    for i in range(len(block) - 1):
        if (block[i], block[i + 1]) in forbidden:
            return False
    return True


def _route_load_ok(route: Sequence[int], inst: Instance) -> bool:
    delivery, pickup = inst.delivery, inst.pickup
    load = sum(delivery[c] for c in route)
    if load > inst.capacity:
        return False
    for c in route:
        load += pickup[c] - delivery[c]
        if load > inst.capacity:
            return False
    return True


def _find_block(routes: Sequence[Sequence[int]], customer: int, inst: Instance):
    """Locate (route_index, start, end) of the customer's cluster block."""
    label = inst.cluster_of[customer]
    cluster_of = inst.cluster_of
    for r, route in enumerate(routes):
        for pos, c in enumerate(route):
            if cluster_of[c] == label:
                end = pos
                while end < len(route) and cluster_of[route[end]] == label:
                    end += 1
                return r, pos, end
    raise ValueError(f"customer {customer} not present in solution")


# ---------------------------------------------------------------- insertion move


def _insertion_routes(
    sol: Solution, inst: Instance, rng: np.random.Generator, max_resamples: int = MAX_RESAMPLES
):
    """One random intra-cluster reinsertion on ``sol``.

    Returns (new_routes, changed_route_index) or None when the draw degenerates
    to the identity (single-member block or resampling exhausted).
    """
    customers = inst.customers
    customer = customers[int(rng.integers(len(customers)))]
    r, start, end = _find_block(sol.routes, customer, inst)
    route = sol.routes[r]
    block = list(route[start:end])
    m = len(block)
    if m == 1:
        return None
    at = block.index(customer)
    rest = block[:at] + block[at + 1 :]
    forbidden = inst.forbidden
    for _ in range(max_resamples):
        slot = int(rng.integers(m))
        if slot == at:
            return None  # reinserted where it was extracted
        new_block = rest[:slot] + [customer] + rest[slot:]
        if forbidden and not _block_order_ok(new_block, forbidden):
            continue
        new_route = (*route[:start], *new_block, *route[end:])
        if not _route_load_ok(new_route, inst):
            continue
        new_routes = list(sol.routes)
        new_routes[r] = new_route
        return new_routes, r
    return None


def insertion_move(
    sol: Solution, inst: Instance, rng: np.random.Generator, max_resamples: int = MAX_RESAMPLES
) -> Solution:
    """Extract one random customer and reinsert it at a random position inside
    its own cluster block; breaches are resampled, then the identity is kept."""
    out = _insertion_routes(sol, inst, rng, max_resamples)
    if out is None:
        return sol
    new_routes, _ = out
    return Solution(tuple(new_routes))


def move_firefly(
    sol: Solution,
    n: int,
    inst: Instance,
    rng: np.random.Generator,
    on_candidate: Callable[[Solution, float], None] | None = None,
    relocation_rate: float = 0.0,
    chained: bool = False,
) -> tuple[Solution, float]:
    """Generate ``n`` one-insertion candidates of ``sol`` and keep the
    cheapest (first generated wins ties).

    By default the candidates form a pool, each drawn independently from
    ``sol``; with ``chained=True`` each insertion instead starts from the
    previous candidate and the best link of the chain is returned.
    ``on_candidate`` is invoked once per candidate with its cost, which is how
    solvers account one objective evaluation per candidate. When
    ``relocation_rate`` > 0, a candidate is drawn from ``cluster_relocation``
    with that probability instead of an insertion.
    """
    if n < 2:
        raise ValueError("movement length must be at least 2")
    base = sol
    base_costs = [route_cost(route, inst) for route in sol.routes]
    best: Solution | None = None
    best_cost = math.inf
    for _ in range(n):
        if relocation_rate > 0.0 and rng.random() < relocation_rate:
            cand = cluster_relocation(base, inst, rng)
            cand_costs = [route_cost(route, inst) for route in cand.routes]
        else:
            out = _insertion_routes(base, inst, rng)
            if out is None:
                cand, cand_costs = base, base_costs
            else:
                new_routes, r = out
                cand_costs = list(base_costs)
                cand_costs[r] = route_cost(new_routes[r], inst)
                cand = Solution(tuple(new_routes))
        cand_cost = sum(cand_costs)
        if on_candidate is not None:
            on_candidate(cand, cand_cost)
        if cand_cost < best_cost:
            best, best_cost = cand, cand_cost
        if chained:
            base, base_costs = cand, cand_costs
    assert best is not None
    return best, best_cost


# ---------------------------------------------------------------- cluster relocation


def cluster_relocation(
    sol: Solution, inst: Instance, rng: np.random.Generator, max_resamples: int = MAX_RESAMPLES
) -> Solution:
    """Move one whole cluster block between routes (or into a new route).

    The block's internal order is preserved; the target route is re-checked
    with the exact load simulation and infeasible draws are resampled. This
    operator is an extension: it is only used when explicitly enabled.
    """
    labels = sorted(inst.clusters)
    label = labels[int(rng.integers(len(labels)))]
    member = inst.clusters[label][0]
    src, start, end = _find_block(sol.routes, member, inst)
    block = sol.routes[src][start:end]
    remaining: list[tuple[int, ...]] = []
    for r, route in enumerate(sol.routes):
        if r == src:
            shrunk = (*route[:start], *route[end:])
            if shrunk:
                remaining.append(shrunk)
        else:
            remaining.append(route)

    # insertion slots: between blocks of every other route, plus a new route
    cluster_of = inst.cluster_of
    options: list[tuple[int, int]] = [(-1, 0)]
    for r, route in enumerate(remaining):
        boundaries = [0]
        for pos in range(1, len(route)):
            if cluster_of[route[pos]] != cluster_of[route[pos - 1]]:
                boundaries.append(pos)
        boundaries.append(len(route))
        options.extend((r, b) for b in boundaries)

    for _ in range(max_resamples):
        r, b = options[int(rng.integers(len(options)))]
        if r < 0:
            if not _route_load_ok(block, inst):
                continue
            new_routes = [*remaining, block]
        else:
            target = (*remaining[r][:b], *block, *remaining[r][b:])
            if not _route_load_ok(target, inst):
                continue
            new_routes = list(remaining)
            new_routes[r] = target
        return Solution(tuple(new_routes))
    return sol


# ---------------------------------------------------------------- random construction


def _feasible_cluster_order(
    members: Sequence[int], inst: Instance, rng: np.random.Generator
) -> list[int] | None:
    """Randomized exact search for an order of ``members`` that avoids all
    forbidden arcs and fits the capacity when served alone on a fresh route."""
    members = list(members)
    forbidden = inst.forbidden
    delivery, pickup = inst.delivery, inst.pickup
    total_delivery = sum(delivery[m] for m in members)
    if total_delivery > inst.capacity:
        return None

    def extend(path: list[int], remaining: list[int], load: int) -> list[int] | None:
        if not remaining:
            return path
        order = list(remaining)
        rng.shuffle(order)
        for nxt in order:
            if path and (path[-1], nxt) in forbidden:
                continue
            new_load = load + pickup[nxt] - delivery[nxt]
            if new_load > inst.capacity:
                continue
            rest = [m for m in remaining if m != nxt]
            found = extend(path + [nxt], rest, new_load)
            if found is not None:
                return found
        return None

    return extend([], members, total_delivery)


class _RouteState:
    """Incremental load bookkeeping for greedy construction.

    Tracks the running prefix sums of (delivery - pickup); the peak load of a
    route equals total deliveries minus the minimum prefix sum (the empty
    prefix included), so appends are O(block).
    """

    __slots__ = ("total_delivery", "prefix", "min_prefix")

    def __init__(self) -> None:
        self.total_delivery = 0
        self.prefix = 0
        self.min_prefix = 0

    def fits_with(self, block: Sequence[int], inst: Instance) -> tuple[int, int, int] | None:
        delivery, pickup = inst.delivery, inst.pickup
        td = self.total_delivery + sum(delivery[c] for c in block)
        prefix = self.prefix
        min_prefix = self.min_prefix
        for c in block:
            prefix += delivery[c] - pickup[c]
            if prefix < min_prefix:
                min_prefix = prefix
        if td - min(0, min_prefix) > inst.capacity:
            return None
        return td, prefix, min_prefix

    def commit(self, state: tuple[int, int, int]) -> None:
        self.total_delivery, self.prefix, self.min_prefix = state


def random_solution(inst: Instance, rng: np.random.Generator) -> Solution:
    """Random feasible construction shared by all solvers.

    Clusters are shuffled and greedily appended to the current route whenever
    a random intra-cluster order passes the exact load simulation and avoids
    forbidden arcs (up to 50 order resamples); otherwise a new route is opened.
    """
    labels = sorted(inst.clusters)
    order = [labels[i] for i in rng.permutation(len(labels))]
    forbidden = inst.forbidden
    routes: list[list[int]] = []
    current: list[int] = []
    state = _RouteState()
    for label in order:
        members = list(inst.clusters[label])
        placed = False
        if current:
            for _ in range(MAX_RESAMPLES):
                block = list(members)
                rng.shuffle(block)
                if forbidden and not _block_order_ok(block, forbidden):
                    continue
                fit = state.fits_with(block, inst)
                if fit is not None:
                    current.extend(block)
                    state.commit(fit)
                    placed = True
                    break
        if not placed:
            if current:
                routes.append(current)
            block = None
            fresh = _RouteState()
            for _ in range(MAX_RESAMPLES):
                attempt = list(members)
                rng.shuffle(attempt)
                if forbidden and not _block_order_ok(attempt, forbidden):
                    continue
                fit = fresh.fits_with(attempt, inst)
                if fit is not None:
                    block = attempt
                    fresh.commit(fit)
                    break
            if block is None:
                block = _feasible_cluster_order(members, inst, rng)
                if block is None:
                    raise InfeasibleClusterError(f"cluster {label} admits no feasible order")
                fresh = _RouteState()
                fit = fresh.fits_with(block, inst)
                assert fit is not None  # the exact search already enforced capacity
                fresh.commit(fit)
            current = block
            state = fresh
    routes.append(current)
    return Solution.from_routes(routes)
