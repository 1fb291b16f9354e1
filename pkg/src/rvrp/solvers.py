"""The three metaheuristics: discrete firefly (DFA), mutation-only EA, and
population simulated annealing (ESA).

All three share the random construction, the insertion neighborhood and the
stall-based stop rule: a run ends once ``n + n(n+1)/2`` consecutive proposals
(n = number of customers) pass without improving the global best. A proposal
is one evaluation event of the main loop: one initial individual, one EA
offspring, one annealing proposal (rejected ones included), or one firefly
move; the candidates inside a firefly's pool belong to a single move. The
counter is checked after every proposal and resets on any strict improvement,
so a run can stop mid-generation. ``evaluations_total`` nevertheless reports
every objective call, pool candidates included.

Runs are fully reproducible: the config seed spawns one child RNG stream per
population slot (plus one selection stream for the EA), so results do not
depend on evaluation scheduling.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import solution_cost
from .instance import Instance, Solution
from .operators import (
    MoveParams,
    cluster_relocation,
    hamming_distance,
    insertion_move,
    move_firefly,
    movement_length,
    random_solution,
)

ALGORITHMS = ("dfa", "ea", "esa")

# share of proposals drawn from cluster_relocation when the extension is on
RELOCATION_RATE = 0.2


def termination_budget(n: int) -> int:
    """Stall budget for an n-customer problem: consecutive proposals allowed
    without improving the global best."""
    if n < 1:
        raise ValueError("problem size must be at least 1")
    return n + n * (n + 1) // 2


@dataclass
class SolverConfig:
    algorithm: str = "dfa"
    population_size: int = 100
    gamma: float = 0.95
    mutation_probability: float = 1.0
    elitist_fraction: float = 0.7
    random_fraction: float = 0.3
    cooling_constant: float = 0.95
    acceptance_p: float = 0.95
    seed: int = 0
    enable_cluster_relocation: bool = False
    # chain the firefly's insertion candidates instead of pooling them
    chained_moves: bool = False

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.population_size < 1:
            raise ValueError("population_size must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ValueError("mutation_probability must lie in [0, 1]")
        if abs(self.elitist_fraction + self.random_fraction - 1.0) > 1e-9:
            raise ValueError("survivor fractions must sum to 1")
        if not 0.0 < self.cooling_constant < 1.0:
            raise ValueError("cooling_constant must lie in (0, 1)")
        if not 0.0 < self.acceptance_p < 1.0:
            raise ValueError("acceptance_p must lie in (0, 1)")


@dataclass
class SolveResult:
    algorithm: str
    seed: int
    best_solution: Solution
    best_cost: float
    evaluations_total: int
    wall_time_s: float
    convergence_time_s: float
    convergence_evaluations: int
    cost_history: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self, include_history: bool = False, max_history_points: int | None = None) -> dict:
        data = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "cost": self.best_cost,
            "vehicles": self.best_solution.vehicles,
            "routes": [list(r) for r in self.best_solution.routes],
            "evaluations": self.evaluations_total,
            "convergence_evaluations": self.convergence_evaluations,
        }
        if include_history:
            history = self.cost_history
            if max_history_points is not None and len(history) > max_history_points > 1:
                step = (len(history) - 1) / (max_history_points - 1)
                keep = sorted({round(i * step) for i in range(max_history_points)})
                history = [history[i] for i in keep]
            data["cost_history"] = [[e, c] for e, c in history]
        return data


class BudgetExhausted(Exception):
    """Internal control flow: the stall counter reached the budget."""


class _Tracker:
    """Counts objective evaluations, tracks the global best and stops the run.

    ``record`` accounts a single objective call; ``end_proposal`` closes one
    proposal (which may have recorded several pool candidates) and advances or
    resets the stall counter.
    """

    def __init__(self, inst: Instance, budget: int):
        self.inst = inst
        self.budget = budget
        self.evaluations = 0
        self.stall = 0
        self._improved = False
        self.best_solution: Solution | None = None
        self.best_cost = math.inf
        self.history: list[tuple[int, float]] = []
        self.started = time.monotonic()
        self.convergence_time_s = 0.0
        self.convergence_evaluations = 0

    def record(self, sol: Solution, cost: float) -> None:
        self.evaluations += 1
        if cost < self.best_cost:
            self.best_solution = sol
            self.best_cost = cost
            self._improved = True
            self.history.append((self.evaluations, cost))
            self.convergence_time_s = time.monotonic() - self.started
            self.convergence_evaluations = self.evaluations

    def end_proposal(self) -> None:
        if self._improved:
            self.stall = 0
            self._improved = False
        else:
            self.stall += 1
            if self.stall >= self.budget:
                raise BudgetExhausted

    def evaluate(self, sol: Solution) -> float:
        """Record one single-candidate proposal (initialization, EA offspring,
        annealing proposal)."""
        cost = solution_cost(sol, self.inst)
        self.record(sol, cost)
        self.end_proposal()
        return cost

    def result(self, algorithm: str, seed: int) -> SolveResult:
        assert self.best_solution is not None, "no evaluation was recorded"
        wall = time.monotonic() - self.started
        return SolveResult(
            algorithm=algorithm,
            seed=seed,
            best_solution=self.best_solution,
            best_cost=self.best_cost,
            evaluations_total=self.evaluations,
            wall_time_s=round(wall, 3),
            convergence_time_s=round(self.convergence_time_s, 3),
            convergence_evaluations=self.convergence_evaluations,
            cost_history=self.history,
        )


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(count)]


def _propose(
    sol: Solution, inst: Instance, rng: np.random.Generator, relocation_rate: float
) -> Solution:
    if relocation_rate > 0.0 and rng.random() < relocation_rate:
        return cluster_relocation(sol, inst, rng)
    return insertion_move(sol, inst, rng)


# ------------------------------------------------------------------- DFA


def dfa_solve(inst: Instance, cfg: SolverConfig) -> SolveResult:
    """Discrete firefly search.

    Per generation g, every firefly i is pulled toward each brighter firefly j
    (lower cost; raw cost is the light intensity): the cluster-wise Hamming
    distance r gives a movement length n drawn uniformly from
    [2, max(2, floor(r * gamma**g))], and the firefly is replaced by the best
    of n independent one-insertion candidates. Intensities update immediately,
    so later pairs in the same sweep see moved fireflies. The brightest
    firefly never moves.
    """
    cfg.validate()
    pop_n = cfg.population_size
    streams = _streams(cfg.seed, pop_n)
    tracker = _Tracker(inst, termination_budget(inst.n_customers))
    relocation = RELOCATION_RATE if cfg.enable_cluster_relocation else 0.0
    try:
        pop = [random_solution(inst, streams[i]) for i in range(pop_n)]
        costs = [tracker.evaluate(s) for s in pop]
        g = 0
        while True:
            g += 1
            params = MoveParams(gamma=cfg.gamma, generation=g)
            moved = 0
            for i in range(pop_n):
                for j in range(pop_n):
                    if costs[j] < costs[i]:
                        r = hamming_distance(pop[i], pop[j], inst)
                        n = movement_length(r, params, streams[i])
                        pop[i], costs[i] = move_firefly(
                            pop[i],
                            n,
                            inst,
                            streams[i],
                            on_candidate=tracker.record,
                            relocation_rate=relocation,
                            chained=cfg.chained_moves,
                        )
                        tracker.end_proposal()
                        moved += 1
            if moved == 0:
                # no brighter pairs remain (e.g. population of one, or all
                # costs equal): no further evaluation can ever occur
                break
    except BudgetExhausted:
        pass
    return tracker.result("dfa", cfg.seed)


# -------------------------------------------------------------------- EA


def survivor_counts(population_size: int, elitist_fraction: float) -> tuple[int, int]:
    """(elite, random) survivor counts; elites are rounded up."""
    elites = min(population_size, math.ceil(elitist_fraction * population_size))
    return elites, population_size - elites


def ea_solve(inst: Instance, cfg: SolverConfig) -> SolveResult:
    """Mutation-only evolutionary algorithm.

    Each generation every individual spawns one offspring through the
    insertion move; survivors over the pooled 2P candidates are the best
    ceil(0.7 P) plus floor(0.3 P) drawn uniformly from the remainder.
    """
    cfg.validate()
    pop_n = cfg.population_size
    streams = _streams(cfg.seed, pop_n + 1)
    selection = streams[pop_n]
    tracker = _Tracker(inst, termination_budget(inst.n_customers))
    relocation = RELOCATION_RATE if cfg.enable_cluster_relocation else 0.0
    elites_n, random_n = survivor_counts(pop_n, cfg.elitist_fraction)
    try:
        pop = [random_solution(inst, streams[i]) for i in range(pop_n)]
        costs = [tracker.evaluate(s) for s in pop]
        while True:
            offspring: list[Solution] = []
            off_costs: list[float] = []
            for i in range(pop_n):
                if cfg.mutation_probability >= 1.0 or streams[i].random() < cfg.mutation_probability:
                    child = _propose(pop[i], inst, streams[i], relocation)
                else:
                    child = pop[i]
                offspring.append(child)
                off_costs.append(tracker.evaluate(child))
            pool = pop + offspring
            pool_costs = costs + off_costs
            order = sorted(range(len(pool)), key=pool_costs.__getitem__)
            keep = order[:elites_n]
            rest = order[elites_n:]
            if random_n:
                picks = selection.choice(len(rest), size=random_n, replace=False)
                keep += [rest[p] for p in sorted(int(p) for p in picks)]
            pop = [pool[t] for t in keep]
            costs = [pool_costs[t] for t in keep]
    except BudgetExhausted:
        pass
    return tracker.result("ea", cfg.seed)


# ------------------------------------------------------------------- ESA


def esa_initial_temperature(costs: Sequence[float], p: float = 0.95) -> float:
    """Starting temperature from the initial population's cost spread:
    -(worst - best) / ln(p)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    spread = max(costs) - min(costs)
    if spread == 0:
        return 0.0
    return -spread / math.log(p)


def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept a proposal worse by ``delta`` (>0) with probability
    exp(-delta/temperature); improvements and ties are always accepted."""
    if delta <= 0:
        return True
    if temperature <= 0:
        return False
    return rng.random() < math.exp(-delta / temperature)


def esa_solve(inst: Instance, cfg: SolverConfig) -> SolveResult:
    """Population of Metropolis chains under one shared geometric cooling."""
    cfg.validate()
    pop_n = cfg.population_size
    streams = _streams(cfg.seed, pop_n)
    tracker = _Tracker(inst, termination_budget(inst.n_customers))
    relocation = RELOCATION_RATE if cfg.enable_cluster_relocation else 0.0
    try:
        pop = [random_solution(inst, streams[i]) for i in range(pop_n)]
        costs = [tracker.evaluate(s) for s in pop]
        temperature = esa_initial_temperature(costs, cfg.acceptance_p)
        while True:
            for i in range(pop_n):
                cand = _propose(pop[i], inst, streams[i], relocation)
                cost = tracker.evaluate(cand)
                if metropolis_accept(cost - costs[i], temperature, streams[i]):
                    pop[i], costs[i] = cand, cost
            temperature *= cfg.cooling_constant
    except BudgetExhausted:
        pass
    return tracker.result("esa", cfg.seed)


_SOLVERS = {"dfa": dfa_solve, "ea": ea_solve, "esa": esa_solve}


def solve(inst: Instance, cfg: SolverConfig) -> SolveResult:
    cfg.validate()
    return _SOLVERS[cfg.algorithm](inst, cfg)
