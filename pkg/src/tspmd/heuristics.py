"""Truck-only approximation and the brute-force oracles it is tested against.

christofides_cycle follows the classic recipe - minimum spanning tree, exact
minimum-weight perfect matching on the odd-degree vertices (bitmask dynamic
program, exactness is what buys the 3/2 factor), Euler tour, shortcut. A
Hamiltonian cycle is a feasible solution whenever the truck may visit every
node, which yields a 3/2 * (1 + alpha*m) guarantee against the optimum with
drones. msc_from_solution maps a routing solution on a set-cover reduction
back to a cover no larger than the completion time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    InfeasibleInput,
    MatchingBudgetExceeded,
    TooLarge,
    TruckCannotVisitAll,
)
from .instances import MscInstance, element_node, set_node
from .model import Instance, compute_derived
from .schedule import Solution

MATCHING_BUDGET = 20
BRUTE_FORCE_NODES = 11
MSC_BRUTE_FORCE_SETS = 15


@dataclass(frozen=True)
class HeuristicResult:
    solution: Solution
    cycle: tuple
    objective: float
    guarantee: float
    basis: str  # "christofides" | "truck_only_exact"


def _prim_mst(dist: np.ndarray) -> list[tuple[int, int]]:
    n = dist.shape[0]
    in_tree = [False] * n
    best = np.full(n, np.inf)
    parent = [-1] * n
    best[0] = 0.0
    edges = []
    for _ in range(n):
        u = min((i for i in range(n) if not in_tree[i]), key=lambda i: (best[i], i))
        in_tree[u] = True
        if parent[u] >= 0:
            edges.append((parent[u], u))
        for v in range(n):
            if not in_tree[v] and dist[u, v] < best[v]:
                best[v] = dist[u, v]
                parent[v] = u
    return edges


def _exact_matching(dist: np.ndarray, odd: list[int]) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching by dynamic programming over subsets."""
    if len(odd) > MATCHING_BUDGET:
        raise MatchingBudgetExceeded(
            f"{len(odd)} odd-degree vertices exceed the exact-matching budget"
        )
    full = (1 << len(odd)) - 1

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[float, tuple]:
        if mask == 0:
            return 0.0, ()
        a = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << a)
        out = (np.inf, ())
        b_mask = rest
        while b_mask:
            b = (b_mask & -b_mask).bit_length() - 1
            b_mask ^= 1 << b
            sub_cost, sub = best(rest ^ (1 << b))
            cost = dist[odd[a], odd[b]] + sub_cost
            if cost < out[0]:
                out = (cost, ((odd[a], odd[b]),) + sub)
        return out

    _, pairs = best(full)
    best.cache_clear()
    return list(pairs)


def _euler_shortcut(n: int, edges: list[tuple[int, int]]) -> list[int]:
    """Hierholzer tour over the even multigraph, shortcut to a cycle from 0."""
    adj: dict[int, list[int]] = {v: [] for v in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    for v in adj:
        adj[v].sort(reverse=True)
    stack, trail = [0], []
    while stack:
        v = stack[-1]
        if adj[v]:
            u = adj[v].pop()
            adj[u].remove(v)
            stack.append(u)
        else:
            trail.append(stack.pop())
    seen, cycle = set(), []
    for v in trail:
        if v not in seen:
            seen.add(v)
            cycle.append(v)
    return cycle + [0]


def cycle_length(inst: Instance, cycle) -> float:
    return float(sum(inst.truck_metric[a, b] for a, b in zip(cycle, cycle[1:])))


def christofides_cycle(inst: Instance) -> list[int]:
    """3/2-approximate Hamiltonian cycle over the truck metric (cycle starts
    and ends at the depot). Requires the truck to be allowed at every node."""
    if inst.truck_nodes != frozenset(range(inst.n)):
        raise TruckCannotVisitAll("the Hamiltonian-cycle heuristic needs N_tr = N")
    if inst.n == 2:
        return [0, 1, 0]
    mst = _prim_mst(inst.truck_metric)
    degree = [0] * inst.n
    for a, b in mst:
        degree[a] += 1
        degree[b] += 1
    odd = [v for v in range(inst.n) if degree[v] % 2 == 1]
    matching = _exact_matching(inst.truck_metric, odd)
    return _euler_shortcut(inst.n, mst + matching)


def heuristic_solution(inst: Instance) -> HeuristicResult:
    """Truck-only solution from the approximate cycle (exact cycle for up to
    three nodes, where it is unique). The objective is exactly the cycle
    length - no drones, no waits - and exceeds the optimum-with-drones by at
    most 3/2 * (1 + alpha * m)."""
    if inst.truck_nodes != frozenset(range(inst.n)):
        raise TruckCannotVisitAll("the Hamiltonian-cycle heuristic needs N_tr = N")
    if inst.n <= 3:
        cycle = list(range(inst.n)) + [0]
        basis = "truck_only_exact"
        factor = 1.0
    else:
        cycle = christofides_cycle(inst)
        basis = "christofides"
        factor = 1.5
    alpha = compute_derived(inst).alpha if inst.m >= 1 else 0.0
    route = tuple((a, b) for a, b in zip(cycle, cycle[1:]))
    return HeuristicResult(
        solution=Solution(route=route),
        cycle=tuple(cycle),
        objective=cycle_length(inst, cycle),
        guarantee=factor * (1.0 + alpha * inst.m),
        basis=basis,
    )


def tsp_bruteforce(inst: Instance) -> tuple[list[int], float]:
    """Exact TSP over the truck metric by permutation enumeration with
    prefix pruning; the oracle the heuristic is measured against."""
    n = inst.n
    if n > BRUTE_FORCE_NODES:
        raise TooLarge(f"brute-force TSP capped at {BRUTE_FORCE_NODES} nodes")
    tm = inst.truck_metric
    best_len = np.inf
    best_cycle: list[int] = []
    order = list(range(1, n))

    def rec(last, remaining, acc, path):
        nonlocal best_len, best_cycle
        if not remaining:
            total = acc + tm[last, 0]
            if total < best_len:
                best_len = total
                best_cycle = [0] + path + [0]
            return
        for idx, v in enumerate(remaining):
            nxt = acc + tm[last, v]
            if nxt + tm[v, 0] < best_len:
                rec(v, remaining[:idx] + remaining[idx + 1 :], nxt, path + [v])

    rec(0, order, 0.0, [])
    return best_cycle, float(best_len)


def msc_bruteforce(msc: MscInstance) -> int:
    """Optimal set-cover size by exhaustive subset search."""
    if len(msc.sets) > MSC_BRUTE_FORCE_SETS:
        raise TooLarge(f"brute-force MSC capped at {MSC_BRUTE_FORCE_SETS} sets")
    universe = frozenset(msc.universe)
    for size in range(1, len(msc.sets) + 1):
        for combo in itertools.combinations(range(len(msc.sets)), size):
            covered = set()
            for si in combo:
                covered.update(msc.sets[si])
            if covered >= universe:
                return size
    raise InfeasibleInput("sets do not cover the universe")


def msc_from_solution(msc: MscInstance, sol: Solution) -> tuple[int, ...]:
    """Cover extracted from a solution of the reduction instance: take every
    set whose node the truck visits; for each truck-visited element node not
    yet covered, add the lowest-index set containing it.

    The cover size never exceeds the solution's completion time (every set
    node costs the truck at least 1 in and out). Raises InfeasibleInput when
    the rule leaves elements uncovered."""
    visited = sol.visited_nodes()
    chosen: list[int] = [
        si for si in range(len(msc.sets)) if set_node(msc, si) in visited
    ]
    covered = set()
    for si in chosen:
        covered.update(msc.sets[si])
    for xi, x in enumerate(msc.universe):
        if x in covered or element_node(msc, xi) not in visited:
            continue
        si = next(i for i, s in enumerate(msc.sets) if x in s)
        chosen.append(si)
        covered.update(msc.sets[si])
    if covered != set(msc.universe):
        missing = sorted(set(msc.universe) - covered)
        raise InfeasibleInput(f"solution does not induce a cover; missing {missing}")
    return tuple(sorted(set(chosen)))
