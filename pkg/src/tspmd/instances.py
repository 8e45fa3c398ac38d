"""Bundled fixtures and instance generators.

Fixtures are the three benchmark instances (5, 10 and 15 nodes) with their
published figure solutions, shipped as JSON under tspmd/fixtures. Generators
cover the worst-case families behind the tightness results (fig9_family,
loop_family, mtope_family), the set-cover reduction, and seeded random
Euclidean instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import kernels
from .errors import UnknownFixture
from .model import (
    Instance,
    build_instance,
    instance_from_dict,
    proportional_instance,
)
from .schedule import Solution, solution_from_dict

FIXTURE_NAMES = ("fig1", "fig2", "fig3", "fig4")


@dataclass(frozen=True)
class FixtureSolution:
    solution: Solution
    published_completion: float


@dataclass(frozen=True)
class Fixture:
    instance: Instance
    solutions: dict  # name -> FixtureSolution


def load_fixture(name: str) -> Fixture:
    """Bundled instances: fig3 (5 nodes, solutions fig3/fig8), fig2 (10 nodes),
    fig4 (15 nodes, solutions fig4/fig5), fig1 (the 3-node energy example)."""
    if name not in FIXTURE_NAMES:
        raise UnknownFixture(f"no fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}")
    raw = json.loads(
        resources.files("tspmd.fixtures").joinpath(f"{name}.json").read_text()
    )
    inst = instance_from_dict(raw["instance"])
    sols = {
        key: FixtureSolution(
            solution=solution_from_dict(entry),
            published_completion=float(entry["published_completion"]),
        )
        for key, entry in raw["solutions"].items()
    }
    return Fixture(instance=inst, solutions=sols)


def _sparse_metric(n: int, edges: dict) -> np.ndarray:
    """Complete a partially specified symmetric length table by shortest paths."""
    mat = np.full((n, n), np.inf)
    np.fill_diagonal(mat, 0.0)
    for (i, j), d in edges.items():
        mat[i, j] = min(mat[i, j], d)
        mat[j, i] = mat[i, j]
    closed = kernels.metric_closure(mat)
    if np.any(np.isinf(closed)):
        raise ValueError("edge set does not connect all nodes")
    return closed


def fig9_family(k: int, eps: float) -> Instance:
    """Two-hub family showing the (1+2m) bound tight for one drone.

    Nodes: depot 0, hub 1, drone-only pairs i_q/j_q (q <= 2k) at unit distance
    from their hubs and eps apart, truck-only pendants v_q at 0 and w_q at 1.
    Unspecified lengths close by shortest path; equal vehicle speeds,
    zero payloads, flight cap 2 + eps.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = 2 + 6 * k
    i0 = 2  # i_1..i_2k
    j0 = 2 + 2 * k  # j_1..j_2k
    v0 = 2 + 4 * k  # v_1..v_k
    w0 = 2 + 5 * k  # w_1..w_k
    edges = {(0, 1): eps}
    for q in range(2 * k):
        edges[(0, i0 + q)] = 1.0
        edges[(1, j0 + q)] = 1.0
        edges[(i0 + q, j0 + q)] = eps
    for q in range(k):
        edges[(0, v0 + q)] = 1.0
        edges[(1, w0 + q)] = 1.0
    mat = _sparse_metric(n, edges)
    truck = [0, 1] + list(range(v0, n))
    drone = list(range(i0, v0))
    return proportional_instance(
        f"fig9_k{k}_eps{eps:g}",
        mat,
        alpha=1.0,
        L=2.0 + eps,
        m=1,
        truck_nodes=truck,
        drone_nodes=drone,
    )


def loop_family(k: int, eps: float) -> Instance:
    """Reduced two-hub family (loops only) showing the (1+m) bound tight.

    Nodes: depot 0, hub 1 at eps, drone-only j_q and truck-only w_q at unit
    distance from the hub; flight cap exactly 2, so the only feasible sorties
    are the loops (1, j_q, 1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = 2 + 2 * k
    j0, w0 = 2, 2 + k
    edges = {(0, 1): eps}
    for q in range(k):
        edges[(1, j0 + q)] = 1.0
        edges[(1, w0 + q)] = 1.0
    mat = _sparse_metric(n, edges)
    return proportional_instance(
        f"loop_k{k}_eps{eps:g}",
        mat,
        alpha=1.0,
        L=2.0,
        m=1,
        truck_nodes=[0, 1] + list(range(w0, n)),
        drone_nodes=list(range(j0, w0)),
    )


def mtope_family(m: int, eps: float) -> Instance:
    """Simplex family showing the cycle/unrestricted ratio grows with m.

    m hub nodes pairwise eps apart (truck metric), each with a pendant whose
    drone flight time is 1/2 (truck length alpha * 1/2), flight cap 1, m
    drones, depot at the first hub. The pendant loops then take exactly the
    full flight cap, and no multi-customer sortie fits the battery."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    alpha = 2.0
    n = 2 * m
    edges = {}
    for a in range(m):
        for b in range(a + 1, m):
            edges[(a, b)] = eps
        edges[(a, m + a)] = alpha * 0.5
    mat = _sparse_metric(n, edges)
    return proportional_instance(
        f"mtope_m{m}_eps{eps:g}", mat, alpha=alpha, L=1.0, m=m
    )


@dataclass(frozen=True)
class MscInstance:
    universe: tuple
    sets: tuple  # tuple of tuples over universe elements

    def __post_init__(self):
        covered = set()
        for s in self.sets:
            covered.update(s)
        if covered != set(self.universe):
            raise ValueError("union of the sets must equal the universe")


def msc_reduce(msc: MscInstance, alpha: float, m: int) -> Instance:
    """Routing instance encoding a set-cover instance.

    Node layout: depot 0, then one node per set (indices 1..|S|), then one node
    per element (|S|+1..). Depot-set and covering set-element arcs have truck
    length 1/2, everything else closes by shortest path; proportional metrics,
    zero payloads, flight cap 1/alpha."""
    ns, nx = len(msc.sets), len(msc.universe)
    n = 1 + ns + nx
    elem_index = {x: 1 + ns + i for i, x in enumerate(msc.universe)}
    edges = {}
    for si, s in enumerate(msc.sets):
        edges[(0, 1 + si)] = 0.5
        for x in s:
            edges[(1 + si, elem_index[x])] = 0.5
    mat = _sparse_metric(n, edges)
    return proportional_instance(
        f"msc_{ns}sets_{nx}elems", mat, alpha=alpha, L=1.0 / alpha, m=m
    )


def set_node(msc: MscInstance, si: int) -> int:
    return 1 + si


def element_node(msc: MscInstance, xi: int) -> int:
    return 1 + len(msc.sets) + xi


def random_euclidean(
    n: int, seed: int, *, alpha: float = 1.0, L: float = 25.0, m: int = 1
) -> Instance:
    """Seeded uniform points in a 50x50 square; truck lengths are Euclidean
    distances rounded to 2 decimals and repaired by metric closure, drone
    metric proportional."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2)) * 50.0
    diff = pts[:, None, :] - pts[None, :, :]
    mat = np.round(np.sqrt((diff**2).sum(axis=2)), 2)
    mat = (mat + mat.T) / 2
    np.fill_diagonal(mat, 0.0)
    mat = kernels.metric_closure(mat)
    return proportional_instance(
        f"euclid_n{n}_seed{seed}", mat, alpha=alpha, L=L, m=m, coords=pts
    )
