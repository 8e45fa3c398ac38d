"""Drone sorties: energy accounting, feasibility, enumeration, loop splitting.

A sortie (i1, ..., ir), r >= 3, launches at i1 and lands at ir (both truck
nodes); the interior nodes are the customers it serves. The energy drawn from
the battery is

    w_dr * sum_q l'(i_q, i_{q+1})  +  sum_p payload(i_p) * (drone distance flown
                                                            from i1 up to i_p)

so reversing a sortie with payloads can change its energy (non-invertible
sorties). Feasibility means energy <= battery within a 1e-9 tolerance; exact
ties (e.g. 350 <= 350) are feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CatalogExplosion, LoopInput, SplitAmbiguity
from .model import Instance, node_label

ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class Sortie:
    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) < 3:
            raise ValueError("a sortie needs at least three nodes (launch, customer, land)")

    @property
    def start(self) -> int:
        return self.nodes[0]

    @property
    def end(self) -> int:
        return self.nodes[-1]

    @property
    def served(self) -> frozenset[int]:
        return frozenset(self.nodes[1:-1])

    @property
    def is_loop(self) -> bool:
        return self.nodes[0] == self.nodes[-1]

    def reversed(self) -> "Sortie":
        return Sortie(tuple(reversed(self.nodes)))

    def label(self) -> str:
        return "".join(node_label(i) for i in self.nodes)


def _nodes_of(s) -> tuple[int, ...]:
    return s.nodes if isinstance(s, Sortie) else tuple(s)


def structural_error(inst: Instance, s) -> str | None:
    """Reason the sortie is malformed for this instance, or None."""
    nodes = _nodes_of(s)
    if len(nodes) < 3:
        return "fewer than three nodes"
    if nodes[0] not in inst.truck_nodes or nodes[-1] not in inst.truck_nodes:
        return "launch/landing node not truck-visitable"
    interior = nodes[1:-1]
    if len(set(interior)) != len(interior):
        return "repeated customer"
    for k in interior:
        if k not in inst.drone_nodes:
            return f"customer {node_label(k)} not drone-servable"
        if k == nodes[0] or k == nodes[-1]:
            return "customer equals an endpoint"
    return None


def sortie_duration(inst: Instance, s) -> float:
    nodes = _nodes_of(s)
    dm = inst.drone_metric
    return float(sum(dm[nodes[q], nodes[q + 1]] for q in range(len(nodes) - 1)))


def sortie_energy(inst: Instance, s) -> float:
    """Battery draw of a sortie: drone weight over the whole flight plus each
    payload carried from the launch node to its drop point."""
    nodes = _nodes_of(s)
    dm = inst.drone_metric
    dist = 0.0
    energy = 0.0
    for q in range(len(nodes) - 1):
        dist += dm[nodes[q], nodes[q + 1]]
        if q + 1 < len(nodes) - 1:
            energy += inst.payloads[nodes[q + 1]] * dist
    return float(energy + inst.drone_weight * dist)


def is_feasible(inst: Instance, s) -> bool:
    return sortie_energy(inst, s) <= inst.battery + ENERGY_TOL


def is_invertible(inst: Instance, s) -> bool:
    """Feasible in the written direction and after reversing the node order."""
    nodes = _nodes_of(s)
    return is_feasible(inst, nodes) and is_feasible(inst, tuple(reversed(nodes)))


@dataclass(frozen=True)
class SortieCatalog:
    """All feasible sorties of an instance, with lookup indexes.

    by_customer[k] lists ids of sorties serving node k (the paper-side P^k);
    by_endpoints[(a, b)] lists ids launching at a and landing at b.
    uncoverable lists drone-only nodes no catalog sortie can serve - a nonempty
    list means the instance is infeasible.
    """

    sorties: tuple[Sortie, ...]
    by_customer: dict
    by_endpoints: dict
    uncoverable: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.sorties)

    @property
    def instance_infeasible(self) -> bool:
        return bool(self.uncoverable)


def enumerate_sorties(inst: Instance, *, ceiling: int = 5_000_000) -> SortieCatalog:
    """Depth-first generation of every feasible sortie with at most
    max_sortie_customers customers.

    A partial flight is pruned as soon as its energy would exceed the battery
    even when closed at the cheapest eligible landing node (prefix energies are
    monotone, so this never cuts a feasible completion). Raises
    CatalogExplosion past `ceiling`.
    """
    dm = inst.drone_metric
    w_dr = inst.drone_weight
    budget = inst.battery + ENERGY_TOL
    truck = sorted(inst.truck_nodes)
    drone = sorted(inst.drone_nodes)
    out: list[Sortie] = []

    def emit(nodes):
        if len(out) >= ceiling:
            raise CatalogExplosion(
                f"more than {ceiling} feasible sorties; lower max_sortie_customers"
            )
        out.append(Sortie(tuple(nodes)))

    def extend(start, path, dist, energy):
        last = path[-1]
        # interiors so far: path[1:]
        if len(path) > 1:
            for end in truck:
                if end in path[1:]:
                    continue
                close = energy + w_dr * dm[last, end]
                if close <= budget:
                    emit(path + [end])
        if len(path) - 1 >= inst.max_sortie_customers:
            return
        for c in drone:
            if c == start or c in path[1:]:
                continue
            d2 = dist + dm[last, c]
            e2 = energy + w_dr * dm[last, c] + inst.payloads[c] * d2
            cheapest_close = min(dm[c, b] for b in truck)
            if e2 + w_dr * cheapest_close > budget:
                continue
            extend(start, path + [c], d2, e2)

    for start in truck:
        extend(start, [start], 0.0, 0.0)

    out.sort(key=lambda s: s.nodes)
    by_customer: dict[int, list[int]] = {}
    by_endpoints: dict[tuple[int, int], list[int]] = {}
    for idx, s in enumerate(out):
        for k in s.served:
            by_customer.setdefault(k, []).append(idx)
        by_endpoints.setdefault((s.start, s.end), []).append(idx)
    uncoverable = tuple(
        k for k in sorted(inst.drone_nodes - inst.truck_nodes) if k not in by_customer
    )
    return SortieCatalog(
        sorties=tuple(out),
        by_customer={k: tuple(v) for k, v in by_customer.items()},
        by_endpoints={k: tuple(v) for k, v in by_endpoints.items()},
        uncoverable=uncoverable,
    )


def split_sortie(inst: Instance, s) -> tuple[Sortie, ...]:
    """Replace a feasible non-loop sortie by one or two feasible loops that
    serve the same customers with at most twice the flight time.

    Single-customer sorties collapse onto the shorter leg. Otherwise, if one of
    the full reversal loops (i1..i_{r-1}, i1) / (ir..i2, ir) is feasible it is
    returned alone; failing that there is a unique split index t with the
    prefix loop feasible and its one-step extension infeasible, and the pair
    (i1..i_t, i1), (ir..i_{t+1}, ir) is returned. Non-uniqueness of t would
    contradict the construction and raises SplitAmbiguity.
    """
    nodes = _nodes_of(s)
    if nodes[0] == nodes[-1]:
        raise LoopInput("split_sortie expects a non-loop sortie")
    if not is_feasible(inst, nodes):
        raise ValueError("split_sortie expects a feasible sortie")
    dm = inst.drone_metric
    r = len(nodes)

    if r == 3:
        i, k, j = nodes
        if dm[i, k] <= dm[k, j]:
            return (Sortie((i, k, i)),)
        return (Sortie((j, k, j)),)

    for cand in (nodes[:-1] + (nodes[0],), tuple(reversed(nodes))[:-1] + (nodes[-1],)):
        if is_feasible(inst, cand):
            return (Sortie(cand),)

    def prefix_loop_ok(t):  # loop (i1, ..., i_t, i1), t is a 1-based node count
        return is_feasible(inst, nodes[:t] + (nodes[0],))

    hits = [
        t for t in range(2, r - 1) if prefix_loop_ok(t) and not prefix_loop_ok(t + 1)
    ]
    if len(hits) != 1:
        raise SplitAmbiguity(
            f"split index not unique for {''.join(node_label(i) for i in nodes)}: {hits}"
        )
    t = hits[0]
    pi1 = Sortie(nodes[:t] + (nodes[0],))
    pi2 = Sortie(tuple(reversed(nodes[t:])) + (nodes[-1],))
    if not is_feasible(inst, pi2):
        raise SplitAmbiguity(f"complement loop infeasible at t={t}")
    return (pi1, pi2)


def dump_catalog(inst: Instance, catalog: SortieCatalog) -> str:
    """One line per sortie: comma-separated labels, duration, energy. Debug
    output, not a stability contract."""
    lines = []
    for s in catalog.sorties:
        labels = ",".join(node_label(i) for i in s.nodes)
        lines.append(
            f"{labels} duration={sortie_duration(inst, s):.2f} "
            f"energy={sortie_energy(inst, s):.2f}"
        )
    return "\n".join(lines) + ("\n" if lines else "")
