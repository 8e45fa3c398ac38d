"""Time-indexed solutions: evaluation, validation, classification.

A solution is a truck route (a chained arc sequence over N x N where (i, i)
encodes a wait slot at i) plus drone operations (drone, sortie, start and end
positions). Positions are 1-based: an operation launches at the tail of the
arc in its start position and is retrieved at the head of the arc in its end
position, so the truck time accumulated over [t1, t2], waits included, must
cover the sortie's flight time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DanglingOperation, EncodingOverflow
from .model import Instance, node_label, parse_label
from .sorties import (
    Sortie,
    is_feasible,
    sortie_duration,
    sortie_energy,
    structural_error,
)

WAIT_TOL = 1e-9


@dataclass(frozen=True)
class DroneOperation:
    drone: int  # 1-based
    sortie: Sortie
    start_pos: int  # 1-based position of the first arc flown over
    end_pos: int

    def span(self) -> range:
        return range(self.start_pos, self.end_pos + 1)


@dataclass(frozen=True)
class Solution:
    route: tuple[tuple[int, int], ...]
    operations: tuple[DroneOperation, ...] = ()

    @property
    def real_arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple(a for a in self.route if a[0] != a[1])

    def visited_nodes(self) -> set[int]:
        seen = set()
        for i, j in self.route:
            seen.add(i)
            seen.add(j)
        return seen


@dataclass
class Schedule:
    waits: np.ndarray  # w_t per position, minimal for the given operations
    departure_times: np.ndarray  # clock when the truck leaves position t's head
    completion_time: float


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


@dataclass(frozen=True)
class SolutionClass:
    retraversing_vector: dict  # (i, j) -> traversal count, wait arcs excluded
    is_arc_retraversing: bool
    is_node_revisiting: bool

    @property
    def excess_traversals(self) -> int:
        return sum(c - 1 for c in self.retraversing_vector.values() if c > 1)


def _check_anchors(sol: Solution) -> None:
    T = len(sol.route)
    for op in sol.operations:
        if not (1 <= op.start_pos <= op.end_pos <= T):
            raise DanglingOperation(
                f"operation positions [{op.start_pos}, {op.end_pos}] outside route of length {T}"
            )
        if sol.route[op.start_pos - 1][0] != op.sortie.start:
            raise DanglingOperation(
                f"sortie {op.sortie.label()} does not launch at the tail of arc {op.start_pos}"
            )
        if sol.route[op.end_pos - 1][1] != op.sortie.end:
            raise DanglingOperation(
                f"sortie {op.sortie.label()} does not land at the head of arc {op.end_pos}"
            )


def evaluate(inst: Instance, sol: Solution) -> Schedule:
    """Minimal-wait schedule for a fixed route and fixed operation positions.

    Forward pass: at each position where operations end, the wait absorbs the
    largest remaining deficit flight_time - truck_time_over_span among them
    (one shared wait covers every drone landing there). The greedy vector
    attains the LP minimum of the total wait subject to the per-operation
    synchronization constraints; completion is sum of arc times plus waits.
    """
    _check_anchors(sol)
    T = len(sol.route)
    lengths = np.array([inst.truck_metric[i, j] if i != j else 0.0 for i, j in sol.route])
    ends: dict[int, list[DroneOperation]] = {}
    for op in sol.operations:
        ends.setdefault(op.end_pos, []).append(op)
    waits = np.zeros(T)
    clock = 0.0
    departures = np.zeros(T)
    starts = {}  # op -> clock when its span opened
    for op in sol.operations:
        starts[op] = None
    for t in range(1, T + 1):
        for op in sol.operations:
            if op.start_pos == t:
                starts[op] = clock
        clock += lengths[t - 1]
        deficit = 0.0
        for op in ends.get(t, ()):
            need = sortie_duration(inst, op.sortie)
            elapsed = clock - starts[op]
            deficit = max(deficit, need - elapsed)
        if deficit > WAIT_TOL:
            waits[t - 1] = deficit
            clock += deficit
        departures[t - 1] = clock
    return Schedule(waits=waits, departure_times=departures, completion_time=float(clock))


def validate(inst: Instance, sol: Solution) -> ValidationReport:
    """Report-style feasibility check; never raises.

    Checks route chaining and depot endpoints, the 2|N| position cap, truck
    eligibility, per-drone non-overlap, launch/retrieval co-location, battery
    feasibility of every sortie, and node coverage.
    """
    out: list[Violation] = []

    def bad(code, msg):
        out.append(Violation(code, msg))

    if not sol.route:
        bad("empty_route", "route has no arcs")
        return ValidationReport(tuple(out))
    if sol.route[0][0] != 0:
        bad("route_start", f"route starts at {node_label(sol.route[0][0])}, not the depot")
    if sol.route[-1][1] != 0:
        bad("route_end", f"route ends at {node_label(sol.route[-1][1])}, not the depot")
    for t in range(len(sol.route) - 1):
        if sol.route[t][1] != sol.route[t + 1][0]:
            bad("route_chain", f"arc {t + 2} does not start where arc {t + 1} ends")
    if len(sol.route) > 2 * inst.n:
        bad("route_length", f"route has {len(sol.route)} arcs, cap is {2 * inst.n}")
    for t, (i, j) in enumerate(sol.route, start=1):
        if i not in inst.truck_nodes or j not in inst.truck_nodes:
            bad("truck_eligibility", f"arc {t} touches a node the truck may not visit")
            break

    T = len(sol.route)
    by_drone: dict[int, list[DroneOperation]] = {}
    for op in sol.operations:
        if not (1 <= op.drone <= max(inst.m, 1)):
            bad("operation_drone", f"drone index {op.drone} outside 1..{inst.m}")
        if not (1 <= op.start_pos <= op.end_pos <= T):
            bad("operation_positions", f"span [{op.start_pos}, {op.end_pos}] out of range")
            continue
        if sol.route[op.start_pos - 1][0] != op.sortie.start:
            bad("launch_mismatch", f"{op.sortie.label()} launch node off the route")
        if sol.route[op.end_pos - 1][1] != op.sortie.end:
            bad("landing_mismatch", f"{op.sortie.label()} landing node off the route")
        reason = structural_error(inst, op.sortie)
        if reason is not None:
            bad("sortie_structure", f"{op.sortie.label()}: {reason}")
        elif not is_feasible(inst, op.sortie):
            bad(
                "sortie_energy",
                f"{op.sortie.label()} needs {sortie_energy(inst, op.sortie):.4g} "
                f"> battery {inst.battery:.4g}",
            )
        by_drone.setdefault(op.drone, []).append(op)
    for d, ops in sorted(by_drone.items()):
        ops = sorted(ops, key=lambda o: (o.start_pos, o.end_pos))
        for a, b in zip(ops, ops[1:]):
            if b.start_pos <= a.end_pos:
                bad(
                    "drone_overlap",
                    f"drone {d} flies two sorties at position {b.start_pos}",
                )

    covered = sol.visited_nodes()
    for op in sol.operations:
        covered |= op.sortie.served
    for k in range(inst.n):
        if k not in covered:
            bad("coverage", f"node {node_label(k)} is neither visited nor served")
    return ValidationReport(tuple(out))


def classify(sol: Solution) -> SolutionClass:
    """Retraversal counts per directed arc (wait slots excluded) and the two
    route classes: arc-retraversing (some arc twice) and node-revisiting (some
    non-depot head twice among real arcs, or the depot as the head of a real
    arc that is not the last one)."""
    counts: dict[tuple[int, int], int] = {}
    real = [a for a in sol.route if a[0] != a[1]]
    for a in real:
        counts[a] = counts.get(a, 0) + 1
    retraversing = any(c >= 2 for c in counts.values())
    heads: dict[int, int] = {}
    revisiting = False
    for idx, (_, j) in enumerate(real):
        heads[j] = heads.get(j, 0) + 1
        if j == 0 and idx != len(real) - 1:
            revisiting = True
    if any(c > 1 for k, c in heads.items() if k != 0):
        revisiting = True
    return SolutionClass(
        retraversing_vector=counts,
        is_arc_retraversing=retraversing,
        is_node_revisiting=revisiting,
    )


def conforms_to_mode(sol: Solution, mode: str) -> bool:
    """Route/operation shape required by a solve mode.

    The restricted modes additionally require loop sorties to launch and land
    at a single node visit (their whole span is wait slots at the anchor);
    path sorties ride the route freely in every mode. TSP_MD accepts any valid
    solution and TSP_TRUCK_ONLY forbids operations altogether.
    """
    cls = classify(sol)
    loops_anchored = all(
        all(sol.route[t - 1] == (op.sortie.start, op.sortie.start) for t in op.span())
        for op in sol.operations
        if op.sortie.is_loop
    )
    if mode == "TSP_MD":
        return True
    if mode == "M_CIRCUIT":
        return not cls.is_arc_retraversing and loops_anchored
    if mode == "M_CYCLE":
        return not cls.is_node_revisiting and not cls.is_arc_retraversing and loops_anchored
    if mode == "TSP_TRUCK_ONLY":
        return not cls.is_node_revisiting and not sol.operations
    raise ValueError(f"unknown mode {mode!r}")


def normalize_landings(inst: Instance, sol: Solution) -> Solution:
    """Make landing positions unique by inserting wait slots, as the
    time-indexed model requires (at most one drone lands per position).

    Raises EncodingOverflow if the separated route no longer fits in 2|N|
    positions. The objective is unchanged: wait slots have zero length and the
    minimal waits redistribute."""
    route = list(sol.route)
    ops = list(sol.operations)
    while True:
        ends: dict[int, list[int]] = {}
        for idx, op in enumerate(ops):
            ends.setdefault(op.end_pos, []).append(idx)
        clash = min((t for t, idxs in ends.items() if len(idxs) > 1), default=None)
        if clash is None:
            break
        node = route[clash - 1][1]
        route.insert(clash, (node, node))
        moved = sorted(ends[clash])[1]
        new_ops = []
        for idx, op in enumerate(ops):
            s, e = op.start_pos, op.end_pos
            if idx == moved:
                e = clash + 1
            else:
                if s > clash:
                    s += 1
                if e > clash:
                    e += 1
            new_ops.append(DroneOperation(op.drone, op.sortie, s, e))
        ops = new_ops
    if len(route) > 2 * inst.n:
        raise EncodingOverflow(
            f"separating landings needs {len(route)} positions, cap is {2 * inst.n}"
        )
    return Solution(route=tuple(route), operations=tuple(ops))


# --- serialization ----------------------------------------------------------------

def solution_to_dict(sol: Solution) -> dict:
    return {
        "route": [[node_label(i), node_label(j)] for i, j in sol.route],
        "operations": [
            {
                "drone": op.drone,
                "nodes": [node_label(i) for i in op.sortie.nodes],
                "start_pos": op.start_pos,
                "end_pos": op.end_pos,
            }
            for op in sol.operations
        ],
    }


def _node(x):
    return parse_label(x) if isinstance(x, str) else int(x)


def solution_from_dict(d: dict) -> Solution:
    route = tuple((_node(i), _node(j)) for i, j in d["route"])
    ops = tuple(
        DroneOperation(
            drone=int(o["drone"]),
            sortie=Sortie(tuple(_node(x) for x in o["nodes"])),
            start_pos=int(o["start_pos"]),
            end_pos=int(o["end_pos"]),
        )
        for o in d.get("operations", [])
    )
    return Solution(route=route, operations=ops)


def load_solution(path) -> Solution:
    with open(path) as fh:
        return solution_from_dict(json.load(fh))


def save_solution(sol: Solution, path) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(sol), indent=2) + "\n")
