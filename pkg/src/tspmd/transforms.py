"""Route transformations lifted from the retraversal-removal arguments.

Each transformation applies one proof step at a time to a concrete solution
and re-validates; a state the argument says cannot occur raises
TransformFailed instead of emitting a broken solution.

  shortcut_redundant           - splice out visits hosting no drone event
                                 (kept only if needed for coverage)
  remove_retraversal_single_drone - single drone, invertible single-customer
                                 sorties: invert the sandwiched sub-route and
                                 turn arc-riding sorties into anchored loops
  remove_retraversal_equal_speed - single drone, truck allowed everywhere,
                                 drone no faster: route the truck along the
                                 riding sortie's own path
  to_m_cycle                   - split every non-loop sortie into loops,
                                 anchor all loops at waits, shortcut the truck
                                 route to a simple cycle
"""

from __future__ import annotations

from .errors import PreconditionViolated, TransformFailed
from .model import Instance, compute_derived
from .sorties import Sortie, is_invertible, split_sortie
from .schedule import (
    DroneOperation,
    Solution,
    classify,
    evaluate,
    validate,
)

_TOL = 1e-9


def _shift_op(op: DroneOperation, s: int, e: int) -> DroneOperation:
    return DroneOperation(op.drone, op.sortie, s, e)


def shortcut_redundant(inst: Instance, sol: Solution) -> Solution:
    """Remove every wait slot and intermediate visit where no operation starts
    or ends, splicing the route by the direct arc.

    A visit is kept when removing it would uncover its node (the node appears
    nowhere else on the route and no sortie serves it). The depot's opening
    and closing visits are never touched. Completion time never increases
    (each splice rides the triangle inequality; waits are recomputed)."""
    route = list(sol.route)
    ops = list(sol.operations)
    served = set()
    for op in ops:
        served |= op.sortie.served

    changed = True
    while changed:
        changed = False
        lands = {op.end_pos for op in ops}
        starts = {op.start_pos for op in ops}
        for t in range(1, len(route) + 1):
            i, j = route[t - 1]
            if i == j:
                if t in lands or t in starts:
                    continue
                del route[t - 1]
                ops = [
                    _shift_op(
                        op,
                        op.start_pos - (op.start_pos > t),
                        op.end_pos - (op.end_pos > t),
                    )
                    for op in ops
                ]
                changed = True
                break
            if t == len(route):
                continue
            # interior visit of node j between arcs t and t+1
            if t in lands or (t + 1) in starts:
                continue
            new_route = route[: t - 1] + [(route[t - 1][0], route[t][1])] + route[t + 1 :]
            still_there = any(j in arc for arc in new_route)
            if not still_there and j not in served:
                continue
            route = new_route
            ops = [
                _shift_op(
                    op,
                    op.start_pos - (op.start_pos > t),
                    op.end_pos - (op.end_pos > t),
                )
                for op in ops
            ]
            changed = True
            break
    return Solution(tuple(route), tuple(ops))


def _first_retraversed(route) -> tuple | None:
    """First directed arc traversed twice, with its first two positions."""
    seen: dict[tuple[int, int], int] = {}
    for t, (i, j) in enumerate(route, start=1):
        if i == j:
            continue
        if (i, j) in seen:
            return (i, j), seen[(i, j)], t
        seen[(i, j)] = t
    return None


def _classify_ops(ops, p: int, q: int):
    """Partition operations around the two traversals at positions p < q.
    Returns (before, ride_p, middle, ride_q, after); any op straddling the
    boundaries means the Lemma structure is absent."""
    before, middle, after = [], [], []
    ride_p = ride_q = None
    for op in ops:
        s, e = op.start_pos, op.end_pos
        if e < p:
            before.append(op)
        elif s == e == p:
            ride_p = op
        elif p < s and e < q:
            middle.append(op)
        elif s == e == q:
            ride_q = op
        elif s > q:
            after.append(op)
        else:
            raise TransformFailed(
                f"operation spanning [{s}, {e}] straddles the retraversal at {p}/{q}; "
                "shortcutting should have removed this shape"
            )
    return before, ride_p, middle, ride_q, after


def _flip_segment(segment):
    return [(b, a) for (a, b) in reversed(segment)]


def _mirror_middle_op(op: DroneOperation, base: int, p: int, q: int) -> DroneOperation:
    rev = Sortie(tuple(reversed(op.sortie.nodes)))
    return DroneOperation(op.drone, rev, base + (q - op.end_pos), base + (q - op.start_pos))


def remove_retraversal_single_drone(inst: Instance, sol: Solution) -> Solution:
    """Iteratively remove arc retraversals when a single drone flies
    invertible single-customer sorties.

    One step: take a retraversed arc (i, j) at positions p < q, invert the
    truck sub-route between them together with the sorties it supports, and
    convert each sortie riding (i, j) itself - necessarily (i, k, j) - into
    the loop over its shorter leg, flown while the truck waits. Each step
    removes two arc traversals and never lengthens the schedule."""
    if inst.m != 1:
        raise PreconditionViolated("needs a single drone")
    for op in sol.operations:
        if len(op.sortie.served) > 1:
            raise PreconditionViolated(f"sortie {op.sortie.label()} serves several customers")
        if not is_invertible(inst, op.sortie):
            raise PreconditionViolated(f"sortie {op.sortie.label()} is not invertible")
    return _retraversal_fixpoint(inst, sol, _single_drone_step)


def remove_retraversal_equal_speed(inst: Instance, sol: Solution) -> Solution:
    """Iteratively remove arc retraversals when a single drone is no faster
    than the truck and the truck may visit every node.

    One step: if no sortie rides the retraversed arc, drop both traversals and
    invert the sub-route in between; otherwise walk the truck along the riding
    sortie's own path instead of the arc (no slower, since the drone has no
    speed advantage) and drop that sortie. Every step strictly reduces the
    total number of arcs the two vehicles traverse."""
    if inst.m != 1:
        raise PreconditionViolated("needs a single drone")
    if inst.truck_nodes != frozenset(range(inst.n)):
        raise PreconditionViolated("needs the truck allowed at every node")
    if compute_derived(inst).alpha > 1.0 + 1e-9:
        raise PreconditionViolated("needs drones no faster than the truck (alpha = 1)")
    for op in sol.operations:
        if not is_invertible(inst, op.sortie):
            raise PreconditionViolated(f"sortie {op.sortie.label()} is not invertible")
    return _retraversal_fixpoint(inst, sol, _equal_speed_step)


def _retraversal_fixpoint(inst, sol, step) -> Solution:
    current = shortcut_redundant(inst, sol)
    best = evaluate(inst, current).completion_time
    budget = 4 * len(current.route) + 8 * len(current.operations) + 8
    for _ in range(budget):
        if _first_retraversed(current.route) is None:
            report = validate(inst, current)
            if not report.ok:
                raise TransformFailed(
                    "transformed solution invalid: "
                    + "; ".join(v.message for v in report.violations)
                )
            return current
        nxt = shortcut_redundant(inst, step(inst, current))
        value = evaluate(inst, nxt).completion_time
        if value > best + _TOL:
            raise TransformFailed(
                f"step increased the completion time: {best:.6f} -> {value:.6f}"
            )
        best = min(best, value)
        current = nxt
    raise TransformFailed("retraversal removal did not reach a fixed point")


def _single_drone_step(inst: Instance, sol: Solution) -> Solution:
    (i, j), p, q = _first_retraversed(sol.route)
    before, ride_p, middle_ops, ride_q, after = _classify_ops(sol.operations, p, q)
    route = list(sol.route)
    prefix = route[: p - 1]
    middle = route[p : q - 1]
    suffix = route[q:]
    dm = inst.drone_metric

    def as_loop(op):
        _, k, _ = op.sortie.nodes
        if dm[i, k] <= dm[k, j]:
            return i, Sortie((i, k, i))
        return j, Sortie((j, k, j))

    i_loops, j_loops = [], []
    for op in (ride_p, ride_q):
        if op is None:
            continue
        anchor, loop = as_loop(op)
        (i_loops if anchor == i else j_loops).append((op.drone, loop))

    new_route = (
        prefix
        + [(i, i)] * len(i_loops)
        + _flip_segment(middle)
        + [(j, j)] * len(j_loops)
        + suffix
    )
    base = len(prefix) + len(i_loops)
    new_ops = list(before)
    for idx, (drone, loop) in enumerate(i_loops):
        pos = len(prefix) + 1 + idx
        new_ops.append(DroneOperation(drone, loop, pos, pos))
    for op in middle_ops:
        new_ops.append(_mirror_middle_op(op, base, p, q))
    for idx, (drone, loop) in enumerate(j_loops):
        pos = base + len(middle) + 1 + idx
        new_ops.append(DroneOperation(drone, loop, pos, pos))
    shift = len(new_route) - len(route)
    for op in after:
        new_ops.append(_shift_op(op, op.start_pos + shift, op.end_pos + shift))
    return Solution(tuple(new_route), tuple(new_ops))


def _equal_speed_step(inst: Instance, sol: Solution) -> Solution:
    (i, j), p, q = _first_retraversed(sol.route)
    before, ride_p, middle_ops, ride_q, after = _classify_ops(sol.operations, p, q)
    route = list(sol.route)

    if ride_p is None and ride_q is None:
        prefix, middle, suffix = route[: p - 1], route[p : q - 1], route[q:]
        new_route = prefix + _flip_segment(middle) + suffix
        base = len(prefix)
        new_ops = list(before)
        new_ops += [_mirror_middle_op(op, base, p, q) for op in middle_ops]
        new_ops += [_shift_op(op, op.start_pos - 2, op.end_pos - 2) for op in after]
        return Solution(tuple(new_route), tuple(new_ops))

    # Walk the truck along the riding sortie's path in place of one traversal.
    pos, rider = (p, ride_p) if ride_p is not None else (q, ride_q)
    path = rider.sortie.nodes
    path_arcs = [(path[k], path[k + 1]) for k in range(len(path) - 1)]
    new_route = route[: pos - 1] + path_arcs + route[pos:]
    delta = len(path_arcs) - 1
    new_ops = []
    for op in sol.operations:
        if op is rider:
            continue
        s, e = op.start_pos, op.end_pos
        new_ops.append(
            _shift_op(op, s + delta if s > pos else s, e + delta if e > pos else e)
        )
    return Solution(tuple(new_route), tuple(new_ops))


def to_m_cycle(inst: Instance, sol: Solution) -> Solution:
    """Rebuild any valid solution as a node-revisit-free one: every non-loop
    sortie is split into feasible loops covering the same customers, every
    loop is flown while the truck waits at its anchor, and the truck route
    shortcuts to a simple cycle in first-visit order.

    The result costs at most (1 + 2m) times the input (and (1 + m) times when
    the input's sorties were already loops or single-customer)."""
    report = validate(inst, sol)
    if not report.ok:
        raise PreconditionViolated(
            "to_m_cycle needs a valid solution: "
            + "; ".join(v.message for v in report.violations)
        )
    order: list[int] = []
    seen: set[int] = set()
    walk = [sol.route[0][0]] + [head for _, head in sol.route]
    for x in walk:
        if x not in seen:
            seen.add(x)
            order.append(x)

    loops: list[Sortie] = []
    for op in sorted(sol.operations, key=lambda o: (o.start_pos, o.end_pos, o.drone)):
        if op.sortie.is_loop:
            loops.append(op.sortie)
        else:
            loops.extend(split_sortie(inst, op.sortie))

    covered = set(order)
    kept: list[Sortie] = []
    for s in loops:
        if not (s.served <= covered):
            kept.append(s)
            covered |= s.served

    by_anchor: dict[int, list[Sortie]] = {}
    for s in kept:
        by_anchor.setdefault(s.start, []).append(s)
    for anchor in by_anchor:
        if anchor not in seen:
            raise TransformFailed(f"loop anchored at an unvisited node {anchor}")

    route: list[tuple[int, int]] = []
    ops: list[DroneOperation] = []
    counter = 0

    def host(node):
        nonlocal counter
        for s in by_anchor.get(node, ()):
            route.append((node, node))
            ops.append(DroneOperation(counter % max(inst.m, 1) + 1, s, len(route), len(route)))
            counter += 1

    host(order[0])
    prev = order[0]
    for x in order[1:]:
        route.append((prev, x))
        prev = x
        host(x)
    if prev != 0 or not route:
        route.append((prev, 0))
    return Solution(tuple(route), tuple(ops))
