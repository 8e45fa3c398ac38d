"""Exact depth-first branch-and-bound over the time-indexed solution space.

Routes are grown arc by arc up to 2|N| positions (the worst-case length an
optimal route needs). Drone launches are decided while the truck stands at a
sortie's start node; landings are committed on arrival at its end node, at
most one per position. Pruning combines an admissible completion bound with
dominance over (current node, covered set, in-flight state, mode extras).

Modes implement the restriction chain TSP_MD <= M_CIRCUIT <= M_CYCLE <=
TSP_TRUCK_ONLY. M_CIRCUIT forbids repeating a directed arc, M_CYCLE forbids
revisiting a node; both additionally require loop sorties to be launched and
retrieved at a single node visit, with the truck waiting there (the reading
under which the benchmark restricted-mode optima are in fact optimal - a loop
retrieved at a later revisit of its anchor would beat them). Path sorties ride
the route freely in every mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NoFeasibleSolution, TspmdError
from .model import Instance
from .schedule import (
    DroneOperation,
    Schedule,
    Solution,
    conforms_to_mode,
    evaluate,
    validate,
)
from .sorties import SortieCatalog, sortie_duration

MODES = ("TSP_MD", "M_CIRCUIT", "M_CYCLE", "TSP_TRUCK_ONLY")
OBJ_TOL = 1e-6
_EPS = 1e-9


@dataclass
class SolveConfig:
    mode: str = "TSP_MD"
    time_limit: float = 300.0
    node_limit: int = 20_000_000
    deterministic: bool = True
    incumbent: Solution | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.time_limit <= 0 or self.node_limit <= 0:
            raise ValueError("limits must be positive")


@dataclass
class SolveResult:
    status: str  # "optimal" | "feasible"
    mode: str
    objective: float
    best_bound: float
    best: Solution | None
    schedule: Schedule | None
    nodes_explored: int
    wall_time: float

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Limit(Exception):
    pass


class _Search:
    def __init__(self, inst: Instance, catalog: SortieCatalog, cfg: SolveConfig):
        self.inst = inst
        self.cfg = cfg
        self.mode = cfg.mode
        n = inst.n
        self.n = n
        self.T = 2 * n
        self.full = (1 << n) - 1
        self.tm = inst.truck_metric
        self.truck = sorted(inst.truck_nodes)
        self.restricted = self.mode in ("M_CIRCUIT", "M_CYCLE")
        self.cyclic = self.mode in ("M_CYCLE", "TSP_TRUCK_ONLY")

        use_catalog = self.mode != "TSP_TRUCK_ONLY" and inst.m >= 1
        sorties = catalog.sorties if use_catalog else ()
        self.sorties = sorties
        self.s_end = [s.end for s in sorties]
        self.s_dur = [sortie_duration(inst, s) for s in sorties]
        self.s_mask = [sum(1 << k for k in s.served) for s in sorties]
        self.s_loop = [s.is_loop for s in sorties]
        self.from_node: dict[int, list[int]] = {u: [] for u in self.truck}
        for sid, s in enumerate(sorties):
            self.from_node[s.start].append(sid)
        self.capacity = inst.m if use_catalog else 0

        self._build_lb_tables()

        # search state
        self.route: list[tuple[int, int]] = []
        self.ops_done: list[tuple[int, int, int, int]] = []  # (drone, sid, t1, t2)
        self.inflight: list[list] = []  # [sid, ready, end, t1, drone]
        self.covered = 1  # depot counts as covered
        self.tvisited = 1
        self.used_arcs: set[tuple[int, int]] = set()
        self.tau = 0.0

        self.best_val = np.inf
        self.best_sol: Solution | None = None
        self.nodes = 0
        self.fronts: dict = {}
        self.deadline = time.monotonic() + cfg.time_limit
        self.exhausted = True

    def _build_lb_tables(self):
        n, tm = self.n, self.tm
        inf = np.inf
        lbk = np.full((n, n), inf)
        for k in range(n):
            if k in self.inst.truck_nodes:
                for u in self.truck:
                    lbk[k, u] = tm[u, k] + tm[k, 0]
        for sid, s in enumerate(self.sorties):
            a, b, dur = s.start, s.end, self.s_dur[sid]
            mid = max(dur, tm[a, b])
            for k in s.served:
                for u in self.truck:
                    cand = tm[u, a] + mid + tm[b, 0]
                    if cand < lbk[k, u]:
                        lbk[k, u] = cand
        self.lbk = lbk

    # --- bookkeeping -------------------------------------------------------

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.cfg.node_limit:
            raise _Limit
        if self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            raise _Limit

    def _bound(self, cur: int) -> float:
        b = self.tm[cur, 0]
        tau = self.tau
        for fl in self.inflight:
            ready, end = fl[1], fl[2]
            need = max(ready - tau, self.tm[cur, end]) + self.tm[end, 0]
            if need > b:
                b = need
        rem = self.full & ~self.covered
        k = 0
        lbk = self.lbk
        while rem:
            if rem & 1:
                v = lbk[k, cur]
                if v > b:
                    b = v
            rem >>= 1
            k += 1
        return b

    def _dominated(self, cur: int) -> bool:
        """Register the current state; True if an at-least-as-good twin was seen.

        A stored state dominates when its clock, route length and per-flight
        ready times are all no worse; this is sound because future options
        depend only on the keyed components."""
        fls = sorted((fl[0], fl[1]) for fl in self.inflight)
        sids = tuple(f[0] for f in fls)
        readies = tuple(f[1] for f in fls)
        key = (cur, self.covered, sids)
        if self.mode == "M_CIRCUIT":
            key = key + (frozenset(self.used_arcs),)
        elif self.cyclic:
            key = key + (self.tvisited, bool(self.route) and cur == 0)
        entry = (self.tau, len(self.route), readies)
        front = self.fronts.get(key)
        if front is None:
            self.fronts[key] = [entry]
            return False
        for t0, l0, r0 in front:
            if (
                t0 <= entry[0] + _EPS
                and l0 <= entry[1]
                and all(a <= b + _EPS for a, b in zip(r0, entry[2]))
            ):
                return True
        front[:] = [
            e
            for e in front
            if not (
                entry[0] <= e[0] + _EPS
                and entry[1] <= e[1]
                and all(a <= b + _EPS for a, b in zip(entry[2], e[2]))
            )
        ]
        if len(front) < 16:
            front.append(entry)
        return False

    def _record(self):
        if self.tau < self.best_val - OBJ_TOL:
            self.best_val = self.tau
            ops = tuple(
                DroneOperation(d, self.sorties[sid], t1, t2)
                for d, sid, t1, t2 in self.ops_done
            )
            self.best_sol = Solution(route=tuple(self.route), operations=ops)

    # --- branching ----------------------------------------------------------

    def _expand(self, cur: int):
        self._tick()
        if cur == 0 and self.route and self.covered == self.full and not self.inflight:
            self._record()
            return
        if len(self.route) >= self.T:
            return
        if self.tau + self._bound(cur) >= self.best_val - OBJ_TOL:
            return
        if self._dominated(cur):
            return
        self._launch_chain(cur, 0)

    def _launch_chain(self, cur: int, min_sid: int):
        """Enumerate launch sets at the current node (ids strictly increasing,
        so each set is visited once), then the truck move."""
        if len(self.inflight) < self.capacity and cur in self.from_node:
            busy = {fl[4] for fl in self.inflight}
            drone = next(d for d in range(1, self.inst.m + 1) if d not in busy)
            cands = []
            for sid in self.from_node[cur]:
                if sid < min_sid:
                    continue
                new = self.s_mask[sid] & ~self.covered
                if new:
                    cands.append((-bin(new).count("1"), self.s_dur[sid], sid, new))
            cands.sort()
            for _, dur, sid, new in cands:
                fl = [sid, self.tau + dur, self.s_end[sid], len(self.route) + 1, drone]
                self.inflight.append(fl)
                old_cov = self.covered
                self.covered |= new
                self._launch_chain(cur, sid + 1)
                self.covered = old_cov
                self.inflight.pop()
        self._move(cur)

    def _move(self, cur: int):
        returned = self.cyclic and bool(self.route) and cur == 0
        # A restricted-mode loop pins the truck to its anchor until retrieved.
        pinned = self.restricted and any(self.s_loop[fl[0]] for fl in self.inflight)
        moves: list[tuple[float, int, int]] = []
        if not returned and not pinned:
            for v in self.truck:
                if v == cur:
                    continue
                if self.mode == "M_CIRCUIT" and (cur, v) in self.used_arcs:
                    continue
                if self.cyclic and v != 0 and (self.tvisited >> v) & 1:
                    continue
                uncovered = not ((self.covered >> v) & 1)
                moves.append((self.tm[cur, v] + (0.0 if uncovered else 1e6), self.tm[cur, v], v))
        moves.sort()
        arcs = [(v, length) for _, length, v in moves]
        if any(fl[2] == cur for fl in self.inflight):
            arcs.append((cur, 0.0))  # wait slot, only to host a landing

        for v, length in arcs:
            wait_arc = v == cur
            self.route.append((cur, v))
            old_tau = self.tau
            self.tau += length
            old_tv = self.tvisited
            self.tvisited |= 1 << v
            old_cov = self.covered
            self.covered |= 1 << v
            if self.mode == "M_CIRCUIT" and not wait_arc:
                self.used_arcs.add((cur, v))

            landers = sorted(
                (fl[0], idx) for idx, fl in enumerate(self.inflight) if fl[2] == v
            )
            for _, idx in landers:
                fl = self.inflight.pop(idx)
                tau2 = max(self.tau, fl[1])
                self.ops_done.append((fl[4], fl[0], fl[3], len(self.route)))
                t_save, self.tau = self.tau, tau2
                self._expand(v)
                self.tau = t_save
                self.ops_done.pop()
                self.inflight.insert(idx, fl)
            if not wait_arc:
                self._expand(v)

            if self.mode == "M_CIRCUIT" and not wait_arc:
                self.used_arcs.discard((cur, v))
            self.covered = old_cov
            self.tvisited = old_tv
            self.tau = old_tau
            self.route.pop()

    # --- driver ---------------------------------------------------------------

    def run(self) -> tuple[float, Solution | None, bool]:
        if self.cfg.incumbent is not None:
            sol = self.cfg.incumbent
            if validate(self.inst, sol).ok and conforms_to_mode(sol, self.mode):
                sched = evaluate(self.inst, sol)
                self.best_val = sched.completion_time
                self.best_sol = sol
            else:
                raise TspmdError("warm-start solution is invalid for this mode")
        try:
            self._expand(0)
        except _Limit:
            self.exhausted = False
        return self.best_val, self.best_sol, self.exhausted


def solve(inst: Instance, catalog: SortieCatalog, cfg: SolveConfig | None = None) -> SolveResult:
    """Minimize completion time in the configured mode.

    Returns status "optimal" when the search space was exhausted, "feasible"
    when a limit cut it short (best-so-far is still reported). Raises
    NoFeasibleSolution when the mode admits no solution at all.
    """
    cfg = cfg or SolveConfig()
    if catalog.instance_infeasible and inst.m >= 1:
        raise NoFeasibleSolution(
            "drone-only nodes with no feasible sortie: "
            + ", ".join(inst.label(k) for k in catalog.uncoverable)
        )
    if (catalog.instance_infeasible or inst.m == 0 or cfg.mode == "TSP_TRUCK_ONLY") and (
        inst.truck_nodes != frozenset(range(inst.n))
    ):
        raise NoFeasibleSolution("the truck cannot reach every node that needs it")

    start = time.monotonic()
    search = _Search(inst, catalog, cfg)
    global_lb = search._bound(0)
    value, sol, exhausted = search.run()
    wall = time.monotonic() - start

    if sol is None:
        if exhausted:
            raise NoFeasibleSolution(f"no feasible solution in mode {cfg.mode}")
        return SolveResult(
            status="feasible",
            mode=cfg.mode,
            objective=np.inf,
            best_bound=global_lb,
            best=None,
            schedule=None,
            nodes_explored=search.nodes,
            wall_time=wall,
        )
    sched = evaluate(inst, sol)
    return SolveResult(
        status="optimal" if exhausted else "feasible",
        mode=cfg.mode,
        objective=sched.completion_time,
        best_bound=sched.completion_time if exhausted else min(global_lb, sched.completion_time),
        best=sol,
        schedule=sched,
        nodes_explored=search.nodes,
        wall_time=wall,
    )


def objective_chain_check(
    inst: Instance, catalog: SortieCatalog, cfg: SolveConfig | None = None
) -> dict:
    """Solve all four modes and assert the restriction chain
    TSP_MD <= M_CIRCUIT <= M_CYCLE <= TSP_TRUCK_ONLY (within 1e-6)."""
    base = cfg or SolveConfig()
    values: dict[str, float] = {}
    for mode in MODES:
        cfg_m = SolveConfig(
            mode=mode,
            time_limit=base.time_limit,
            node_limit=base.node_limit,
            deterministic=base.deterministic,
        )
        values[mode] = solve(inst, catalog, cfg_m).objective
    seq = [values[m] for m in MODES]
    for a, b in zip(seq, seq[1:]):
        if a > b + OBJ_TOL:
            raise TspmdError(f"restriction chain violated: {values}")
    return values
