"""Time-indexed integer program: construction, LP-format export, solution audit.

Variables: x_{i}_{j}_{t} (arc (i,j) in N x N sits at route position t, waits
encoded as (i,i)), w_{t} (waiting time at position t's head), z_{h} (drone
operation h = (drone, sortie, start, end) is performed). Constraint families
and their cardinalities are closed-form in |N|, m and T = 2|N|:

    onearcpertime T, start |N|, flow |N|(T-1), end T, drone_busy mT,
    launch |N|T, land |N|T, cover |N|, sync T(T+1)/2,
    plus one eligibility row per node outside N_tr / N_dr.

The operation set H (drone x sortie x start<=end) is never materialized as an
object; rows stream it during export, and the solution checker evaluates each
family directly against the sparse assignment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import CatalogMissing, EncodingOverflow
from .model import Instance, node_label
from .schedule import Solution, evaluate, normalize_landings
from .sorties import SortieCatalog, sortie_duration

ROW_TOL = 1e-6


@dataclass
class MilpModel:
    inst: Instance
    catalog: SortieCatalog
    T: int
    n_pairs: int  # number of (t1, t2) pairs, = T(T+1)/2
    n_ops: int  # |H| = m * |P| * n_pairs
    family_counts: dict = field(default_factory=dict)
    durations: tuple = ()

    def x_name(self, i: int, j: int, t: int) -> str:
        return f"x_{i}_{j}_{t}"

    def w_name(self, t: int) -> str:
        return f"w_{t}"

    def _pair_index(self, t1: int, t2: int) -> int:
        return (t1 - 1) * (2 * self.T - t1 + 2) // 2 + (t2 - t1)

    def h_index(self, d: int, sid: int, t1: int, t2: int) -> int:
        return ((d - 1) * len(self.catalog.sorties) + sid) * self.n_pairs + self._pair_index(t1, t2)

    def z_name(self, d: int, sid: int, t1: int, t2: int) -> str:
        return f"z_{self.h_index(d, sid, t1, t2)}"

    def iter_ops(self):
        """All operations h in index order: (h, d, sid, t1, t2)."""
        h = 0
        for d in range(1, self.inst.m + 1):
            for sid in range(len(self.catalog.sorties)):
                for t1 in range(1, self.T + 1):
                    for t2 in range(t1, self.T + 1):
                        yield h, d, sid, t1, t2
                        h += 1


def build_model(inst: Instance, catalog: SortieCatalog) -> MilpModel:
    if catalog is None:
        raise CatalogMissing("the time-indexed model needs an enumerated sortie catalog")
    n = inst.n
    T = 2 * n
    n_pairs = T * (T + 1) // 2
    counts = {
        "onearcpertime": T,
        "start": n,
        "flow": n * (T - 1),
        "end": T,
        "drone_busy": inst.m * T,
        "launch": n * T,
        "land": n * T,
        "cover": n,
        "sync": n_pairs,
        "eligibility": (n - len(inst.truck_nodes)) + (n - len(inst.drone_nodes)),
    }
    return MilpModel(
        inst=inst,
        catalog=catalog,
        T=T,
        n_pairs=n_pairs,
        n_ops=inst.m * len(catalog.sorties) * n_pairs,
        family_counts=counts,
        durations=tuple(sortie_duration(inst, s) for s in catalog.sorties),
    )


def _num(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(float(x))


def _row(parts: list[str], name: str, terms: list[tuple[float, str]], sense: str, rhs: float):
    if not terms:
        # LP format needs at least one variable per row; never happens for our families
        raise ValueError(f"empty row {name}")
    frags = [f" {name}:"]
    for coef, var in terms:
        if coef >= 0:
            frags.append(f" + {_num(coef)} {var}" if coef != 1 else f" + {var}")
        else:
            frags.append(f" - {_num(-coef)} {var}" if coef != -1 else f" - {var}")
    frags.append(f" {sense} {_num(rhs)}")
    parts.append("".join(frags))


def _rows(model: MilpModel):
    """Yield (family, name, terms, sense, rhs) for every constraint row, in a
    deterministic order."""
    inst, T = model.inst, model.T
    n, m = inst.n, inst.m
    sorties = model.catalog.sorties
    tm = inst.truck_metric

    def x(i, j, t):
        return model.x_name(i, j, t)

    for t in range(1, T + 1):
        terms = [(1.0, x(i, j, t)) for i in range(n) for j in range(n)]
        yield "onearcpertime", f"onearcpertime_{t}", terms, "<=", 1.0

    for i in range(n):
        terms = [(1.0, x(i, j, 1)) for j in range(n)]
        yield "start", f"start_{i}", terms, "=", 1.0 if i == 0 else 0.0

    for i in range(n):
        for t in range(2, T + 1):
            terms = [(1.0, x(i, j, t)) for j in range(n)]
            terms += [(-1.0, x(j, i, t - 1)) for j in range(n)]
            yield "flow", f"flow_{i}_{t}", terms, "<=", 0.0

    for t in range(1, T + 1):
        terms = [(1.0, x(i, j, t)) for i in range(n) for j in range(n) if j != 0]
        if t < T:
            terms += [(-1.0, x(i, j, t + 1)) for i in range(n) for j in range(n)]
        yield "end", f"end_{t}", terms, "<=", 0.0

    for d in range(1, m + 1):
        for t in range(1, T + 1):
            terms = []
            for sid in range(len(sorties)):
                for t1 in range(1, t + 1):
                    for t2 in range(t, T + 1):
                        terms.append((1.0, model.z_name(d, sid, t1, t2)))
            terms += [(-1.0, x(i, j, t)) for i in range(n) for j in range(n)]
            yield "drone_busy", f"drone_busy_{d}_{t}", terms, "<=", 0.0

    starts_at: dict[int, list[int]] = {}
    ends_at: dict[int, list[int]] = {}
    for sid, s in enumerate(sorties):
        starts_at.setdefault(s.start, []).append(sid)
        ends_at.setdefault(s.end, []).append(sid)

    for i in range(n):
        for t1 in range(1, T + 1):
            terms = [
                (1.0, model.z_name(d, sid, t1, t2))
                for d in range(1, m + 1)
                for sid in starts_at.get(i, ())
                for t2 in range(t1, T + 1)
            ]
            terms += [(-float(m), x(i, j, t1)) for j in range(n)]
            yield "launch", f"launch_{i}_{t1}", terms, "<=", 0.0

    for j in range(n):
        for t2 in range(1, T + 1):
            terms = [
                (1.0, model.z_name(d, sid, t1, t2))
                for d in range(1, m + 1)
                for sid in ends_at.get(j, ())
                for t1 in range(1, t2 + 1)
            ]
            terms += [(-1.0, x(i, j, t2)) for i in range(n)]
            yield "land", f"land_{j}_{t2}", terms, "<=", 0.0

    for k in range(n):
        terms = [(1.0, x(k, j, t)) for t in range(1, T + 1) for j in range(n)]
        for d in range(1, m + 1):
            for sid in model.catalog.by_customer.get(k, ()):
                for t1 in range(1, T + 1):
                    for t2 in range(t1, T + 1):
                        terms.append((1.0, model.z_name(d, sid, t1, t2)))
        yield "cover", f"cover_{k}", terms, ">=", 1.0

    for t1 in range(1, T + 1):
        for t2 in range(t1, T + 1):
            terms = [(1.0, model.w_name(t)) for t in range(t1, t2 + 1)]
            terms += [
                (float(tm[i, j]), x(i, j, t))
                for t in range(t1, t2 + 1)
                for i in range(n)
                for j in range(n)
                if i != j and tm[i, j] != 0.0
            ]
            terms += [
                (-model.durations[sid], model.z_name(d, sid, t1, t2))
                for d in range(1, m + 1)
                for sid in range(len(sorties))
                if model.durations[sid] != 0.0
            ]
            yield "sync", f"sync_{t1}_{t2}", terms, ">=", 0.0

    for i in range(n):
        if i not in inst.truck_nodes:
            terms = [
                (1.0, x(i, j, t)) for t in range(1, T + 1) for j in range(n) if j != i
            ]
            yield "eligibility", f"eligibility_tr_{i}", terms, "<=", 0.0
    for j in range(n):
        if j not in inst.drone_nodes:
            terms = [
                (1.0, x(i, j, t)) for t in range(1, T + 1) for i in range(n) if i != j
            ]
            yield "eligibility", f"eligibility_dr_{j}", terms, ">=", 1.0


def audit_counts(model: MilpModel) -> dict:
    """Actual generated row counts per family (must equal the closed forms)."""
    seen: dict[str, int] = {}
    for family, *_ in _rows(model):
        seen[family] = seen.get(family, 0) + 1
    return seen


def export_lp(model: MilpModel) -> str:
    """CPLEX LP text. Deterministic: byte-identical for identical input."""
    inst, T = model.inst, model.T
    n = inst.n
    parts = [f"\\ time-indexed TSP-mD model: {inst.name}, n={n}, m={inst.m}, T={T}"]
    parts.append("Minimize")
    obj = []
    for t in range(1, T + 1):
        obj.append((1.0, model.w_name(t)))
    for t in range(1, T + 1):
        for i in range(n):
            for j in range(n):
                if i != j and inst.truck_metric[i, j] != 0.0:
                    obj.append((float(inst.truck_metric[i, j]), model.x_name(i, j, t)))
    frags = [" obj:"]
    for coef, var in obj:
        frags.append(f" + {_num(coef)} {var}" if coef != 1 else f" + {var}")
    parts.append("".join(frags))
    parts.append("Subject To")
    for _, name, terms, sense, rhs in _rows(model):
        _row(parts, name, terms, sense, rhs)
    parts.append("Bounds")
    for t in range(1, T + 1):
        parts.append(f" 0 <= {model.w_name(t)}")
    parts.append("Binaries")
    line = []
    for t in range(1, T + 1):
        for i in range(n):
            for j in range(n):
                line.append(model.x_name(i, j, t))
    for h, d, sid, t1, t2 in model.iter_ops():
        line.append(f"z_{h}")
    for k in range(0, len(line), 12):
        parts.append(" " + " ".join(line[k : k + 12]))
    parts.append("End")
    return "\n".join(parts) + "\n"


@dataclass
class ParsedLp:
    variables: set
    binaries: set
    rows_by_family: dict
    objective_terms: int


def parse_lp(text: str) -> ParsedLp:
    """Minimal reader for the exporter's own dialect: enough to recount
    variables and constraint families for the round-trip self-check."""
    section = None
    variables: set[str] = set()
    binaries: set[str] = set()
    rows: dict[str, int] = {}
    obj_terms = 0
    var_re = re.compile(r"[xwz]_[0-9_]+")
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low == "binaries":
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            found = var_re.findall(line)
            obj_terms += len(found)
            variables.update(found)
        elif section == "rows":
            name = line.split(":", 1)[0].strip()
            family = re.sub(r"(_(?:tr|dr))?(_\d+)+$", "", name)
            rows[family] = rows.get(family, 0) + 1
            variables.update(var_re.findall(line.split(":", 1)[1]))
        elif section == "bounds":
            variables.update(var_re.findall(line))
        elif section == "bin":
            found = var_re.findall(line)
            binaries.update(found)
            variables.update(found)
    return ParsedLp(
        variables=variables,
        binaries=binaries,
        rows_by_family=rows,
        objective_terms=obj_terms,
    )


@dataclass
class CheckReport:
    ok: bool
    objective: float | None
    violations: tuple


def check_solution_against_model(model: MilpModel, sol: Solution) -> CheckReport:
    """Encode a solution as an (x, w, z) assignment and verify every row.

    Solutions with several drones landing at one position are first separated
    by wait slots (the model admits at most one landing per position); raises
    EncodingOverflow when that no longer fits in T positions. Operations whose
    sortie is missing from the catalog are reported as violations.
    """
    inst, T = model.inst, model.T
    violations: list[str] = []
    sol = normalize_landings(inst, sol)
    if len(sol.route) > T:
        raise EncodingOverflow(f"route needs {len(sol.route)} positions, T={T}")

    sid_of = {s.nodes: i for i, s in enumerate(model.catalog.sorties)}
    ops = []
    for op in sol.operations:
        sid = sid_of.get(op.sortie.nodes)
        if sid is None:
            violations.append(f"z[{op.sortie.label()}]: sortie not in catalog")
        elif not (1 <= op.drone <= inst.m):
            violations.append(f"z[{op.sortie.label()}]: drone {op.drone} outside 1..{inst.m}")
        else:
            ops.append((op.drone, sid, op.start_pos, op.end_pos))

    route = sol.route
    L = len(route)
    n = inst.n
    tm = inst.truck_metric

    try:
        sched = evaluate(inst, sol)
        waits = list(sched.waits) + [0.0] * (T - L)
    except Exception as exc:  # anchors broken: surface as row violations below
        violations.append(f"encoding: {exc}")
        waits = [0.0] * T
        sched = None

    # start / flow / end / onearcpertime from the route
    if L == 0 or route[0][0] != 0:
        violations.append("start[0]: depot has no outgoing arc at position 1")
    for t in range(2, L + 1):
        if route[t - 1][0] != route[t - 2][1]:
            violations.append(f"flow[{t}]: arc tails do not chain")
    if L and route[-1][1] != 0:
        violations.append(f"end[{L}]: route stops away from the depot")
    for t, (i, j) in enumerate(route, start=1):
        if i not in inst.truck_nodes or (j != i and j not in inst.truck_nodes):
            violations.append(f"eligibility[{node_label(i)},{node_label(j)},t={t}]")

    # drone_busy
    for d in sorted({d for d, *_ in ops}):
        for t in range(1, T + 1):
            active = sum(1 for dd, _, t1, t2 in ops if dd == d and t1 <= t <= t2)
            arcs_at_t = 1 if t <= L else 0
            if active > arcs_at_t:
                violations.append(f"drone_busy[d={d},t={t}]: {active} > {arcs_at_t}")

    # launch / land
    for d, sid, t1, t2 in ops:
        s = model.catalog.sorties[sid]
        if t1 > L or route[t1 - 1][0] != s.start:
            violations.append(f"launch[{node_label(s.start)},t={t1}]")
        if t2 > L or route[t2 - 1][1] != s.end:
            violations.append(f"land[{node_label(s.end)},t={t2}]")
    land_count: dict[int, int] = {}
    for _, _, _, t2 in ops:
        land_count[t2] = land_count.get(t2, 0) + 1
    for t2, c in sorted(land_count.items()):
        if c > 1:
            violations.append(f"land[t={t2}]: {c} landings at one position")

    # cover
    covered = set()
    for i, j in route:
        covered.add(i)
        covered.add(j)
    for _, sid, _, _ in ops:
        covered |= model.catalog.sorties[sid].served
    for k in range(n):
        if k not in covered:
            violations.append(f"cover[{node_label(k)}]")

    # sync: prefix sums of w_t + arc length
    step = [0.0] * (T + 1)
    for t in range(1, T + 1):
        arc_len = tm[route[t - 1][0], route[t - 1][1]] if t <= L and route[t - 1][0] != route[t - 1][1] else 0.0
        step[t] = step[t - 1] + arc_len + waits[t - 1]
    need: dict[tuple[int, int], float] = {}
    for _, sid, t1, t2 in ops:
        need[(t1, t2)] = need.get((t1, t2), 0.0) + model.durations[sid]
    for (t1, t2), rhs in sorted(need.items()):
        lhs = step[t2] - step[t1 - 1]
        if lhs < rhs - ROW_TOL:
            violations.append(f"sync[{t1},{t2}]: {lhs:.6f} < {rhs:.6f}")

    objective = sched.completion_time if sched is not None else None
    return CheckReport(ok=not violations, objective=objective, violations=tuple(violations))
