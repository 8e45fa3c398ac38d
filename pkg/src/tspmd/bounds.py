"""Worst-case bounds on the cost of forbidding arc retraversals.

A priori (instance-only): the cycle restriction costs at most a factor
1 + alpha*m when the truck can visit every node, 1 + 2m always, and 1 + m when
the feasible sorties are loops or single-customer. A posteriori (given a
solution): each excess traversal costs at most (alpha - 1) * L, which divided
by a lower bound on the optimum caps the percentage increase. The lower bound
comes from the cheapest way to reach the node furthest from the depot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyIntersection, PreconditionViolated
from .model import Instance, compute_derived, node_label
from .schedule import Solution, classify
from .sorties import SortieCatalog


@dataclass(frozen=True)
class AprioriBound:
    value: float | None
    applicable: bool
    note: str = ""


@dataclass(frozen=True)
class LowerBoundResult:
    value: float
    furthest_node: int
    via: tuple | None  # (i, j) minimizing pair, None for the pure-truck term
    preconditions_ok: bool
    note: str = ""


@dataclass(frozen=True)
class AposterioriBound:
    additive_cap: float
    percentage_cap: float
    excess_traversals: int
    alpha: float
    max_sortie_duration: float


@dataclass(frozen=True)
class BoundReport:
    a_priori: dict  # name -> AprioriBound
    lb: LowerBoundResult | None = None
    lb_provenance: str | None = None  # "eq13" | "user_supplied"
    a_posteriori: AposterioriBound | None = None

    def to_dict(self) -> dict:
        out = {
            "a_priori": {
                k: {"value": v.value, "applicable": v.applicable, "note": v.note}
                for k, v in self.a_priori.items()
            }
        }
        if self.lb is not None:
            out["lower_bound"] = {
                "value": self.lb.value,
                "furthest_node": node_label(self.lb.furthest_node),
                "preconditions_ok": self.lb.preconditions_ok,
                "provenance": self.lb_provenance,
            }
        if self.a_posteriori is not None:
            out["a_posteriori"] = {
                "additive_cap": self.a_posteriori.additive_cap,
                "percentage_cap": self.a_posteriori.percentage_cap,
                "excess_traversals": self.a_posteriori.excess_traversals,
            }
        return out


def a_priori_bounds(inst: Instance, catalog: SortieCatalog | None = None) -> dict:
    """Solution-independent caps on m-CYCLE / TSP-mD (hence also on
    m-CIRCUIT / TSP-mD). Returns a map name -> AprioriBound."""
    out: dict[str, AprioriBound] = {}
    everywhere = inst.truck_nodes == frozenset(range(inst.n))
    if inst.m == 0:
        alpha_term: float | None = 1.0
        note = "no drones: every bound is 1"
    else:
        try:
            alpha_term = 1.0 + compute_derived(inst).alpha * inst.m
            note = "" if everywhere else "inapplicable: the truck cannot visit every node"
        except EmptyIntersection as exc:
            alpha_term = None
            note = str(exc)
    out["one_plus_alpha_m"] = AprioriBound(alpha_term, everywhere and alpha_term is not None, note)
    out["one_plus_2m"] = AprioriBound(1.0 + 2 * inst.m, True)
    loops_only = catalog is not None and all(
        s.is_loop or len(s.served) == 1 for s in catalog.sorties
    )
    out["one_plus_m"] = AprioriBound(
        1.0 + inst.m,
        loops_only,
        "" if loops_only else "needs a catalog of loops and single-customer sorties",
    )
    return out


def lower_bound_eq13(inst: Instance, catalog: SortieCatalog) -> LowerBoundResult:
    """Lower bound from the node f furthest from the depot: the completion
    time is at least min over {truck out-and-back to f} and {launch arcs
    (0,i), (i,j), (j,0) of any catalog sortie (i, f, j)}.

    Stated for a single drone with the truck allowed everywhere; outside those
    premises the value is still computed but flagged."""
    tm, dm = inst.truck_metric, inst.drone_metric
    f = max(range(1, inst.n), key=lambda i: (tm[0, i], -i))
    ok = inst.m == 1 and inst.truck_nodes == frozenset(range(inst.n))
    best = 2.0 * tm[0, f]
    via = None
    for sid in catalog.by_customer.get(f, ()):
        s = catalog.sorties[sid]
        if len(s.nodes) != 3:
            continue  # longer sorties never reach f sooner
        i, j = s.start, s.end
        cand = tm[0, i] + tm[0, j] + max(tm[i, j], dm[i, f] + dm[f, j])
        if cand < best:
            best, via = cand, (i, j)
    return LowerBoundResult(
        value=float(best),
        furthest_node=f,
        via=via,
        preconditions_ok=ok,
        note="" if ok else "stated for m=1 with the truck allowed everywhere",
    )


def a_posteriori_bound(
    inst: Instance,
    sol: Solution,
    lb: float,
    *,
    override: bool = False,
) -> AposterioriBound:
    """Solution-dependent cap: removing each excess traversal reroutes the
    truck along one sortie, costing at most (alpha - 1) * L; the sum divided
    by a lower bound caps the percentage increase of the no-retraversal
    optimum over the unrestricted one.

    Premises (single drone, truck allowed everywhere, alpha >= 1) are enforced
    unless override=True."""
    derived = compute_derived(inst)
    ok = (
        inst.m == 1
        and inst.truck_nodes == frozenset(range(inst.n))
        and derived.alpha >= 1.0 - 1e-12
    )
    if not ok and not override:
        raise PreconditionViolated(
            "a posteriori bound needs m=1, the truck allowed everywhere and alpha >= 1"
        )
    if lb <= 0 or not math.isfinite(lb):
        raise ValueError("lb must be a positive finite lower bound")
    excess = classify(sol).excess_traversals
    additive = excess * (derived.alpha - 1.0) * derived.max_sortie_duration
    return AposterioriBound(
        additive_cap=float(additive),
        percentage_cap=float(additive / lb),
        excess_traversals=excess,
        alpha=derived.alpha,
        max_sortie_duration=derived.max_sortie_duration,
    )


def bound_report(
    inst: Instance,
    catalog: SortieCatalog,
    sol: Solution | None = None,
    lb: float | None = None,
    *,
    override: bool = False,
) -> BoundReport:
    """Everything the bounds machinery can say about an instance (and,
    optionally, one of its solutions). A user-supplied lb replaces the
    computed one, with provenance recorded."""
    apriori = a_priori_bounds(inst, catalog)
    lb_res = lower_bound_eq13(inst, catalog)
    provenance = "eq13"
    lb_value = lb_res.value
    if lb is not None:
        lb_value = lb
        provenance = "user_supplied"
    apost = None
    if sol is not None:
        apost = a_posteriori_bound(inst, sol, lb_value, override=override)
    return BoundReport(
        a_priori=apriori,
        lb=lb_res,
        lb_provenance=provenance,
        a_posteriori=apost,
    )
