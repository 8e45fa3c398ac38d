"""Instance data model: node sets, the two metrics, fleet parameters.

An instance bundles the complete directed graph over nodes 0..n-1 (depot 0),
symmetric truck and drone travel-time matrices, the drone fleet (count, weight,
battery), per-node payloads and the two eligibility sets. Instances are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    AsymmetricMetric,
    DepotNotTruckVisitable,
    EmptyIntersection,
    NonpositiveAlpha,
    TriangleViolation,
    UncoveredNode,
)

METRIC_TOL = 1e-9
VALUE_TOL = 1e-6

_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def node_label(i: int) -> str:
    """Spreadsheet-style label: A..Z, then AA, AB, ..."""
    out = ""
    i += 1
    while i > 0:
        i, rem = divmod(i - 1, 26)
        out = _ALPHABET[rem] + out
    return out


def parse_label(s: str) -> int:
    s = s.strip().upper()
    if not s or any(c not in _ALPHABET for c in s):
        raise ValueError(f"bad node label {s!r}")
    i = 0
    for c in s:
        i = i * 26 + _ALPHABET.index(c) + 1
    return i - 1


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    truck_metric: np.ndarray
    drone_metric: np.ndarray
    m: int
    drone_weight: float
    battery: float
    payloads: np.ndarray
    truck_nodes: frozenset[int]
    drone_nodes: frozenset[int]
    max_sortie_customers: int
    coords: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.truck_metric.shape[0]

    def label(self, i: int) -> str:
        return node_label(i)

    def labels(self, nodes) -> list[str]:
        return [node_label(i) for i in nodes]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.truck_metric, other.truck_metric)
            and np.array_equal(self.drone_metric, other.drone_metric)
            and self.m == other.m
            and self.drone_weight == other.drone_weight
            and self.battery == other.battery
            and np.array_equal(self.payloads, other.payloads)
            and self.truck_nodes == other.truck_nodes
            and self.drone_nodes == other.drone_nodes
            and self.max_sortie_customers == other.max_sortie_customers
        )


@dataclass(frozen=True)
class DerivedParams:
    alpha: float
    max_sortie_duration: float  # L = B / w_dr, math.inf when w_dr == 0


def _as_matrix(raw, what: str) -> np.ndarray:
    mat = np.array(raw, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)) or np.any(mat < 0):
        raise ValueError(f"{what} must be finite and nonnegative")
    return mat


def _check_metric(mat: np.ndarray, what: str, repair: bool) -> np.ndarray:
    if np.any(np.abs(np.diag(mat)) > METRIC_TOL):
        raise AsymmetricMetric(f"{what} has a nonzero diagonal")
    if np.max(np.abs(mat - mat.T)) > METRIC_TOL:
        i, j = np.unravel_index(int(np.argmax(np.abs(mat - mat.T))), mat.shape)
        raise AsymmetricMetric(
            f"{what}[{node_label(i)},{node_label(j)}] != {what}[{node_label(j)},{node_label(i)}]"
        )
    slack, i, k, j = kernels.worst_triangle(mat)
    if slack > METRIC_TOL:
        if repair:
            mat = kernels.metric_closure(mat)
        else:
            raise TriangleViolation(what, node_label(i), node_label(k), node_label(j), slack)
    return mat


def build_instance(
    name: str,
    truck_matrix,
    drone_matrix,
    *,
    m: int,
    drone_weight: float,
    battery: float,
    payloads=None,
    truck_nodes=None,
    drone_nodes=None,
    max_sortie_customers: int | None = None,
    repair_triangle: bool = False,
    coords=None,
) -> Instance:
    """Validate and freeze an instance.

    Raises AsymmetricMetric / TriangleViolation (with a witness triple) /
    DepotNotTruckVisitable / UncoveredNode on invariant violations. Triangle
    violations can instead be repaired by the all-pairs shortest-path closure
    with repair_triangle=True.
    """
    truck = _as_matrix(truck_matrix, "truck metric")
    drone = _as_matrix(drone_matrix, "drone metric")
    if truck.shape != drone.shape:
        raise ValueError("truck and drone matrices must have the same shape")
    n = truck.shape[0]

    truck = _check_metric(truck, "truck metric", repair_triangle)
    drone = _check_metric(drone, "drone metric", repair_triangle)

    if m < 0 or int(m) != m:
        raise ValueError("drone count m must be a nonnegative integer")
    if drone_weight < 0:
        raise ValueError("drone weight must be nonnegative")
    if battery < 0:
        raise ValueError("battery must be nonnegative")

    if payloads is None:
        pay = np.zeros(n)
    else:
        pay = np.array(payloads, dtype=np.float64)
        if pay.shape != (n,):
            raise ValueError(f"payloads must have length {n}")
        if np.any(pay < 0):
            raise ValueError("payloads must be nonnegative")

    tr = frozenset(range(n)) if truck_nodes is None else frozenset(int(i) for i in truck_nodes)
    dr = frozenset(range(n)) if drone_nodes is None else frozenset(int(i) for i in drone_nodes)
    for s, what in ((tr, "truck_nodes"), (dr, "drone_nodes")):
        if any(i < 0 or i >= n for i in s):
            raise ValueError(f"{what} contains an out-of-range index")
    if 0 not in tr:
        raise DepotNotTruckVisitable("the depot (node 0) must be truck-visitable")
    missing = frozenset(range(n)) - (tr | dr)
    if missing:
        raise UncoveredNode(
            f"nodes {sorted(node_label(i) for i in missing)} are in neither eligibility set"
        )

    cap = len(dr) if max_sortie_customers is None else int(max_sortie_customers)
    if cap < 1:
        raise ValueError("max_sortie_customers must be >= 1")

    cc = None
    if coords is not None:
        cc = np.array(coords, dtype=np.float64)
        if cc.shape != (n, 2):
            raise ValueError("coords must be an (n, 2) array")
        cc.setflags(write=False)

    truck.setflags(write=False)
    drone.setflags(write=False)
    pay.setflags(write=False)
    return Instance(
        name=str(name),
        truck_metric=truck,
        drone_metric=drone,
        m=int(m),
        drone_weight=float(drone_weight),
        battery=float(battery),
        payloads=pay,
        truck_nodes=tr,
        drone_nodes=dr,
        max_sortie_customers=cap,
        coords=cc,
    )


def proportional_instance(
    name: str,
    truck_matrix,
    *,
    alpha: float,
    L: float,
    m: int,
    truck_nodes=None,
    drone_nodes=None,
    max_sortie_customers: int | None = None,
    repair_triangle: bool = False,
    coords=None,
) -> Instance:
    """Zero-payload instance with drone metric = truck metric / alpha.

    The (alpha, L) form is canonicalized as drone_weight=1, battery=L; any
    other (w_dr, B) with B/w_dr = L is equivalent under the energy model once
    payloads vanish.
    """
    if alpha <= 0:
        raise NonpositiveAlpha(f"alpha must be positive, got {alpha}")
    truck = _as_matrix(truck_matrix, "truck metric")
    return build_instance(
        name,
        truck,
        truck / alpha,
        m=m,
        drone_weight=1.0,
        battery=float(L),
        payloads=None,
        truck_nodes=truck_nodes,
        drone_nodes=drone_nodes,
        max_sortie_customers=max_sortie_customers,
        repair_triangle=repair_triangle,
        coords=coords,
    )


def compute_derived(inst: Instance) -> DerivedParams:
    """Maximum drone speedup over arcs with both ends eligible for both
    vehicles, and the duration cap L = B / w_dr."""
    both = sorted(inst.truck_nodes & inst.drone_nodes)
    if len(both) < 2:
        raise EmptyIntersection(
            "alpha is undefined: fewer than two nodes are eligible for both vehicles"
        )
    alpha = -math.inf
    for a in range(len(both)):
        for b in range(a + 1, len(both)):
            i, j = both[a], both[b]
            dp = inst.drone_metric[i, j]
            if dp > 0:
                alpha = max(alpha, inst.truck_metric[i, j] / dp)
    if alpha == -math.inf:
        raise EmptyIntersection("alpha is undefined: no eligible arc has positive drone time")
    L = math.inf if inst.drone_weight == 0 else inst.battery / inst.drone_weight
    return DerivedParams(alpha=alpha, max_sortie_duration=L)


# --- serialization -------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    d = {
        "name": inst.name,
        "truck_matrix": inst.truck_metric.tolist(),
        "drone_matrix": inst.drone_metric.tolist(),
        "m": inst.m,
        "drone_weight": inst.drone_weight,
        "battery": inst.battery,
        "payloads": inst.payloads.tolist(),
        "truck_nodes": inst.labels(sorted(inst.truck_nodes)),
        "drone_nodes": inst.labels(sorted(inst.drone_nodes)),
        "max_sortie_customers": inst.max_sortie_customers,
    }
    if inst.coords is not None:
        d["coords"] = inst.coords.tolist()
    return d


def _node_set(raw, n: int):
    if raw is None:
        return None
    return [parse_label(x) if isinstance(x, str) else int(x) for x in raw]


def instance_from_dict(d: dict) -> Instance:
    """Accepts both the explicit form (drone_matrix + battery/drone_weight/
    payloads) and the proportional shorthand (alpha + L)."""
    truck = d["truck_matrix"]
    n = len(truck)
    common = dict(
        m=d["m"],
        truck_nodes=_node_set(d.get("truck_nodes"), n),
        drone_nodes=_node_set(d.get("drone_nodes"), n),
        max_sortie_customers=d.get("max_sortie_customers"),
        repair_triangle=bool(d.get("repair_triangle", False)),
        coords=d.get("coords"),
    )
    if "drone_matrix" in d:
        return build_instance(
            d["name"],
            truck,
            d["drone_matrix"],
            drone_weight=d.get("drone_weight", 1.0),
            battery=d["battery"] if "battery" in d else d["L"],
            payloads=d.get("payloads"),
            **common,
        )
    return proportional_instance(d["name"], truck, alpha=d["alpha"], L=d["L"], **common)


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")
