"""Problem data model: facilities on the plane, O/D demand, embedded network.

An instance couples a set of planar facilities with an origin/destination
demand matrix and an undirected network embedded in the plane.  Every edge is
drawn as a straight segment between its two vertices but carries its own
length datum, which may differ from the Euclidean gap between the endpoints.
Trips between facilities either go straight through the plane or enter the
network at one transfer point and leave it at another; the network portion is
traversed at a higher speed, modelled by a factor ``alpha`` in (0, 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping


class InstanceFormatError(ValueError):
    """Raised when an instance document is structurally unusable."""


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float

    def distance_to(self, other: "PlanarPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Facility:
    id: int
    position: PlanarPoint


@dataclass(frozen=True)
class ODPair:
    """Ordered origin/destination pair with trip weight and acceptance level.

    The pair is covered by a transfer-point choice whenever the best mixed
    trip length does not exceed ``acceptance``; acceptance must stay strictly
    below the straight planar distance, otherwise the pair would always prefer
    the plane.
    """

    origin: int
    dest: int
    weight: float
    acceptance: float


@dataclass(frozen=True)
class Vertex:
    id: int
    position: PlanarPoint


@dataclass(frozen=True)
class Edge:
    u: int
    w: int
    length: float


@dataclass(frozen=True)
class Network:
    """Undirected network embedded in the plane.

    Edges are referenced elsewhere by their index in ``edges``.  Edge lengths
    are independent data: they default to the Euclidean distance between the
    endpoint positions when the input omits them, but an explicit length may
    be larger (or smaller) than the straight-line gap.
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def vertex_index(self) -> dict[int, int]:
        return {v.id: i for i, v in enumerate(self.vertices)}

    def vertex_position(self, vertex_id: int) -> PlanarPoint:
        return self.vertices[self.vertex_index[vertex_id]].position

    def edge_endpoints(self, edge: int) -> tuple[PlanarPoint, PlanarPoint]:
        e = self.edges[edge]
        return self.vertex_position(e.u), self.vertex_position(e.w)

    def point_on_edge(self, edge: int, arc_length: float) -> PlanarPoint:
        """Planar position at the given arc length from the edge's first vertex."""
        e = self.edges[edge]
        pu, pw = self.edge_endpoints(edge)
        t = arc_length / e.length
        return PlanarPoint(pu.x + t * (pw.x - pu.x), pu.y + t * (pw.y - pu.y))


@dataclass(frozen=True)
class NetworkPoint:
    """A point of the network: edge index plus arc length from the first vertex."""

    edge: int
    arc_length: float
    point: PlanarPoint


def network_point(net: Network, edge: int, arc_length: float) -> NetworkPoint:
    e = net.edges[edge]
    if not -1e-12 <= arc_length <= e.length + 1e-12:
        raise ValueError(
            f"arc length {arc_length} outside [0, {e.length}] on edge {edge}"
        )
    arc = min(max(arc_length, 0.0), e.length)
    return NetworkPoint(edge, arc, net.point_on_edge(edge, arc))


@dataclass(frozen=True)
class ProblemInstance:
    facilities: tuple[Facility, ...]
    pairs: tuple[ODPair, ...]
    network: Network
    alpha: float

    @cached_property
    def facility_index(self) -> dict[int, int]:
        return {f.id: i for i, f in enumerate(self.facilities)}

    def facility_position(self, facility_id: int) -> PlanarPoint:
        return self.facilities[self.facility_index[facility_id]].position


@dataclass(frozen=True)
class Solution:
    x1: NetworkPoint
    x2: NetworkPoint
    objective: float
    covered: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        lines = [f"error: {v}" for v in self.errors]
        lines += [f"warning: {v}" for v in self.warnings]
        return "\n".join(lines) if lines else "ok"


def _require(doc: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in doc:
        raise InstanceFormatError(f"{context}: missing required key '{key}'")
    return doc[key]


def _number(value: Any, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{context}: expected a number, got {value!r}")
    return float(value)


def parse_instance(doc: Mapping[str, Any]) -> ProblemInstance:
    """Build a :class:`ProblemInstance` from a plain dict document.

    Structural problems (missing keys, non-numeric fields, edges referring to
    unknown vertices without an explicit length) raise
    :class:`InstanceFormatError`.  Semantic invariants are left to
    :func:`validate_instance` so that a report can name every violation.
    """

    alpha = _number(_require(doc, "alpha", "instance"), "alpha")

    vertices = []
    for k, row in enumerate(_require(doc, "vertices", "instance")):
        ctx = f"vertices[{k}]"
        vertices.append(
            Vertex(
                int(_number(_require(row, "id", ctx), f"{ctx}.id")),
                PlanarPoint(
                    _number(_require(row, "x", ctx), f"{ctx}.x"),
                    _number(_require(row, "y", ctx), f"{ctx}.y"),
                ),
            )
        )
    positions = {v.id: v.position for v in vertices}

    edges = []
    for k, row in enumerate(_require(doc, "edges", "instance")):
        ctx = f"edges[{k}]"
        u = int(_number(_require(row, "u", ctx), f"{ctx}.u"))
        w = int(_number(_require(row, "w", ctx), f"{ctx}.w"))
        if row.get("length") is not None:
            length = _number(row["length"], f"{ctx}.length")
        else:
            if u not in positions or w not in positions:
                raise InstanceFormatError(
                    f"{ctx}: cannot default length, unknown vertex {u if u not in positions else w}"
                )
            length = positions[u].distance_to(positions[w])
        edges.append(Edge(u, w, length))

    facilities = []
    for k, row in enumerate(_require(doc, "facilities", "instance")):
        ctx = f"facilities[{k}]"
        facilities.append(
            Facility(
                int(_number(_require(row, "id", ctx), f"{ctx}.id")),
                PlanarPoint(
                    _number(_require(row, "x", ctx), f"{ctx}.x"),
                    _number(_require(row, "y", ctx), f"{ctx}.y"),
                ),
            )
        )

    pairs = []
    for k, row in enumerate(_require(doc, "pairs", "instance")):
        ctx = f"pairs[{k}]"
        pairs.append(
            ODPair(
                int(_number(_require(row, "i", ctx), f"{ctx}.i")),
                int(_number(_require(row, "j", ctx), f"{ctx}.j")),
                _number(_require(row, "t", ctx), f"{ctx}.t"),
                _number(_require(row, "d", ctx), f"{ctx}.d"),
            )
        )

    return ProblemInstance(
        facilities=tuple(facilities),
        pairs=tuple(pairs),
        network=Network(tuple(vertices), tuple(edges)),
        alpha=alpha,
    )


def serialize_instance(inst: ProblemInstance) -> dict[str, Any]:
    """Plain-dict document for an instance; inverse of :func:`parse_instance`.

    Edge lengths are always written explicitly so a round trip through the
    document format is semantically lossless even when the original input
    relied on the Euclidean default.
    """

    return {
        "alpha": inst.alpha,
        "vertices": [
            {"id": v.id, "x": v.position.x, "y": v.position.y}
            for v in inst.network.vertices
        ],
        "edges": [
            {"u": e.u, "w": e.w, "length": e.length} for e in inst.network.edges
        ],
        "facilities": [
            {"id": f.id, "x": f.position.x, "y": f.position.y}
            for f in inst.facilities
        ],
        "pairs": [
            {"i": p.origin, "j": p.dest, "t": p.weight, "d": p.acceptance}
            for p in inst.pairs
        ],
    }


def load_instance(path: str | Path) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top-level document must be an object")
    return parse_instance(doc)


def save_instance(inst: ProblemInstance, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(serialize_instance(inst), fh, indent=2)
        fh.write("\n")


def _connected_components(net: Network) -> list[set[int]]:
    adjacency: dict[int, set[int]] = {v.id: set() for v in net.vertices}
    for e in net.edges:
        if e.u in adjacency and e.w in adjacency and e.u != e.w:
            adjacency[e.u].add(e.w)
            adjacency[e.w].add(e.u)
    seen: set[int] = set()
    components = []
    for start in adjacency:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for nxt in adjacency[v]:
                if nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        seen |= comp
        components.append(comp)
    return components


def validate_instance(inst: ProblemInstance) -> ValidationReport:
    """Check every instance invariant and report all violations.

    Returns a report rather than raising: a single run names everything that
    is wrong, with a path to the offending field.  Asymmetry of the weight or
    acceptance data across (i, j)/(j, i) is reported as a warning only, since
    the document format stores directed rows.
    """

    errors: list[Violation] = []
    warnings: list[Violation] = []
    err = lambda path, msg: errors.append(Violation(path, msg))

    if not 0.0 < inst.alpha < 1.0:
        err("alpha", f"alpha not in (0,1): {inst.alpha}")
    if not math.isfinite(inst.alpha):
        err("alpha", "alpha must be finite")

    seen_vertex: set[int] = set()
    for k, v in enumerate(inst.network.vertices):
        path = f"vertices[{k}]"
        if v.id in seen_vertex:
            err(path, f"duplicate vertex id {v.id}")
        seen_vertex.add(v.id)
        if not (math.isfinite(v.position.x) and math.isfinite(v.position.y)):
            err(path, "coordinates must be finite")

    seen_edge: set[frozenset[int]] = set()
    for k, e in enumerate(inst.network.edges):
        path = f"edges[{k}]"
        if e.u == e.w:
            err(path, f"self-loop at vertex {e.u}")
        for vid in (e.u, e.w):
            if vid not in seen_vertex:
                err(path, f"unknown vertex {vid}")
        key = frozenset((e.u, e.w))
        if e.u != e.w and key in seen_edge:
            err(path, f"duplicate edge between {e.u} and {e.w}")
        seen_edge.add(key)
        if not (math.isfinite(e.length) and e.length > 0):
            err(path, f"edge length must be positive, got {e.length}")

    if not inst.network.edges:
        err("edges", "network has no edges, so there is nowhere to place transfer points")
    if inst.network.vertices:
        components = _connected_components(inst.network)
        if len(components) > 1:
            a = min(components[0])
            b = min(components[1])
            err("edges", f"network is disconnected: no path between vertex {a} and vertex {b}")

    seen_fac: set[int] = set()
    for k, f in enumerate(inst.facilities):
        path = f"facilities[{k}]"
        if f.id in seen_fac:
            err(path, f"duplicate facility id {f.id}")
        seen_fac.add(f.id)
        if not (math.isfinite(f.position.x) and math.isfinite(f.position.y)):
            err(path, "coordinates must be finite")
    if seen_fac and sorted(seen_fac) != list(range(len(seen_fac))):
        err("facilities", "facility ids must be contiguous from 0")

    seen_pair: set[tuple[int, int]] = set()
    by_key: dict[tuple[int, int], ODPair] = {}
    for k, p in enumerate(inst.pairs):
        path = f"pairs[{k}]"
        if p.origin == p.dest:
            err(path, f"origin equals destination ({p.origin})")
        missing = [fid for fid in (p.origin, p.dest) if fid not in seen_fac]
        for fid in missing:
            err(path, f"unknown facility {fid}")
        key = (p.origin, p.dest)
        if key in seen_pair:
            err(path, f"duplicate pair ({p.origin},{p.dest})")
        seen_pair.add(key)
        by_key[key] = p
        if not (math.isfinite(p.weight) and p.weight >= 0):
            err(f"{path}.t", f"weight must be nonnegative, got {p.weight}")
        if not (math.isfinite(p.acceptance) and p.acceptance >= 0):
            err(f"{path}.d", f"acceptance must be nonnegative, got {p.acceptance}")
        elif not missing:
            gap = inst.facility_position(p.origin).distance_to(
                inst.facility_position(p.dest)
            )
            if p.acceptance >= gap:
                err(
                    f"{path}.d",
                    "acceptance not strictly below Euclidean distance "
                    f"({p.acceptance} >= {gap})",
                )

    for (i, j), p in by_key.items():
        q = by_key.get((j, i))
        if q is not None and i < j:
            if p.acceptance != q.acceptance:
                warnings.append(
                    Violation(f"pairs({i},{j})", "acceptance differs from reverse pair")
                )
            if p.weight != q.weight:
                warnings.append(
                    Violation(f"pairs({i},{j})", "weight differs from reverse pair")
                )

    return ValidationReport(tuple(errors), tuple(warnings))
