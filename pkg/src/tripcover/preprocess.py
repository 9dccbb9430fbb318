"""Network preprocessing: shortest paths, bottleneck points, segment classes.

The solver decomposes each edge at its interior *bottleneck points*, the
points where the two routes towards some vertex tie.  Between consecutive
bottleneck points every vertex-to-point distance is affine in the arc length,
so the network distance restricted to a pair of such *linear arc segments*
collapses to the minimum of at most two affine forms.  This module computes
the vertex distance matrix, the per-edge bottleneck partition and, for any
two segments, the concave/linear/convex classification together with the
explicit affine forms.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Network, ProblemInstance

#: interior points closer than this merge into one partition point
MERGE_TOL = 1e-9

#: slack used when testing interval containment for the concave case
CLASSIFY_TOL = 1e-9

TYPE1 = "type1"
TYPE2 = "type2"


class DisconnectedNetworkError(ValueError):
    """Raised when a shortest-path query cannot reach some vertex."""


def _adjacency(net: Network) -> list[list[tuple[int, float]]]:
    n = len(net.vertices)
    idx = net.vertex_index
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for e in net.edges:
        u, w = idx[e.u], idx[e.w]
        adj[u].append((w, e.length))
        adj[w].append((u, e.length))
    return adj


def _dijkstra(adj: Sequence[Sequence[tuple[int, float]]], src: int) -> np.ndarray:
    dist = np.full(len(adj), np.inf)
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for nxt, length in adj[v]:
            nd = d + length
            if nd < dist[nxt]:
                dist[nxt] = nd
                heapq.heappush(heap, (nd, nxt))
    return dist


def all_pairs_shortest_paths(net: Network) -> np.ndarray:
    """Vertex-to-vertex shortest distance matrix, indexed like ``net.vertices``.

    One priority-queue single-source run per vertex.  Raises
    :class:`DisconnectedNetworkError` naming an unreachable pair when the
    network is not connected.
    """

    adj = _adjacency(net)
    n = len(net.vertices)
    dist = np.empty((n, n))
    for src in range(n):
        row = _dijkstra(adj, src)
        if not np.all(np.isfinite(row)):
            far = int(np.argmax(~np.isfinite(row)))
            raise DisconnectedNetworkError(
                f"no path between vertex {net.vertices[src].id} "
                f"and vertex {net.vertices[far].id}"
            )
        dist[src] = row
    # each run is exact; take the pairwise minimum so the matrix is
    # symmetric to the last bit
    return np.minimum(dist, dist.T)


@dataclass(frozen=True)
class BottleneckPoint:
    """Interior edge point where both routes to some vertex tie.

    ``vertices`` lists every vertex id defining (up to ``MERGE_TOL``) the same
    interior point; coincident candidates are merged so the segment partition
    stays a partition.
    """

    edge: int
    arc_length: float
    vertices: tuple[int, ...]


def bottleneck_candidate(net: Network, dist: np.ndarray, edge: int, vertex: int) -> float:
    """Arc length (from the edge's first vertex) of the point of the edge
    farthest from ``vertex``; interior only when both routes genuinely tie."""

    e = net.edges[edge]
    idx = net.vertex_index
    u, w, v = idx[e.u], idx[e.w], idx[vertex]
    return 0.5 * (dist[v, w] - dist[v, u] + e.length)


def arc_bottleneck_points(
    net: Network, edge: int, dist: np.ndarray
) -> list[BottleneckPoint]:
    """Sorted interior bottleneck points of one edge.

    One candidate per vertex; candidates landing on (or within ``MERGE_TOL``
    of) an endpoint are dropped, and interior candidates closer than
    ``MERGE_TOL`` are merged keeping every defining vertex id.
    """

    e = net.edges[edge]
    found: list[tuple[float, int]] = []
    for v in net.vertices:
        t = bottleneck_candidate(net, dist, edge, v.id)
        if MERGE_TOL < t < e.length - MERGE_TOL:
            found.append((t, v.id))
    found.sort()

    merged: list[BottleneckPoint] = []
    for t, vid in found:
        if merged and t - merged[-1].arc_length < MERGE_TOL:
            last = merged[-1]
            merged[-1] = BottleneckPoint(edge, last.arc_length, last.vertices + (vid,))
        else:
            merged.append(BottleneckPoint(edge, t, (vid,)))
    return merged


@dataclass(frozen=True)
class LinearArcSegment:
    """Maximal subedge on which every vertex distance is affine.

    ``start``/``end`` are arc lengths from the edge's first vertex; ``index``
    is the position within the edge's ordered partition.
    """

    edge: int
    start: float
    end: float
    index: int

    @property
    def length(self) -> float:
        return self.end - self.start


def linear_arc_segments(
    net: Network, edge: int, bottlenecks: Sequence[BottleneckPoint]
) -> list[LinearArcSegment]:
    """Partition of one edge into linear arc segments.

    Consecutive members of {0} U bottleneck arc lengths U {length} delimit the
    segments; an edge without interior bottleneck points is one segment.
    """

    cuts = [0.0] + [b.arc_length for b in bottlenecks] + [net.edges[edge].length]
    return [
        LinearArcSegment(edge, s, t, k)
        for k, (s, t) in enumerate(zip(cuts[:-1], cuts[1:]))
    ]


@dataclass(frozen=True)
class AffineForm:
    """Affine distance form c0 + cx*x + cy*y in segment-local coordinates."""

    c0: float
    cx: int
    cy: int

    def __call__(self, x, y):
        return self.c0 + self.cx * x + self.cy * y


@dataclass(frozen=True)
class PairClass:
    """Distance structure of one segment pair.

    ``type1`` pairs have a concave network distance equal to the minimum of
    two affine forms; ``type2`` pairs have a single affine form, or the convex
    form |x - y| when both arguments are the same segment (``diagonal``).
    Local coordinates run over [0, len_p] x [0, len_q].
    """

    kind: str
    forms: tuple[AffineForm, ...]
    diagonal: bool
    len_p: float
    len_q: float

    @property
    def rect(self) -> tuple[float, float]:
        return (self.len_p, self.len_q)


def _same_interval(a: LinearArcSegment, b: LinearArcSegment) -> bool:
    return (
        a.edge == b.edge
        and abs(a.start - b.start) < MERGE_TOL
        and abs(a.end - b.end) < MERGE_TOL
    )


def _contained(seg: LinearArcSegment, lo: float, hi: float, tol: float) -> bool:
    return lo - tol <= seg.start and seg.end <= hi + tol


def _vertex_form_on_segment(
    net: Network, dist: np.ndarray, vertex_idx: int, seg: LinearArcSegment
) -> tuple[float, int]:
    """Affine piece (c0, cy) of the vertex-to-point distance on one segment.

    On a linear arc segment the distance from any vertex is affine; the active
    route (via the edge's first or second vertex) is decided at the segment
    midpoint, where it is strict except for degenerate ties.
    """

    e = net.edges[seg.edge]
    idx = net.vertex_index
    u, w = idx[e.u], idx[e.w]
    mid = seg.start + 0.5 * seg.length
    via_u = dist[vertex_idx, u] + mid
    via_w = dist[vertex_idx, w] + e.length - mid
    if via_u <= via_w:
        return dist[vertex_idx, u] + seg.start, +1
    return dist[vertex_idx, w] + e.length - seg.start, -1


def classify_segment_pair(
    seg_p: LinearArcSegment,
    seg_q: LinearArcSegment,
    dist: np.ndarray,
    net: Network,
) -> PairClass:
    """Classify a segment pair and derive its explicit distance forms.

    The concave (type 1) cases are exactly the mutually antipodal pairs on
    different edges and, on one edge, pairs lying in the two outer cells of
    the partition induced by the endpoints' antipodal points.  Containment is
    tested with ``CLASSIFY_TOL`` slack, so segments touching the antipodal
    span boundary still classify as type 1 (the min is then degenerate but
    every downstream formula stays correct).  The classification tag is
    symmetric in the two arguments.
    """

    if _same_interval(seg_p, seg_q):
        return PairClass(TYPE2, (), True, seg_p.length, seg_q.length)

    if seg_p.edge == seg_q.edge:
        return _classify_same_edge(seg_p, seg_q, dist, net)
    return _classify_different_edges(seg_p, seg_q, dist, net)


def _classify_same_edge(
    seg_p: LinearArcSegment,
    seg_q: LinearArcSegment,
    dist: np.ndarray,
    net: Network,
) -> PairClass:
    e = net.edges[seg_p.edge]
    idx = net.vertex_index
    u, w = idx[e.u], idx[e.w]
    duw = dist[u, w]
    # antipodal points of the edge's own endpoints split the edge in at most
    # three cells; the distance is concave only across the two outer cells
    far_w = 0.5 * (e.length - duw)
    far_u = 0.5 * (e.length + duw)

    p_left = _contained(seg_p, 0.0, far_w, CLASSIFY_TOL)
    p_right = _contained(seg_p, far_u, e.length, CLASSIFY_TOL)
    q_left = _contained(seg_q, 0.0, far_w, CLASSIFY_TOL)
    q_right = _contained(seg_q, far_u, e.length, CLASSIFY_TOL)

    if p_left and q_right:
        inner = AffineForm(seg_q.start - seg_p.start, -1, +1)
        outer = AffineForm(seg_p.start + duw + e.length - seg_q.start, +1, -1)
        return PairClass(TYPE1, (inner, outer), False, seg_p.length, seg_q.length)
    if q_left and p_right:
        inner = AffineForm(seg_p.start - seg_q.start, +1, -1)
        outer = AffineForm(seg_q.start + duw + e.length - seg_p.start, -1, +1)
        return PairClass(TYPE1, (inner, outer), False, seg_p.length, seg_q.length)

    # remaining same-edge pairs: the in-edge route wins everywhere and the
    # segments have disjoint interiors, so |difference| is affine
    if seg_p.start <= seg_q.start:
        form = AffineForm(seg_q.start - seg_p.start, -1, +1)
    else:
        form = AffineForm(seg_p.start - seg_q.start, +1, -1)
    return PairClass(TYPE2, (form,), False, seg_p.length, seg_q.length)


def _classify_different_edges(
    seg_p: LinearArcSegment,
    seg_q: LinearArcSegment,
    dist: np.ndarray,
    net: Network,
) -> PairClass:
    ep = net.edges[seg_p.edge]
    eq = net.edges[seg_q.edge]
    idx = net.vertex_index

    # route leaving through each endpoint of seg_p's edge; the entry side on
    # seg_q is fixed over the whole segment
    c0_a, cy_a = _vertex_form_on_segment(net, dist, idx[ep.u], seg_q)
    form_a = AffineForm(seg_p.start + c0_a, +1, cy_a)
    c0_b, cy_b = _vertex_form_on_segment(net, dist, idx[ep.w], seg_q)
    form_b = AffineForm(ep.length - seg_p.start + c0_b, -1, cy_b)

    # mutually antipodal test: each segment inside the span of the antipodal
    # points of the other edge's endpoints
    span_on_p = (
        bottleneck_candidate(net, dist, seg_p.edge, eq.w),
        bottleneck_candidate(net, dist, seg_p.edge, eq.u),
    )
    span_on_q = (
        bottleneck_candidate(net, dist, seg_q.edge, ep.w),
        bottleneck_candidate(net, dist, seg_q.edge, ep.u),
    )
    antipodal = (
        span_on_p[0] <= span_on_p[1] + CLASSIFY_TOL
        and span_on_q[0] <= span_on_q[1] + CLASSIFY_TOL
        and _contained(seg_p, span_on_p[0], span_on_p[1], CLASSIFY_TOL)
        and _contained(seg_q, span_on_q[0], span_on_q[1], CLASSIFY_TOL)
    )
    if antipodal:
        return PairClass(TYPE1, (form_a, form_b), False, seg_p.length, seg_q.length)

    # otherwise one route dominates the other over the whole rectangle;
    # an affine difference attains its extremes at the corners
    corners = [
        (0.0, 0.0),
        (seg_p.length, 0.0),
        (0.0, seg_q.length),
        (seg_p.length, seg_q.length),
    ]
    diffs = [form_b(x, y) - form_a(x, y) for x, y in corners]
    if min(diffs) >= -CLASSIFY_TOL:
        return PairClass(TYPE2, (form_a,), False, seg_p.length, seg_q.length)
    if max(diffs) <= CLASSIFY_TOL:
        return PairClass(TYPE2, (form_b,), False, seg_p.length, seg_q.length)
    # numerically ambiguous containment: the minimum of the two forms is
    # still the exact distance, so fall back to the concave representation
    return PairClass(TYPE1, (form_a, form_b), False, seg_p.length, seg_q.length)


@dataclass(frozen=True)
class Preprocessed:
    """Distance matrix plus the per-edge bottleneck/segment decomposition."""

    dist: np.ndarray
    bottlenecks: tuple[tuple[BottleneckPoint, ...], ...]
    segments_by_edge: tuple[tuple[LinearArcSegment, ...], ...]

    @property
    def segments(self) -> tuple[LinearArcSegment, ...]:
        return tuple(s for per_edge in self.segments_by_edge for s in per_edge)


def preprocess_network(net: Network) -> Preprocessed:
    dist = all_pairs_shortest_paths(net)
    bottlenecks = []
    segments = []
    for edge in range(len(net.edges)):
        bp = arc_bottleneck_points(net, edge, dist)
        bottlenecks.append(tuple(bp))
        segments.append(tuple(linear_arc_segments(net, edge, bp)))
    return Preprocessed(dist, tuple(bottlenecks), tuple(segments))


def preprocess_instance(inst: ProblemInstance) -> Preprocessed:
    return preprocess_network(inst.network)
