"""Twists on stable graphs.

A twist assigns an integer to each side of every non-self edge (self-edges
model non-separating nodes and carry no twist), balanced across each edge.
Validity means the four axioms hold: balancing, vanishing on zero-linked
components, a single direction between component classes, and no directed
cycles among classes.  Enumeration couples the axioms with the per-vertex
degree condition of k-twisted canonical divisors and peels source classes,
which bounds every value without any user-supplied range.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

from .errors import InvalidInput, MalformedTwist
from .graphs import StableGraph, StarGraph

Witness = tuple


@dataclass(frozen=True)
class Twist:
    """Integer twist on a stable graph, stored on side 0 of each non-self
    edge (the side of the lower-indexed vertex); self-edges carry None."""

    graph: StableGraph
    values: tuple[Optional[int], ...]

    def side_value(self, e: int, side: int) -> int:
        v = self.values[e]
        if v is None:
            raise MalformedTwist(f"edge {e} is a self-edge and carries no twist")
        return v if side == 0 else -v

    def as_side_map(self) -> dict:
        out = {}
        for e, v in enumerate(self.values):
            if v is not None:
                out[(e, 0)] = v
                out[(e, 1)] = -v
        return out

    def serialize(self) -> dict:
        return {e: v for e, v in enumerate(self.values) if v is not None}


def twist_from_side_map(graph: StableGraph, side_map: Mapping[tuple[int, int], int]) -> Twist:
    """Build a Twist from a map (edge, side) -> value, checking the domain
    and the balancing axiom."""
    values: list[Optional[int]] = [None] * graph.num_edges
    for (e, side), val in side_map.items():
        if e < 0 or e >= graph.num_edges or side not in (0, 1):
            raise MalformedTwist(f"unknown side ({e}, {side})")
        if graph.is_self_edge(e):
            raise MalformedTwist(f"twist defined on self-edge {e}")
    for e in range(graph.num_edges):
        if graph.is_self_edge(e):
            continue
        v0 = side_map.get((e, 0))
        v1 = side_map.get((e, 1))
        if v0 is None and v1 is None:
            raise MalformedTwist(f"edge {e} missing from the twist domain")
        if v0 is not None and v1 is not None and v0 + v1 != 0:
            raise MalformedTwist(f"edge {e} violates balancing: {v0} + {v1} != 0")
        values[e] = v0 if v0 is not None else -v1
    return Twist(graph, tuple(values))


@dataclass(frozen=True)
class Verdict:
    valid: bool
    axiom: Optional[str] = None
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.valid


@dataclass(frozen=True)
class ComponentDigraph:
    """Vertex classes of the zero-twist subgraph with directed class edges."""

    classes: tuple[tuple[int, ...], ...]
    arrows: tuple[tuple[int, int], ...]  # (source class, target class)
    class_of: tuple[int, ...]


def _zero_classes(graph: StableGraph, twist: Twist):
    nv = graph.num_vertices
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e, (a, b) in enumerate(graph.edges):
        if a != b and twist.values[e] == 0:
            parent[find(a)] = find(b)
    reps = sorted({find(v) for v in range(nv)})
    index = {r: i for i, r in enumerate(reps)}
    class_of = tuple(index[find(v)] for v in range(nv))
    classes = tuple(tuple(v for v in range(nv) if class_of[v] == i)
                    for i in range(len(reps)))
    return classes, class_of


def validate_twist(graph: StableGraph, twist) -> Verdict:
    """Check the four twist axioms; returns the first violated axiom with a
    witness (an edge, an edge pair, or a directed class cycle)."""
    if isinstance(twist, Mapping):
        try:
            twist = twist_from_side_map(graph, twist)
        except MalformedTwist as exc:
            if "balancing" in str(exc):
                return Verdict(False, "balancing", (str(exc),))
            raise
    classes, class_of = _zero_classes(graph, twist)
    # vanishing: a nonzero twist inside one class
    for e, (a, b) in enumerate(graph.edges):
        if a != b and twist.values[e] != 0 and class_of[a] == class_of[b]:
            return Verdict(False, "vanishing", ("edge", e))
    # sign: both directions between one pair of classes
    direction: dict = {}
    for e, (a, b) in enumerate(graph.edges):
        if a == b or twist.values[e] == 0:
            continue
        ca, cb = class_of[a], class_of[b]
        src, dst = (ca, cb) if twist.values[e] > 0 else (cb, ca)
        prev = direction.get(frozenset((ca, cb)))
        if prev is not None and prev[:2] != (src, dst):
            return Verdict(False, "sign", ("edges", prev[2], e))
        direction[frozenset((ca, cb))] = (src, dst, e)
    # transitivity: no directed cycle among classes
    arrows = sorted({(src, dst) for src, dst, _ in direction.values()})
    cycle = _find_cycle(len(classes), arrows)
    if cycle is not None:
        return Verdict(False, "transitivity", ("cycle", tuple(cycle)))
    return Verdict(True)


def _find_cycle(k: int, arrows) -> Optional[list[int]]:
    succ: dict = {}
    for s, d in arrows:
        succ.setdefault(s, []).append(d)
    color = [0] * k
    stack: list[int] = []

    def dfs(u):
        color[u] = 1
        stack.append(u)
        for w in succ.get(u, ()):
            if color[w] == 1:
                return stack[stack.index(w):] + [w]
            if color[w] == 0:
                found = dfs(w)
                if found:
                    return found
        color[u] = 2
        stack.pop()
        return None

    for u in range(k):
        if color[u] == 0:
            found = dfs(u)
            if found:
                return found
    return None


def component_digraph(graph: StableGraph, twist) -> ComponentDigraph:
    """Directed graph on the zero-twist component classes."""
    if isinstance(twist, Mapping):
        twist = twist_from_side_map(graph, twist)
    classes, class_of = _zero_classes(graph, twist)
    for e, (a, b) in enumerate(graph.edges):
        if a != b and twist.values[e] != 0 and class_of[a] == class_of[b]:
            raise MalformedTwist(f"vanishing violated at edge {e}")
    arrows = set()
    for e, (a, b) in enumerate(graph.edges):
        if a == b or twist.values[e] == 0:
            continue
        if twist.values[e] > 0:
            arrows.add((class_of[a], class_of[b]))
        else:
            arrows.add((class_of[b], class_of[a]))
    return ComponentDigraph(classes, tuple(sorted(arrows)), class_of)


# ---------------------------------------------------------------------------
# enumeration


def degree_targets(graph: StableGraph, mu: Sequence[int], k: int = 1) -> list[int]:
    """Per-vertex value D_v the signed twists at v must sum to:
    sum of non-self side values at v = D_v, derived from the degree condition
    sum_{i->v} m_i = k(2g(v)-2) + sum_basic (I+k) + 2k * (self-edges at v)."""
    mu = tuple(mu)
    targets = []
    for v in range(graph.num_vertices):
        mv = sum(mu[m - 1] for m in graph.legs[v])
        b = sum((a == v) + (b_ == v) for a, b_ in graph.edges if a != b_)
        s = sum(1 for a, b_ in graph.edges if a == b_ == v)
        targets.append(mv - k * (2 * graph.genus[v] - 2) - k * b - 2 * k * s)
    return targets


def enumerate_twists_general(graph: StableGraph, mu: Sequence[int],
                             k: int = 1) -> tuple[Twist, ...]:
    """All twists satisfying the four axioms and the k-twisted degree
    condition at every vertex.  Enumeration peels source classes of the
    component digraph, so values are bounded by the degree budget."""
    mu = tuple(mu)
    if len(mu) != graph.n:
        raise InvalidInput("mu length does not match the number of legs")
    if sum(mu) != k * (2 * graph.g - 2):
        raise InvalidInput(f"sum(mu) != k(2g-2) for k={k}")
    targets = degree_targets(graph, mu, k)
    nonself = [e for e in range(graph.num_edges) if not graph.is_self_edge(e)]
    results = []
    for zero_set in _closed_zero_sets(graph, nonself):
        live = [e for e in nonself if e not in zero_set]
        classes, class_of = _partition_by(graph, zero_set)
        for assignment in _oriented_solutions(graph, live, classes, class_of, targets):
            values: list[Optional[int]] = [None] * graph.num_edges
            for e in nonself:
                values[e] = 0
            for e, val in assignment.items():
                values[e] = val
            results.append(Twist(graph, tuple(values)))
    results.sort(key=lambda t: t.values)
    return tuple(results)


def _partition_by(graph: StableGraph, zero_set):
    nv = graph.num_vertices
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in zero_set:
        a, b = graph.edges[e]
        parent[find(a)] = find(b)
    reps = sorted({find(v) for v in range(nv)})
    index = {r: i for i, r in enumerate(reps)}
    class_of = tuple(index[find(v)] for v in range(nv))
    classes = tuple(tuple(v for v in range(nv) if class_of[v] == i)
                    for i in range(len(reps)))
    return classes, class_of


def _closed_zero_sets(graph: StableGraph, nonself) -> Iterator[frozenset]:
    """Subsets Z of non-self edges that are unions of the edge sets internal
    to the components of (V, Z); these encode the vanishing axiom."""
    for bits in itertools.product((False, True), repeat=len(nonself)):
        zero_set = frozenset(e for e, bit in zip(nonself, bits) if bit)
        _, class_of = _partition_by(graph, zero_set)
        ok = all(
            class_of[graph.edges[e][0]] != class_of[graph.edges[e][1]]
            for e in nonself if e not in zero_set)
        if ok:
            yield zero_set


def _oriented_solutions(graph, live, classes, class_of, targets) -> Iterator[dict]:
    """Positive integer values on live edges, one consistent direction per
    class pair, acyclic, satisfying the per-vertex targets."""
    if not live:
        if all(t == 0 for t in targets):
            yield {}
        return
    pairs = sorted({frozenset((class_of[graph.edges[e][0]], class_of[graph.edges[e][1]]))
                    for e in live})
    for orient_bits in itertools.product((0, 1), repeat=len(pairs)):
        direction = {}
        for pair, bit in zip(pairs, orient_bits):
            a, b = sorted(pair)
            direction[pair] = (a, b) if bit == 0 else (b, a)
        arrows = sorted(set(direction.values()))
        if _find_cycle(len(classes), arrows) is not None:
            continue
        order = _topo_order(len(classes), arrows)
        # orientation of each live edge: positive on the source-class side
        yield from _assign_values(graph, live, classes, class_of, targets,
                                  direction, order)


def _topo_order(k, arrows):
    succ = {u: [] for u in range(k)}
    indeg = [0] * k
    for s, d in arrows:
        succ[s].append(d)
        indeg[d] += 1
    queue = sorted(u for u in range(k) if indeg[u] == 0)
    order = []
    while queue:
        u = queue.pop(0)
        order.append(u)
        for w in succ[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
        queue.sort()
    return order


def _assign_values(graph, live, classes, class_of, targets, direction, order):
    rank = {c: i for i, c in enumerate(order)}

    def edge_dir(e):
        a, b = graph.edges[e]
        ca, cb = class_of[a], class_of[b]
        src, _ = direction[frozenset((ca, cb))]
        return (a, b) if ca == src else (b, a)

    # process vertices class by class in topological order; at each vertex the
    # outgoing values are a composition of the residual demand
    vertex_seq = [v for c in order for v in classes[c]]
    out_edges = {v: [] for v in range(graph.num_vertices)}
    in_edges = {v: [] for v in range(graph.num_vertices)}
    for e in live:
        src, dst = edge_dir(e)
        out_edges[src].append(e)
        in_edges[dst].append(e)

    def rec(i, values):
        if i == len(vertex_seq):
            yield dict(values)
            return
        v = vertex_seq[i]
        inflow = sum(values[e] for e in in_edges[v])
        need = targets[v] + inflow
        outs = out_edges[v]
        if not outs:
            if need == 0:
                yield from rec(i + 1, values)
            return
        for comp in _compositions(need, len(outs)):
            for e, val in zip(outs, comp):
                values[e] = val
            yield from rec(i + 1, values)
        for e in outs:
            values.pop(e, None)

    # in-values of a vertex are set before its class is reached: guaranteed
    # because every in-edge comes from a class earlier in the topo order
    assert all(rank[class_of[edge_dir(e)[0]]] < rank[class_of[edge_dir(e)[1]]]
               for e in live)

    def signed(values):
        # store side-0 value: positive when side 0 is the source side
        out = {}
        for e in live:
            src, _ = edge_dir(e)
            a, _b = graph.edges[e]
            out[e] = values[e] if src == a else -values[e]
        return out

    for values in rec(0, {}):
        yield signed(values)


def _compositions(total, parts):
    """Compositions of total into `parts` integers, each >= 1."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if total < parts:
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# star twists


def enumerate_star_twists(star: StarGraph, mu: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    """All strictly positive edge twists of a simple star graph: per edge a
    value I(e) >= 1 oriented out of the center, meeting the center condition
    2g0 - 2 + sum(I+1) = sum mu[center] and its outlying counterparts."""
    graph = star.graph
    mu = tuple(mu)
    if not graph.edges:
        g0 = graph.genus[0]
        total = sum(star.mu_at(mu, 0))
        return ((),) if total == 2 * g0 - 2 else ()
    per_vertex_targets = []
    for j in star.outlying:
        mj = sum(1 for a, b in graph.edges if b == j)
        t = 2 * graph.genus[j] - 2 + mj - sum(star.mu_at(mu, j))
        per_vertex_targets.append((j, mj, t))
    center_total = sum(star.mu_at(mu, 0)) + 2 - 2 * graph.genus[0] - graph.num_edges
    if center_total != sum(t for _, _, t in per_vertex_targets):
        return ()
    options = []
    for j, mj, t in per_vertex_targets:
        comps = list(_compositions(t, mj))
        if not comps:
            return ()
        options.append((j, comps))
    out = []
    for chosen in itertools.product(*(comps for _, comps in options)):
        values = [0] * graph.num_edges
        for (j, _), comp in zip(options, chosen):
            ejs = [e for e, (a, b) in enumerate(graph.edges) if b == j]
            for e, val in zip(ejs, comp):
                values[e] = val
        out.append(tuple(values))
    out.sort()
    return tuple(out)
