"""Stable dual graphs of pointed nodal curves.

A graph is a tuple of vertex genera, a tuple of leg sets (markings per
vertex), and a tuple of edges, each edge an ordered pair (a, b) of vertex
indices with a <= b.  The two half-edges of edge e are the *sides* (e, 0) at
vertex a and (e, 1) at vertex b; for a self-edge both sides sit at the same
vertex but stay distinguishable, which matters for psi decorations and
automorphisms.

Graphs are immutable and interned, so equality is identity.  This module owns
canonical labeling (with decoration transport), automorphism enumeration,
edge contraction, and exhaustive enumeration of isomorphism classes.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import factorial
from typing import Iterator, Optional, Sequence

from .errors import InvalidInput

Vmap = tuple  # old vertex index -> new vertex index
Emap = tuple  # old edge index -> (new edge index, flipped)


class StableGraph:
    """Immutable stable graph.  Build through :func:`make_graph` only."""

    __slots__ = ("genus", "legs", "edges", "n", "_hash", "_leg_home")

    def __init__(self, genus, legs, edges):
        self.genus = genus
        self.legs = legs
        self.edges = edges
        self.n = sum(len(l) for l in legs)
        self._hash = hash((genus, legs, edges))
        self._leg_home = {m: v for v, ms in enumerate(legs) for m in ms}

    @property
    def key(self):
        return (self.genus, self.legs, self.edges)

    @property
    def num_vertices(self) -> int:
        return len(self.genus)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def h1(self) -> int:
        return len(self.edges) - len(self.genus) + 1

    @property
    def g(self) -> int:
        return sum(self.genus) + self.h1

    def leg_home(self, marking: int) -> int:
        return self._leg_home[marking]

    def side_vertex(self, e: int, side: int) -> int:
        return self.edges[e][side]

    def is_self_edge(self, e: int) -> bool:
        a, b = self.edges[e]
        return a == b

    def valence(self, v: int) -> int:
        """n(v): incident half-edges plus legs."""
        return len(self.legs[v]) + self.edge_degree(v)

    def edge_degree(self, v: int) -> int:
        d = 0
        for a, b in self.edges:
            d += (a == v) + (b == v)
        return d

    def sides_at(self, v: int):
        """Edge sides at v, in (edge index, side) order."""
        out = []
        for e, (a, b) in enumerate(self.edges):
            if a == v:
                out.append((e, 0))
            if b == v:
                out.append((e, 1))
        return out

    def slots_at(self, v: int):
        """Slot ordering of the vertex moduli space: legs then edge sides."""
        return [("leg", m) for m in self.legs[v]] + [("side", s) for s in self.sides_at(v)]

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, StableGraph) and self.key == other.key)

    def __repr__(self):
        return f"StableGraph(genus={self.genus}, legs={self.legs}, edges={self.edges})"


_registry: dict = {}


def make_graph(genus: Sequence[int], legs: Sequence[Sequence[int]],
               edges: Sequence[tuple[int, int]], check: bool = True) -> StableGraph:
    """Intern a stable graph; validates the invariants unless check=False."""
    genus = tuple(int(x) for x in genus)
    legs = tuple(tuple(sorted(l)) for l in legs)
    edges = tuple((int(a), int(b)) for a, b in edges)
    key = (genus, legs, edges)
    got = _registry.get(key)
    if got is not None:
        return got
    if check:
        _validate(genus, legs, edges)
    graph = StableGraph(genus, legs, edges)
    _registry[key] = graph
    return graph


def _validate(genus, legs, edges):
    nv = len(genus)
    if nv == 0 or len(legs) != nv:
        raise InvalidInput("vertex data mismatch")
    if any(g < 0 for g in genus):
        raise InvalidInput("negative genus")
    markings = sorted(m for l in legs for m in l)
    if markings != list(range(1, len(markings) + 1)):
        raise InvalidInput(f"legs must be labeled 1..n, got {markings}")
    for a, b in edges:
        if not (0 <= a <= b < nv):
            raise InvalidInput(f"bad edge ({a},{b})")
    # connectivity
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    if len({find(v) for v in range(nv)}) != 1:
        raise InvalidInput("graph not connected")
    # stability
    graph_tmp = StableGraph(genus, legs, edges)
    for v in range(nv):
        if 2 * genus[v] - 2 + graph_tmp.valence(v) <= 0:
            raise InvalidInput(f"unstable vertex {v}")


# ---------------------------------------------------------------------------
# canonical labeling


def _refined_colors(genus, legs, edges, kappa, psi_side):
    nv = len(genus)
    colors = [(genus[v], legs[v], kappa[v] if kappa else ()) for v in range(nv)]
    for _ in range(nv):
        fresh = []
        for v in range(nv):
            inc = []
            for e, (a, b) in enumerate(edges):
                p0 = psi_side.get((e, 0), 0) if psi_side else 0
                p1 = psi_side.get((e, 1), 0) if psi_side else 0
                if a == b == v:
                    inc.append((0, (), min(p0, p1), max(p0, p1)))
                elif a == v:
                    inc.append((1, colors[b], p0, p1))
                elif b == v:
                    inc.append((1, colors[a], p1, p0))
            fresh.append((colors[v], tuple(sorted(inc))))
        if fresh == colors:
            break
        colors = fresh
    return colors


def canonicalize(genus, legs, edges, kappa=None, psi_leg=None, psi_side=None):
    """Canonical form of a (possibly decorated) graph, with transport maps.

    kappa: per-vertex tuple of (index, exponent) pairs, sorted.
    psi_leg: dict marking -> exponent.
    psi_side: dict (edge, side) -> exponent.

    Returns (graph, kappa, psi_leg_t, psi_side_t, vmap, emap) where vmap maps
    old vertex indices to canonical ones and emap maps old edge indices to
    (canonical index, flipped).
    """
    genus = tuple(genus)
    legs = tuple(tuple(sorted(l)) for l in legs)
    edges = tuple(edges)
    kappa = tuple(kappa) if kappa else tuple(() for _ in genus)
    psi_leg = dict(psi_leg) if psi_leg else {}
    psi_side = dict(psi_side) if psi_side else {}
    nv = len(genus)

    colors = _refined_colors(genus, legs, edges, kappa, psi_side)
    order = sorted(range(nv), key=lambda v: (colors[v], v))
    classes = [list(grp) for _, grp in itertools.groupby(order, key=lambda v: colors[v])]

    best = None
    for perm_parts in itertools.product(*(itertools.permutations(c) for c in classes)):
        seq = [v for part in perm_parts for v in part]  # new index -> old vertex
        vmap = [0] * nv
        for new, old in enumerate(seq):
            vmap[old] = new
        recs = []
        for e, (a, b) in enumerate(edges):
            na, nb = vmap[a], vmap[b]
            p0 = psi_side.get((e, 0), 0)
            p1 = psi_side.get((e, 1), 0)
            if na < nb:
                recs.append((na, nb, p0, p1, e, False))
            elif na > nb:
                recs.append((nb, na, p1, p0, e, True))
            else:
                flip = p0 > p1
                lo, hi = sorted((p0, p1))
                recs.append((na, nb, lo, hi, e, flip))
        recs.sort(key=lambda r: r[:4])
        cand = (
            tuple(genus[v] for v in seq),
            tuple(legs[v] for v in seq),
            tuple(kappa[v] for v in seq),
            tuple(r[:4] for r in recs),
        )
        if best is None or cand < best[0]:
            best = (cand, tuple(vmap), recs)

    cand, vmap, recs = best
    new_edges = tuple((r[0], r[1]) for r in recs)
    new_psi_side = {}
    emap = [None] * len(edges)
    for idx, r in enumerate(recs):
        _, _, plo, phi, e, flip = r
        emap[e] = (idx, flip)
        if plo:
            new_psi_side[(idx, 0)] = plo
        if phi:
            new_psi_side[(idx, 1)] = phi
    graph = make_graph(cand[0], cand[1], new_edges, check=False)
    return graph, cand[2], dict(psi_leg), new_psi_side, vmap, tuple(emap)


def canonical_graph(genus, legs, edges):
    """Canonical undecorated graph plus transport maps."""
    graph, _, _, _, vmap, emap = canonicalize(genus, legs, edges)
    return graph, vmap, emap


def canonical_form(graph: StableGraph):
    """Canonical representative and the relabeling (vmap, emap) onto it."""
    canon, vmap, emap = canonical_graph(graph.genus, graph.legs, graph.edges)
    return canon, (vmap, emap)


# ---------------------------------------------------------------------------
# automorphisms


def _pair_multiplicities(graph: StableGraph):
    mult: dict = {}
    for a, b in graph.edges:
        mult[(a, b)] = mult.get((a, b), 0) + 1
    return mult


@lru_cache(maxsize=None)
def aut_order(graph: StableGraph) -> int:
    """Order of the automorphism group (vertex and half-edge permutations
    preserving genus, incidence, involution, and fixing every leg)."""
    mult = _pair_multiplicities(graph)
    base = 1
    for (a, b), m in mult.items():
        if a == b:
            base *= factorial(m) * 2 ** m
        else:
            base *= factorial(m)
    return base * sum(1 for _ in _valid_vertex_perms(graph))


def _valid_vertex_perms(graph: StableGraph) -> Iterator[tuple[int, ...]]:
    nv = graph.num_vertices
    colors = [(graph.genus[v], graph.legs[v]) for v in range(nv)]
    order = sorted(range(nv), key=lambda v: (colors[v], v))
    classes = [list(grp) for _, grp in itertools.groupby(order, key=lambda v: colors[v])]
    mult = _pair_multiplicities(graph)

    def m_of(u, w):
        return mult.get((min(u, w), max(u, w)), 0)

    for perm_parts in itertools.product(*(itertools.permutations(c) for c in classes)):
        vmap = [0] * nv
        for cls, part in zip(classes, perm_parts):
            for src, dst in zip(cls, part):
                vmap[src] = dst
        if any(graph.legs[v] and vmap[v] != v for v in range(nv)):
            continue
        ok = all(m_of(u, w) == m_of(vmap[u], vmap[w])
                 for u in range(nv) for w in range(u, nv))
        if ok:
            yield tuple(vmap)


@lru_cache(maxsize=None)
def automorphisms(graph: StableGraph) -> tuple:
    """Explicit automorphisms as (vmap, emap) pairs.

    emap[e] = (image edge index, flipped); flipped means side s of e maps to
    side 1-s of the image.
    """
    groups: dict = {}
    for e, (a, b) in enumerate(graph.edges):
        groups.setdefault((a, b), []).append(e)
    out = []
    for vmap in _valid_vertex_perms(graph):
        per_group = []
        for (a, b), es in groups.items():
            na, nb = sorted((vmap[a], vmap[b]))
            targets = groups[(na, nb)]
            choices = []
            if a == b:
                for tgt in itertools.permutations(targets):
                    for flips in itertools.product((False, True), repeat=len(es)):
                        choices.append(list(zip(es, tgt, flips)))
            else:
                flip = vmap[a] > vmap[b]
                for tgt in itertools.permutations(targets):
                    choices.append([(e, t, flip) for e, t in zip(es, tgt)])
            per_group.append(choices)
        for combo in itertools.product(*per_group):
            emap = [None] * graph.num_edges
            for entries in combo:
                for e, t, flip in entries:
                    emap[e] = (t, flip)
            out.append((vmap, tuple(emap)))
    return tuple(out)


# ---------------------------------------------------------------------------
# contraction


def contract(graph: StableGraph, keep: Sequence[int]):
    """Contract all edges outside `keep`.

    Returns (contracted graph, vmap, emap) where emap maps each kept edge
    index to (new index, flipped).  Contracting a connected subgraph with v
    vertices and e edges adds e - v + 1 to the merged genus.
    """
    keep = set(keep)
    nv = graph.num_vertices
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    contracted = [e for e in range(graph.num_edges) if e not in keep]
    for e in contracted:
        a, b = graph.edges[e]
        parent[find(a)] = find(b)
    reps = sorted({find(v) for v in range(nv)})
    new_index = {r: i for i, r in enumerate(reps)}
    vmap = tuple(new_index[find(v)] for v in range(nv))

    k = len(reps)
    genus = [0] * k
    internal_edges = [0] * k
    members = [0] * k
    for v in range(nv):
        genus[vmap[v]] += graph.genus[v]
        members[vmap[v]] += 1
    for e in contracted:
        internal_edges[vmap[graph.edges[e][0]]] += 1
    for i in range(k):
        genus[i] += internal_edges[i] - (members[i] - 1)
    legs = [[] for _ in range(k)]
    for v, ms in enumerate(graph.legs):
        legs[vmap[v]].extend(ms)
    new_edges = []
    emap = {}
    for idx, e in enumerate(sorted(keep)):
        a, b = graph.edges[e]
        na, nb = vmap[a], vmap[b]
        flip = na > nb
        new_edges.append((min(na, nb), max(na, nb)))
        emap[e] = (idx, flip)
    g = make_graph(genus, legs, new_edges, check=False)
    return g, vmap, emap


# ---------------------------------------------------------------------------
# enumeration


def _edge_configs(nv, total, min_deg, max_total):
    """All multiplicity assignments on vertex pairs (u <= v) with given total
    edge count, meeting per-vertex minimum degrees and connectivity."""
    positions = [(u, v) for u in range(nv) for v in range(u, nv)]

    def degrees(config):
        deg = [0] * nv
        for (u, v), m in zip(positions, config):
            deg[u] += m
            deg[v] += m
        return deg

    def rec(i, remaining, config):
        if i == len(positions):
            if remaining:
                return
            deg = degrees(config)
            if any(d < md for d, md in zip(deg, min_deg)):
                return
            parent = list(range(nv))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for (u, v), m in zip(positions, config):
                if m and u != v:
                    parent[find(u)] = find(v)
            if len({find(v) for v in range(nv)}) == 1:
                yield list(zip(positions, config))
            return
        for m in range(remaining + 1):
            yield from rec(i + 1, remaining - m, config + (m,))

    yield from rec(0, total, ())


@lru_cache(maxsize=None)
def enumerate_stable_graphs(g: int, n: int) -> tuple[StableGraph, ...]:
    """All isomorphism classes of stable graphs of genus g with n legs,
    canonical representatives sorted by canonical key."""
    if g < 0 or n < 0 or 2 * g - 2 + n <= 0:
        raise InvalidInput(f"unstable pair (g, n) = ({g}, {n})")
    max_edges = 3 * g - 3 + n
    markings = list(range(1, n + 1))
    seen = {}
    for nv in range(1, 2 * g - 2 + n + 1):
        for genus in itertools.product(range(g + 1), repeat=nv):
            h1 = g - sum(genus)
            if h1 < 0:
                continue
            ne = h1 + nv - 1
            if ne > max_edges or ne < 0:
                continue
            for split in itertools.product(range(nv), repeat=n):
                legs = [tuple(m for m, v in zip(markings, split) if v == u) for u in range(nv)]
                vdata = [(genus[v], legs[v]) for v in range(nv)]
                if any(vdata[i] < vdata[i + 1] for i in range(nv - 1)):
                    continue  # only generate sorted vertex data
                min_deg = [max(0, 3 - 2 * genus[v] - len(legs[v])) for v in range(nv)]
                if sum(min_deg) > 2 * ne:
                    continue
                for config in _edge_configs(nv, ne, min_deg, max_edges):
                    edges = []
                    for (u, v), m in config:
                        edges.extend([(u, v)] * m)
                    if any(2 * genus[v] - 2 + len(legs[v]) +
                           sum((a == v) + (b == v) for a, b in edges) <= 0
                           for v in range(nv)):
                        continue
                    canon, _, _ = canonical_graph(genus, legs, edges)
                    seen[canon.key] = canon
    return tuple(seen[k] for k in sorted(seen))


# ---------------------------------------------------------------------------
# simple star graphs


class StarGraph:
    """A stable graph with a distinguished center (vertex 0), no self-edges,
    every edge joining the center to an outlying vertex, and every negative
    marking on the center."""

    __slots__ = ("graph",)

    def __init__(self, graph: StableGraph):
        self.graph = graph

    @property
    def center(self) -> int:
        return 0

    @property
    def outlying(self):
        return range(1, self.graph.num_vertices)

    def mu_at(self, mu: Sequence[int], v: int) -> tuple[int, ...]:
        return tuple(mu[m - 1] for m in self.graph.legs[v])

    def __eq__(self, other):
        return isinstance(other, StarGraph) and self.graph is other.graph

    def __hash__(self):
        return hash(("star", self.graph))

    def __repr__(self):
        return f"StarGraph({self.graph!r})"


def _check_star(graph: StableGraph, mu: Sequence[int]) -> None:
    for e, (a, b) in enumerate(graph.edges):
        if a == b:
            raise InvalidInput("star graph has a self-edge")
        if a != 0:
            raise InvalidInput("star edge must touch the center")
    for m, part in enumerate(mu, start=1):
        if part < 0 and graph.leg_home(m) != 0:
            raise InvalidInput("negative part away from the center")


def make_star(genus, legs, edges, mu) -> StarGraph:
    graph = make_graph(genus, legs, edges)
    _check_star(graph, mu)
    return StarGraph(graph)


def _partitions_of_set(items: list, max_blocks: Optional[int] = None):
    """Set partitions of items (possibly into zero blocks when empty)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions_of_set(rest, max_blocks):
        if max_blocks is None or len(part) < max_blocks:
            yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def enumerate_simple_star_graphs(g: int, mu: Sequence[int], *,
                                 include_trivial: Optional[bool] = None,
                                 contributing_only: bool = False) -> tuple[StarGraph, ...]:
    """Isomorphism classes of simple star graphs for (g, mu).

    The trivial star graph (center only) is admitted only in the strictly
    meromorphic case; requesting it for holomorphic mu is an error.  With
    contributing_only=True, graphs with an empty twist set or a genus-0
    outlying vertex are dropped.
    """
    from .twists import enumerate_star_twists  # local import, no cycle at module load

    mu = tuple(mu)
    n = len(mu)
    if sum(mu) != 2 * g - 2:
        raise InvalidInput(f"sum(mu) = {sum(mu)} != 2g-2 = {2 * g - 2}")
    strictly_meromorphic = any(m < 0 for m in mu)
    if include_trivial is None:
        include_trivial = strictly_meromorphic
    if include_trivial and not strictly_meromorphic:
        raise InvalidInput("trivial star graph only exists for strictly meromorphic mu")

    negatives = [m for m in range(1, n + 1) if mu[m - 1] < 0]
    rest = [m for m in range(1, n + 1) if mu[m - 1] >= 0]
    out = []
    seen = set()
    for extra in _powerset(rest):
        center_legs = tuple(sorted(negatives + list(extra)))
        floating = [m for m in rest if m not in extra]
        # distribute remaining markings onto outlying vertices (blocks), plus
        # any number of unmarked outlying vertices
        for blocks in _partitions_of_set(floating):
            for n_extra_out in range(0, g + 1):
                k = len(blocks) + n_extra_out
                if k == 0 and not include_trivial:
                    continue
                configs = [((), ())] if k == 0 else _star_bodies(
                    blocks + [[] for _ in range(n_extra_out)], g)
                for g0 in range(0, g + 1):
                    for out_data, mults in configs:
                        h1 = sum(m - 1 for m in mults)
                        if g0 + sum(gv for gv, _ in out_data) + h1 != g:
                            continue
                        genus = [g0] + [gv for gv, _ in out_data]
                        legs = [center_legs] + [tuple(sorted(ms)) for _, ms in out_data]
                        edges = []
                        for j, m in enumerate(mults, start=1):
                            edges.extend([(0, j)] * m)
                        ne = len(edges)
                        if 2 * g0 - 2 + len(center_legs) + ne <= 0:
                            continue
                        if any(2 * gv - 2 + len(ms) + mult <= 0
                               for (gv, ms), mult in zip(out_data, mults)):
                            continue
                        dedup = (g0, center_legs,
                                 tuple(sorted((gv, tuple(sorted(ms)), mult)
                                              for (gv, ms), mult in zip(out_data, mults))))
                        if dedup in seen:
                            continue
                        seen.add(dedup)
                        star = make_star(genus, legs, edges, mu)
                        out.append(star)
    if contributing_only:
        filtered = []
        for s in out:
            if any(s.graph.genus[v] == 0 for v in s.outlying):
                continue
            if not enumerate_star_twists(s, mu):
                continue
            filtered.append(s)
        out = filtered
    out.sort(key=lambda s: s.graph.key)
    return tuple(out)


def _powerset(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def _star_bodies(blocks, budget):
    """All (outlying data, edge multiplicities) for given marking blocks:
    per block a genus 0..budget and a multiplicity >= 1."""
    k = len(blocks)
    bodies = []
    for genera in itertools.product(range(budget + 1), repeat=k):
        if sum(genera) > budget:
            continue
        room = budget - sum(genera)
        for mults in itertools.product(range(1, room + 2), repeat=k):
            if sum(m - 1 for m in mults) > room:
                continue
            bodies.append((tuple((gv, tuple(ms)) for gv, ms in zip(genera, blocks)),
                           tuple(mults)))
    # dedupe bodies that only permute identical outlying vertices
    seen = set()
    out = []
    for data, mults in bodies:
        key = tuple(sorted((d, m) for d, m in zip(data, mults)))
        if key in seen:
            continue
        seen.add(key)
        out.append((data, mults))
    return out
