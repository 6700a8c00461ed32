"""The additive strata algebra of a moduli space of stable curves.

A term c * (Gamma, gamma) denotes c times the raw pushforward of the
decorated class gamma along the gluing map of the stable graph Gamma; no
automorphism factors are folded in, callers write their own prefactors.
Products of two pushforwards expand over common degenerations with labelled
contraction structures and the excess factor -(psi' + psi'') on shared
edges, weighted by 1/|Aut| of the degeneration.  Kappa classes restrict
additively to boundary strata, psi classes transport slot by slot.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Optional, Sequence

from .errors import AmbientMismatch, DegreeMismatch, InvalidInput
from .graphs import (StableGraph, aut_order, automorphisms, canonicalize,
                     contract, enumerate_stable_graphs, make_graph)

_ONE = Fraction(1)


class DecoratedStratum:
    """Canonical decorated boundary stratum [Gamma, gamma]."""

    __slots__ = ("graph", "kappa", "psi_leg", "psi_edge", "degree", "_hash")

    def __init__(self, graph, kappa, psi_leg, psi_edge):
        self.graph = graph
        self.kappa = kappa          # per vertex: tuple of (index, exponent)
        self.psi_leg = dict(psi_leg)
        self.psi_edge = dict(psi_edge)
        self.degree = (graph.num_edges
                       + sum(a * x for vk in kappa for a, x in vk)
                       + sum(self.psi_leg.values()) + sum(self.psi_edge.values()))
        self._hash = hash((graph, kappa, tuple(sorted(self.psi_leg.items())),
                           tuple(sorted(self.psi_edge.items()))))

    @property
    def key(self):
        return (self.graph.key, self.kappa, tuple(sorted(self.psi_leg.items())),
                tuple(sorted(self.psi_edge.items())))

    def sort_key(self):
        return self.key

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (isinstance(other, DecoratedStratum) and self.graph is other.graph
                and self.kappa == other.kappa and self.psi_leg == other.psi_leg
                and self.psi_edge == other.psi_edge)

    def __repr__(self):
        return (f"DecoratedStratum({self.graph!r}, kappa={self.kappa}, "
                f"psi_leg={self.psi_leg}, psi_edge={self.psi_edge})")


def canonical_stratum(genus, legs, edges, kappa=None, psi_leg=None,
                      psi_edge=None) -> Optional[DecoratedStratum]:
    """Canonicalize a decorated stratum; None when it vanishes trivially
    (a vertex decoration exceeding the vertex dimension)."""
    genus = tuple(genus)
    legs = tuple(tuple(sorted(l)) for l in legs)
    edges = tuple(edges)
    nv = len(genus)
    kappa_t = []
    for v in range(nv):
        vk = (kappa or {}).get(v, {}) if isinstance(kappa, Mapping) else \
            (kappa[v] if kappa else {})
        if isinstance(vk, Mapping):
            vk = tuple(sorted((a, x) for a, x in vk.items() if x))
        kappa_t.append(vk)
    psi_leg = {m: y for m, y in (psi_leg or {}).items() if y}
    psi_edge = {s: y for s, y in (psi_edge or {}).items() if y}

    # per-vertex dimension bound
    leg_home = {m: v for v, ms in enumerate(legs) for m in ms}
    load = [sum(a * x for a, x in kappa_t[v]) for v in range(nv)]
    valence = [len(legs[v]) for v in range(nv)]
    for m, y in psi_leg.items():
        load[leg_home[m]] += y
    for e, (a, b) in enumerate(edges):
        valence[a] += 1
        valence[b] += 1
        load[a] += psi_edge.get((e, 0), 0)
        load[b] += psi_edge.get((e, 1), 0)
    for v in range(nv):
        if load[v] > 3 * genus[v] - 3 + valence[v]:
            return None

    graph, kappa_c, psi_leg_c, psi_edge_c, _, _ = canonicalize(
        genus, legs, edges, kappa_t, psi_leg, psi_edge)
    return DecoratedStratum(graph, kappa_c, psi_leg_c, psi_edge_c)


class TautClass:
    """Finite rational combination of canonical decorated strata."""

    __slots__ = ("ambient", "terms")

    def __init__(self, ambient: tuple[int, int], terms=None):
        self.ambient = ambient
        self.terms: dict[DecoratedStratum, Fraction] = {}
        if terms:
            for stratum, coeff in (terms.items() if isinstance(terms, Mapping) else terms):
                self._add(stratum, coeff)

    def _add(self, stratum: DecoratedStratum, coeff: Fraction):
        if stratum is None or coeff == 0:
            return
        new = self.terms.get(stratum, 0) + coeff
        if new:
            self.terms[stratum] = new
        else:
            self.terms.pop(stratum, None)

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {t.degree for t in self.terms}

    def degree_part(self, d: int) -> "TautClass":
        return TautClass(self.ambient,
                         {t: c for t, c in self.terms.items() if t.degree == d})

    def scale(self, factor) -> "TautClass":
        factor = Fraction(factor)
        if factor == 0:
            return TautClass(self.ambient)
        return TautClass(self.ambient,
                         {t: c * factor for t, c in self.terms.items()})

    def __add__(self, other: "TautClass") -> "TautClass":
        if self.ambient != other.ambient:
            raise AmbientMismatch(f"{self.ambient} vs {other.ambient}")
        out = TautClass(self.ambient, dict(self.terms))
        for t, c in other.terms.items():
            out._add(t, c)
        return out

    def __sub__(self, other: "TautClass") -> "TautClass":
        return self + other.scale(-1)

    def __mul__(self, other):
        if isinstance(other, TautClass):
            return multiply(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, TautClass) and self.ambient == other.ambient
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.ambient, tuple(sorted(
            (t.key, c) for t, c in self.terms.items()))))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda tc: tc[0].sort_key())

    def __repr__(self):
        if self.is_zero():
            return f"TautClass({self.ambient}, 0)"
        bits = [f"{c}*{t!r}" for t, c in self.sorted_terms()]
        return f"TautClass({self.ambient}, " + " + ".join(bits) + ")"


def zero_class(g: int, n: int) -> TautClass:
    return TautClass((g, n))


def unit_class(g: int, n: int) -> TautClass:
    graph = _trivial_graph(g, n)
    return TautClass((g, n), {DecoratedStratum(graph, ((),), {}, {}): _ONE})


def _trivial_graph(g: int, n: int) -> StableGraph:
    return make_graph((g,), (tuple(range(1, n + 1)),), ())


def psi_class(g: int, n: int, marking: int, power: int = 1) -> TautClass:
    s = canonical_stratum((g,), (range(1, n + 1),), (), psi_leg={marking: power})
    return TautClass((g, n), {s: _ONE} if s else None)


def kappa_class(g: int, n: int, a: int, power: int = 1) -> TautClass:
    s = canonical_stratum((g,), (range(1, n + 1),), (), kappa=[{a: power}])
    return TautClass((g, n), {s: _ONE} if s else None)


def graph_class(graph: StableGraph) -> TautClass:
    """Raw pushforward of 1 along the gluing map of the graph."""
    s = canonical_stratum(graph.genus, graph.legs, graph.edges)
    return TautClass((graph.g, graph.n), {s: _ONE})


# ---------------------------------------------------------------------------
# common degenerations and the product


@lru_cache(maxsize=None)
def _contraction_index(graph: StableGraph):
    """For each subset of kept edges: the canonical contraction and maps.
    Grouped by the contracted canonical graph."""
    out: dict = {}
    ne = graph.num_edges
    for keep_mask in range(1 << ne):
        keep = [e for e in range(ne) if keep_mask >> e & 1]
        raw, vmap_r, emap_r = contract(graph, keep)
        canon, _, _, _, vmap_c, emap_c = canonicalize(raw.genus, raw.legs, raw.edges)
        vmap = tuple(vmap_c[vmap_r[v]] for v in range(graph.num_vertices))
        emap = {}
        for e in keep:
            mid, flip1 = emap_r[e]
            fin, flip2 = emap_c[mid]
            emap[e] = (fin, flip1 ^ flip2)
        out.setdefault(canon, []).append((frozenset(keep), vmap, emap))
    return out


@lru_cache(maxsize=None)
def _structures(gamma: StableGraph, target: StableGraph):
    """All contraction structures from gamma onto target: for each kept edge
    subset and each automorphism of target, the slot maps pulling target
    decorations back to gamma.

    Each record: (kept frozenset, preimage: tuple of tuples of gamma
    vertices per target vertex, side_map: dict target (e, s) -> gamma (e, s)).
    """
    table = _contraction_index(gamma).get(target)
    if not table:
        return ()
    out = []
    for keep, vmap, emap in table:
        for avmap, aemap in automorphisms(target):
            pre: list[list[int]] = [[] for _ in range(target.num_vertices)]
            for v in range(gamma.num_vertices):
                pre[avmap[vmap[v]]].append(v)
            side_map = {}
            for e in keep:
                mid, flip1 = emap[e]
                fin, flip2 = aemap[mid]
                flip = flip1 ^ flip2
                side_map[(fin, 0)] = (e, 1 if flip else 0)
                side_map[(fin, 1)] = (e, 0 if flip else 1)
            out.append((keep, tuple(tuple(p) for p in pre), side_map))
    return tuple(out)


def _distribute_kappa(stratum: DecoratedStratum, preimage):
    """Expand the pullback of the kappa decoration over merged vertices:
    (sum_v kappa_a[v])^x multinomially.  Yields (vertex->{a: x}, coeff)."""
    items = []
    for a_vertex, vk in enumerate(stratum.kappa):
        for a, x in vk:
            items.append((tuple(preimage[a_vertex]), a, x))

    def rec(i):
        if i == len(items):
            yield {}, _ONE
            return
        verts, a, x = items[i]
        for tail, coeff in rec(i + 1):
            for split in _compositions_z(x, len(verts)):
                mult = factorial(x)
                for c in split:
                    mult //= factorial(c)
                d = {v: dict(m) for v, m in tail.items()}
                for v, c in zip(verts, split):
                    if c:
                        d.setdefault(v, {})[a] = d.get(v, {}).get(a, 0) + c
                yield d, coeff * mult

    yield from rec(0)


def _compositions_z(total, parts):
    """Compositions of total into `parts` nonnegative integers."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions_z(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _term_pair_product(ta: DecoratedStratum, tb: DecoratedStratum):
    """Product of two decorated strata as a tuple of (stratum, coeff)."""
    ga, na = ta.graph.g, ta.graph.n
    acc: dict[DecoratedStratum, Fraction] = {}
    max_edges = min(ta.graph.num_edges + tb.graph.num_edges, 3 * ga - 3 + na)
    for gamma in enumerate_stable_graphs(ga, na):
        ne = gamma.num_edges
        if ne < max(ta.graph.num_edges, tb.graph.num_edges) or ne > max_edges:
            continue
        sa_list = _structures(gamma, ta.graph)
        if not sa_list:
            continue
        sb_list = _structures(gamma, tb.graph)
        if not sb_list:
            continue
        inv_aut = Fraction(1, aut_order(gamma))
        all_edges = frozenset(range(ne))
        for keep_a, pre_a, smap_a in sa_list:
            for keep_b, pre_b, smap_b in sb_list:
                if keep_a | keep_b != all_edges:
                    continue
                common = keep_a & keep_b
                psi_leg = dict(ta.psi_leg)
                for m, y in tb.psi_leg.items():
                    psi_leg[m] = psi_leg.get(m, 0) + y
                psi_edge_base: dict = {}
                for src, sm in ((ta, smap_a), (tb, smap_b)):
                    for side, y in src.psi_edge.items():
                        tgt = sm[side]
                        psi_edge_base[tgt] = psi_edge_base.get(tgt, 0) + y
                for ka, ca in _distribute_kappa(ta, pre_a):
                    for kb, cb in _distribute_kappa(tb, pre_b):
                        kmap = {v: dict(m) for v, m in ka.items()}
                        for v, m in kb.items():
                            for a, x in m.items():
                                kmap.setdefault(v, {})[a] = kmap.get(v, {}).get(a, 0) + x
                        base_coeff = inv_aut * ca * cb
                        for sides in itertools.product((0, 1), repeat=len(common)):
                            psi_edge = dict(psi_edge_base)
                            for e, s in zip(sorted(common), sides):
                                psi_edge[(e, s)] = psi_edge.get((e, s), 0) + 1
                            coeff = base_coeff * (-1) ** len(common)
                            s = canonical_stratum(gamma.genus, gamma.legs, gamma.edges,
                                                  kappa=kmap, psi_leg=psi_leg,
                                                  psi_edge=psi_edge)
                            if s is not None:
                                acc[s] = acc.get(s, Fraction(0)) + coeff
    return tuple((s, c) for s, c in acc.items() if c)


def multiply(x: TautClass, y: TautClass) -> TautClass:
    """Excess-intersection product of tautological classes."""
    if x.ambient != y.ambient:
        raise AmbientMismatch(f"{x.ambient} vs {y.ambient}")
    out = TautClass(x.ambient)
    for ta, ca in x.terms.items():
        for tb, cb in y.terms.items():
            for s, c in _term_pair_product(ta, tb):
                out._add(s, ca * cb * c)
    return out


# ---------------------------------------------------------------------------
# composition (grafting vertex classes into a graph)


def compose_at_vertices(graph: StableGraph, classes: Sequence[TautClass]) -> TautClass:
    """Push per-vertex classes forward along the gluing map of `graph`.

    classes[v] lives on (genus(v), valence(v)) with marking j of the vertex
    space matching slot j of the vertex (legs in increasing order, then edge
    sides in edge order).  Raw pushforward: no automorphism factors.
    """
    nv = graph.num_vertices
    if len(classes) != nv:
        raise InvalidInput("one class per vertex required")
    for v, cls in enumerate(classes):
        want = (graph.genus[v], graph.valence(v))
        if cls.ambient != want:
            raise InvalidInput(
                f"vertex {v} expects a class on {want}, got {cls.ambient}")
    out = TautClass((graph.g, graph.n))
    for combo in itertools.product(*(cls.sorted_terms() for cls in classes)):
        coeff = _ONE
        for _, c in combo:
            coeff *= c
        stratum = _graft(graph, [t for t, _ in combo])
        if stratum is not None:
            out._add(stratum, coeff)
    return out


def _graft(graph: StableGraph, inner: Sequence[DecoratedStratum]) -> Optional[DecoratedStratum]:
    offsets = []
    genus: list[int] = []
    for term in inner:
        offsets.append(len(genus))
        genus.extend(term.graph.genus)
    nv_total = len(genus)
    legs: list[list[int]] = [[] for _ in range(nv_total)]
    kappa: dict[int, dict[int, int]] = {}
    psi_leg: dict[int, int] = {}
    psi_edge: dict = {}
    edges: list[tuple[int, int]] = []

    for v, term in enumerate(inner):
        off = offsets[v]
        for w, vk in enumerate(term.kappa):
            if vk:
                kappa[off + w] = {a: x for a, x in vk}

    # outer slots: per vertex, slot j corresponds to inner marking j
    def attach(v: int, slot_idx: int):
        term = inner[v]
        marking = slot_idx + 1
        w = term.graph.leg_home(marking)
        return offsets[v] + w, term.psi_leg.get(marking, 0)

    for v in range(graph.num_vertices):
        slots = graph.slots_at(v)
        for j, (kind, ref) in enumerate(slots):
            if kind == "leg":
                w, p = attach(v, j)
                legs[w].append(ref)
                if p:
                    psi_leg[ref] = p
    outer_sides: dict = {}
    for v in range(graph.num_vertices):
        slots = graph.slots_at(v)
        for j, (kind, ref) in enumerate(slots):
            if kind == "side":
                outer_sides[ref] = attach(v, j)
    for e in range(graph.num_edges):
        (w0, p0) = outer_sides[(e, 0)]
        (w1, p1) = outer_sides[(e, 1)]
        if w0 <= w1:
            edges.append((w0, w1))
            sides = ((p0, 0), (p1, 1))
        else:
            edges.append((w1, w0))
            sides = ((p1, 0), (p0, 1))
        idx = len(edges) - 1
        for p, s in sides:
            if p:
                psi_edge[(idx, s)] = p
    for v, term in enumerate(inner):
        off = offsets[v]
        for ei, (a, b) in enumerate(term.graph.edges):
            edges.append((a + off, b + off))
            idx = len(edges) - 1
            for s in (0, 1):
                p = term.psi_edge.get((ei, s), 0)
                if p:
                    psi_edge[(idx, s)] = p

    return canonical_stratum(genus, legs, edges, kappa=kappa,
                             psi_leg=psi_leg, psi_edge=psi_edge)


# ---------------------------------------------------------------------------
# forgetful maps


def forget_pushforward(cls: TautClass) -> TautClass:
    """Push forward along the map forgetting the last marking."""
    g, n1 = cls.ambient
    n = n1 - 1
    if n < 0 or 2 * g - 2 + n <= 0:
        raise InvalidInput(f"cannot forget a marking on {cls.ambient}")
    star = n1
    out = TautClass((g, n))
    for term, coeff in cls.terms.items():
        for stratum, c in _push_term(term, star):
            out._add(stratum, coeff * c)
    return out


def _push_term(term: DecoratedStratum, star: int):
    graph = term.graph
    v = graph.leg_home(star)
    gv = graph.genus[v]
    nv = graph.valence(v)
    if 2 * gv - 2 + (nv - 1) > 0:
        yield from _push_stable_vertex(term, star, v)
        return
    # unstable (0, 3) vertex: decorations there are all zero (dimension 0)
    legs_v = [m for m in graph.legs[v] if m != star]
    sides_v = graph.sides_at(v)
    if len(legs_v) == 1 and len(sides_v) == 1:
        # leg slides onto the neighbor vertex; the edge disappears
        (e, s) = sides_v[0]
        far = graph.side_vertex(e, 1 - s)
        if far == v:
            raise InvalidInput("cannot stabilize a self-edge vertex this way")
        far_psi = term.psi_edge.get((e, 1 - s), 0)
        genus, legs, edges, kappa, psi_leg, psi_edge, vmap, emap = _strip_vertex(
            term, v, drop_edges=(e,))
        legs[vmap[far]].append(legs_v[0])
        if far_psi:
            psi_leg[legs_v[0]] = far_psi
        yield canonical_stratum(genus, legs, edges, kappa, psi_leg, psi_edge), _ONE
        return
    if len(legs_v) == 0 and len(sides_v) == 2:
        (e1, s1), (e2, s2) = sides_v
        if e1 == e2:
            raise InvalidInput("forgetting would destabilize a self-edge vertex")
        far1 = graph.side_vertex(e1, 1 - s1)
        far2 = graph.side_vertex(e2, 1 - s2)
        p1 = term.psi_edge.get((e1, 1 - s1), 0)
        p2 = term.psi_edge.get((e2, 1 - s2), 0)
        genus, legs, edges, kappa, psi_leg, psi_edge, vmap, emap = _strip_vertex(
            term, v, drop_edges=(e1, e2))
        a, b = vmap[far1], vmap[far2]
        if a <= b:
            edges.append((a, b))
            new_sides = ((0, p1), (1, p2))
        else:
            edges.append((b, a))
            new_sides = ((0, p2), (1, p1))
        idx = len(edges) - 1
        for s, p in new_sides:
            if p:
                psi_edge[(idx, s)] = p
        yield canonical_stratum(genus, legs, edges, kappa, psi_leg, psi_edge), _ONE
        return
    raise InvalidInput("ambient would become unstable")


def _strip_vertex(term: DecoratedStratum, v: int, drop_edges):
    """Remove vertex v (valence fully consumed by drop_edges/legs) and the
    given edges, remapping everything else."""
    graph = term.graph
    keep_v = [u for u in range(graph.num_vertices) if u != v]
    vmap = {u: i for i, u in enumerate(keep_v)}
    genus = [graph.genus[u] for u in keep_v]
    legs = [[m for m in graph.legs[u]] for u in keep_v]
    kappa = {vmap[u]: {a: x for a, x in term.kappa[u]}
             for u in keep_v if term.kappa[u]}
    psi_leg = dict(term.psi_leg)
    edges = []
    psi_edge = {}
    for e, (a, b) in enumerate(graph.edges):
        if e in drop_edges:
            continue
        na, nb = vmap[a], vmap[b]
        idx = len(edges)
        if na <= nb:
            edges.append((na, nb))
            pair = ((0, term.psi_edge.get((e, 0), 0)), (1, term.psi_edge.get((e, 1), 0)))
        else:
            edges.append((nb, na))
            pair = ((0, term.psi_edge.get((e, 1), 0)), (1, term.psi_edge.get((e, 0), 0)))
        for s, p in pair:
            if p:
                psi_edge[(idx, s)] = p
    return genus, legs, edges, kappa, psi_leg, psi_edge, vmap, {}


def _push_stable_vertex(term: DecoratedStratum, star: int, v: int):
    """Vertex stays stable: apply the one-marking pushforward rules to its
    decoration (kappa decays into psi powers of the forgotten point, or one
    psi exponent at another slot drops by one)."""
    graph = term.graph
    a_star = term.psi_leg.get(star, 0)
    vk = term.kappa[v]
    m_after = graph.valence(v) - 1
    kappa0 = 2 * graph.genus[v] - 2 + m_after

    new_legs = [list(ms) for ms in graph.legs]
    new_legs[v] = [m for m in new_legs[v] if m != star]
    base_psi_leg = {m: y for m, y in term.psi_leg.items() if m != star}

    # kappa decay branch
    choices = [list(range(x + 1)) for _, x in vk]
    for decays in itertools.product(*choices):
        t = a_star + sum(a * c for (a, _), c in zip(vk, decays))
        if t == 0:
            continue
        coeff = _ONE
        new_vk: dict[int, int] = {}
        for (a, x), c in zip(vk, decays):
            coeff *= comb(x, c)
            if x - c:
                new_vk[a] = new_vk.get(a, 0) + (x - c)
        if t - 1 == 0:
            coeff *= kappa0
        else:
            new_vk[t - 1] = new_vk.get(t - 1, 0) + 1
        kappa = {u: {a: x for a, x in term.kappa[u]}
                 for u in range(graph.num_vertices) if term.kappa[u] and u != v}
        if new_vk:
            kappa[v] = new_vk
        s = canonical_stratum(graph.genus, new_legs, graph.edges, kappa,
                              base_psi_leg, term.psi_edge)
        if s is not None:
            yield s, coeff
    # psi reduction branch (no kappa decay, no psi at the forgotten marking)
    if a_star == 0:
        kappa = {u: {a: x for a, x in term.kappa[u]}
                 for u in range(graph.num_vertices) if term.kappa[u]}
        for m in new_legs[v]:
            y = term.psi_leg.get(m, 0)
            if y >= 1:
                psi_leg = dict(base_psi_leg)
                if y - 1:
                    psi_leg[m] = y - 1
                else:
                    psi_leg.pop(m)
                s = canonical_stratum(graph.genus, new_legs, graph.edges, kappa,
                                      psi_leg, term.psi_edge)
                if s is not None:
                    yield s, _ONE
        for side in graph.sides_at(v):
            y = term.psi_edge.get(side, 0)
            if y >= 1:
                psi_edge = dict(term.psi_edge)
                if y - 1:
                    psi_edge[side] = y - 1
                else:
                    psi_edge.pop(side)
                s = canonical_stratum(graph.genus, new_legs, graph.edges, kappa,
                                      base_psi_leg, psi_edge)
                if s is not None:
                    yield s, _ONE


def forget_pullback(cls: TautClass, n_target: int) -> TautClass:
    """Pull back along the map forgetting markings n+1..n_target (i.e. add
    markings at the end); degree preserving."""
    g, n = cls.ambient
    if n_target < n:
        raise InvalidInput("target marking count below the source")
    out = cls
    for nn in range(n, n_target):
        out = _pullback_one(out)
    return out


def _pullback_one(cls: TautClass) -> TautClass:
    g, n = cls.ambient
    star = n + 1
    out = TautClass((g, star))
    for term, coeff in cls.terms.items():
        graph = term.graph
        for v in range(graph.num_vertices):
            new_graph = make_graph(
                graph.genus,
                [list(ms) + ([star] if u == v else [])
                 for u, ms in enumerate(graph.legs)],
                graph.edges, check=False)
            classes = []
            for u in range(graph.num_vertices):
                if u == v:
                    classes.append(_pullback_vertex_class(term, u))
                else:
                    classes.append(_vertex_class(term, u))
            composed = compose_at_vertices(new_graph, classes)
            for s, c in composed.terms.items():
                out._add(s, coeff * c)
    return out


def _vertex_class(term: DecoratedStratum, v: int) -> TautClass:
    """The decoration at one vertex as a class on the vertex moduli space."""
    graph = term.graph
    gv, nv = graph.genus[v], graph.valence(v)
    psi = {}
    for j, (kind, ref) in enumerate(graph.slots_at(v), start=1):
        y = term.psi_leg.get(ref, 0) if kind == "leg" else term.psi_edge.get(ref, 0)
        if y:
            psi[j] = y
    kappa = [{a: x for a, x in term.kappa[v]}]
    s = canonical_stratum((gv,), (range(1, nv + 1),), (), kappa=kappa, psi_leg=psi)
    out = TautClass((gv, nv))
    out._add(s, _ONE)
    return out


def _pullback_vertex_class(term: DecoratedStratum, v: int) -> TautClass:
    """Pull the vertex decoration back along forgetting one extra marking on
    the vertex space, then relabel the new marking into the slot position
    that the outer graph's new leg occupies."""
    graph = term.graph
    gv, nv = graph.genus[v], graph.valence(v)
    cls = unit_class(gv, nv + 1)
    new_m = nv + 1
    for a, x in term.kappa[v]:
        factor = kappa_class(gv, nv + 1, a) - psi_class(gv, nv + 1, new_m, a)
        for _ in range(x):
            cls = multiply(cls, factor)
    for j, (kind, ref) in enumerate(graph.slots_at(v), start=1):
        y = term.psi_leg.get(ref, 0) if kind == "leg" else term.psi_edge.get(ref, 0)
        if not y:
            continue
        factor = psi_class(gv, nv + 1, j) - _bubble_divisor(gv, nv + 1, j, new_m)
        for _ in range(y):
            cls = multiply(cls, factor)
    # the outer new leg sits after the old legs but before the edge sides
    n_legs = len(graph.legs[v])
    perm = {}
    for j in range(1, nv + 2):
        if j <= n_legs:
            perm[j] = j
        elif j <= nv:
            perm[j] = j + 1
        else:
            perm[j] = n_legs + 1
    return relabel(cls, perm)


def _bubble_divisor(g: int, n: int, i: int, j: int) -> TautClass:
    """Boundary divisor where markings i and j split off on a rational tail."""
    main_legs = [m for m in range(1, n + 1) if m not in (i, j)]
    s = canonical_stratum((g, 0), (main_legs, (i, j)), ((0, 1),))
    out = TautClass((g, n))
    out._add(s, _ONE)
    return out


def relabel(cls: TautClass, perm: Mapping[int, int]) -> TautClass:
    """Transport a class along a permutation of the markings."""
    g, n = cls.ambient
    if sorted(perm) != list(range(1, n + 1)) or sorted(perm.values()) != list(range(1, n + 1)):
        raise InvalidInput("relabeling must permute 1..n")
    out = TautClass((g, n))
    for term, coeff in cls.terms.items():
        graph = term.graph
        legs = [[perm[m] for m in ms] for ms in graph.legs]
        psi_leg = {perm[m]: y for m, y in term.psi_leg.items()}
        kappa = {v: {a: x for a, x in vk} for v, vk in enumerate(term.kappa) if vk}
        s = canonical_stratum(graph.genus, legs, graph.edges, kappa,
                              psi_leg, term.psi_edge)
        out._add(s, coeff)
    return out


# ---------------------------------------------------------------------------
# generators


@lru_cache(maxsize=None)
def _generators(g: int, n: int, degree: int):
    out: dict = {}
    for graph in enumerate_stable_graphs(g, n):
        rem = degree - graph.num_edges
        if rem < 0:
            continue
        dims = [3 * graph.genus[v] - 3 + graph.valence(v)
                for v in range(graph.num_vertices)]
        if sum(dims) < rem:
            continue
        slot_lists = [graph.slots_at(v) for v in range(graph.num_vertices)]
        for split in _bounded_compositions(rem, [min(d, rem) for d in dims]):
            per_vertex_options = []
            for v, w in enumerate(split):
                per_vertex_options.append(list(_vertex_decorations(w, len(slot_lists[v]))))
            for combo in itertools.product(*per_vertex_options):
                kappa = {}
                psi_leg: dict = {}
                psi_edge: dict = {}
                for v, (vk, psis) in enumerate(combo):
                    if vk:
                        kappa[v] = dict(vk)
                    for (kind, ref), y in zip(slot_lists[v], psis):
                        if not y:
                            continue
                        if kind == "leg":
                            psi_leg[ref] = y
                        else:
                            psi_edge[ref] = y
                s = canonical_stratum(graph.genus, graph.legs, graph.edges,
                                      kappa, psi_leg, psi_edge)
                if s is not None:
                    out[s] = True
    return tuple(sorted(out, key=lambda s: s.sort_key()))


def _bounded_compositions(total, bounds):
    if not bounds:
        if total == 0:
            yield ()
        return
    for first in range(min(total, bounds[0]) + 1):
        for rest in _bounded_compositions(total - first, bounds[1:]):
            yield (first,) + rest


def _vertex_decorations(weight, n_slots):
    """All (kappa monomial, psi exponents) of the given total weight."""
    for kappa_weight in range(weight + 1):
        for kp in _kappa_monomials(kappa_weight):
            for psis in _compositions_z(weight - kappa_weight, n_slots) \
                    if n_slots else ([()] if weight == kappa_weight else []):
                yield kp, psis


def _kappa_monomials(weight):
    """Partitions of `weight` as kappa exponent maps {a: x}."""
    def rec(rem, max_part):
        if rem == 0:
            yield ()
            return
        for part in range(min(rem, max_part), 0, -1):
            for count in range(rem // part, 0, -1):
                for rest in rec(rem - part * count, part - 1):
                    yield ((part, count),) + rest
    yield from rec(weight, weight)


def all_generators(g: int, n: int, degree: int) -> tuple[TautClass, ...]:
    """Every decorated stratum generator of the given degree, as classes."""
    out = []
    for s in _generators(g, n, degree):
        cls = TautClass((g, n))
        cls._add(s, _ONE)
        out.append(cls)
    return tuple(out)
