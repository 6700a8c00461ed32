"""Pixton's cycle for a zero/pole multidegree.

For each positive integer r the class is a sum over stable graphs and
admissible weightings mod r of a decorated pushforward with vertex factor
exp(-kappa_1), leg factors exp(m~_i^2 psi), and edge factor
(1 - exp(-w w'(psi'+psi'')))/(psi'+psi'').  Coefficients of each canonical
generator are polynomials in r for large r; the cycle is the constant term,
recovered by exact Lagrange interpolation with held-out validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterator, Sequence

from .errors import InterpolationFailure, InvalidInput
from .graphs import StableGraph, aut_order, enumerate_stable_graphs
from .strata import DecoratedStratum, TautClass, canonical_stratum

_ZERO = Fraction(0)


def shifted_mu(g: int, mu: Sequence[int]) -> tuple[int, ...]:
    mu = tuple(mu)
    shifted = tuple(m + 1 for m in mu)
    if sum(shifted) != 2 * g - 2 + len(mu):
        raise InvalidInput("sum(mu) != 2g-2")
    return shifted


def _spanning_tree(graph: StableGraph):
    """Tree edge indices plus a processing order of (vertex, tree edge to
    parent); self-edges and surplus edges are the h1 free loops."""
    nv = graph.num_vertices
    seen = {0}
    tree = []
    order = []  # (child vertex, edge index, side at child)
    frontier = [0]
    adj: dict[int, list] = {v: [] for v in range(nv)}
    for e, (a, b) in enumerate(graph.edges):
        if a != b:
            adj[a].append((b, e, 0))
            adj[b].append((a, e, 1))
    while frontier:
        v = frontier.pop()
        for w, e, side_at_v in adj[v]:
            if w not in seen:
                seen.add(w)
                tree.append(e)
                order.append((w, e, 1 - side_at_v))
                frontier.append(w)
    assert len(seen) == nv
    return tree, order


def admissible_weightings(graph: StableGraph, g: int, mu: Sequence[int],
                          r: int) -> Iterator[dict]:
    """Stream of admissible weightings mod r: maps half-edge -> residue,
    legs keyed by marking and edge sides by (edge, side).

    Legs carry the shifted parts mod r, edges balance mod r, and vertex sums
    match 2g(v)-2+n(v) mod r.  Iterates the h1 free loop residues and solves
    the rest on a spanning tree; there are exactly r^{h1} weightings.
    """
    if r < 1:
        raise InvalidInput("r must be a positive integer")
    shifted = shifted_mu(g, mu)
    tree, order = _spanning_tree(graph)
    tree_set = set(tree)
    free = [e for e in range(graph.num_edges) if e not in tree_set]
    targets = [(2 * graph.genus[v] - 2 + graph.valence(v)) % r
               for v in range(graph.num_vertices)]
    leg_sum = [0] * graph.num_vertices
    for m, v in ((m, graph.leg_home(m)) for m in range(1, graph.n + 1)):
        leg_sum[v] += shifted[m - 1]

    import itertools
    for loops in itertools.product(range(r), repeat=len(free)):
        w: dict = {}
        for m in range(1, graph.n + 1):
            w[m] = shifted[m - 1] % r
        for e, val in zip(free, loops):
            w[(e, 0)] = val
            w[(e, 1)] = (-val) % r
        # solve tree edges from the leaves up
        for child, e, side_at_child in reversed(order):
            total = leg_sum[child]
            for (ee, ss) in _sides_at(graph, child):
                if ee == e and ss == side_at_child:
                    continue
                if (ee, ss) in w:
                    total += w[(ee, ss)]
            val = (targets[child] - total) % r
            w[(e, side_at_child)] = val
            w[(e, 1 - side_at_child)] = (-val) % r
        # root consistency holds identically; keep a defensive check
        root_total = leg_sum[0] + sum(w[s] for s in _sides_at(graph, 0))
        assert root_total % r == targets[0] % r, "weighting system inconsistent"
        yield w


def _sides_at(graph: StableGraph, v: int):
    return graph.sides_at(v)


def count_weightings(graph: StableGraph, g: int, mu: Sequence[int], r: int) -> int:
    return sum(1 for _ in admissible_weightings(graph, g, mu, r))


# ---------------------------------------------------------------------------
# the fixed-r class


def _edge_products(graph, g, mu, r):
    """Multiset of per-edge weight products over all weightings: map from
    the vector (w(h)w(h') per edge) to its multiplicity."""
    counts: dict[tuple[int, ...], int] = {}
    for w in admissible_weightings(graph, g, mu, r):
        vec = tuple(w[(e, 0)] * w[(e, 1)] for e in range(graph.num_edges))
        counts[vec] = counts.get(vec, 0) + 1
    return counts


def pixton_fixed_r(g: int, mu: Sequence[int], d: int, r: int) -> TautClass:
    """Degree-d part of the mod-r cycle, exactly."""
    mu = tuple(mu)
    n = len(mu)
    shifted = shifted_mu(g, mu)
    if d < 0:
        raise InvalidInput("negative degree")
    out = TautClass((g, n))
    if d > 3 * g - 3 + n:
        return out
    for graph in enumerate_stable_graphs(g, n):
        ne = graph.num_edges
        if ne > d:
            continue
        pref = Fraction(1, aut_order(graph) * r ** graph.h1)
        budget = d - ne
        site_options = _decoration_sites(graph, shifted, budget)
        for vec, count in _edge_products(graph, g, mu, r).items():
            if any(v == 0 for v in vec) and ne:
                continue  # zero edge weight kills the edge factor
            coeff0 = pref * count
            for kappa, psi_leg, psi_edge, coeff, ks in _expand_sites(
                    graph, site_options, budget, vec):
                s = canonical_stratum(graph.genus, graph.legs, graph.edges,
                                      kappa=kappa, psi_leg=psi_leg,
                                      psi_edge=psi_edge)
                if s is not None:
                    out._add(s, coeff0 * coeff)
    return out


def _decoration_sites(graph, shifted, budget):
    """Per-site expansion tables up to the degree budget.

    vertex site: exp(-kappa_1[v]) -> degree j with coeff (-1)^j / j!
    leg site: exp(m~^2 psi) -> degree j with coeff m~^{2j} / j!
    edge site: sum_{k>=1} (-1)^{k+1} W^k (psi'+psi'')^{k-1} / k!, W the
    per-weighting edge product filled in later.
    """
    sites = []
    for v in range(graph.num_vertices):
        opts = [(j, Fraction((-1) ** j, factorial(j))) for j in range(budget + 1)]
        sites.append(("kappa", v, opts))
    for m in range(1, graph.n + 1):
        mt = shifted[m - 1]
        opts = [(j, Fraction(mt ** (2 * j), factorial(j))) for j in range(budget + 1)]
        sites.append(("leg", m, opts))
    for e in range(graph.num_edges):
        opts = []
        for k in range(1, budget + 2):
            base = Fraction((-1) ** (k + 1), factorial(k))
            for alpha in range(k):
                beta = k - 1 - alpha
                opts.append((k - 1, alpha, beta, base * comb(k - 1, alpha), k))
        sites.append(("edge", e, opts))
    return sites


def _expand_sites(graph, sites, budget, vec):
    """DFS over decoration sites collecting terms of total degree == budget."""

    def rec(i, rem, kappa, psi_leg, psi_edge, coeff, ks):
        if i == len(sites):
            if rem == 0:
                yield (dict(kappa), dict(psi_leg), dict(psi_edge), coeff, ks)
            return
        kind, ref, opts = sites[i]
        if kind == "kappa":
            for j, c in opts:
                if j > rem:
                    break
                if j:
                    kappa[ref] = {1: j}
                yield from rec(i + 1, rem - j, kappa, psi_leg, psi_edge, coeff * c, ks)
                kappa.pop(ref, None)
        elif kind == "leg":
            for j, c in opts:
                if j > rem:
                    break
                if c == 0 and j:
                    continue
                if j:
                    psi_leg[ref] = j
                yield from rec(i + 1, rem - j, kappa, psi_leg, psi_edge, coeff * c, ks)
                psi_leg.pop(ref, None)
        else:
            W = vec[ref]
            for deg, alpha, beta, c, k in opts:
                if deg > rem:
                    continue
                wc = c * W ** k
                if wc == 0:
                    continue
                if alpha:
                    psi_edge[(ref, 0)] = alpha
                if beta:
                    psi_edge[(ref, 1)] = beta
                yield from rec(i + 1, rem - deg, kappa, psi_leg, psi_edge,
                               coeff * wc, ks)
                psi_edge.pop((ref, 0), None)
                psi_edge.pop((ref, 1), None)

    yield from rec(0, budget, {}, {}, {}, Fraction(1), None)


# ---------------------------------------------------------------------------
# interpolation in r


@dataclass(frozen=True)
class InterpolationConfig:
    """Sampling policy for the polynomial-in-r interpolation."""

    initial_samples: int = 0   # 0 means 2d + 2
    holdout: int = 3
    max_samples: int = 64

    def start_count(self, d: int) -> int:
        return self.initial_samples or (2 * d + 2)


@dataclass(frozen=True)
class PixtonSample:
    r: int
    cls: TautClass


@dataclass(frozen=True)
class PixtonResult:
    cls: TautClass
    samples: tuple[PixtonSample, ...]
    used: int


def _lagrange_at(points: Sequence[tuple[int, Fraction]], x: int) -> Fraction:
    total = _ZERO
    for i, (xi, yi) in enumerate(points):
        if yi == 0:
            continue
        num = den = 1
        for j, (xj, _) in enumerate(points):
            if i == j:
                continue
            num *= (x - xj)
            den *= (xi - xj)
        total += yi * Fraction(num, den)
    return total


def r_floor(g: int, mu: Sequence[int], d: int) -> int:
    shifted = shifted_mu(g, mu)
    return 2 * (sum(abs(s) for s in shifted) + d + 1)


def pixton_class_with_samples(g: int, mu: Sequence[int], d: int,
                              config: InterpolationConfig | None = None) -> PixtonResult:
    """Constant term in r of the degree-d cycle, with the audit trail."""
    mu = tuple(mu)
    n = len(mu)
    if d > 3 * g - 3 + n:
        return PixtonResult(TautClass((g, n)), (), 0)
    config = config or InterpolationConfig()
    r0 = r_floor(g, mu, d)
    samples: list[PixtonSample] = []

    def ensure(count):
        while len(samples) < count:
            if len(samples) >= config.max_samples:
                raise InterpolationFailure(
                    f"pixton interpolation needs more than {config.max_samples} "
                    f"samples at (g={g}, mu={mu}, d={d})")
            r = r0 + len(samples)
            samples.append(PixtonSample(r, pixton_fixed_r(g, mu, d, r)))

    count = config.start_count(d)
    while True:
        ensure(count + config.holdout)
        keys = sorted({t for s in samples for t in s.cls.terms},
                      key=lambda t: t.sort_key())
        fit = samples[:count]
        hold = samples[count:count + config.holdout]
        ok = True
        constant: dict[DecoratedStratum, Fraction] = {}
        for t in keys:
            points = [(s.r, s.cls.terms.get(t, _ZERO)) for s in fit]
            for s in hold:
                if _lagrange_at(points, s.r) != s.cls.terms.get(t, _ZERO):
                    ok = False
                    break
            if not ok:
                break
            c0 = _lagrange_at(points, 0)
            if c0:
                constant[t] = c0
        if ok:
            cls = TautClass((g, n), constant)
            return PixtonResult(cls, tuple(samples[:count + config.holdout]), count)
        if count >= config.max_samples:
            raise InterpolationFailure(
                f"pixton interpolation did not stabilize within "
                f"{config.max_samples} samples at (g={g}, mu={mu}, d={d})")
        count = min(2 * count, config.max_samples)


@lru_cache(maxsize=None)
def _pixton_cached(g: int, mu: tuple[int, ...], d: int) -> TautClass:
    return pixton_class_with_samples(g, mu, d).cls


def pixton_class(g: int, mu: Sequence[int], d: int,
                 config: InterpolationConfig | None = None) -> TautClass:
    """The r-constant-term cycle of degree d."""
    if config is None:
        return _pixton_cached(g, tuple(mu), d)
    return pixton_class_with_samples(g, mu, d, config).cls
