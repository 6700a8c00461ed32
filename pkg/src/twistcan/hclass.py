"""Weighted fundamental classes and the closure-class recursion.

The weighted class of the locus of twisted canonical divisors is assembled
as a star-graph sum: each simple star graph and twist contributes the
product of its edge twists over the automorphism order times the pushforward
of closure classes at the vertices.  Scaled by 2^{-g}, the degree-g
interpolated cycle gives the same class; the recursion consumes that form
and peels the trivial-star term to determine every closure class, both
meromorphic (directly) and holomorphic (through the forgetful pushforward of
an auxiliary profile with one extra simple pole).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import InvalidInput
from .graphs import StarGraph, aut_order, enumerate_simple_star_graphs
from .intersect import evaluate, pair
from .pixton import InterpolationConfig, pixton_class
from .strata import (TautClass, all_generators, compose_at_vertices,
                     forget_pullback, forget_pushforward, multiply, relabel,
                     unit_class, zero_class)
from .twists import enumerate_star_twists

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiDeg:
    """Zero/pole multidegree: ordered parts summing to k(2g-2)."""

    g: int
    parts: tuple[int, ...]
    k: int = 1

    def __post_init__(self):
        if self.g < 0:
            raise InvalidInput("negative genus")
        if self.k < 0:
            raise InvalidInput("negative k")
        n = len(self.parts)
        if 2 * self.g - 2 + n <= 0:
            raise InvalidInput(f"unstable (g, n) = ({self.g}, {n})")
        if sum(self.parts) != self.k * (2 * self.g - 2):
            raise InvalidInput(
                f"sum(mu) = {sum(self.parts)} != k(2g-2) = {self.k * (2 * self.g - 2)}")

    @property
    def n(self) -> int:
        return len(self.parts)

    @property
    def holomorphic(self) -> bool:
        return all(m >= 0 for m in self.parts)

    @property
    def strictly_meromorphic(self) -> bool:
        return any(m < 0 for m in self.parts)


def star_term(star: StarGraph, mu: Sequence[int], twist: Sequence[int],
              oracle: Callable[[int, tuple[int, ...]], TautClass]) -> TautClass:
    """One star graph and twist: prod I(e) / |Aut| times the composed
    pushforward of the slot closure classes."""
    graph = star.graph
    classes = []
    for v in range(graph.num_vertices):
        parts = list(star.mu_at(mu, v))
        if v == 0:
            parts += [-twist[e] - 1 for e in range(graph.num_edges)]
        else:
            parts += [twist[e] - 1 for e, (_, b) in enumerate(graph.edges) if b == v]
        classes.append(oracle(graph.genus[v], tuple(parts)))
    coeff = Fraction(1, aut_order(graph))
    for value in twist:
        coeff *= value
    return compose_at_vertices(graph, classes).scale(coeff)


def star_sum(g: int, mu: Sequence[int],
             oracle: Callable[[int, tuple[int, ...]], TautClass], *,
             nontrivial_only: bool = False) -> TautClass:
    """Sum over simple star graphs and twists of the weighted pushforwards.
    Terms with a genus-0 outlying vertex vanish (no holomorphic
    differentials in genus 0) and are dropped with a log line."""
    mu = tuple(mu)
    md = MultiDeg(g, mu)
    if not md.strictly_meromorphic:
        raise InvalidInput("star sum requires a strictly meromorphic mu")
    total = zero_class(g, md.n)
    for star in enumerate_simple_star_graphs(g, mu):
        if nontrivial_only and not star.graph.edges:
            continue
        if any(star.graph.genus[v] == 0 for v in star.outlying):
            logger.debug("dropping star term %s: genus-0 outlying vertex", star)
            continue
        for twist in enumerate_star_twists(star, mu):
            total = total + star_term(star, mu, twist, oracle)
    return total


class ClosureEngine:
    """Memoized recursion for closure classes, with an optional on-disk
    cache and a trace of the levels where the scaled interpolated cycle
    was consumed."""

    def __init__(self, cache_dir: Optional[str] = None,
                 interpolation: Optional[InterpolationConfig] = None):
        self.cache_dir = cache_dir
        self.interpolation = interpolation
        self.memo: dict = {}
        self.pixton_levels: list[tuple[int, int]] = []
        self._stack: list = []

    # -- weighted total class ------------------------------------------------

    def weighted_class(self, g: int, mu: Sequence[int],
                       mode: str = "pixton") -> TautClass:
        """The weighted fundamental class of the space of twisted canonical
        divisors; pixton mode is 2^{-g} times the degree-g cycle, star mode
        reassembles it from closure classes."""
        mu = tuple(mu)
        md = MultiDeg(g, mu)
        if not md.strictly_meromorphic:
            raise InvalidInput("the weighted class requires strictly meromorphic mu")
        if mode == "pixton":
            self.pixton_levels.append((g, md.n))
            return pixton_class(g, mu, g, self.interpolation).scale(Fraction(1, 2 ** g))
        if mode == "star":
            return star_sum(g, mu, self.closure_class)
        raise InvalidInput(f"unknown weighted-class mode {mode!r}")

    # -- closure classes -----------------------------------------------------

    def closure_class(self, g: int, mu: Sequence[int]) -> TautClass:
        """Class of the closure of the locus of canonical divisors with the
        given zero/pole profile, markings in the order of mu."""
        mu = tuple(mu)
        MultiDeg(g, mu)
        order = sorted(range(len(mu)), key=lambda i: (mu[i], i))
        key = (g, tuple(mu[i] for i in order))
        if key not in self.memo:
            stored = self._load_cache(key)
            if stored is None:
                if key in self._stack:
                    raise InvalidInput(f"closure recursion cycle at {key}")
                self._stack.append(key)
                try:
                    stored = self._compute_sorted(g, key[1])
                finally:
                    self._stack.pop()
                self._store_cache(key, stored)
            self.memo[key] = stored
        perm = {k + 1: order[k] + 1 for k in range(len(mu))}
        return relabel(self.memo[key], perm)

    def _compute_sorted(self, g: int, mu: tuple[int, ...]) -> TautClass:
        n = len(mu)
        negatives = [m for m in mu if m < 0]
        if g == 0:
            # sum(mu) = -2 forces a negative part; the locus is everything
            return unit_class(0, n)
        if negatives == [-1]:
            # a meromorphic differential cannot have just one simple pole
            return zero_class(g, n)
        if not negatives:
            if g == 1:
                # all parts are 0
                return unit_class(1, n)
            zeros = sum(1 for m in mu if m == 0)
            if zeros:
                inner = self.closure_class(g, mu[zeros:])
                lifted = forget_pullback(inner, n)
                # pulled-back class has the positive parts first; mu is
                # sorted ascending so the zeros sit in front
                perm = {i: i + zeros for i in range(1, n - zeros + 1)}
                perm.update({n - zeros + j: j for j in range(1, zeros + 1)})
                return relabel(lifted, perm)
            return self._holomorphic_ladder(g, mu)
        return self.weighted_class(g, mu) - star_sum(g, mu, self.closure_class,
                                                     nontrivial_only=True)

    def _holomorphic_ladder(self, g: int, mu: tuple[int, ...]) -> TautClass:
        """Holomorphic profile, no zero parts, g >= 2: push the identity for
        the auxiliary profile (mu with its largest part increased, plus a
        simple pole) forward along forgetting the pole, subtract everything
        except the saturating two-vertex graph, and divide."""
        n = len(mu)
        mu_plus = mu[:-1] + (mu[-1] + 1, -1)
        total = forget_pushforward(self.weighted_class(g, mu_plus))
        for star in enumerate_simple_star_graphs(g, mu_plus):
            graph = star.graph
            if not graph.edges:
                continue
            if any(graph.genus[v] == 0 for v in star.outlying):
                continue
            sat = self._saturating_marking(graph, g, n)
            if sat is not None:
                continue
            for twist in enumerate_star_twists(star, mu_plus):
                term = star_term(star, mu_plus, twist, self.closure_class)
                total = total - forget_pushforward(term)
        base = mu[:-1] + (mu[-1] + 1,)
        for i in range(n - 1):
            dec = base[:i] + (base[i] - 1,) + base[i + 1:]
            total = total - self.closure_class(g, dec).scale(base[i])
        return total.scale(Fraction(1, mu[-1] + 1))

    @staticmethod
    def _saturating_marking(graph, g: int, n: int) -> Optional[int]:
        """Marking i when the star graph is the two-vertex graph with center
        (genus 0, legs {i, n+1}) and a genus-g outlying vertex."""
        if graph.num_vertices != 2 or graph.num_edges != 1:
            return None
        if graph.genus[0] != 0 or graph.genus[1] != g:
            return None
        legs0 = graph.legs[0]
        if len(legs0) != 2 or (n + 1) not in legs0:
            return None
        return min(legs0)

    # -- persistent cache ----------------------------------------------------

    def _cache_path(self, key) -> Optional[str]:
        if not self.cache_dir:
            return None
        g, mu = key
        name = f"closure_g{g}_mu{'_'.join(str(m) for m in mu)}.v1.json"
        return os.path.join(self.cache_dir, name)

    def _load_cache(self, key) -> Optional[TautClass]:
        path = self._cache_path(key)
        if not path or not os.path.exists(path):
            return None
        from .io import class_from_data
        import json
        try:
            with open(path) as handle:
                return class_from_data(json.load(handle))
        except (InvalidInput, ValueError, KeyError):
            return None  # version mismatch or corruption: recompute

    def _store_cache(self, key, cls: TautClass) -> None:
        path = self._cache_path(key)
        if not path:
            return
        from .io import class_to_json, write_atomic
        write_atomic(path, class_to_json(cls))


# ---------------------------------------------------------------------------
# verification report


@dataclass
class StarRecord:
    star: StarGraph
    twists: tuple[tuple[int, ...], ...]
    aut: int
    dropped: Optional[str] = None


@dataclass
class VerifyReport:
    g: int
    mu: tuple[int, ...]
    verdict: str
    witness_index: Optional[int]
    star_graphs: list[StarRecord] = field(default_factory=list)
    pairings: list[tuple[Fraction, Fraction]] = field(default_factory=list)
    pixton_levels: list[tuple[int, int]] = field(default_factory=list)
    star_side: Optional[TautClass] = None
    pixton_side: Optional[TautClass] = None

    @property
    def equal(self) -> bool:
        return self.verdict == "EQUAL-UNDER-PAIRING"

    @property
    def star_side_proven_levels_only(self) -> bool:
        """True when the star side consumed the scaled cycle only at levels
        of genus <= 1, where the identity is proven."""
        return all(gl <= 1 for gl, _ in self.pixton_levels)


def verify_weighted_identity(g: int, mu: Sequence[int],
                             engine: Optional[ClosureEngine] = None) -> VerifyReport:
    """Compare the star-sum assembly of the weighted class against 2^{-g}
    times the degree-g interpolated cycle, pairing both sides against every
    complementary-degree generator."""
    mu = tuple(mu)
    md = MultiDeg(g, mu)
    if not md.strictly_meromorphic:
        raise InvalidInput("verification requires strictly meromorphic mu")
    engine = engine or ClosureEngine()

    mark = len(engine.pixton_levels)
    star_side = star_sum(g, mu, engine.closure_class)
    star_levels = list(engine.pixton_levels[mark:])

    pixton_side = pixton_class(g, mu, g, engine.interpolation).scale(
        Fraction(1, 2 ** g))

    records = []
    for star in enumerate_simple_star_graphs(g, mu):
        twists = enumerate_star_twists(star, mu)
        dropped = None
        if any(star.graph.genus[v] == 0 for v in star.outlying):
            dropped = "genus-0 outlying vertex"
        elif not twists:
            dropped = "empty twist set"
        records.append(StarRecord(star, twists, aut_order(star.graph), dropped))

    comp = 3 * g - 3 + md.n - g
    pairings = []
    verdict = "EQUAL-UNDER-PAIRING"
    witness = None
    for idx, gen in enumerate(all_generators(g, md.n, comp)):
        a = evaluate(multiply(star_side, gen))
        b = evaluate(multiply(pixton_side, gen))
        pairings.append((a, b))
        if a != b and witness is None:
            verdict = "DISTINCT"
            witness = idx
    return VerifyReport(g=g, mu=mu, verdict=verdict, witness_index=witness,
                        star_graphs=records, pairings=pairings,
                        pixton_levels=star_levels, star_side=star_side,
                        pixton_side=pixton_side)
