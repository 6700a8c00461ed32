"""Exact top intersection numbers on moduli of stable curves.

psi integrals come from the Virasoro/DVV recursion over exact rationals with
a genus-0 closed form and string/dilaton fast paths; kappa monomials are
converted through the defining pushforward kappa_a = pi_*(psi^{a+1}) by
adding a marking.  Evaluation of a top-degree tautological class multiplies
the per-vertex integrals of its decorated strata.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Mapping, Sequence

from .errors import DegreeMismatch, InvalidInput

_ZERO = Fraction(0)


def _dfact(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@lru_cache(maxsize=None)
def _psi(g: int, exps: tuple[int, ...]) -> Fraction:
    n = len(exps)
    if g == 0:
        # closed form on M-bar_{0,n}
        d = n - 3
        coef = factorial(d)
        for a in exps:
            coef //= factorial(a)
        return Fraction(coef)
    if g == 1 and exps == (1,):
        return Fraction(1, 24)
    # string fast path
    if exps and exps[-1] == 0:
        rest = exps[:-1]
        return sum((_psi_checked(g, _dec(rest, i)) for i in range(len(rest)) if rest[i] >= 1),
                   _ZERO)
    # dilaton fast path
    if exps and exps[-1] == 1:
        rest = exps[:-1]
        return (2 * g - 2 + len(rest)) * _psi_checked(g, rest)
    # DVV recursion on the largest insertion tau_{k+1}
    j0 = max(range(n), key=lambda i: exps[i])
    k = exps[j0] - 1
    rest = exps[:j0] + exps[j0 + 1:]
    total = _ZERO
    for j, a in enumerate(rest):
        total += Fraction(_dfact(2 * k + 2 * a + 1), _dfact(2 * a - 1)) * \
            _psi_checked(g, rest[:j] + (a + k,) + rest[j + 1:])
    for b in range(k):
        c = k - 1 - b
        coef = Fraction(_dfact(2 * b + 1) * _dfact(2 * c + 1), 2)
        total += coef * _psi_checked(g - 1, (b, c) + rest)
        for g1 in range(g + 1):
            for mask in range(1 << len(rest)):
                s1 = tuple(a for i, a in enumerate(rest) if mask >> i & 1)
                s2 = tuple(a for i, a in enumerate(rest) if not mask >> i & 1)
                left = _psi_checked(g1, (b,) + s1)
                if left:
                    total += coef * left * _psi_checked(g - g1, (c,) + s2)
    return total / _dfact(2 * k + 3)


def _dec(exps: tuple[int, ...], i: int) -> tuple[int, ...]:
    return tuple(sorted(exps[:i] + (exps[i] - 1,) + exps[i + 1:], reverse=True))


def _psi_checked(g: int, exps: tuple[int, ...]) -> Fraction:
    """Zero off the stable range or dimension constraint, else recurse."""
    n = len(exps)
    if g < 0 or 2 * g - 2 + n <= 0 or any(a < 0 for a in exps):
        return _ZERO
    if sum(exps) != 3 * g - 3 + n:
        return _ZERO
    return _psi(g, tuple(sorted(exps, reverse=True)))


def psi_integral(g: int, exponents: Sequence[int]) -> Fraction:
    """Integral of prod psi_i^{a_i} over M-bar_{g,n}, exact."""
    exps = tuple(int(a) for a in exponents)
    n = len(exps)
    if g < 0 or 2 * g - 2 + n <= 0:
        raise InvalidInput(f"unstable (g, n) = ({g}, {n})")
    if any(a < 0 for a in exps):
        raise InvalidInput("negative psi exponent")
    if sum(exps) != 3 * g - 3 + n:
        raise DegreeMismatch(
            f"sum of exponents {sum(exps)} != 3g-3+n = {3 * g - 3 + n}")
    return _psi(g, tuple(sorted(exps, reverse=True)))


@lru_cache(maxsize=None)
def _kappa_psi(g: int, kappa: tuple[tuple[int, int], ...],
               exps: tuple[int, ...]) -> Fraction:
    if not kappa:
        return _psi_checked(g, exps)
    # remove one kappa_a factor and add a marking carrying psi^{a+1};
    # remaining kappa factors pull back as (kappa_b - psi_new^b)^{x_b}
    (a, xa), rest = kappa[0], kappa[1:]
    if xa > 1:
        rest = ((a, xa - 1),) + rest
    out = _ZERO
    for choice, coef, extra in _kappa_decays(rest):
        out += coef * _kappa_psi(g, choice, tuple(sorted(exps + (a + 1 + extra,),
                                                         reverse=True)))
    return out


def _kappa_decays(kappa: tuple[tuple[int, int], ...]):
    """Expansion of prod (kappa_b - psi^b)^{x_b}: yields (remaining kappa,
    coefficient, total psi power absorbed by the new marking)."""
    if not kappa:
        yield (), Fraction(1), 0
        return
    (b, xb), rest = kappa[0], kappa[1:]
    for sub, coef, extra in _kappa_decays(rest):
        for c in range(xb + 1):
            term_coef = coef * comb(xb, c) * (-1) ** c
            left = ((b, xb - c),) if xb - c else ()
            yield left + sub, Fraction(term_coef), extra + b * c


def kappa_psi_integral(g: int, n: int, kappa: Mapping[int, int],
                       psi_exponents: Sequence[int]) -> Fraction:
    """Integral of a kappa monomial times psi powers over M-bar_{g,n}."""
    exps = tuple(int(a) for a in psi_exponents)
    if len(exps) != n:
        raise InvalidInput("psi exponent vector must have length n")
    kap = tuple(sorted((int(a), int(x)) for a, x in kappa.items() if x))
    if any(a < 1 or x < 0 for a, x in kap):
        raise InvalidInput("kappa indices start at 1 and exponents are nonnegative")
    total = sum(a * x for a, x in kap) + sum(exps)
    if total != 3 * g - 3 + n:
        raise DegreeMismatch(
            f"total degree {total} != 3g-3+n = {3 * g - 3 + n}")
    return _kappa_psi(g, kap, tuple(sorted(exps, reverse=True)))


# ---------------------------------------------------------------------------
# evaluation and pairing of tautological classes


def evaluate(cls) -> Fraction:
    """Integrate a homogeneous top-degree class over its ambient space."""
    from .strata import TautClass

    if not isinstance(cls, TautClass):
        raise InvalidInput("evaluate expects a TautClass")
    g, n = cls.ambient
    top = 3 * g - 3 + n
    total = _ZERO
    for term, coeff in cls.terms.items():
        if term.degree != top:
            raise DegreeMismatch(
                f"term of degree {term.degree} in evaluate, expected {top}")
        value = Fraction(1)
        graph = term.graph
        for v in range(graph.num_vertices):
            gv = graph.genus[v]
            slots = graph.slots_at(v)
            exps = []
            for kind, ref in slots:
                if kind == "leg":
                    exps.append(term.psi_leg.get(ref, 0))
                else:
                    exps.append(term.psi_edge.get(ref, 0))
            kap = dict(term.kappa[v])
            dim = 3 * gv - 3 + len(slots)
            if sum(a * x for a, x in kap.items()) + sum(exps) != dim:
                value = _ZERO
                break
            value *= _kappa_psi(gv, tuple(sorted(kap.items())),
                                tuple(sorted(exps, reverse=True)))
        total += coeff * value
    return total


def pair(x, y) -> Fraction:
    """Intersection pairing <x, y> of complementary-degree classes."""
    from .strata import multiply

    return evaluate(multiply(x, y))


class PairingVerdict:
    """EQUAL-UNDER-PAIRING certifies equality modulo the pairing kernel;
    DISTINCT carries a witness generator and is a proof of inequality."""

    def __init__(self, equal: bool, witness=None, semantics="pairing-equality"):
        self.equal = equal
        self.witness = witness
        self.semantics = semantics

    def __bool__(self):
        return self.equal

    @property
    def label(self) -> str:
        return "EQUAL-UNDER-PAIRING" if self.equal else "DISTINCT"

    def __repr__(self):
        extra = "" if self.equal else f", witness={self.witness}"
        return f"PairingVerdict({self.label}{extra})"


def equals_pairing(x, y, degree: int | None = None) -> PairingVerdict:
    """Compare two classes by pairing the difference against every decorated
    stratum generator of complementary degree."""
    from .strata import TautClass, all_generators, multiply

    if x.ambient != y.ambient:
        raise InvalidInput("ambient mismatch in equals_pairing")
    g, n = x.ambient
    diff = x - y
    if diff.is_zero():
        return PairingVerdict(True)
    degrees = {t.degree for t in diff.terms}
    if degree is None:
        if len(degrees) != 1:
            raise DegreeMismatch(f"inhomogeneous difference of degrees {degrees}")
        degree = degrees.pop()
    elif degrees - {degree}:
        raise DegreeMismatch(f"difference has degrees {degrees}, expected {degree}")
    comp = 3 * g - 3 + n - degree
    if comp < 0:
        raise DegreeMismatch("degree exceeds the ambient dimension")
    for gen in all_generators(g, n, comp):
        if evaluate(multiply(diff, gen)) != 0:
            return PairingVerdict(False, witness=gen)
    return PairingVerdict(True)
