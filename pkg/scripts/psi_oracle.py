#!/usr/bin/env python3
"""Pre-build oracle for psi intersection numbers on moduli of stable curves.

Straightforward recursive evaluation of the Virasoro/DVV recursion over exact
rationals, kept deliberately plain (no input normalization, no closed-form
shortcuts) so it stays independent of the optimized implementation in the
package.  Running this script regenerates tests/fixtures/psi_values.json and
asserts a set of published Witten-Kontsevich values first.

Usage:
    python scripts/psi_oracle.py [output.json]
"""

from __future__ import annotations

import itertools
import json
import sys
from fractions import Fraction
from pathlib import Path

_cache: dict[tuple[int, tuple[int, ...]], Fraction] = {}


def dfact(m: int) -> int:
    """Double factorial m!! with (-1)!! = 1."""
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def correlator(g: int, args: tuple[int, ...]) -> Fraction:
    """<tau_{a_1} ... tau_{a_n}>_g, zero off the dimension constraint."""
    n = len(args)
    if g < 0 or 2 * g - 2 + n <= 0:
        return Fraction(0)
    if any(a < 0 for a in args):
        return Fraction(0)
    if sum(args) != 3 * g - 3 + n:
        return Fraction(0)
    if g == 0 and n == 3:
        return Fraction(1)
    if g == 1 and args == (1,):
        return Fraction(1, 24)
    key = (g, args)
    if key in _cache:
        return _cache[key]

    # peel the insertion of largest exponent, tau_{k+1}
    j0 = max(range(n), key=lambda i: args[i])
    k = args[j0] - 1
    assert k >= 0, (g, args)
    rest = args[:j0] + args[j0 + 1:]

    total = Fraction(0)
    for j, a in enumerate(rest):
        new = rest[:j] + (a + k,) + rest[j + 1:]
        total += Fraction(dfact(2 * k + 2 * a + 1), dfact(2 * a - 1)) * correlator(g, new)
    for b in range(k):
        c = k - 1 - b
        coef = Fraction(dfact(2 * b + 1) * dfact(2 * c + 1), 2)
        total += coef * correlator(g - 1, (b, c) + rest)
        for g1 in range(g + 1):
            g2 = g - g1
            for bits in itertools.product((0, 1), repeat=len(rest)):
                s1 = tuple(a for a, t in zip(rest, bits) if t == 0)
                s2 = tuple(a for a, t in zip(rest, bits) if t == 1)
                total += coef * correlator(g1, (b,) + s1) * correlator(g2, (c,) + s2)
    result = total / dfact(2 * k + 3)
    _cache[key] = result
    return result


# Published values (Witten-Kontsevich tables) the oracle must reproduce.
PUBLISHED = [
    (0, (0, 0, 0), Fraction(1)),
    (0, (1, 0, 0, 0), Fraction(1)),
    (0, (1, 1, 0, 0, 0), Fraction(2)),
    (0, (2, 0, 0, 0, 0), Fraction(1)),
    (1, (1,), Fraction(1, 24)),
    (1, (2, 0), Fraction(1, 24)),
    (1, (1, 1), Fraction(1, 24)),
    (1, (3, 0, 0), Fraction(1, 24)),
    (1, (2, 1, 0), Fraction(1, 12)),
    (1, (1, 1, 1), Fraction(1, 12)),
    (2, (4,), Fraction(1, 1152)),
    (2, (5, 0), Fraction(1, 1152)),
    (2, (4, 1), Fraction(1, 384)),
    (2, (3, 2), Fraction(29, 5760)),
    (3, (7,), Fraction(1, 82944)),
]


def admissible(g: int, n: int):
    """All exponent vectors (sorted descending) on M-bar_{g,n}, top degree."""
    d = 3 * g - 3 + n
    if d < 0 or 2 * g - 2 + n <= 0:
        return
    for comp in itertools.combinations_with_replacement(range(d + 1), n):
        if sum(comp) == d:
            yield tuple(sorted(comp, reverse=True))


def self_checks() -> None:
    for g, args, expected in PUBLISHED:
        got = correlator(g, args)
        assert got == expected, (g, args, got, expected)
    # string and dilaton identities, a further internal consistency screen
    for g, args in [(1, (2, 1, 0)), (2, (3, 2, 0)), (2, (4, 0, 1)), (0, (2, 0, 0, 0))]:
        n = len(args)
        assert args[-1] in (0, 1)
        if args[-1] == 0:
            lhs = correlator(g, args)
            rhs = sum(correlator(g, args[:i] + (args[i] - 1,) + args[i + 1:n - 1])
                      for i in range(n - 1) if args[i] >= 1)
            assert lhs == rhs, ("string", g, args)
        else:
            lhs = correlator(g, args)
            rhs = (2 * g - 2 + n - 1) * correlator(g, args[:n - 1])
            assert lhs == rhs, ("dilaton", g, args)


def main() -> None:
    self_checks()
    table = {}
    for g in (0, 1, 2):
        for n in range(1, 6):
            for args in sorted(set(admissible(g, n))):
                table[f"{g}|{','.join(map(str, args))}"] = str(correlator(g, args))
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "psi_values.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(table, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(table)} values to {out}")


if __name__ == "__main__":
    main()
