"""Independent reference computations for golden values.

Nothing here imports the package.  Free-group words are strings over
``a, b, c, ...`` with upper case for inverses, lattice points are tuples,
and probabilities are exact fractions wherever that stays cheap.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from math import comb, factorial

# Green function at the origin for simple random walk on Z^3 (Watson's integral).
WATSON_Z3 = 1.516386059151978
# Same quantity on Z^4 (Polya return probability 0.193206...).
GREEN_Z4 = 1.2394671218


def free_letters(k: int) -> list[str]:
    low = [chr(97 + i) for i in range(k)]
    return low + [c.upper() for c in low]


def free_reduce(word: str) -> str:
    out: list[str] = []
    for c in word:
        if out and out[-1] == c.swapcase():
            out.pop()
        else:
            out.append(c)
    return "".join(out)


def free_ball(k: int, r: int) -> set[str]:
    ball = {""}
    frontier = {""}
    for _ in range(r):
        frontier = {free_reduce(w + c) for w in frontier for c in free_letters(k)} - ball
        ball |= frontier
    return ball


def free_srw_power(k: int, n: int) -> dict[str, Fraction]:
    """Exact law of simple random walk on F_k after n steps."""
    step = Fraction(1, 2 * k)
    law = {"": Fraction(1)}
    for _ in range(n):
        new: dict[str, Fraction] = defaultdict(Fraction)
        for w, p in law.items():
            for c in free_letters(k):
                new[free_reduce(w + c)] += p * step
        law = dict(new)
    return law


def lattice_srw_power(d: int, n: int) -> dict[tuple, Fraction]:
    step = Fraction(1, 2 * d)
    moves = [tuple(s * int(i == j) for i in range(d)) for j in range(d) for s in (1, -1)]
    law = {(0,) * d: Fraction(1)}
    for _ in range(n):
        new: dict[tuple, Fraction] = defaultdict(Fraction)
        for x, p in law.items():
            for v in moves:
                new[tuple(a + b for a, b in zip(x, v))] += p * step
        law = dict(new)
    return law


def shannon(law) -> float:
    return math.fsum(-float(p) * math.log(float(p)) for p in law.values() if p > 0)


def z3_return_probability(k: int) -> Fraction:
    """P(Z_k = 0) for SRW on Z^3 by the multinomial count of closed paths."""
    if k % 2:
        return Fraction(0)
    n = k // 2
    total = 0
    for i in range(n + 1):
        for j in range(n - i + 1):
            l = n - i - j
            total += (factorial(n) // (factorial(i) * factorial(j) * factorial(l))) ** 2
    return Fraction(comb(2 * n, n) * total, 6 ** (2 * n))


def tree_hitting(k: int) -> float:
    """F(e, a) for SRW on F_k: smaller root of (2k-1) p F^2 - F + p = 0, p = 1/(2k)."""
    p = 1.0 / (2 * k)
    a = (2 * k - 1) * p
    return (1.0 - math.sqrt(1.0 - 4.0 * a * p)) / (2.0 * a)


def tree_green_identity(k: int) -> float:
    """G(e, e) = 1 / (1 - P(return)), with P(return) = F(e, a) by symmetry."""
    return 1.0 / (1.0 - tree_hitting(k))


def tree_drift(k: int) -> float:
    """Word-length speed of SRW on F_k: the length chain drifts by (2k-2)/(2k)."""
    return (k - 1) / k


def tree_green_speed(k: int) -> float:
    return tree_drift(k) * -math.log(tree_hitting(k))


def z3_neighbour_hitting() -> float:
    """F(0, e_1) = (G(0,0) - 1) / G(0,0) from the one-step decomposition at 0."""
    return (WATSON_Z3 - 1.0) / WATSON_Z3


def line_hitting(p: float) -> tuple[float, float]:
    """(F(0, +1), F(0, -1)) for the nearest-neighbour walk on Z with P(+1) = p."""
    q = 1.0 - p
    return min(1.0, p / q), min(1.0, q / p)
