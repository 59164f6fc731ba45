"""Canonical element arithmetic for the group catalog.

Two families are supported:

* ``Z^d``: integer lattices with the standard generators ``±e_i``.
* ``F_k``: free groups of rank ``k >= 2`` with free generators ``a, b, c, ...``.

Elements are immutable and always held in canonical form, so equality and
hashing of :class:`Element` coincide with equality in the group.  Free-group
words are tuples of signed generator indices (``+i`` for the ``i``-th free
generator, ``-i`` for its inverse) and are reduced eagerly on every product.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

DEFAULT_BALL_CAP = 10_000_000

_LATTICE_RE = re.compile(r"^\s*Z(?:\s*\^\s*(\d+))?\s*$")
_FREE_RE = re.compile(r"^\s*F\s*_\s*(\d+)\s*$")


class GroupError(ValueError):
    """Raised for malformed group strings, mismatched groups or bad elements."""


class BallTooLarge(RuntimeError):
    """Ball enumeration refused because the ball exceeds the configured cap."""

    def __init__(self, radius: int, projected: int, cap: int):
        self.radius = radius
        self.projected = projected
        self.cap = cap
        super().__init__(
            f"ball of radius {radius} has {projected} elements, above the cap of {cap}"
        )


@dataclass(frozen=True)
class Element:
    """A group element in canonical form.

    ``group`` is the catalog identifier (``"Z^3"``, ``"F_2"``) and ``payload``
    the canonical tuple: a lattice vector or a reduced signed-letter word.
    """

    group: str
    payload: tuple[int, ...]

    def __mul__(self, other: "Element") -> "Element":
        return _catalog_lookup(self.group).mul(self, other)

    def __invert__(self) -> "Element":
        return _catalog_lookup(self.group).inv(self)

    def __len__(self) -> int:
        return len(self.payload)

    def __str__(self) -> str:
        return _catalog_lookup(self.group).format(self)

    def __lt__(self, other: "Element") -> bool:
        return sort_key(self) < sort_key(other)


def sort_key(x: Element) -> tuple:
    """Deterministic total order: shorter words first, then lexicographic."""
    return (len(x.payload), x.payload) if x.group.startswith("F") else x.payload


@dataclass(frozen=True)
class GroupSpec:
    """A catalog group together with its symmetric generating set.

    ``kind`` is ``"lattice"`` or ``"free"``; ``rank`` is ``d`` or ``k``.
    """

    kind: str
    rank: int
    _generators: tuple[Element, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "lattice":
            if self.rank < 1:
                raise GroupError(f"lattice dimension must be positive, got {self.rank}")
            gens = []
            for i in range(self.rank):
                for sgn in (1, -1):
                    v = [0] * self.rank
                    v[i] = sgn
                    gens.append(Element(self.name, tuple(v)))
        elif self.kind == "free":
            if self.rank < 2:
                raise GroupError(f"free group rank must be at least 2, got {self.rank}")
            if self.rank > 26:
                raise GroupError("free group rank above 26 has no letter encoding")
            gens = []
            for i in range(1, self.rank + 1):
                gens.append(Element(self.name, (i,)))
                gens.append(Element(self.name, (-i,)))
        else:
            raise GroupError(f"unknown group kind {self.kind!r}")
        object.__setattr__(self, "_generators", tuple(gens))
        _CATALOG.setdefault(self.name, self)

    # -- identification -------------------------------------------------

    @property
    def name(self) -> str:
        return f"Z^{self.rank}" if self.kind == "lattice" else f"F_{self.rank}"

    @property
    def is_free(self) -> bool:
        return self.kind == "free"

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"

    @property
    def generators(self) -> tuple[Element, ...]:
        return self._generators

    @property
    def growth_degree(self) -> int | None:
        """Polynomial growth degree ``D``, or ``None`` for exponential growth."""
        return self.rank if self.is_lattice else None

    @property
    def capabilities(self) -> dict:
        return {
            "polynomial_growth_degree": self.growth_degree,
            "superpolynomial_growth": self.is_free,
            "boundary_model": self.is_free,
        }

    def __str__(self) -> str:
        return self.name

    # -- arithmetic -----------------------------------------------------

    def identity(self) -> Element:
        return Element(self.name, (0,) * self.rank if self.is_lattice else ())

    def _check(self, x: Element) -> None:
        if x.group != self.name:
            raise GroupError(f"element of {x.group} used in {self.name}")

    def mul(self, a: Element, b: Element) -> Element:
        self._check(a)
        self._check(b)
        return Element(self.name, self.mul_payload(a.payload, b.payload))

    def inv(self, a: Element) -> Element:
        self._check(a)
        return Element(self.name, self.inv_payload(a.payload))

    def mul_payload(self, a: tuple, b: tuple) -> tuple:
        if self.is_lattice:
            return tuple(x + y for x, y in zip(a, b))
        return reduce_product(a, b)

    def inv_payload(self, a: tuple) -> tuple:
        if self.is_lattice:
            return tuple(-x for x in a)
        return tuple(-x for x in reversed(a))

    def word_length(self, x: Element) -> int:
        """Word-metric distance ``d_w(e, x)`` for the standard generators."""
        self._check(x)
        if self.is_lattice:
            return sum(abs(c) for c in x.payload)
        return len(x.payload)

    def distance(self, x: Element, y: Element) -> int:
        """Left-invariant word distance ``d_w(x, y) = |x^{-1} y|``."""
        return self.word_length(self.mul(self.inv(x), y))

    def element(self, payload: Iterable[int]) -> Element:
        """Build an element from a raw payload, reducing free words."""
        p = tuple(int(c) for c in payload)
        if self.is_lattice:
            if len(p) != self.rank:
                raise GroupError(f"{self.name} needs {self.rank} coordinates, got {len(p)}")
            return Element(self.name, p)
        for c in p:
            if c == 0 or abs(c) > self.rank:
                raise GroupError(f"letter {c} is not a generator of {self.name}")
        out: tuple = ()
        for c in p:
            out = reduce_product(out, (c,))
        return Element(self.name, out)

    # -- text grammar ---------------------------------------------------

    def format(self, x: Element) -> str:
        self._check(x)
        if self.is_lattice:
            return ",".join(str(c) for c in x.payload)
        if not x.payload:
            return "1"
        return "".join(chr(96 + abs(c)) + ("'" if c < 0 else "") for c in x.payload)

    def parse(self, text: str) -> Element:
        s = text.strip()
        if self.is_lattice:
            try:
                coords = [int(c) for c in s.split(",")]
            except ValueError as exc:
                raise GroupError(f"bad lattice element {text!r}") from exc
            return self.element(coords)
        # "e" is a letter once k >= 5, so it only names the identity below that
        if s in ("", "1") or (s == "e" and self.rank < 5):
            return self.identity()
        letters = []
        i = 0
        while i < len(s):
            ch = s[i]
            idx = ord(ch) - 96
            if not 1 <= idx <= self.rank:
                raise GroupError(f"bad letter {ch!r} for {self.name} in {text!r}")
            if i + 1 < len(s) and s[i + 1] == "'":
                letters.append(-idx)
                i += 2
            else:
                letters.append(idx)
                i += 1
        return self.element(letters)

    # -- balls ----------------------------------------------------------

    def ball_size(self, r: int) -> int:
        """Closed-form size of the word ball of radius ``r``."""
        if r < 0:
            return 0
        if self.is_lattice:
            d = self.rank
            return sum(2**i * math.comb(d, i) * math.comb(r, i) for i in range(min(d, r) + 1))
        q = 2 * self.rank - 1
        return 1 + 2 * self.rank * (q**r - 1) // (q - 1)

    def sphere_size(self, r: int) -> int:
        return self.ball_size(r) - self.ball_size(r - 1)

    def ball_enumerate(self, r: int, cap: int = DEFAULT_BALL_CAP) -> set[Element]:
        """All elements at word distance at most ``r`` from the identity.

        Breadth-first generation over the generators with canonical-form
        deduplication.  Raises :class:`BallTooLarge` before doing any work
        when the closed-form size exceeds ``cap``.
        """
        if r < 0:
            raise GroupError("radius must be nonnegative")
        projected = self.ball_size(r)
        if projected > cap:
            raise BallTooLarge(r, projected, cap)
        return set(self.iter_ball(r))

    def iter_ball(self, r: int) -> Iterator[Element]:
        """Breadth-first iteration of the word ball, in nondecreasing length."""
        e = self.identity()
        seen = {e.payload}
        frontier = deque([(e.payload, 0)])
        gens = [g.payload for g in self.generators]
        while frontier:
            p, dist = frontier.popleft()
            yield Element(self.name, p)
            if dist == r:
                continue
            for g in gens:
                q = self.mul_payload(p, g)
                if q not in seen:
                    seen.add(q)
                    frontier.append((q, dist + 1))


def reduce_product(a: tuple, b: tuple) -> tuple:
    """Freely reduce the concatenation of two reduced words."""
    i = 0
    la = len(a)
    n = min(la, len(b))
    while i < n and a[la - 1 - i] == -b[i]:
        i += 1
    if i == 0:
        return a + b
    return a[: la - i] + b[i:]


_CATALOG: dict[str, GroupSpec] = {}


def _catalog_lookup(name: str) -> GroupSpec:
    try:
        return _CATALOG[name]
    except KeyError:
        return parse_group(name)


def parse_group(text: str) -> GroupSpec:
    """Parse ``"Z^d"`` (or ``"Z"``) and ``"F_k"`` selection strings."""
    m = _LATTICE_RE.match(text)
    if m:
        d = int(m.group(1)) if m.group(1) else 1
        if d < 1:
            raise GroupError(f"lattice dimension must be positive in {text!r}")
        return _CATALOG.get(f"Z^{d}") or GroupSpec("lattice", d)
    m = _FREE_RE.match(text)
    if m:
        k = int(m.group(1))
        if k < 2:
            raise GroupError(f"free group needs k >= 2, got {text!r}")
        return _CATALOG.get(f"F_{k}") or GroupSpec("free", k)
    raise GroupError(f"unrecognised group {text!r}; expected 'Z^d' or 'F_k'")


def group_of(x: Element) -> GroupSpec:
    return _catalog_lookup(x.group)


# Module-level aliases mirroring the operation names.

def identity(g: GroupSpec) -> Element:
    return g.identity()


def mul(a: Element, b: Element) -> Element:
    if a.group != b.group:
        raise GroupError(f"cannot multiply {a.group} by {b.group}")
    return group_of(a).mul(a, b)


def inv(a: Element) -> Element:
    return group_of(a).inv(a)


def word_length(g: GroupSpec, x: Element) -> int:
    return g.word_length(x)


def ball_enumerate(g: GroupSpec, r: int, cap: int = DEFAULT_BALL_CAP) -> set[Element]:
    return g.ball_enumerate(r, cap)
