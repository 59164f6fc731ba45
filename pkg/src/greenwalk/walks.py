"""Seeded random streams, sampled trajectories and vectorised walkers.

Every random quantity in the package is drawn from a stream derived from a
master seed by :func:`stream`, keyed by a tuple of labels.  Streams for
different keys are statistically independent, and a stream depends only on
``(master, key)``, so results do not change with the number of workers.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .groups import Element, GroupSpec
from .measures import StepMeasure

SEED_DERIVATION = "numpy SeedSequence(master_seed, spawn_key=(crc32(label) | int, ...)), PCG64"


def _key_part(k) -> int:
    if isinstance(k, (int, np.integer)):
        return int(k)
    return zlib.crc32(str(k).encode())


def stream(master_seed: int, *key) -> np.random.Generator:
    """Independent generator for ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(int(rng))


@dataclass(frozen=True)
class Trajectory:
    """A sampled path ``Z_0 = start, Z_k = Z_{k-1} X_k``."""

    start: Element
    increments: tuple[Element, ...]
    seed: object = None

    @cached_property
    def positions(self) -> tuple[Element, ...]:
        out = [self.start]
        for x in self.increments:
            out.append(out[-1] * x)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.increments)

    def hitting_time(self, y: Element, first: int = 0) -> int | None:
        """First ``k >= first`` with ``Z_k = y``, or ``None``."""
        for k, z in enumerate(self.positions[first:], first):
            if z == y:
                return k
        return None


def simulate(
    g: GroupSpec,
    m: StepMeasure,
    steps: int,
    rng,
    start: Element | None = None,
) -> Trajectory:
    """Sample ``steps`` increments of law ``m`` and return the path from ``start``."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if m.group != g:
        raise ValueError(f"measure lives on {m.group.name}, not {g.name}")
    seed = rng if not isinstance(rng, np.random.Generator) else None
    gen = as_generator(rng)
    support = m.support
    idx = m.sample_indices(gen, steps)
    return Trajectory(
        start if start is not None else g.identity(),
        tuple(support[i] for i in idx),
        seed,
    )


# -- vectorised walkers --------------------------------------------------------


class FreeBatchWalker:
    """Many independent nearest-neighbour walks on ``F_k`` advanced in lockstep.

    Reduced words are stored as a stack per walker.  Optional additive
    trackers accumulate ``sum w(letter)`` over the reduced word, which is how
    word length and tree Green distances are followed without rebuilding
    elements.
    """

    def __init__(
        self,
        m: StepMeasure,
        size: int,
        rng: np.random.Generator,
        capacity: int = 64,
        weights: dict[str, dict[int, float]] | None = None,
    ):
        if not m.group.is_free or not m.is_nearest_neighbour():
            raise ValueError("batch walker needs a nearest-neighbour measure on a free group")
        self.measure = m
        self.size = size
        self.rng = rng
        k = m.group.rank
        self.letters = np.array([x.payload[0] if x.payload else 0 for x in m.support], dtype=np.int8)
        self.stack = np.zeros((size, max(capacity, 2)), dtype=np.int8)
        self.lengths = np.zeros(size, dtype=np.int64)
        self._rows = np.arange(size)
        self.time = 0
        self.trackers: dict[str, np.ndarray] = {}
        self._tables: dict[str, np.ndarray] = {}
        for name, w in (weights or {}).items():
            table = np.zeros(2 * k + 1)
            for letter, val in w.items():
                table[letter + k] = val
            self._tables[name] = table
            self.trackers[name] = np.zeros(size)
        self._k = k

    def _grow(self):
        extra = np.zeros_like(self.stack)
        self.stack = np.concatenate([self.stack, extra], axis=1)

    @property
    def first_letters(self) -> np.ndarray:
        return np.where(self.lengths > 0, self.stack[:, 0], 0)

    def step(self) -> None:
        idx = self.measure.sample_indices(self.rng, self.size)
        let = self.letters[idx]
        lens = self.lengths
        top = self.stack[self._rows, np.maximum(lens - 1, 0)]
        moving = let != 0
        pop = moving & (lens > 0) & (top == -let)
        push = moving & ~pop
        if lens.max() + 1 >= self.stack.shape[1]:
            self._grow()
        rows = self._rows[push]
        self.stack[rows, lens[push]] = let[push]
        k = self._k
        for name, table in self._tables.items():
            tr = self.trackers[name]
            tr += np.where(push, table[let.astype(np.int64) + k], 0.0)
            tr -= np.where(pop, table[top.astype(np.int64) + k], 0.0)
        self.lengths = lens + push.astype(np.int64) - pop.astype(np.int64)
        self.time += 1

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()

    def at(self, payload: Sequence[int]) -> np.ndarray:
        """Boolean mask of walkers currently at ``payload``."""
        L = len(payload)
        hit = self.lengths == L
        if L and hit.any():
            target = np.asarray(payload, dtype=np.int8)
            rows = np.nonzero(hit)[0]
            same = (self.stack[rows, :L] == target).all(axis=1)
            hit[rows[~same]] = False
        return hit

    def word(self, i: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.stack[i, : self.lengths[i]])

    def element(self, i: int) -> Element:
        return Element(self.measure.group.name, self.word(i))


class LatticeBatchWalker:
    """Many independent walks on ``Z^d`` held as an integer position array."""

    def __init__(self, m: StepMeasure, size: int, rng: np.random.Generator, max_block: int = 2_000_000):
        if not m.group.is_lattice:
            raise ValueError("lattice walker needs a lattice measure")
        self.measure = m
        self.size = size
        self.rng = rng
        self.table = np.array([x.payload for x in m.support], dtype=np.int64)
        self.positions = np.zeros((size, m.group.rank), dtype=np.int64)
        self.time = 0
        self._block = max(1, max_block // max(size, 1))

    def step(self) -> None:
        idx = self.measure.sample_indices(self.rng, self.size)
        self.positions += self.table[idx]
        self.time += 1

    def run(self, steps: int) -> None:
        left = steps
        while left > 0:
            b = min(left, self._block)
            idx = self.measure.sample_indices(self.rng, (self.size, b))
            self.positions += self.table[idx].sum(axis=1)
            left -= b
            self.time += b

    def at(self, payload: Sequence[int]) -> np.ndarray:
        return (self.positions == np.asarray(payload)).all(axis=1)

    def element(self, i: int) -> Element:
        return Element(self.measure.group.name, tuple(int(c) for c in self.positions[i]))


def batch_walker(m: StepMeasure, size: int, rng: np.random.Generator, **kw):
    if m.group.is_lattice:
        return LatticeBatchWalker(m, size, rng)
    return FreeBatchWalker(m, size, rng, **kw)


def supports_batch(m: StepMeasure) -> bool:
    return m.group.is_lattice or m.is_nearest_neighbour()


def chunk_sizes(total: int, chunk: int) -> Iterable[tuple[int, int]]:
    """``(chunk_index, size)`` pairs covering ``total`` trials."""
    i = 0
    done = 0
    while done < total:
        n = min(chunk, total - done)
        yield i, n
        done += n
        i += 1
