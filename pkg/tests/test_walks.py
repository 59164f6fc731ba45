import math

import numpy as np

from greenwalk.groups import parse_group
from greenwalk.measures import parse_measure, srw
from greenwalk.walks import FreeBatchWalker, LatticeBatchWalker, chunk_sizes, simulate, stream

from reference import free_reduce

F2 = parse_group("F_2")
Z3 = parse_group("Z^3")


def test_streams_are_reproducible_and_keyed():
    a = stream(7, "estimator", "speed").random(5)
    b = stream(7, "estimator", "speed").random(5)
    c = stream(7, "estimator", "entropy").random(5)
    d = stream(8, "estimator", "speed").random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_simulated_path_is_the_product_of_increments():
    tr = simulate(F2, srw(F2), 40, 3)
    assert len(tr) == 40 and len(tr.positions) == 41
    word = "".join(chr(96 + c) if c > 0 else chr(96 - c).upper() for x in tr.increments for c in x.payload)
    end = tr.positions[-1].payload
    assert "".join(chr(96 + c) if c > 0 else chr(96 - c).upper() for c in end) == free_reduce(word)
    assert simulate(F2, srw(F2), 40, 3).increments == tr.increments


def test_hitting_time():
    g = parse_group("Z")
    tr = simulate(g, parse_measure("biased(1)", g), 5, 0)
    assert tr.hitting_time(g.element((3,))) == 3
    assert tr.hitting_time(g.element((-1,))) is None


def test_free_batch_walker_word_length_drift():
    w = FreeBatchWalker(srw(F2), 20_000, stream(1, "walk"), weights={"len": {s: 1.0 for s in (1, -1, 2, -2)}})
    w.run(200)
    lengths = w.lengths.astype(float)
    assert np.array_equal(lengths, w.trackers["len"])
    # E|Z_n| = n/2 + O(1) for SRW on F_2
    assert abs(lengths.mean() / 200 - 0.5) < 0.02
    i = int(np.argmax(lengths))
    x = w.element(i)
    assert len(x.payload) == lengths[i]
    assert all(a != -b for a, b in zip(x.payload, x.payload[1:]))


def test_lattice_batch_walker_moments():
    w = LatticeBatchWalker(srw(Z3), 20_000, stream(2, "walk"))
    w.run(100)
    pos = w.positions.astype(float)
    assert np.all(np.abs(pos.mean(axis=0)) < 5 * math.sqrt(100 / 3 / 20_000))
    # E|Z_n|^2 = n for SRW
    assert abs((pos**2).sum(axis=1).mean() - 100) < 3
    assert np.all(pos.sum(axis=1) % 2 == 0)


def test_step_and_run_agree_in_law():
    m = parse_measure("biased(0.8)", "Z")
    a = LatticeBatchWalker(m, 5000, stream(3, "a"))
    b = LatticeBatchWalker(m, 5000, stream(3, "b"))
    for _ in range(50):
        a.step()
    b.run(50)
    assert a.time == b.time == 50
    assert abs(a.positions.mean() - b.positions.mean()) < 0.5


def test_chunk_sizes_cover_total():
    parts = list(chunk_sizes(12_345, 5000))
    assert [s for _, s in parts] == [5000, 5000, 2345]
    assert [i for i, _ in parts] == [0, 1, 2]
