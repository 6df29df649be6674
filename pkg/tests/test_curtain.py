import math
import random

import pytest

from dartsketch import CurtainSketch, DartPlacement, cell_area
from oracle import curtain_from_darts, naive_curtain_free_area, naive_curtain_state


def test_worked_example_single_high_dart():
    # m=3, a=2, h=1, q=2, sawtooth: dart at (col 0, level 3)
    sk = CurtainSketch(2.0, 3, 2, 1, max_level=64)
    assert sk.free_area() == 1.0
    assert sk.update(DartPlacement(0, 3)) is True
    assert [h2 / 2 for h2 in sk.heights2] == [3.0, 1.5, 0.0]
    assert [sk.in_tension(j) for j in range(3)] == [False, True, True]
    assert sk.window_bits == [0, 0, 0]
    expected_free = 1 / 16 + 1 / 3 + 2**-1.5 / 3
    assert sk.free_area() == pytest.approx(expected_free, abs=1e-12)
    assert sk.free_area() == pytest.approx(0.51368446, abs=1e-7)

    # a dart below the window (blanket occupied) changes nothing
    before = sk.to_bytes()
    assert sk.update(DartPlacement(0, 0)) is False
    # re-throwing the same dart changes nothing
    assert sk.update(DartPlacement(0, 3)) is False
    assert sk.to_bytes() == before


def test_empty_board_is_all_free():
    for a, h, m in [(1, 1, 5), (2, 1, 6), (2, 2, 3), (4, 3, 8)]:
        sk = CurtainSketch(2.91, m, a, h)
        assert sk.free_area() == pytest.approx(1.0, abs=1e-12)
        probe = sk.copy()
        assert probe.update(DartPlacement(0, 0)) is True  # first dart always lands free


def test_parameter_validation():
    with pytest.raises(ValueError):
        CurtainSketch(2.0, 4, a=3)  # not a power of two
    with pytest.raises(ValueError):
        CurtainSketch(2.0, 4, a=2, h=-1)
    sk = CurtainSketch(2.0, 4)
    with pytest.raises(ValueError):
        sk.update(DartPlacement(4, 0))


def test_incremental_matches_oracle_random_streams():
    rng = random.Random(20)
    for _ in range(150):
        m = rng.randint(1, 8)
        a = rng.choice([1, 2])
        h = rng.choice([1, 2])
        q = rng.choice([2.0, 2.91])
        ml = rng.choice([6, 12])
        template = CurtainSketch(q, m, a, h, max_level=ml)
        darts = [
            DartPlacement(rng.randrange(m), rng.randint(0, ml))
            for _ in range(rng.randint(0, 80))
        ]
        sk = curtain_from_darts(darts, template)
        g2, tens, bits = naive_curtain_state(darts, template)
        assert sk.heights2 == g2
        assert sk.window_bits == bits
        assert [sk.in_tension(j) for j in range(m)] == tens
        assert abs(sk.free_area() - naive_curtain_free_area(darts, template)) < 1e-12


def test_free_area_equals_change_probability_exhaustive():
    rng = random.Random(30)
    for _ in range(40):
        m = rng.randint(1, 4)
        a = rng.choice([1, 2])
        h = rng.choice([1, 2])
        ml = rng.choice([4, 6])
        sk = CurtainSketch(rng.choice([2.0, 2.91]), m, a, h, max_level=ml, seed=rng.randrange(2**31))
        for e in range(rng.randint(0, 40)):
            sk.add(e)
        prob = 0.0
        for j in range(m):
            for lvl in range(ml + 1):
                probe = sk.copy()
                if probe.update(DartPlacement(j, lvl)):
                    prob += cell_area(lvl, j, sk.params, sk.offsets)
        assert abs(prob - sk.free_area()) < 1e-12


def test_monotone_free_area_and_duplicates():
    sk = CurtainSketch(2.91, 8, 2, 1, seed=77)
    prev = sk.free_area()
    for e in range(400):
        sk.add(e)
        cur = sk.free_area()
        assert cur <= prev + 1e-15
        prev = cur
    blob = sk.to_bytes()
    for e in range(400):
        assert sk.add(e) is False
    assert sk.to_bytes() == blob


def test_merge_identity_and_commutativity():
    base = CurtainSketch(2.0, 6, 2, 1, max_level=12, seed=4)
    x = base.copy()
    for e in range(50):
        x.add(e)
    empty = base.copy()
    assert x.merge(empty) == x
    y = base.copy()
    for e in range(50, 90):
        y.add(e)
    assert x.merge(y) == y.merge(x)
    other = CurtainSketch(2.0, 6, 2, 2, max_level=12, seed=4)
    with pytest.raises(ValueError):
        x.merge(other)


def test_merge_sequential_equivalence_random():
    rng = random.Random(31)
    for trial in range(150):
        m = rng.randint(1, 8)
        a = rng.choice([1, 2])
        h = rng.choice([1, 2])
        q = rng.choice([2.0, 2.91])
        template = CurtainSketch(q, m, a, h, max_level=12, seed=trial)
        whole, s1, s2 = template.copy(), template.copy(), template.copy()
        for e in range(1, rng.randint(1, 200)):
            whole.add(e)
            (s1 if rng.random() < 0.5 else s2).add(e)
        assert s1.merge(s2) == whole


def test_decode_height_examples():
    sk = CurtainSketch(2.0, 5, 2, 1)
    assert sk.decode_height(0) == sk.heights2[0] / 2
    # all offsets +1/2: heights g0, g0+1/2, ..., g0+2
    sk.heights2 = [0, 1, 2, 3, 4]
    assert sk.decode_height(4) == pytest.approx(0 + 2.0)
    assert sk.decode_height2(4) == 4


def test_decode_height_matches_direct_scan_random():
    rng = random.Random(41)
    for trial in range(50):
        m = rng.randint(2, 40)
        a = rng.choice([1, 2, 4])
        sk = CurtainSketch(2.91, m, a, 1, seed=trial)
        for e in range(rng.randint(0, 300)):
            sk.add(e)
        packed = sk.packed_offsets()
        for i in range(m):
            assert sk.decode_height2(i, packed) == sk.heights2[i]


def test_dartboard_bit_count():
    for m, a, h in [(3, 2, 1), (8, 2, 1), (16, 4, 2), (2, 1, 3), (37, 2, 1)]:
        sk = CurtainSketch(2.91, m, a, h)
        want = 6 + (m - 1) * math.log2(2 * a) + h * m  # ceil(log2(64)) = 6
        assert sk.dartboard_bits == want
        packed = sk._pack_dartboard()
        assert len(packed) == (sk.dartboard_bits + 7) // 8
