import math

import numpy as np
import pytest
from scipy import stats

from dartsketch import (
    PartitionParams,
    cell_area,
    hash_to_dart,
    make_curtain_offsets,
    make_uniform_offsets,
    zero_offsets,
)
from dartsketch._hashing import bulk_darts, dart_level


def test_uniform_offsets_examples():
    assert make_uniform_offsets(1) == (0.0,)
    assert make_uniform_offsets(2) == (0.0, 0.5)
    assert make_uniform_offsets(4) == (0.0, 0.25, 0.5, 0.75)


def combined_offsets(m):
    params = PartitionParams(q=2.0, m=m, sawtooth=True)
    r = make_curtain_offsets(m)
    return tuple(r[i] + params.iota(i) for i in range(m))


def test_curtain_offsets_combined_examples():
    assert combined_offsets(2) == (0.0, 0.5)
    assert combined_offsets(4) == (0.0, 0.5, 0.25, 0.75)
    got = combined_offsets(6)
    want = (0.0, 0.5, 1 / 6, 0.5 + 1 / 6, 2 / 6, 0.5 + 2 / 6)
    assert got == pytest.approx(want, abs=1e-15)


def test_curtain_offsets_reject_odd_m():
    with pytest.raises(ValueError):
        make_curtain_offsets(3)
    with pytest.raises(ValueError):
        make_curtain_offsets(1)


def test_partition_params_validation():
    with pytest.raises(ValueError):
        PartitionParams(q=1.0, m=4)
    with pytest.raises(ValueError):
        PartitionParams(q=2.0, m=0)
    with pytest.raises(ValueError):
        PartitionParams(q=2.0, m=1, max_level=0)


def test_dart_level_interval_examples():
    inv_ln2 = 1.0 / math.log(2.0)
    # 2**-1 <= 0.6 < 2**0 and 2**-2 <= 0.3 < 2**-1
    assert dart_level(0.6, inv_ln2, 0.0, 64) == 0
    assert dart_level(0.3, inv_ln2, 0.0, 64) == 1
    # with offset 0.5: 2**-2.5 <= 0.3 < 2**-1.5
    assert dart_level(0.3, inv_ln2, 0.5, 64) == 1


def test_dart_level_interval_oracle_random():
    rng = np.random.default_rng(7)
    for q in (2.0, 2.91, math.e):
        inv = 1.0 / math.log(q)
        for _ in range(500):
            u = float(rng.uniform(1e-12, 1.0))
            shift = float(rng.uniform(0.0, 1.5))
            lvl = dart_level(u, inv, shift, 64)
            # membership in [q**-(lvl+1+shift), q**-(lvl+shift)), with clamping
            if 0 < lvl < 64:
                assert q ** -(lvl + 1 + shift) <= u < q ** -(lvl + shift)
            elif lvl == 0:
                assert u >= q ** -(1 + shift)
            else:
                assert u < q ** -(64 + shift)


def test_hash_to_dart_deterministic():
    params = PartitionParams(q=2.0, m=16)
    offsets = zero_offsets(16)
    a = hash_to_dart(123456789, params, offsets, seed=42)
    b = hash_to_dart(123456789, params, offsets, seed=42)
    assert a == b
    c = hash_to_dart(123456789, params, offsets, seed=43)
    d = hash_to_dart(123456790, params, offsets, seed=42)
    assert c != a or d != a  # different seed or element moves the dart


def test_bulk_matches_scalar_path():
    params = PartitionParams(q=2.91, m=7, sawtooth=True)
    offsets = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    iotas = np.array([params.iota(j) for j in range(7)])
    shifts = np.array(offsets)
    cols, lvls = bulk_darts(
        np.uint64(99), 20000, 7, 1.0 / math.log(2.91), shifts, iotas, 64
    )
    for e in (0, 1, 5000, 19999):
        d = hash_to_dart(e + 1, params, offsets, seed=99)
        assert (d.column, d.level) == (cols[e], lvls[e])


def test_level_distribution_chi_square():
    # q=2, m=16, no offsets: Pr(level=k) = 2**-(k+1) for k <= 10
    n = 1_000_000
    m = 16
    shifts = np.zeros(m)
    iotas = np.zeros(m)
    cols, lvls = bulk_darts(np.uint64(2024), n, m, 1.0 / math.log(2.0), shifts, iotas, 64)
    kmax = 10
    observed = np.bincount(np.minimum(lvls, kmax + 1), minlength=kmax + 2)
    probs = np.array([2.0 ** -(k + 1) for k in range(kmax + 1)] + [2.0 ** -(kmax + 1)])
    chi2, p = stats.chisquare(observed, probs * n)
    assert p > 0.001, f"level distribution rejected: chi2={chi2}, p={p}"

    # column uniformity within 4 sigma
    counts = np.bincount(cols, minlength=m)
    sigma = math.sqrt(n * (1 / m) * (1 - 1 / m))
    assert np.all(np.abs(counts - n / m) < 4 * sigma)


@pytest.mark.parametrize(
    "q,m,sawtooth,offsets",
    [
        (2.0, 1, False, None),
        (2.0, 4, False, None),
        (2.91, 6, True, "curtain"),
        (math.e, 8, False, "uniform"),
        (3.5, 5, False, "uniform"),
    ],
)
def test_mass_conservation(q, m, sawtooth, offsets):
    params = PartitionParams(q=q, m=m, sawtooth=sawtooth, max_level=64)
    if offsets == "uniform":
        r = make_uniform_offsets(m)
    elif offsets == "curtain":
        r = make_curtain_offsets(m)
    else:
        r = zero_offsets(m)
    total = sum(
        cell_area(lvl, j, params, r)
        for j in range(m)
        for lvl in range(params.max_level + 1)
    )
    assert abs(total - 1.0) < 1e-12


def test_cell_area_examples():
    p1 = PartitionParams(q=2.0, m=1)
    assert cell_area(0, 0, p1, zero_offsets(1)) == pytest.approx(0.5, abs=1e-15)
    p2 = PartitionParams(q=2.0, m=2)
    assert cell_area(1, 0, p2, zero_offsets(2)) == pytest.approx(0.125, abs=1e-15)
    # one column telescopes to 1/m
    col_total = sum(cell_area(lvl, 0, p2, zero_offsets(2)) for lvl in range(65))
    assert col_total == pytest.approx(0.5, abs=1e-14)


def test_cell_area_range_checks():
    p = PartitionParams(q=2.0, m=2, max_level=8)
    with pytest.raises(ValueError):
        cell_area(9, 0, p, zero_offsets(2))
    with pytest.raises(ValueError):
        cell_area(0, 2, p, zero_offsets(2))


def test_level_probability_matches_cell_area():
    # empirical Pr(level) for a smoothed sawtooth column vs cell_area
    q, m = 2.91, 2
    params = PartitionParams(q=q, m=m, sawtooth=True, max_level=64)
    r = make_curtain_offsets(m)
    n = 400_000
    iotas = np.array([params.iota(j) for j in range(m)])
    shifts = np.array(r)
    cols, lvls = bulk_darts(np.uint64(5), n, m, 1.0 / math.log(q), shifts, iotas, 64)
    for j in range(m):
        sel = lvls[cols == j]
        for lvl in range(3):
            want = cell_area(lvl, j, params, r) * m  # conditional on the column
            got = np.mean(sel == lvl)
            assert got == pytest.approx(want, abs=4 * math.sqrt(want / len(sel)) + 1e-9)
