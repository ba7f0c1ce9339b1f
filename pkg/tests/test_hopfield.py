"""Hebbian networks: coupling structure and pattern storage."""

import numpy as np
import pytest

from glassmem.hopfield import capacity_sweep, hebbian, stored_memory_count
from glassmem.spins import random_spins


def test_hebbian_structure_fuzz():
    rng = np.random.default_rng(41)
    for _ in range(300):
        n = int(rng.integers(2, 24))
        p = int(rng.integers(1, 9))
        patterns = random_spins(n, rng, trials=p)
        J = hebbian(patterns)
        assert np.array_equal(J, J.T)
        assert np.all(np.diag(J) == 0.0)
        off = J[~np.eye(n, dtype=bool)]
        assert np.all(off == np.round(off))          # integer entries
        assert np.all(np.abs(off) <= p)              # bounded by P
        assert np.all((off - p) % 2 == 0)            # parity of P


def test_hebbian_sign_flip_invariance_and_permutation():
    rng = np.random.default_rng(42)
    patterns = random_spins(12, rng, trials=4)
    J = hebbian(patterns)
    flips = np.where(rng.random(4) < 0.5, -1.0, 1.0)
    assert np.array_equal(hebbian(patterns * flips[:, None]), J)
    perm = rng.permutation(12)
    assert np.array_equal(hebbian(patterns[:, perm]), J[np.ix_(perm, perm)])
    with pytest.raises(ValueError):
        hebbian(np.array([[0.5, -1.0]]))


def test_single_pattern_always_stored():
    rng = np.random.default_rng(43)
    for _ in range(20):
        xi = random_spins(10, rng)
        assert stored_memory_count(xi, trials=30, rng=rng) == 1


def test_duplicate_patterns_count_once():
    rng = np.random.default_rng(44)
    xi = random_spins(12, rng)
    patterns = np.vstack([xi, xi])
    assert stored_memory_count(patterns, trials=30, rng=rng) == 1


def test_capacity_sweep_records():
    rows = capacity_sweep(10, [1, 2], realizations=25, trials=30, rng=45)
    assert [r["p"] for r in rows] == [1, 2]
    for r in rows:
        assert 0.0 <= r["mean"] <= r["p"]
        assert r["realizations"] == 25
        assert r["n"] == 10
    # one embedded pattern is always recallable
    assert rows[0]["mean"] == 1.0


def test_capacity_sweep_seed_determinism():
    a = capacity_sweep(8, [3], realizations=30, trials=30, rng=46)
    b = capacity_sweep(8, [3], realizations=30, trials=30, rng=46)
    assert a == b


def test_known_peak_region_smoke():
    # moderate-statistics check that P = 4 stores about 3.5 patterns at n = 16
    rows = capacity_sweep(16, [4], realizations=300, trials=100, rng=47)
    assert 3.2 < rows[0]["mean"] < 3.9
