"""Spin-core: energies, overlap metric, corruptions, serialization."""

import numpy as np
import pytest

from glassmem.spins import (
    apply_errors,
    apply_errors_batch,
    canonicalize,
    delta_energy,
    delta_energy_all,
    flip_sites,
    ising_energy,
    load_coupling,
    load_spin_config,
    local_fields,
    normalize,
    overlap_distance,
    random_spins,
    require_coupling,
    save_coupling,
    save_spin_config,
    zero_diagonal,
)


def energy_reference(J, s):
    """Independent route: explicit double loop over i != j."""
    n = len(s)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += J[i, j] * s[i] * s[j]
    return -0.5 * total


def random_symmetric(n, rng, diag=False):
    J = rng.standard_normal((n, n))
    J = (J + J.T) / 2
    if not diag:
        np.fill_diagonal(J, 0.0)
    return J


def test_energy_matches_double_loop_reference():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = rng.integers(2, 12)
        J = random_symmetric(n, rng, diag=True)
        s = random_spins(n, rng)
        assert ising_energy(J, s) == pytest.approx(energy_reference(J, s), rel=1e-12)


def test_energy_ignores_diagonal_and_global_flip():
    rng = np.random.default_rng(8)
    for _ in range(200):
        n = rng.integers(2, 20)
        J = random_symmetric(n, rng)
        Jd = J + np.diag(rng.standard_normal(n))
        s = random_spins(n, rng)
        assert ising_energy(J, s) == pytest.approx(ising_energy(Jd, s), abs=1e-12)
        assert ising_energy(J, s) == pytest.approx(ising_energy(J, -s), rel=1e-12)


def test_delta_energy_identity_fuzz():
    # Delta-E_k must equal E(flip_k(s)) - E(s); 10k (config, site) cases
    rng = np.random.default_rng(9)
    cases = 0
    while cases < 10_000:
        n = int(rng.integers(2, 24))
        J = random_symmetric(n, rng, diag=True)
        for s in random_spins(n, rng, trials=8):
            dE = delta_energy_all(J, s)
            for k in range(n):
                expected = ising_energy(J, flip_sites(s, [k])) - ising_energy(J, s)
                assert dE[k] == pytest.approx(expected, rel=1e-9, abs=1e-9)
                assert delta_energy(J, s, k) == pytest.approx(expected, rel=1e-9, abs=1e-9)
            cases += n


def test_local_fields_exclude_diagonal():
    rng = np.random.default_rng(10)
    J = random_symmetric(6, rng, diag=True)
    s = random_spins(6, rng)
    h = local_fields(J, s)
    for k in range(6):
        manual = sum(J[k, j] * s[j] for j in range(6) if j != k)
        assert h[k] == pytest.approx(manual, rel=1e-12)


def test_overlap_distance_is_flip_count():
    rng = np.random.default_rng(11)
    for _ in range(500):
        n = int(rng.integers(2, 40))
        a = random_spins(n, rng)
        k = int(rng.integers(0, n + 1))
        sites = rng.choice(n, size=k, replace=False)
        b = flip_sites(a, sites)
        d = overlap_distance(a / np.sqrt(n), b / np.sqrt(n))
        assert d == pytest.approx(min(k, n - k), abs=1e-9)


def test_overlap_distance_twin_blind_and_validated():
    rng = np.random.default_rng(12)
    a = normalize(rng.standard_normal(9))
    b = normalize(rng.standard_normal(9))
    assert overlap_distance(a, b) == pytest.approx(overlap_distance(a, -b), abs=1e-12)
    assert overlap_distance(a, a) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        overlap_distance(a, 2.0 * b)
    with pytest.raises(ValueError):
        overlap_distance(np.ones(4), np.ones(4))  # binary but not rescaled


def test_apply_errors_flips_exactly_e_distinct_sites():
    rng = np.random.default_rng(13)
    for _ in range(400):
        n = int(rng.integers(1, 30))
        e = int(rng.integers(0, n + 1))
        s = random_spins(n, rng)
        out = apply_errors(s, e, rng)
        assert int((out != s).sum()) == e
    with pytest.raises(ValueError):
        apply_errors(random_spins(5, rng), 6, rng)


def test_apply_errors_twice_on_same_sites_is_identity():
    rng = np.random.default_rng(14)
    s = random_spins(12, rng)
    sites = [0, 3, 7]
    assert np.array_equal(flip_sites(flip_sites(s, sites), sites), s)


def test_apply_errors_site_choice_is_uniform():
    rng = np.random.default_rng(15)
    n, e, reps = 10, 3, 20_000
    s = np.ones(n)
    flips = (apply_errors_batch(s, e, reps, rng) != s).sum(axis=0)
    expected = reps * e / n
    # binomial 5-sigma band
    sigma = np.sqrt(reps * (e / n) * (1 - e / n))
    assert np.all(np.abs(flips - expected) < 5 * sigma)


def test_apply_errors_batch_rows_match_single():
    rng = np.random.default_rng(16)
    s = random_spins(20, rng)
    batch = apply_errors_batch(s, 4, 300, rng)
    assert batch.shape == (300, 20)
    assert np.all((batch != s).sum(axis=1) == 4)


def test_canonicalize():
    s = np.array([-1.0, 1.0, -1.0])
    c = canonicalize(s)
    assert c[0] == 1.0
    assert np.array_equal(canonicalize(-s), c)
    assert np.array_equal(canonicalize(c), c)


def test_spin_config_roundtrip(tmp_path):
    rng = np.random.default_rng(17)
    p = tmp_path / "spins.txt"
    s = random_spins(23, rng)
    save_spin_config(p, s)
    assert p.read_text().count("\n") == 1
    assert np.array_equal(load_spin_config(p), s)
    v = normalize(rng.standard_normal(9))
    save_spin_config(p, v)
    assert np.array_equal(load_spin_config(p), v)  # bit-exact via repr


@pytest.mark.parametrize("name", ["J.csv", "J.npy"])
def test_coupling_roundtrip_bit_exact(tmp_path, name):
    rng = np.random.default_rng(18)
    J = random_symmetric(17, rng, diag=True)
    J[0, 1] = J[1, 0] = 1e-300  # denormal-adjacent values survive %.17g
    p = tmp_path / name
    save_coupling(p, J)
    back = load_coupling(p)
    assert back.shape == J.shape
    assert np.array_equal(back, J)


def test_coupling_validation():
    bad = np.arange(9.0).reshape(3, 3)
    with pytest.raises(ValueError):
        require_coupling(bad)
    with pytest.raises(ValueError):
        require_coupling(np.zeros((2, 3)))
    J = np.array([[5.0, 1.0], [1.0, 5.0]])
    assert np.all(np.diag(zero_diagonal(J)) == 0.0)
    assert J[0, 0] == 5.0  # input untouched
