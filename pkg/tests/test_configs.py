"""Counting-measure configurations and their deterministic operators."""

import json

import numpy as np
import pytest

from palmforge import (
    MERGE_TOL,
    collision_count,
    cyclic_group,
    displacement_table,
    integer_lattice,
    neighbors_of_zero,
    perturb,
    point_config,
    real_line,
    sample_field,
    translate,
    voronoi_zero_volume,
)
from palmforge.configs import config_from_json, config_to_json
from palmforge.errors import (
    IncompleteTableError,
    InsufficientWindowError,
    SimplicityError,
)
from palmforge.increments import NegationField, TwoSidedBrownian, shift_table
from palmforge.streams import substream


def lattice_config(atoms, radius=5):
    domain = integer_lattice()
    return point_config(domain, domain.centered_window(radius), atoms)


def real_config(atoms, radius=5.0):
    domain = real_line()
    return point_config(domain, domain.centered_window(radius), atoms)


# -- construction -----------------------------------------------------------

def test_atoms_sorted_and_merged():
    c = real_config([(1.0, 1.0), (-1.0, 2.0), (1.0 + 1e-12, 3.0)])
    assert c.atoms() == [(-1.0, 2.0), (1.0, 4.0)]


def test_positive_weights_required():
    with pytest.raises(ValueError):
        real_config([(0.0, 0.0)])


def test_atoms_must_fit_window():
    with pytest.raises(ValueError):
        lattice_config([(9, 1.0)], radius=5)


def test_is_simple():
    assert lattice_config([(0, 1.0), (1, 1.0)]).is_simple()
    assert not lattice_config([(0, 2.0)]).is_simple()


# -- translate ---------------------------------------------------------------

def test_translate_by_zero_is_identity():
    c = real_config([(-0.5, 1.0), (0.25, 2.0)])
    assert translate(c, 0.0).atoms() == c.atoms()


def test_translate_recenters_atom():
    c = lattice_config([(0, 1.0), (1, 1.0)])
    assert translate(c, 1).atoms() == [(-1, 1.0), (0, 1.0)]


def test_translate_cyclic_wraps():
    domain = cyclic_group(4)
    c = point_config(domain, domain.full_window(), [(0, 1.0), (1, 1.0)])
    assert translate(c, 1).atoms() == [(0, 1.0), (3, 1.0)]


def test_translate_composition_law():
    rng = substream(10, "translate-comp")
    for domain in (real_line(), integer_lattice(), cyclic_group(11)):
        w = domain.centered_window(20) if not domain.is_compact else domain.full_window()
        locs = np.unique(domain.sample_haar(w, rng, size=8))
        c = point_config(domain, w, [(loc, 1.0) for loc in locs])
        s, t = domain.sample_haar(w, rng), domain.sample_haar(w, rng)
        left = translate(translate(c, s), t)
        right = translate(c, domain.add(s, t))
        assert left.same_atoms(right)


# -- perturb -----------------------------------------------------------------

def test_perturb_full_cyclic_group_collapses_to_origin():
    domain = cyclic_group(4)
    c = point_config(domain, domain.full_window(), [(k, 1.0) for k in range(4)])
    d = displacement_table(domain, [(k, (-k) % 4) for k in range(4)])
    out = perturb(c, d)
    assert out.atoms() == [(0, 4.0)]


def test_perturb_zero_table_is_identity():
    c = lattice_config([(-2, 1.0), (0, 2.5), (3, 1.0)])
    d = displacement_table(integer_lattice(), [(-2, 0), (0, 0), (3, 0)])
    assert perturb(c, d).atoms() == c.atoms()


def test_perturb_pointwise_example():
    c = lattice_config([(-1, 1.0), (0, 1.0), (1, 1.0)])
    d = displacement_table(integer_lattice(), [(-1, 2), (0, 0), (1, -3)])
    assert perturb(c, d).atoms() == [(-2, 1.0), (0, 1.0), (1, 1.0)]


def test_perturb_requires_complete_table():
    c = lattice_config([(-1, 1.0), (0, 1.0)])
    d = displacement_table(integer_lattice(), [(0, 0)])
    with pytest.raises(IncompleteTableError):
        perturb(c, d)


def test_perturb_enlarges_window():
    c = lattice_config([(0, 1.0), (5, 1.0)], radius=5)
    d = displacement_table(integer_lattice(), [(0, 0), (5, 9)])
    out = perturb(c, d)
    assert out.window.hi >= 14
    assert out.atoms() == [(0, 1.0), (14, 1.0)]


def test_perturb_preserves_total_mass():
    rng = substream(11, "mass")
    domain = real_line()
    for _ in range(50):
        n = int(rng.integers(2, 30))
        locs = np.sort(rng.uniform(-8, 8, n))
        c = point_config(domain, domain.centered_window(10),
                         (locs, rng.uniform(0.5, 2.0, n)))
        table = sample_field(TwoSidedBrownian(1.0), domain,
                             np.union1d(c.locations, [0.0]), rng)
        assert perturb(c, table).total_mass() == pytest.approx(c.total_mass(), rel=1e-12)


def test_compatibility_identity_random_cases():
    # translate(perturb(c, d), t + d(t)) == perturb(translate(c, t), shifted d)
    rng = substream(12, "compat")
    domain = real_line()
    for _ in range(50):
        n = int(rng.integers(2, 12))
        locs = np.sort(rng.uniform(-9, 9, n))
        c = point_config(domain, domain.centered_window(10),
                         (locs, np.ones(n)))
        table_locs = np.union1d(c.locations, [0.0])
        d = sample_field(TwoSidedBrownian(0.7), domain, table_locs, rng)
        t = table_locs[int(rng.integers(0, len(table_locs)))].item()
        left = translate(perturb(c, d), t + d.at(t))
        right = perturb(translate(c, t), shift_table(d, t))
        assert left.same_atoms(right, tol=1e-12)


# -- collision_count ---------------------------------------------------------

def brute_force_collisions(locations, displaced, tol):
    """Enumeration oracle: ordered pairs of distinct atoms landing together."""
    count = 0
    for i in range(len(locations)):
        for j in range(len(locations)):
            if i != j and abs(displaced[i] - displaced[j]) <= tol:
                count += 1
    return count


def test_collision_count_cyclic_negation_oracle():
    domain = cyclic_group(4)
    c = point_config(domain, domain.full_window(), [(k, 1.0) for k in range(4)])
    d = displacement_table(domain, [(k, (-k) % 4) for k in range(4)])
    displaced = [(k + (-k) % 4) % 4 for k in range(4)]
    expected = brute_force_collisions(range(4), displaced, 0)
    assert expected == 12  # m*(m-1): every atom lands at zero
    assert collision_count(c, d) == expected


def test_collision_count_zero_field_is_zero():
    c = lattice_config([(-1, 1.0), (0, 1.0), (2, 1.0)])
    d = displacement_table(integer_lattice(), [(-1, 0), (0, 0), (2, 0)])
    assert collision_count(c, d) == 0


def test_collision_count_swap_example_oracle():
    c = lattice_config([(0, 1.0), (1, 1.0)])
    d = displacement_table(integer_lattice(), [(0, 1), (1, 0)])
    displaced = [1, 1]
    expected = brute_force_collisions([0, 1], displaced, 0)
    assert expected == 2
    assert collision_count(c, d) == expected


def test_collision_count_random_against_oracle():
    rng = substream(13, "collide")
    domain = integer_lattice()
    for _ in range(30):
        locs = np.unique(rng.integers(-6, 7, 8))
        c = point_config(domain, domain.centered_window(8),
                         (locs, np.ones(len(locs))))
        disps = rng.integers(-3, 4, len(locs))
        table_entries = list(zip(locs.tolist(), disps.tolist()))
        if 0 not in locs:
            table_entries.append((0, 0))
        else:
            table_entries = [(l, 0 if l == 0 else d) for l, d in table_entries]
        d = displacement_table(domain, table_entries)
        displaced = [l + d.at(l) for l in locs.tolist()]
        assert collision_count(c, d) == brute_force_collisions(locs, displaced, 0)


def test_collision_count_rejects_non_simple():
    c = lattice_config([(0, 2.0)])
    d = displacement_table(integer_lattice(), [(0, 0)])
    with pytest.raises(SimplicityError):
        collision_count(c, d)


def test_no_collisions_implies_simple_perturbation():
    rng = substream(14, "simple")
    domain = real_line()
    for _ in range(30):
        locs = np.sort(rng.uniform(-8, 8, 10))
        c = point_config(domain, domain.centered_window(10), (locs, np.ones(10)))
        d = sample_field(TwoSidedBrownian(0.5), domain,
                         np.union1d(locs, [0.0]), rng)
        if collision_count(c, d) == 0:
            assert perturb(c, d).is_simple()


# -- neighbors / Voronoi -----------------------------------------------------

def test_neighbors_of_zero_examples():
    lattice = lattice_config([(k, 1.0) for k in range(-3, 4)], radius=3)
    assert neighbors_of_zero(lattice) == (-1, 0, 1)
    assert neighbors_of_zero(real_config([(-0.4, 1), (0.0, 1), (0.7, 1)])) == (-0.4, 0.0, 0.7)
    assert neighbors_of_zero(real_config([(-2.0, 1), (3.0, 1), (5.0, 1)])) == (-2.0, 3.0, 5.0)


def test_neighbors_of_zero_insufficient_window():
    with pytest.raises(InsufficientWindowError):
        neighbors_of_zero(real_config([(0.5, 1.0), (1.0, 1.0)]))
    with pytest.raises(InsufficientWindowError):
        neighbors_of_zero(real_config([(-1.0, 1.0), (0.0, 1.0)]))


def test_voronoi_zero_volume_examples():
    lattice = lattice_config([(k, 1.0) for k in range(-3, 4)], radius=3)
    assert voronoi_zero_volume(lattice) == 1.0
    c = real_config([(-0.4, 1.0), (0.0, 1.0), (0.8, 1.0)])
    assert voronoi_zero_volume(c) == pytest.approx(0.6)


def test_voronoi_requires_zero_atom():
    with pytest.raises(ValueError):
        voronoi_zero_volume(real_config([(-1.0, 1.0), (1.0, 1.0)]))


def test_voronoi_poisson_mean_matches_mc_oracle():
    # Gaps on each side of zero are Exp(lam); the zero cell has mean
    # length 1/lam.  Brute-force oracle drawn with raw numpy.
    lam, n = 2.0, 10_000
    rng = substream(15, "voronoi-oracle")
    left = rng.exponential(1.0 / lam, n)
    right = rng.exponential(1.0 / lam, n)
    oracle = (left + right) / 2.0
    se = oracle.std(ddof=1) / np.sqrt(n)
    assert abs(oracle.mean() - 0.5) <= 3 * se  # 1/lam = 0.5

    domain = real_line()
    vols = np.empty(n)
    for i in range(n):
        r = substream(16, "voronoi-cfg", i)
        pts = np.sort(np.concatenate((
            [0.0], r.exponential(1.0 / lam, 4).cumsum(),
            -r.exponential(1.0 / lam, 4).cumsum())))
        c = point_config(domain, domain.centered_window(max(10, np.abs(pts).max() + 1)),
                         (pts, np.ones(len(pts))))
        vols[i] = voronoi_zero_volume(c)
    se = vols.std(ddof=1) / np.sqrt(n)
    assert abs(vols.mean() - 0.5) <= 3 * se


# -- serialization -----------------------------------------------------------

def test_config_json_round_trip():
    for c in (
        lattice_config([(-2, 1.0), (0, 2.5)]),
        real_config([(-0.5, 1.0), (0.25, 1.0)]),
        point_config(cyclic_group(6), cyclic_group(6).full_window(), [(0, 1.0), (4, 2.0)]),
    ):
        data = json.loads(json.dumps(config_to_json(c)))
        back = config_from_json(data)
        assert back.domain == c.domain
        assert back.atoms() == c.atoms()
