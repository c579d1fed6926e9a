"""The invariance verifier, stationarity test, ergodicity diagnostic,
and exact identity checks."""

import math

import numpy as np
import pytest

from palmforge import (
    TwoSidedBrownian,
    ZeroField,
    integer_lattice,
    point_config,
    real_line,
)
from palmforge.errors import SupportBiasError
from palmforge.increments import sample_field
from palmforge.palm import (
    BatchRole,
    GammaGaps,
    LatticePalm,
    PoissonPalm,
    RenewalPalm,
    SampleBatch,
    make_palm_batch,
    perturb_palm,
    sample_lattice_palm,
    shifted_lattice_pseudo_palm,
)
from palmforge.streams import substream
from palmforge.verify import (
    LaplaceBump,
    canonical_battery,
    ergodic_average_decay,
    lemma_identity_check,
    mecke_battery,
    mecke_residual,
    mecke_sides,
    stationarity_test,
)
from palmforge.configs import perturb, translate

R = real_line()


def slow_mecke_sides(config, f):
    """Independent oracle: both sides by plain Python loops over atoms."""
    atoms = config.atoms()

    def h_mass(shift):
        return sum(w * f.h(np.array([x - shift]))[0] for x, w in atoms)

    rhs = sum(w * f.g(np.array([x]))[0] for x, w in atoms) * math.exp(-h_mass(0.0))
    lhs = 0.0
    for t, w in atoms:
        g_val = f.g(np.array([-t]))[0]
        if g_val > 0:
            lhs += w * g_val * math.exp(-h_mass(t))
    return lhs, rhs


def test_canonical_battery_shape():
    fams = canonical_battery()
    assert len(fams) == 8
    assert len(set(fams)) == 8
    assert {f.g_center for f in fams} == {-2, 0, 2}
    assert {f.g_radius for f in fams} == {1, 2}
    assert {f.h_center for f in fams} == {0, 1}
    assert {f.h_height for f in fams} == {0.5, 1.0}


def test_test_function_bounded_by_max_g():
    f = LaplaceBump(0.0, 2.0, 1.0, 1.0, 1.0)
    rng = substream(50, "bound")
    for _ in range(200):
        locs = np.sort(rng.uniform(-8, 8, 12))
        c = point_config(R, R.centered_window(10), (locs, np.ones(12)))
        lhs, rhs = mecke_sides(c, f)
        bound = c.total_mass() * 1.0  # max g = 1, exp factor <= 1
        assert 0.0 <= lhs <= bound and 0.0 <= rhs <= bound


def test_mecke_sides_against_slow_oracle():
    rng = substream(51, "oracle")
    for f in canonical_battery():
        for _ in range(20):
            n = int(rng.integers(2, 15))
            locs = np.sort(rng.uniform(-8, 8, n))
            wts = rng.uniform(0.5, 2.0, n)
            c = point_config(R, R.centered_window(10), (locs, wts))
            fast = mecke_sides(c, f)
            slow = slow_mecke_sides(c, f)
            assert fast[0] == pytest.approx(slow[0], rel=1e-10)
            assert fast[1] == pytest.approx(slow[1], rel=1e-10)


def test_lattice_palm_residual_exactly_zero():
    batch = make_palm_batch(LatticePalm(), R.centered_window(16), 100, 52, "v0")
    for f in canonical_battery():
        residual, se = mecke_residual(batch, f)
        assert residual == 0.0 and se == 0.0
    report = mecke_battery(batch, scenario="lattice")
    assert report.passed and report.max_abs_z() == 0.0


def test_support_check_rejects_wide_function():
    batch = make_palm_batch(LatticePalm(), R.centered_window(6), 10, 53, "v1")
    wide = LaplaceBump(4.0, 2.0, 0.0, 1.0, 1.0)  # reach 6 > core radius 3
    with pytest.raises(SupportBiasError):
        mecke_residual(batch, wide)


def test_perturbed_batches_pass_battery():
    for source in (LatticePalm(), RenewalPalm(GammaGaps(2.0, 0.5))):
        batch = make_palm_batch(source, R.centered_window(16), 4_000, 54, "v2")
        perturbed = perturb_palm(batch, TwoSidedBrownian(0.5), 54, "v2")
        report = mecke_battery(perturbed, scenario="v2")
        assert report.passed, f"{source.label()}: max|z| = {report.max_abs_z():.2f}"


def test_poisson_palm_passes_battery():
    batch = make_palm_batch(PoissonPalm(2.0), R.centered_window(16), 4_000, 55, "v3")
    report = mecke_battery(batch, scenario="v3")
    assert report.passed


def control_batch(n, seed, scenario="vctl"):
    window = R.centered_window(16)
    items = []
    for i in range(n):
        rng = substream(seed, scenario, "palm", i)
        items.append((shifted_lattice_pseudo_palm(window, rng), 1.0))
    return SampleBatch(BatchRole.PALM, tuple(items), meta=scenario)


def test_control_expected_gap_quadrature_oracle():
    # Deterministic oracle: average both sides over a fine grid of the
    # lattice shift u.  The expected residual must be visibly nonzero for
    # at least one canonical function.
    window = R.centered_window(16)
    base = np.arange(-16, 16, dtype=float)  # +u stays inside the window
    gaps = []
    for f in canonical_battery():
        vals = []
        for u in np.linspace(0.0005, 0.9995, 1000):
            locs = np.sort(np.concatenate(([0.0], base + u)))
            c = point_config(R, window, (locs, np.ones(len(locs))))
            lhs, rhs = mecke_sides(c, f)
            vals.append(lhs - rhs)
        gaps.append(abs(np.mean(vals)))
    assert max(gaps) > 0.01


def test_control_battery_fails_with_large_z():
    report = mecke_battery(control_batch(2_000, 56), scenario="vctl")
    assert not report.passed
    assert report.max_abs_z() >= 5.0


def test_residual_se_halves_when_n_doubles():
    # Monte Carlo scaling: doubling n should halve the SE within 20%,
    # checked on the median ratio across 10 seed pairs.
    f = canonical_battery()[3]
    ratios = []
    for seed in range(57, 67):
        b1 = make_palm_batch(PoissonPalm(2.0), R.centered_window(16), 500, seed, "se1")
        b2 = make_palm_batch(PoissonPalm(2.0), R.centered_window(16), 1000, seed, "se2")
        p1 = perturb_palm(b1, TwoSidedBrownian(0.5), seed, "se1")
        p2 = perturb_palm(b2, TwoSidedBrownian(0.5), seed, "se2")
        _, se1 = mecke_residual(p1, f)
        _, se2 = mecke_residual(p2, f)
        ratios.append(se1 / se2)
    assert np.median(ratios) == pytest.approx(math.sqrt(2.0), rel=0.2)


# -- stationarity ------------------------------------------------------------

def lattice_stationary_batch(n, seed, sigma=None, scenario="st"):
    from palmforge.palm import invert_palm_realline

    batch = make_palm_batch(LatticePalm(), R.centered_window(16), n, seed, scenario)
    if sigma is not None:
        batch = perturb_palm(batch, TwoSidedBrownian(sigma), seed, scenario)
    return invert_palm_realline(batch, seed, scenario)


def test_stationarity_unit_lattice_counts_always_one():
    st = lattice_stationary_batch(300, 60)
    report = stationarity_test(st, (0.0, 0.37, 2.61), (0.0, 1.0), scenario="zu")
    assert report.passed
    for c, _ in st.items:
        inside = (c.locations >= 0.0) & (c.locations < 1.0)
        assert c.weights[inside].sum() == 1.0


def test_stationarity_inverted_perturbed_lattice_passes():
    st = lattice_stationary_batch(4_000, 61, sigma=0.5)
    report = stationarity_test(st, (0.0, 0.37, 2.61), (0.0, 1.0), scenario="inv")
    assert report.passed


def test_stationarity_rejects_relabeled_palm_batch():
    batch = make_palm_batch(PoissonPalm(2.0), R.centered_window(16), 4_000, 62, "rl")
    fake = SampleBatch(BatchRole.STATIONARY, batch.items, meta="relabel")
    report = stationarity_test(fake, (0.0, 0.37, 2.61), (0.0, 1.0), scenario="rl")
    assert not report.passed  # the bin straddling zero is overfull


def test_stationarity_power_warning():
    st = lattice_stationary_batch(50, 63)
    with pytest.warns(UserWarning, match="low power"):
        stationarity_test(st, (0.0, 0.5), (0.0, 1.0))


def test_stationarity_bin_outside_core_rejected():
    st = lattice_stationary_batch(120, 64)
    with pytest.raises(SupportBiasError):
        stationarity_test(st, (0.0, 9.0), (0.0, 1.0))


# -- ergodic diagnostic ------------------------------------------------------

def make_lattice_config_factory(seed, scenario, sigma=None, random_shift=True):
    def make(w_size, replica):
        window = R.centered_window(w_size)
        config = sample_lattice_palm(window)
        if sigma is not None:
            table = sample_field(TwoSidedBrownian(sigma), R, config.locations,
                                 substream(seed, scenario, w_size, "field", replica))
            config = perturb(config, table)
        if random_shift:
            above = config.locations[config.locations > 0]
            t = substream(seed, scenario, w_size, "invert", replica).uniform(
                0.0, float(above[0]))
            config = translate(config, t)
        return config
    return make

FUNCTIONAL = LaplaceBump(0.0, 1.0, 0.0, 1.0, 1.0)


def test_ergodic_variance_halves():
    make = make_lattice_config_factory(65, "erg", sigma=0.5)
    rows = ergodic_average_decay(make, FUNCTIONAL, [64.0, 256.0], 200)
    assert rows[1][1] <= rows[0][1] / 2.0


def test_ergodic_zero_field_reproduces_unperturbed_curve_exactly():
    # a zero field consumes no randomness, so the pipelines coincide
    make_plain = make_lattice_config_factory(66, "erg0", sigma=None)

    def make_zero(w_size, replica):
        window = R.centered_window(w_size)
        config = sample_lattice_palm(window)
        table = sample_field(ZeroField(), R, config.locations,
                             substream(66, "erg0", w_size, "field", replica))
        config = perturb(config, table)
        above = config.locations[config.locations > 0]
        t = substream(66, "erg0", w_size, "invert", replica).uniform(
            0.0, float(above[0]))
        return translate(config, t)

    rows_plain = ergodic_average_decay(make_plain, FUNCTIONAL, [32.0, 64.0], 50)
    rows_zero = ergodic_average_decay(make_zero, FUNCTIONAL, [32.0, 64.0], 50)
    assert rows_plain == rows_zero


def test_ergodic_degenerate_lattice_has_no_decay():
    # identical replicas: zero variance at every window, no decay signal
    make = make_lattice_config_factory(67, "ergd", sigma=None, random_shift=False)
    rows = ergodic_average_decay(make, FUNCTIONAL, [64.0, 256.0], 20)
    assert rows[0][1] == 0.0 and rows[1][1] == 0.0


# -- exact identities ---------------------------------------------------------

def test_lemma_identities_pass():
    passed, worst = lemma_identity_check(100, seed=0)
    assert passed
    assert worst <= 1e-12


def test_lemma_check_deterministic_given_seed():
    assert lemma_identity_check(25, seed=3) == lemma_identity_check(25, seed=3)


def test_negation_identity_cyclic_enumeration():
    # hand enumeration on Z_4 with the negation field, t = 1
    from palmforge import cyclic_group
    from palmforge.increments import NegationField, shift_table

    domain = cyclic_group(4)
    c = point_config(domain, domain.full_window(), [(0, 1.0), (1, 1.0), (3, 1.0)])
    table = sample_field(NegationField(), domain, np.arange(4), substream(0, "neg"))
    t = 1
    left = translate(perturb(c, table), domain.add(t, table.at(t)))
    right = perturb(translate(c, t), shift_table(table, t))
    # by hand: x + (-x) = 0 for every atom, so the whole configuration
    # collapses onto zero; t + B_t = 1 + 3 = 0 mod 4 leaves it in place
    assert left.atoms() == [(0, 3.0)]
    assert left.atoms() == right.atoms()


def test_zero_field_identity_reduces_to_translate_composition():
    from palmforge.increments import shift_table

    locs = np.array([-2.0, 0.0, 1.0])
    c = point_config(R, R.centered_window(3), (locs, np.ones(3)))
    d = sample_field(ZeroField(), R, locs, substream(1, "zf"))
    t = 1.0
    left = translate(perturb(c, d), t + d.at(t))
    right = perturb(translate(c, t), shift_table(d, t))
    assert left.same_atoms(translate(c, t))
    assert left.same_atoms(right)
