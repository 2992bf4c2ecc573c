"""Planar measure tests.

Smearing radii are rechecked with mpmath arbitrary-precision arithmetic, and
the close-pair mass of the uniform disk is rechecked against a quadrature of
the classical pair-distance density.  Neither route shares code with the
module under test.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from dtlab import measures
from dtlab.measures import CompactMeasure


def mp_radius(a: float, c: float, eps: float) -> float:
    """High precision smearing radius: c * sqrt(a / log(1 + a/eps^2))."""
    with mpmath.workdps(40):
        a_, c_, e_ = mpmath.mpf(a), mpmath.mpf(c), mpmath.mpf(eps)
        return float(c_ * mpmath.sqrt(a_ / mpmath.log1p(a_ / e_**2)))


def disk_pair_distance_density(s: float) -> float:
    """Density of |z - w| for independent uniform points in the unit disk."""
    return (4.0 * s / math.pi) * (
        math.acos(s / 2.0) - (s / 2.0) * math.sqrt(1.0 - s * s / 4.0)
    )


# ----------------------------------------------------------------------------
# Smearing radius


def test_unit_atom_radius_against_mpmath():
    assert measures.perturbation_radius(1.0, 1.0, 1.0) == pytest.approx(
        mp_radius(1.0, 1.0, 1.0), abs=1e-14
    )
    assert measures.perturbation_radius(1.0, 1.0, 0.5) == pytest.approx(
        mp_radius(1.0, 1.0, 0.5), abs=1e-14
    )
    # Frozen values so a regression cannot hide inside the oracle call.
    assert measures.perturbation_radius(1.0, 1.0, 1.0) == pytest.approx(
        1.2011224087864498, abs=1e-12
    )
    assert measures.perturbation_radius(1.0, 1.0, 0.5) == pytest.approx(
        0.7882480158932288, abs=1e-12
    )


def test_fractional_atom_radius_against_mpmath():
    assert measures.perturbation_radius(0.5, 1.0, 0.5) == pytest.approx(
        mp_radius(0.5, 1.0, 0.5), abs=1e-14
    )
    assert measures.perturbation_radius(0.5, 1.0, 0.5) == pytest.approx(
        math.sqrt(0.5 / math.log(3.0)), abs=1e-12
    )


@given(
    st.floats(0.01, 0.6),
    st.floats(0.1, 4.0),
    st.floats(0.01, 2.0),
    st.floats(1.001, 1.5),
)
@settings(max_examples=80, deadline=None)
def test_radius_monotone_in_every_argument(a, c, eps, grow):
    base = measures.perturbation_radius(a, c, eps)
    assert measures.perturbation_radius(a * grow, c, eps) > base
    assert measures.perturbation_radius(a, c * grow, eps) > base
    assert measures.perturbation_radius(a, c, eps * grow) > base


def test_radius_scales_linearly_in_c():
    r1 = measures.perturbation_radius(0.3, 1.0, 0.2)
    r2 = measures.perturbation_radius(0.3, 2.5, 0.2)
    assert r2 == pytest.approx(2.5 * r1, rel=1e-14)


# ----------------------------------------------------------------------------
# Smearing a measure


def test_smear_turns_atoms_into_disks():
    mu = measures.parse_measure_spec(["atom:0.5,0,0.5", "atom:-1,1,0.5"])
    pm = measures.smear_atoms(mu, c=1.0, eps=0.5)
    parts = list(pm.smeared.components())
    assert pm.smeared.atom_mass == 0
    assert len(parts) == 2
    for (part, mass), radius in zip(parts, pm.radii):
        assert mass == pytest.approx(0.5)
        assert part.radius == pytest.approx(radius)
        assert radius == pytest.approx(mp_radius(0.5, 1.0, 0.5), abs=1e-12)


def test_smear_preserves_mass_and_mean():
    mu = measures.parse_measure_spec(
        ["atom:2,0,0.25", "atom:-1,-1,0.25", "disk:0,0,1,0.5"]
    )
    pm = measures.smear_atoms(mu, c=0.8, eps=0.1)
    total = sum(mass for _, mass in pm.smeared.components())
    assert total == pytest.approx(1.0, abs=1e-12)
    assert measures.measure_mean(pm) == pytest.approx(
        measures.measure_mean(mu), abs=1e-12
    )


def test_smear_leaves_diffuse_parts_alone():
    mu = CompactMeasure.uniform_disk(0j, 2.0)
    pm = measures.smear_atoms(mu, c=1.0, eps=0.3)
    (part, mass), = pm.smeared.components()
    assert mass == pytest.approx(1.0)
    assert part.radius == pytest.approx(2.0)
    assert pm.radii == ()


# ----------------------------------------------------------------------------
# Close-pair masses and the overlap bound


def test_disk_close_pair_mass_against_quadrature():
    mu = CompactMeasure.uniform_disk(0j, 1.0)
    for delta in (0.05, 0.1, 0.3, 0.7):
        oracle, err = quad(disk_pair_distance_density, 0.0, delta)
        assert err < 1e-10
        assert measures.diffuse_product_mass(mu, delta) == pytest.approx(
            oracle, abs=1e-9
        )


def test_disk_close_pair_mass_scales_with_radius():
    # Distances scale with the disk radius, so mass at (R, delta) equals
    # mass at (1, delta/R).
    big = measures.diffuse_product_mass(
        CompactMeasure.uniform_disk(0j, 2.0), 0.2
    )
    unit = measures.diffuse_product_mass(
        CompactMeasure.uniform_disk(0j, 1.0), 0.1
    )
    assert big == pytest.approx(unit, rel=1e-12)


def test_overlap_bound_point_mass_closed_forms():
    delta0 = CompactMeasure.dirac(0.0)
    # A wide tube cannot exclude anything: min(1, .) saturates at 1 and the
    # ordered-pair count doubles it.
    assert measures.overlap_bound(delta0, 1.0, 1.0, 10.0) == pytest.approx(2.0)
    # Thin tube: 2 * delta^2 * log(1 + eps^-2) at c = 1, eps = 1.
    assert measures.overlap_bound(delta0, 1.0, 1.0, 0.1) == pytest.approx(
        2.0 * 0.01 * math.log(2.0), rel=1e-12
    )


def test_overlap_bound_decreases_with_delta():
    mu = measures.parse_measure_spec(["atom:0,0,0.5", "disk:0,0,1,0.5"])
    vals = [measures.overlap_bound(mu, 1.0, 0.1, d) for d in (0.3, 0.1, 0.05)]
    assert vals[0] >= vals[1] >= vals[2]
    assert vals[2] > 0.0


# ----------------------------------------------------------------------------
# Quantile allocation and disk quantile points


def test_quantile_counts_largest_remainder():
    assert measures.quantile_counts([0.5, 0.5], 7) == [4, 3]
    assert measures.quantile_counts([0.3, 0.7], 10) == [3, 7]
    assert measures.quantile_counts([1.0], 5) == [5]


@given(
    st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
    st.integers(1, 200),
)
@settings(max_examples=80, deadline=None)
def test_quantile_counts_sum_and_proximity(raw, n):
    total = sum(raw)
    masses = [x / total for x in raw]
    counts = measures.quantile_counts(masses, n)
    assert sum(counts) == n
    assert all(c >= 0 for c in counts)
    for c, mass in zip(counts, masses):
        assert abs(c - n * mass) < 1.0 + 1e-9


def test_quantile_allocation_follows_component_order():
    mu = measures.parse_measure_spec(["atom:1,0,0.25", "disk:0,0,1,0.75"])
    assert measures.quantile_allocation(mu, 8) == [2, 6]


def test_disk_quantile_points_radial_midpoints():
    # Squared radii hit the exact midpoint grid (i - 1/2) / n, which is the
    # area quantile rule for a uniform disk.
    n = 256
    pts = measures.disk_quantile_points(0j, 1.0, n)
    r2 = np.sort(np.abs(pts) ** 2)
    assert np.max(np.abs(r2 - (np.arange(1, n + 1) - 0.5) / n)) < 1e-12


def test_disk_quantile_points_center_scale():
    pts = measures.disk_quantile_points(1 + 2j, 0.5, 64)
    base = measures.disk_quantile_points(0j, 1.0, 64)
    assert np.allclose(pts, 1 + 2j + 0.5 * base, atol=1e-12)
    assert abs(pts.mean() - (1 + 2j)) < 0.05


# ----------------------------------------------------------------------------
# Pair proximity of point sets


def test_pair_proximity_counts_ordered_distinct_pairs():
    pts = np.array([0.0, 0.0, 1.0, 2.0])
    # Only the duplicated origin sits within 0.5, two ordered pairs out of 16.
    assert measures.pair_proximity_mass(pts, 0.5) == pytest.approx(2 / 16)
    # Widening to 1.1 brings both origins next to 1.0 and 1.0 next to 2.0,
    # four unordered pairs in all, so eight of sixteen ordered pairs.
    assert measures.pair_proximity_mass(pts, 1.1) == pytest.approx(8 / 16)


def test_pair_proximity_extremes():
    same = np.zeros(8, dtype=complex)
    assert measures.pair_proximity_mass(same, 0.1) == pytest.approx(1 - 1 / 8)
    spread = np.arange(8).astype(complex)
    assert measures.pair_proximity_mass(spread, 0.5) == 0.0


def test_sampled_proximity_respects_overlap_bound():
    mu = measures.parse_measure_spec(["atom:0,0,0.5", "disk:0,0,1,0.5"])
    c, eps, delta, n = 1.0, 0.5, 0.1, 2048
    pm = measures.smear_atoms(mu, c, eps)
    pts = measures.sample_measure(pm, n, seed=3)
    bound = measures.overlap_bound(mu, c, eps, delta)
    observed = measures.pair_proximity_mass(pts, delta)
    se = math.sqrt(max(bound, 1e-6) / (n * (n - 1)))
    assert observed <= bound + 3 * se + 0.01


# ----------------------------------------------------------------------------
# Sampling


def test_sample_measure_is_deterministic():
    mu = CompactMeasure.uniform_disk(0j, 1.0)
    a = measures.sample_measure(mu, 128, seed=2)
    b = measures.sample_measure(mu, 128, seed=2)
    c = measures.sample_measure(mu, 128, seed=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_measure_modes_differ_but_agree_in_law():
    mu = CompactMeasure.uniform_disk(0j, 1.0)
    q = measures.sample_measure(mu, 4096, seed=2, mode="quantile")
    iid = measures.sample_measure(mu, 4096, seed=2, mode="iid")
    assert not np.array_equal(q, iid)
    # Mean radius of the uniform unit disk is 2/3.
    assert np.abs(q).mean() == pytest.approx(2 / 3, abs=0.01)
    assert np.abs(iid).mean() == pytest.approx(2 / 3, abs=0.03)


def test_sample_measure_atoms_in_quantile_mode():
    mu = measures.parse_measure_spec(["atom:2,0,0.5", "atom:-1,0,0.5"])
    pts = measures.sample_measure(mu, 6, seed=0)
    assert np.allclose(np.sort_complex(pts), [-1, -1, -1, 2, 2, 2])


def test_support_radius_covers_all_parts():
    mu = measures.parse_measure_spec(["atom:2,0,0.5", "disk:0,1,1.5,0.5"])
    # Disk reaches |i| + 1.5 ~ 2.5, beyond the atom at 2.
    assert measures.support_radius(mu) == pytest.approx(2.5)


# ----------------------------------------------------------------------------
# Spec grammar


def test_parse_atom_and_disk_round_trip():
    mu = measures.parse_measure_spec(["atom:0.5,0,0.5", "disk:0,0,1,0.5"])
    (z, am), (disk, dm) = mu.components()
    assert z == 0.5 + 0j and am == 0.5
    assert disk.radius == 1.0 and dm == 0.5


def test_parse_empirical_csv(tmp_path):
    csv_path = tmp_path / "pts.csv"
    csv_path.write_text("# header comment\n0.0,0.0\n1.0,-1.0\n")
    mu = measures.parse_measure_spec(
        ["empirical:pts.csv,1"], base_dir=tmp_path
    )
    (part, mass), = mu.components()
    assert mass == 1.0
    assert np.array_equal(part.points, np.array([0j, 1 - 1j]))


def test_parse_rejects_bad_specs(tmp_path):
    for bad in (
        [],
        ["blob:1,2"],
        ["atom:0,0"],
        ["disk:0,0,1"],
        ["atom:x,0,1"],
        ["empirical:nope.csv"],
    ):
        with pytest.raises(ValueError):
            measures.parse_measure_spec(bad, base_dir=tmp_path)


def test_masses_must_sum_to_one():
    with pytest.raises(ValueError):
        measures.parse_measure_spec(["atom:0,0,0.4", "atom:1,0,0.4"])
