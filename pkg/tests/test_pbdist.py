"""Count distributions: enumeration oracle, binning, and summaries."""

import numpy as np
import pytest

import pbcount as pc
from oracles import bin_tail, brute_force_count_pmf


def test_pmf_matches_enumeration_oracle():
    rng = np.random.default_rng(101)
    for _ in range(200):
        p = rng.random(int(rng.integers(0, 11)))
        ours = pc.poisson_binomial_pmf(p).probs
        reference = brute_force_count_pmf(p)
        assert ours.size == p.size + 1
        assert np.abs(ours - reference).max() <= 1e-10


def test_empty_input_is_a_point_mass_at_zero():
    dist = pc.poisson_binomial_pmf([])
    assert dist.probs.tolist() == [1.0]
    assert dist.mean() == 0.0


def test_two_fair_coins():
    dist = pc.poisson_binomial_pmf([0.5, 0.5])
    assert dist.probs.tolist() == [0.25, 0.5, 0.25]


def test_two_blob_probabilities():
    dist = pc.poisson_binomial_pmf([0.78, 0.51])
    expected = [0.22 * 0.49, 0.78 * 0.49 + 0.22 * 0.51, 0.78 * 0.51]
    assert dist.probs == pytest.approx(expected, abs=1e-15)
    assert dist.probs == pytest.approx([0.1078, 0.4944, 0.3978], abs=1e-12)


def test_normalization_and_mean_identity():
    rng = np.random.default_rng(103)
    for k in (10, 100, 1000):
        p = rng.random(k)
        dist = pc.poisson_binomial_pmf(p)
        assert abs(dist.probs.sum() - 1.0) <= 1e-12
        assert abs(dist.mean() - p.sum()) <= 1e-9
        assert (dist.probs >= 0).all()


def test_permutation_invariance_is_bit_exact():
    rng = np.random.default_rng(107)
    p = rng.random(15)
    base = pc.poisson_binomial_pmf(p).probs
    for _ in range(10):
        rng.shuffle(p)
        assert np.array_equal(pc.poisson_binomial_pmf(p).probs, base)


def test_degenerate_components_absorb_exactly():
    rng = np.random.default_rng(109)
    p = rng.random(8)
    base = pc.poisson_binomial_pmf(p).probs
    with_zero = pc.poisson_binomial_pmf(np.append(p, 0.0)).probs
    assert np.array_equal(with_zero[:-1], base)
    assert with_zero[-1] == 0.0
    with_one = pc.poisson_binomial_pmf(np.append(p, 1.0)).probs
    assert np.array_equal(with_one[1:], base)
    assert with_one[0] == 0.0


def test_probability_bounds_checked():
    with pytest.raises(pc.ProbabilityOutOfRange):
        pc.poisson_binomial_pmf([0.5, 1.5])
    with pytest.raises(pc.ProbabilityOutOfRange):
        pc.poisson_binomial_pmf([-0.1])


def test_binning_pools_the_tail():
    dist = pc.poisson_binomial_pmf([1.0] * 6)
    binned = pc.bin_pmf(dist, 5)
    assert binned.bin_probs.tolist() == [0, 0, 0, 0, 1.0]

    rng = np.random.default_rng(113)
    p = rng.random(9)
    dist = pc.poisson_binomial_pmf(p)
    binned = pc.bin_pmf(dist, 5)
    assert np.array_equal(binned.bin_probs, bin_tail(dist.probs, 5))
    assert abs(binned.bin_probs.sum() - 1.0) <= 1e-12


def test_binning_pads_small_supports_with_zeros():
    dist = pc.poisson_binomial_pmf([0.78, 0.51])
    binned = pc.bin_pmf(dist, 5)
    assert np.array_equal(binned.bin_probs[:3], dist.probs)
    assert binned.bin_probs[3] == 0.0
    assert binned.bin_probs[4] == 0.0


def test_bin_count_validated():
    dist = pc.poisson_binomial_pmf([0.5])
    with pytest.raises(ValueError):
        pc.bin_pmf(dist, 1)


def test_bin_of_clamps_to_the_tail():
    assert pc.bin_of(0) == 0
    assert pc.bin_of(3) == 3
    assert pc.bin_of(4) == 4
    assert pc.bin_of(17) == 4
    assert pc.bin_of(2, bins=3) == 2
    with pytest.raises(ValueError):
        pc.bin_of(-1)


def test_empirical_distribution_counts_frequencies():
    dist = pc.empirical_count_distribution([1, 1, 2, 2])
    assert dist.bin_probs.tolist() == [0, 0.5, 0.5, 0, 0]
    assert dist.entropy() == pytest.approx(np.log(2), abs=1e-15)

    dist = pc.empirical_count_distribution([3] * 50)
    assert dist.bin_probs.tolist() == [0, 0, 0, 1.0, 0]
    assert dist.entropy() == 0.0

    dist = pc.empirical_count_distribution(list(range(10)))
    assert dist.bin_probs.tolist() == [0.1, 0.1, 0.1, 0.1, 0.6]

    with pytest.raises(pc.EmptyInput):
        pc.empirical_count_distribution([])
    with pytest.raises(ValueError):
        pc.empirical_count_distribution([1, -2])


def test_uniform_binned_distribution_has_unit_normalized_entropy():
    dist = pc.BinnedCountDistribution(np.full(5, 0.2))
    assert dist.normalized_entropy() == pytest.approx(1.0, abs=1e-15)


def test_argmax_tie_breaks_to_smallest_bin():
    dist = pc.BinnedCountDistribution(np.array([0.4, 0.4, 0.2]))
    assert dist.argmax_bin() == 0


def test_count_volume_on_zeros():
    vol = pc.ProbabilityVolume(np.zeros((3, 3, 3)))
    result = pc.count_volume(vol, pc.LabelingConfig(tau=0.1))
    assert result.pmf.probs.tolist() == [1.0]
    assert result.argmax_count == 0
    assert result.expected_count == 0.0
    assert result.entropy == 0.0


def test_count_volume_composes_labeling_and_the_pmf(two_blob):
    for tau in (0.1, 0.3, 0.5):
        result = pc.count_volume(two_blob, pc.LabelingConfig(tau=tau))
        assert result.binned.bin_probs == pytest.approx(
            [0.1078, 0.4944, 0.3978, 0.0, 0.0], abs=1e-12)
        assert result.argmax_count == 1
        assert result.expected_count == pytest.approx(0.78 + 0.51, abs=1e-12)


def test_deterministic_volumes_agree_with_component_counting():
    rng = np.random.default_rng(127)
    cfg = pc.LabelingConfig(tau=0.5)
    for _ in range(25):
        data = (rng.random((4, 5, 5)) > 0.6).astype(np.float64)
        vol = pc.ProbabilityVolume(data)
        result = pc.count_volume(vol, cfg, bins=64)
        k = pc.cc_count(vol, cfg)
        assert result.argmax_count == k
        assert result.normalized_entropy == 0.0
        assert result.pmf.probs[k] == 1.0


def test_count_volume_report_schema(two_blob):
    payload = pc.count_volume(two_blob, pc.LabelingConfig(tau=0.1)).to_dict(
        shape=two_blob.shape)
    assert set(payload) == {"K", "pmf", "binned", "argmax_count", "expected_count",
                            "entropy", "normalized_entropy", "regions"}
    assert payload["K"] == 2
    assert len(payload["pmf"]) == 3
    assert len(payload["binned"]) == 5
    assert len(payload["regions"]) == 2
    assert pc.count_volume(two_blob, pc.LabelingConfig(tau=0.1)).to_dict().get(
        "regions") is None


def test_expected_count_equals_sum_of_existence_probabilities():
    rng = np.random.default_rng(131)
    data = rng.integers(0, 11, size=(5, 6, 6)) / 10.0
    vol = pc.ProbabilityVolume(data)
    cfg = pc.LabelingConfig(tau=0.35)
    result = pc.count_volume(vol, cfg)
    total = sum(r.existence_prob for r in result.regions)
    assert result.expected_count == pytest.approx(total, abs=1e-9)
