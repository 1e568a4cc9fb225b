import itertools

import numpy as np
import pytest

import oracles
from grandrate.bicm import (
    FADINGS,
    LABELINGS,
    SCHEMES,
    FadingModel,
    bicm_rate,
    bicm_reports,
    bit_channel,
    combine,
    make_constellation,
)
from grandrate.llr_channel import BpskAwgn, sample_llrs
from grandrate.rates import GmiConfig, mutual_information

FAST = GmiConfig(n_samples=100_000)


def popcount(v):
    return bin(int(v)).count("1")


def label_of(c):
    # symbol -> label, by inverting points[label]
    return {complex(np.round(p, 12)): lab for lab, p in enumerate(c.points)}


@pytest.mark.parametrize("scheme,labeling", list(itertools.product(SCHEMES, LABELINGS)))
def test_unit_energy_zero_mean(scheme, labeling):
    c = make_constellation(scheme, labeling)
    assert c.points.size == 2**c.m
    assert abs(np.mean(c.points)) < 1e-12
    assert abs(np.mean(np.abs(c.points) ** 2) - 1) < 1e-12
    # labels form a permutation: every point distinct
    assert len({complex(np.round(p, 12)) for p in c.points}) == 2**c.m


@pytest.mark.parametrize("scheme", ["qpsk", "psk8"])
def test_psk_gray_neighbours_differ_in_one_bit(scheme):
    c = make_constellation(scheme, "gray")
    ang = np.angle(c.points)
    order = np.argsort(ang)
    for a, b in zip(order, np.roll(order, -1)):
        assert popcount(a ^ b) == 1


def test_qam16_gray_grid_neighbours():
    c = make_constellation("qam16", "gray")
    lv = np.array([-3, -1, 1, 3]) / np.sqrt(10)
    lookup = label_of(c)
    pairs = 0
    for i, j in itertools.product(range(4), range(4)):
        for di, dj in ((1, 0), (0, 1)):
            if i + di < 4 and j + dj < 4:
                a = lookup[complex(np.round(lv[i] + 1j * lv[j], 12))]
                b = lookup[complex(np.round(lv[i + di] + 1j * lv[j + dj], 12))]
                assert popcount(a ^ b) == 1
                pairs += 1
    assert pairs == 24


def _min_dist(pts):
    d = np.abs(pts[:, None] - pts[None, :])
    return d[~np.eye(pts.size, dtype=bool)].min()


def test_qam16_set_partitioning_distances_double():
    c = make_constellation("qam16", "set_partitioning")
    d0 = _min_dist(c.points)
    assert d0 == pytest.approx(2 / np.sqrt(10))
    labs = c.labels
    # subsets sharing the top 1 and top 2 label bits
    for depth, factor in ((1, np.sqrt(2)), (2, 2.0)):
        for prefix in range(2**depth):
            pts = c.points[(labs >> (4 - depth)) == prefix]
            assert _min_dist(pts) == pytest.approx(d0 * factor)


def test_psk8_set_partitioning_distances_grow():
    c = make_constellation("psk8", "set_partitioning")
    labs = c.labels
    d = [_min_dist(c.points)]
    for depth in (1, 2):
        d.append(min(_min_dist(c.points[(labs >> (3 - depth)) == p]) for p in range(2**depth)))
    assert d[0] < d[1] < d[2]


def test_pinned_tables():
    g = make_constellation("qpsk", "gray")
    assert np.allclose(g.points[0b00], np.exp(1j * np.pi / 4))
    assert np.allclose(g.points[0b01], np.exp(3j * np.pi / 4))
    assert np.allclose(g.points[0b11], np.exp(5j * np.pi / 4))
    p8 = make_constellation("psk8", "set_partitioning")
    assert np.allclose(p8.points[0b100], np.exp(1j * np.pi / 4))


def test_unknown_names_rejected():
    with pytest.raises(ValueError):
        make_constellation("qam64", "gray")
    with pytest.raises(ValueError):
        make_constellation("qpsk", "natural")
    with pytest.raises(ValueError):
        FadingModel("rician", 3.0)
    with pytest.raises(ValueError):
        bit_channel(make_constellation("qpsk", "gray"), 3, FadingModel("awgn", 0.0))


def test_qpsk_gray_levels_are_bpsk():
    f = FadingModel("awgn", 3.0)
    c = make_constellation("qpsk", "gray")
    ones = np.ones(200_000)
    ref = BpskAwgn(3.0).sample_llr(ones, np.random.default_rng(1))
    for level in (1, 2):
        t = bit_channel(c, level, f).sample_llr(ones, np.random.default_rng(2))
        assert abs(t.mean() - ref.mean()) < 0.02 * ref.mean()
        assert abs(t.std() / ref.std() - 1) < 0.01
    mi = bicm_rate(c, f, "mi", FAST)
    assert abs(mi.total - 2 * mutual_information(BpskAwgn(3.0))) <= 3 * mi.std_error + 1e-6
    assert abs(mi.per_level[0] - mi.per_level[1]) <= 4 * mi.std_error


def test_llr_matches_bit_posterior():
    # LLR sign agrees with the nearest-point bit at high SNR
    c = make_constellation("qam16", "gray")
    ch = bit_channel(c, 2, FadingModel("awgn", 30.0))
    t = ch.llr_of_output(c.points)
    assert np.array_equal(t > 0, c.bit(c.labels, 2) == 1)


def test_llr_is_stable_at_high_snr():
    ch = bit_channel(make_constellation("psk8", "gray"), 1, FadingModel("awgn", 60.0))
    t = sample_llrs(ch, 10_000, seed=0).t
    assert np.all(np.isfinite(t))


def test_low_snr_bits_carry_nothing():
    for scheme in SCHEMES:
        for r in bicm_reports(make_constellation(scheme, "gray"), FadingModel("rayleigh", -40.0), FAST):
            assert r.i_mi < 1e-3


@pytest.mark.slow
def test_qam16_gray_against_histogram_oracle():
    ref = oracles.histogram_bicm_mi(oracles.qam16_gray_points(), 6.0, n=10**7)
    got = bicm_rate(make_constellation("qam16", "gray"), FadingModel("awgn", 6.0), "mi", GmiConfig(n_samples=4 * 10**5))
    assert abs(got.total - ref) < 0.01


@pytest.mark.parametrize("scheme", SCHEMES)
def test_bicm_below_coded_modulation(scheme):
    for labeling in LABELINGS:
        c = make_constellation(scheme, labeling)
        cm = oracles.coded_modulation_mi(c.points, 3.0)
        b = bicm_rate(c, FadingModel("awgn", 3.0), "mi", FAST)
        # oracle noise at 2e5 samples is well under 0.01
        assert b.total <= cm + 3 * b.std_error + 0.01


@pytest.mark.parametrize("fading", FADINGS)
def test_rate_chain_and_monotonicity(fading):
    c = make_constellation("psk8", "gray")
    prev = None
    for snr in (-2.0, 4.0, 10.0):
        reps = bicm_reports(c, FadingModel(fading, snr), GmiConfig(n_samples=50_000))
        orb, mi, sg = (combine(reps, w) for w in ("orbgrand", "mi", "sgrand"))
        budget = 3 * max(orb.std_error, mi.std_error, sg.std_error) + orb.integration_abs_err + 1e-6 * c.m
        assert orb.total <= mi.total + budget
        assert abs(sg.total - mi.total) <= budget
        assert mi.total <= c.m * np.log(2) + 1e-12
        if prev is not None:
            assert mi.total >= prev - 3 * mi.std_error
        prev = mi.total


def test_combine_sums_levels():
    reps = bicm_reports(make_constellation("qpsk", "set_partitioning"), FadingModel("awgn", 2.0), GmiConfig(n_samples=20_000))
    r = combine(reps, "orbgrand")
    assert r.total == pytest.approx(sum(x.i_orbgrand for x in reps))
    assert len(r.per_level) == 2
    with pytest.raises(ValueError):
        combine(reps, "ml")
