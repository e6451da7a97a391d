"""Spectral core: transforms, roll-off extraction, and their independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sropkit import (
    FeatureMapTensor,
    ParameterError,
    Spectrum1D,
    TooSmallError,
    ZeroEnergyError,
    normalize_srop,
    power_spectrum_1d,
    power_spectrum_2d,
    radial_bin_count,
    radial_profile,
    srop_2d,
    srop_feature_map,
    srop_from_spectrum,
)


def brute_force_dft_1d(x):
    """Direct O(n^2) DFT, independent of numpy.fft."""
    n = len(x)
    out = []
    for k in range(n):
        acc = 0.0 + 0.0j
        for t in range(n):
            acc += x[t] * np.exp(-2j * np.pi * k * t / n)
        out.append(acc)
    return np.array(out)


def brute_force_dft_2d(img):
    """Direct O(n^4) double-sum 2-D DFT."""
    n = img.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for u in range(n):
        for v in range(n):
            acc = 0.0 + 0.0j
            for i in range(n):
                for j in range(n):
                    acc += img[i, j] * np.exp(-2j * np.pi * (u * i + v * j) / n)
            out[u, v] = acc
    return out


def enumerate_radial_profile(grid):
    """Per-pixel enumeration oracle for the rotation-averaged radial binning.

    Bins each centered-grid cell by the quarter-plane distance of its
    frequency vector under all four 90-degree rotations, mirroring the
    production rule cell by cell in plain loops.
    """
    n = grid.shape[0]
    c = n // 2
    m = int(np.floor(np.sqrt(2.0) * (n - 1) / 2.0)) - 1
    limit = (m + 1) ** 2
    profiles = []
    for rotation in range(4):
        profile = np.zeros(m + 1)
        for i in range(n):
            for j in range(n):
                u, v = i - c, j - c
                for _ in range(rotation):
                    u, v = v, -u
                a = u if u >= 0 else u + n
                b = v if v >= 0 else v + n
                r2 = a * a + b * b
                if r2 >= limit:
                    continue
                k = int(np.floor(np.sqrt(r2)))
                if (k + 1) * (k + 1) <= r2:
                    k += 1
                elif k * k > r2:
                    k -= 1
                profile[k] += grid[i, j]
        profiles.append(profile)
    return (profiles[0] + profiles[1] + profiles[2] + profiles[3]) / 4.0


class TestPowerSpectrum1D:
    def test_constant_signal_all_energy_at_dc(self):
        s = power_spectrum_1d([5.0, 5.0, 5.0, 5.0])
        assert s.band == (0, 2)
        np.testing.assert_allclose(s.values, [1.0, 0.0, 0.0], atol=0)

    def test_sine_mass_in_bin_five_and_srop_five(self):
        t = np.arange(64)
        x = np.sin(2 * np.pi * 5 * t / 64)
        # oracle: direct DFT over all 64 bins, magnitudes on the one-sided band
        mags = np.abs(brute_force_dft_1d(x))[:33]
        oracle_cum = np.cumsum(mags)
        oracle_bin = int(np.argmax(oracle_cum >= 0.85 * mags.sum() * (1 - 1e-12)))
        assert oracle_bin == 5
        s = power_spectrum_1d(x)
        assert int(np.argmax(s.values)) == 5
        assert srop_from_spectrum(s, 0.85).bin == 5

    def test_normalization_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = power_spectrum_1d(rng.standard_normal(rng.integers(2, 200)))
            assert abs(s.values.sum() - 1.0) <= 1e-9

    def test_band_restriction(self):
        s = power_spectrum_1d(np.arange(16.0), band=(1, 8))
        assert s.band == (1, 8)
        assert s.values.size == 8

    @pytest.mark.parametrize("bad", [[], [1.0]])
    def test_too_short_rejected(self, bad):
        with pytest.raises(ParameterError):
            power_spectrum_1d(bad)

    def test_all_zero_rejected(self):
        with pytest.raises(ZeroEnergyError):
            power_spectrum_1d(np.zeros(8))

    def test_bad_band_rejected(self):
        with pytest.raises(ParameterError):
            power_spectrum_1d(np.ones(8), band=(0, 5))

    def test_squared_mode(self):
        x = np.random.default_rng(1).standard_normal(32)
        mag = np.abs(np.fft.rfft(x))
        expected = mag**2 / (mag**2).sum()
        np.testing.assert_allclose(power_spectrum_1d(x, squared=True).values, expected)


class TestSropFromSpectrum:
    def test_uniform_hundred_bins(self):
        # oracle: explicit cumulative walk; 85 bins of 0.01 reach exactly 0.85
        values = [0.01] * 100
        cum, oracle_bin = 0.0, None
        for k, v in enumerate(values):
            cum += v
            if cum >= 0.85 * sum(values) * (1 - 1e-12):
                oracle_bin = k
                break
        assert oracle_bin == 84
        s = Spectrum1D(values=np.array(values), band_lo=0, band_hi=99)
        got = srop_from_spectrum(s, 0.85)
        assert got.bin == 84
        assert got.normalized == pytest.approx(84 / 99)

    def test_all_mass_at_band_start(self):
        s = Spectrum1D(values=np.array([1.0, 0.0, 0.0]), band_lo=3, band_hi=5)
        got = srop_from_spectrum(s, 0.85)
        assert got.bin == 3
        assert got.normalized == 0.0

    def test_kappa_one_needs_whole_band(self):
        s = Spectrum1D(values=np.full(10, 0.1), band_lo=0, band_hi=9)
        got = srop_from_spectrum(s, 1.0)
        assert got.bin == 9
        assert got.normalized == 1.0

    @pytest.mark.parametrize("kappa", [0.0, -0.1, 1.0001, 2.0])
    def test_invalid_kappa(self, kappa):
        s = Spectrum1D(values=np.full(4, 0.25), band_lo=0, band_hi=3)
        with pytest.raises(ParameterError):
            srop_from_spectrum(s, kappa)

    def test_zero_energy(self):
        s = Spectrum1D(values=np.zeros(4), band_lo=0, band_hi=3)
        with pytest.raises(ZeroEnergyError):
            srop_from_spectrum(s)

    @settings(max_examples=60, deadline=None)
    @given(
        values=st.lists(st.floats(0.0, 1e3), min_size=2, max_size=40).filter(
            lambda v: sum(v) > 1e-6
        ),
        kappas=st.tuples(st.floats(0.01, 1.0), st.floats(0.01, 1.0)),
    )
    def test_monotone_in_kappa(self, values, kappas):
        s = Spectrum1D(
            values=np.array(values) / sum(values), band_lo=0, band_hi=len(values) - 1
        )
        k1, k2 = sorted(kappas)
        assert srop_from_spectrum(s, k1).bin <= srop_from_spectrum(s, k2).bin


class TestNormalizeSrop:
    def test_direct_evaluation(self):
        assert normalize_srop(84, 0, 99) == pytest.approx(0.84848484848)

    def test_band_edges(self):
        assert normalize_srop(2, 2, 9) == 0.0
        assert normalize_srop(9, 2, 9) == 1.0

    def test_degenerate_band(self):
        assert normalize_srop(3, 3, 3) == 0.0

    def test_outside_band_rejected(self):
        with pytest.raises(ParameterError):
            normalize_srop(10, 0, 9)


class TestPowerSpectrum2D:
    def test_constant_image_single_dc_entry(self):
        s = power_spectrum_2d(np.full((8, 8), 3.0))
        assert s.dc_index == (4, 4)
        grid = s.grid.copy()
        assert grid[4, 4] > 0
        grid[4, 4] = 0.0
        np.testing.assert_allclose(grid, 0.0, atol=1e-9)

    def test_matches_brute_force_dft(self):
        rng = np.random.default_rng(2)
        img = rng.standard_normal((8, 8))
        expected = np.abs(np.fft.fftshift(brute_force_dft_2d(img)))
        got = power_spectrum_2d(img).grid
        np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-9)

    def test_rotation_relation_odd_n(self):
        # for odd n the centered grid rotates exactly onto itself
        rng = np.random.default_rng(3)
        img = rng.standard_normal((9, 9))
        g = power_spectrum_2d(img).grid
        g_rot = power_spectrum_2d(np.rot90(img)).grid
        np.testing.assert_allclose(g_rot, np.rot90(g), rtol=1e-9, atol=1e-12)

    def test_rotation_relation_even_n(self):
        # even n: the unmatched negative-Nyquist row/col shifts by one cell
        rng = np.random.default_rng(4)
        img = rng.standard_normal((8, 8))
        g = power_spectrum_2d(img).grid
        g_rot = power_spectrum_2d(np.rot90(img)).grid
        np.testing.assert_allclose(
            g_rot, np.roll(np.rot90(g), 1, axis=0), rtol=1e-9, atol=1e-12
        )

    def test_non_square_rejected(self):
        with pytest.raises(ParameterError):
            power_spectrum_2d(np.ones((4, 5)))

    def test_too_small_rejected(self):
        with pytest.raises(TooSmallError):
            power_spectrum_2d(np.ones((2, 2)))


class TestRadialBinCount:
    @pytest.mark.parametrize("n,expected", [(9, 4), (224, 156), (7, 3), (64, 43)])
    def test_values(self, n, expected):
        assert radial_bin_count(n) == expected

    def test_too_small(self):
        with pytest.raises(TooSmallError):
            radial_bin_count(2)


class TestRadialProfile:
    def test_constant_image_dc_only(self):
        profile = radial_profile(power_spectrum_2d(np.full((16, 16), 2.0)))
        expected = np.zeros(profile.values.size)
        expected[0] = 1.0
        np.testing.assert_allclose(profile.values, expected, atol=1e-12)

    @pytest.mark.parametrize("n", [5, 8, 16, 28, 33, 64])
    def test_matches_per_pixel_enumeration_exactly(self, n):
        rng = np.random.default_rng(n)
        s = power_spectrum_2d(rng.standard_normal((n, n)))
        oracle = enumerate_radial_profile(s.grid)
        got = radial_profile(s)
        np.testing.assert_array_equal(got.values, oracle / oracle.sum())
        assert got.band == (0, radial_bin_count(n))

    @pytest.mark.parametrize("n", [9, 16, 28])
    def test_rotation_invariance_of_profile(self, n):
        rng = np.random.default_rng(n + 100)
        img = rng.random((n, n))
        base = radial_profile(power_spectrum_2d(img)).values
        for j in (1, 2, 3):
            rotated = radial_profile(power_spectrum_2d(np.rot90(img, j))).values
            np.testing.assert_allclose(rotated, base, rtol=1e-10, atol=1e-12)

    def test_mass_accounting(self):
        rng = np.random.default_rng(6)
        s = power_spectrum_2d(rng.random((32, 32)))
        profile = radial_profile(s)
        diag = profile.diagnostics
        assert diag["in_disk_energy"] + diag["dropped_energy"] == pytest.approx(
            diag["total_energy"], rel=1e-9
        )
        assert diag["total_energy"] == pytest.approx(s.grid.sum(), rel=1e-12)

    def test_zero_energy_rejected(self):
        s = power_spectrum_2d(np.full((8, 8), 0.5))
        s.grid = np.zeros_like(s.grid)
        with pytest.raises(ZeroEnergyError):
            radial_profile(s)


def _orbit_bins(n):
    """Test-local recomputation of the four rotation bin maps."""
    c = n // 2
    m = radial_bin_count(n)
    maps = []
    for rotation in range(4):
        rb = np.empty((n, n), dtype=int)
        for i in range(n):
            for j in range(n):
                u, v = i - c, j - c
                for _ in range(rotation):
                    u, v = v, -u
                a = u if u >= 0 else u + n
                b = v if v >= 0 else v + n
                r2 = a * a + b * b
                rb[i, j] = int(np.floor(np.sqrt(r2))) if r2 < (m + 1) ** 2 else -1
        maps.append(rb)
    return maps, m


class TestSrop2D:
    def test_constant_image_is_zero(self):
        assert srop_2d(np.full((17, 17), 4.2)).normalized == 0.0

    def test_rotation_invariant_bit_identical(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            img = rng.random((28, 28))
            reference = srop_2d(img)
            for j in (1, 2, 3):
                rotated = srop_2d(np.rot90(img, j))
                assert rotated.bin == reference.bin
                assert rotated.normalized == reference.normalized

    def test_rotation_invariant_odd_size(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            img = rng.random((15, 15))
            bins = {srop_2d(np.rot90(img, j)).bin for j in range(4)}
            assert len(bins) == 1

    def test_low_pass_mask_bounds_srop(self):
        rng = np.random.default_rng(9)
        n = 32
        maps, m = _orbit_bins(n)
        for j in (3, 7, 15):
            # keep only cells that never deposit mass above bin j
            keep = np.ones((n, n), dtype=bool)
            for rb in maps:
                keep &= (rb <= j)
            img = rng.standard_normal((n, n))
            centered = np.fft.fftshift(np.fft.fft2(img))
            filtered = np.fft.ifft2(np.fft.ifftshift(centered * keep)).real
            for kappa in (0.5, 0.85, 1.0):
                assert srop_2d(filtered, kappa).bin <= j

    def test_white_noise_matches_annulus_growth_law(self):
        # cumulative quarter-annulus population grows ~ (k+1)^2, so the
        # 0.85 crossing sits near sqrt(0.85) of the band
        rng = np.random.default_rng(10)
        vals = [srop_2d(rng.standard_normal((64, 64))).normalized for _ in range(150)]
        assert np.mean(vals) == pytest.approx(np.sqrt(0.85), abs=0.02)

    def test_monotone_in_kappa_on_images(self):
        rng = np.random.default_rng(11)
        img = rng.random((28, 28))
        bins = [srop_2d(img, k).bin for k in (0.5, 0.7, 0.85, 0.95, 1.0)]
        assert bins == sorted(bins)

    def test_normalized_in_unit_interval(self, corpus_small):
        for img in corpus_small[:3]:
            for channel in img:
                value = srop_2d(channel)
                assert 0.0 <= value.normalized <= 1.0

    def test_exclude_dc_constant_image_has_no_energy(self):
        with pytest.raises(ZeroEnergyError):
            srop_2d(np.full((16, 16), 1.0), exclude_dc=True)

    def test_exclude_dc_band(self):
        rng = np.random.default_rng(12)
        img = rng.random((16, 16))
        value = srop_2d(img, exclude_dc=True)
        assert 1 <= value.bin <= radial_bin_count(16)


class TestSropFeatureMap:
    def test_single_channel_matches_srop_2d(self):
        rng = np.random.default_rng(13)
        img = rng.random((12, 12))
        tensor = FeatureMapTensor(data=img[None, :, :])
        [value] = srop_feature_map(tensor)
        direct = srop_2d(img)
        assert value.bin == direct.bin and value.normalized == direct.normalized

    def test_identical_channels_identical_values(self):
        rng = np.random.default_rng(14)
        img = rng.random((10, 10))
        tensor = FeatureMapTensor(data=np.stack([img] * 5))
        values = srop_feature_map(tensor)
        assert len({v.bin for v in values}) == 1

    def test_zero_channel_flagged_missing(self):
        rng = np.random.default_rng(15)
        data = rng.random((3, 8, 8))
        data[1] = 0.0
        values = srop_feature_map(FeatureMapTensor(data=data))
        assert values[1] is None
        assert values[0] is not None and values[2] is not None

    def test_white_noise_tensor_mean(self):
        # flat spectra fill quarter annuli, so cumulative mass grows ~ (k+1)^2;
        # at n=28 (m=18) the smallest K with (K+1)^2 >= 0.85*(m+1)^2 is 17,
        # i.e. 17/18 ~ 0.944, the discrete realization of sqrt(0.85) ~ 0.922
        m = radial_bin_count(28)
        k = next(k for k in range(m + 1) if (k + 1) ** 2 >= 0.85 * (m + 1) ** 2)
        oracle = k / m
        assert oracle == pytest.approx(np.sqrt(0.85), abs=0.025)
        rng = np.random.default_rng(16)
        tensor = FeatureMapTensor(data=rng.standard_normal((64, 28, 28)))
        values = [v.normalized for v in srop_feature_map(tensor)]
        assert np.mean(values) == pytest.approx(oracle, abs=0.02)

    def test_tensor_shape_validation(self):
        with pytest.raises(ParameterError):
            FeatureMapTensor(data=np.ones((4, 5)))
        with pytest.raises(TooSmallError):
            FeatureMapTensor(data=np.ones((1, 2, 2)))
        with pytest.raises(ParameterError):
            FeatureMapTensor(data=np.ones((1, 4, 4)), source="bogus")
