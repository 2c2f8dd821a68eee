import math

import numpy as np
import pytest

from sideband.channel import (
    PRESETS,
    blur,
    degrade,
    degrade_custom,
    derive_seed,
    gaussian_field,
    kernel_1d,
    preset,
)
from sideband.errors import ParameterError
from sideband.metrics import psnr

from conftest import make_plane


class TestKernel:
    def test_size_one(self):
        assert kernel_1d(0.8, 1).tolist() == [1.0]

    def test_symmetry(self):
        k = kernel_1d(1.2, 7)
        assert np.array_equal(k, k[::-1])
        assert abs(k.sum() - 1.0) < 1e-12

    def test_size5_sigma08_center(self):
        # Oracle: normalize exp(-i^2 / (2 sigma^2)) for i in -2..2 directly.
        raw = [math.exp(-(i * i) / (2 * 0.8 * 0.8)) for i in (-2, -1, 0, 1, 2)]
        expected = raw[2] / sum(raw)
        assert abs(kernel_1d(0.8, 5)[2] - expected) < 1e-15

    def test_even_size_rejected(self):
        with pytest.raises(ParameterError):
            kernel_1d(1.0, 4)
        with pytest.raises(ParameterError):
            kernel_1d(0.0, 3)


class TestPresets:
    def test_paper_values(self):
        assert (PRESETS["NN"].noise_sigma, PRESETS["NN"].blur_kernel) == (0.0, 0)
        ln = PRESETS["LN"]
        assert (ln.noise_sigma, ln.blur_kernel, ln.blur_sigma) == (10.0, 5, 0.8)
        hn = PRESETS["HN"]
        assert (hn.noise_sigma, hn.blur_kernel, hn.blur_sigma) == (20.0, 7, 1.2)

    def test_unknown_preset(self):
        with pytest.raises(ParameterError):
            preset("XX")


class TestDegrade:
    def test_nn_identity(self, bundled):
        for plane in bundled.values():
            assert degrade(plane, PRESETS["NN"], 123) is plane

    def test_constant_mean_preserved_under_ln(self):
        plane = make_plane(np.full((256, 256), 128))
        out = degrade(plane, PRESETS["LN"], 99)
        assert abs(out.samples.mean() - 128.0) <= 0.5

    @pytest.mark.parametrize("sigma", [10.0, 20.0])
    def test_preblur_noise_std(self, sigma):
        plane = make_plane(np.full((256, 256), 128))
        noisy = degrade_custom(plane, sigma, 0, 0.0, 7)
        std = (noisy.samples.astype(np.float64) - 128.0).std()
        assert abs(std - sigma) / sigma <= 0.05

    def test_blur_mass_preservation(self):
        const = np.full((33, 21), 77.0)
        assert np.allclose(blur(const, 7, 1.2), 77.0, atol=1e-12)
        plane = make_plane(np.full((33, 21), 77))
        assert degrade_custom(plane, 0.0, 7, 1.2, 0) == plane

    def test_severity_ordering(self, bundled):
        for plane in bundled.values():
            p_ln = psnr(degrade(plane, PRESETS["LN"], 5), plane)
            p_hn = psnr(degrade(plane, PRESETS["HN"], 5), plane)
            assert math.inf > p_ln > p_hn

    def test_determinism(self, bundled):
        plane = bundled["scene"]
        assert degrade(plane, PRESETS["HN"], 42) == degrade(plane, PRESETS["HN"], 42)
        assert degrade(plane, PRESETS["HN"], 42) != degrade(plane, PRESETS["HN"], 43)

    def test_order_flag(self, bundled):
        plane = bundled["scene"]
        nb = degrade_custom(plane, 10.0, 5, 0.8, 3, order="noise_blur")
        bn = degrade_custom(plane, 10.0, 5, 0.8, 3, order="blur_noise")
        assert nb != bn
        with pytest.raises(ParameterError):
            degrade_custom(plane, 10.0, 5, 0.8, 3, order="sideways")


class TestNoiseField:
    def test_keyed_by_site(self):
        # The same (seed, x, y) key yields the same sample regardless of grid size.
        small = gaussian_field(11, 4, 8)
        large = gaussian_field(11, 2, 16)
        assert small[0, 0] == large[0, 0]  # index 0 in both
        assert gaussian_field(11, 4, 8)[2, 3] == small[2, 3]

    def test_distribution_sane(self):
        z = gaussian_field(0, 512, 512)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_seed_sensitivity(self):
        assert not np.array_equal(gaussian_field(1, 16, 16), gaussian_field(2, 16, 16))


class TestDeriveSeed:
    def test_stable_and_distinct(self):
        a = derive_seed(0, "HN", 1, 50, 2)
        assert a == derive_seed(0, "HN", 1, 50, 2)
        assert a != derive_seed(0, "HN", 1, 50, 3)
        assert 0 <= a < 2**64
