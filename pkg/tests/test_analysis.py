import math

import numpy as np
import pytest

from lpnet.errors import DataError, ShapeError
from lpnet import analysis as A
from lpnet.tensor import make_rng


class TestPsnr:
    def test_identical_is_inf(self, rng):
        x = rng.uniform(size=(1, 3, 4, 4))
        assert A.psnr(x, x.copy()) == math.inf

    def test_one_lsb_uniform_difference(self):
        a = np.zeros((1, 1, 8, 8))
        b = np.full((1, 1, 8, 8), 1 / 255)
        assert A.psnr(a, b) == pytest.approx(20 * math.log10(255), abs=1e-10)
        assert A.psnr(a, b) == pytest.approx(48.1308, abs=1e-4)

    def test_known_mse(self):
        a = np.zeros((1, 1, 2, 2))
        b = np.full((1, 1, 2, 2), 0.1)
        assert A.psnr(a, b) == pytest.approx(20.0, abs=1e-12)

    def test_peak_rescaling(self, rng):
        a, b = rng.uniform(size=(1, 1, 4, 4)), rng.uniform(size=(1, 1, 4, 4))
        assert A.psnr(a * 255, b * 255, peak=255) == pytest.approx(
            A.psnr(a, b), abs=1e-10)

    def test_symmetry(self, rng):
        a, b = rng.uniform(size=(1, 3, 4, 4)), rng.uniform(size=(1, 3, 4, 4))
        assert A.psnr(a, b) == A.psnr(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            A.psnr(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 4, 4)))


def ssim_scalar_oracle(a, b, c1=0.01 ** 2, c2=0.03 ** 2):
    """Direct per-window evaluation with explicit loops."""
    r = np.arange(11) - 5.0
    g = np.exp(-(r * r) / (2 * 1.5 ** 2))
    g /= g.sum()
    win = np.outer(g, g)
    h, w = a.shape
    vals = []
    for y in range(h - 10):
        for x in range(w - 10):
            pa = a[y:y + 11, x:x + 11]
            pb = b[y:y + 11, x:x + 11]
            mu_a = (win * pa).sum()
            mu_b = (win * pb).sum()
            va = (win * pa * pa).sum() - mu_a ** 2
            vb = (win * pb * pb).sum() - mu_b ** 2
            cov = (win * pa * pb).sum() - mu_a * mu_b
            vals.append((2 * mu_a * mu_b + c1) * (2 * cov + c2)
                        / ((mu_a ** 2 + mu_b ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


class TestSsim:
    def test_identical_is_one(self, rng):
        x = rng.uniform(size=(1, 3, 16, 16))
        assert A.ssim(x, x.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_bounded(self, rng):
        a = rng.uniform(size=(1, 1, 16, 16))
        b = rng.uniform(size=(1, 1, 16, 16))
        assert -1.0 <= A.ssim(a, b) <= 1.0

    def test_noise_lowers_score(self, rng):
        a = rng.uniform(size=(1, 1, 24, 24))
        small = A.ssim(a, np.clip(a + 0.02 * rng.normal(size=a.shape), 0, 1))
        large = A.ssim(a, np.clip(a + 0.2 * rng.normal(size=a.shape), 0, 1))
        assert large < small < 1.0

    def test_matches_scalar_oracle(self):
        r = make_rng(3)
        a = r.uniform(size=(13, 14))
        b = np.clip(a + 0.1 * r.normal(size=a.shape), 0, 1)
        got = A.ssim(a[None, None], b[None, None])
        assert got == pytest.approx(ssim_scalar_oracle(a, b), abs=1e-10)

    def test_channels_averaged(self, rng):
        a = rng.uniform(size=(1, 3, 16, 16))
        b = rng.uniform(size=(1, 3, 16, 16))
        per = [A.ssim(a[:, c:c + 1], b[:, c:c + 1]) for c in range(3)]
        assert A.ssim(a, b) == pytest.approx(np.mean(per), abs=1e-12)

    def test_too_small_rejected(self):
        with pytest.raises(ShapeError):
            A.ssim(np.zeros((1, 1, 8, 8)), np.zeros((1, 1, 8, 8)))


class TestComplexity:
    def test_single_conv_closed_form(self):
        net = A.NetSpec([A.ConvSpec(3, 3, 64, 224)])
        assert A.complexity(net) == 3 * 9 * 64 * 224 * 224

    def test_single_fc(self):
        assert A.complexity(A.NetSpec([A.FcSpec(4096, 1000)])) == 4096000

    def test_additive_over_layers(self):
        l1, l2 = A.ConvSpec(3, 3, 8, 32), A.FcSpec(128, 10)
        assert A.complexity(A.NetSpec([l1, l2])) == \
            A.complexity(A.NetSpec([l1])) + A.complexity(A.NetSpec([l2]))

    def test_flops_is_twice_complexity(self):
        net = A.NetSpec([A.ConvSpec(3, 3, 8, 32)])
        assert A.flops(net) == 2 * A.complexity(net)

    def test_vgg16_published_totals(self):
        net = A.builtin_netspec("vgg16")
        assert A.complexity(net) == pytest.approx(15.47e9, rel=0.01)
        assert A.flops(net) == pytest.approx(31.02e9, rel=0.01)

    def test_resnet50_published_total(self):
        net = A.builtin_netspec("resnet50")
        assert A.complexity(net) == pytest.approx(4.06e9, rel=0.05)

    def test_branch_fractions_exact(self):
        approx, detail = A.branch_fractions()
        assert approx == 0.25 and detail == 0.0625
        assert approx + detail == 5 / 16

    def test_acceleration_rate(self):
        approx, detail = A.branch_fractions()
        assert A.acceleration_rate(1.0, approx + detail) == 3.2

    def test_vgg_over_reduced_ratio(self):
        # complexity ratio of the full network to a 5.48e9 variant
        assert A.acceleration_rate(15.47e9, 5.48e9) == pytest.approx(
            2.82, abs=0.01)

    def test_zero_connected_rejected(self):
        with pytest.raises(DataError):
            A.acceleration_rate(1.0, 0.0)


class TestNetspecParsing:
    def test_basic(self):
        net = A.parse_netspec("conv 3 3 64 224\nfc 25088 4096\n")
        assert len(net.layers) == 2
        assert isinstance(net.layers[0], A.ConvSpec)
        assert net.layers[1].out_features == 4096

    def test_comments_and_blanks(self):
        net = A.parse_netspec("# header\n\nconv 1 1 1 1  # tail\n")
        assert len(net.layers) == 1

    def test_bad_kind(self):
        with pytest.raises(DataError, match="bad layer"):
            A.parse_netspec("pool 2 2\n")

    def test_bad_arity(self):
        with pytest.raises(DataError):
            A.parse_netspec("conv 3 3 64\n")

    def test_nonpositive_dim(self):
        with pytest.raises(DataError):
            A.parse_netspec("fc 0 10\n")

    def test_error_reports_line_number(self):
        with pytest.raises(DataError, match=":2:"):
            A.parse_netspec("conv 1 1 1 1\njunk\n")

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "n.spec"
        p.write_text("fc 10 10\n")
        assert A.complexity(A.load_netspec(p)) == 100

    def test_load_missing(self, tmp_path):
        with pytest.raises(DataError):
            A.load_netspec(tmp_path / "nope.spec")

    def test_unknown_builtin(self):
        with pytest.raises(Exception):
            A.builtin_netspec("alexnet")


class TestQualityReport:
    def test_fields(self, rng):
        a = rng.uniform(size=(1, 3, 16, 16))
        r = A.quality_report(a, a.copy())
        assert r.psnr_db == math.inf
        assert r.ssim == pytest.approx(1.0, abs=1e-12)
        assert len(r.per_channel_psnr) == 3
