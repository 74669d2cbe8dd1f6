import numpy as np
import pytest

from conftest import fd_check_sampled
from lpnet.container import read_tensors
from lpnet.errors import DataError, ShapeError
from lpnet import model as M
from lpnet.pyramid import bicubic_down2
from lpnet.tensor import make_rng


@pytest.fixture(scope="module")
def params():
    return M.init_params(seed=7)


def zero_params():
    p = M.init_params(seed=0)
    for a in M.param_dict(p).values():
        a[...] = 0.0
    return p


class TestShapes:
    def test_encode(self, params, rng):
        a, d = M.encode(params, rng.uniform(size=(2, 3, 16, 16)))
        assert a.shape == (2, 3, 8, 8)
        assert d.shape == (2, 3, 16, 16)

    def test_decode(self, params, rng):
        r = M.decode(params, rng.normal(size=(1, 3, 8, 8)),
                     rng.normal(size=(1, 3, 16, 16)))
        assert r.shape == (1, 3, 16, 16)

    def test_odd_input_rejected(self, params, rng):
        with pytest.raises(ShapeError):
            M.encode(params, rng.uniform(size=(1, 3, 15, 16)))

    def test_decode_size_mismatch(self, params, rng):
        with pytest.raises(ShapeError):
            M.decode(params, rng.normal(size=(1, 3, 8, 8)),
                     rng.normal(size=(1, 3, 12, 12)))

    def test_pyramid_shapes(self, params, rng):
        p = M.encode_pyramid(params, rng.uniform(size=(1, 3, 32, 32)), 3)
        assert [d.shape[2] for d in p.details] == [32, 16, 8]
        assert p.coarsest.shape == (1, 3, 4, 4)
        assert M.decode_pyramid(params, p).shape == (1, 3, 32, 32)

    def test_pyramid_divisibility(self, params, rng):
        with pytest.raises(ShapeError):
            M.encode_pyramid(params, rng.uniform(size=(1, 3, 20, 20)), 3)


class TestAlgebra:
    def test_recon_identity(self, params, rng):
        """I' - I_d must equal the decoder prediction exactly."""
        img = rng.uniform(size=(1, 3, 16, 16))
        a, d = M.encode(params, img)
        recon = M.decode(params, a, d)
        np.testing.assert_allclose(recon - d, M.predict_from_approx(params, a),
                                   atol=1e-12)

    def test_zero_weights_zero_everything(self, rng):
        p = zero_params()
        a, d = M.encode(p, rng.uniform(size=(1, 3, 8, 8)))
        assert not a.any() and not d.any()
        assert not M.decode(p, a, d).any()

    def test_approx_perturbation_propagates(self, params, rng):
        """The decoder path must actually depend on the approximation."""
        a = rng.normal(size=(1, 3, 8, 8))
        d = rng.normal(size=(1, 3, 16, 16))
        r1 = M.decode(params, a, d)
        r2 = M.decode(params, a + 0.1, d)
        assert np.abs(r2 - r1).max() > 1e-6

    def test_detail_is_additive_skip(self, params, rng):
        a = rng.normal(size=(1, 3, 8, 8))
        d1 = rng.normal(size=(1, 3, 16, 16))
        d2 = rng.normal(size=(1, 3, 16, 16))
        np.testing.assert_allclose(
            M.decode(params, a, d1 + d2) - M.decode(params, a, d1), d2,
            atol=1e-12)

    def test_pyramid_composes_single_levels(self, params, rng):
        """Two-level encode must equal encode applied twice by hand."""
        img = rng.uniform(size=(1, 3, 16, 16))
        a1, d1 = M.encode(params, img)
        a2, d2 = M.encode(params, a1)
        p = M.encode_pyramid(params, img, 2)
        np.testing.assert_array_equal(p.details[0], d1)
        np.testing.assert_array_equal(p.details[1], d2)
        np.testing.assert_array_equal(p.coarsest, a2)
        np.testing.assert_allclose(
            M.decode_pyramid(params, p),
            M.decode(params, M.decode(params, a2, d2), d1), atol=1e-12)

    def test_forward_full_matches_encode_decode(self, params, rng):
        img = rng.uniform(size=(1, 3, 16, 16))
        out = M.forward_full(params, img)
        a, d = M.encode(params, img)
        np.testing.assert_array_equal(out["approx"], a)
        np.testing.assert_array_equal(out["detail"], d)
        np.testing.assert_allclose(out["recon"], M.decode(params, a, d),
                                   atol=1e-12)


class TestLossAndGrads:
    def test_terms_consistent(self, params, rng):
        img = rng.uniform(size=(2, 3, 16, 16))
        terms, grads = M.loss_and_grads(params, img)
        assert terms["l_total"] == pytest.approx(
            terms["l_r"] + 0.8 * terms["l_e"] + terms["l_s"])
        assert set(grads) == set(M.param_dict(params))
        for name, g in grads.items():
            assert g.shape == M.param_dict(params)[name].shape

    def test_perfect_autoencoder_leaves_only_targets(self, rng):
        """With zero weights the recon is 0, approx is 0, detail is 0, so the
        loss reduces to MAE(I, 0) + 0.8 * MSE(bicubic(I), 0)."""
        p = zero_params()
        img = rng.uniform(size=(1, 3, 8, 8))
        terms, _ = M.loss_and_grads(p, img)
        tgt = bicubic_down2(img)
        assert terms["l_r"] == pytest.approx(np.mean(np.abs(img)))
        assert terms["l_e"] == pytest.approx(np.mean(tgt ** 2))
        assert terms["l_s"] == 0.0

    def test_end_to_end_finite_difference(self, params):
        img = make_rng(11).uniform(size=(1, 3, 8, 8))
        _, grads = M.loss_and_grads(params, img)
        pd = M.param_dict(params)

        def total():
            return M.loss_and_grads(params, img)[0]["l_total"]
        pairs = [(pd[n], grads[n]) for n in sorted(pd)]
        fd_check_sampled(total, pairs, make_rng(5), samples=40)


class TestCheckpoint:
    def test_round_trip_preserves_forward(self, params, tmp_path, rng):
        path = tmp_path / "m.lpae"
        M.save_checkpoint(params, path)
        loaded = M.load_checkpoint(path)
        img = rng.uniform(size=(1, 3, 16, 16))
        a1, d1 = M.encode(params, img)
        a2, d2 = M.encode(loaded, img)
        # storage is f32 so compare at f32 resolution
        np.testing.assert_allclose(a1, a2, atol=1e-5)
        np.testing.assert_allclose(d1, d2, atol=1e-5)

    def test_save_is_byte_deterministic(self, params, tmp_path):
        p1, p2 = tmp_path / "a.lpae", tmp_path / "b.lpae"
        M.save_checkpoint(params, p1)
        M.save_checkpoint(params, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_second_round_trip_identical(self, params, tmp_path):
        p1, p2 = tmp_path / "a.lpae", tmp_path / "b.lpae"
        M.save_checkpoint(params, p1)
        M.save_checkpoint(M.load_checkpoint(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_name_table_validated(self, params, tmp_path):
        path = tmp_path / "m.lpae"
        M.save_checkpoint(params, path)
        tensors = read_tensors(path, b"LPAE")
        assert "decoder.0.weight" in tensors
        assert tensors["approx.0.weight"].shape == (16, 3, 3, 3)

    def test_corrupted_magic_rejected(self, params, tmp_path):
        path = tmp_path / "m.lpae"
        M.save_checkpoint(params, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"LPSR"
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            M.load_checkpoint(path)

    def test_missing_tensor_rejected(self, tmp_path):
        from lpnet.container import write_tensors
        path = tmp_path / "m.lpae"
        write_tensors(path, {"approx.0.weight": np.zeros((16, 3, 3, 3))},
                      b"LPAE")
        with pytest.raises(DataError, match="mismatch"):
            M.load_checkpoint(path)

    def test_param_count_stable(self, params):
        # 3 chains x 4 layers; documents the footprint of the default model
        assert M.param_count(params) == sum(
            a.size for a in M.param_dict(params).values())
        assert len(M.param_dict(params)) == 24
