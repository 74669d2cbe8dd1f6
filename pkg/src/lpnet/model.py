"""The two-branch pyramid autoencoder.

Encoder: an approximation branch (3x3 convs, first one stride 2) produces the
half-size approximation; a detail branch sees the input concatenated with the
nearest-upsampled approximation (6 channels) and produces the full-size signed
detail band.  Decoder: one 4x4 stride-2 transposed conv followed by three 3x3
convs maps the approximation back up; the reconstruction is detail plus that
prediction.  One set of weights is reused recursively for multi-level
encode/decode.
"""

from dataclasses import dataclass

import numpy as np

from . import losses as L
from .container import MAGIC_MODEL, read_tensors, write_tensors
from .errors import DataError, ShapeError
from .ops import Chain, conv3x3, nearest_up2, nearest_up2_backward, tconv4x4
from .pyramid import PyramidDecomposition, bicubic_down2
from .tensor import check_tensor4, make_rng

HIDDEN = 16


@dataclass
class AutoencoderParams:
    approx: Chain
    detail: Chain
    decoder: Chain

    def chains(self):
        return {"approx": self.approx, "detail": self.detail,
                "decoder": self.decoder}


def init_params(seed=0, channels=3, hidden=HIDDEN):
    rng = make_rng(seed)
    approx = Chain([
        conv3x3(rng, channels, hidden, stride=2),
        conv3x3(rng, hidden, hidden),
        conv3x3(rng, hidden, hidden),
        conv3x3(rng, hidden, channels),
    ])
    detail = Chain([
        conv3x3(rng, 2 * channels, hidden),
        conv3x3(rng, hidden, hidden),
        conv3x3(rng, hidden, hidden),
        conv3x3(rng, hidden, channels),
    ])
    decoder = Chain([
        tconv4x4(rng, channels, hidden),
        conv3x3(rng, hidden, hidden),
        conv3x3(rng, hidden, hidden),
        conv3x3(rng, hidden, channels),
    ])
    return AutoencoderParams(approx, detail, decoder)


def param_dict(params):
    """Flat name -> array view of every learnable tensor (shared storage)."""
    out = {}
    for cname, chain in params.chains().items():
        for i, layer in enumerate(chain.layers):
            out[f"{cname}.{i}.weight"] = layer.weight
            out[f"{cname}.{i}.bias"] = layer.bias
    return out


def param_count(params):
    return sum(a.size for a in param_dict(params).values())


def _check_image(x, channels):
    x = check_tensor4(x)
    if x.shape[1] != channels:
        raise ShapeError(f"expected {channels} channels, got {x.shape[1]}")
    if x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"spatial dims must be even, got {x.shape}")
    return x


def encode(params, img):
    """Returns (approx at half size, detail at full size)."""
    channels = params.approx.layers[0].in_ch
    img = _check_image(img, channels)
    approx = params.approx.forward(img)
    detail = params.detail.forward(
        np.concatenate([img, nearest_up2(approx)], axis=1))
    return approx, detail


def predict_from_approx(params, approx):
    """The decoder map: 2x upsampling of the approximation."""
    return params.decoder.forward(approx)


def decode(params, approx, detail):
    """Reconstruction = detail + decoder(approx)."""
    approx, detail = check_tensor4(approx), check_tensor4(detail)
    if (detail.shape[2], detail.shape[3]) != (2 * approx.shape[2], 2 * approx.shape[3]):
        raise ShapeError(
            f"detail {detail.shape} must be 2x approx {approx.shape} spatially")
    return detail + predict_from_approx(params, approx)


def encode_pyramid(params, img, levels):
    """Recursive encode: details finest-first plus the coarsest approximation."""
    img = check_tensor4(img)
    h, w = img.shape[2:]
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if h % (1 << levels) or w % (1 << levels):
        raise ShapeError(f"spatial dims {h}x{w} not divisible by {1 << levels}")
    details = []
    cur = img
    for _ in range(levels):
        cur, det = encode(params, cur)
        details.append(det)
    return PyramidDecomposition(details=details, coarsest=cur)


def decode_pyramid(params, p):
    """Fold decode from the coarsest level outward."""
    cur = check_tensor4(p.coarsest)
    for det in reversed(p.details):
        cur = decode(params, cur, det)
    return cur


def forward_full(params, img):
    """Single-level forward with tapes, for training.

    Returns dict with approx, detail, pred, recon and the three chain tapes.
    """
    channels = params.approx.layers[0].in_ch
    img = _check_image(img, channels)
    approx, tape_a = params.approx.forward_tape(img)
    det_in = np.concatenate([img, nearest_up2(approx)], axis=1)
    detail, tape_d = params.detail.forward_tape(det_in)
    pred, tape_p = params.decoder.forward_tape(approx)
    return {
        "approx": approx, "detail": detail, "pred": pred,
        "recon": detail + pred,
        "tapes": (tape_a, tape_d, tape_p),
    }


def loss_and_grads(params, img, weights=None):
    """Full objective and gradients for every parameter.

    Returns (terms, grads) where terms has l_r/l_e/l_s/l_total and grads is a
    dict matching param_dict keys.
    """
    weights = weights or L.LpaeLossWeights()
    out = forward_full(params, img)
    tape_a, tape_d, tape_p = out["tapes"]
    target = bicubic_down2(img)

    l_r, g_recon = L.loss_reconstruction(img, out["recon"])
    l_e, g_energy = L.loss_energy(out["approx"], target)
    l_s, g_sparse = L.loss_sparsity(out["detail"])

    g_detail = weights.alpha * g_recon + weights.gamma * g_sparse
    g_pred = weights.alpha * g_recon
    g_approx = weights.beta * g_energy

    gin_d, grads_d = params.detail.backward(tape_d, g_detail)
    channels = params.approx.layers[0].in_ch
    g_approx = g_approx + nearest_up2_backward(gin_d[:, channels:])
    gin_p, grads_p = params.decoder.backward(tape_p, g_pred)
    g_approx = g_approx + gin_p
    _, grads_a = params.approx.backward(tape_a, g_approx)

    grads = {}
    for cname, chain_grads in (("approx", grads_a), ("detail", grads_d),
                               ("decoder", grads_p)):
        for i, (gw, gb) in enumerate(chain_grads):
            grads[f"{cname}.{i}.weight"] = gw
            grads[f"{cname}.{i}.bias"] = gb

    terms = {"l_r": l_r, "l_e": l_e, "l_s": l_s,
             "l_total": L.loss_lpae_total(l_r, l_e, l_s, weights)}
    return terms, grads


def save_checkpoint(params, path):
    write_tensors(path, param_dict(params), MAGIC_MODEL)


def load_checkpoint(path):
    tensors = read_tensors(path, MAGIC_MODEL)
    channels = None
    if "approx.0.weight" in tensors:
        channels = tensors["approx.0.weight"].shape[1]
        hidden = tensors["approx.0.weight"].shape[0]
    if channels is None:
        raise DataError(f"{path}: not an autoencoder checkpoint")
    params = init_params(seed=0, channels=channels, hidden=hidden)
    expected = param_dict(params)
    if set(expected) != set(tensors):
        missing = set(expected) ^ set(tensors)
        raise DataError(f"{path}: tensor table mismatch ({sorted(missing)})")
    for name, arr in expected.items():
        if arr.shape != tensors[name].shape:
            raise DataError(
                f"{path}: {name} has shape {tensors[name].shape}, "
                f"expected {arr.shape}")
        arr[...] = tensors[name]
    return params
