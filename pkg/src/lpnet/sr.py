"""Pyramid super-resolution.

A small embedding network maps a low-resolution image to predicted pyramid
components (one coarse approximation plus one detail band per level); the
frozen autoencoder decoder then folds those into the 2^K-upscaled output.
Training targets come from the autoencoder's own multi-level encoding of the
high-resolution image, and the low-resolution training input is its coarsest
approximation.

The embedding is a residual stack: stem conv 3->32 + ReLU, three residual
blocks (conv-ReLU-conv plus skip), a linear approximation head, and per-level
detail heads made of 4x4 stride-2 transposed-conv upsamplers (ReLU between)
finishing in a linear conv.  Capacity is configurable; nothing here depends
on the exact widths.
"""

from dataclasses import dataclass

import numpy as np

from . import losses as L
from .container import MAGIC_EMBED, read_tensors, write_tensors
from .errors import DataError, NumericError, ShapeError
from .model import encode_pyramid, param_dict as model_param_dict
from .ops import Chain, ConvLayer, conv3x3, conv_backward, conv_forward, \
    relu_backward, relu_forward, tconv4x4
from .pyramid import PyramidDecomposition
from .tensor import check_tensor4, make_rng

FEATURES = 32


@dataclass
class EmbedParams:
    stem: ConvLayer
    blocks: list          # [(conv, conv)] with additive skip
    approx_head: ConvLayer
    detail_heads: list    # per level (finest first): Chain of upsamplers + conv

    @property
    def levels(self):
        return len(self.detail_heads)


def init_embed(seed, levels, channels=3, features=FEATURES, blocks=3):
    if levels not in (1, 2, 3):
        raise DataError("levels must be 1, 2 or 3 (scale 2, 4 or 8)")
    rng = make_rng(seed)
    stem = conv3x3(rng, channels, features)
    body = [(conv3x3(rng, features, features), conv3x3(rng, features, features))
            for _ in range(blocks)]
    approx_head = conv3x3(rng, features, channels)
    heads = []
    for k in range(1, levels + 1):
        ups = [tconv4x4(rng, features, features) for _ in range(levels - k + 1)]
        heads.append(Chain(ups + [conv3x3(rng, features, channels)]))
    return EmbedParams(stem, body, approx_head, heads)


def embed_param_dict(embed):
    out = {"stem.weight": embed.stem.weight, "stem.bias": embed.stem.bias}
    for i, (c1, c2) in enumerate(embed.blocks):
        out[f"block{i}.0.weight"] = c1.weight
        out[f"block{i}.0.bias"] = c1.bias
        out[f"block{i}.1.weight"] = c2.weight
        out[f"block{i}.1.bias"] = c2.bias
    out["approx_head.weight"] = embed.approx_head.weight
    out["approx_head.bias"] = embed.approx_head.bias
    for k, chain in enumerate(embed.detail_heads, start=1):
        for j, layer in enumerate(chain.layers):
            out[f"head{k}.{j}.weight"] = layer.weight
            out[f"head{k}.{j}.bias"] = layer.bias
    return out


def _trunk_forward(embed, x):
    tape = {"stem_in": x}
    pre = conv_forward(embed.stem, x)
    tape["stem_pre"] = pre
    f = relu_forward(pre)
    tape["blocks"] = []
    for c1, c2 in embed.blocks:
        pre1 = conv_forward(c1, f)
        h1 = relu_forward(pre1)
        h2 = conv_forward(c2, h1)
        tape["blocks"].append((f, pre1, h1))
        f = f + h2
    tape["features"] = f
    return f, tape


def _trunk_backward(embed, tape, g_f):
    grads = {}
    g = g_f
    for i in range(len(embed.blocks) - 1, -1, -1):
        c1, c2 = embed.blocks[i]
        f_in, pre1, h1 = tape["blocks"][i]
        gh1, gw2, gb2 = conv_backward(c2, h1, g)
        gpre1 = relu_backward(pre1, gh1)
        gf, gw1, gb1 = conv_backward(c1, f_in, gpre1)
        g = g + gf  # skip path
        grads[f"block{i}.0.weight"] = gw1
        grads[f"block{i}.0.bias"] = gb1
        grads[f"block{i}.1.weight"] = gw2
        grads[f"block{i}.1.bias"] = gb2
    g = relu_backward(tape["stem_pre"], g)
    _, gw, gb = conv_backward(embed.stem, tape["stem_in"], g)
    grads["stem.weight"] = gw
    grads["stem.bias"] = gb
    return grads


def predict_components(embed, lr_img):
    """Predicted pyramid components for a low-resolution input, with tapes."""
    lr_img = check_tensor4(lr_img)
    f, trunk_tape = _trunk_forward(embed, lr_img)
    coarse = conv_forward(embed.approx_head, f)
    details, head_tapes = [], []
    for chain in embed.detail_heads:
        det, tape = chain.forward_tape(f)
        details.append(det)
        head_tapes.append(tape)
    preds = PyramidDecomposition(details=details, coarsest=coarse)
    return preds, (trunk_tape, head_tapes, f)


def _decode_pyramid_tape(lpae, preds):
    cur = preds.coarsest
    tapes = []
    for det in reversed(preds.details):
        pred, tape = lpae.decoder.forward_tape(cur)
        if pred.shape != det.shape:
            raise ShapeError(
                f"detail {det.shape} does not chain with prediction {pred.shape}")
        tapes.append(tape)
        cur = det + pred
    return cur, tapes


def sr_forward(embed, lpae, lr_img, levels):
    """Returns (sr image at 2^levels the input size, predicted components)."""
    if levels != embed.levels:
        raise ShapeError(
            f"embedding predicts {embed.levels} levels, asked for {levels}")
    preds, _ = predict_components(embed, lr_img)
    sr, _ = _decode_pyramid_tape(lpae, preds)
    return sr, preds


def sr_loss_and_grads(embed, lpae, hr_batch, weights=None, finetune_decoder=False):
    """Total loss, embed grads, and (optionally) decoder grads for one batch."""
    levels = embed.levels
    targets = encode_pyramid(lpae, hr_batch, levels)
    lr_img = targets.coarsest

    preds, (trunk_tape, head_tapes, feats) = predict_components(embed, lr_img)
    sr, dec_tapes = _decode_pyramid_tape(lpae, preds)

    if weights is None:
        weights = L.LpsrLossWeights(lambdas=L.default_lambdas(levels))
    total, g_rec, g_coarse, g_details = L.loss_lpsr(
        preds.coarsest, preds.details, targets.coarsest, targets.details,
        hr_batch, sr, weights)
    if not np.isfinite(total):
        raise NumericError("non-finite super-resolution loss")

    # reconstruction gradient flows back through the decoder folds
    dec_grads = {}
    g = g_rec
    for k, tape in zip(range(1, levels + 1), reversed(dec_tapes)):
        g_details[k - 1] = g_details[k - 1] + g
        g, chain_grads = lpae.decoder.backward(tape, g)
        if finetune_decoder:
            for i, (gw, gb) in enumerate(chain_grads):
                dec_grads[f"decoder.{i}.weight"] = \
                    dec_grads.get(f"decoder.{i}.weight", 0.0) + gw
                dec_grads[f"decoder.{i}.bias"] = \
                    dec_grads.get(f"decoder.{i}.bias", 0.0) + gb
    g_coarse = g_coarse + g

    grads = {}
    g_f = np.zeros_like(feats)
    gin, gw, gb = conv_backward(embed.approx_head, feats, g_coarse)
    grads["approx_head.weight"] = gw
    grads["approx_head.bias"] = gb
    g_f = g_f + gin
    for k, (chain, tape) in enumerate(zip(embed.detail_heads, head_tapes), start=1):
        gin, chain_grads = chain.backward(tape, g_details[k - 1])
        g_f = g_f + gin
        for j, (gw, gb) in enumerate(chain_grads):
            grads[f"head{k}.{j}.weight"] = gw
            grads[f"head{k}.{j}.bias"] = gb
    grads.update(_trunk_backward(embed, trunk_tape, g_f))

    terms = {"l_total": total}
    return terms, grads, dec_grads, {"sr": sr, "lr": lr_img, "preds": preds}


def save_embed(embed, path):
    write_tensors(path, embed_param_dict(embed), MAGIC_EMBED)


def load_embed(path):
    tensors = read_tensors(path, MAGIC_EMBED)
    if "stem.weight" not in tensors:
        raise DataError(f"{path}: not an embedding checkpoint")
    features, channels = tensors["stem.weight"].shape[:2]
    levels = max((int(k[4]) for k in tensors if k.startswith("head")), default=0)
    blocks = 1 + max((int(k[5]) for k in tensors if k.startswith("block")), default=-1)
    embed = init_embed(0, levels, channels=channels, features=features,
                       blocks=blocks)
    expected = embed_param_dict(embed)
    if set(expected) != set(tensors):
        raise DataError(f"{path}: tensor table mismatch")
    for name, arr in expected.items():
        if arr.shape != tensors[name].shape:
            raise DataError(f"{path}: {name} shape {tensors[name].shape} "
                            f"!= {arr.shape}")
        arr[...] = tensors[name]
    return embed
