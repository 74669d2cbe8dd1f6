"""Differentiable primitives with hand-derived gradients.

Convolution means cross-correlation (no kernel flip) with zero padding.
Layers come in two kinds: 3x3 convolution (stride 1 or 2, padding 1) and
4x4 stride-2 transposed convolution (padding 1, output exactly 2x input).
The transposed forward/backward are expressed through the plain convolution
kernels: a transposed forward is the input-gradient of a strided convolution
and vice versa.
"""

from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import ShapeError
from .tensor import check_tensor4, xavier_init


@dataclass
class ConvLayer:
    weight: np.ndarray  # (out_ch, in_ch, k, k)
    bias: np.ndarray    # (out_ch,)
    stride: int = 1
    pad: int = 1
    transposed: bool = False

    @property
    def out_ch(self):
        return self.weight.shape[0]

    @property
    def in_ch(self):
        return self.weight.shape[1]

    @property
    def ksize(self):
        return self.weight.shape[2]


def conv3x3(rng, in_ch, out_ch, stride=1):
    """Xavier-initialized 3x3 layer, padding 1; biases start at zero."""
    fan_in, fan_out = in_ch * 9, out_ch * 9
    w = xavier_init(rng, fan_in, fan_out, (out_ch, in_ch, 3, 3))
    return ConvLayer(w, np.zeros(out_ch), stride=stride, pad=1)


def tconv4x4(rng, in_ch, out_ch):
    """Xavier-initialized 4x4 stride-2 transposed layer (2x upsampling)."""
    fan_in, fan_out = in_ch * 16, out_ch * 16
    w = xavier_init(rng, fan_in, fan_out, (out_ch, in_ch, 4, 4))
    return ConvLayer(w, np.zeros(out_ch), stride=2, pad=1, transposed=True)


def _check_input(layer, x):
    x = check_tensor4(x)
    if x.shape[1] != layer.in_ch:
        raise ShapeError(
            f"layer expects {layer.in_ch} channels, input has {x.shape[1]}")
    if not layer.transposed and layer.stride == 2 and (x.shape[2] % 2 or x.shape[3] % 2):
        raise ShapeError(f"stride-2 layer needs even spatial dims, got {x.shape}")
    return np.ascontiguousarray(x, dtype=np.float64)


def conv_forward(layer, x):
    x = _check_input(layer, x)
    if layer.transposed:
        n, _, h, w = x.shape
        wk = np.ascontiguousarray(layer.weight.transpose(1, 0, 2, 3))
        y = backends.conv2d_grad_input(x, wk, layer.stride, layer.pad,
                                       layer.stride * h, layer.stride * w)
    else:
        y = backends.conv2d(x, layer.weight, layer.stride, layer.pad)
    return y + layer.bias[None, :, None, None]


def conv_backward(layer, x, grad_out):
    """Gradients of conv_forward w.r.t. input, weight and bias."""
    x = _check_input(layer, x)
    grad_out = check_tensor4(grad_out)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    if layer.transposed:
        wk = np.ascontiguousarray(layer.weight.transpose(1, 0, 2, 3))
        grad_x = backends.conv2d(grad_out, wk, layer.stride, layer.pad)
        gw = backends.conv2d_grad_weight(x, grad_out, layer.stride, layer.pad,
                                         layer.ksize)
        grad_w = np.ascontiguousarray(gw.transpose(1, 0, 2, 3))
    else:
        grad_x = backends.conv2d_grad_input(grad_out, layer.weight, layer.stride,
                                            layer.pad, x.shape[2], x.shape[3])
        grad_w = backends.conv2d_grad_weight(grad_out, x, layer.stride,
                                             layer.pad, layer.ksize)
    if grad_x.shape != x.shape:
        raise ShapeError(
            f"grad_out shape {grad_out.shape} inconsistent with input {x.shape}")
    return grad_x, grad_w, grad_b


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(x, grad_out):
    # gradient defined as 0 at exactly 0
    return np.where(x > 0.0, grad_out, 0.0)


def nearest_up2(x):
    x = check_tensor4(x)
    return x.repeat(2, axis=2).repeat(2, axis=3)


def nearest_up2_backward(grad_out):
    n, c, h, w = grad_out.shape
    return grad_out.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


class Chain:
    """A stack of ConvLayers with ReLU between layers; the last layer is linear.

    Linear outputs matter: detail bands are signed differences, so the final
    activation of each branch must be able to go negative.
    """

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x):
        y, _ = self.forward_tape(x)
        return y

    def forward_tape(self, x):
        tape = []
        last = len(self.layers) - 1
        for idx, layer in enumerate(self.layers):
            pre = conv_forward(layer, x)
            tape.append((x, pre))
            x = relu_forward(pre) if idx != last else pre
        return x, tape

    def backward(self, tape, grad_out):
        """Returns (grad_input, [(grad_w, grad_b) per layer])."""
        grads = [None] * len(self.layers)
        last = len(self.layers) - 1
        g = grad_out
        for idx in range(last, -1, -1):
            x_in, pre = tape[idx]
            if idx != last:
                g = relu_backward(pre, g)
            g, gw, gb = conv_backward(self.layers[idx], x_in, g)
            grads[idx] = (gw, gb)
        return g, grads
