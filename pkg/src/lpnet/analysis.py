"""Quality metrics and the multiply-count cost model.

Complexity of a network spec is sum over conv layers of
in_ch * k^2 * out_ch * out_hw^2 plus in*out for fully connected layers;
FLOPs are counted as twice that.  PSNR/SSIM operate on [0,1] tensors with
peak 1.0; SSIM uses the standard 11x11 Gaussian window (sigma 1.5,
K1=0.01, K2=0.03) evaluated on fully interior windows, channels averaged.
"""

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataError, ShapeError
from .tensor import check_tensor4


def psnr(a, b, peak=1.0):
    """10*log10(peak^2 / MSE); +inf when the images are identical."""
    a, b = check_tensor4(a), check_tensor4(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size=11, sigma=1.5):
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_channel(a, b, win, c1, c2):
    # interior (valid) windows only, as in the reference formulation
    half = win.shape[0] // 2
    def filt(x):
        full = ndimage.correlate(x, win, mode="constant")
        return full[half:-half, half:-half]
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, peak=1.0, k1=0.01, k2=0.03):
    a, b = check_tensor4(a), check_tensor4(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape[2], a.shape[3]) < 11:
        raise ShapeError("ssim needs spatial dims >= 11")
    win = _gaussian_window()
    c1, c2 = (k1 * peak) ** 2, (k2 * peak) ** 2
    vals = [_ssim_channel(a[n, c], b[n, c], win, c1, c2)
            for n in range(a.shape[0]) for c in range(a.shape[1])]
    return float(np.mean(vals))


@dataclass
class QualityReport:
    psnr_db: float
    ssim: float
    per_channel_psnr: list = field(default_factory=list)


def quality_report(a, b, peak=1.0):
    per_ch = [psnr(a[:, c:c + 1], b[:, c:c + 1], peak) for c in range(a.shape[1])]
    return QualityReport(psnr_db=psnr(a, b, peak), ssim=ssim(a, b, peak),
                         per_channel_psnr=per_ch)


@dataclass
class ConvSpec:
    in_ch: int
    ksize: int
    out_ch: int
    out_hw: int

    def multiplies(self):
        return self.in_ch * self.ksize ** 2 * self.out_ch * self.out_hw ** 2


@dataclass
class FcSpec:
    in_features: int
    out_features: int

    def multiplies(self):
        return self.in_features * self.out_features


@dataclass
class NetSpec:
    layers: list = field(default_factory=list)


def parse_netspec(text, origin="<netspec>"):
    """One layer per line: 'conv in k out out_hw' or 'fc in out'; # comments."""
    layers = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "conv" and len(parts) == 5:
                layer = ConvSpec(*(int(p) for p in parts[1:]))
            elif parts[0] == "fc" and len(parts) == 3:
                layer = FcSpec(*(int(p) for p in parts[1:]))
            else:
                raise ValueError("bad layer kind")
            if min(vars(layer).values()) <= 0:
                raise ValueError("dims must be positive")
        except (ValueError, TypeError) as exc:
            raise DataError(f"{origin}:{lineno}: bad layer line {line!r}") from exc
        layers.append(layer)
    return NetSpec(layers)


def load_netspec(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return parse_netspec(text, origin=str(path))


def builtin_netspec(name):
    """Bundled layer tables ('vgg16' or 'resnet50'), 224x224 input."""
    ref = resources.files("lpnet.data") / f"{name}.spec"
    return parse_netspec(ref.read_text(), origin=f"builtin:{name}")


def complexity(spec):
    return sum(layer.multiplies() for layer in spec.layers)


def flops(spec):
    return 2 * complexity(spec)


def acceleration_rate(basic, connected):
    """Ratio of multiply counts; args are NetSpecs or raw counts."""
    nb = complexity(basic) if isinstance(basic, NetSpec) else float(basic)
    nc = complexity(connected) if isinstance(connected, NetSpec) else float(connected)
    if nc == 0:
        raise DataError("connected network has zero complexity")
    return nb / nc


def branch_fractions(detail_channel_ratio=0.25):
    """Cost fractions of the two encoder-fed branches vs the basic network.

    The approximation stream halves the spatial size (factor 1/4); the detail
    stream keeps full resolution but scales both channel counts by the given
    ratio, so its fraction is the ratio squared.
    """
    approx = 0.25
    detail = detail_channel_ratio ** 2
    return approx, detail
