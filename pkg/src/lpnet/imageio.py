"""Binary PPM/PGM image I/O, corpus handling and augmented batch sampling.

Pixels are 8-bit, maxval 255 only.  Loading divides by 255 into [0,1];
saving clamps to [0,1] and quantizes with round-half-up so the byte-level
result is bit-exact across platforms.
"""

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError
from .tensor import check_tensor4

_EXTENSIONS = (".ppm", ".pgm")

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


@dataclass
class SampleConfig:
    crop_size: int
    flip_h: bool = True
    flip_v: bool = True
    batch: int = 4


def _read_header_tokens(data, count):
    tokens, pos = [], 2  # skip the magic, handled by caller
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if not m:
            raise DataError("malformed header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def load_image(path):
    """Reads a binary P5/P6 file into a (1, c, h, w) tensor in [0, 1]."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise DataError(f"{path}: not a binary PGM/PPM (magic {magic!r})")
    try:
        (w_tok, h_tok, max_tok), pos = _read_header_tokens(data, 3)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except (DataError, ValueError) as exc:
        raise DataError(f"{path}: malformed header") from exc
    if maxval != 255:
        raise DataError(f"{path}: unsupported maxval {maxval}, need 255")
    pos += 1  # single whitespace byte after the header
    need = width * height * channels
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise DataError(f"{path}: truncated payload "
                        f"({len(payload)} of {need} bytes)")
    img = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    img = img.reshape(height, width, channels).transpose(2, 0, 1)
    return img[None]


def save_image(t, path):
    """Writes a (1, 1|3, h, w) tensor as binary P5/P6, maxval 255."""
    t = check_tensor4(t)
    if t.shape[0] != 1 or t.shape[1] not in (1, 3):
        raise ShapeError(f"saveable images are (1, 1|3, h, w), got {t.shape}")
    _, c, h, w = t.shape
    q = quantize(t)
    magic = b"P5" if c == 1 else b"P6"
    header = magic + b"\n" + f"{w} {h}".encode() + b"\n255\n"
    payload = q[0].transpose(1, 2, 0).tobytes()
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def quantize(t):
    """Clamp to [0,1] then round-half-up to uint8 (0.5 -> 128)."""
    v = np.clip(t, 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def list_corpus(directory):
    """Image paths under a directory, sorted lexicographically."""
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"corpus directory {directory} does not exist")
    paths = sorted(p for p in d.iterdir() if p.suffix.lower() in _EXTENSIONS)
    if not paths:
        raise DataError(f"no .ppm/.pgm files in {directory}")
    return paths


def load_corpus(directory):
    return [load_image(p) for p in list_corpus(directory)]


def sample_batch(images, cfg, rng):
    """Random crop + optional flips; one draw chain per sample, rng-ordered."""
    if not images:
        raise DataError("empty corpus")
    out = []
    for _ in range(cfg.batch):
        img = images[int(rng.integers(len(images)))]
        _, _, h, w = img.shape
        if cfg.crop_size > min(h, w):
            raise ShapeError(
                f"crop {cfg.crop_size} larger than image {h}x{w}")
        y0 = int(rng.integers(h - cfg.crop_size + 1))
        x0 = int(rng.integers(w - cfg.crop_size + 1))
        crop = img[0, :, y0:y0 + cfg.crop_size, x0:x0 + cfg.crop_size]
        if cfg.flip_h and rng.random() < 0.5:
            crop = crop[:, :, ::-1]
        if cfg.flip_v and rng.random() < 0.5:
            crop = crop[:, ::-1, :]
        out.append(crop)
    return np.ascontiguousarray(np.stack(out))


def synthetic_image(rng, size, channels=3):
    """One textured test image: gradient + sinusoids + rectangles, in [0,1].

    Values are pre-quantized to the 8-bit grid so a save/load round trip is
    exact.
    """
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((channels, size, size))
    for c in range(channels):
        gx, gy = rng.uniform(-1, 1, 2)
        layer = 0.5 + 0.25 * (gx * xx + gy * yy)
        for _ in range(3):
            fx, fy = rng.uniform(1.0, 12.0, 2)
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(0.05, 0.2)
            layer = layer + amp * np.sin(2 * np.pi * (fx * xx + fy * yy) + phase)
        img[c] = layer
    for _ in range(4):
        y0, x0 = rng.integers(0, size - 4, 2)
        hh = int(rng.integers(4, max(5, size // 3)))
        ww = int(rng.integers(4, max(5, size // 3)))
        val = rng.uniform(0, 1, channels)
        img[:, y0:y0 + hh, x0:x0 + ww] = \
            0.5 * img[:, y0:y0 + hh, x0:x0 + ww] + 0.5 * val[:, None, None]
    img = np.clip(img, 0.0, 1.0)
    img = np.floor(img * 255.0 + 0.5) / 255.0
    return img[None]


def synthetic_corpus(count, size, seed, channels=3):
    from .tensor import make_rng
    rng = make_rng(seed)
    return [synthetic_image(rng, size, channels) for _ in range(count)]


def write_synthetic_corpus(directory, count, size, seed):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(synthetic_corpus(count, size, seed)):
        p = d / f"synthetic_{i:03d}.ppm"
        save_image(img, p)
        paths.append(p)
    return paths
