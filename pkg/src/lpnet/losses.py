"""Training objectives and their gradients.

Autoencoder objective: mean-absolute reconstruction error, mean-squared
distance of the approximation to its fixed bicubic half-size target, and the
mean-squared magnitude of the detail band, combined with weights
(alpha, beta, gamma) defaulting to (1, 0.8, 1).

Super-resolution objective: L1 reconstruction plus a per-level L1 pyramid
term with weights lambda_i, combined as gamma * rec + delta * pyr with
defaults gamma=1, delta=10 and (lambda_1, lambda_2) = (0.8, 1.2) for x4.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

DEFAULT_LAMBDAS = (0.8, 1.2)


@dataclass
class LpaeLossWeights:
    alpha: float = 1.0
    beta: float = 0.8
    gamma: float = 1.0


@dataclass
class LpsrLossWeights:
    gamma: float = 1.0
    delta: float = 10.0
    lambdas: tuple = DEFAULT_LAMBDAS


def default_lambdas(levels):
    """0.8, 1.2, 1.6, ... (linear extension beyond the documented pair)."""
    return tuple((4 + 2 * i) / 5 for i in range(levels))


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def loss_reconstruction(target, recon):
    """Mean absolute error and its subgradient w.r.t. recon (sign(0) = 0)."""
    _same_shape(target, recon)
    diff = recon - target
    n = diff.size
    return float(np.abs(diff).sum() / n), np.sign(diff) / n


def loss_energy(approx, target):
    """Mean squared error and gradient w.r.t. approx."""
    _same_shape(approx, target)
    diff = approx - target
    n = diff.size
    return float((diff * diff).sum() / n), 2.0 * diff / n


def loss_sparsity(detail):
    """Mean squared magnitude and gradient w.r.t. detail."""
    n = detail.size
    return float((detail * detail).sum() / n), 2.0 * detail / n


def loss_lpae_total(l_r, l_e, l_s, weights=None):
    w = weights or LpaeLossWeights()
    return w.alpha * l_r + w.beta * l_e + w.gamma * l_s


def loss_lpsr(pred_coarse, pred_details, target_coarse, target_details,
              hr, recon, weights=None):
    """Total SR loss and gradients for every prediction.

    Returns (total, grad_recon, grad_coarse, [grad_detail per level]).
    Level order is finest first, matching PyramidDecomposition.
    """
    if weights is None:
        weights = LpsrLossWeights(lambdas=default_lambdas(len(pred_details)))
    if len(weights.lambdas) != len(pred_details):
        raise ShapeError(
            f"{len(weights.lambdas)} lambdas for {len(pred_details)} levels")
    l_rec, g_rec = loss_reconstruction(hr, recon)
    l_c, g_c = loss_reconstruction(target_coarse, pred_coarse)
    total_p = l_c
    g_details = []
    for lam, pred, tgt in zip(weights.lambdas, pred_details, target_details):
        l_d, g_d = loss_reconstruction(tgt, pred)
        total_p += lam * l_d
        g_details.append(weights.delta * lam * g_d)
    total = weights.gamma * l_rec + weights.delta * total_p
    return total, weights.gamma * g_rec, weights.delta * g_c, g_details
