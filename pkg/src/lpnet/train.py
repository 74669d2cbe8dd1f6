"""Training loops for the autoencoder and the super-resolution embedding.

An epoch is ceil(corpus_size / batch) sampled batches; the learning rate
follows the step schedule per epoch.  Everything is deterministic for a
fixed seed.
"""

import math

import numpy as np

from . import losses as L
from . import model as M
from . import optim
from . import sr as S
from .errors import DataError, NumericError
from .imageio import SampleConfig, sample_batch
from .tensor import make_rng


def _epoch_length(corpus_size, batch):
    return max(1, math.ceil(corpus_size / batch))


def _sample_cfg(cfg):
    return SampleConfig(crop_size=cfg.crop_size, flip_h=cfg.flip_h,
                        flip_v=cfg.flip_v, batch=cfg.batch)


def train_autoencoder(corpus, cfg, params=None, log=None):
    """Trains on a list of (1,c,h,w) images; returns (params, history).

    history: one dict per epoch with mean loss terms and the epoch lr.
    """
    if not corpus:
        raise DataError("empty corpus")
    params = params or M.init_params(seed=cfg.seed)
    rng = make_rng(cfg.seed)
    opt = optim.make_optimizer(cfg)
    pdict = M.param_dict(params)
    weights = L.LpaeLossWeights(cfg.alpha, cfg.beta, cfg.gamma)
    scfg = _sample_cfg(cfg)

    per_epoch = _epoch_length(len(corpus), cfg.batch)
    history = []
    acc = None
    step = 0
    while step < cfg.steps:
        epoch = step // per_epoch
        lr = optim.lr_at(cfg.lr0, cfg.decay_every, cfg.decay_factor, epoch)
        batch = sample_batch(corpus, scfg, rng)
        terms, grads = M.loss_and_grads(params, batch, weights)
        if not np.isfinite(terms["l_total"]):
            raise NumericError(f"non-finite loss at step {step}")
        opt.step(pdict, grads, lr)
        step += 1
        acc = terms if acc is None else \
            {k: acc[k] + v for k, v in terms.items()}
        if step % per_epoch == 0 or step == cfg.steps:
            n = per_epoch if step % per_epoch == 0 else step % per_epoch
            row = {"epoch": epoch, "step": step, "lr": lr}
            row.update({k: v / n for k, v in acc.items()})
            history.append(row)
            if log:
                log(row)
            acc = None
    return params, history


def train_sr(corpus, cfg, lpae, embed=None, log=None):
    """Trains the embedding against frozen (by default) autoencoder targets."""
    if not corpus:
        raise DataError("empty corpus")
    levels = int(round(math.log2(cfg.scale)))
    embed = embed or S.init_embed(cfg.seed, levels)
    rng = make_rng(cfg.seed)
    opt = optim.make_optimizer(cfg)
    edict = S.embed_param_dict(embed)
    if not cfg.freeze_decoder:
        ddict = {k: v for k, v in M.param_dict(lpae).items()
                 if k.startswith("decoder.")}
        dec_opt = optim.make_optimizer(cfg)
    lambdas = cfg.lambdas or L.default_lambdas(levels)
    weights = L.LpsrLossWeights(cfg.sr_gamma, cfg.sr_delta, tuple(lambdas))
    scfg = _sample_cfg(cfg)

    per_epoch = _epoch_length(len(corpus), cfg.batch)
    history = []
    acc = 0.0
    step = 0
    while step < cfg.steps:
        epoch = step // per_epoch
        lr = optim.lr_at(cfg.lr0, cfg.decay_every, cfg.decay_factor, epoch)
        batch = sample_batch(corpus, scfg, rng)
        terms, grads, dec_grads, _ = S.sr_loss_and_grads(
            embed, lpae, batch, weights,
            finetune_decoder=not cfg.freeze_decoder)
        opt.step(edict, grads, lr)
        if not cfg.freeze_decoder:
            dec_opt.step(ddict, dec_grads, lr)
        step += 1
        acc += terms["l_total"]
        if step % per_epoch == 0 or step == cfg.steps:
            n = per_epoch if step % per_epoch == 0 else step % per_epoch
            row = {"epoch": epoch, "step": step, "lr": lr, "l_total": acc / n}
            history.append(row)
            if log:
                log(row)
            acc = 0.0
    return embed, history
