"""Batch normalization over the feature axis, and the BN-CAReLU chain.

BN-CAReLU deliberately runs CAS *before* normalization (relu(bn(cas(z)))):
the competition between positive and negative entries has to be measured on
the raw pre-activations, since normalization recentres them and would
distort the vote.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import CasCache, CasParams, cas_backward, cas_forward
from .tensor import ShapeError, tensor


class BatchTooSmall(ValueError):
    """Train-mode batch statistics need at least two rows."""


class InvalidMode(RuntimeError):
    """Operation not valid for the state's current mode."""


@dataclass
class BnState:
    gamma: np.ndarray
    shift: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    bn_eps: float = 1e-5
    mode: str = "train"


def bn_init(dim: int, momentum: float = 0.1, bn_eps: float = 1e-5) -> BnState:
    return BnState(
        gamma=np.ones(dim),
        shift=np.zeros(dim),
        running_mean=np.zeros(dim),
        running_var=np.ones(dim),
        momentum=momentum,
        bn_eps=bn_eps,
    )


@dataclass(frozen=True)
class BnCache:
    x: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    mode: str


def bn_forward(state: BnState, x) -> tuple[np.ndarray, BnCache]:
    """Normalize per feature; train mode uses batch stats and updates the
    running ones (biased variance in the normalization, unbiased in the
    running average)."""
    x = tensor(x)
    if x.ndim != 2 or x.shape[1] != state.gamma.shape[0]:
        raise ShapeError(f"expected (N, {state.gamma.shape[0]}) input, got {x.shape}")
    n = x.shape[0]
    if state.mode == "train":
        if n < 2:
            raise BatchTooSmall(f"train-mode batch norm needs N >= 2, got N = {n}")
        mean = x.mean(axis=0)
        var = ((x - mean) ** 2).mean(axis=0)
        m = state.momentum
        state.running_mean = (1.0 - m) * state.running_mean + m * mean
        state.running_var = (1.0 - m) * state.running_var + m * var * n / (n - 1)
    elif state.mode == "eval":
        mean = state.running_mean
        var = state.running_var
    else:
        raise InvalidMode(f"unknown mode {state.mode!r}")
    inv_std = 1.0 / np.sqrt(var + state.bn_eps)
    xhat = (x - mean) * inv_std
    y = state.gamma * xhat + state.shift
    return y, BnCache(x=x, xhat=xhat, inv_std=inv_std, mode=state.mode)


def bn_backward(state: BnState, cache: BnCache,
                grad_out) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient through the train-mode batch statistics."""
    if cache.mode != "train":
        raise InvalidMode("bn_backward needs a train-mode cache")
    grad_out = tensor(grad_out)
    if grad_out.shape != cache.x.shape:
        raise ShapeError("grad shape does not match cached batch")
    n = grad_out.shape[0]
    grad_shift = grad_out.sum(axis=0)
    grad_gamma = (grad_out * cache.xhat).sum(axis=0)
    g = grad_out * state.gamma
    grad_x = (cache.inv_std / n) * (
        n * g - g.sum(axis=0) - cache.xhat * (g * cache.xhat).sum(axis=0))
    return grad_x, grad_gamma, grad_shift


@dataclass(frozen=True)
class BnCareluCache:
    cas: CasCache
    bn: BnCache
    mask: np.ndarray


def bn_carelu_forward(cas: CasParams, bn: BnState,
                      z) -> tuple[np.ndarray, BnCareluCache]:
    """relu(bn(cas(z))) — CAS first, so the vote sees raw pre-activations."""
    zhat, cas_cache = cas_forward(cas, z)
    pre, bn_cache = bn_forward(bn, zhat)
    y = np.maximum(pre, 0.0)
    return y, BnCareluCache(cas=cas_cache, bn=bn_cache,
                            mask=(pre > 0.0).astype(np.float64))


def bn_carelu_backward(cas: CasParams, bn: BnState, cache: BnCareluCache,
                       grad_out):
    """Chain the three backward passes; returns
    (grad_z, grad_alpha, grad_beta, grad_gamma, grad_shift)."""
    grad_out = tensor(grad_out)
    if grad_out.shape != cache.mask.shape:
        raise ShapeError("grad shape does not match cached batch")
    g = grad_out * cache.mask
    grad_pre, grad_gamma, grad_shift = bn_backward(bn, cache.bn, g)
    grad_z, grad_alpha, grad_beta = cas_backward(cas, cache.cas, grad_pre)
    return grad_z, grad_alpha, grad_beta, grad_gamma, grad_shift
