"""The CAS/CAReLU activation family and the baseline activations.

CAS multiplies each row z by the scalar K*tanh(alpha*p + beta), where p is
the row's competition indicator.  With alpha=0, beta=1 and K=1/tanh(1) the
map starts as the exact identity; training moves alpha/beta so the scale
adapts to each row's positive-vs-negative balance.  CAReLU is ReLU applied
to the CAS output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .indicators import (
    CompetitionKind,
    IndicatorResult,
    indicator_backward,
    indicator_forward,
)
from .tensor import ShapeError, tensor


@dataclass
class CasParams:
    """Per-layer scaling parameters.

    ``alpha`` and ``beta`` are trainable; ``k`` is fixed at construction to
    1/tanh(beta0) and never updated.
    """

    alpha: float
    beta: float
    k: float
    epsilon: float
    kind: CompetitionKind


@dataclass(frozen=True)
class CasCache:
    z: np.ndarray            # input batch
    ind: IndicatorResult
    u: np.ndarray            # (N,) alpha*p + beta
    scale: np.ndarray        # (N,) k * tanh(u)


def cas_init(kind) -> CasParams:
    """Identity-at-init parameters: alpha=0, beta=1, k=1/tanh(1)."""
    beta0 = 1.0
    return CasParams(
        alpha=0.0,
        beta=beta0,
        k=1.0 / math.tanh(beta0),
        epsilon=1e-8,
        kind=CompetitionKind(kind),
    )


def sech2(u) -> np.ndarray:
    """sech^2(u) = 4/(e^u + e^-u)^2, via 1 - tanh^2 where exp would overflow."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    small = np.abs(u) <= 20.0
    eu = np.exp(u[small])
    out[small] = 4.0 / (eu + 1.0 / eu) ** 2
    t = np.tanh(u[~small])
    out[~small] = 1.0 - t * t
    return out


def cas_forward(params: CasParams, z) -> tuple[np.ndarray, CasCache]:
    """Scale each row of z by k*tanh(alpha*p + beta)."""
    z = tensor(z)
    ind = indicator_forward(params.kind, z, params.epsilon)
    u = params.alpha * ind.p + params.beta
    scale = params.k * np.tanh(u)
    zhat = scale[:, None] * z
    return zhat, CasCache(z=z, ind=ind, u=u, scale=scale)


def cas_backward(params: CasParams, cache: CasCache,
                 grad_out) -> tuple[np.ndarray, float, float]:
    """Backward pass for CAS.

    With D_n = sum_j grad_out[n,j] * z[n,j]:

        dL/dalpha = sum_n k * sech^2(u_n) * p_n * D_n
        dL/dbeta  = sum_n k * sech^2(u_n) * D_n
        dL/dz_i   = k * (sech^2(u) * alpha * dp/dz_i * D) + scale * grad_out_i

    Parameter gradients are summed over the batch; the loss applies its
    1/N exactly once.
    """
    grad_out = tensor(grad_out)
    if grad_out.shape != cache.z.shape:
        raise ShapeError(
            f"grad shape {grad_out.shape} does not match cache batch {cache.z.shape}")
    d = (grad_out * cache.z).sum(axis=1)
    s2 = sech2(cache.u)
    grad_alpha = float(params.k * (s2 * cache.ind.p * d).sum())
    grad_beta = float(params.k * (s2 * d).sum())
    dp = indicator_backward(params.kind, cache.z, cache.ind)
    grad_z = (params.k * params.alpha) * (s2 * d)[:, None] * dp \
        + cache.scale[:, None] * grad_out
    return grad_z, grad_alpha, grad_beta


@dataclass(frozen=True)
class CareluCache:
    cas: CasCache
    mask: np.ndarray         # 1 where the CAS output was > 0


def carelu_forward(params: CasParams, z) -> tuple[np.ndarray, CareluCache]:
    """ReLU after CAS."""
    zhat, cache = cas_forward(params, z)
    y = np.maximum(zhat, 0.0)
    return y, CareluCache(cas=cache, mask=(zhat > 0.0).astype(np.float64))


def carelu_backward(params: CasParams, cache: CareluCache,
                    grad_out) -> tuple[np.ndarray, float, float]:
    grad_out = tensor(grad_out)
    if grad_out.shape != cache.mask.shape:
        raise ShapeError(
            f"grad shape {grad_out.shape} does not match cache batch {cache.mask.shape}")
    return cas_backward(params, cache.cas, grad_out * cache.mask)


def vanilla_sign_cas(z, mode: str = "fixed", alpha: float | None = None,
                     beta: float | None = None, epsilon: float = 1e-8) -> np.ndarray:
    """Forward-only hard-sign ablation form (energy indicator).

    ``fixed``: y = relu(sgn(2 p_E - 1) * z), flipping the row when the
    negative entries carry more energy.  ``parametric``: the factor 2 and
    bias -1 are replaced by (alpha, beta).  sgn(0) = 0.  The hard sign has
    no usable gradient, so no backward exists for this form.
    """
    z = tensor(z)
    ind = indicator_forward(CompetitionKind.ENERGY, z, epsilon)
    if mode == "fixed":
        s = np.sign(2.0 * ind.p - 1.0)
    elif mode == "parametric":
        if alpha is None or beta is None:
            raise ValueError("parametric mode needs alpha and beta")
        s = np.sign(alpha * ind.p + beta)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return np.maximum(s[:, None] * z, 0.0)


# --- baseline activations -------------------------------------------------

BASELINE_TAGS = ("relu", "leaky_relu", "prelu", "swish1", "swish")


@dataclass
class BaselineActivation:
    """A baseline activation; ``param`` is the trainable scalar when any.

    prelu: param = negative-part slope (init 0.25).
    swish: param = gate sharpness beta (init 1.0).
    leaky_relu: fixed ``slope``, nothing trainable.
    """

    tag: str
    slope: float = 0.01
    param: float = 0.0


def baseline_init(tag: str, slope: float = 0.01) -> BaselineActivation:
    if tag not in BASELINE_TAGS:
        raise ValueError(f"unknown baseline activation {tag!r}")
    if tag == "prelu":
        param = 0.25
    elif tag == "swish":
        param = 1.0
    else:
        param = 0.0
    return BaselineActivation(tag=tag, slope=slope, param=param)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def baseline_forward(act: BaselineActivation, z) -> tuple[np.ndarray, tuple]:
    z = tensor(z)
    if act.tag == "relu":
        return np.maximum(z, 0.0), (z, None)
    if act.tag == "leaky_relu":
        return np.where(z > 0.0, z, act.slope * z), (z, None)
    if act.tag == "prelu":
        return np.where(z > 0.0, z, act.param * z), (z, None)
    if act.tag == "swish1":
        sig = _sigmoid(z)
        return z * sig, (z, sig)
    if act.tag == "swish":
        sig = _sigmoid(act.param * z)
        return z * sig, (z, sig)
    raise ValueError(f"unknown baseline activation {act.tag!r}")


def baseline_backward(act: BaselineActivation, cache: tuple,
                      grad_out) -> tuple[np.ndarray, float]:
    """Returns (grad_z, grad_param); grad_param is 0.0 for fixed activations."""
    z, sig = cache
    grad_out = tensor(grad_out)
    if grad_out.shape != z.shape:
        raise ShapeError("grad shape does not match cached batch")
    if act.tag == "relu":
        return grad_out * (z > 0.0), 0.0
    if act.tag == "leaky_relu":
        return np.where(z > 0.0, grad_out, act.slope * grad_out), 0.0
    if act.tag == "prelu":
        grad_z = np.where(z > 0.0, grad_out, act.param * grad_out)
        grad_param = float((grad_out * np.where(z > 0.0, 0.0, z)).sum())
        return grad_z, grad_param
    if act.tag == "swish1":
        grad_z = grad_out * (sig + z * sig * (1.0 - sig))
        return grad_z, 0.0
    if act.tag == "swish":
        grad_z = grad_out * (sig + act.param * z * sig * (1.0 - sig))
        grad_param = float((grad_out * z * z * sig * (1.0 - sig)).sum())
        return grad_z, grad_param
    raise ValueError(f"unknown baseline activation {act.tag!r}")
