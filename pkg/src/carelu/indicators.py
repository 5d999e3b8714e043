"""Competition indicators over signed pre-activations.

For each batch row z of d pre-activation values, an indicator measures how
strongly the positive entries dominate the negative ones:

    energy   p = sum_j max(z_j,0)^2 / (sum_j z_j^2 + eps)
    l1       p = sum_j max(z_j,0)   / (sum_j |z_j| + eps)
    count    p = #{j : z_j > 0} / d          (no eps; H(0) = 0)

One p per row, always in [0, 1].  The backward pass drops eps; where that
leaves 0/0 on an all-zero row, the gradient is defined as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .tensor import ShapeError, tensor


class CompetitionKind(str, Enum):
    ENERGY = "energy"
    L1 = "l1"
    COUNT = "count"


@dataclass(frozen=True)
class IndicatorResult:
    """Per-row indicator values plus the row reductions backward reuses."""

    kind: CompetitionKind
    p: np.ndarray       # (N,)
    pos: np.ndarray     # (N,) positive-part reduction (energy, l1 mass or count)
    total: np.ndarray   # (N,) eps-free denominator (total energy, l1 mass or d)


def _validate_rows(z) -> np.ndarray:
    z = tensor(z)
    if z.ndim != 2:
        raise ShapeError(f"indicator input must be rank-2, got rank {z.ndim}")
    if z.shape[1] < 1:
        raise ShapeError("indicator rows must have at least one feature")
    return z


def indicator_forward(kind, z, epsilon: float = 1e-8) -> IndicatorResult:
    """Compute the per-row competition indicator of ``kind``."""
    kind = CompetitionKind(kind)
    z = _validate_rows(z)
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if kind is CompetitionKind.ENERGY:
        pos = (np.maximum(z, 0.0) ** 2).sum(axis=1)
        total = (z * z).sum(axis=1)
        p = pos / (total + epsilon)
    elif kind is CompetitionKind.L1:
        pos = np.maximum(z, 0.0).sum(axis=1)
        total = np.abs(z).sum(axis=1)
        p = pos / (total + epsilon)
    else:
        pos = np.count_nonzero(z > 0.0, axis=1).astype(np.float64)
        total = np.full(z.shape[0], float(z.shape[1]))
        p = pos / total
    return IndicatorResult(kind=kind, p=p, pos=pos, total=total)


def indicator_backward(kind, z, cached: IndicatorResult) -> np.ndarray:
    """Gradient dp/dz_i per row, eps dropped.

    energy:  (2 max(z_i,0) ||z||^2 - 2 z_i sum_j max(z_j,0)^2) / ||z||^4
    l1:      pos/||z||_1^2 for z_i < 0, (||z||_1 - pos)/||z||_1^2 for z_i > 0,
             0 at z_i = 0
    count:   0 everywhere

    All-zero rows get a zero gradient rather than 0/0.
    """
    kind = CompetitionKind(kind)
    z = _validate_rows(z)
    if cached.kind is not kind:
        raise ShapeError(f"cache is for {cached.kind.value}, not {kind.value}")
    if cached.p.shape != (z.shape[0],):
        raise ShapeError("cache does not match the batch")

    if kind is CompetitionKind.COUNT:
        return np.zeros_like(z)

    total = cached.total
    pos = cached.pos
    zero_rows = total == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is CompetitionKind.ENERGY:
            grad = (2.0 * np.maximum(z, 0.0) * total[:, None]
                    - 2.0 * z * pos[:, None]) / (total * total)[:, None]
        else:
            neg_branch = (pos / (total * total))[:, None]
            pos_branch = ((total - pos) / (total * total))[:, None]
            grad = np.where(z < 0.0, neg_branch, 0.0)
            grad = np.where(z > 0.0, pos_branch, grad)
    grad[zero_rows] = 0.0
    return grad
