import numpy as np
import pytest

from carelu.gradcheck import central_diff, sample_rows
from carelu.indicators import (
    CompetitionKind,
    indicator_backward,
    indicator_forward,
)
from carelu.tensor import ShapeError

EPS = 1e-8


def fwd(kind, row, eps=EPS):
    return float(indicator_forward(kind, np.asarray([row]), eps).p[0])


def test_energy_direct_arithmetic():
    assert fwd("energy", [2.0, -1.0]) == 4.0 / (5.0 + EPS)


def test_energy_all_zero_row():
    assert fwd("energy", [0.0, 0.0]) == 0.0


def test_l1_symmetric_input():
    assert fwd("l1", [2.0, -2.0]) == 2.0 / (4.0 + EPS)


def test_count_two_of_four():
    assert fwd("count", [3.0, -1.0, -2.0, 5.0]) == 0.5


def test_count_ignores_epsilon_and_zeros():
    # H(0) = 0: a zero entry is not a positive
    assert fwd("count", [0.0, 1.0]) == 0.5


def test_empty_rows_rejected():
    with pytest.raises(ShapeError):
        indicator_forward("energy", np.zeros((2, 0)))


def test_nonpositive_epsilon_rejected():
    with pytest.raises(ValueError):
        indicator_forward("energy", np.ones((1, 2)), epsilon=0.0)


def test_backward_needs_matching_cache():
    z = np.ones((2, 3))
    cached = indicator_forward("energy", z)
    with pytest.raises(ShapeError):
        indicator_backward("l1", z, cached)
    with pytest.raises(ShapeError):
        indicator_backward("energy", np.ones((3, 3)), cached)


def test_count_gradient_is_zero(rng):
    z = rng.standard_normal((10, 6))
    cached = indicator_forward("count", z)
    assert np.array_equal(indicator_backward("count", z, cached), np.zeros_like(z))


def test_energy_gradient_matches_central_differences():
    z = np.array([[2.0, -1.0]])
    cached = indicator_forward("energy", z)
    analytic = indicator_backward("energy", z, cached)[0]
    numeric = central_diff(
        lambda v: fwd("energy", v.tolist()), np.array([2.0, -1.0]), h=1e-6)
    rel = np.abs(analytic - numeric) / np.abs(numeric)
    assert rel.max() <= 1e-6


def test_l1_gradient_negative_branch_value():
    # pos sum = 2, |z|_1 = 4: negative entries get 2/16
    z = np.array([[2.0, -1.0, -1.0]])
    cached = indicator_forward("l1", z)
    grad = indicator_backward("l1", z, cached)[0]
    assert grad[1] == 0.125
    assert grad[2] == 0.125
    numeric = central_diff(
        lambda v: fwd("l1", v.tolist()), z[0].copy(), h=1e-6)
    rel = np.abs(grad - numeric) / np.maximum(np.abs(numeric), 1e-12)
    assert rel.max() <= 1e-6


def test_all_zero_rows_get_zero_gradient():
    z = np.zeros((2, 4))
    for kind in ("energy", "l1"):
        cached = indicator_forward(kind, z)
        assert np.array_equal(indicator_backward(kind, z, cached), np.zeros_like(z))


def test_subgradient_zero_at_zero_entries():
    z = np.array([[1.0, 0.0, -1.0]])
    cached = indicator_forward("l1", z)
    assert indicator_backward("l1", z, cached)[0][1] == 0.0


def test_range_invariant(rng):
    z = rng.standard_normal((10_000, 7)) * 3.0
    for kind in CompetitionKind:
        p = indicator_forward(kind, z).p
        assert p.min() >= 0.0 and p.max() <= 1.0


def test_sign_antisymmetry(rng):
    # d = 8 keeps count ratios k/d dyadic, so the count case is exact even
    # in floating point
    z = sample_rows(rng, 10_000, 8, min_abs=1e-3, max_abs=3.0, mixed=False)
    for kind in CompetitionKind:
        res_pos = indicator_forward(kind, z)
        res_neg = indicator_forward(kind, -z)
        gap = np.abs(res_neg.p - (1.0 - res_pos.p))
        if kind is CompetitionKind.COUNT:
            assert gap.max() == 0.0
        else:
            bound = EPS / (res_pos.total + EPS) + 1e-15
            assert np.all(gap <= bound)


def test_positive_scale_invariance(rng):
    z = sample_rows(rng, 10_000, 6, min_abs=1e-3, max_abs=3.0, mixed=False)
    c = rng.uniform(0.1, 10.0, size=10_000)
    for kind in CompetitionKind:
        res = indicator_forward(kind, z)
        res_c = indicator_forward(kind, c[:, None] * z)
        gap = np.abs(res_c.p - res.p)
        if kind is CompetitionKind.COUNT:
            assert gap.max() == 0.0
        else:
            den = np.minimum(res.total + EPS, res_c.total + EPS)
            assert np.all(gap <= EPS / den * (1.0 + 1e-9) + 1e-18)


def test_energy_gradient_orthogonal_to_input(rng):
    # scale invariance forces sum_i z_i dp/dz_i = 0 on zero-free rows
    z = sample_rows(rng, 1000, 8, min_abs=0.1, max_abs=2.0, mixed=False)
    cached = indicator_forward("energy", z)
    grad = indicator_backward("energy", z, cached)
    inner = (z * grad).sum(axis=1)
    assert np.abs(inner).max() <= 1e-10


def test_gradient_oracle_agreement_bulk(rng):
    # 1000 random rows, |z_j| > 0.01, h = 1e-6
    z = sample_rows(rng, 1000, 8)
    for kind in ("energy", "l1"):
        cached = indicator_forward(kind, z)
        analytic = indicator_backward(kind, z, cached)
        numeric = np.zeros_like(z)
        h = 1e-6
        for j in range(z.shape[1]):
            zp = z.copy(); zp[:, j] += h
            zm = z.copy(); zm[:, j] -= h
            numeric[:, j] = (indicator_forward(kind, zp).p
                             - indicator_forward(kind, zm).p) / (2.0 * h)
        rel = np.abs(analytic - numeric) / np.maximum(
            np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
        # ignore coordinates below the oracle's resolution
        meaningful = np.maximum(np.abs(analytic), np.abs(numeric)) >= 1e-3
        assert rel[meaningful].max() <= 1e-5
