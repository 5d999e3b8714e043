import math

import numpy as np
import pytest

from carelu.activations import (
    baseline_backward,
    baseline_forward,
    baseline_init,
    carelu_backward,
    carelu_forward,
    cas_backward,
    cas_forward,
    cas_init,
    sech2,
    vanilla_sign_cas,
)
from carelu.gradcheck import central_diff, sample_rows
from carelu.indicators import CompetitionKind
from carelu.tensor import ShapeError

EPS = 1e-8


# --- initialization ---------------------------------------------------------

def test_init_values():
    p = cas_init("energy")
    assert p.alpha == 0.0
    assert p.beta == 1.0
    assert p.k == 1.0 / math.tanh(1.0)
    assert abs(p.k - 1.313035285499331) < 1e-14
    assert p.epsilon == 1e-8


def test_k_times_tanh_one_is_one_up_to_rounding():
    p = cas_init("count")
    assert abs(p.k * math.tanh(1.0) - 1.0) <= 2.3e-16


def test_identity_at_init_exact():
    p = cas_init("energy")
    z = np.array([[5.0, -3.0, 0.0]])
    zhat, _ = cas_forward(p, z)
    assert np.array_equal(zhat, z)


def test_identity_at_init_random(rng):
    for kind in CompetitionKind:
        p = cas_init(kind)
        z = rng.standard_normal((1000, 9)) * 4.0
        zhat, _ = cas_forward(p, z)
        rel = np.abs(zhat - z) / np.maximum(np.abs(z), 1e-300)
        assert rel.max() <= 1e-12


# --- cas forward -------------------------------------------------------------

def test_zero_input_stays_zero():
    p = cas_init("l1")
    p.alpha = 0.7
    p.beta = -0.2
    zhat, _ = cas_forward(p, np.zeros((3, 4)))
    assert np.array_equal(zhat, np.zeros((3, 4)))


def test_scalar_example_energy():
    # independent scalar arithmetic: p = 4/(5+eps), scale = K*tanh(p)
    p = cas_init("energy")
    p.alpha = 1.0
    p.beta = 0.0
    z = np.array([[2.0, -1.0]])
    zhat, cache = cas_forward(p, z)
    p_row = 4.0 / (5.0 + EPS)
    scale = (1.0 / math.tanh(1.0)) * math.tanh(p_row)
    assert abs(scale - 0.8719037090562045) < 1e-15
    assert abs(zhat[0, 0] - 2.0 * scale) < 1e-15
    assert abs(zhat[0, 1] + scale) < 1e-15
    assert cache.u[0] == p_row


def test_scale_bounded_by_k(rng):
    p = cas_init("energy")
    p.alpha = float(rng.uniform(-5, 5))
    p.beta = float(rng.uniform(-5, 5))
    z = rng.standard_normal((500, 6))
    _, cache = cas_forward(p, z)
    assert np.abs(cache.scale).max() < p.k
    pos = cache.u > 0
    assert np.all(cache.scale[pos] > 0)


def test_degenerates_to_constant_scaling(rng):
    # alpha = 0: the same scalar multiplies z regardless of its sign pattern
    for kind in CompetitionKind:
        p = cas_init(kind)
        p.alpha = 0.0
        p.beta = float(rng.uniform(-2, 2))
        scalar = p.k * np.tanh(np.float64(p.beta))
        z = rng.standard_normal((50, 5))
        flipped = z * np.where(rng.random(z.shape) < 0.5, -1.0, 1.0)
        zhat, cache = cas_forward(p, z)
        zhat_f, cache_f = cas_forward(p, flipped)
        assert np.unique(cache.scale).tolist() == [scalar]
        assert np.unique(cache_f.scale).tolist() == [scalar]
        assert np.array_equal(zhat, scalar * z)
        assert np.array_equal(zhat_f, scalar * flipped)
        assert abs(scalar - p.k * math.tanh(p.beta)) <= 1e-15


def test_positive_homogeneity(rng):
    c = 3.7
    z = sample_rows(rng, 200, 6, min_abs=0.05)
    for kind in (CompetitionKind.ENERGY, CompetitionKind.COUNT):
        p = cas_init(kind)
        p.alpha = 0.9
        p.beta = -0.1
        a, _ = cas_forward(p, c * z)
        b, _ = cas_forward(p, z)
        if kind is CompetitionKind.COUNT:
            rel = np.abs(a - c * b) / np.abs(c * b)
            assert rel.max() <= 1e-15
        else:
            assert np.abs(a - c * b).max() <= 1e-6


# --- cas backward ------------------------------------------------------------

def test_backward_identity_at_init(rng):
    p = cas_init("energy")
    z = rng.standard_normal((6, 5))
    _, cache = cas_forward(p, z)
    g = rng.standard_normal((6, 5))
    grad_z, _, _ = cas_backward(p, cache, g)
    assert np.array_equal(grad_z, g)


def test_backward_count_kind_has_no_coupling(rng):
    p = cas_init("count")
    p.alpha = 1.3
    p.beta = -0.4
    z = rng.standard_normal((6, 5))
    _, cache = cas_forward(p, z)
    g = rng.standard_normal((6, 5))
    grad_z, _, _ = cas_backward(p, cache, g)
    assert np.array_equal(grad_z, cache.scale[:, None] * g)


def test_backward_shape_mismatch(rng):
    p = cas_init("energy")
    _, cache = cas_forward(p, rng.standard_normal((4, 3)))
    with pytest.raises(ShapeError):
        cas_backward(p, cache, np.zeros((5, 3)))


def test_backward_matches_finite_differences(rng):
    p = cas_init("energy")
    p.alpha = float(rng.uniform(-1, 1))
    p.beta = float(rng.uniform(0, 1))
    z = sample_rows(rng, 1, 8)
    c = rng.uniform(-1.0, 1.0, size=z.shape)
    _, cache = cas_forward(p, z)
    grad_z, grad_a, grad_b = cas_backward(p, cache, c)

    numeric_z = central_diff(
        lambda v: float((cas_forward(p, v[None, :])[0] * c).sum()),
        z[0].copy(), h=1e-5)
    rel = np.abs(grad_z[0] - numeric_z) / np.maximum(
        np.maximum(np.abs(grad_z[0]), np.abs(numeric_z)), 1e-12)
    assert rel.max() <= 1e-5

    for attr, analytic in (("alpha", grad_a), ("beta", grad_b)):
        def loss(v):
            q = cas_init("energy")
            q.alpha, q.beta = p.alpha, p.beta
            setattr(q, attr, float(v[0]))
            return float((cas_forward(q, z)[0] * c).sum())
        numeric = central_diff(loss, np.array([getattr(p, attr)]), h=1e-5)[0]
        assert abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12) <= 1e-5


def test_grid_gradcheck(rng):
    # every (kind, alpha, beta) combination against the oracle
    for kind in CompetitionKind:
        for alpha in (-1.0, 0.0, 1.0):
            for beta in (0.0, 1.0):
                p = cas_init(kind)
                p.alpha, p.beta = alpha, beta
                z = sample_rows(rng, 1, 6)
                c = rng.uniform(0.2, 1.0, size=z.shape)
                _, cache = cas_forward(p, z)
                grad_z, _, _ = cas_backward(p, cache, c)
                numeric = central_diff(
                    lambda v: float((cas_forward(p, v[None, :])[0] * c).sum()),
                    z[0].copy(), h=1e-5)
                err = np.abs(grad_z[0] - numeric)
                denom = np.maximum(np.maximum(np.abs(grad_z[0]), np.abs(numeric)), 1e-3)
                assert (err / denom).max() <= 1e-5, (kind, alpha, beta)


def test_sech2_forms_agree_in_overlap(rng):
    u = rng.uniform(10.0, 20.0, size=1000) * np.where(rng.random(1000) < 0.5, -1, 1)
    exp_form = 4.0 / (np.exp(u) + np.exp(-u)) ** 2
    tanh_form = 1.0 - np.tanh(u) ** 2
    assert np.abs(sech2(u) - tanh_form).max() <= 1e-12
    assert np.abs(exp_form - tanh_form).max() <= 1e-12


def test_sech2_no_overflow_far_out():
    assert sech2(np.array([800.0, -800.0])).tolist() == [0.0, 0.0]


# --- carelu -------------------------------------------------------------------

def test_carelu_identity_then_relu():
    p = cas_init("energy")
    y, _ = carelu_forward(p, np.array([[5.0, -3.0]]))
    assert y.tolist() == [[5.0, 0.0]]


def test_carelu_scalar_example():
    p = cas_init("energy")
    p.alpha = 1.0
    p.beta = 0.0
    y, _ = carelu_forward(p, np.array([[2.0, -1.0]]))
    scale = (1.0 / math.tanh(1.0)) * math.tanh(4.0 / (5.0 + EPS))
    assert abs(y[0, 0] - 2.0 * scale) < 1e-15
    assert y[0, 1] == 0.0


def test_carelu_init_equals_relu(rng):
    p = cas_init("l1")
    z = rng.standard_normal((100, 7)) * 2.0
    y, _ = carelu_forward(p, z)
    assert np.array_equal(y, np.maximum(z, 0.0))


def test_carelu_fully_masked_kills_all_gradients(rng):
    p = cas_init("energy")
    p.alpha = 0.5
    p.beta = 1.0   # scale stays positive
    z = -np.abs(rng.standard_normal((4, 5))) - 0.1
    y, cache = carelu_forward(p, z)
    assert np.array_equal(y, np.zeros_like(z))
    grad_z, ga, gb = carelu_backward(p, cache, rng.standard_normal(z.shape))
    assert np.array_equal(grad_z, np.zeros_like(z))
    assert ga == 0.0 and gb == 0.0


def test_carelu_gradcheck(rng):
    p = cas_init("l1")
    p.alpha = 0.7
    p.beta = 0.4
    z = sample_rows(rng, 1, 8)
    c = rng.uniform(0.2, 1.0, size=z.shape)
    _, cache = carelu_forward(p, z)
    grad_z, _, _ = carelu_backward(p, cache, c)
    numeric = central_diff(
        lambda v: float((carelu_forward(p, v[None, :])[0] * c).sum()),
        z[0].copy(), h=1e-5)
    denom = np.maximum(np.maximum(np.abs(grad_z[0]), np.abs(numeric)), 1e-3)
    assert (np.abs(grad_z[0] - numeric) / denom).max() <= 1e-5


# --- vanilla hard-sign form -----------------------------------------------------

def test_vanilla_flips_when_negative_energy_wins():
    assert vanilla_sign_cas(np.array([[-3.0, 1.0]])).tolist() == [[3.0, 0.0]]


def test_vanilla_keeps_when_positive_energy_wins():
    assert vanilla_sign_cas(np.array([[3.0, -1.0]])).tolist() == [[3.0, 0.0]]


def test_vanilla_balanced_row_sits_on_negative_side_of_eps():
    # p = 1/(2+eps) < 1/2, so 2p - 1 < 0: the row is flipped
    assert vanilla_sign_cas(np.array([[1.0, -1.0]])).tolist() == [[0.0, 1.0]]


def test_vanilla_parametric_mode():
    z = np.array([[-3.0, 1.0]])
    # beta dominates: s = sgn(0.1*p + 1) = 1, plain relu
    assert vanilla_sign_cas(z, mode="parametric", alpha=0.1, beta=1.0).tolist() \
        == [[0.0, 1.0]]
    with pytest.raises(ValueError):
        vanilla_sign_cas(z, mode="parametric")
    with pytest.raises(ValueError):
        vanilla_sign_cas(z, mode="nope")


# --- baselines --------------------------------------------------------------------

def test_leaky_relu_example():
    act = baseline_init("leaky_relu")
    y, _ = baseline_forward(act, np.array([[-2.0, 3.0]]))
    assert y.tolist() == [[-0.02, 3.0]]


def test_swish1_at_zero():
    act = baseline_init("swish1")
    y, _ = baseline_forward(act, np.array([[0.0]]))
    assert y.tolist() == [[0.0]]


def test_prelu_slope_gradient():
    act = baseline_init("prelu")
    y, cache = baseline_forward(act, np.array([[-2.0]]))
    assert y.tolist() == [[-0.5]]
    _, grad_param = baseline_backward(act, cache, np.array([[1.0]]))
    assert grad_param == -2.0


def test_baseline_defaults():
    assert baseline_init("prelu").param == 0.25
    assert baseline_init("swish").param == 1.0
    assert baseline_init("leaky_relu").slope == 0.01
    with pytest.raises(ValueError):
        baseline_init("gelu")


@pytest.mark.parametrize("tag", ["relu", "leaky_relu", "prelu", "swish1", "swish"])
def test_baseline_gradients_match_oracle(tag, rng):
    act = baseline_init(tag)
    z = sample_rows(rng, 1, 6)
    c = rng.uniform(0.2, 1.0, size=z.shape)
    _, cache = baseline_forward(act, z)
    grad_z, grad_param = baseline_backward(act, cache, c)

    numeric_z = central_diff(
        lambda v: float((baseline_forward(act, v[None, :])[0] * c).sum()),
        z[0].copy(), h=1e-6)
    denom = np.maximum(np.maximum(np.abs(grad_z[0]), np.abs(numeric_z)), 1e-6)
    assert (np.abs(grad_z[0] - numeric_z) / denom).max() <= 1e-5

    if tag in ("prelu", "swish"):
        def loss(v):
            probe = baseline_init(tag)
            probe.param = float(v[0])
            return float((baseline_forward(probe, z)[0] * c).sum())
        numeric_p = central_diff(loss, np.array([act.param]), h=1e-6)[0]
        assert abs(grad_param - numeric_p) / max(abs(numeric_p), 1e-9) <= 1e-5
    else:
        assert grad_param == 0.0
