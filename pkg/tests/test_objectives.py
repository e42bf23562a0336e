import numpy as np
import pytest

from lco_lab.dist import Advantages, softmax
from lco_lab.errors import DegenerateRatioError, InvalidInputError
from lco_lab.objectives import (
    BatchItem,
    ObjectiveKind,
    TimestepContext,
    batch_eval,
    lco_kld_eval,
    lco_lch_eval,
    lco_mse_eval,
    ppo_active,
    ppo_eval,
    reinforce_eval,
    sft_eval,
)

from oracles import central_diff, log_cosh_hp, rel_close


def sparse(value, action, v):
    values = np.zeros(v)
    values[action] = value
    return Advantages(values, sparse_mask=frozenset({action}))


def make_ctx(z_old, action, adv, eps=0.2, beta=1.0):
    return TimestepContext.from_logits(z_old, action, sparse(adv, action, len(z_old)), beta, eps)


# --- SFT -------------------------------------------------------------------


def test_sft_symmetric_point():
    e = sft_eval([0.0, 0.0], 0)
    assert abs(e.value - np.log(2)) < 1e-15
    assert np.allclose(e.logit_gradient, [-0.5, 0.5], atol=1e-15)


def test_sft_near_optimum():
    z = np.array([40.0, 0.0, 0.0])
    e = sft_eval(z, 0)
    assert e.value < 1e-12
    assert np.abs(e.logit_gradient).max() < 1e-12


def test_sft_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(20):
        z = rng.uniform(-2, 2, int(rng.integers(2, 8)))
        target = int(rng.integers(z.size))
        e = sft_eval(z, target)
        assert rel_close(e.logit_gradient, central_diff(lambda q: sft_eval(q, target).value, z))
        assert abs(e.logit_gradient.sum()) <= 1e-12


# --- PPO -------------------------------------------------------------------


def test_ppo_gating():
    ctx = make_ctx([0.0, 0.0], 0, 1.0)
    assert ppo_active(ctx, [0.0, 0.0])  # on-policy, positive advantage

    # push the ratio past 1 + eps: positive advantage clips
    z_hi = np.array([2.0, 0.0])
    assert not ppo_active(ctx, z_hi)

    ctx_neg = make_ctx([0.0, 0.0], 0, -1.0)
    z_lo = np.array([-2.0, 0.0])
    assert not ppo_active(ctx_neg, z_lo)

    assert not ppo_active(make_ctx([0.0, 0.0], 0, 0.0), [0.0, 0.0])  # zero advantage


def test_ppo_hand_worked_gradient():
    # two actions, behavioral probability one half, negative unit advantage
    ctx = make_ctx([0.0, 0.0], 0, -1.0)
    e = ppo_eval(ctx, [0.0, 0.0])
    assert np.allclose(e.logit_gradient, [0.5, -0.5], atol=1e-15)
    assert abs(e.value - 1.0) < 1e-15  # -min(r*A, clip*A) = -A at r = 1


def test_ppo_zero_advantage():
    e = ppo_eval(make_ctx([0.3, -0.3], 0, 0.0), [0.3, -0.3])
    assert e.value == 0.0
    assert np.array_equal(e.logit_gradient, [0.0, 0.0])


def test_ppo_clipped_region_zero_gradient_and_clipped_value():
    ctx = make_ctx([0.0, 0.0], 0, 1.0, eps=0.2)
    z = np.array([2.0, 0.0])  # ratio ~1.76 > 1.2
    e = ppo_eval(ctx, z)
    assert np.array_equal(e.logit_gradient, [0.0, 0.0])
    assert abs(e.value - (-1.2)) < 1e-15  # clipped branch -(1+eps)*A


def test_ppo_gradient_matches_unclipped_surrogate():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 20:
        v = int(rng.integers(2, 6))
        z_old = rng.uniform(-2, 2, v)
        action = int(rng.integers(v))
        adv = float(rng.uniform(0.1, 2.0)) * (1 if rng.random() < 0.5 else -1)
        ctx = make_ctx(z_old, action, adv)
        z = z_old + rng.uniform(-0.05, 0.05, v)
        if not ppo_active(ctx, z):
            continue
        surrogate = lambda q: -(softmax(q)[action] / ctx.pi_old[action]) * adv
        e = ppo_eval(ctx, z)
        assert rel_close(e.logit_gradient, central_diff(surrogate, z))
        assert abs(e.logit_gradient.sum()) <= 1e-12
        checked += 1


def test_ppo_degenerate_ratio():
    z_old = np.array([800.0, 0.0])  # behavioral probability of action 1 underflows
    ctx = TimestepContext.from_logits(z_old, 1, sparse(1.0, 1, 2))
    with pytest.raises(DegenerateRatioError):
        ppo_eval(ctx, z_old)


# --- REINFORCE -------------------------------------------------------------


def test_reinforce_zero_advantage():
    e = reinforce_eval(make_ctx([0.1, -0.2], 1, 0.0), [0.1, -0.2])
    assert e.value == 0.0
    assert np.array_equal(e.logit_gradient, [0.0, 0.0])


def test_reinforce_unit_advantage_equals_sft():
    rng = np.random.default_rng(13)
    for _ in range(20):
        v = int(rng.integers(2, 9))
        z = rng.uniform(-2, 2, v)
        action = int(rng.integers(v))
        a_eval = reinforce_eval(make_ctx(rng.uniform(-1, 1, v), action, 1.0), z)
        b_eval = sft_eval(z, action)
        assert abs(a_eval.value - b_eval.value) <= 1e-12
        assert np.abs(a_eval.logit_gradient - b_eval.logit_gradient).max() <= 1e-12


def test_reinforce_gradient_matches_finite_differences():
    rng = np.random.default_rng(17)
    for _ in range(20):
        v = int(rng.integers(2, 8))
        z = rng.uniform(-2, 2, v)
        ctx = make_ctx(rng.uniform(-1, 1, v), int(rng.integers(v)), float(rng.uniform(-2, 2)))
        e = reinforce_eval(ctx, z)
        assert rel_close(e.logit_gradient, central_diff(lambda q: reinforce_eval(ctx, q).value, z))


# --- LCO objectives --------------------------------------------------------


def test_lco_mse_values():
    z = np.array([1.0, -2.0, 0.5, 3.0])
    e = lco_mse_eval(z, z)
    assert e.value == 0.0 and np.array_equal(e.logit_gradient, np.zeros(4))

    e = lco_mse_eval(np.array([1.0, 0, 0, 0]), np.zeros(4))
    assert abs(e.value - 0.25) < 1e-15
    assert np.allclose(e.logit_gradient, [0.5, 0, 0, 0], atol=1e-15)


def test_lco_lch_overflow_safe():
    e = lco_lch_eval(np.array([50.0, 0.0]), np.zeros(2))
    assert abs(e.value - (50.0 - np.log(2.0)) / 2.0) < 1e-12
    assert abs(e.value - log_cosh_hp(50.0) / 2.0) < 1e-12
    huge = lco_lch_eval(np.array([2000.0, 0.0]), np.zeros(2))
    assert np.isfinite(huge.value)
    assert abs(huge.value - (2000.0 - np.log(2.0)) / 2.0) < 1e-9


def test_lco_lch_small_residual_accuracy():
    e = lco_lch_eval(np.array([1e-8, 0.0]), np.zeros(2))
    # logcosh(x) ~ x^2/2 must keep relative accuracy at tiny residuals
    assert abs(e.value - 0.25e-16) < 1e-20


def test_lco_kld_values():
    z = np.array([0.4, -1.0, 2.0])
    e = lco_kld_eval(z, softmax(z))
    assert e.value == 0.0
    assert np.abs(e.logit_gradient).max() < 1e-15

    e = lco_kld_eval(np.array([np.log(3.0), 0.0]), np.array([0.5, 0.5]))
    assert np.allclose(e.logit_gradient, [0.25, -0.25], atol=1e-12)


def test_lco_kld_value_stays_nonnegative_near_convergence():
    z = np.array([0.7, -0.1, 0.4])
    pi = softmax(z)
    shifted = pi + np.array([1e-13, -1e-13, 0.0])
    shifted /= shifted.sum()
    e = lco_kld_eval(z, shifted)
    assert e.value >= 0.0
    assert e.value < 1e-20


def test_lco_gradients_match_finite_differences():
    rng = np.random.default_rng(19)
    for _ in range(20):
        v = int(rng.integers(2, 9))
        z = rng.uniform(-3, 3, v)
        z_star = rng.uniform(-3, 3, v)
        pi_star = softmax(rng.uniform(-2, 2, v))
        for evaluate, f in (
            (lambda q: lco_mse_eval(q, z_star), lambda q: lco_mse_eval(q, z_star).value),
            (lambda q: lco_lch_eval(q, z_star), lambda q: lco_lch_eval(q, z_star).value),
            (lambda q: lco_kld_eval(q, pi_star), lambda q: lco_kld_eval(q, pi_star).value),
        ):
            e = evaluate(z)
            assert rel_close(e.logit_gradient, central_diff(f, z))
    e = lco_kld_eval(z, pi_star)
    assert abs(e.logit_gradient.sum()) <= 1e-12


# --- batching ---------------------------------------------------------------


def test_batch_single_matches_per_step():
    z = np.array([0.2, -0.7, 1.0])
    single = batch_eval(ObjectiveKind.SFT, [BatchItem(z=z, target=1)])
    direct = sft_eval(z, 1)
    assert single.value == direct.value
    assert np.array_equal(single.per_step[0].logit_gradient, direct.logit_gradient)


def test_batch_mean_of_identical_items():
    z = np.array([0.3, 0.9])
    item = BatchItem(z=z, z_star=np.array([0.0, 0.0]))
    one = batch_eval(ObjectiveKind.LCO_MSE, [item])
    two = batch_eval(ObjectiveKind.LCO_MSE, [item, item])
    assert abs(one.value - two.value) <= 1e-15


def test_batch_matches_brute_force_mean():
    rng = np.random.default_rng(23)
    items = []
    values = []
    for _ in range(3):
        z = rng.uniform(-2, 2, 4)
        target = int(rng.integers(4))
        items.append(BatchItem(z=z, target=target))
        values.append(sft_eval(z, target).value)
    batch = batch_eval(ObjectiveKind.SFT, items)
    assert abs(batch.value - float(np.mean(values))) <= 1e-12
    assert len(batch.per_step) == 3


def test_batch_rejects_empty():
    with pytest.raises(InvalidInputError):
        batch_eval(ObjectiveKind.SFT, [])


def test_context_validates_cached_distribution():
    with pytest.raises(InvalidInputError):
        TimestepContext(
            np.array([0.0, 1.0]), np.array([0.5, 0.5]), 0, Advantages(np.zeros(2)), 1.0, 0.2
        )
    with pytest.raises(InvalidInputError):
        make_ctx([0.0, 0.0], 0, 1.0, eps=1.5)
