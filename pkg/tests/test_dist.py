import numpy as np
import pytest

from lco_lab.dist import (
    Advantages,
    entropy,
    kl_divergence,
    log_softmax,
    normalize_advantages,
    sample_action,
    softmax,
    total_variation,
)
from lco_lab.errors import DivergenceUndefinedError, InvalidInputError

from oracles import entropy_hp, kl_hp, log_softmax_hp, softmax_hp


def test_softmax_symmetry():
    assert np.allclose(softmax([0.0, 0.0]), [0.5, 0.5], atol=1e-15)
    assert np.allclose(softmax([0.0] * 4), [0.25] * 4, atol=1e-15)


def test_softmax_extreme_logits_match_high_precision():
    z = np.array([1000.0, 0.0])
    got = softmax(z)
    expected = softmax_hp(z)  # second entry ~5.08e-435, below float64 range
    assert np.all(np.isfinite(got))
    assert np.abs(got - expected).max() < 1e-15
    assert abs(got.sum() - 1.0) <= 1e-12


def test_softmax_shift_invariance():
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = rng.uniform(-5, 5, int(rng.integers(2, 12)))
        c = float(rng.uniform(-200, 200))
        assert np.abs(softmax(z + c) - softmax(z)).max() <= 1e-12


def test_softmax_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        softmax([np.nan, 0.0])
    with pytest.raises(InvalidInputError):
        softmax([np.inf, 0.0])


def test_log_softmax_constants():
    assert np.allclose(log_softmax([0.0, 0.0]), [-np.log(2)] * 2, atol=1e-15)
    for a in (-7.0, 0.0, 123.5):
        assert np.allclose(log_softmax([a, a, a]), [-np.log(3)] * 3, atol=1e-12)


def test_log_softmax_matches_high_precision():
    z = np.array([3.0, 1.0, -2.0])
    # frozen from the 50-digit evaluation of z - logsumexp(z)
    frozen = np.array([-0.13284523372757555, -2.1328452337275756, -5.1328452337275756])
    got = log_softmax(z)
    assert np.abs(got - frozen).max() < 1e-14
    assert np.abs(got - log_softmax_hp(z)).max() < 1e-14


def test_log_softmax_exp_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(50):
        z = rng.uniform(-6, 6, int(rng.integers(2, 10)))
        assert np.abs(np.exp(log_softmax(z)) - softmax(z)).max() <= 1e-12


def test_entropy_values():
    assert abs(entropy([0.25] * 4) - np.log(4)) < 1e-14
    assert entropy([1.0, 0.0, 0.0]) == 0.0
    # frozen: -0.9 ln 0.9 - 0.1 ln 0.1 at 50 digits
    assert abs(entropy([0.9, 0.1]) - 0.3250829733914482) < 1e-15
    assert abs(entropy([0.9, 0.1]) - entropy_hp([0.9, 0.1])) < 1e-15


def test_entropy_range_and_validation():
    rng = np.random.default_rng(2)
    for _ in range(50):
        v = int(rng.integers(2, 16))
        p = softmax(rng.uniform(-3, 3, v))
        h = entropy(p)
        assert 0.0 <= h <= np.log(v) + 1e-12
    with pytest.raises(InvalidInputError):
        entropy([0.7, 0.7])
    with pytest.raises(InvalidInputError):
        entropy([-0.1, 1.1])


def test_kl_trivial_and_frozen():
    p = softmax(np.random.default_rng(3).uniform(-2, 2, 6))
    assert kl_divergence(p, p) == 0.0
    assert abs(kl_divergence([1.0, 0, 0, 0], [0.25] * 4) - np.log(4)) < 1e-14

    rng = np.random.default_rng(42)
    a, b = rng.uniform(-2, 2, 5), rng.uniform(-2, 2, 5)
    p, q = softmax(a), softmax(b)
    assert abs(kl_divergence(p, q) - 0.5243869615468529) < 1e-14  # frozen 50-digit value
    assert abs(kl_divergence(p, q) - kl_hp(p, q)) < 1e-14


def test_kl_support_violation():
    with pytest.raises(DivergenceUndefinedError):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_kl_nonnegative_near_equal():
    # cancellation regime: q is p plus a few ulps
    p = softmax(np.array([0.3, -0.4, 1.1]))
    q = p.copy()
    q[0] = np.nextafter(q[0], 1.0)
    q[1] -= q.sum() - 1.0
    assert kl_divergence(p, q) >= 0.0


def test_total_variation():
    p = softmax(np.array([1.0, 2.0, -1.0]))
    assert total_variation(p, p) == 0.0
    assert total_variation([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert abs(total_variation([0.7, 0.3], [0.3, 0.7]) - 0.4) < 1e-15
    with pytest.raises(InvalidInputError):
        total_variation([0.5, 0.5], [0.25, 0.25, 0.5])


def test_normalize_advantages():
    assert np.array_equal(normalize_advantages(Advantages([1.0, -1.0])).values, [1.0, -1.0])
    assert np.array_equal(normalize_advantages(Advantages([2.0, 2.0, 2.0])).values, [0.0, 0.0, 0.0])
    assert np.array_equal(
        normalize_advantages(Advantages([3.0, 1.0, -1.0, 1.0])).values, [2.0, 0.0, -2.0, 0.0]
    )


def test_normalize_unit_std_and_floor():
    a = Advantages(np.array([3.0, -1.0, 1.0, 1.0]))
    scaled = normalize_advantages(a, unit_std=True)
    assert abs(float(scaled.values.mean())) <= 1e-12
    assert abs(float(scaled.values.std()) - 1.0) <= 1e-12
    # zero variance comes back centered, not rescaled
    flat = normalize_advantages(Advantages([5.0, 5.0]), unit_std=True)
    assert np.array_equal(flat.values, [0.0, 0.0])


def test_normalize_drops_sparse_mask():
    a = Advantages(np.array([0.0, 2.0, 0.0]), sparse_mask=frozenset({1}))
    assert normalize_advantages(a).sparse_mask is None


def test_advantages_mask_invariant():
    with pytest.raises(InvalidInputError):
        Advantages(np.array([0.5, 2.0, 0.0]), sparse_mask=frozenset({1}))
    with pytest.raises(InvalidInputError):
        Advantages(np.array([np.inf, 0.0]))


def test_sample_one_hot_is_deterministic():
    rng = np.random.default_rng(5)
    for temperature in (0.25, 1.0, 4.0):
        for top_p in (0.1, 0.5, 1.0):
            assert sample_action([0.0, 1.0, 0.0], temperature, top_p, rng) == 1


def test_sample_determinism():
    p = softmax(np.array([0.4, -0.3, 0.9, 0.0]))
    seq_a = [sample_action(p, 0.6, 0.95, np.random.default_rng(11)) for _ in range(200)]
    seq_b = [sample_action(p, 0.6, 0.95, np.random.default_rng(11)) for _ in range(200)]
    assert seq_a == seq_b


def test_sample_top_p_prefix():
    # smallest prefix reaching 0.7 is {0, 1}, renormalized to [0.625, 0.375]
    rng = np.random.default_rng(17)
    draws = np.array([sample_action([0.5, 0.3, 0.2], 1.0, 0.7, rng) for _ in range(4000)])
    assert set(draws.tolist()) <= {0, 1}
    freq0 = float(np.mean(draws == 0))
    assert abs(freq0 - 0.625) < 3.0 * np.sqrt(0.625 * 0.375 / 4000)


def test_sample_top_p_ties_break_toward_lower_index():
    # equal masses: the smallest prefix reaching 0.5 is the first two indices
    rng = np.random.default_rng(29)
    draws = {sample_action([0.25] * 4, 1.0, 0.5, rng) for _ in range(500)}
    assert draws == {0, 1}


def test_sample_temperature_sharpens():
    rng = np.random.default_rng(23)
    p = np.array([0.6, 0.4])
    cold = np.mean([sample_action(p, 0.1, 1.0, rng) == 0 for _ in range(2000)])
    assert cold > 0.95  # 0.6^10 dominates 0.4^10 at ~60:1


def test_sample_rejects_bad_parameters():
    with pytest.raises(InvalidInputError):
        sample_action([0.5, 0.5], 0.0, 1.0, np.random.default_rng(0))
    with pytest.raises(InvalidInputError):
        sample_action([0.5, 0.5], 1.0, 0.0, np.random.default_rng(0))
