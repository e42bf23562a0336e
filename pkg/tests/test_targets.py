import numpy as np
import pytest

from lco_lab.dist import Advantages, normalize_advantages, softmax, total_variation
from lco_lab.errors import EstimatorDomainError, InvalidInputError
from lco_lab.targets import (
    AdvantageEstimator,
    EstimatorKind,
    OptimalTarget,
    estimate_advantages,
    load_logprob_table,
    optimal_logits,
    optimal_policy,
    optimal_shift,
    optimal_target,
)


def test_optimal_policy_zero_advantage_is_identity():
    pi_old = softmax(np.array([0.7, -0.2, 1.1]))
    assert np.abs(optimal_policy(pi_old, np.zeros(3), 1.0) - pi_old).max() < 1e-15


def test_optimal_policy_infinite_regularization_limit():
    pi_old = softmax(np.array([0.4, -1.0, 0.3, 2.0]))
    advantages = np.array([5.0, -3.0, 1.0, 0.5])
    pi_star = optimal_policy(pi_old, advantages, 1e9)
    assert total_variation(pi_star, pi_old) < 1e-8


def test_optimal_policy_uniform_prior_reduces_to_softmax():
    pi_star = optimal_policy([0.5, 0.5], np.array([1.0, -1.0]), 1.0)
    assert np.abs(pi_star - softmax(np.array([1.0, -1.0]))).max() < 1e-15


def test_optimal_policy_survives_huge_advantage_ratio():
    pi_old = softmax(np.array([0.0, 0.0]))
    pi_star = optimal_policy(pi_old, np.array([2000.0, 0.0]), 1.0)
    assert np.all(np.isfinite(pi_star))
    assert abs(pi_star[0] - 1.0) < 1e-12


def test_optimal_logits_is_exact_adjustment():
    assert np.array_equal(optimal_logits([0.0, 0.0], np.array([1.0, -1.0]), 1.0), [1.0, -1.0])
    z_old = np.array([0.3, -0.7, 1.2])
    assert np.array_equal(optimal_logits(z_old, np.zeros(3), 2.0), z_old)


def test_targets_are_consistent():
    rng = np.random.default_rng(31)
    for _ in range(50):
        z_old = rng.uniform(-2, 2, 7)
        advantages = rng.uniform(-2, 2, 7)
        beta = float(rng.uniform(0.2, 5.0))
        z_star = optimal_logits(z_old, advantages, beta)
        pi_star = optimal_policy(softmax(z_old), advantages, beta)
        assert np.abs(softmax(z_star) - pi_star).max() < 1e-10


def test_optimal_target_pair_validation():
    target = optimal_target(np.array([0.1, -0.4]), np.array([0.5, 0.0]), 1.0)
    assert np.abs(softmax(target.z_star) - target.pi_star).max() < 1e-10
    with pytest.raises(InvalidInputError):
        OptimalTarget(np.array([0.9, 0.1]), np.array([0.0, 0.0]))


def test_sparse_estimator():
    adv = estimate_advantages(
        AdvantageEstimator(EstimatorKind.SPARSE_SAMPLED, advantage=2.0, action=3), 5
    )
    assert np.array_equal(adv.values, [0, 0, 0, 2.0, 0])
    assert adv.sparse_mask == frozenset({3})


def test_dpo_estimator_identical_models_is_zero():
    logp = np.log(softmax(np.array([0.2, -0.5, 1.0])))
    adv = estimate_advantages(
        AdvantageEstimator(EstimatorKind.DENSE_DPO_RATIO, scorer_log_probs=logp, ref_log_probs=logp),
        3,
    )
    assert np.array_equal(adv.values, np.zeros(3))
    assert adv.sparse_mask is None


def test_logprob_estimator_uniform_centers_to_zero():
    logp = np.full(4, -np.log(4.0))
    adv = estimate_advantages(AdvantageEstimator(EstimatorKind.DENSE_LOGPROB, scorer_log_probs=logp), 4)
    assert np.allclose(adv.values, -np.log(4.0))
    centered = normalize_advantages(adv)
    assert np.abs(centered.values).max() <= 1e-15


def test_estimator_domain_errors():
    with pytest.raises(EstimatorDomainError):
        estimate_advantages(
            AdvantageEstimator(
                EstimatorKind.DENSE_LOGPROB, scorer_log_probs=np.array([-np.inf, -1.0])
            ),
            2,
        )
    with pytest.raises(InvalidInputError):
        estimate_advantages(AdvantageEstimator(EstimatorKind.SPARSE_SAMPLED, advantage=1.0), 4)


def test_optimal_shift_values():
    assert optimal_shift(np.array([1.0, -1.0])) == 0.0
    assert optimal_shift(np.array([2.0, 2.0, 2.0])) == -2.0
    centered = normalize_advantages(Advantages(np.random.default_rng(5).uniform(-3, 3, 9)))
    assert abs(optimal_shift(centered)) <= 1e-12


def test_optimal_shift_against_grid_search():
    rng = np.random.default_rng(37)
    advantages = rng.uniform(-3, 3, 9)
    span = float(np.abs(advantages).max()) + 1.0
    grid = np.arange(-span, span, 1e-4)
    norms = ((advantages[None, :] + grid[:, None]) ** 2).sum(axis=1)
    i = int(np.argmin(norms))
    # quadratic refine through the bracketing samples
    x0, x1, x2 = grid[i - 1], grid[i], grid[i + 1]
    y0, y1, y2 = norms[i - 1], norms[i], norms[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    refined = -b / (2 * a)
    assert abs(optimal_shift(advantages) - refined) < 1e-6


def test_optimal_shift_minimizes_the_norm():
    rng = np.random.default_rng(41)
    advantages = rng.uniform(-4, 4, 6)
    best = ((advantages + optimal_shift(advantages)) ** 2).sum()
    for c in rng.uniform(-6, 6, 100):
        assert best <= ((advantages + c) ** 2).sum() + 1e-12


def test_load_logprob_table(tmp_path):
    table = tmp_path / "scores.txt"
    table.write_text("# scorer log-probs\n-1.0 -2.0 -0.5\n\n-0.1 -0.2 -0.3  # tail comment\n")
    loaded = load_logprob_table(table)
    assert loaded.shape == (2, 3)
    assert loaded[1, 2] == -0.3

    bad = tmp_path / "bad.txt"
    bad.write_text("-1.0 -2.0\n-1.0\n")
    with pytest.raises(InvalidInputError):
        load_logprob_table(bad)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(InvalidInputError):
        load_logprob_table(empty)
