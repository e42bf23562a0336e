"""Logit-space Hessians, curvature certificates, and gradient-norm bounds.

A loss is "logits convex" when its Hessian with respect to the logit vector
is positive semi-definite.  This module builds those Hessians analytically
for every objective, cross-checks them with second differences, certifies
non-convexity of the clipped surrogate with explicit witness directions,
and evaluates the loss-anchored gradient-norm bounds of the LCO objectives.

Analytic forms (V = vocabulary size, pi = softmax(z), r = z - z*):

  SFT       diag(pi) - pi pi^T
  LCO_KLD   diag(pi) - pi pi^T
  LCO_MSE   (2/V) I
  LCO_LCH   diag(sech^2(r)) / V
  PPO       (A / pi_old(a)) * pi(a) *
            [diag(pi) - pi pi^T - (e_a - pi)(e_a - pi)^T]
            assembled entrywise from the second derivative of the active
            branch (note the pi(a) factor)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import as_logits, as_probs, check_action, softmax
from .errors import InactiveRegionError, InvalidInputError, KinkError, WitnessSearchError
from .linalg import jacobi_eigh, require_symmetric
from .objectives import (
    LCO_KINDS,
    ObjectiveKind,
    TimestepContext,
    lco_kld_eval,
    lco_lch_eval,
    lco_mse_eval,
    ppo_active,
    ppo_eval,
    sft_eval,
)

WITNESS_TOL = 1e-8


@dataclass(frozen=True)
class HessianReport:
    """Symmetric logit-space Hessian with its extreme eigenvalues.

    ``witness`` is populated only when a direction of curvature below
    -1e-8 exists; its quadratic form then certifies non-convexity.
    """

    matrix: np.ndarray
    min_eigenvalue: float
    max_eigenvalue: float
    witness: np.ndarray | None = None


@dataclass(frozen=True)
class BoundCheck:
    actual_gradient_norm: float
    bound_value: float
    satisfied: bool
    objective: ObjectiveKind
    sigma_max: float


def _report(matrix: np.ndarray) -> HessianReport:
    matrix = require_symmetric(matrix)
    eigenvalues, eigenvectors = jacobi_eigh(matrix)
    witness = None
    if eigenvalues[0] < -WITNESS_TOL:
        witness = eigenvectors[:, 0].copy()
    return HessianReport(matrix, float(eigenvalues[0]), float(eigenvalues[-1]), witness)


def softmax_curvature(pi: np.ndarray) -> np.ndarray:
    """diag(pi) - pi pi^T, the curvature of log-sum-exp."""
    return np.diag(pi) - np.outer(pi, pi)


def hessian_analytic(
    kind: ObjectiveKind,
    *,
    pi=None,
    residual=None,
    vocab_size: int | None = None,
    pi_old_a: float | None = None,
    advantage: float | None = None,
    action: int | None = None,
    clip_epsilon: float = 0.2,
) -> HessianReport:
    """Exact logit-space Hessian at a point.

    Point inputs by kind: ``pi`` for SFT and LCO_KLD; ``residual`` (z - z*)
    for LCO_LCH; ``vocab_size`` for LCO_MSE; and ``pi``, ``pi_old_a``,
    ``advantage``, ``action`` for PPO, which must lie in the active region.
    """
    if kind in (ObjectiveKind.SFT, ObjectiveKind.LCO_KLD):
        pi = as_probs(pi)
        return _report(softmax_curvature(pi))

    if kind is ObjectiveKind.LCO_MSE:
        if vocab_size is None or vocab_size < 2:
            raise InvalidInputError("LCO_MSE needs vocab_size >= 2")
        return _report((2.0 / vocab_size) * np.eye(vocab_size))

    if kind is ObjectiveKind.LCO_LCH:
        residual = np.asarray(residual, dtype=np.float64)
        if residual.ndim != 1 or not np.all(np.isfinite(residual)):
            raise InvalidInputError("LCO_LCH needs a finite residual vector")
        sech2 = 1.0 / np.cosh(np.minimum(np.abs(residual), 350.0)) ** 2
        return _report(np.diag(sech2 / residual.size))

    if kind is ObjectiveKind.PPO:
        pi = as_probs(pi)
        if pi_old_a is None or advantage is None or action is None:
            raise InvalidInputError("PPO needs pi_old_a, advantage and action")
        action = check_action(action, pi.size)
        if advantage == 0.0:
            raise InactiveRegionError("zero advantage has no active region")
        ratio = float(pi[action]) / float(pi_old_a)
        active = (advantage > 0.0 and ratio < 1.0 + clip_epsilon) or (
            advantage < 0.0 and ratio > 1.0 - clip_epsilon
        )
        if not active:
            raise InactiveRegionError(
                f"ratio {ratio:.6g} with advantage {advantage:+.6g} is clipped"
            )
        return _report(ppo_hessian_matrix(pi, action, advantage, pi_old_a))

    raise InvalidInputError(f"no analytic Hessian for {kind!r}")


def ppo_hessian_matrix(pi: np.ndarray, action: int, advantage: float, pi_old_a: float) -> np.ndarray:
    """Active-branch curvature of the clipped surrogate, built entrywise.

    H[a', a''] = -(A / pi_old(a)) * [ pi(a) (1[a=a''] - pi(a''))(1[a=a'] - pi(a'))
                                     - pi(a) pi(a') (1[a'=a''] - pi(a'')) ]
    """
    e = np.zeros(pi.size)
    e[action] = 1.0
    d = e - pi
    scale = advantage / pi_old_a * float(pi[action])
    return scale * (softmax_curvature(pi) - np.outer(d, d))


def hessian_numeric(
    kind: ObjectiveKind,
    *,
    z,
    step: float,
    target: int | None = None,
    z_star=None,
    pi_star=None,
    ctx: TimestepContext | None = None,
) -> HessianReport:
    """Second central differences of the scalar loss, symmetrized.

    For PPO every stencil point must stay strictly inside the active region;
    crossing the clip boundary raises KinkError because the loss is not twice
    differentiable there.
    """
    z = as_logits(z)
    if not step > 0.0:
        raise InvalidInputError("step must be positive")

    if kind is ObjectiveKind.SFT:
        loss = lambda v: sft_eval(v, target).value
    elif kind is ObjectiveKind.LCO_MSE:
        loss = lambda v: lco_mse_eval(v, z_star).value
    elif kind is ObjectiveKind.LCO_LCH:
        loss = lambda v: lco_lch_eval(v, z_star).value
    elif kind is ObjectiveKind.LCO_KLD:
        loss = lambda v: lco_kld_eval(v, pi_star).value
    elif kind is ObjectiveKind.PPO:
        def loss(v):
            if not ppo_active(ctx, v):
                raise KinkError("stencil point crossed the clip boundary")
            return ppo_eval(ctx, v).value
    else:
        raise InvalidInputError(f"no numeric Hessian for {kind!r}")

    n = z.size
    h = step
    hess = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            if i == j:
                value = (loss(z + 2 * ei) - 2 * loss(z) + loss(z - 2 * ei)) / (4 * h * h)
            else:
                value = (
                    loss(z + ei + ej) - loss(z + ei - ej) - loss(z - ei + ej) + loss(z - ei - ej)
                ) / (4 * h * h)
            hess[i, j] = hess[j, i] = value
    return _report(0.5 * (hess + hess.T))


def min_eigenvalue(matrix) -> float:
    """Smallest eigenvalue of a symmetric matrix (Jacobi rotations)."""
    return float(jacobi_eigh(require_symmetric(matrix))[0][0])


def ppo_witness(
    pi,
    action: int,
    advantage_sign: int,
    max_trials: int = 100_000,
    seed: int = 0,
) -> np.ndarray:
    """Direction v with v^T H v < -1e-8 for the clipped-surrogate Hessian.

    Basis candidates are tried first: e_a itself (negative curvature for a
    positive advantage whenever pi(a) < 1/2) and the non-sampled basis
    vectors (negative curvature for a negative advantage whenever some
    pi(j) < 1/2).  A seeded random search covers the rest of the budget.
    The on-policy Hessian (pi_old(a) = pi(a), |A| = 1) is used; positive
    scale factors cannot change the certified sign.
    """
    pi = as_probs(pi)
    action = check_action(action, pi.size)
    if np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise InvalidInputError("witness search needs a non-degenerate distribution")
    if advantage_sign not in (1, -1):
        raise InvalidInputError("advantage_sign must be +1 or -1")

    hess = ppo_hessian_matrix(pi, action, float(advantage_sign), float(pi[action]))

    def form(v: np.ndarray) -> float:
        return float(v @ hess @ v)

    candidates = [np.eye(pi.size)[action]]
    for j in np.argsort(pi, kind="stable"):
        if int(j) != action:
            basis = np.zeros(pi.size)
            basis[int(j)] = 1.0
            candidates.append(basis)
    for v in candidates:
        if form(v) < -WITNESS_TOL:
            return v

    rng = np.random.default_rng(seed)
    remaining = max_trials - len(candidates)
    for _ in range(max(remaining, 0)):
        v = rng.standard_normal(pi.size)
        if form(v) < -WITNESS_TOL:
            return v
    raise WitnessSearchError(
        f"no curvature below {-WITNESS_TOL} in {max_trials} trials "
        f"(pi(a) = {pi[action]:.6g}, sign {advantage_sign:+d})"
    )


def directionality(kind: ObjectiveKind, z, z_star, pi_star=None) -> float:
    """Inner product of the logit gradient with the displacement z - z*.

    Nonnegative for every convex objective by the first-order condition at
    a minimizer.  For LCO_KLD the representative target logits are used; any
    constant shift of them is invisible because that gradient sums to zero.
    """
    z = as_logits(z)
    z_star = as_logits(z_star)
    if kind is ObjectiveKind.LCO_MSE:
        grad = lco_mse_eval(z, z_star).logit_gradient
    elif kind is ObjectiveKind.LCO_LCH:
        grad = lco_lch_eval(z, z_star).logit_gradient
    elif kind is ObjectiveKind.LCO_KLD:
        target = as_probs(pi_star) if pi_star is not None else softmax(z_star)
        grad = lco_kld_eval(z, target).logit_gradient
    else:
        raise InvalidInputError(f"directionality is defined for LCO objectives, not {kind!r}")
    return float(grad @ (z - z_star))


def gradient_norm_bound(kind: ObjectiveKind, loss_value: float, sigma_max: float, vocab_size: int) -> float:
    """Loss-anchored upper bound on the parameter-gradient norm.

    LCO_MSE: (2/V) sigma sqrt(V L); LCO_LCH: (1/V) sigma sqrt(V (1 - e^{-2L}));
    LCO_KLD: sigma sqrt(2 L).  Monotone increasing in the loss, so the bound
    dissipates as training closes in on the target.
    """
    if loss_value < 0.0:
        raise InvalidInputError("loss must be nonnegative")
    if sigma_max < 0.0:
        raise InvalidInputError("sigma_max must be nonnegative")
    if kind is ObjectiveKind.LCO_MSE:
        if vocab_size < 2:
            raise InvalidInputError("vocab_size must be >= 2")
        return float(2.0 / vocab_size * sigma_max * np.sqrt(vocab_size * loss_value))
    if kind is ObjectiveKind.LCO_LCH:
        if vocab_size < 2:
            raise InvalidInputError("vocab_size must be >= 2")
        return float(sigma_max / vocab_size * np.sqrt(vocab_size * (-np.expm1(-2.0 * loss_value))))
    if kind is ObjectiveKind.LCO_KLD:
        return float(sigma_max * np.sqrt(2.0 * loss_value))
    raise InvalidInputError(f"no gradient-norm bound for {kind!r}")


def bound_check(
    kind: ObjectiveKind,
    actual_gradient_norm: float,
    loss_value: float,
    sigma_max: float,
    vocab_size: int,
    slack: float = 1e-9,
) -> BoundCheck:
    if kind not in LCO_KINDS:
        raise InvalidInputError("bound checks apply to LCO objectives")
    bound = gradient_norm_bound(kind, loss_value, sigma_max, vocab_size)
    return BoundCheck(
        actual_gradient_norm=float(actual_gradient_norm),
        bound_value=bound,
        satisfied=bool(actual_gradient_norm <= bound + slack),
        objective=kind,
        sigma_max=float(sigma_max),
    )
