"""Differentiable softmax-policy families over finite state spaces.

Three families map a flat parameter vector theta to per-state logits:

  TABULAR  one independent logit row per state; the Jacobian is a 0/1
           selection matrix and the linearization is exact
  LINEAR   logits = W @ phi(state) for a fixed per-state feature table;
           the Jacobian has Kronecker structure and is also exact
  MLP1     one tanh hidden layer; the linearization residual is the
           quadratic-order term the NTK-style analysis treats as negligible

States are integer indices into the model's state space.  Feature tables
for LINEAR and MLP1 are drawn once from a seed and stored with the model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import InvalidInputError, InvalidStateError
from .linalg import power_iteration_sym


class Family(Enum):
    TABULAR = "TABULAR"
    LINEAR = "LINEAR"
    MLP1 = "MLP1"


@dataclass(frozen=True)
class PolicyModel:
    family: Family
    theta: np.ndarray
    n_states: int
    vocab_size: int
    features: np.ndarray | None = None  # (n_states, feature_dim) for LINEAR/MLP1
    hidden: int = 0  # MLP1 width

    @property
    def n_params(self) -> int:
        return self.theta.size

    def with_theta(self, theta: np.ndarray) -> "PolicyModel":
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != self.theta.shape:
            raise InvalidInputError("parameter shape mismatch")
        return replace(self, theta=theta)


@dataclass(frozen=True)
class JacobianInfo:
    """Per-state logit Jacobian (V x n_params) and its largest singular value."""

    J: np.ndarray
    sigma_max: float


def tabular_policy(n_states: int, vocab_size: int, init_logits=None) -> PolicyModel:
    _check_shape(n_states, vocab_size)
    theta = np.zeros(n_states * vocab_size)
    if init_logits is not None:
        row = np.asarray(init_logits, dtype=np.float64)
        if row.shape != (vocab_size,):
            raise InvalidInputError(f"init_logits must have shape ({vocab_size},)")
        theta = np.tile(row, n_states)
    return PolicyModel(Family.TABULAR, theta, n_states, vocab_size)


def linear_policy(n_states: int, vocab_size: int, feature_dim: int, seed: int = 0) -> PolicyModel:
    _check_shape(n_states, vocab_size)
    if feature_dim < 1:
        raise InvalidInputError("feature_dim must be >= 1")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n_states, feature_dim))
    theta = np.zeros(vocab_size * feature_dim)
    return PolicyModel(Family.LINEAR, theta, n_states, vocab_size, features=features)


def mlp1_policy(
    n_states: int, vocab_size: int, feature_dim: int, hidden: int = 16, seed: int = 0
) -> PolicyModel:
    _check_shape(n_states, vocab_size)
    if feature_dim < 1 or hidden < 1:
        raise InvalidInputError("feature_dim and hidden must be >= 1")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n_states, feature_dim))
    n_params = hidden * feature_dim + hidden + vocab_size * hidden + vocab_size
    theta = rng.uniform(-0.1, 0.1, size=n_params)
    return PolicyModel(Family.MLP1, theta, n_states, vocab_size, features=features, hidden=hidden)


def _check_shape(n_states: int, vocab_size: int):
    if n_states < 1:
        raise InvalidInputError("n_states must be >= 1")
    if vocab_size < 2:
        raise InvalidInputError("vocab_size must be >= 2")


def _check_state(model: PolicyModel, state: int) -> int:
    state = int(state)
    if not 0 <= state < model.n_states:
        raise InvalidStateError(f"state {state} outside state space of size {model.n_states}")
    return state


def _mlp_unpack(model: PolicyModel):
    d, h, v = model.features.shape[1], model.hidden, model.vocab_size
    theta = model.theta
    w1 = theta[: h * d].reshape(h, d)
    b1 = theta[h * d : h * d + h]
    w2 = theta[h * d + h : h * d + h + v * h].reshape(v, h)
    b2 = theta[h * d + h + v * h :]
    return w1, b1, w2, b2


def forward(model: PolicyModel, state: int) -> np.ndarray:
    """Logits of the model at one state."""
    state = _check_state(model, state)
    if model.family is Family.TABULAR:
        v = model.vocab_size
        return model.theta[state * v : (state + 1) * v].copy()
    if model.family is Family.LINEAR:
        phi = model.features[state]
        d = phi.size
        w = model.theta.reshape(model.vocab_size, d)
        return w @ phi
    w1, b1, w2, b2 = _mlp_unpack(model)
    hidden = np.tanh(w1 @ model.features[state] + b1)
    return w2 @ hidden + b2


def jacobian(model: PolicyModel, state: int) -> JacobianInfo:
    """Analytic Jacobian d z / d theta at one state, with sigma_max.

    The largest singular value comes from power iteration on J J^T driven to
    1e-10 relative convergence.
    """
    state = _check_state(model, state)
    v, p = model.vocab_size, model.n_params

    if model.family is Family.TABULAR:
        jac = np.zeros((v, p))
        for a in range(v):
            jac[a, state * v + a] = 1.0
    elif model.family is Family.LINEAR:
        phi = model.features[state]
        jac = np.kron(np.eye(v), phi)
    else:
        w1, b1, w2, _ = _mlp_unpack(model)
        phi = model.features[state]
        h = np.tanh(w1 @ phi + b1)
        gate = 1.0 - h**2  # sech^2 of the pre-activation
        d = phi.size
        jac = np.zeros((v, p))
        for a in range(v):
            back = w2[a] * gate
            jac[a, : w1.size] = np.outer(back, phi).ravel()
            jac[a, w1.size : w1.size + b1.size] = back
            jac[a, w1.size + b1.size + a * h.size : w1.size + b1.size + (a + 1) * h.size] = h
            jac[a, w1.size + b1.size + v * h.size + a] = 1.0

    gram = jac @ jac.T
    sigma_sq = power_iteration_sym(0.5 * (gram + gram.T), rel_tol=1e-10)
    return JacobianInfo(jac, float(np.sqrt(max(sigma_sq, 0.0))))


def linearization_residual(model: PolicyModel, theta, theta_star, state: int) -> float:
    """Relative remainder of the first-order logit expansion between theta
    and theta_star; exactly zero for the TABULAR and LINEAR families."""
    theta = np.asarray(theta, dtype=np.float64)
    theta_star = np.asarray(theta_star, dtype=np.float64)
    if theta.shape != model.theta.shape or theta_star.shape != model.theta.shape:
        raise InvalidInputError("parameter shape mismatch")
    at_theta = model.with_theta(theta)
    z = forward(at_theta, state)
    z_star = forward(model.with_theta(theta_star), state)
    predicted = z + jacobian(at_theta, state).J @ (theta_star - theta)
    gap = float(np.linalg.norm(z_star - z))
    return float(np.linalg.norm(z_star - predicted)) / max(gap, 1e-12)
