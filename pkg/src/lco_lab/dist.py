"""Numerically stable probability primitives over finite action vocabularies.

All functions operate on plain 1-D float64 numpy arrays.  A "logit vector"
is any finite real vector of length >= 2; a "probability vector" is
nonnegative and sums to one within 1e-12.  Advantage vectors may carry a
sparsity mask recording which actions hold real signal.

Everything here is a pure function of its inputs; RNG state is caller-owned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceUndefinedError, InvalidInputError

PROB_ATOL = 1e-12


@dataclass(frozen=True)
class Advantages:
    """Per-action advantage signal, optionally sparse.

    When ``sparse_mask`` is present, every unmasked entry must be exactly
    zero: the mask records which coordinates carry real feedback.
    """

    values: np.ndarray
    sparse_mask: frozenset[int] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("advantages must be finite")
        if self.sparse_mask is not None:
            mask = frozenset(int(i) for i in self.sparse_mask)
            object.__setattr__(self, "sparse_mask", mask)
            if any(i < 0 or i >= values.size for i in mask):
                raise InvalidInputError("sparse_mask index out of range")
            unmasked = [i for i in range(values.size) if i not in mask]
            if unmasked and np.any(values[unmasked] != 0.0):
                raise InvalidInputError("unmasked advantage entries must be 0")

    @property
    def vocab_size(self) -> int:
        return self.values.size


def as_logits(z) -> np.ndarray:
    """Validate and return a logit vector as a float64 array."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise InvalidInputError(f"logits must be a 1-D vector of length >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite")
    return z


def as_probs(p) -> np.ndarray:
    """Validate and return a probability vector as a float64 array."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise InvalidInputError(f"probabilities must be a 1-D vector of length >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise InvalidInputError("probabilities must be finite and nonnegative")
    if abs(float(p.sum()) - 1.0) > PROB_ATOL:
        raise InvalidInputError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def check_action(index: int, vocab_size: int) -> int:
    index = int(index)
    if not 0 <= index < vocab_size:
        raise InvalidInputError(f"action {index} outside vocabulary of size {vocab_size}")
    return index


def softmax(z) -> np.ndarray:
    """Max-shifted softmax; invariant under adding a constant to all logits."""
    z = as_logits(z)
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def log_softmax(z) -> np.ndarray:
    """z - max(z) - log(sum(exp(z - max(z)))); exp of this matches softmax(z)."""
    z = as_logits(z)
    shifted = z - z.max()
    return shifted - np.log(np.exp(shifted).sum())


def entropy(p) -> float:
    """Shannon entropy in nats with the 0*log(0) := 0 convention."""
    p = as_probs(p)
    nz = p > 0.0
    return float(-(p[nz] * np.log(p[nz])).sum())


def kl_divergence(p, q) -> float:
    """Forward KL sum(p * log(p/q)) in nats.

    Requires q > 0 wherever p > 0; a support violation makes the divergence
    undefined rather than infinite.
    """
    p = as_probs(p)
    q = as_probs(q)
    if p.size != q.size:
        raise InvalidInputError("distributions must have equal length")
    support = p > 0.0
    if np.any(q[support] <= 0.0):
        raise DivergenceUndefinedError("q has zero mass on the support of p")
    return kl_between(p, q)


def kl_between(p: np.ndarray, q: np.ndarray, log_q: np.ndarray | None = None) -> float:
    """KL(p || q) via the sign-definite Bregman form.

    Both arguments sum to one, so sum(p log(p/q)) equals
    sum(p log(p/q) - (p - q)) term by term nonnegative; evaluating the
    latter keeps relative accuracy when p is within rounding distance of q,
    where the plain form cancels to noise (and can even go negative).
    Zero-mass p coordinates contribute q there.  ``log_q``, when supplied,
    covers coordinates whose probability underflowed to zero.
    """
    total = 0.0
    for i, (pi, qi) in enumerate(zip(p, q)):
        if pi == 0.0:
            total += qi
            continue
        d = pi - qi
        if qi > 0.0 and abs(d) < 0.5 * qi:
            t = d / qi
            # p log1p(t) - q t with the linear parts cancelled analytically
            total += qi * (np.log1p(t) - t) + d * np.log1p(t)
        else:
            lq = float(log_q[i]) if log_q is not None else float(np.log(qi))
            total += pi * (np.log(pi) - lq) - d
    return max(float(total), 0.0)


def total_variation(p, q) -> float:
    """Half the L1 distance between two distributions; lies in [0, 1]."""
    p = as_probs(p)
    q = as_probs(q)
    if p.size != q.size:
        raise InvalidInputError("distributions must have equal length")
    return float(0.5 * np.abs(p - q).sum())


def normalize_advantages(a: Advantages, unit_std: bool = False, std_floor: float = 1e-8) -> Advantages:
    """Center advantages to mean zero; optionally scale to unit variance.

    The standard deviation is only divided out when it exceeds ``std_floor``,
    so a constant vector comes back as zeros rather than NaN.  The output
    carries no sparsity mask: centering spreads signal over every coordinate.
    """
    values = a.values
    centered = values - values.mean()
    if unit_std:
        std = float(centered.std())
        if std > std_floor:
            centered = centered / std
    return Advantages(centered)


def sample_action(p, temperature: float, top_p: float, rng: np.random.Generator) -> int:
    """Draw one action index with temperature and nucleus truncation.

    Temperature rescales log-probabilities (log p / T).  The support is then
    cut to the smallest descending-probability prefix whose mass reaches
    ``top_p`` (ties broken toward the lower index), renormalized, and sampled
    by inverse CDF.  Deterministic given the generator state.
    """
    p = as_probs(p)
    if not temperature > 0.0:
        raise InvalidInputError("temperature must be positive")
    if not 0.0 < top_p <= 1.0:
        raise InvalidInputError("top_p must lie in (0, 1]")

    with np.errstate(divide="ignore"):
        logp = np.where(p > 0.0, np.log(np.maximum(p, 1e-320)), -np.inf)
    scaled = logp / temperature
    finite = np.isfinite(scaled)
    shifted = scaled - scaled[finite].max()
    weights = np.where(finite, np.exp(shifted), 0.0)
    q = weights / weights.sum()

    # stable argsort on -q keeps equal-probability ties in index order
    order = np.argsort(-q, kind="stable")
    cumulative = np.cumsum(q[order])
    cutoff = int(np.searchsorted(cumulative, top_p, side="left"))
    kept = order[: cutoff + 1]
    kept_probs = q[kept] / q[kept].sum()

    u = rng.random()
    choice = int(np.searchsorted(np.cumsum(kept_probs), u, side="right"))
    return int(kept[min(choice, kept.size - 1)])
