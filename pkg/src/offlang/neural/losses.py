"""Soft-target cross-entropy used by the soft-label classifier.

The loss between a soft target distribution and the model's softmax
output is -sum_i target_i * ln(predicted_i).  Predicted probabilities
are clamped at a small epsilon before the log, since the loss is
undefined at exactly zero.  With one-hot targets this reduces to the
usual categorical cross-entropy.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch

PROBABILITY_EPSILON = 1e-7


def softmax(scores) -> np.ndarray:
    """Numerically stable softmax along the last axis (float64)."""
    z = np.asarray(scores, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def soft_cross_entropy(target_probs, predicted_probs) -> float:
    """-sum(target * ln(predicted)), averaged over the batch axis if present.

    ``target_probs`` must lie on the probability simplex; ``predicted``
    is clamped at PROBABILITY_EPSILON before the log.  By Gibbs'
    inequality the result is never below the entropy of the target.
    """
    p = np.asarray(target_probs, dtype=np.float64)
    q = np.asarray(predicted_probs, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionMismatch(f"target shape {p.shape} != predicted shape {q.shape}")
    q = np.clip(q, PROBABILITY_EPSILON, None)
    per_sample = -(p * np.log(q)).sum(axis=-1)
    return float(np.mean(per_sample))


def soft_cross_entropy_from_logits(target_probs, logits):
    """Torch training path: -sum(target * log_softmax(logits)), batch mean.

    Equivalent to :func:`soft_cross_entropy` on the softmax of the
    logits, but numerically stable; its gradient with respect to the
    logits is (softmax(logits) - target) / batch_size.
    """
    import torch.nn.functional as F

    log_q = F.log_softmax(logits, dim=-1)
    return -(target_probs * log_q).sum(dim=-1).mean()
