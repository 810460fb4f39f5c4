"""
Loss and accuracy for class scores [N, M]
"""
import numpy as np

from apps.common.exceptions import LabelError, ShapeError
from apps.tensor.tensor import Tensor, as_tensor, record


def _check_labels(labels, num_samples, num_classes):
    labels = np.asarray(labels)
    if labels.shape != (num_samples,):
        raise ShapeError("Need one label per score row", expected=(num_samples,), actual=labels.shape)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelError(f"Labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]")
    return labels.astype(np.int64)


def softmax(scores):
    scores = np.asarray(scores)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def cross_entropy_loss(scores, labels):
    """Mean negative log-likelihood of the labels under a row-wise softmax"""
    scores = as_tensor(scores)
    n, m = scores.shape
    if n == 0:
        raise ShapeError("cross_entropy_loss needs at least one sample", expected="N >= 1", actual=0)
    labels = _check_labels(labels, n, m)
    shifted = scores.data - scores.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_prob = shifted - log_norm
    loss = -log_prob[np.arange(n), labels].mean()

    def rule(grad):
        d_scores = np.exp(log_prob)
        d_scores[np.arange(n), labels] -= 1.0
        return (grad * d_scores / n,)

    return record(np.asarray(loss, dtype=scores.dtype), (scores,), rule)


def topk_accuracy(scores, labels, k=1):
    """
    Fraction of rows whose label is among the k highest scores. Ties rank
    the lower class index first.
    """
    scores = scores.data if isinstance(scores, Tensor) else np.asarray(scores)
    n, m = scores.shape
    if k < 1 or k > m:
        raise ValueError(f"k must lie in [1, {m}], got {k}")
    labels = _check_labels(labels, n, m)
    if n == 0:
        return 0.0
    ranking = np.argsort(-scores, axis=1, kind='stable')[:, :k]
    return float((ranking == labels[:, None]).any(axis=1).mean())
