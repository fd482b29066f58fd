"""Batch-contrastive loss over keyword batches: enrollment centroids from the
first half of each keyword's utterances, scaled-cosine similarities against
the second half, softmax cross-entropy over centroids. All gradients are
analytic (softmax, similarity, centroid normalization, and embedding
normalization) and are composed with the embedder's backward pass for
end-to-end training.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import embedder
from .embedder import EmbedderParams, normalize
from .errors import DataError

logger = logging.getLogger(__name__)

W_FLOOR = 1e-4


@dataclass
class Ge2eParams:
    """Trainable similarity scaling s = w*cos + b; w stays positive."""

    w: float = 10.0
    b: float = -5.0

    def __post_init__(self) -> None:
        if self.w <= 0:
            raise ValueError(f"w must be positive, got {self.w}")


@dataclass
class TrainingBatch:
    """X keywords x Y utterances, single source; the first Y/2 utterances per
    keyword are the enrollment half, the last Y/2 the test half. ``records``
    holds the sampled utterances; ``features`` (same X x Y layout) is attached
    before the batch reaches the loss."""

    keywords: list[str]
    records: list[list]  # X rows of Y UtteranceRecord
    source: str
    features: list[list[np.ndarray]] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        x = len(self.keywords)
        if x != len(self.records):
            raise DataError("keywords and record rows disagree")
        if x == 0:
            raise DataError("empty batch")
        y = len(self.records[0])
        if y % 2 != 0 or y < 2:
            raise DataError(f"utterances per keyword must be even and >= 2, got {y}")
        if any(len(row) != y for row in self.records):
            raise DataError("ragged batch: all keywords need the same utterance count")
        sources = {rec.source for row in self.records for rec in row}
        if sources != {self.source}:
            raise DataError(f"batch must be single-source {self.source!r}, saw {sorted(sources)}")

    @property
    def x(self) -> int:
        return len(self.keywords)

    @property
    def y(self) -> int:
        return len(self.records[0])

    def utterance_ids(self) -> list[str]:
        return [rec.id for row in self.records for rec in row]

    def enrollment_ids(self, keyword_idx: int) -> list[str]:
        return [rec.id for rec in self.records[keyword_idx][: self.y // 2]]

    def test_ids(self, keyword_idx: int) -> list[str]:
        return [rec.id for rec in self.records[keyword_idx][self.y // 2 :]]

    def with_features(self, provider) -> "TrainingBatch":
        self.features = [[provider(rec.id) for rec in row] for row in self.records]
        return self


def centroid(embeddings) -> np.ndarray:
    """Mean of the given embeddings, re-normalized to unit length."""
    embeddings = list(embeddings)
    if not embeddings:
        raise ValueError("cannot take the centroid of no embeddings")
    return normalize(np.mean(np.asarray(embeddings, dtype=np.float64), axis=0))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two unit vectors (plain dot product)."""
    return float(np.dot(a, b))


def _normalize_rows(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise L2 normalization with the degenerate guard; returns
    (unit rows, norms)."""
    norms = np.linalg.norm(raw, axis=-1)
    out = raw / np.maximum(norms, embedder.NORM_GUARD)[..., None]
    degenerate = norms < embedder.NORM_GUARD
    if degenerate.any():
        out[degenerate] = 0.0
        out[..., 0][degenerate] = 1.0
    return out, norms


def _forward(raw: np.ndarray, g: Ge2eParams):
    """Loss forward pass from raw (pre-normalization) embeddings (X, Y, E)."""
    x, y, _ = raw.shape
    half = y // 2
    e, norms = _normalize_rows(raw)
    enroll = e[:, :half, :]
    test = e[:, half:, :]

    means = enroll.mean(axis=1)  # (X, E)
    cent, cent_norms = _normalize_rows(means)

    flat_test = test.reshape(x * half, -1)
    cos = flat_test @ cent.T  # (X*half, X)
    scores = g.w * cos + g.b
    own = np.repeat(np.arange(x), half)

    row_max = scores.max(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(np.exp(scores - row_max).sum(axis=1))
    losses = lse - scores[np.arange(len(own)), own]
    loss = float(losses.mean())
    softmax = np.exp(scores - lse[:, None])
    return loss, {
        "e": e,
        "norms": norms,
        "cent": cent,
        "cent_norms": cent_norms,
        "means": means,
        "flat_test": flat_test,
        "cos": cos,
        "softmax": softmax,
        "own": own,
        "half": half,
    }


def _check_layout(raw_embeddings: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw_embeddings, dtype=np.float64)
    if raw.ndim != 3:
        raise ValueError(f"expected embeddings shaped (X, Y, E), got {raw.shape}")
    if raw.shape[1] % 2 != 0 or raw.shape[1] < 2:
        raise ValueError(f"Y must be even and >= 2, got {raw.shape[1]}")
    return raw


def similarity_matrix(raw_embeddings: np.ndarray, g: Ge2eParams) -> np.ndarray:
    """(X*Y/2, X) matrix of w*cos(test, centroid) + b scores."""
    raw = _check_layout(raw_embeddings)
    _, state = _forward(raw, g)
    return g.w * state["cos"] + g.b


def ge2e_loss(raw_embeddings: np.ndarray, g: Ge2eParams) -> float:
    """Softmax contrastive loss for a batch of embeddings shaped (X, Y, E).

    Inputs may be pre-normalized (unit rows pass through normalization
    unchanged) or raw embedder outputs. X=1 batches are degenerate: the
    softmax is over a single class, so the loss is identically 0.
    """
    raw = _check_layout(raw_embeddings)
    if raw.shape[0] < 2:
        logger.warning("ge2e loss over a single keyword is identically zero")
    loss, _ = _forward(raw, g)
    return loss


def ge2e_backward(raw_embeddings: np.ndarray, g: Ge2eParams):
    """Analytic gradients of :func:`ge2e_loss`.

    Returns (loss, grad wrt raw embeddings (X, Y, E), dw, db). The embedding
    gradient is with respect to the raw pre-normalization vectors, ready to
    feed :func:`confkws.embedder.embed_backward`.
    """
    raw = _check_layout(raw_embeddings)
    x, y, dim = raw.shape
    loss, st = _forward(raw, g)
    half, own = st["half"], st["own"]
    m = x * half

    # dL/dS: softmax minus one-hot, averaged over test utterances
    g_scores = st["softmax"].copy()
    g_scores[np.arange(m), own] -= 1.0
    g_scores /= m

    d_w = float((g_scores * st["cos"]).sum())
    d_b = float(g_scores.sum())

    # through the similarity into test embeddings and centroids
    g_flat_test = g.w * (g_scores @ st["cent"])  # (M, E)
    g_cent = g.w * (g_scores.T @ st["flat_test"])  # (X, E)

    # centroid normalization: project out the radial component
    g_means = np.empty_like(g_cent)
    for k in range(x):
        c, n = st["cent"][k], st["cent_norms"][k]
        if n < embedder.NORM_GUARD:
            g_means[k] = 0.0
        else:
            g_means[k] = (g_cent[k] - np.dot(c, g_cent[k]) * c) / n

    # assemble gradient on the normalized embeddings
    g_e = np.zeros_like(raw)
    g_e[:, half:, :] = g_flat_test.reshape(x, half, dim)
    g_e[:, :half, :] = (g_means / half)[:, None, :]

    # embedding normalization Jacobian back to the raw vectors
    g_raw = np.empty_like(raw)
    for i in range(x):
        for j in range(y):
            v, n = st["e"][i, j], st["norms"][i, j]
            if n < embedder.NORM_GUARD:
                g_raw[i, j] = 0.0
            else:
                g_raw[i, j] = (g_e[i, j] - np.dot(v, g_e[i, j]) * v) / n
    return loss, g_raw, d_w, d_b


def batch_raw_embeddings(params: EmbedderParams, batch: TrainingBatch):
    """Forward every utterance; returns (raw embeddings (X, Y, E), states)."""
    if batch.features is None:
        raise DataError("batch has no features attached; call with_features() first")
    _, _, e_dim = params.dims
    raw = np.empty((batch.x, batch.y, e_dim))
    states = []
    for i, row in enumerate(batch.features):
        row_states = []
        for j, feats in enumerate(row):
            state = embedder.forward(params, feats)
            raw[i, j] = state[2]
            row_states.append(state)
        states.append(row_states)
    return raw, states


def train_step(
    params: EmbedderParams,
    g: Ge2eParams,
    batch: TrainingBatch,
    learning_rate: float,
) -> float:
    """One plain gradient-descent step on (params, g) in place; returns the
    batch loss. Aborts on a non-finite loss rather than poisoning the model."""
    raw, states = batch_raw_embeddings(params, batch)
    loss, g_raw, d_w, d_b = ge2e_backward(raw, g)
    if not np.isfinite(loss):
        raise DataError(
            f"non-finite loss on batch keywords={batch.keywords} "
            f"(|w1|={np.linalg.norm(params.w1):.3g}, |w2|={np.linalg.norm(params.w2):.3g}, "
            f"w={g.w:.3g}, b={g.b:.3g})"
        )
    if learning_rate == 0.0:
        return loss

    grads = EmbedderParams(
        np.zeros_like(params.w1),
        np.zeros_like(params.b1),
        np.zeros_like(params.w2),
        np.zeros_like(params.b2),
    )
    for i, row in enumerate(batch.features):
        for j, feats in enumerate(row):
            g_p = embedder.embed_backward(params, feats, g_raw[i, j], state=states[i][j])
            grads.w1 += g_p.w1
            grads.b1 += g_p.b1
            grads.w2 += g_p.w2
            grads.b2 += g_p.b2

    params.w1 -= learning_rate * grads.w1
    params.b1 -= learning_rate * grads.b1
    params.w2 -= learning_rate * grads.w2
    params.b2 -= learning_rate * grads.b2
    g.w = max(g.w - learning_rate * d_w, W_FLOOR)
    g.b = g.b - learning_rate * d_b
    return loss
