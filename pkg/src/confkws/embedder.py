"""Utterance embedding model: frame-wise affine+tanh, mean pooling over time,
output affine, L2 normalization. Same I/O contract as a production encoder
(feature matrix in, unit vector out) but small enough for exact hand-written
gradients, checked against finite differences in the test suite.

Weights live in float64 so gradient checks are meaningful; the int8
dynamic-range quantizer and the binary model format live here too.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

MODEL_MAGIC = b"CKWS"
MODEL_VERSION = 1
NORM_GUARD = 1e-12


@dataclass
class EmbedderParams:
    w1: np.ndarray  # (H, D)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (E, H)
    b2: np.ndarray  # (E,)

    @property
    def dims(self) -> tuple[int, int, int]:
        h, d = self.w1.shape
        e = self.w2.shape[0]
        return d, h, e

    def copy(self) -> "EmbedderParams":
        return EmbedderParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size


def init_params(seed: int, d: int = 40, h: int = 64, e: int = 64) -> EmbedderParams:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    if min(d, h, e) < 1:
        raise ValueError(f"dims must be >= 1, got D={d}, H={h}, E={e}")
    rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-s, s, size=(fan_out, fan_in))

    return EmbedderParams(
        w1=glorot(h, d),
        b1=np.zeros(h),
        w2=glorot(e, h),
        b2=np.zeros(e),
    )


def normalize(v: np.ndarray) -> np.ndarray:
    """L2-normalize; degenerate near-zero vectors map to the first basis
    vector so downstream cosine math stays defined."""
    norm = np.linalg.norm(v)
    if norm < NORM_GUARD:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / norm


def forward(p: EmbedderParams, feats: np.ndarray):
    """Full forward pass; returns (hidden (T,H), pooled (H,), raw output (E,)).

    Kept separate from :func:`embed` so the training loop can reuse the
    activations in the backward pass.
    """
    f = np.asarray(feats, dtype=np.float64)
    if f.ndim != 2 or f.shape[1] != p.w1.shape[1]:
        raise ValueError(f"expected (T, {p.w1.shape[1]}) features, got {f.shape}")
    hidden = np.tanh(f @ p.w1.T + p.b1)
    pooled = hidden.mean(axis=0)
    raw = p.w2 @ pooled + p.b2
    return hidden, pooled, raw


def embed(p: EmbedderParams, feats: np.ndarray) -> np.ndarray:
    """Unit-norm embedding of one utterance."""
    _, _, raw = forward(p, feats)
    return normalize(raw)


def embed_backward(
    p: EmbedderParams,
    feats: np.ndarray,
    grad_raw: np.ndarray,
    state=None,
) -> EmbedderParams:
    """Parameter gradients for one utterance given dLoss/dRaw (the gradient
    on the pre-normalization output; the normalization Jacobian is applied by
    the loss side). ``state`` may pass the activations from :func:`forward`.
    """
    f = np.asarray(feats, dtype=np.float64)
    if state is None:
        state = forward(p, f)
    hidden, pooled, _ = state
    t = f.shape[0]

    g_b2 = np.asarray(grad_raw, dtype=np.float64)
    g_w2 = np.outer(g_b2, pooled)
    g_pooled = p.w2.T @ g_b2
    # mean pooling spreads the gradient evenly over frames
    g_pre = (1.0 - hidden**2) * (g_pooled / t)
    g_w1 = g_pre.T @ f
    g_b1 = g_pre.sum(axis=0)
    return EmbedderParams(g_w1, g_b1, g_w2, g_b2)


@dataclass
class QuantizedTensor:
    data: np.ndarray  # int8
    scale: float

    def dequantize(self) -> np.ndarray:
        return self.data.astype(np.float64) * self.scale


@dataclass
class QuantizedModel:
    w1: QuantizedTensor
    b1: np.ndarray
    w2: QuantizedTensor
    b2: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int]:
        h, d = self.w1.data.shape
        return d, h, self.w2.data.shape[0]

    def dequantize(self) -> EmbedderParams:
        return EmbedderParams(
            self.w1.dequantize(), self.b1.copy(), self.w2.dequantize(), self.b2.copy()
        )


def quantize_tensor(w: np.ndarray) -> QuantizedTensor:
    """Symmetric per-tensor int8: scale = max|w|/127 (1.0 for an all-zero
    tensor), round half away from zero."""
    max_abs = float(np.max(np.abs(w))) if w.size else 0.0
    scale = max_abs / 127.0 if max_abs > 0 else 1.0
    scaled = w / scale
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return QuantizedTensor(q.astype(np.int8), scale)


def quantize_dynamic(p: EmbedderParams) -> QuantizedModel:
    """Per-tensor int8 weights; biases stay float."""
    return QuantizedModel(
        w1=quantize_tensor(p.w1),
        b1=p.b1.copy(),
        w2=quantize_tensor(p.w2),
        b2=p.b2.copy(),
    )


def embed_fn(model) -> "callable":
    """Inference adapter: EmbedderParams or QuantizedModel -> embed callable."""
    params = model.dequantize() if isinstance(model, QuantizedModel) else model
    return lambda feats: embed(params, feats)


def save_model(model, path: str | Path) -> None:
    """Binary model file: magic, version, dims, quantized flag, tensors in
    fixed order (w1, b1, w2, b2); little-endian, float64 for float tensors,
    int8 plus a float64 scale for quantized ones."""
    quantized = isinstance(model, QuantizedModel)
    d, h, e = model.dims
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<IIIIB", MODEL_VERSION, d, h, e, 1 if quantized else 0))
        if quantized:
            for qt, bias in ((model.w1, model.b1), (model.w2, model.b2)):
                fh.write(struct.pack("<d", qt.scale))
                fh.write(np.ascontiguousarray(qt.data, dtype=np.int8).tobytes())
                fh.write(np.ascontiguousarray(bias, dtype="<f8").tobytes())
        else:
            for tensor in (model.w1, model.b1, model.w2, model.b2):
                fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_model(path: str | Path):
    """Inverse of :func:`save_model`; returns EmbedderParams or QuantizedModel."""
    blob = Path(path).read_bytes()
    if blob[:4] != MODEL_MAGIC:
        raise DataError(f"{path}: bad model magic {blob[:4]!r}")
    version, d, h, e, quantized = struct.unpack("<IIIIB", blob[4:21])
    if version != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {version}")
    off = 21

    def take(count, dtype):
        nonlocal off
        itemsize = np.dtype(dtype).itemsize
        end = off + count * itemsize
        if end > len(blob):
            raise DataError(f"{path}: truncated model file")
        arr = np.frombuffer(blob[off:end], dtype=dtype).copy()
        off = end
        return arr

    if quantized:
        s1 = struct.unpack("<d", blob[off : off + 8])[0]
        off += 8
        w1 = take(h * d, np.int8).reshape(h, d)
        b1 = take(h, "<f8")
        s2 = struct.unpack("<d", blob[off : off + 8])[0]
        off += 8
        w2 = take(e * h, np.int8).reshape(e, h)
        b2 = take(e, "<f8")
        return QuantizedModel(QuantizedTensor(w1, s1), b1, QuantizedTensor(w2, s2), b2)
    w1 = take(h * d, "<f8").reshape(h, d)
    b1 = take(h, "<f8")
    w2 = take(e * h, "<f8").reshape(e, h)
    b2 = take(e, "<f8")
    return EmbedderParams(w1, b1, w2, b2)
