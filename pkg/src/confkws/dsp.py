"""Audio ingestion and the 40-dim log-Mel filterbank frontend.

All functions are pure; identical input yields bit-identical features. The
frontend is pinned down to the sample: 25 ms Hann-windowed frames at a 10 ms
hop, magnitude-squared FFT at the next power of two, 40 triangular filters
spaced uniformly on the mel scale between 125 and 7500 Hz, natural log with a
1e-6 floor.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import struct
import wave
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"FMAT"


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray  # float64 in [-1, 1]
    sample_rate: int

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrontendConfig:
    sample_rate: int = 16000
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    n_mels: int = 40
    f_lo: float = 125.0
    f_hi: float = 7500.0
    log_floor: float = 1e-6

    @property
    def frame_len(self) -> int:
        return int(round(self.frame_ms * self.sample_rate / 1000.0))

    @property
    def hop_len(self) -> int:
        return int(round(self.hop_ms * self.sample_rate / 1000.0))

    @property
    def n_fft(self) -> int:
        n = 1
        while n < self.frame_len:
            n *= 2
        return n

    def fingerprint(self) -> str:
        """Stable hash used to key the feature cache."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]


def read_wav(path) -> AudioBuffer:
    """Read one 16-bit PCM mono WAV (path or binary file object); samples are
    scaled by 1/32768."""
    try:
        with wave.open(path if hasattr(path, "read") else str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            sample_rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise DataError(f"{path}: cannot decode WAV: {exc}") from exc
    if n_channels != 1:
        raise DataError(f"{path}: expected mono audio, got {n_channels} channels")
    if sampwidth != 2:
        raise DataError(f"{path}: expected 16-bit PCM, got {8 * sampwidth}-bit")
    if len(raw) < n_frames * 2:
        raise DataError(f"{path}: truncated file ({len(raw)} bytes for {n_frames} frames)")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples, sample_rate)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1] as 16-bit PCM mono."""
    pcm = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (pcm * 32767.0).round().astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_centers(n_mels: int, f_lo: float, f_hi: float) -> np.ndarray:
    """Center frequencies (Hz) of the triangular filters."""
    pts = np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_mels + 2)
    return mel_to_hz(pts[1:-1])


def mel_filterbank(
    n_fft: int, sample_rate: int, n_mels: int, f_lo: float, f_hi: float
) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft//2 + 1).

    Filter edges are spaced uniformly on the mel scale; triangles are
    evaluated at the FFT bin frequencies, peak 1 at the center.
    """
    if not (0 <= f_lo < f_hi <= sample_rate / 2):
        raise ValueError(f"need 0 <= f_lo < f_hi <= nyquist, got {f_lo}..{f_hi} at {sample_rate} Hz")
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    fb = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(n_mels):
        left, center, right = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        fb[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


@dataclass(frozen=True)
class FeatureMatrix:
    frames: np.ndarray  # (T, D) log-mel energies
    frame_len_ms: float
    hop_ms: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape  # type: ignore[return-value]


def frame_signal(samples: np.ndarray, frame_len: int, hop_len: int) -> np.ndarray:
    """Slice a 1-D signal into (T, frame_len) frames; T = 1 + (n-frame)//hop."""
    n = len(samples)
    if n < frame_len:
        raise DataError(f"audio too short: {n} samples < one {frame_len}-sample frame")
    n_frames = 1 + (n - frame_len) // hop_len
    idx = np.arange(frame_len)[None, :] + hop_len * np.arange(n_frames)[:, None]
    return samples[idx]


def log_mel(a: AudioBuffer, cfg: FrontendConfig | None = None) -> FeatureMatrix:
    """Log-mel energies of one utterance, shape (T, cfg.n_mels)."""
    cfg = cfg or FrontendConfig()
    if a.sample_rate != cfg.sample_rate:
        raise DataError(f"sample rate {a.sample_rate} != configured {cfg.sample_rate}")
    frames = frame_signal(np.asarray(a.samples, dtype=np.float64), cfg.frame_len, cfg.hop_len)
    window = np.hanning(cfg.frame_len)
    spectrum = np.fft.rfft(frames * window, n=cfg.n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    fb = mel_filterbank(cfg.n_fft, cfg.sample_rate, cfg.n_mels, cfg.f_lo, cfg.f_hi)
    energies = power @ fb.T
    feats = np.log(np.maximum(energies, cfg.log_floor))
    return FeatureMatrix(feats, cfg.frame_ms, cfg.hop_ms)


def save_features(path: str | Path, feats: np.ndarray) -> None:
    """Binary feature file: magic, uint32 T, uint32 D, float32 data (LE)."""
    arr = np.ascontiguousarray(feats, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def load_features(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURE_MAGIC:
            raise DataError(f"{path}: bad feature-file magic {magic!r}")
        t, d = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != t * d:
        raise DataError(f"{path}: truncated feature file")
    return data.reshape(t, d).astype(np.float32)


def _safe_name(utt_id: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", utt_id)
    if safe != utt_id or len(safe) > 80:
        safe = f"{safe[:48]}_{hashlib.sha1(utt_id.encode()).hexdigest()[:12]}"
    return safe


class FeatureCache:
    """On-disk feature store keyed by utterance id and frontend fingerprint.

    Features are float32 as stored, so a cache round trip is a no-op and
    cached vs freshly-extracted values cannot diverge.
    """

    def __init__(self, cache_dir: str | Path, cfg: FrontendConfig | None = None):
        self.cfg = cfg or FrontendConfig()
        self.root = Path(cache_dir) / self.cfg.fingerprint()
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, utt_id: str) -> Path:
        return self.root / f"{_safe_name(utt_id)}.f32"

    def get(self, utt_id: str) -> np.ndarray | None:
        p = self.path_for(utt_id)
        return load_features(p) if p.exists() else None

    def put(self, utt_id: str, feats: np.ndarray) -> np.ndarray:
        p = self.path_for(utt_id)
        save_features(p, feats)
        return load_features(p)

    def get_or_extract(self, utt_id: str, wav_path: str | Path) -> np.ndarray:
        cached = self.get(utt_id)
        if cached is not None:
            return cached
        feats = log_mel(read_wav(wav_path), self.cfg).frames
        return self.put(utt_id, feats)


class ManifestFeatureProvider:
    """Callable ``utt_id -> (T, D) float32`` backed by a manifest's WAV files
    and a :class:`FeatureCache`; relative audio paths resolve against the
    manifest's directory."""

    def __init__(self, manifest, base_dir: str | Path, cache: FeatureCache):
        self.manifest = manifest
        self.base_dir = Path(base_dir)
        self.cache = cache

    def __call__(self, utt_id: str) -> np.ndarray:
        rec = self.manifest.record(utt_id)
        if rec.audio_path is None:
            cached = self.cache.get(utt_id)
            if cached is None:
                raise DataError(f"record {utt_id} has no audio_path and no cached features")
            return cached
        wav = Path(rec.audio_path)
        if not wav.is_absolute():
            wav = self.base_dir / wav
        return self.cache.get_or_extract(utt_id, wav)
