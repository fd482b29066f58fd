"""Synthesis manifests over a speaker/prosody style grid, plus two backends:
a deterministic procedural pseudo-speech renderer (hermetic, used by tests
and desk-scale experiments) and an HTTP client for a real TTS engine.

Procedural audio renders each phoneme as an equal-length harmonic burst whose
base frequency hashes the phoneme symbol; the speaker shifts all frequencies
by up to +/-15% and the prosody tag stretches time by up to +/-20% before the
total duration is clamped near one second. Words sharing all phonemes but one
therefore differ only inside one segment, which is exactly the confusability
structure group-based training needs.
"""

from __future__ import annotations

import hashlib
import io
import logging
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import UtteranceRecord
from .dsp import AudioBuffer, read_wav, write_wav
from .errors import DataError, TransportError
from .lexicon import Lexicon

logger = logging.getLogger(__name__)

# Prosody tag -> (punctuation decoration, time-scale factor).
PROSODY_RULES: dict[str, tuple[str, float]] = {
    "statement": (".", 1.00),
    "exclaim": ("!", 0.85),
    "question": ("?", 1.10),
    "pause": (",", 0.95),
    "trailing": ("...", 1.20),
}

TARGET_DURATION_S = 1.0
DURATION_CLAMP = (0.9, 1.1)


@dataclass
class StyleGrid:
    n_speakers: int = 726
    prosody_tags: tuple[str, ...] = tuple(PROSODY_RULES)
    utterances_per_keyword: int = 100

    def __post_init__(self) -> None:
        if self.n_speakers < 1:
            raise ValueError("n_speakers must be >= 1")
        if self.utterances_per_keyword < 1:
            raise ValueError("utterances_per_keyword must be >= 1")
        unknown = [t for t in self.prosody_tags if t not in PROSODY_RULES]
        if unknown:
            raise ValueError(f"unknown prosody tags {unknown}")


@dataclass(frozen=True)
class SynthJob:
    keyword: str
    rendered_text: str
    speaker_id: int
    prosody: str
    output_id: str


def decorate_prosody(keyword: str, tag: str) -> str:
    """Apply the tag's punctuation decoration to the keyword text."""
    try:
        suffix = PROSODY_RULES[tag][0]
    except KeyError:
        raise ValueError(f"unknown prosody tag {tag!r}") from None
    return keyword + suffix


def build_synth_manifest(groups, grid: StyleGrid, seed: int = 0) -> list[SynthJob]:
    """Synthesis jobs for every keyword in ``groups``: exactly
    ``grid.utterances_per_keyword`` jobs each, (speaker, prosody) drawn
    uniformly by a seeded RNG. Keywords appearing in several groups are
    synthesized once. Job list is sorted by output id."""
    if not groups:
        raise DataError("no groups to synthesize")
    keywords = sorted({w for g in groups for w in g.members})
    rng = random.Random(seed)
    jobs: list[SynthJob] = []
    for kw in keywords:
        for i in range(grid.utterances_per_keyword):
            speaker = rng.randrange(grid.n_speakers)
            tag = grid.prosody_tags[rng.randrange(len(grid.prosody_tags))]
            jobs.append(
                SynthJob(
                    keyword=kw,
                    rendered_text=decorate_prosody(kw, tag),
                    speaker_id=speaker,
                    prosody=tag,
                    output_id=f"tts_{kw}_{i:04d}",
                )
            )
    jobs.sort(key=lambda j: j.output_id)
    return jobs


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha1(text.encode()).digest()[:8], "little")


def _phoneme_symbols(keyword: str, lex: Lexicon | None) -> list[str]:
    if lex is not None and keyword in lex:
        return [p.symbol for p in lex.phones_of(keyword).phones]
    # Grapheme fallback: each letter acts as a pseudo-phoneme.
    return [ch.upper() for ch in keyword if ch.isalpha()]


def synthesize_procedural(
    job: SynthJob, lex: Lexicon | None = None, sample_rate: int = 16000
) -> tuple[AudioBuffer, UtteranceRecord]:
    """Render deterministic pseudo-speech for one job.

    Returns (audio, record tagged source=tts). The same job always yields
    bit-identical audio.
    """
    phones = _phoneme_symbols(job.keyword, lex)
    if not phones:
        raise DataError(f"job {job.output_id}: keyword {job.keyword!r} has no phonemes")

    scale = PROSODY_RULES[job.prosody][1]
    total_s = float(np.clip(TARGET_DURATION_S * scale, *DURATION_CLAMP))
    seg_len = int(round(total_s * sample_rate / len(phones)))
    speaker_shift = 1.0 + 0.30 * ((_stable_hash(f"spk{job.speaker_id}") % 1000) / 999.0 - 0.5)

    t = np.arange(seg_len) / sample_rate
    envelope = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(seg_len) / max(seg_len - 1, 1))
    segments = []
    for sym in phones:
        base = 120.0 + (_stable_hash(f"ph{sym}") % 800)
        f0 = base * speaker_shift
        seg = np.zeros(seg_len)
        for harmonic, amp in ((1, 1.0), (2, 0.5), (3, 0.25)):
            seg += amp * np.sin(2.0 * np.pi * f0 * harmonic * t)
        segments.append(0.25 * envelope * seg)
    samples = np.concatenate(segments)

    record = UtteranceRecord(
        id=job.output_id,
        keyword=job.keyword,
        speaker=f"tts_spk{job.speaker_id:04d}",
        source="tts",
        duration_s=len(samples) / sample_rate,
        prosody=job.prosody,
    )
    return AudioBuffer(samples, sample_rate), record


class TtsClient:
    """HTTP synthesis: POST {"text", "speaker_id", "prosody"} -> WAV bytes."""

    def __init__(self, url: str, timeout_s: float = 60.0, retries: int = 2):
        self.url = url
        self.timeout_s = timeout_s
        self.retries = retries

    def synthesize(self, text: str, speaker_id: int, prosody: str) -> bytes:
        import requests

        body = {"text": text, "speaker_id": speaker_id, "prosody": prosody}
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.url, json=body, timeout=self.timeout_s)
                resp.raise_for_status()
                return resp.content
            except Exception as exc:
                last = exc
        raise TransportError(f"TTS request to {self.url} failed: {last}") from last


class FileTtsClient:
    """Stub TTS backend that replays fixture WAVs from a directory, keyed by
    keyword (``<keyword>.wav``) with a ``default.wav`` fallback."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def synthesize(self, text: str, speaker_id: int, prosody: str) -> bytes:
        keyword = text.rstrip(".!?,")
        for candidate in (self.directory / f"{keyword}.wav", self.directory / "default.wav"):
            if candidate.exists():
                return candidate.read_bytes()
        raise TransportError(f"no fixture WAV for {keyword!r} in {self.directory}")


def synthesize_remote(client, job: SynthJob) -> tuple[AudioBuffer, UtteranceRecord]:
    """Fetch one utterance from a TTS backend; errors carry the job id."""
    try:
        wav_bytes = client.synthesize(job.rendered_text, job.speaker_id, job.prosody)
    except TransportError as exc:
        raise TransportError(f"job {job.output_id}: {exc}") from exc
    try:
        buf = read_wav(io.BytesIO(wav_bytes))
    except DataError as exc:
        raise DataError(f"job {job.output_id}: undecodable TTS response: {exc}") from exc
    record = UtteranceRecord(
        id=job.output_id,
        keyword=job.keyword,
        speaker=f"tts_spk{job.speaker_id:04d}",
        source="tts",
        duration_s=buf.duration_s,
        prosody=job.prosody,
    )
    return buf, record


def run_synthesis(
    jobs: list[SynthJob],
    out_dir: str | Path,
    lex: Lexicon | None = None,
    client=None,
    sample_rate: int = 16000,
) -> list[UtteranceRecord]:
    """Synthesize every job into ``out_dir/wavs`` and return the records
    (audio_path set relative to ``out_dir``), sorted by output id."""
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wavs"
    wav_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for job in jobs:
        if client is None:
            audio, record = synthesize_procedural(job, lex, sample_rate)
        else:
            audio, record = synthesize_remote(client, job)
        rel = f"wavs/{job.output_id}.wav"
        write_wav(out_dir / rel, audio.samples, audio.sample_rate)
        records.append(
            UtteranceRecord(
                id=record.id,
                keyword=record.keyword,
                speaker=record.speaker,
                source=record.source,
                duration_s=record.duration_s,
                audio_path=rel,
                prosody=record.prosody,
            )
        )
    records.sort(key=lambda r: r.id)
    return records
