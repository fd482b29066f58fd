"""Dataset manifests, enrollment/test splits, and evaluation pair lists.

A manifest is a JSONL file, one utterance record per line with the fixed key
order ``id, keyword, speaker, source, audio_path, duration_s, prosody``.
Manifests and splits are immutable once built and safe to share across
workers.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

logger = logging.getLogger(__name__)

SOURCES = ("real", "tts")
PAIR_LABELS = ("positive", "easy_negative", "hard_negative")

_RECORD_KEYS = ("id", "keyword", "speaker", "source", "audio_path", "duration_s", "prosody")


@dataclass(frozen=True)
class UtteranceRecord:
    """One audio clip: keyword label, speaker, real/tts source, duration."""

    id: str
    keyword: str
    speaker: str
    source: str
    duration_s: float
    audio_path: str | None = None
    prosody: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("record id must be non-empty")
        if not self.keyword:
            raise DataError(f"record {self.id}: keyword must be non-empty")
        if self.keyword != self.keyword.lower():
            object.__setattr__(self, "keyword", self.keyword.lower())
        if self.source not in SOURCES:
            raise DataError(f"record {self.id}: source must be one of {SOURCES}, got {self.source!r}")
        if isinstance(self.duration_s, bool) or not isinstance(self.duration_s, (int, float)):
            raise DataError(f"record {self.id}: duration_s must be a number")
        if not self.duration_s > 0:
            raise DataError(f"record {self.id}: duration_s must be > 0, got {self.duration_s}")

    def to_json(self) -> str:
        row = {
            "id": self.id,
            "keyword": self.keyword,
            "speaker": self.speaker,
            "source": self.source,
            "audio_path": self.audio_path,
            "duration_s": self.duration_s,
            "prosody": self.prosody,
        }
        return json.dumps(row, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str, line_no: int = 0) -> "UtteranceRecord":
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {line_no}: malformed JSON: {exc}") from exc
        if not isinstance(row, dict):
            raise DataError(f"line {line_no}: expected a JSON object")
        unknown = set(row) - set(_RECORD_KEYS)
        if unknown:
            raise DataError(f"line {line_no}: unknown keys {sorted(unknown)}")
        try:
            return cls(
                id=row["id"],
                keyword=row["keyword"],
                speaker=row["speaker"],
                source=row["source"],
                duration_s=row["duration_s"],
                audio_path=row.get("audio_path"),
                prosody=row.get("prosody"),
            )
        except KeyError as exc:
            raise DataError(f"line {line_no}: missing key {exc}") from exc
        except DataError as exc:
            raise DataError(f"line {line_no}: {exc}") from exc


@dataclass
class Manifest:
    """Ordered utterance records plus a keyword -> record-ids index."""

    records: list[UtteranceRecord]
    source_name: str = ""
    by_keyword: dict[str, list[str]] = field(init=False, repr=False)
    by_id: dict[str, UtteranceRecord] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.by_keyword = {}
        self.by_id = {}
        for rec in self.records:
            if rec.id in self.by_id:
                raise DataError(f"duplicate record id {rec.id!r}")
            self.by_id[rec.id] = rec
            self.by_keyword.setdefault(rec.keyword, []).append(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def keywords(self) -> list[str]:
        return sorted(self.by_keyword)

    def record(self, utt_id: str) -> UtteranceRecord:
        try:
            return self.by_id[utt_id]
        except KeyError:
            raise KeyError(f"unknown utterance id {utt_id!r}") from None


@dataclass
class EvalSplit:
    """Per-keyword enrollment/test id lists; the two sets are disjoint."""

    enroll: dict[str, list[str]]
    test: dict[str, list[str]]
    skipped: list[str] = field(default_factory=list)

    def keywords(self) -> list[str]:
        return sorted(self.enroll)

    def save(self, path: str | Path) -> None:
        payload = {
            kw: {"enroll": self.enroll[kw], "test": self.test[kw]}
            for kw in sorted(self.enroll)
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EvalSplit":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            enroll={kw: v["enroll"] for kw, v in payload.items()},
            test={kw: v["test"] for kw, v in payload.items()},
        )


@dataclass(frozen=True)
class EvalPair:
    a: str
    b: str
    label: str

    def __post_init__(self) -> None:
        if self.label not in PAIR_LABELS:
            raise DataError(f"bad pair label {self.label!r}")


def load_manifest(path: str | Path, source_name: str = "") -> Manifest:
    """Read a JSONL manifest; order is file order. Duplicate ids and malformed
    lines raise :class:`DataError` naming the line."""
    path = Path(path)
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = UtteranceRecord.from_json(line, line_no)
            if rec.id in seen:
                raise DataError(f"line {line_no}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return Manifest(records, source_name=source_name or path.stem)


def save_manifest(m: Manifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in m.records:
            fh.write(rec.to_json() + "\n")


def make_eval_split(m: Manifest, enroll_k: int = 10, seed: int = 0) -> EvalSplit:
    """Seeded enrollment/test split: ``enroll_k`` enrollment utterances per
    keyword, the rest test. Keywords with <= enroll_k utterances are skipped
    (they cannot leave a non-empty test side)."""
    if enroll_k < 1:
        raise ValueError(f"enroll_k must be >= 1, got {enroll_k}")
    rng = random.Random(seed)
    enroll: dict[str, list[str]] = {}
    test: dict[str, list[str]] = {}
    skipped: list[str] = []
    for kw in sorted(m.by_keyword):
        ids = list(m.by_keyword[kw])
        if len(ids) <= enroll_k:
            skipped.append(kw)
            continue
        rng.shuffle(ids)
        enroll[kw] = ids[:enroll_k]
        test[kw] = ids[enroll_k:]
    if skipped:
        logger.warning(
            "eval split skipped %d keyword(s) with <= %d utterances: %s",
            len(skipped), enroll_k, ", ".join(skipped),
        )
    if not enroll:
        raise DataError(f"no keyword has more than enroll_k={enroll_k} utterances")
    return EvalSplit(enroll=enroll, test=test, skipped=skipped)


def filter_by_duration(m: Manifest, lo: float, hi: float) -> Manifest:
    """Keep records with lo <= duration_s <= hi, preserving order."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    kept = [r for r in m.records if lo <= r.duration_s <= hi]
    return Manifest(kept, source_name=m.source_name)


def build_pairs(
    m: Manifest,
    hard_map: dict[str, list[str]] | None = None,
    n_per_class: int = 1000,
    seed: int = 0,
) -> list[EvalPair]:
    """Sample up to ``n_per_class`` utterance pairs per label class.

    Positives pair two distinct utterances of one keyword; easy negatives
    pair utterances of two random different keywords; hard negatives pair
    only keyword combinations listed in ``hard_map``. Draws are with
    replacement, deterministic per seed.
    """
    hard_map = hard_map or {}
    for kw, others in hard_map.items():
        missing = [w for w in [kw, *others] if w not in m.by_keyword]
        if missing:
            raise DataError(f"hard_map references keywords absent from manifest: {missing}")

    rng = random.Random(seed)
    pairs: list[EvalPair] = []

    pos_keywords = [kw for kw in sorted(m.by_keyword) if len(m.by_keyword[kw]) >= 2]
    thin = sorted(set(m.by_keyword) - set(pos_keywords))
    if thin:
        logger.warning("keywords with <2 utterances yield no positive pairs: %s", ", ".join(thin))
    for _ in range(n_per_class if pos_keywords else 0):
        kw = rng.choice(pos_keywords)
        a, b = rng.sample(m.by_keyword[kw], 2)
        pairs.append(EvalPair(a, b, "positive"))

    all_keywords = sorted(m.by_keyword)
    for _ in range(n_per_class if len(all_keywords) >= 2 else 0):
        kw_a, kw_b = rng.sample(all_keywords, 2)
        a = rng.choice(m.by_keyword[kw_a])
        b = rng.choice(m.by_keyword[kw_b])
        pairs.append(EvalPair(a, b, "easy_negative"))

    hard_combos = sorted(
        (kw, other) for kw, others in hard_map.items() for other in others if other != kw
    )
    for _ in range(n_per_class if hard_combos else 0):
        kw_a, kw_b = rng.choice(hard_combos)
        a = rng.choice(m.by_keyword[kw_a])
        b = rng.choice(m.by_keyword[kw_b])
        pairs.append(EvalPair(a, b, "hard_negative"))

    return pairs


def save_pairs(pairs: list[EvalPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps({"a": p.a, "b": p.b, "label": p.label}, ensure_ascii=False) + "\n")


def load_pairs(path: str | Path) -> list[EvalPair]:
    pairs: list[EvalPair] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                pairs.append(EvalPair(row["a"], row["b"], row["label"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"line {line_no}: bad pair record: {exc}") from exc
    return pairs
