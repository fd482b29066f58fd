"""Training batch construction.

Four strategies: uniform random over the whole vocabulary (baseline), vowel
group based (all X keywords drawn from one group; constant cost per batch
thanks to the precomputed eligibility index), probabilistic per-batch mixing
of a real and a synthetic source, and the linear Levenshtein-search baseline
whose per-batch cost scales with vocabulary size.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass

from .confusable import VowelGroup
from .corpus import Manifest
from .errors import DataError
from .ge2e import TrainingBatch
from .lexicon import levenshtein

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchSpec:
    x: int = 8
    y: int = 10

    def __post_init__(self) -> None:
        if self.x < 2:
            raise ValueError(f"need at least 2 keywords per batch, got x={self.x}")
        if self.y < 2 or self.y % 2 != 0:
            raise ValueError(f"utterances per keyword must be even and >= 2, got y={self.y}")


@dataclass(frozen=True)
class MixConfig:
    p_tts: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_tts <= 1.0:
            raise ValueError(f"p_tts must be in [0, 1], got {self.p_tts}")

    @property
    def p_mswc(self) -> float:
        return 1.0 - self.p_tts


class _KeywordIndex:
    """keyword -> utterance ids, restricted to keywords with >= y utterances.

    Built once at sampler construction; per-batch work never rescans the
    manifest.
    """

    def __init__(self, m: Manifest, y: int):
        self.by_keyword = {kw: ids for kw, ids in m.by_keyword.items() if len(ids) >= y}
        self.keywords = sorted(self.by_keyword)
        self.manifest = m

    def describe_deficient(self, m: Manifest, y: int) -> str:
        thin = {kw: len(ids) for kw, ids in m.by_keyword.items() if len(ids) < y}
        worst = sorted(thin.items())[:8]
        listed = ", ".join(f"{kw}({n})" for kw, n in worst)
        return f"{len(thin)} keyword(s) below y={y} utterances: {listed}"


def _draw_batch(index: _KeywordIndex, keywords: list[str], spec: BatchSpec, rng: random.Random) -> TrainingBatch:
    rows = []
    for kw in keywords:
        ids = rng.sample(index.by_keyword[kw], spec.y)
        rows.append([index.manifest.record(i) for i in ids])
    source = rows[0][0].source
    return TrainingBatch(keywords=list(keywords), records=rows, source=source)


class RandomSampler:
    """X distinct keywords uniform over the eligible vocabulary, Y utterances
    per keyword without replacement."""

    def __init__(self, m: Manifest, spec: BatchSpec | None = None, seed: int = 0):
        self.spec = spec or BatchSpec()
        self.rng = random.Random(seed)
        self.index = _KeywordIndex(m, self.spec.y)
        if len(self.index.keywords) < self.spec.x:
            raise DataError(
                f"cannot sample x={self.spec.x} keywords: only {len(self.index.keywords)} "
                f"eligible; " + self.index.describe_deficient(m, self.spec.y)
            )

    def sample(self) -> TrainingBatch:
        keywords = self.rng.sample(self.index.keywords, self.spec.x)
        return _draw_batch(self.index, keywords, self.spec, self.rng)


class GroupSampler:
    """One vowel group per batch: the group is chosen uniformly among groups
    with >= X eligible keywords, then keywords and utterances are drawn within
    it. Group membership is resolved at construction, so the per-batch cost
    does not depend on vocabulary size."""

    def __init__(self, m: Manifest, groups: list[VowelGroup], spec: BatchSpec | None = None, seed: int = 0):
        self.spec = spec or BatchSpec()
        self.rng = random.Random(seed)
        self.index = _KeywordIndex(m, self.spec.y)
        eligible = set(self.index.by_keyword)
        self.group_keywords = []
        self.group_labels = []
        for g in groups:
            members = sorted(w for w in g.members if w in eligible)
            if len(members) >= self.spec.x:
                self.group_keywords.append(members)
                self.group_labels.append(g.label)
        if not self.group_keywords:
            raise DataError(
                f"no vowel group has x={self.spec.x} keywords with y={self.spec.y} utterances; "
                + self.index.describe_deficient(m, self.spec.y)
            )

    def sample(self) -> TrainingBatch:
        members = self.group_keywords[self.rng.randrange(len(self.group_keywords))]
        keywords = self.rng.sample(members, self.spec.x)
        return _draw_batch(self.index, keywords, self.spec, self.rng)


class MixedSampler:
    """Per-batch Bernoulli source choice: with p_tts a group batch from the
    synthetic manifest, otherwise a random batch from the real manifest. Every
    batch is single-source by construction."""

    def __init__(
        self,
        real: Manifest,
        tts: Manifest,
        groups: list[VowelGroup],
        spec: BatchSpec | None = None,
        mix: MixConfig | None = None,
        seed: int = 0,
    ):
        self.mix = mix or MixConfig()
        self.rng = random.Random(seed)
        # degenerate probabilities only need the one source they use
        self.real_sampler = (
            RandomSampler(real, spec, seed=self.rng.randrange(2**32)) if self.mix.p_tts < 1.0 else None
        )
        self.tts_sampler = (
            GroupSampler(tts, groups, spec, seed=self.rng.randrange(2**32)) if self.mix.p_tts > 0.0 else None
        )

    def sample(self) -> TrainingBatch:
        use_tts = self.rng.random() < self.mix.p_tts
        if use_tts:
            return self.tts_sampler.sample()
        return self.real_sampler.sample()


class LevenshteinSampler:
    """Prior-art baseline: pick an anchor keyword, scan the whole vocabulary
    for words within ``max_dist`` edits, fill the batch with the nearest
    neighbors (ascending distance, ties lexicographic), pad with random
    keywords. The per-batch vocabulary scan is the O(N) cost the group index
    avoids."""

    def __init__(self, m: Manifest, spec: BatchSpec | None = None, max_dist: int = 2, seed: int = 0):
        self.spec = spec or BatchSpec()
        self.max_dist = max_dist
        self.rng = random.Random(seed)
        self.index = _KeywordIndex(m, self.spec.y)
        if len(self.index.keywords) < self.spec.x:
            raise DataError(
                f"cannot sample x={self.spec.x} keywords: only {len(self.index.keywords)} eligible"
            )

    def sample(self) -> TrainingBatch:
        vocab = self.index.keywords
        anchor = vocab[self.rng.randrange(len(vocab))]
        neighbors = []
        for w in vocab:  # deliberate full scan per batch
            if w == anchor or abs(len(w) - len(anchor)) > self.max_dist:
                continue
            d = levenshtein(w, anchor)
            if d <= self.max_dist:
                neighbors.append((d, w))
        neighbors.sort()
        keywords = [anchor] + [w for _, w in neighbors[: self.spec.x - 1]]
        if len(keywords) < self.spec.x:
            pool = [w for w in vocab if w not in set(keywords)]
            keywords += self.rng.sample(pool, self.spec.x - len(keywords))
        return _draw_batch(self.index, keywords, self.spec, self.rng)


def make_sampler(
    kind: str,
    real: Manifest | None = None,
    tts: Manifest | None = None,
    groups: list[VowelGroup] | None = None,
    spec: BatchSpec | None = None,
    mix: MixConfig | None = None,
    max_dist: int = 2,
    seed: int = 0,
):
    """Sampler factory used by the CLI; validates which inputs each kind needs."""
    if kind == "random":
        if real is None:
            raise DataError("random sampler needs a --real manifest")
        return RandomSampler(real, spec, seed)
    if kind == "group":
        if tts is None or groups is None:
            raise DataError("group sampler needs --tts manifest and --groups")
        return GroupSampler(tts, groups, spec, seed)
    if kind == "mixed":
        if real is None or tts is None or groups is None:
            raise DataError("mixed sampler needs --real, --tts, and --groups")
        return MixedSampler(real, tts, groups, spec, mix, seed)
    if kind == "levenshtein":
        if real is None:
            raise DataError("levenshtein sampler needs a --real manifest")
        return LevenshteinSampler(real, spec, max_dist, seed)
    raise ValueError(f"unknown sampler kind {kind!r}")


def time_sampler(sampler, n_batches: int) -> float:
    """Mean wall seconds per batch."""
    start = time.perf_counter()
    for _ in range(n_batches):
        sampler.sample()
    return (time.perf_counter() - start) / n_batches


def synthetic_vocab_manifest(n_keywords: int, y: int, seed: int = 0) -> Manifest:
    """Benchmark fixture: n random pronounceable-ish keywords, y records each."""
    from .corpus import UtteranceRecord

    rng = random.Random(seed)
    letters = "abcdefghijklmnopqrstuvwxyz"
    words: set[str] = set()
    while len(words) < n_keywords:
        words.add("".join(rng.choice(letters) for _ in range(rng.randint(4, 9))))
    records = []
    for kw in sorted(words):
        for i in range(y):
            records.append(
                UtteranceRecord(
                    id=f"{kw}_{i}", keyword=kw, speaker=f"s{i}", source="real", duration_s=1.0
                )
            )
    return Manifest(records, source_name=f"synthetic_{n_keywords}")


def synthetic_groups(m: Manifest, group_size: int = 20) -> list[VowelGroup]:
    """Benchmark fixture: chop the vocabulary into fixed-size pseudo groups."""
    keywords = m.keywords()
    groups = []
    for gi in range(0, len(keywords), group_size):
        chunk = keywords[gi : gi + group_size]
        if len(chunk) >= 2:
            groups.append(VowelGroup(label=f"g{gi // group_size}", members=chunk))
    return groups


@dataclass
class BenchRow:
    vocab_size: int
    sampler: str
    mean_batch_s: float


def bench_samplers(
    sizes: list[int],
    spec: BatchSpec | None = None,
    max_dist: int = 2,
    seed: int = 0,
    group_batches: int = 2000,
    levenshtein_batches: int = 5,
) -> list[BenchRow]:
    """Per-batch wall time of the group sampler vs the Levenshtein baseline
    at each vocabulary size."""
    spec = spec or BatchSpec()
    rows = []
    for size in sizes:
        m = synthetic_vocab_manifest(size, spec.y, seed)
        groups = synthetic_groups(m, group_size=max(2 * spec.x, 20))
        gs = GroupSampler(m, groups, spec, seed)
        ls = LevenshteinSampler(m, spec, max_dist, seed)
        rows.append(BenchRow(size, "group", time_sampler(gs, group_batches)))
        rows.append(BenchRow(size, "levenshtein", time_sampler(ls, levenshtein_batches)))
        logger.info(
            "bench |V|=%d: group %.3g s/batch, levenshtein %.3g s/batch",
            size, rows[-2].mean_batch_s, rows[-1].mean_batch_s,
        )
    return rows
