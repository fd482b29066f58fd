"""Vowel-based confusable keyword groups.

Groups come from three producers: an LLM prompted once per vowel, an offline
lexicon scan (so the pipeline runs hermetically), and the fixed hand-grouping
of the Speech Commands evaluation keywords. Also hosts the linear-scan
Levenshtein confusable search kept as the prior-art baseline the group-based
sampler is benchmarked against.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError, TransportError
from .lexicon import IPA_VOWELS, Lexicon, Stress, VowelInventory, levenshtein, vowels_of

logger = logging.getLogger(__name__)

# Vowel-pair merges applied when grouping evaluation keywords: near-identical
# vowels count as one group. Order inside a pair fixes the merged label.
DEFAULT_MERGES: tuple[tuple[str, ...], ...] = (
    ("i:", "ɪ"),
    ("ɜ:", "ə"),
    ("oʊ", "u:"),
)

DEFAULT_PROMPT = (
    "Can you generate a group of words? The group should have {count} simple "
    "but distinguishable words. All words in the group should contain the "
    "vowel [{vowel}]"
)

ASSIGNMENTS = ("stressed_vowel", "any_vowel", "explicit")


@dataclass
class VowelGroup:
    """A vowel label (possibly a merged pair like ``i:+ɪ``) and its keywords."""

    label: str
    members: list[str]

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise DataError(f"group {self.label!r} has duplicate members")


@dataclass
class GroupingConfig:
    merges: tuple[tuple[str, ...], ...] = DEFAULT_MERGES
    min_group_size: int = 3
    assignment: str = "stressed_vowel"

    def __post_init__(self) -> None:
        if self.assignment not in ASSIGNMENTS:
            raise ValueError(f"assignment must be one of {ASSIGNMENTS}")
        seen: set[str] = set()
        for ms in self.merges:
            if seen & set(ms):
                raise ValueError("merge sets must be disjoint")
            seen |= set(ms)


@dataclass
class PromptTemplate:
    text: str = DEFAULT_PROMPT
    words_per_group: int = 100


def merged_label(labels) -> str:
    """Label for a merged vowel set, in the order the merge declares."""
    return "+".join(labels)


def render_prompt(t: PromptTemplate, vowel: str) -> str:
    """Instantiate the per-vowel word-list prompt."""
    if vowel not in IPA_VOWELS:
        raise ValueError(f"unknown vowel label {vowel!r}")
    return t.text.format(count=t.words_per_group, vowel=vowel)


class LlmClient:
    """HTTP word-list generator: POST {"prompt": ...} -> {"text": ...}."""

    def __init__(self, url: str, timeout_s: float = 30.0, retries: int = 2):
        self.url = url
        self.timeout_s = timeout_s
        self.retries = retries

    def generate(self, prompt: str) -> str:
        import requests

        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(self.url, json={"prompt": prompt}, timeout=self.timeout_s)
                resp.raise_for_status()
                return resp.json()["text"]
            except Exception as exc:  # transport, HTTP status, or schema
                last = exc
                if attempt < self.retries:
                    time.sleep(0.1 * (attempt + 1))
        raise TransportError(f"LLM request to {self.url} failed: {last}") from last


class FileLlmClient:
    """File-backed stub: canned responses in a directory, one ``<vowel>.txt``
    per vowel label. Keeps tests and offline runs off the network."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def generate(self, prompt: str) -> str:
        # The vowel label is the bracketed token of the rendered prompt.
        try:
            vowel = prompt[prompt.rindex("[") + 1 : prompt.rindex("]")]
        except ValueError as exc:
            raise TransportError(f"prompt has no [vowel] marker: {prompt!r}") from exc
        path = self.directory / f"{vowel}.txt"
        if not path.exists():
            raise TransportError(f"no canned response for vowel {vowel!r} at {path}")
        return path.read_text(encoding="utf-8")


def parse_word_list(text: str) -> list[str]:
    """Lowercased, deduplicated words from a newline- or comma-separated
    response; non-alphabetic tokens are dropped."""
    words: list[str] = []
    seen: set[str] = set()
    for chunk in text.replace(",", "\n").splitlines():
        token = chunk.strip().lower()
        if not token or not token.isalpha():
            continue
        if token not in seen:
            seen.add(token)
            words.append(token)
    return words


def generate_groups_llm(
    client,
    template: PromptTemplate | None = None,
    inventory: VowelInventory | None = None,
) -> list[VowelGroup]:
    """One request per inventory vowel; groups come back in inventory order.

    An unparseable (empty after filtering) response produces an empty group
    with a logged diagnostic rather than an error.
    """
    template = template or PromptTemplate()
    inventory = inventory or VowelInventory()
    groups: list[VowelGroup] = []
    for vowel in inventory.ipa_vowels:
        text = client.generate(render_prompt(template, vowel))
        words = parse_word_list(text)
        if not words:
            logger.warning("LLM response for vowel %s yielded no usable words", vowel)
        groups.append(VowelGroup(vowel, sorted(words)))
    return groups


def generate_groups_offline(
    lex: Lexicon,
    inv: VowelInventory,
    cfg: GroupingConfig | None = None,
    max_words: int = 100,
    seed: int = 0,
) -> list[VowelGroup]:
    """Lexicon-scan stand-in for the LLM generator.

    Words are bucketed by their assigned vowel (stressed vowel by default,
    every contained vowel under ``any_vowel``), merges are applied, and each
    bucket keeps its ``max_words`` shortest words (ascending length, ties
    lexicographic) to favor simple keywords. The ``seed`` argument is part of
    the sampling contract but the preference order makes selection
    deterministic.
    """
    del seed  # selection is fully ordered; see docstring
    if not lex.entries:
        raise DataError("lexicon is empty")
    cfg = cfg or GroupingConfig()

    label_of: dict[str, str] = {}
    labels_in_order: list[str] = []
    for vowel in inv.ipa_vowels:
        merged = next((ms for ms in cfg.merges if vowel in ms), None)
        label = merged_label(merged) if merged else vowel
        label_of[vowel] = label
        if label not in labels_in_order:
            labels_in_order.append(label)

    buckets: dict[str, list[str]] = {label: [] for label in labels_in_order}
    for word in lex.entries:
        sounds = vowels_of(lex, inv, word)
        if not sounds:
            continue
        if cfg.assignment == "any_vowel":
            assigned = {s.label for s in sounds}
        else:  # stressed_vowel: primary, else secondary, else first vowel
            chosen = next((s for s in sounds if s.stress is Stress.PRIMARY), None)
            if chosen is None:
                chosen = next((s for s in sounds if s.stress is Stress.SECONDARY), sounds[0])
            assigned = {chosen.label}
        for vowel in assigned:
            buckets[label_of[vowel]].append(word)

    groups = []
    for label in labels_in_order:
        chosen = sorted(buckets[label], key=lambda w: (len(w), w))[:max_words]
        groups.append(VowelGroup(label, sorted(chosen)))
    return groups


def prune_groups(groups: list[VowelGroup], min_size: int = 3) -> list[VowelGroup]:
    """Drop groups with fewer than ``min_size`` members, preserving order."""
    return [g for g in groups if len(g.members) >= min_size]


def speech_commands_groups() -> list[VowelGroup]:
    """The fixed 9-group vowel grouping of the Speech Commands evaluation
    keywords (32 keywords; members stored sorted)."""
    table = [
        ("ɑ:", ["marvin", "on", "stop"]),
        ("ɔ:", ["dog", "four", "off"]),
        ("e", ["yes", "seven", "left", "bed"]),
        ("æ", ["cat", "backward", "happy"]),
        ("i:+ɪ", ["sheila", "tree", "three", "visual", "six"]),
        ("ɜ:+ə", ["forward", "bird", "learn"]),
        ("aɪ", ["right", "nine", "five"]),
        ("aʊ", ["wow", "down", "house"]),
        ("oʊ+u:", ["go", "no", "follow", "zero", "two"]),
    ]
    return [VowelGroup(label, sorted(members)) for label, members in table]


def confusable_search(vocab: list[str], query: str, max_dist: int) -> list[str]:
    """All vocabulary words within ``max_dist`` edits of ``query`` (query
    itself excluded). Deliberately a full linear scan: this is the O(N)
    per-batch baseline the group index replaces."""
    out = []
    for w in vocab:
        if w != query and levenshtein(w, query) <= max_dist:
            out.append(w)
    return out


def validate_groups(
    groups: list[VowelGroup], lex: Lexicon, inv: VowelInventory
) -> dict[str, dict[str, list[str]]]:
    """Report members that cannot be verified against the lexicon.

    Per group label: ``unknown`` (not in lexicon), ``vowel_missing`` (none of
    the member's vowels is in the group label), ``stress_mismatch`` (contains
    the vowel, but not as its stressed vowel). Flags only; members are kept.
    """
    report: dict[str, dict[str, list[str]]] = {}
    for g in groups:
        group_vowels = set(g.label.split("+"))
        unknown, missing, stress_mismatch = [], [], []
        for w in g.members:
            if w not in lex:
                unknown.append(w)
                continue
            sounds = vowels_of(lex, inv, w)
            labels = [s.label for s in sounds]
            if not group_vowels & set(labels):
                missing.append(w)
                continue
            stressed = next((s.label for s in sounds if s.stress is Stress.PRIMARY), None)
            if stressed is not None and stressed not in group_vowels:
                stress_mismatch.append(w)
        entry = {}
        if unknown:
            entry["unknown"] = unknown
        if missing:
            entry["vowel_missing"] = missing
        if stress_mismatch:
            entry["stress_mismatch"] = stress_mismatch
        if entry:
            report[g.label] = entry
    return report


def save_groups(groups: list[VowelGroup], path: str | Path) -> None:
    payload = [{"label": g.label, "members": g.members} for g in groups]
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def load_groups(path: str | Path) -> list[VowelGroup]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return [VowelGroup(g["label"], list(g["members"])) for g in payload]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"bad groups file {path}: {exc}") from exc
