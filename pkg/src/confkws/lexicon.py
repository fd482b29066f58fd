"""Pronunciation lexicon: ARPAbet dictionary parsing, the 20-label IPA vowel
inventory, per-word vowel extraction, and plain Levenshtein edit distance."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

logger = logging.getLogger(__name__)

# The 39-phone ARPAbet set used by CMU-style dictionaries.
ARPABET_VOWELS = frozenset(
    "AA AE AH AO AW AY EH ER EY IH IY OW OY UH UW".split()
)
ARPABET_CONSONANTS = frozenset(
    "B CH D DH F G HH JH K L M N NG P R S SH T TH V W Y Z ZH".split()
)
ARPABET_PHONES = ARPABET_VOWELS | ARPABET_CONSONANTS

# 12 monophthongs + 8 diphthongs; this is the fixed English vowel inventory
# the grouping pipeline runs over.
IPA_MONOPHTHONGS = ("i:", "ɪ", "ʊ", "u:", "e", "ə", "ɜ:", "ɔ:", "æ", "ʌ", "ɑ:", "ɒ")
IPA_DIPHTHONGS = ("eɪ", "aɪ", "ɔɪ", "aʊ", "oʊ", "ɪə", "eə", "ʊə")
IPA_VOWELS = IPA_MONOPHTHONGS + IPA_DIPHTHONGS

# ARPAbet -> IPA vowel correspondence. "AH0" keys the unstressed variant;
# lookup tries symbol+stress-digit first, then the bare symbol, so a JSON
# override file can refine either level.
DEFAULT_ARPABET_TO_IPA = {
    "AA": "ɑ:",
    "AO": "ɔ:",
    "EH": "e",
    "AE": "æ",
    "IY": "i:",
    "IH": "ɪ",
    "ER": "ɜ:",
    "AH0": "ə",
    "AH": "ʌ",
    "UH": "ʊ",
    "UW": "u:",
    "EY": "eɪ",
    "AY": "aɪ",
    "OY": "ɔɪ",
    "AW": "aʊ",
    "OW": "oʊ",
}


class Stress(enum.Enum):
    NONE = 0
    PRIMARY = 1
    SECONDARY = 2


@dataclass(frozen=True)
class Phone:
    """One phoneme: bare ARPAbet symbol plus its stress marker (vowels only)."""

    symbol: str
    stress: Stress = Stress.NONE

    @property
    def is_vowel(self) -> bool:
        return self.symbol in ARPABET_VOWELS


@dataclass(frozen=True)
class PhonemeSeq:
    phones: tuple[Phone, ...]

    def vowel_phones(self) -> list[Phone]:
        return [p for p in self.phones if p.is_vowel]


@dataclass(frozen=True)
class VowelSound:
    """An IPA vowel label carrying the stress it had in the source word."""

    label: str
    stress: Stress


@dataclass
class VowelInventory:
    """The 20 IPA vowel labels plus the ARPAbet correspondence table."""

    ipa_vowels: tuple[str, ...] = IPA_VOWELS
    arpabet_to_ipa: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_ARPABET_TO_IPA)
    )

    def __post_init__(self) -> None:
        if len(self.ipa_vowels) != 20:
            raise ValueError(
                f"vowel inventory must have exactly 20 labels, got {len(self.ipa_vowels)}"
            )
        for sym, ipa in self.arpabet_to_ipa.items():
            if ipa not in self.ipa_vowels:
                raise ValueError(f"mapping target {ipa!r} (from {sym!r}) not in inventory")

    def ipa_for(self, phone: Phone) -> str:
        """Map a vowel phone to its IPA label, honoring stress-specific keys."""
        keyed = f"{phone.symbol}{phone.stress.value}"
        if keyed in self.arpabet_to_ipa:
            return self.arpabet_to_ipa[keyed]
        if phone.symbol in self.arpabet_to_ipa:
            return self.arpabet_to_ipa[phone.symbol]
        raise KeyError(f"no IPA mapping for vowel symbol {phone.symbol!r}")

    @classmethod
    def with_overrides(cls, path: str | Path) -> "VowelInventory":
        """Inventory whose mapping table is patched from a JSON file
        of the form {arpabet_symbol: ipa_label}."""
        table = dict(DEFAULT_ARPABET_TO_IPA)
        with open(path, encoding="utf-8") as fh:
            table.update(json.load(fh))
        return cls(arpabet_to_ipa=table)


@dataclass
class Lexicon:
    """Word -> pronunciation map; first pronunciation wins, words lowercase."""

    entries: dict[str, PhonemeSeq]
    inventory: frozenset[str] = ARPABET_PHONES

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def phones_of(self, word: str) -> PhonemeSeq:
        try:
            return self.entries[word]
        except KeyError:
            raise KeyError(f"word not in lexicon: {word!r}") from None


def _parse_phone(token: str, line_no: int) -> Phone:
    stress = Stress.NONE
    symbol = token
    if token and token[-1].isdigit():
        symbol, digit = token[:-1], token[-1]
        if digit == "1":
            stress = Stress.PRIMARY
        elif digit == "2":
            stress = Stress.SECONDARY
        elif digit != "0":
            raise DataError(f"line {line_no}: bad stress digit in {token!r}")
    if symbol not in ARPABET_PHONES:
        raise DataError(f"line {line_no}: unknown phone symbol {token!r}")
    if stress is not Stress.NONE and symbol not in ARPABET_VOWELS:
        raise DataError(f"line {line_no}: stress marker on consonant {token!r}")
    return Phone(symbol, stress)


def parse_lexicon(path: str | Path) -> Lexicon:
    """Parse a CMU-convention dictionary file.

    Lines are ``WORD  PH1 PH2 ...``; alternate pronunciations appear as
    ``WORD(2)`` and are dropped (first pronunciation wins); lines starting
    with ``;;;`` are comments. Raises :class:`DataError` with the offending
    line number on unknown phone symbols.
    """
    entries: dict[str, PhonemeSeq] = {}
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith(";;;"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise DataError(f"line {line_no}: expected 'WORD PHONES...', got {line!r}")
            word = parts[0].lower()
            if "(" in word:  # variant entry like WORD(2)
                word = word[: word.index("(")]
            phones = tuple(_parse_phone(tok, line_no) for tok in parts[1:])
            entries.setdefault(word, PhonemeSeq(phones))
    logger.debug("parsed lexicon %s: %d entries", path, len(entries))
    return Lexicon(entries)


def vowels_of(lex: Lexicon, inv: VowelInventory, word: str) -> list[VowelSound]:
    """Ordered IPA vowels of ``word`` with their stress markers.

    Raises KeyError if the word is absent; callers decide the fallback.
    """
    seq = lex.phones_of(word)
    return [VowelSound(inv.ipa_for(p), p.stress) for p in seq.vowel_phones()]


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    n, m = len(a), len(b)
    if n > m:
        a, b, n, m = b, a, m, n
    if n == 0:
        return m
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] + [0] * n
        bc = b[i - 1]
        for j in range(1, n + 1):
            cost = 0 if a[j - 1] == bc else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[n]
