import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confkws import lexicon
from confkws.errors import DataError
from confkws.lexicon import Stress, VowelInventory, levenshtein, parse_lexicon, vowels_of

from oracles import slow_levenshtein


class TestParse:
    def test_basic_entry(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        seq = lex.phones_of("blue")
        assert [p.symbol for p in seq.phones] == ["B", "L", "UW"]
        assert seq.phones[2].stress is Stress.PRIMARY
        assert seq.phones[0].stress is Stress.NONE

    def test_comments_ignored(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        assert len(lex) == 16  # comment line contributes nothing

    def test_first_pronunciation_wins(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        assert [p.symbol for p in lex.phones_of("read").phones] == ["R", "IY", "D"]

    def test_unknown_phone_reports_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("BLUE  B L UW1\nWEIRD  QX1 L\n", encoding="utf-8")
        with pytest.raises(DataError, match="line 2"):
            parse_lexicon(p)

    def test_empty_file_is_valid(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("", encoding="utf-8")
        assert len(parse_lexicon(p)) == 0

    def test_words_lowercased(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        assert "blue" in lex and "BLUE" not in lex


class TestInventory:
    def test_exactly_20_labels(self):
        inv = VowelInventory()
        assert len(inv.ipa_vowels) == 20
        assert len(lexicon.IPA_MONOPHTHONGS) == 12
        assert len(lexicon.IPA_DIPHTHONGS) == 8

    def test_mapping_total_over_cmu_vowels(self):
        inv = VowelInventory()
        for sym in lexicon.ARPABET_VOWELS:
            for stress in Stress:
                label = inv.ipa_for(lexicon.Phone(sym, stress))
                assert label in inv.ipa_vowels

    def test_ah_splits_on_stress(self):
        inv = VowelInventory()
        assert inv.ipa_for(lexicon.Phone("AH", Stress.NONE)) == "ə"
        assert inv.ipa_for(lexicon.Phone("AH", Stress.PRIMARY)) == "ʌ"
        assert inv.ipa_for(lexicon.Phone("AH", Stress.SECONDARY)) == "ʌ"

    def test_override_file(self, tmp_path):
        p = tmp_path / "map.json"
        p.write_text('{"EH": "æ"}', encoding="utf-8")
        inv = VowelInventory.with_overrides(p)
        assert inv.ipa_for(lexicon.Phone("EH", Stress.PRIMARY)) == "æ"


class TestVowelsOf:
    def test_blue(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        sounds = vowels_of(lex, VowelInventory(), "blue")
        assert [(s.label, s.stress) for s in sounds] == [("u:", Stress.PRIMARY)]

    def test_nine(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        sounds = vowels_of(lex, VowelInventory(), "nine")
        assert [(s.label, s.stress) for s in sounds] == [("aɪ", Stress.PRIMARY)]

    def test_no_vowels(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        assert vowels_of(lex, VowelInventory(), "hm") == []

    def test_missing_word_raises(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        with pytest.raises(KeyError):
            vowels_of(lex, VowelInventory(), "nonexistent")

    def test_length_matches_vowel_count(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        inv = VowelInventory()
        for word in lex.entries:
            assert len(vowels_of(lex, inv, word)) == len(lex.phones_of(word).vowel_phones())


class TestLevenshtein:
    @pytest.mark.parametrize(
        "a,b,expected",
        [("blue", "blue", 0), ("blue", "glue", 1), ("", "abc", 3), ("kitten", "sitting", 3)],
    )
    def test_known_distances(self, a, b, expected):
        assert levenshtein(a, b) == expected

    @given(
        st.text(alphabet="abcde", max_size=8),
        st.text(alphabet="abcde", max_size=8),
    )
    @settings(max_examples=200)
    def test_matches_reference(self, a, b):
        assert levenshtein(a, b) == slow_levenshtein(a, b)

    @given(
        st.text(alphabet="abc", max_size=6),
        st.text(alphabet="abc", max_size=6),
        st.text(alphabet="abc", max_size=6),
    )
    @settings(max_examples=200)
    def test_metric_properties(self, a, b, c):
        assert levenshtein(a, b) == levenshtein(b, a)
        assert (levenshtein(a, b) == 0) == (a == b)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)
