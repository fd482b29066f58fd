import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confkws import confusable
from confkws.confusable import (
    FileLlmClient,
    GroupingConfig,
    PromptTemplate,
    VowelGroup,
    confusable_search,
    generate_groups_llm,
    generate_groups_offline,
    parse_word_list,
    prune_groups,
    render_prompt,
    speech_commands_groups,
    validate_groups,
)
from confkws.errors import TransportError
from confkws.lexicon import IPA_VOWELS, VowelInventory, parse_lexicon

TABLE_GROUPS = {
    "ɑ:": {"marvin", "on", "stop"},
    "ɔ:": {"dog", "four", "off"},
    "e": {"yes", "seven", "left", "bed"},
    "æ": {"cat", "backward", "happy"},
    "i:+ɪ": {"sheila", "tree", "three", "visual", "six"},
    "ɜ:+ə": {"forward", "bird", "learn"},
    "aɪ": {"right", "nine", "five"},
    "aʊ": {"wow", "down", "house"},
    "oʊ+u:": {"go", "no", "follow", "zero", "two"},
}


class TestPrompt:
    def test_u_vowel(self):
        text = render_prompt(PromptTemplate(), "u:")
        assert "100 simple but distinguishable words" in text
        assert "[u:]" in text

    def test_diphthong(self):
        text = render_prompt(PromptTemplate(), "aɪ")
        assert "[aɪ]" in text

    def test_count_substitution(self):
        text = render_prompt(PromptTemplate(words_per_group=50), "u:")
        assert "50 simple but distinguishable words" in text

    def test_unknown_vowel(self):
        with pytest.raises(ValueError):
            render_prompt(PromptTemplate(), "zz")


class StubClient:
    def __init__(self, reply="moon, blue, tooth"):
        self.reply = reply
        self.prompts = []

    def generate(self, prompt):
        self.prompts.append(prompt)
        return self.reply


class TestLlmGroups:
    def test_stub_passthrough(self):
        groups = generate_groups_llm(StubClient())
        u_group = next(g for g in groups if g.label == "u:")
        assert set(u_group.members) == {"moon", "blue", "tooth"}

    def test_dedup(self):
        import itertools, string

        words = ["".join(c) for c in itertools.product(string.ascii_lowercase, "aeiou")][:97]
        groups = generate_groups_llm(StubClient(", ".join(words + words[:3])))
        assert all(len(g.members) == 97 for g in groups)

    def test_twenty_groups_in_inventory_order(self):
        groups = generate_groups_llm(StubClient())
        assert [g.label for g in groups] == list(IPA_VOWELS)
        assert len(groups) == 20

    def test_unparseable_yields_empty_group(self):
        groups = generate_groups_llm(StubClient("12345 !!! 9-9"))
        assert all(g.members == [] for g in groups)

    def test_file_stub_client(self, tmp_path):
        (tmp_path / "u:.txt").write_text("moon\nblue\n", encoding="utf-8")
        client = FileLlmClient(tmp_path)
        assert parse_word_list(client.generate(render_prompt(PromptTemplate(), "u:"))) == [
            "moon",
            "blue",
        ]
        with pytest.raises(TransportError):
            client.generate(render_prompt(PromptTemplate(), "aɪ"))


class TestParseWordList:
    def test_mixed_separators(self):
        assert parse_word_list("Moon, blue\ntooth,  moon") == ["moon", "blue", "tooth"]

    def test_non_alpha_dropped(self):
        assert parse_word_list("1. moon\nblue!\nglue") == ["glue"]


class TestOfflineGroups:
    def test_stressed_vowel_no_merges(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        cfg = GroupingConfig(merges=(), assignment="stressed_vowel")
        groups = generate_groups_offline(lex, VowelInventory(), cfg, max_words=100)
        by_label = {g.label: set(g.members) for g in groups}
        assert {"blue", "glue"} <= by_label["u:"]
        assert by_label["oʊ"] == {"goat"}

    def test_merge_u_and_ou(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        cfg = GroupingConfig(merges=(frozenset({"oʊ", "u:"}),), assignment="stressed_vowel")
        groups = generate_groups_offline(lex, VowelInventory(), cfg, max_words=100)
        by_label = {g.label: set(g.members) for g in groups}
        assert {"blue", "glue", "goat"} <= by_label["oʊ+u:"]

    def test_max_words_truncates(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        groups = generate_groups_offline(lex, VowelInventory(), GroupingConfig(merges=()), max_words=1)
        assert all(len(g.members) <= 1 for g in groups)

    def test_short_words_preferred(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        cfg = GroupingConfig(merges=(), assignment="stressed_vowel")
        groups = generate_groups_offline(lex, VowelInventory(), cfg, max_words=2)
        u_group = next(g for g in groups if g.label == "u:")
        # pool is blue, glue, moon, chew, tooth -> the two shortest (4-letter,
        # lexicographic) are blue and chew
        assert set(u_group.members) == {"blue", "chew"}

    def test_any_vowel_multi_assignment(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        cfg = GroupingConfig(merges=(), assignment="any_vowel")
        groups = generate_groups_offline(lex, VowelInventory(), cfg, max_words=100)
        by_label = {g.label: set(g.members) for g in groups}
        # 'about' = AH0 B AW1 T: schwa + aʊ, lands in both groups
        assert "about" in by_label["ə"]
        assert "about" in by_label["aʊ"]

    def test_members_contain_group_vowel(self, tiny_dict_path):
        lex = parse_lexicon(tiny_dict_path)
        inv = VowelInventory()
        groups = generate_groups_offline(lex, inv, GroupingConfig(), max_words=100)
        assert validate_groups(groups, lex, inv) == {} or all(
            "vowel_missing" not in v for v in validate_groups(groups, lex, inv).values()
        )


class TestPrune:
    def test_drops_small(self):
        groups = [
            VowelGroup("a", ["x", "y", "z", "w", "v"]),
            VowelGroup("b", ["x", "y"]),
            VowelGroup("c", ["x", "y", "z"]),
        ]
        assert [len(g.members) for g in prune_groups(groups, 3)] == [5, 3]

    def test_min_one_is_identity(self):
        groups = [VowelGroup("a", ["x"]), VowelGroup("b", [])]
        assert [g.label for g in prune_groups(groups, 1)] == ["a"]
        assert prune_groups(groups, 0) == groups

    def test_all_below(self):
        assert prune_groups([VowelGroup("a", ["x"])], 3) == []

    @given(st.lists(st.integers(0, 6), max_size=10), st.integers(1, 4))
    @settings(max_examples=50)
    def test_idempotent(self, sizes, min_size):
        groups = [VowelGroup(f"g{i}", [f"w{i}_{j}" for j in range(n)]) for i, n in enumerate(sizes)]
        once = prune_groups(groups, min_size)
        assert prune_groups(once, min_size) == once


class TestSpeechCommandsGroups:
    def test_exact_table(self):
        groups = speech_commands_groups()
        assert len(groups) == 9
        assert {g.label: set(g.members) for g in groups} == TABLE_GROUPS

    def test_total_keywords(self):
        groups = speech_commands_groups()
        members = [w for g in groups for w in g.members]
        assert len(members) == 32
        assert len(set(members)) == 32

    def test_specific_rows(self):
        by_label = {g.label: set(g.members) for g in speech_commands_groups()}
        assert by_label["ɑ:"] == {"marvin", "on", "stop"}
        assert by_label["aʊ"] == {"wow", "down", "house"}


class TestConfusableSearch:
    def test_blue_finds_glue(self):
        assert confusable_search(["blue", "glue", "goat"], "blue", 1) == ["glue"]

    def test_zero_distance_excludes_query(self):
        assert confusable_search(["blue", "glue"], "blue", 0) == []

    def test_query_absent_still_searches(self):
        assert confusable_search(["blue", "glue"], "flue", 1) == ["blue", "glue"]
