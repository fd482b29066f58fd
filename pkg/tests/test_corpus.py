import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confkws import corpus
from confkws.corpus import (
    EvalPair,
    Manifest,
    UtteranceRecord,
    build_pairs,
    filter_by_duration,
    load_manifest,
    load_pairs,
    make_eval_split,
    save_manifest,
    save_pairs,
)
from confkws.errors import DataError

from conftest import make_manifest


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def record_row(i, keyword="blue", **kw):
    row = {
        "id": f"u{i}",
        "keyword": keyword,
        "speaker": "s1",
        "source": "real",
        "audio_path": None,
        "duration_s": 1.0,
        "prosody": None,
    }
    row.update(kw)
    return row


class TestLoadManifest:
    def test_three_records(self, tmp_path):
        p = tmp_path / "m.jsonl"
        write_jsonl(p, [record_row(i) for i in range(3)])
        m = load_manifest(p)
        assert len(m) == 3
        assert m.records[0].id == "u0"

    def test_duplicate_id_names_line(self, tmp_path):
        p = tmp_path / "m.jsonl"
        rows = [record_row(i) for i in range(5)]
        rows[4]["id"] = "u1"
        write_jsonl(p, rows)
        with pytest.raises(DataError, match="line 5"):
            load_manifest(p)

    def test_malformed_line_reported(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text(json.dumps(record_row(0)) + "\n{nope\n", encoding="utf-8")
        with pytest.raises(DataError, match="line 2"):
            load_manifest(p)

    def test_speech_commands_scale(self, tmp_path):
        # 35 distinct keywords, >11k records
        keywords = [f"kw{i:02d}" for i in range(35)]
        rows = []
        n = 0
        while n < 11_000:
            kw = keywords[n % 35]
            rows.append(record_row(n, keyword=kw))
            n += 1
        p = tmp_path / "sc.jsonl"
        write_jsonl(p, rows)
        m = load_manifest(p)
        assert len(m) == 11_000
        assert len(m.by_keyword) == 35

    def test_keyword_casefolded(self, tmp_path):
        p = tmp_path / "m.jsonl"
        write_jsonl(p, [record_row(0, keyword="Blue")])
        assert load_manifest(p).records[0].keyword == "blue"

    def test_round_trip_bytes(self, tmp_path, small_manifest):
        p1 = tmp_path / "a.jsonl"
        p2 = tmp_path / "b.jsonl"
        save_manifest(small_manifest, p1)
        save_manifest(load_manifest(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestEvalSplit:
    def test_sizes(self):
        m = make_manifest(["blue"], per_keyword=15)
        split = make_eval_split(m, enroll_k=10, seed=1)
        assert len(split.enroll["blue"]) == 10
        assert len(split.test["blue"]) == 5

    def test_boundary_keyword_skipped(self):
        m = make_manifest(["blue", "goat"], per_keyword=10)
        m2 = Manifest(m.records + make_manifest(["nine"], per_keyword=11).records)
        split = make_eval_split(m2, enroll_k=10, seed=0)
        assert split.skipped == ["blue", "goat"]
        assert list(split.enroll) == ["nine"]

    def test_deterministic(self, small_manifest):
        s1 = make_eval_split(small_manifest, enroll_k=10, seed=42)
        s2 = make_eval_split(small_manifest, enroll_k=10, seed=42)
        assert s1.enroll == s2.enroll and s1.test == s2.test

    def test_all_skipped_errors(self):
        m = make_manifest(["blue"], per_keyword=5)
        with pytest.raises(DataError):
            make_eval_split(m, enroll_k=10)

    def test_save_load_round_trip(self, tmp_path, small_manifest):
        split = make_eval_split(small_manifest, enroll_k=10, seed=3)
        p = tmp_path / "split.json"
        split.save(p)
        loaded = corpus.EvalSplit.load(p)
        assert loaded.enroll == split.enroll and loaded.test == split.test

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_disjoint_over_seeds(self, seed):
        m = make_manifest(["a", "b", "c"], per_keyword=14)
        split = make_eval_split(m, enroll_k=5, seed=seed)
        for kw in split.enroll:
            assert not set(split.enroll[kw]) & set(split.test[kw])
            assert len(split.enroll[kw]) == 5


class TestDurationFilter:
    def test_window(self):
        records = [
            corpus.UtteranceRecord(f"u{i}", "blue", "s", "real", d)
            for i, d in enumerate([0.5, 0.95, 1.05, 1.3])
        ]
        m = Manifest(records)
        kept = filter_by_duration(m, 0.9, 1.1)
        assert [r.duration_s for r in kept.records] == [0.95, 1.05]

    def test_identity_with_huge_bounds(self, small_manifest):
        kept = filter_by_duration(small_manifest, 0.0, 1e9)
        assert [r.id for r in kept.records] == [r.id for r in small_manifest.records]

    def test_empty_manifest(self):
        assert len(filter_by_duration(Manifest([]), 0.5, 1.0)) == 0

    def test_bad_bounds(self, small_manifest):
        with pytest.raises(ValueError):
            filter_by_duration(small_manifest, 1.1, 0.9)

    @given(st.lists(st.floats(0.1, 3.0), min_size=0, max_size=30))
    @settings(max_examples=50)
    def test_output_is_subsequence(self, durations):
        records = [
            corpus.UtteranceRecord(f"u{i}", "w", "s", "real", d) for i, d in enumerate(durations)
        ]
        m = Manifest(records)
        kept = filter_by_duration(m, 0.9, 1.1)
        ids = [r.id for r in m.records]
        kept_ids = [r.id for r in kept.records]
        it = iter(ids)
        assert all(i in it for i in kept_ids)  # subsequence check


class TestBuildPairs:
    def test_minimal_corpus(self):
        m = make_manifest(["blue", "goat"], per_keyword=2)
        pairs = build_pairs(m, hard_map={}, n_per_class=1, seed=0)
        labels = sorted(p.label for p in pairs)
        assert labels == ["easy_negative", "positive"]

    def test_hard_map_restricts_keywords(self):
        m = make_manifest(["apartment", "abatement", "water"], per_keyword=4)
        pairs = build_pairs(m, {"apartment": ["abatement"]}, n_per_class=50, seed=1)
        hard = [p for p in pairs if p.label == "hard_negative"]
        assert len(hard) == 50
        for p in hard:
            kws = {m.record(p.a).keyword, m.record(p.b).keyword}
            assert kws == {"apartment", "abatement"}

    def test_exact_counts_large(self):
        m = make_manifest([f"w{i}" for i in range(20)], per_keyword=6)
        pairs = build_pairs(m, {"w0": ["w1"]}, n_per_class=39_000, seed=2)
        by_label = {}
        for p in pairs:
            by_label[p.label] = by_label.get(p.label, 0) + 1
        assert by_label == {
            "positive": 39_000,
            "easy_negative": 39_000,
            "hard_negative": 39_000,
        }

    def test_label_correctness(self):
        m = make_manifest(["blue", "glue", "goat"], per_keyword=3)
        pairs = build_pairs(m, {"blue": ["glue"]}, n_per_class=200, seed=3)
        for p in pairs:
            same = m.record(p.a).keyword == m.record(p.b).keyword
            assert same == (p.label == "positive")
            assert p.a != p.b or p.label != "positive"

    def test_unknown_hard_keyword_errors(self, small_manifest):
        with pytest.raises(DataError):
            build_pairs(small_manifest, {"blue": ["missing"]}, n_per_class=1)

    def test_deterministic(self, small_manifest):
        a = build_pairs(small_manifest, {}, n_per_class=10, seed=9)
        b = build_pairs(small_manifest, {}, n_per_class=10, seed=9)
        assert a == b

    def test_pair_file_round_trip(self, tmp_path, small_manifest):
        pairs = build_pairs(small_manifest, {}, n_per_class=5, seed=0)
        p = tmp_path / "pairs.jsonl"
        save_pairs(pairs, p)
        assert load_pairs(p) == pairs


class TestRecordValidation:
    def test_bad_source(self):
        with pytest.raises(DataError):
            UtteranceRecord("u1", "blue", "s", "synthetic", 1.0)

    def test_bad_duration(self):
        with pytest.raises(DataError):
            UtteranceRecord("u1", "blue", "s", "real", 0.0)

    def test_bad_pair_label(self):
        with pytest.raises(DataError):
            EvalPair("a", "b", "medium_negative")
