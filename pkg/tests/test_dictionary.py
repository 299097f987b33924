import random

import pytest
from hypothesis import given, strategies as st

import brute
from dictmt.corpus import Corpus
from dictmt.dictionary import (
    DictEntry,
    EntryStats,
    FilterThresholds,
    compute_all_stats,
    compute_entry_stats,
    filter_entries,
    load_dictionary,
    make_entries,
    read_stats,
    write_dictionary,
    write_stats,
)
from dictmt.errors import DictionaryError
from dictmt.synthetic import random_fixture


def test_load_jsonl_and_tsv(tmp_path):
    (tmp_path / "d.jsonl").write_text('{"src": "giraffe", "tgt": "Giraffe"}\n# note\n\n', encoding="utf-8")
    (entry,) = load_dictionary(tmp_path / "d.jsonl")
    assert entry == DictEntry(0, ("giraffe",), ("Giraffe",))
    (tmp_path / "d.tsv").write_text("giraffe\tGiraffe\ngiraffe\tGiraffe\nice cream\tEis\n", encoding="utf-8")
    entries = load_dictionary(tmp_path / "d.tsv")
    assert [e.src_lemma_phrase for e in entries] == [("giraffe",), ("ice", "cream")]
    assert [e.id for e in entries] == [0, 1]


def test_malformed_and_empty_records(tmp_path):
    (tmp_path / "a").write_text('{"src": "a"}\n', encoding="utf-8")
    with pytest.raises(DictionaryError, match=":1:"):
        load_dictionary(tmp_path / "a")
    (tmp_path / "b").write_text("x\ty\ngiraffe\t \n", encoding="utf-8")
    with pytest.raises(DictionaryError, match=":2: empty"):
        load_dictionary(tmp_path / "b")
    with pytest.raises(DictionaryError):
        DictEntry(0, ("a",), ())


def test_write_load_roundtrip_keeps_ids(tmp_path):
    entries = [DictEntry(5, ("a",), ("b",)), DictEntry(2, ("c", "d"), ("e",))]
    write_dictionary(tmp_path / "x.jsonl", entries)
    assert load_dictionary(tmp_path / "x.jsonl") == entries


def test_make_entries_dedups():
    assert len(make_entries([("a", "b"), ("a", "b"), ("a", "c")])) == 2


def corpus_of(rows):
    """rows of (src_lemmas, tgt_tokens, tgt_lemmas)"""
    return Corpus.from_pairs([(s, tt, s, tl) for s, tt, tl in rows])


GIRAFFE = DictEntry(0, ("giraffe",), ("Giraffe",))


def test_stats_absent_and_single():
    c = corpus_of([(["giraffe"], ["Giraffe"], ["Giraffe"])])
    assert compute_entry_stats(GIRAFFE, c) == EntryStats(1, 1, 0, 0)
    assert compute_entry_stats(DictEntry(1, ("zebra",), ("Zebra",)), c) == EntryStats()


def test_stats_five_pair_example():
    rows = [
        (["the", "giraffe"], ["die", "Giraffe"], ["die", "Giraffe"]),
        (["giraffe", "s"], ["Giraffen"], ["Giraffe"]),
        (["a", "giraffe"], ["eine", "Giraffe"], ["ein", "Giraffe"]),
        (["giraffe"], ["Tier"], ["Tier"]),
        (["animal"], ["Giraffen"], ["Giraffe"]),
    ]
    c = corpus_of(rows)
    expected = brute.entry_stats(("giraffe",), ("Giraffe",), rows)
    assert expected == (3, 2, 1, 1)
    assert compute_entry_stats(GIRAFFE, c) == EntryStats(*expected)
    assert compute_all_stats([GIRAFFE], c)[0] == EntryStats(*expected)


@pytest.mark.parametrize("stats, ok", [
    (EntryStats(50, 2, 0, 0), True),
    (EntryStats(2, 2, 0, 0), False),
    (EntryStats(10, 1, 0, 0), False),
    (EntryStats(10, 3, 10, 0), False),
    (EntryStats(10, 3, 0, 10), False),
    (EntryStats(81, 3, 0, 0), False),
    (EntryStats(3, 2, 9, 9), True),
    (EntryStats(80, 2, 0, 0), True),
])
def test_default_thresholds(stats, ok):
    assert FilterThresholds().accepts(stats) is ok


def test_accepts_frequent_has_no_upper_bound():
    t = FilterThresholds()
    assert t.accepts_frequent(EntryStats(500, 3, 0, 0))
    assert not t.accepts_frequent(EntryStats(500, 3, 12, 0))


def test_threshold_validation():
    with pytest.raises(ValueError):
        FilterThresholds(min_occ=5, max_occ=4)
    with pytest.raises(ValueError):
        FilterThresholds(min_occ=-1)


def test_filter_preserves_order():
    entries = make_entries([("a", "x"), ("b", "y"), ("c", "z")])
    stats = {0: EntryStats(5, 2, 0, 0), 1: EntryStats(1, 1, 0, 0), 2: EntryStats(5, 3, 0, 0)}
    assert [e.id for e in filter_entries(entries, stats)] == [0, 2]


def test_stats_file_roundtrip(tmp_path):
    entries = make_entries([("a b", "x"), ("c", "y")])
    stats = {0: EntryStats(4, 2, 1, 0), 1: EntryStats(0, 0, 0, 3)}
    write_stats(tmp_path / "s.jsonl", entries, stats)
    assert read_stats(tmp_path / "s.jsonl") == (entries, stats)


@pytest.mark.parametrize("seed", range(15))
def test_all_stats_against_bruteforce(seed):
    syn = random_fixture(seed, max_sentences=120)
    fast = compute_all_stats(syn.entries, syn.corpus)
    rows = [(p.src_lemmas, p.tgt_tokens, p.tgt_lemmas) for p in syn.corpus]
    for e in syn.entries:
        expected = EntryStats(*brute.entry_stats(e.src_lemma_phrase, e.tgt_lemma_phrase, rows))
        assert fast[e.id] == expected
        assert compute_entry_stats(e, syn.corpus) == expected


@given(st.integers(0, 100), st.integers(0, 5), st.integers(0, 15), st.integers(0, 15))
def test_accepts_matches_bruteforce(occ, var, so, to):
    assert FilterThresholds().accepts(EntryStats(occ, var, so, to)) == brute.accepts((occ, var, so, to))


def test_random_thresholds_against_bruteforce():
    rng = random.Random(0)
    for _ in range(500):
        lo = rng.randint(0, 10)
        t = FilterThresholds(lo, rng.randint(lo, 30), rng.randint(0, 4), rng.randint(0, 5))
        s = EntryStats(rng.randint(0, 40), rng.randint(0, 5), rng.randint(0, 6), rng.randint(0, 6))
        assert t.accepts(s) == brute.accepts(
            (s.occurrences, s.tgt_variant_count, s.src_only_count, s.tgt_only_count),
            t.min_occ, t.max_occ, t.min_tgt_variants, t.max_conflicts,
        )
