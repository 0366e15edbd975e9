import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genlink.alias import FROM_LABEL, FROM_REDIRECT, FROM_TITLE, FROM_TRAINING, AliasTable, build_alias_table
from genlink.errors import MalformedLine, UnknownEntity

from helpers import small_kb


def test_training_counts_and_titles():
    table = build_alias_table([("Paris", "Q4")] * 3 + [("Paris", "Q2")], small_kb())
    assert table.candidates("Paris") == [("Q4", 3), ("Q2", 1)]
    assert table.candidate_count("Paris") == 2
    assert table.candidates("Paris", top_k=1) == [("Q4", 3)]


def test_titles_and_redirects_injected_with_zero_count():
    table = build_alias_table([], small_kb())
    assert table.candidates("Eternal City") == [("Q1", 0)]
    assert table.candidates("Paris") == [("Q2", 0), ("Q4", 0)]
    assert table.candidates("Rom") == [("Q3", 0)]
    assert table.sources[("Paris", "Q4")] == {FROM_REDIRECT}
    assert table.sources[("Paris", "Q2")] == {FROM_TITLE}


def test_unknown_mention_and_entity():
    table = build_alias_table([], small_kb())
    assert table.candidates("nowhere") == []
    assert "nowhere" not in table and "Rome" in table
    with pytest.raises(UnknownEntity):
        build_alias_table([("x", "Q404")], small_kb())
    with pytest.raises(UnknownEntity):
        build_alias_table([], small_kb(), extra_labels=[("x", "Q404")])
    with pytest.raises(ValueError):
        table.candidates("Paris", top_k=0)


def test_training_and_title_deduplicate():
    table = build_alias_table([("Rome", "Q1"), ("Rome", "Q1")], small_kb(), extra_labels=[("Rome", "Q1")])
    assert table.candidates("Rome") == [("Q1", 2)]
    assert table.sources[("Rome", "Q1")] == {FROM_TRAINING, FROM_TITLE, FROM_LABEL}


def test_nfc_lookup():
    table = build_alias_table([("Café", "Q1")], small_kb())
    assert table.candidates("Café") == [("Q1", 1)]


def test_duplicate_candidate_rejected():
    with pytest.raises(ValueError):
        AliasTable({"x": [("Q1", 1), ("Q1", 2)]})


def test_jsonl_roundtrip():
    table = build_alias_table([("Paris", "Q4")] * 2, small_kb(), extra_labels=[("Urbs", "Q1")])
    buf = io.StringIO()
    table.write_jsonl(buf)
    clone = AliasTable.read_jsonl(io.StringIO(buf.getvalue()))
    assert clone == table
    assert clone.sources == table.sources
    assert list(clone.mentions()) == sorted(table.mentions())


@pytest.mark.parametrize(
    "lines",
    [
        ["{not json"],
        ['{"candidates": []}'],
        ['{"mention": "a", "candidates": [["Q1"]]}'],
        ['{"mention": "a", "candidates": []}', '{"mention": "a", "candidates": []}'],
    ],
)
def test_jsonl_errors(lines):
    with pytest.raises(MalformedLine):
        AliasTable.read_jsonl(lines)


pairs = st.lists(st.tuples(st.sampled_from(["Paris", "Rome", "x", "y"]), st.sampled_from(["Q1", "Q2", "Q3", "Q4"])), max_size=30)


@settings(max_examples=100)
@given(pairs, st.randoms(use_true_random=False))
def test_order_independent_and_sorted(items, rnd):
    kb = small_kb()
    table = build_alias_table(items, kb)
    shuffled = list(items)
    rnd.shuffle(shuffled)
    assert build_alias_table(shuffled, kb) == table
    for m in table.mentions():
        cands = table.candidates(m)
        assert cands == sorted(cands, key=lambda ec: (-ec[1], ec[0]))
        for e, c in cands:
            assert c == sum(1 for mm, ee in items if mm == m and ee == e)
