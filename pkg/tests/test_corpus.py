import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genlink.codec import RenderMode, tokenize
from genlink.corpus import (
    DEFAULT_MAX_INPUT_TOKENS,
    MentionInstance,
    RawHyperlink,
    align_hyperlinks,
    build_input,
    read_hyperlinks,
    read_mentions,
    read_redirects,
    training_pairs,
    write_mentions,
)
from genlink.errors import MalformedLine, MentionTooLong, MissingGold
from genlink.kb import EntityRecord, KnowledgeBase
from genlink.synthetic import LANGUAGES

from helpers import small_kb


def test_read_mentions():
    lines = ["en\tleft\tRome\tright\tQ1\n", "\n", "it\t\tRoma\t\t\n"]
    got = list(read_mentions(lines))
    assert got == [MentionInstance("en", "left", "Rome", "right", "Q1"), MentionInstance("it", "", "Roma", "", None)]


@pytest.mark.parametrize(
    "line",
    ["en\tleft\tRome\tright\n", "EN\tl\tm\tr\tQ1\n", "en\tl\t\tr\tQ1\n"],
)
def test_read_mentions_errors(line):
    with pytest.raises(MalformedLine) as info:
        list(read_mentions(["en\ta\tb\tc\tQ1\n", line]))
    assert info.value.line == 2


def test_write_read_roundtrip():
    items = [MentionInstance("en", "a b", "Ré", "c", "Q1"), MentionInstance("de", "", "x", "", None)]
    buf = io.StringIO()
    write_mentions(items, buf)
    assert list(read_mentions(io.StringIO(buf.getvalue()))) == items
    with pytest.raises(ValueError):
        write_mentions([MentionInstance("en", "a\tb", "x", "", None)], io.StringIO())


def test_hyperlinks_and_redirects_io():
    links = list(read_hyperlinks(["en\tl\tm\tr\tRome\n"]))
    assert links == [RawHyperlink("en", "l", "m", "r", "Rome")]
    with pytest.raises(MalformedLine):
        list(read_hyperlinks(["en\tl\tm\tr\t\n"]))
    assert read_redirects(["en\tUrbs\tRome\n"]) == {("en", "Urbs"): "Rome"}
    with pytest.raises(MalformedLine):
        read_redirects(["en\tUrbs\n"])


# -- alignment ------------------------------------------------------------------


def link(lang, title):
    return RawHyperlink(lang, "l", "m", "r", title)


def test_alignment_strategies():
    kb = small_kb()
    redirects = {("en", "Urbs"): "Rome"}
    links = [
        link("en", "Rome"),  # direct
        link("en", "Urbs"),  # via the redirect map
        link("fr", "Roma"),  # label in another language
        link("it", "Paris"),  # shared by Q2 and Q4: ambiguous
        link("en", "Atlantis"),  # unresolved
        link("en", "Paris"),  # primary title wins over Q4's redirect
    ]
    out, stats = align_hyperlinks(links, kb, redirects)
    assert [m.gold for m in out] == ["Q1", "Q1", "Q1", "Q2"]
    assert stats.as_dict() == dict(direct=2, redirect=1, label=1, ambiguous=1, unresolved=1, aligned=4, dropped=2)


def test_alignment_accumulates_stats():
    kb = small_kb()
    _, stats = align_hyperlinks([link("en", "Rome")], kb, {})
    align_hyperlinks([link("en", "Rome")], kb, {}, stats)
    assert stats.direct == 2


# -- model input ------------------------------------------------------------------


def test_build_input_markup():
    x = build_input(MentionInstance("en", "aa", "bb", "cc"))
    assert x.context_tokens == tokenize("aa [START] bb [END] cc")
    assert x.mention_tokens == tokenize("bb")
    bare = build_input(MentionInstance("en", "", "bb", ""))
    assert bare.context_tokens == tokenize("[START] bb [END]")


def test_build_input_trims_both_sides():
    x = build_input(MentionInstance("en", "a" * 200, "m", "b" * 200))
    assert len(x.context_tokens) == DEFAULT_MAX_INPUT_TOKENS
    text = "".join(chr(t - 3) for t in x.context_tokens)
    left, right = text.split(" [START] m [END] ")
    assert set(left) == {"a"} and set(right) == {"b"}
    assert abs(len(left) - len(right)) <= 1


def test_build_input_short_side_gives_budget_to_long_side():
    x = build_input(MentionInstance("en", "a", "m", "b" * 500))
    text = "".join(chr(t - 3) for t in x.context_tokens)
    assert text.startswith("a [START] m [END] b") and len(x.context_tokens) == 128


def test_mention_too_long():
    with pytest.raises(MentionTooLong):
        build_input(MentionInstance("en", "", "x" * 115, ""))
    assert len(build_input(MentionInstance("en", "", "x" * 114, "")).context_tokens) == 128


@settings(max_examples=200)
@given(st.text("ab ", max_size=300), st.text("xy", min_size=1, max_size=20), st.text("cd ", max_size=300), st.integers(40, 200))
def test_build_input_budget_and_span(left, mention, right, budget):
    x = build_input(MentionInstance("en", left, mention, right), budget)
    assert len(x.context_tokens) <= budget
    core = tokenize(f"[START] {mention} [END]")
    i = next(i for i in range(len(x.context_tokens)) if x.context_tokens[i : i + len(core)] == core)
    lhs, rhs = x.context_tokens[:i], x.context_tokens[i + len(core) :]
    full_l = tokenize(left + " ") if left else ()
    full_r = tokenize(" " + right) if right else ()
    assert full_l[len(full_l) - len(lhs) :] == lhs and full_r[: len(rhs)] == rhs
    if len(full_l) + len(core) + len(full_r) > budget:
        assert len(x.context_tokens) == budget
        # a side is only shortened while it is the longer one
        if len(lhs) < len(full_l) and len(rhs) < len(full_r):
            assert abs(len(lhs) - len(rhs)) <= 1


# -- training pairs ----------------------------------------------------------------


def _multilingual_kb():
    return KnowledgeBase(
        [
            EntityRecord.create("Q1", {l: f"N{l}" for l in LANGUAGES} | {"pt": "Npt"}),
            EntityRecord.create("Q2", {"en": "A", "de": "B", "fr": "C"}),
        ]
    )


def test_training_pairs_counts():
    kb = _multilingual_kb()
    assert len(list(training_pairs([MentionInstance("en", "", "x", "", "Q1")], kb))) == 1
    assert len(list(training_pairs([MentionInstance("ru", "", "x", "", "Q1")], kb))) == 5
    three = list(training_pairs([MentionInstance("ru", "", "x", "", "Q2")], kb))
    assert sorted(t for _, t in three) == sorted(tokenize(s) for s in ["A >> en", "B >> de", "C >> fr"])


def test_training_pairs_modes():
    kb = small_kb()
    inst = [MentionInstance("it", "", "Roma", "", "Q1")]
    assert [t for _, t in training_pairs(inst, kb)] == [tokenize("Roma >> it")]
    assert [t for _, t in training_pairs(inst, kb, RenderMode.LANG_FIRST)] == [tokenize("it >> Roma")]
    assert [t for _, t in training_pairs(inst, kb, RenderMode.CANONICAL)] == [tokenize("Rome")]


def test_training_pairs_deterministic():
    kb = _multilingual_kb()
    inst = [MentionInstance("ru", "", "x", "", "Q1")] * 20
    first = list(training_pairs(inst, kb, rng_seed=3))
    assert first == list(training_pairs(inst, kb, rng_seed=3))
    assert len({tuple(t for _, t in first[i : i + 5]) for i in range(0, 100, 5)}) > 1


def test_training_pairs_need_gold():
    with pytest.raises(MissingGold):
        list(training_pairs([MentionInstance("en", "", "x", "")], small_kb()))
