import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genlink.errors import (
    DuplicateEntity,
    DuplicateTitle,
    EntityHasNoNames,
    MalformedRecord,
    SeparatorInName,
    UnknownEntity,
)
from genlink.kb import (
    WIKIMEDIA_FILTER_CLASSES,
    EntityRecord,
    KnowledgeBase,
    ingest_kb,
    kb_from_json,
    kb_to_json,
    read_filter_list,
    read_kb_jsonl,
)

from helpers import small_kb


def rec(eid, names, redirects=None, counts=None):
    return EntityRecord.create(eid, names, redirects, counts)


# -- records ----------------------------------------------------------------------


def test_record_normalizes_to_nfc():
    r = rec("Q1", {"fr": "Café"}, {"fr": ["Café Noir"]})
    assert r.names["fr"] == "Café"


def test_record_drops_redirect_equal_to_title():
    r = rec("Q1", {"en": "X"}, {"en": ["X", "Y"]})
    assert r.redirects["en"] == frozenset({"Y"})


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(id="", names={"en": "X"}),
        dict(id="Q1", names={"en": ""}),
        dict(id="Q1", names={"EN": "X"}),
        dict(id="Q1", names={"en": "X"}, redirects={"en": "Y"}),
        dict(id="Q1", names={"en": "X"}, mention_counts={"en": -1}),
        dict(id="Q1", names={"en": "X"}, mention_counts={"en": True}),
    ],
)
def test_record_validation(kwargs):
    with pytest.raises(ValueError):
        EntityRecord.create(**kwargs)


def test_record_rejects_separator():
    with pytest.raises(SeparatorInName):
        rec("Q1", {"en": "a >> b"})


# -- ingest -----------------------------------------------------------------------


def test_ingest_drops_nameless_records():
    kb = ingest_kb([rec("Q1", {}), rec("Q2", {"en": "Y"})])
    assert list(kb) == ["Q2"]


def test_ingest_drops_excluded_class_members():
    kb = ingest_kb(
        [rec("Q1", {"en": "Category:X"}), rec("Q2", {"en": "Y"})],
        WIKIMEDIA_FILTER_CLASSES,
        {"Q1": {"Q4167836"}},
    )
    assert "Q4167836" in WIKIMEDIA_FILTER_CLASSES
    assert list(kb) == ["Q2"]


def test_ingest_counts():
    kb = ingest_kb([rec("Q1", {"en": "A", "de": "A"}), rec("Q2", {"en": "B"}), rec("Q3", {"fr": "C"})])
    assert len(kb.entities) == 3
    assert set(kb.name_index) == {("A", "en"), ("A", "de"), ("B", "en"), ("C", "fr")}


def test_ingest_duplicate_entity():
    with pytest.raises(DuplicateEntity):
        ingest_kb([rec("Q1", {"en": "A"}), rec("Q1", {"en": "B"})])
    # a duplicate is an error even when one copy would be filtered out
    with pytest.raises(DuplicateEntity):
        ingest_kb([rec("Q1", {}), rec("Q1", {"en": "B"})])


def test_duplicate_primary_title_rejected():
    with pytest.raises(DuplicateTitle):
        KnowledgeBase([rec("Q1", {"en": "A"}), rec("Q2", {"en": "A"})])
    # a redirect may collide with another entity's title
    kb = KnowledgeBase([rec("Q1", {"en": "A"}), rec("Q2", {"en": "B"}, {"en": ["A"]})])
    assert kb.resolve("A", "en") == {"Q1", "Q2"}


# -- canonical names ----------------------------------------------------------------


def test_canonical_by_count():
    kb = KnowledgeBase([rec("Q1", {"en": "X", "fr": "Y"}, None, {"en": 5, "fr": 3})])
    assert kb.canonical_name("Q1") == ("en", "X")


def test_canonical_tie_uses_global_counts():
    kb = KnowledgeBase(
        [
            rec("Q1", {"en": "X", "fr": "Y"}, None, {"en": 3, "fr": 3}),
            rec("Q2", {"en": "Z"}, None, {"en": 97, "fr": 47}),
        ]
    )
    assert kb.global_lang_counts == {"en": 100, "fr": 50}
    assert kb.canonical_name("Q1") == ("en", "X")


def test_canonical_final_tie_is_lexicographic():
    kb = KnowledgeBase(
        [rec("Q1", {"de": "A", "it": "B"}), rec("Q2", {"en": "Z"}, None, {"de": 7, "it": 7})]
    )
    assert kb.canonical_name("Q1") == ("de", "A")


def test_canonical_ignores_counts_without_names():
    kb = KnowledgeBase([rec("Q1", {"it": "B"}, None, {"en": 50, "it": 1})])
    assert kb.canonical_name("Q1") == ("it", "B")


def test_canonical_errors():
    kb = KnowledgeBase([rec("Q1", {})])
    with pytest.raises(EntityHasNoNames):
        kb.canonical_name("Q1")
    with pytest.raises(UnknownEntity):
        kb.canonical_name("Q404")


# -- resolve / identifiers ----------------------------------------------------------


def test_resolve():
    kb = KnowledgeBase([rec("Q1", {"en": "X", "it": "Rome"}), rec("Q2", {"de": "X"})])
    assert kb.resolve("Rome", "it") == {"Q1"}
    assert kb.resolve("X") == {"Q1", "Q2"}
    assert kb.resolve("missing", "en") == frozenset()
    assert kb.resolve("Café") == frozenset()


def test_resolve_title_excludes_redirects():
    kb = small_kb()
    assert kb.resolve("Paris", "en") == {"Q2", "Q4"}
    assert kb.resolve_title("Paris", "en") == {"Q2"}


def test_identifiers():
    kb = KnowledgeBase([rec("Q1", {"en": "X"}, {"en": ["X2"]}), rec("Q2", {"en": "A", "de": "B", "fr": "C"})])
    assert kb.identifiers("Q1", True) == {("en", "X"), ("en", "X2")}
    assert kb.identifiers("Q1", False) == {("en", "X")}
    assert len(kb.identifiers("Q2", True)) == 3
    with pytest.raises(UnknownEntity):
        kb.identifiers("Q9")


# -- io ---------------------------------------------------------------------------


def test_read_kb_jsonl():
    lines = [
        json.dumps({"id": "Q1", "names": {"en": "A"}, "redirects": {"en": ["AA"]}, "counts": {"en": 2}}),
        "",
        json.dumps({"id": "Q2", "names": {"de": "B"}, "classes": ["Q4167836"]}),
    ]
    records, memberships = read_kb_jsonl(lines)
    assert [r.id for r in records] == ["Q1", "Q2"]
    assert memberships == {"Q2": frozenset({"Q4167836"})}
    assert len(ingest_kb(records, WIKIMEDIA_FILTER_CLASSES, memberships)) == 1


@pytest.mark.parametrize(
    "line, reason",
    [
        ("{not json", "invalid JSON"),
        ("[1, 2]", "JSON object"),
        ('{"names": {"en": "A"}}', "entity id"),
        ('{"id": "Q1", "names": {"en": "A"}, "classes": "Q5"}', "classes"),
    ],
)
def test_read_kb_jsonl_errors(line, reason):
    ok = json.dumps({"id": "Q0", "names": {"en": "Z"}})
    with pytest.raises(MalformedRecord) as info:
        read_kb_jsonl([ok, line])
    assert info.value.line == 2
    assert reason in str(info.value)


def test_filter_list():
    assert read_filter_list(["Q1\n", "# comment\n", "Q2  # trailing\n", "\n"]) == {"Q1", "Q2"}


def test_json_roundtrip():
    kb = small_kb()
    assert kb_from_json(json.loads(json.dumps(kb_to_json(kb)))) == kb


# -- properties ---------------------------------------------------------------------

lang = st.sampled_from(["en", "de", "fr", "it", "es"])
record_specs = st.lists(
    st.tuples(
        st.dictionaries(lang, st.sampled_from("ABCDEFGH"), max_size=4),
        st.dictionaries(lang, st.lists(st.sampled_from(["r1", "r2", "A"]), max_size=2), max_size=2),
        st.dictionaries(lang, st.integers(0, 20), max_size=5),
    ),
    max_size=12,
)


def _records(specs):
    out = []
    taken = set()
    for i, (names, redirects, counts) in enumerate(specs):
        # keep primary titles unique per language
        names = {l: f"{n}{i}" if (n, l) in taken else n for l, n in names.items()}
        taken.update((n, l) for l, n in names.items())
        out.append(rec(f"Q{i}", names, redirects, counts))
    return out


@settings(max_examples=60)
@given(record_specs, st.randoms(use_true_random=False))
def test_kb_invariants(specs, rnd):
    records = _records(specs)
    kb = ingest_kb(records)
    for eid in kb:
        for l, n in kb.identifiers(eid, True):
            assert eid in kb.resolve(n, l)
        if kb[eid].names:
            assert kb.canonical_name(eid) in kb.identifiers(eid, False)
    totals = Counter()
    for r in kb.entities.values():
        totals.update(r.mention_counts)
    assert dict(kb.global_lang_counts) == {k: v for k, v in totals.items()}
    for (n, l), ids in kb.name_index.items():
        assert ids == {e for e in kb if (l, n) in kb.identifiers(e, True)}
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert ingest_kb(shuffled) == kb


def test_ingest_order_independent_on_synthetic():
    from genlink.synthetic import generate

    data = generate(n_entities=300, n_train=500, n_test=10, seed=3)
    shuffled = list(data.records)
    random.Random(1).shuffle(shuffled)
    assert ingest_kb(shuffled) == ingest_kb(data.records)
