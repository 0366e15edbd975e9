"""Mention-string to candidate-entity table."""

from __future__ import annotations

import json
from collections import defaultdict
from typing import Iterable, Optional, TextIO

from .errors import MalformedLine, UnknownEntity
from .kb import KnowledgeBase, nfc

FROM_TRAINING = "training"
FROM_TITLE = "title"
FROM_REDIRECT = "redirect"
FROM_LABEL = "label"


class AliasTable:
    """Exact-match (after NFC) lookup from mention strings to entities.

    Each candidate list is sorted by training count descending, then by
    entity id; entries that never occur as training links carry count 0.
    """

    def __init__(self, index: dict[str, list[tuple[str, int]]], sources: Optional[dict] = None):
        self._index = {
            nfc(m): tuple(sorted(((e, int(c)) for e, c in cands), key=lambda ec: (-ec[1], ec[0])))
            for m, cands in index.items()
        }
        for m, cands in self._index.items():
            ids = [e for e, _ in cands]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate candidate for mention {m!r}")
        self.sources = {k: frozenset(v) for k, v in (sources or {}).items()}

    def __len__(self):
        return len(self._index)

    def __contains__(self, mention):
        return nfc(mention) in self._index

    def __eq__(self, other):
        if not isinstance(other, AliasTable):
            return NotImplemented
        return self._index == other._index

    def mentions(self):
        return iter(sorted(self._index))

    def candidates(self, mention: str, top_k: Optional[int] = None) -> list[tuple[str, int]]:
        cands = self._index.get(nfc(mention), ())
        if top_k is not None:
            if top_k < 1:
                raise ValueError(f"top_k must be positive, got {top_k}")
            cands = cands[:top_k]
        return list(cands)

    def candidate_count(self, mention: str) -> int:
        return len(self._index.get(nfc(mention), ()))

    # -- jsonl -------------------------------------------------------------------

    def write_jsonl(self, out: TextIO):
        for mention in sorted(self._index):
            cands = self._index[mention]
            row = {"mention": mention, "candidates": [[e, c] for e, c in cands]}
            if self.sources:
                row["sources"] = [sorted(self.sources.get((mention, e), ())) for e, _ in cands]
            out.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")

    @classmethod
    def read_jsonl(cls, lines: Iterable[str]) -> "AliasTable":
        index = {}
        sources = {}
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                mention = row["mention"]
                cands = [(str(e), int(c)) for e, c in row["candidates"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedLine(lineno, f"bad alias row ({exc})") from None
            if mention in index:
                raise MalformedLine(lineno, f"mention {mention!r} listed twice")
            index[mention] = cands
            for (e, _), src in zip(cands, row.get("sources", [])):
                sources[(nfc(mention), e)] = src
        return cls(index, sources)


def build_alias_table(
    training_mentions: Iterable[tuple[str, str]],
    kb: KnowledgeBase,
    extra_labels: Iterable[tuple[str, str]] = (),
) -> AliasTable:
    """Count training links and add titles, redirects and labels with count 0."""
    counts: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    sources: dict[tuple[str, str], set] = defaultdict(set)

    def touch(mention, eid, source):
        mention = nfc(mention)
        counts[mention][eid] += 0
        sources[(mention, eid)].add(source)

    for mention, eid in training_mentions:
        if eid not in kb:
            raise UnknownEntity(eid)
        mention = nfc(mention)
        counts[mention][eid] += 1
        sources[(mention, eid)].add(FROM_TRAINING)
    for eid, lang, name, is_redirect in kb.iter_identifiers(include_redirects=True):
        touch(name, eid, FROM_REDIRECT if is_redirect else FROM_TITLE)
    for label, eid in extra_labels:
        if eid not in kb:
            raise UnknownEntity(eid)
        touch(label, eid, FROM_LABEL)
    return AliasTable({m: list(row.items()) for m, row in counts.items()}, sources)
