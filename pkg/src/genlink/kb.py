"""Multilingual knowledge base: ingestion, filtering and name lookup."""

from __future__ import annotations

import json
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional

from .codec import SEPARATOR, is_language_code
from .errors import (
    DuplicateEntity,
    DuplicateTitle,
    EntityHasNoNames,
    MalformedRecord,
    SeparatorInName,
    UnknownEntity,
)

# Wikimedia organizational classes (categories, templates, portals, ...).
# Items that instantiate or subclass one of these are not linkable entities.
WIKIMEDIA_FILTER_CLASSES = frozenset(
    {
        "Q4167836",  # category
        "Q24046192",  # category stub
        "Q20010800",  # user category
        "Q11266439",  # template
        "Q11753321",  # navigational template
        "Q19842659",  # user template
        "Q21528878",  # redirect page
        "Q17362920",  # duplicated page
        "Q14204246",  # project page
        "Q21025364",  # project page
        "Q17442446",  # internal item
        "Q26267864",  # KML file
        "Q4663903",  # portal
        "Q15184295",  # module
    }
)


def nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


@dataclass(frozen=True)
class EntityRecord:
    """One KB entity.

    ``names`` holds the primary title per language, ``redirects`` the
    alternate titles and ``mention_counts`` how often the entity was linked
    from documents written in each language.
    """

    id: str
    names: Mapping[str, str]
    redirects: Mapping[str, frozenset] = field(default_factory=dict)
    mention_counts: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def create(cls, id, names, redirects=None, mention_counts=None) -> "EntityRecord":
        """Validate, NFC-normalize and freeze the fields."""
        if not isinstance(id, str) or not id:
            raise ValueError("entity id must be a non-empty string")
        clean_names = {}
        for lang, name in dict(names).items():
            _check_lang(lang)
            if not isinstance(name, str) or not name:
                raise ValueError(f"{id}: empty name for language {lang!r}")
            name = nfc(name)
            if SEPARATOR in name:
                raise SeparatorInName(name)
            clean_names[lang] = name
        clean_redirects = {}
        for lang, alts in dict(redirects or {}).items():
            _check_lang(lang)
            if isinstance(alts, str):
                raise ValueError(f"{id}: redirects for {lang!r} must be a list of strings")
            alt_set = set()
            for alt in alts:
                if not isinstance(alt, str) or not alt:
                    raise ValueError(f"{id}: empty redirect in language {lang!r}")
                alt = nfc(alt)
                if SEPARATOR in alt:
                    raise SeparatorInName(alt)
                if alt != clean_names.get(lang):
                    alt_set.add(alt)
            if alt_set:
                clean_redirects[lang] = frozenset(alt_set)
        clean_counts = {}
        for lang, count in dict(mention_counts or {}).items():
            _check_lang(lang)
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise ValueError(f"{id}: mention count for {lang!r} must be a non-negative integer")
            clean_counts[lang] = count
        return cls(
            id=id,
            names=MappingProxyType(dict(sorted(clean_names.items()))),
            redirects=MappingProxyType(dict(sorted(clean_redirects.items()))),
            mention_counts=MappingProxyType(dict(sorted(clean_counts.items()))),
        )

    def __reduce__(self):
        redirects = {lang: sorted(alts) for lang, alts in self.redirects.items()}
        return EntityRecord.create, (self.id, dict(self.names), redirects, dict(self.mention_counts))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "names": dict(self.names),
            "redirects": {lang: sorted(alts) for lang, alts in self.redirects.items()},
            "counts": dict(self.mention_counts),
        }


def _check_lang(lang):
    if not isinstance(lang, str) or not is_language_code(lang):
        raise ValueError(f"invalid language code {lang!r}")


class KnowledgeBase:
    """Immutable, indexed set of :class:`EntityRecord` objects."""

    def __init__(self, records: Iterable[EntityRecord]):
        entities: dict[str, EntityRecord] = {}
        for rec in records:
            if rec.id in entities:
                raise DuplicateEntity(rec.id)
            entities[rec.id] = rec
        self._entities = {eid: entities[eid] for eid in sorted(entities)}

        index: dict[tuple[str, str], set] = defaultdict(set)
        titles: dict[tuple[str, str], list] = defaultdict(list)
        lang_counts: dict[str, int] = defaultdict(int)
        for rec in self._entities.values():
            for lang, name in rec.names.items():
                index[(name, lang)].add(rec.id)
                titles[(name, lang)].append(rec.id)
            for lang, alts in rec.redirects.items():
                for alt in alts:
                    index[(alt, lang)].add(rec.id)
            for lang, count in rec.mention_counts.items():
                lang_counts[lang] += count
        for (name, lang), ids in titles.items():
            if len(ids) > 1:
                raise DuplicateTitle(name, lang, ids)

        self._name_index = {key: frozenset(ids) for key, ids in index.items()}
        by_name: dict[str, set] = defaultdict(set)
        for (name, _), ids in self._name_index.items():
            by_name[name].update(ids)
        self._by_name = {name: frozenset(ids) for name, ids in by_name.items()}
        self._lang_counts = dict(sorted(lang_counts.items()))

    # -- read-only views ---------------------------------------------------

    @property
    def entities(self) -> Mapping[str, EntityRecord]:
        return MappingProxyType(self._entities)

    @property
    def name_index(self) -> Mapping[tuple[str, str], frozenset]:
        return MappingProxyType(self._name_index)

    @property
    def global_lang_counts(self) -> Mapping[str, int]:
        return MappingProxyType(self._lang_counts)

    def __reduce__(self):
        return KnowledgeBase, (list(self._entities.values()),)

    def __deepcopy__(self, memo):
        # immutable, so copies may share it
        return self

    def __len__(self):
        return len(self._entities)

    def __contains__(self, entity_id):
        return entity_id in self._entities

    def __iter__(self) -> Iterator[str]:
        return iter(self._entities)

    def __eq__(self, other):
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return self._entities == other._entities

    def __getitem__(self, entity_id) -> EntityRecord:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise UnknownEntity(entity_id) from None

    def languages(self) -> list[str]:
        langs = set(self._lang_counts)
        for rec in self._entities.values():
            langs.update(rec.names)
        return sorted(langs)

    # -- operations ----------------------------------------------------------

    def canonical_name(self, entity_id: str) -> tuple[str, str]:
        """Pick the single name used when entities get one identifier each.

        The language with most mentions of the entity wins; ties go to the
        language with most mentions overall, then to the smallest code.
        Redirects never take part.
        """
        rec = self[entity_id]
        if not rec.names:
            raise EntityHasNoNames(entity_id)
        lang = min(
            rec.names,
            key=lambda l: (-rec.mention_counts.get(l, 0), -self._lang_counts.get(l, 0), l),
        )
        return lang, rec.names[lang]

    def resolve(self, name: str, lang: Optional[str] = None) -> frozenset:
        name = nfc(name)
        if lang is None:
            return self._by_name.get(name, frozenset())
        return self._name_index.get((name, lang), frozenset())

    def resolve_title(self, name: str, lang: str) -> frozenset:
        """Entities whose primary title in ``lang`` is ``name`` (at most one)."""
        name = nfc(name)
        return frozenset(
            eid for eid in self._name_index.get((name, lang), ()) if self._entities[eid].names.get(lang) == name
        )

    def identifiers(self, entity_id: str, include_redirects: bool = True) -> set[tuple[str, str]]:
        rec = self[entity_id]
        out = {(lang, name) for lang, name in rec.names.items()}
        if include_redirects:
            out.update((lang, alt) for lang, alts in rec.redirects.items() for alt in alts)
        return out

    def iter_identifiers(self, include_redirects: bool = True) -> Iterator[tuple[str, str, str, bool]]:
        """Yield ``(entity_id, lang, name, is_redirect)`` over the whole KB."""
        for eid, rec in self._entities.items():
            for lang, name in rec.names.items():
                yield eid, lang, name, False
            if include_redirects:
                for lang, alts in rec.redirects.items():
                    for alt in sorted(alts):
                        yield eid, lang, alt, True


def ingest_kb(
    records: Iterable[EntityRecord],
    excluded_classes: Iterable[str] = (),
    class_memberships: Optional[Mapping[str, Iterable[str]]] = None,
) -> KnowledgeBase:
    """Filter a record stream into a :class:`KnowledgeBase`.

    Records without any name are dropped, as are records whose (already
    flattened) class memberships hit ``excluded_classes``.
    """
    excluded = frozenset(excluded_classes)
    memberships = class_memberships or {}
    seen = set()
    kept = []
    for rec in records:
        if rec.id in seen:
            raise DuplicateEntity(rec.id)
        seen.add(rec.id)
        if not rec.names:
            continue
        if excluded and excluded.intersection(memberships.get(rec.id, ())):
            continue
        kept.append(rec)
    return KnowledgeBase(kept)


def read_kb_jsonl(lines: Iterable[str]) -> tuple[list[EntityRecord], dict[str, frozenset]]:
    """Parse KB lines into records plus the optional per-record ``classes``.

    Each line is ``{"id", "names", "redirects", "counts"}``; a ``classes``
    list may carry the pre-flattened class memberships used for filtering.
    """
    records = []
    memberships = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise MalformedRecord(lineno, "expected a JSON object")
        try:
            rec = EntityRecord.create(
                obj.get("id"),
                obj.get("names") or {},
                obj.get("redirects") or {},
                obj.get("counts") or {},
            )
        except (ValueError, TypeError, AttributeError) as exc:
            raise MalformedRecord(lineno, str(exc)) from None
        classes = obj.get("classes") or []
        if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
            raise MalformedRecord(lineno, "classes must be a list of entity ids")
        if classes:
            memberships[rec.id] = frozenset(classes)
        records.append(rec)
    return records, memberships


def read_filter_list(lines: Iterable[str]) -> frozenset:
    out = set()
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            out.add(line)
    return frozenset(out)


def kb_to_json(kb: KnowledgeBase) -> list[dict]:
    return [rec.to_json() for rec in kb.entities.values()]


def kb_from_json(rows: Iterable[dict]) -> KnowledgeBase:
    return KnowledgeBase(
        EntityRecord.create(r["id"], r["names"], r.get("redirects"), r.get("counts")) for r in rows
    )
