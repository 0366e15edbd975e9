"""Mention datasets: TSV loading, hyperlink alignment, model inputs, training pairs.

Mentions TSV (UTF-8, no header): ``lang  left  mention  right  gold_qid``.
Hyperlinks TSV: ``lang  left  mention  right  target_title``.
Redirects TSV: ``lang  from_title  to_title``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, TextIO

from .codec import RenderMode, is_language_code, render, tokenize
from .errors import EntityHasNoNames, MalformedLine, MentionTooLong, MissingGold
from .kb import KnowledgeBase, nfc
from .scorer import ScorerInput

START_MARKER = "[START]"
END_MARKER = "[END]"
DEFAULT_MAX_INPUT_TOKENS = 128
ALTERNATIVE_LANGUAGES = 5


@dataclass(frozen=True)
class MentionInstance:
    lang: str
    left: str
    mention: str
    right: str
    gold: Optional[str] = None

    def __post_init__(self):
        if not self.mention:
            raise ValueError("mention must be non-empty")


@dataclass(frozen=True)
class RawHyperlink:
    lang: str
    left: str
    mention: str
    right: str
    target_title: str


@dataclass
class AlignmentStats:
    direct: int = 0
    redirect: int = 0
    label: int = 0
    ambiguous: int = 0
    unresolved: int = 0

    @property
    def aligned(self) -> int:
        return self.direct + self.redirect + self.label

    @property
    def dropped(self) -> int:
        return self.ambiguous + self.unresolved

    def as_dict(self) -> dict:
        return {
            "direct": self.direct,
            "redirect": self.redirect,
            "label": self.label,
            "ambiguous": self.ambiguous,
            "unresolved": self.unresolved,
            "aligned": self.aligned,
            "dropped": self.dropped,
        }


# -- TSV io ---------------------------------------------------------------------


def _split(line: str, lineno: int, width: int) -> list[str]:
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) != width:
        raise MalformedLine(lineno, f"expected {width} tab-separated fields, got {len(fields)}")
    return fields


def _check_lang(lang, lineno):
    if not is_language_code(lang):
        raise MalformedLine(lineno, f"invalid language code {lang!r}")


def read_mentions(lines: Iterable[str]) -> Iterator[MentionInstance]:
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        lang, left, mention, right, gold = _split(line, lineno, 5)
        _check_lang(lang, lineno)
        if not mention:
            raise MalformedLine(lineno, "empty mention field")
        yield MentionInstance(lang, nfc(left), nfc(mention), nfc(right), gold or None)


def load_mentions(path) -> list[MentionInstance]:
    with open(path, encoding="utf-8") as f:
        return list(read_mentions(f))


def write_mentions(instances: Iterable[MentionInstance], out: TextIO):
    for inst in instances:
        fields = (inst.lang, inst.left, inst.mention, inst.right, inst.gold or "")
        if any("\t" in f or "\n" in f for f in fields):
            raise ValueError(f"field contains a tab or newline: {inst!r}")
        out.write("\t".join(fields) + "\n")


def read_hyperlinks(lines: Iterable[str]) -> Iterator[RawHyperlink]:
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        lang, left, mention, right, title = _split(line, lineno, 5)
        _check_lang(lang, lineno)
        if not mention:
            raise MalformedLine(lineno, "empty mention field")
        if not title:
            raise MalformedLine(lineno, "empty target title")
        yield RawHyperlink(lang, nfc(left), nfc(mention), nfc(right), nfc(title))


def read_redirects(lines: Iterable[str]) -> dict[tuple[str, str], str]:
    out = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        lang, source, target = _split(line, lineno, 3)
        _check_lang(lang, lineno)
        if not source or not target:
            raise MalformedLine(lineno, "empty redirect title")
        out[(lang, nfc(source))] = nfc(target)
    return out


# -- alignment ------------------------------------------------------------------


def align_hyperlinks(
    links: Iterable[RawHyperlink],
    kb: KnowledgeBase,
    redirect_map: Mapping[tuple[str, str], str],
    stats: Optional[AlignmentStats] = None,
) -> tuple[list[MentionInstance], AlignmentStats]:
    """Attach a KB entity to each hyperlink, keeping unambiguous matches only.

    Strategies, in order: the title is a primary title in the link's
    language; the title redirects (``redirect_map``) to such a title; the
    title matches names or aliases across all languages and exactly one
    entity carries it.
    """
    stats = stats if stats is not None else AlignmentStats()
    out = []
    for link in links:
        gold = None
        hits = kb.resolve_title(link.target_title, link.lang)
        if len(hits) == 1:
            gold = next(iter(hits))
            stats.direct += 1
        else:
            target = redirect_map.get((link.lang, link.target_title))
            hits = kb.resolve_title(target, link.lang) if target else frozenset()
            if len(hits) == 1:
                gold = next(iter(hits))
                stats.redirect += 1
            else:
                hits = kb.resolve(link.target_title)
                if len(hits) == 1:
                    gold = next(iter(hits))
                    stats.label += 1
                elif hits:
                    stats.ambiguous += 1
                else:
                    stats.unresolved += 1
        if gold is not None:
            out.append(MentionInstance(link.lang, link.left, link.mention, link.right, gold))
    return out, stats


# -- model input ------------------------------------------------------------------


def build_input(inst: MentionInstance, max_tokens: int = DEFAULT_MAX_INPUT_TOKENS) -> ScorerInput:
    """Tokenize ``left [START] mention [END] right`` within ``max_tokens``.

    Over-long contexts are cut at their outer ends so that the mention sits
    near the middle: each side keeps half of the remaining budget, and a
    side shorter than its half hands the rest to the other one. The marked
    span itself is never cut.
    """
    core = tokenize(f"{START_MARKER} {inst.mention} {END_MARKER}")
    if len(core) > max_tokens:
        raise MentionTooLong(len(core), max_tokens)
    left = tokenize(inst.left + " ") if inst.left else ()
    right = tokenize(" " + inst.right) if inst.right else ()
    room = max_tokens - len(core)
    if len(left) + len(right) > room:
        keep_left = min(len(left), max(room // 2, room - len(right)))
        keep_right = room - keep_left
        left = left[len(left) - keep_left :]
        right = right[:keep_right]
    return ScorerInput(left + core + right, tokenize(inst.mention))


def training_pairs(
    instances: Iterable[MentionInstance],
    kb: KnowledgeBase,
    mode: RenderMode | str = RenderMode.NAME_FIRST,
    rng_seed: int = 17,
    max_tokens: int = DEFAULT_MAX_INPUT_TOKENS,
) -> Iterator[tuple[ScorerInput, tuple]]:
    """Yield ``(input, target_tokens)`` pairs for scorer training.

    The target is the gold entity's name in the mention's language. When the
    entity has no such name, up to five other languages are sampled without
    replacement and each yields a pair. Canonical mode always targets the
    canonical name.
    """
    mode = RenderMode.parse(mode)
    rng = random.Random(rng_seed)
    for i, inst in enumerate(instances):
        if inst.gold is None:
            raise MissingGold(i)
        rec = kb[inst.gold]
        if not rec.names:
            raise EntityHasNoNames(inst.gold)
        inp = build_input(inst, max_tokens)
        if mode is RenderMode.CANONICAL:
            lang, name = kb.canonical_name(inst.gold)
            yield inp, tokenize(render(lang, name, mode))
        elif inst.lang in rec.names:
            yield inp, tokenize(render(inst.lang, rec.names[inst.lang], mode))
        else:
            langs = sorted(rec.names)
            chosen = rng.sample(langs, min(ALTERNATIVE_LANGUAGES, len(langs)))
            for lang in sorted(chosen):
                yield inp, tokenize(render(lang, rec.names[lang], mode))
