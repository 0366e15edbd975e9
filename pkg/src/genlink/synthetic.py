"""Deterministic synthetic KB and mention corpora for smoke tests and demos.

Run ``python3 -m genlink.synthetic --out DIR`` to write ``kb.jsonl``,
``train.tsv``, ``test.tsv`` and ``copy.tsv`` (the test mentions rewritten
as their gold identifiers).
"""

from __future__ import annotations

import argparse
import json
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .codec import RenderMode, render
from .corpus import MentionInstance, write_mentions
from .kb import EntityRecord, KnowledgeBase

MAX_NAME_CHARS = 24
LANGUAGES = ("en", "de", "fr", "es", "it")
_ONSETS = "b c d f g h k l m n p r s t v z br st tr kl gr ch sh".split()
_VOWELS = "a e i o u ai ei ou".split()
_CODAS = ["", "", "", "n", "r", "s", "l", "m", "t"]
_LANG_SUFFIX = {"en": "", "de": "en", "fr": "e", "es": "o", "it": "i"}
_FILLER = (
    "the of and in on was is for with from at by a to as that this which new "
    "city river team party year film album company station church school"
).split()


@dataclass
class SyntheticData:
    records: list[EntityRecord]
    train: list[MentionInstance]
    test: list[MentionInstance]

    @property
    def kb(self) -> KnowledgeBase:
        return KnowledgeBase(self.records)

    def copy_subset(self, kb: KnowledgeBase | None = None) -> list[MentionInstance]:
        """Test mentions whose surface string names exactly one entity, the gold one."""
        kb = kb or self.kb
        return [m for m in self.test if kb.resolve(m.mention) == {m.gold}]


def copy_fixture(instances, kb: KnowledgeBase, mode: RenderMode | str = RenderMode.NAME_FIRST) -> list[MentionInstance]:
    """Replace each mention by its gold entity's rendered identifier.

    The rendered identifier is the decoder's target string, so a scorer with
    copy bias should reproduce it token for token. The identifier uses the
    mention's language when the entity has a name there (the canonical name
    in canonical mode).
    """
    mode = RenderMode.parse(mode)
    out = []
    for m in instances:
        rec = kb[m.gold]
        if mode is RenderMode.CANONICAL:
            lang, name = kb.canonical_name(m.gold)
        else:
            lang = m.lang if m.lang in rec.names else sorted(rec.names)[0]
            name = rec.names[lang]
        out.append(MentionInstance(m.lang, m.left, render(lang, name, mode), m.right, m.gold))
    return out


def _word(rng: random.Random) -> str:
    parts = []
    for _ in range(rng.randint(2, 3)):
        parts.append(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS))
    return "".join(parts).capitalize()


def _base_name(rng: random.Random) -> str:
    return " ".join(_word(rng) for _ in range(rng.choice((1, 1, 2, 2, 3))))


def _localize(base: str, lang: str, rng: random.Random) -> str:
    if rng.random() < 0.5:
        return base
    words = base.split(" ")
    words[-1] = words[-1].rstrip("aeiou") + _LANG_SUFFIX[lang] if _LANG_SUFFIX[lang] else words[-1] + "s"
    return " ".join(words)


def _context(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(_FILLER) for _ in range(n))


def generate(
    n_entities: int = 5000,
    n_train: int = 20000,
    n_test: int = 1000,
    max_languages: int = 3,
    seed: int = 0,
) -> SyntheticData:
    """Entities with names in 1..``max_languages`` languages plus some redirects.

    Primary titles are unique per language. Mentions mostly copy the title
    in their own language; the rest use a redirect, a lowercased title or
    the title's last word, and a few come from languages the entity lacks.
    """
    if not 1 <= max_languages <= len(LANGUAGES):
        raise ValueError(f"max_languages must lie in [1, {len(LANGUAGES)}]")
    rng = random.Random(seed)
    taken: set[tuple[str, str]] = set()
    records_raw = []
    for i in range(n_entities):
        eid = f"Q{i + 1}"
        langs = sorted(rng.sample(LANGUAGES, rng.randint(1, max_languages)))
        while True:
            base = _base_name(rng)
            names = {lang: _localize(base, lang, rng) for lang in langs}
            # identifiers must fit the decoder's step budget with room for " >> xx"
            fits = max(len(n) for n in names.values()) <= MAX_NAME_CHARS
            if fits and not any((n, lang) in taken for lang, n in names.items()):
                break
        taken.update((n, lang) for lang, n in names.items())
        redirects = {}
        if rng.random() < 0.3:
            lang = rng.choice(langs)
            words = names[lang].split(" ")
            alt = "".join(w[0] for w in words) if len(words) > 1 else names[lang] + " " + rng.choice(("City", "Club", "Group"))
            if alt != names[lang]:
                redirects[lang] = [alt]
        records_raw.append((eid, names, redirects))

    # Zipf-like popularity so frequency buckets are populated
    weights = [1.0 / (r + 1) ** 0.8 for r in range(n_entities)]
    order = list(range(n_entities))
    rng.shuffle(order)

    def draw_mentions(count: int) -> list[MentionInstance]:
        picks = rng.choices(order, weights=weights, k=count)
        out = []
        for idx in picks:
            eid, names, redirects = records_raw[idx]
            if rng.random() < 0.9:
                lang = rng.choice(sorted(names))
                title = names[lang]
            else:
                lang = rng.choice([lang for lang in LANGUAGES if lang not in names] or sorted(names))
                title = names[sorted(names)[0]] if lang not in names else names[lang]
            u = rng.random()
            if u < 0.7:
                surface = title
            elif u < 0.8 and redirects:
                surface = rng.choice(next(iter(redirects.values())))
            elif u < 0.9:
                surface = title.lower()
            else:
                surface = title.split(" ")[-1]
            out.append(MentionInstance(lang, _context(rng, rng.randint(0, 12)), surface, _context(rng, rng.randint(0, 12)), eid))
        return out

    train = draw_mentions(n_train)
    test = draw_mentions(n_test)

    counts: dict[str, Counter] = {eid: Counter() for eid, _, _ in records_raw}
    for m in train:
        counts[m.gold][m.lang] += 1
    records = [EntityRecord.create(eid, names, redirects, dict(counts[eid])) for eid, names, redirects in records_raw]
    return SyntheticData(records, train, test)


def write(data: SyntheticData, out_dir, mode: RenderMode | str = RenderMode.NAME_FIRST) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "kb": out_dir / "kb.jsonl",
        "train": out_dir / "train.tsv",
        "test": out_dir / "test.tsv",
        "copy": out_dir / "copy.tsv",
    }
    with open(paths["kb"], "w", encoding="utf-8") as f:
        for rec in data.records:
            f.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    for key in ("train", "test"):
        with open(paths[key], "w", encoding="utf-8") as f:
            write_mentions(getattr(data, key), f)
    with open(paths["copy"], "w", encoding="utf-8") as f:
        write_mentions(copy_fixture(data.test, data.kb, mode), f)
    return paths


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python3 -m genlink.synthetic", description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--entities", type=int, default=5000)
    ap.add_argument("--train", type=int, default=20000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--max-languages", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", default="name-first", choices=[m.value for m in RenderMode], help="rendering of copy.tsv")
    args = ap.parse_args(argv)
    data = generate(args.entities, args.train, args.test, args.max_languages, args.seed)
    for key, path in write(data, args.out, args.mode).items():
        print(f"{key}\t{path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
