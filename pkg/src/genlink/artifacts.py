"""Versioned binary containers for the KB, training pairs and scorer.

Layout: ``b"GLART"`` + 4-byte kind tag + u16le version + zlib-compressed
UTF-8 JSON. JSON is written with sorted keys so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path
from typing import Iterable

from .errors import CorruptArtifact, VersionMismatch
from .kb import KnowledgeBase, kb_from_json, kb_to_json
from .scorer import ReferenceScorer, ScorerInput
from .trie import MAGIC as TRIE_MAGIC
from .trie import Trie, deserialize, serialize

MAGIC = b"GLART"
VERSION = 1
KIND_KB = b"KB\x00\x00"
KIND_PAIRS = b"PAIR"
KIND_SCORER = b"SCOR"

_KIND_NAMES = {KIND_KB: "kb", KIND_PAIRS: "pairs", KIND_SCORER: "scorer"}


def pack(kind: bytes, obj) -> bytes:
    payload = json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + kind + struct.pack("<H", VERSION) + zlib.compress(payload, 6)


def unpack(kind: bytes, data: bytes, source: str = "artifact"):
    head = len(MAGIC) + 4 + 2
    if len(data) < head or data[: len(MAGIC)] != MAGIC:
        if data[: len(TRIE_MAGIC)] == TRIE_MAGIC:
            raise CorruptArtifact(f"{source}: this is a trie file, expected a {_KIND_NAMES[kind]} artifact")
        raise CorruptArtifact(f"{source}: not a genlink artifact (bad magic)")
    found = data[len(MAGIC) : len(MAGIC) + 4]
    if found != kind:
        name = _KIND_NAMES.get(found, found.decode("latin-1"))
        raise CorruptArtifact(f"{source}: holds a {name} artifact, expected {_KIND_NAMES[kind]}")
    (version,) = struct.unpack_from("<H", data, len(MAGIC) + 4)
    if version != VERSION:
        raise VersionMismatch(_KIND_NAMES[kind], version, VERSION)
    try:
        return json.loads(zlib.decompress(data[head:]).decode("utf-8"))
    except (zlib.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptArtifact(f"{source}: damaged payload ({exc})") from None


# -- typed helpers -----------------------------------------------------------------


def dump_kb(kb: KnowledgeBase) -> bytes:
    return pack(KIND_KB, {"entities": kb_to_json(kb)})


def load_kb(data: bytes, source: str = "kb") -> KnowledgeBase:
    return kb_from_json(unpack(KIND_KB, data, source)["entities"])


def dump_pairs(pairs: Iterable[tuple[ScorerInput, tuple]], mode: str, seed: int, alphabet: Iterable[int] = ()) -> bytes:
    rows = [[list(inp.context_tokens), list(inp.mention_tokens), list(target)] for inp, target in pairs]
    return pack(KIND_PAIRS, {"mode": str(mode), "seed": int(seed), "alphabet": sorted(set(alphabet)), "pairs": rows})


def load_pairs(data: bytes, source: str = "pairs") -> tuple[list[tuple[ScorerInput, tuple]], dict]:
    obj = unpack(KIND_PAIRS, data, source)
    pairs = [(ScorerInput(tuple(c), tuple(m)), tuple(t)) for c, m, t in obj["pairs"]]
    meta = {"mode": obj["mode"], "seed": obj["seed"], "alphabet": obj["alphabet"]}
    return pairs, meta


def dump_scorer(scorer: ReferenceScorer) -> bytes:
    return pack(KIND_SCORER, scorer.to_json())


def load_scorer(data: bytes, source: str = "scorer") -> ReferenceScorer:
    try:
        return ReferenceScorer.from_json(unpack(KIND_SCORER, data, source))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArtifact(f"{source}: bad scorer payload ({exc})") from None


def read_bytes(path) -> bytes:
    return Path(path).read_bytes()


def write_bytes(path, data: bytes):
    Path(path).write_bytes(data)


def save_trie(trie: Trie, path):
    write_bytes(path, serialize(trie))


def load_trie(path) -> Trie:
    return deserialize(read_bytes(path))
