"""Immutable token-level prefix tree over rendered identifiers.

Nodes are numbered in preorder with children visited in increasing token
order, so node 0 is the root and a node's subtree is a contiguous id range.
Structure lives in flat numpy arrays:

* ``labels[n]``, ``depths[n]``, ``parents[n]`` per node;
* children in CSR form, ``child_start[n]:child_start[n+1]`` indexing into
  ``child_labels``/``child_nodes`` (labels ascending);
* payload entries in CSR form, ``payload_start[n]:payload_start[n+1]``
  indexing into ``payload_entity``, ``payload_lang`` and
  ``payload_redirect`` (entity and language are indices into the sorted
  string tables ``entities`` and ``langs``).

A node is terminal iff it carries at least one payload entry; EOS is never
stored as an edge and is surfaced by :meth:`Trie.allowed_next` instead.

Binary format (version 1), all integers unsigned LEB128 unless noted::

    b"GLTRIE"  version:u16le
    mode flags node_count name_count n_entities n_langs n_entries
    n_entities x (len utf8-bytes)      entity table
    n_langs    x (len utf8-bytes)      language table
    (node_count-1) labels              preorder, root excluded
    (node_count-1) depths              preorder, root excluded
    node_count payload sizes           preorder, root included
    n_entries entity indices
    n_entries lang_index*2 + is_redirect
    crc32:u32le                        over every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .codec import EOS, TOKEN_OFFSET, RenderMode, render
from .errors import (
    CorruptTrieFile,
    EmptySequence,
    NotAnIdentifier,
    ReservedTokenInSequence,
    UnknownEntity,
    VersionMismatch,
)

MAGIC = b"GLTRIE"
FORMAT_VERSION = 1

_MODE_CODES = {None: 0, RenderMode.CANONICAL: 1, RenderMode.LANG_FIRST: 2, RenderMode.NAME_FIRST: 3}
_CODE_MODES = {v: k for k, v in _MODE_CODES.items()}


class Trie:
    """Read-only prefix tree; build with :func:`build` or :func:`deserialize`."""

    def __init__(
        self,
        labels,
        depths,
        parents,
        payload_start,
        payload_entity,
        payload_lang,
        payload_redirect,
        entities: Sequence[str],
        langs: Sequence[str],
        mode: Optional[RenderMode] = None,
        include_redirects: bool = True,
    ):
        self.labels = np.asarray(labels, dtype=np.uint32)
        self.depths = np.asarray(depths, dtype=np.int32)
        self.parents = np.asarray(parents, dtype=np.int32)
        self.payload_start = np.asarray(payload_start, dtype=np.int64)
        self.payload_entity = np.asarray(payload_entity, dtype=np.int32)
        self.payload_lang = np.asarray(payload_lang, dtype=np.int32)
        self.payload_redirect = np.asarray(payload_redirect, dtype=bool)
        self.entities = tuple(entities)
        self.langs = tuple(langs)
        self.mode = None if mode is None else RenderMode.parse(mode)
        self.include_redirects = bool(include_redirects)

        n = len(self.labels)
        child_parents = self.parents[1:]
        order = np.argsort(child_parents, kind="stable")
        self.child_nodes = (order + 1).astype(np.int32)
        self.child_labels = self.labels[self.child_nodes]
        self.child_start = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(child_parents, minlength=n), out=self.child_start[1:])
        self._terminal = np.diff(self.payload_start) > 0

    # -- size ----------------------------------------------------------------

    @property
    def node_count(self) -> int:
        return int(len(self.labels))

    @property
    def name_count(self) -> int:
        return int(np.count_nonzero(self._terminal))

    def __len__(self):
        return self.name_count

    def __repr__(self):
        return f"Trie(node_count={self.node_count}, name_count={self.name_count}, mode={self.mode})"

    def __eq__(self, other):
        if not isinstance(other, Trie):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.include_redirects == other.include_redirects
            and self.entities == other.entities
            and self.langs == other.langs
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.depths, other.depths)
            and np.array_equal(self.parents, other.parents)
            and np.array_equal(self.payload_start, other.payload_start)
            and np.array_equal(self.payload_entity, other.payload_entity)
            and np.array_equal(self.payload_lang, other.payload_lang)
            and np.array_equal(self.payload_redirect, other.payload_redirect)
        )

    __hash__ = None

    # -- node-level navigation (used by the decoder) --------------------------

    def child(self, node: int, token: int) -> int:
        lo, hi = int(self.child_start[node]), int(self.child_start[node + 1])
        if lo == hi:
            return -1
        i = lo + int(np.searchsorted(self.child_labels[lo:hi], token))
        if i < hi and int(self.child_labels[i]) == token:
            return int(self.child_nodes[i])
        return -1

    def children(self, node: int) -> tuple[list[int], list[int]]:
        lo, hi = int(self.child_start[node]), int(self.child_start[node + 1])
        return self.child_labels[lo:hi].tolist(), self.child_nodes[lo:hi].tolist()

    def is_terminal(self, node: int) -> bool:
        return bool(self._terminal[node])

    def walk(self, prefix: Iterable[int]) -> int:
        """Node reached by ``prefix`` or -1 when it leaves the trie."""
        node = 0
        for t in prefix:
            node = self.child(node, int(t))
            if node < 0:
                return -1
        return node

    # -- sequence-level queries ------------------------------------------------

    def allowed_next(self, prefix: Iterable[int]) -> set[int]:
        node = self.walk(prefix)
        if node < 0:
            return set()
        out = set(self.children(node)[0])
        if self._terminal[node]:
            out.add(EOS)
        return out

    def payload_at(self, node: int) -> frozenset:
        lo, hi = int(self.payload_start[node]), int(self.payload_start[node + 1])
        return frozenset(
            (self.entities[e], self.langs[l], bool(r))
            for e, l, r in zip(
                self.payload_entity[lo:hi].tolist(),
                self.payload_lang[lo:hi].tolist(),
                self.payload_redirect[lo:hi].tolist(),
            )
        )

    def payload(self, seq: Iterable[int]) -> frozenset:
        seq = tuple(seq)
        node = self.walk(seq)
        if node <= 0 or not self._terminal[node]:
            raise NotAnIdentifier(seq)
        return self.payload_at(node)

    def __contains__(self, seq) -> bool:
        node = self.walk(seq)
        return node > 0 and bool(self._terminal[node])

    def sequences(self) -> Iterator[tuple[int, ...]]:
        """All stored identifiers in lexicographic token order."""
        path: list[int] = []
        labels = self.labels.tolist()
        depths = self.depths.tolist()
        terminal = self._terminal.tolist()
        for node in range(1, len(labels)):
            del path[depths[node] - 1 :]
            path.append(labels[node])
            if terminal[node]:
                yield tuple(path)

    def token_alphabet(self) -> set[int]:
        return set(np.unique(self.labels[1:]).tolist())

    def stats(self) -> dict:
        return {"node_count": self.node_count, "name_count": self.name_count}


# -- construction ---------------------------------------------------------------


class TrieBuilder:
    """Accumulates identifiers; :meth:`finish` freezes them into a :class:`Trie`.

    Keys are stored as big-endian 32-bit words of ``token - 3`` so that plain
    ``bytes`` ordering equals lexicographic token order and text can be keyed
    directly with a UTF-32 encode.
    """

    def __init__(self):
        self._groups: dict[bytes, list] = {}

    def add(self, tokens: Sequence[int], entity: str, lang: str, is_redirect: bool = False):
        tokens = tuple(int(t) for t in tokens)
        if not tokens:
            raise EmptySequence()
        low = min(tokens)
        if low < TOKEN_OFFSET:
            raise ReservedTokenInSequence(low)
        key = struct.pack(f">{len(tokens)}I", *[t - TOKEN_OFFSET for t in tokens])
        self._add_key(key, entity, lang, is_redirect)

    def add_text(self, text: str, entity: str, lang: str, is_redirect: bool = False):
        if not text:
            raise EmptySequence()
        self._add_key(text.encode("utf-32-be", "surrogatepass"), entity, lang, is_redirect)

    def _add_key(self, key, entity, lang, is_redirect):
        entry = (entity, lang, bool(is_redirect))
        group = self._groups.get(key)
        if group is None:
            self._groups[key] = [entry]
        else:
            group.append(entry)

    def finish(self, mode=None, include_redirects: bool = True) -> Trie:
        keys = sorted(self._groups)
        n_keys = len(keys)
        if n_keys == 0:
            return Trie([0], [0], [-1], [0, 0], [], [], [], (), (), mode, include_redirects)

        lens = np.fromiter((len(k) >> 2 for k in keys), dtype=np.int64, count=n_keys)
        tokens = np.frombuffer(b"".join(keys), dtype=">u4").astype(np.uint32)
        tokens += TOKEN_OFFSET
        offsets = np.zeros(n_keys + 1, dtype=np.int64)
        np.cumsum(lens, out=offsets[1:])
        starts = offsets[:-1]

        # longest common prefix of each key with its predecessor
        lcp = np.zeros(n_keys, dtype=np.int64)
        if n_keys > 1:
            min_len = np.minimum(lens[:-1], lens[1:])
            alive = np.arange(1, n_keys)
            depth = 0
            while alive.size:
                alive = alive[min_len[alive - 1] > depth]
                if not alive.size:
                    break
                same = tokens[starts[alive - 1] + depth] == tokens[starts[alive] + depth]
                alive = alive[same]
                lcp[alive] += 1
                depth += 1

        # every key adds the nodes below its lcp with the predecessor; walking
        # sorted keys this way emits nodes in preorder
        new_per_key = lens - lcp
        key_of_pos = np.repeat(np.arange(n_keys), lens)
        pos_in_key = np.arange(len(tokens), dtype=np.int64) - starts[key_of_pos]
        fresh = pos_in_key >= lcp[key_of_pos]
        node_labels = tokens[fresh]
        node_depths = (pos_in_key[fresh] + 1).astype(np.int32)
        del key_of_pos, pos_in_key, fresh

        n_nodes = 1 + len(node_labels)
        labels = np.zeros(n_nodes, dtype=np.uint32)
        labels[1:] = node_labels
        depths = np.zeros(n_nodes, dtype=np.int32)
        depths[1:] = node_depths
        parents = _parents_from_preorder(depths)
        terminals = np.cumsum(new_per_key)

        entity_table = sorted({e for group in self._groups.values() for e, _, _ in group})
        lang_table = sorted({l for group in self._groups.values() for _, l, _ in group})
        entity_idx = {e: i for i, e in enumerate(entity_table)}
        lang_idx = {l: i for i, l in enumerate(lang_table)}

        sizes = np.zeros(n_nodes, dtype=np.int64)
        ent_out: list[int] = []
        lang_out: list[int] = []
        red_out: list[bool] = []
        for i, key in enumerate(keys):
            group = self._groups[key]
            entries = sorted(set(group)) if len(group) > 1 else group
            sizes[terminals[i]] = len(entries)
            for e, l, r in entries:
                ent_out.append(entity_idx[e])
                lang_out.append(lang_idx[l])
                red_out.append(r)
        payload_start = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(sizes, out=payload_start[1:])

        return Trie(
            labels,
            depths,
            parents,
            payload_start,
            np.array(ent_out, dtype=np.int32),
            np.array(lang_out, dtype=np.int32),
            np.array(red_out, dtype=bool),
            entity_table,
            lang_table,
            mode,
            include_redirects,
        )


def _parents_from_preorder(depths: np.ndarray) -> np.ndarray:
    """Parent of each node: the latest earlier node one level up."""
    n = len(depths)
    parents = np.full(n, -1, dtype=np.int32)
    if n <= 1:
        return parents
    ids = np.arange(n, dtype=np.int32)
    order = np.argsort(depths, kind="stable")
    sorted_depths = depths[order]
    bounds = np.searchsorted(sorted_depths, np.arange(int(sorted_depths[-1]) + 2))
    for d in range(1, int(sorted_depths[-1]) + 1):
        here = ids[order[bounds[d] : bounds[d + 1]]]
        above = ids[order[bounds[d - 1] : bounds[d]]]
        if not len(above):
            raise ValueError(f"preorder depth sequence skips level {d - 1}")
        pos = np.searchsorted(above, here) - 1
        if (pos < 0).any():
            raise ValueError("preorder depth sequence has an orphan node")
        parents[here] = above[pos]
    return parents


def build(items: Iterable[tuple], mode=None, include_redirects: bool = True) -> Trie:
    """Build a trie from ``(tokens, entity_id, lang, is_redirect)`` items.

    Identical token sequences merge their payloads; the result does not
    depend on insertion order.
    """
    builder = TrieBuilder()
    for item in items:
        tokens, entity, lang = item[0], item[1], item[2]
        is_redirect = item[3] if len(item) > 3 else False
        builder.add(tokens, entity, lang, is_redirect)
    return builder.finish(mode, include_redirects)


def _add_entity(builder: TrieBuilder, kb, entity_id: str, mode: RenderMode, include_redirects: bool):
    if mode is RenderMode.CANONICAL:
        lang, name = kb.canonical_name(entity_id)
        builder.add_text(name, entity_id, lang, False)
        return
    rec = kb[entity_id]
    for lang, name in rec.names.items():
        builder.add_text(render(lang, name, mode), entity_id, lang, False)
    if include_redirects:
        for lang, alts in rec.redirects.items():
            for alt in alts:
                builder.add_text(render(lang, alt, mode), entity_id, lang, True)


def build_from_kb(kb, mode=RenderMode.NAME_FIRST, include_redirects: bool = True) -> Trie:
    """Trie over every identifier of ``kb`` rendered under ``mode``.

    Canonical mode stores one identifier per entity (its canonical name), so
    redirects do not apply there.
    """
    mode = RenderMode.parse(mode)
    builder = TrieBuilder()
    for eid in kb:
        if kb[eid].names:
            _add_entity(builder, kb, eid, mode, include_redirects)
    return builder.finish(mode, include_redirects)


def restrict(kb, candidates: Iterable[str], mode=RenderMode.NAME_FIRST, include_redirects: bool = True) -> Trie:
    """Trie over the identifiers of ``candidates`` only."""
    mode = RenderMode.parse(mode)
    builder = TrieBuilder()
    for eid in sorted(set(candidates)):
        if eid not in kb:
            raise UnknownEntity(eid)
        _add_entity(builder, kb, eid, mode, include_redirects)
    return builder.finish(mode, include_redirects)


# -- serialization ----------------------------------------------------------------


def _encode_varints(values) -> bytes:
    a = np.asarray(values, dtype=np.uint64)
    if not a.size:
        return b""
    nbytes = np.ones(a.size, dtype=np.int64)
    for shift in range(7, 64, 7):
        nbytes += (a >> np.uint64(shift)) > 0
    ends = np.cumsum(nbytes)
    starts = ends - nbytes
    out = np.zeros(int(ends[-1]), dtype=np.uint8)
    for k in range(int(nbytes.max())):
        sel = nbytes > k
        byte = ((a[sel] >> np.uint64(7 * k)) & np.uint64(0x7F)).astype(np.uint8)
        more = (nbytes[sel] > k + 1).astype(np.uint8) << 7
        out[starts[sel] + k] = byte | more
    return out.tobytes()


def _decode_varints(buf: np.ndarray, offset: int, count: int) -> tuple[np.ndarray, int]:
    if count == 0:
        return np.zeros(0, dtype=np.uint64), offset
    window = buf[offset : offset + 10 * count]
    ends = np.flatnonzero(window < 0x80)[:count]
    if len(ends) < count:
        raise CorruptTrieFile(offset + len(window), "truncated varint section")
    starts = np.empty(count, dtype=np.int64)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    nbytes = ends - starts + 1
    if nbytes.max() > 10:
        bad = int(starts[np.argmax(nbytes > 10)])
        raise CorruptTrieFile(offset + bad, "varint longer than 10 bytes")
    values = np.zeros(count, dtype=np.uint64)
    for k in range(int(nbytes.max())):
        sel = nbytes > k
        values[sel] |= (window[starts[sel] + k] & 0x7F).astype(np.uint64) << np.uint64(7 * k)
    return values, offset + int(ends[-1]) + 1


def _read_varint(data: bytes, offset: int) -> tuple[int, int]:
    value = 0
    shift = 0
    start = offset
    while True:
        if offset >= len(data):
            raise CorruptTrieFile(start, "truncated varint")
        b = data[offset]
        offset += 1
        value |= (b & 0x7F) << shift
        if b < 0x80:
            return value, offset
        shift += 7
        if shift > 63:
            raise CorruptTrieFile(start, "varint longer than 10 bytes")


def serialize(trie: Trie) -> bytes:
    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION)]
    header = [
        _MODE_CODES[trie.mode],
        int(trie.include_redirects),
        trie.node_count,
        trie.name_count,
        len(trie.entities),
        len(trie.langs),
        len(trie.payload_entity),
    ]
    parts.append(_encode_varints(header))
    for table in (trie.entities, trie.langs):
        raws = [s.encode("utf-8") for s in table]
        sizes = _encode_varints([len(r) for r in raws])
        # interleave (size, bytes) pairs; sizes are split back out of the varint run
        cut = np.flatnonzero(np.frombuffer(sizes, dtype=np.uint8) < 0x80) + 1
        bounds = [0, *cut.tolist()]
        parts.extend(x for i, raw in enumerate(raws) for x in (sizes[bounds[i] : bounds[i + 1]], raw))
    parts.append(_encode_varints(trie.labels[1:]))
    parts.append(_encode_varints(trie.depths[1:]))
    parts.append(_encode_varints(np.diff(trie.payload_start)))
    parts.append(_encode_varints(trie.payload_entity))
    parts.append(_encode_varints(trie.payload_lang.astype(np.uint64) * 2 + trie.payload_redirect))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize(data: bytes) -> Trie:
    data = bytes(data)
    head = len(MAGIC) + 2
    if len(data) < head or data[: len(MAGIC)] != MAGIC:
        raise CorruptTrieFile(0, "bad magic; not a trie file")
    (version,) = struct.unpack_from("<H", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionMismatch("trie", version, FORMAT_VERSION)
    if len(data) < head + 4:
        raise CorruptTrieFile(len(data), "truncated before checksum")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptTrieFile(len(body), "checksum mismatch (truncated or damaged file)")

    off = head
    header = []
    for _ in range(7):
        value, off = _read_varint(body, off)
        header.append(value)
    mode_code, flags, n_nodes, n_names, n_entities, n_langs, n_entries = header
    if mode_code not in _CODE_MODES:
        raise CorruptTrieFile(head, f"unknown mode code {mode_code}")
    if n_nodes < 1:
        raise CorruptTrieFile(head, "node count must include the root")

    tables = []
    for count in (n_entities, n_langs):
        table = []
        for _ in range(count):
            size, off = _read_varint(body, off)
            if off + size > len(body):
                raise CorruptTrieFile(off, "truncated string table")
            try:
                table.append(body[off : off + size].decode("utf-8"))
            except UnicodeDecodeError:
                raise CorruptTrieFile(off, "invalid UTF-8 in string table") from None
            off += size
        tables.append(table)

    buf = np.frombuffer(body, dtype=np.uint8)
    labels, off = _decode_varints(buf, off, n_nodes - 1)
    depths, off = _decode_varints(buf, off, n_nodes - 1)
    sizes, off = _decode_varints(buf, off, n_nodes)
    ent, off = _decode_varints(buf, off, n_entries)
    lang_code, off = _decode_varints(buf, off, n_entries)
    if off != len(body):
        raise CorruptTrieFile(off, "trailing bytes after payload section")

    depths_all = np.zeros(n_nodes, dtype=np.int64)
    depths_all[1:] = depths
    if n_nodes > 1:
        steps = np.diff(depths_all)
        if depths_all[1:].min() < 1 or steps.max() > 1:
            raise CorruptTrieFile(head, "depth sequence is not a valid preorder")
        if labels.min() < TOKEN_OFFSET or labels.max() > np.iinfo(np.uint32).max:
            raise CorruptTrieFile(head, "node label out of range")
    payload_start = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(sizes.astype(np.int64), out=payload_start[1:])
    if int(payload_start[-1]) != n_entries or int(np.count_nonzero(sizes)) != n_names:
        raise CorruptTrieFile(head, "payload counts disagree with header")
    if n_entries and (int(ent.max()) >= n_entities or int(lang_code.max() >> np.uint64(1)) >= n_langs):
        raise CorruptTrieFile(head, "payload index outside string table")

    labels_all = np.zeros(n_nodes, dtype=np.uint32)
    labels_all[1:] = labels
    parents = _parents_from_preorder(depths_all.astype(np.int32))
    trie = Trie(
        labels_all,
        depths_all,
        parents,
        payload_start,
        ent.astype(np.int32),
        (lang_code >> np.uint64(1)).astype(np.int32),
        (lang_code & np.uint64(1)).astype(bool),
        tables[0],
        tables[1],
        _CODE_MODES[mode_code],
        bool(flags & 1),
    )
    _check_structure(trie)
    return trie


def _check_structure(trie: Trie):
    if trie.node_count == 1:
        return
    # siblings must be strictly ascending and every leaf must end an identifier
    same_parent = np.diff(trie.parents[trie.child_nodes]) == 0
    if (np.diff(trie.child_labels.astype(np.int64))[same_parent] <= 0).any():
        raise CorruptTrieFile(0, "children are not in strictly ascending token order")
    leaves = np.diff(trie.child_start) == 0
    leaves[0] = False
    if (leaves & ~trie._terminal).any():
        raise CorruptTrieFile(0, "leaf node without payload")
