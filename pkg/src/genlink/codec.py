"""Rendering of (language, name) identifiers and the reference tokenizer.

An identifier is rendered to the string the decoder generates. Three layouts
are supported::

    canonical    Scottish Green Party
    name-first   Scottish Green Party >> de
    lang-first   de >> Scottish Green Party

The tokenizer is codepoint level: every Unicode scalar value ``c`` becomes
token ``c + 3``; ids 0, 1 and 2 are reserved for PAD, BOS and EOS and never
appear in tokenized text.
"""

from __future__ import annotations

import enum
import re
from typing import Iterable, Optional, Sequence

from .errors import ReservedTokenInSequence, SeparatorInName, UnparseableIdentifier

SEPARATOR = " >> "

PAD = 0
BOS = 1
EOS = 2
TOKEN_OFFSET = 3

_LANG_RE = re.compile(r"^[a-z][a-z-]{1,11}$")


class RenderMode(str, enum.Enum):
    CANONICAL = "canonical"
    LANG_FIRST = "lang-first"
    NAME_FIRST = "name-first"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, value: "RenderMode | str") -> "RenderMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown render mode {value!r}; choose one of {choices}") from None


def is_language_code(value: str) -> bool:
    return bool(_LANG_RE.match(value))


def check_name(name: str) -> str:
    if not name:
        raise ValueError("identifier name must be non-empty")
    if SEPARATOR in name:
        raise SeparatorInName(name)
    return name


def render(lang: str, name: str, mode: RenderMode | str) -> str:
    """Render one identifier under ``mode``."""
    mode = RenderMode.parse(mode)
    check_name(name)
    if mode is RenderMode.CANONICAL:
        return name
    if mode is RenderMode.NAME_FIRST:
        return name + SEPARATOR + lang
    return lang + SEPARATOR + name


def parse(s: str, mode: RenderMode | str) -> tuple[Optional[str], str]:
    """Invert :func:`render`.

    Name-first identifiers split on the last separator, lang-first ones on the
    first, so a separator can only ever be ambiguous inside the name, which
    :func:`render` already refuses.
    """
    mode = RenderMode.parse(mode)
    if mode is RenderMode.CANONICAL:
        if not s:
            raise UnparseableIdentifier(s, mode)
        return None, s
    if mode is RenderMode.NAME_FIRST:
        name, sep, lang = s.rpartition(SEPARATOR)
    else:
        lang, sep, name = s.partition(SEPARATOR)
    if not sep or not name or not is_language_code(lang):
        raise UnparseableIdentifier(s, mode)
    return lang, name


def tokenize(s: str) -> tuple[int, ...]:
    return tuple(ord(c) + TOKEN_OFFSET for c in s)


def detokenize(tokens: Iterable[int]) -> str:
    chars = []
    for t in tokens:
        if t < TOKEN_OFFSET:
            raise ReservedTokenInSequence(t)
        chars.append(chr(t - TOKEN_OFFSET))
    return "".join(chars)


def encode_identifier(lang: str, name: str, mode: RenderMode | str) -> tuple[int, ...]:
    return tokenize(render(lang, name, mode))


def decode_identifier(tokens: Sequence[int], mode: RenderMode | str) -> tuple[Optional[str], str]:
    return parse(detokenize(tokens), mode)
