"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`GenlinkError`
so callers (and the CLI) can catch one type and print a one-line diagnostic.
"""


class GenlinkError(Exception):
    """Base class for all package errors."""


# -- knowledge base ---------------------------------------------------------


class KBError(GenlinkError):
    pass


class DuplicateEntity(KBError):
    def __init__(self, entity_id):
        super().__init__(f"duplicate entity id {entity_id!r}")
        self.entity_id = entity_id


class DuplicateTitle(KBError):
    def __init__(self, name, lang, entity_ids):
        ids = ", ".join(sorted(entity_ids))
        super().__init__(f"primary title {name!r} in language {lang!r} is shared by {ids}")
        self.name = name
        self.lang = lang
        self.entity_ids = entity_ids


class MalformedRecord(KBError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownEntity(GenlinkError, KeyError):
    def __init__(self, entity_id):
        super().__init__(entity_id)
        self.entity_id = entity_id

    def __str__(self):
        return f"unknown entity {self.entity_id!r}"


class EntityHasNoNames(KBError):
    def __init__(self, entity_id):
        super().__init__(f"entity {entity_id!r} has no names")
        self.entity_id = entity_id


# -- identifiers and tokens -------------------------------------------------


class SeparatorInName(GenlinkError, ValueError):
    def __init__(self, name):
        super().__init__(f"name contains the identifier separator: {name!r}")
        self.name = name


class UnparseableIdentifier(GenlinkError, ValueError):
    def __init__(self, s, mode):
        super().__init__(f"cannot parse {s!r} as a {mode} identifier")
        self.s = s
        self.mode = mode


class ReservedTokenInSequence(GenlinkError, ValueError):
    def __init__(self, token):
        super().__init__(f"reserved token id {token} inside a text sequence")
        self.token = token


# -- trie -------------------------------------------------------------------


class EmptySequence(GenlinkError, ValueError):
    def __init__(self):
        super().__init__("cannot insert an empty token sequence")


class NotAnIdentifier(GenlinkError, KeyError):
    def __init__(self, seq):
        super().__init__(tuple(seq))
        self.seq = tuple(seq)

    def __str__(self):
        return f"token sequence is not a complete identifier: {self.seq!r}"


class CorruptTrieFile(GenlinkError):
    def __init__(self, offset, reason):
        super().__init__(f"corrupt trie data at byte {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class VersionMismatch(GenlinkError):
    def __init__(self, kind, found, expected):
        super().__init__(f"{kind} format version {found} is not supported (expected {expected})")
        self.kind = kind
        self.found = found
        self.expected = expected


class CorruptArtifact(GenlinkError):
    pass


# -- scoring and decoding ---------------------------------------------------


class UntrainedModel(GenlinkError):
    def __init__(self):
        super().__init__("scorer has no vocabulary; call fit() first")


class TokenOutsideVocab(GenlinkError, ValueError):
    def __init__(self, token):
        super().__init__(f"token {token} is outside the scorer vocabulary")
        self.token = token


class EmptyCorpus(GenlinkError, ValueError):
    def __init__(self):
        super().__init__("no training pairs")


class EmptyTrie(GenlinkError, ValueError):
    def __init__(self):
        super().__init__("cannot decode over an empty trie")


class TooManyIdentifiers(GenlinkError, ValueError):
    def __init__(self, n, bound):
        super().__init__(f"{n} identifiers exceed the exhaustive ranking bound of {bound}")
        self.n = n
        self.bound = bound


class UnfinishedHypothesis(GenlinkError, ValueError):
    def __init__(self, tokens):
        super().__init__(f"hypothesis {tuple(tokens)!r} is not finished")


class NoHypotheses(GenlinkError):
    def __init__(self):
        super().__init__("beam search produced no finished hypothesis within max_steps")


# -- corpus and evaluation --------------------------------------------------


class MalformedLine(GenlinkError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MentionTooLong(GenlinkError, ValueError):
    def __init__(self, n_tokens, budget):
        super().__init__(f"marked mention needs {n_tokens} tokens, budget is {budget}")
        self.n_tokens = n_tokens
        self.budget = budget


class MissingGold(GenlinkError, ValueError):
    def __init__(self, index=None):
        where = "" if index is None else f" (instance {index})"
        super().__init__(f"instance has no gold entity{where}")
