"""Test doubles and brute-force oracles."""

import math
import random

from genlink.codec import EOS, tokenize
from genlink.kb import EntityRecord, KnowledgeBase
from genlink.scorer import ScorerInput

EMPTY_INPUT = ScorerInput((), ())


def tok(s):
    return tokenize(s)


class UniformScorer:
    """Equal probability for every vocabulary token and EOS."""

    def __init__(self, vocab):
        self.support = sorted(set(vocab) | {EOS})
        self.lp = -math.log(len(self.support))

    def next_logprobs(self, inp, prefix):
        return {t: self.lp for t in self.support}

    def token_logprobs(self, inp, prefix, tokens):
        s = set(self.support)
        return [self.lp if t in s else -math.inf for t in tokens]


class TableScorer:
    """Prefix-keyed log-probabilities; unknown prefixes fall back to a default row."""

    def __init__(self, rows, default):
        self.rows = {tuple(k): dict(v) for k, v in rows.items()}
        self.default = dict(default)

    def next_logprobs(self, inp, prefix):
        return self.rows.get(tuple(prefix), self.default)

    def token_logprobs(self, inp, prefix, tokens):
        row = self.next_logprobs(inp, prefix)
        return [row.get(t, -math.inf) for t in tokens]


class RandomScorer:
    """Deterministic pseudo-random proper distributions keyed by prefix."""

    def __init__(self, vocab, seed=0, temperature=1.0):
        self.support = sorted(set(vocab) | {EOS})
        self.seed = seed
        self.temperature = temperature
        self._cache = {}

    def next_logprobs(self, inp, prefix):
        key = tuple(prefix)
        if key not in self._cache:
            rng = random.Random(hash((self.seed, key)))
            logits = [rng.gauss(0.0, 1.0) / self.temperature for _ in self.support]
            top = max(logits)
            z = top + math.log(math.fsum(math.exp(x - top) for x in logits))
            self._cache[key] = {t: x - z for t, x in zip(self.support, logits)}
        return self._cache[key]

    def token_logprobs(self, inp, prefix, tokens):
        row = self.next_logprobs(inp, prefix)
        return [row.get(t, -math.inf) for t in tokens]


def distinct_prefix_count(seqs):
    """Brute-force node count: every distinct non-empty prefix plus the root."""
    prefixes = set()
    for s in seqs:
        for i in range(1, len(s) + 1):
            prefixes.add(tuple(s[:i]))
    return len(prefixes) + 1


def random_names(rng, n, alphabet="abc", max_len=6):
    names = set()
    while len(names) < n:
        names.add("".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len))))
    return sorted(names)


def small_kb():
    return KnowledgeBase(
        [
            EntityRecord.create("Q1", {"en": "Rome", "it": "Roma"}, {"en": ["Eternal City"]}, {"en": 5, "it": 3}),
            EntityRecord.create("Q2", {"en": "Paris", "fr": "Paris"}, {}, {"fr": 4}),
            EntityRecord.create("Q3", {"de": "Rom"}, {}, {}),
            EntityRecord.create("Q4", {"en": "Paris Hilton"}, {"en": ["Paris"]}, {"en": 1}),
        ]
    )
