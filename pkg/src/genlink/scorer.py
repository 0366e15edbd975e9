"""Autoregressive scoring of identifiers given a marked-up mention.

Any object implementing :class:`Scorer` can drive the decoder. The bundled
:class:`ReferenceScorer` mixes two distributions per step::

    p(t | prefix, x) = lambda_copy * p_copy(t) + (1 - lambda_copy) * p_bigram(t | last token)

``p_bigram`` is an add-k smoothed bigram model over target identifiers.
``p_copy`` points at the token that continues the longest suffix of the
prefix found inside the mention (EOS once the match reaches the mention's
end), smoothed by ``copy_smoothing``; when nothing continues the copy, that
step falls back to the bigram alone. This gives the string-copy bias that
makes generative linking work for unseen entities while staying exactly
computable.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Protocol, Sequence, runtime_checkable

from sklearn.base import BaseEstimator

from .codec import BOS, EOS, TOKEN_OFFSET
from .errors import EmptyCorpus, TokenOutsideVocab, UntrainedModel


@dataclass(frozen=True)
class ScorerInput:
    """Tokenized model input: marked-up context plus the raw mention."""

    context_tokens: tuple
    mention_tokens: tuple


@runtime_checkable
class Scorer(Protocol):
    def next_logprobs(self, inp: ScorerInput, prefix: Sequence[int]) -> dict[int, float]:
        """Natural-log distribution over the next token (EOS included)."""

    def token_logprobs(self, inp: ScorerInput, prefix: Sequence[int], tokens: Sequence[int]) -> list[float]:
        """Log-probabilities of ``tokens`` only; ``-inf`` outside the vocabulary."""


def sequence_logprob(scorer: Scorer, inp: ScorerInput, target: Sequence[int]) -> float:
    """Log of the chain-rule product over ``target`` followed by EOS."""
    target = tuple(target)
    if not target:
        raise ValueError("target must be non-empty")
    total = 0.0
    for i, tok in enumerate(target + (EOS,)):
        dist = scorer.next_logprobs(inp, target[:i])
        if tok not in dist:
            raise TokenOutsideVocab(tok)
        total += dist[tok]
    return total


@lru_cache(maxsize=4096)
def _substring_ends(mention: tuple) -> dict:
    """Map each substring of ``mention`` to the end of its earliest occurrence."""
    ends = {}
    n = len(mention)
    for i in range(n):
        for j in range(i + 1, n + 1):
            ends.setdefault(mention[i:j], j)
    return ends


def copy_target(mention: Sequence[int], prefix: Sequence[int]) -> Optional[int]:
    """Token that continues copying ``mention`` after ``prefix``.

    With an empty prefix this is the mention's first token. Otherwise the
    longest suffix of ``prefix`` occurring in the mention is located (earliest
    occurrence) and the following token returned, or EOS when the occurrence
    ends the mention. ``None`` when no suffix matches.
    """
    mention = tuple(mention)
    if not mention:
        return None
    if not prefix:
        return mention[0]
    ends = _substring_ends(mention)
    prefix = tuple(prefix)
    for size in range(min(len(prefix), len(mention)), 0, -1):
        end = ends.get(prefix[-size:])
        if end is not None:
            return mention[end] if end < len(mention) else EOS
    return None


class ReferenceScorer(BaseEstimator):
    """Copy-affinity plus smoothed-bigram scorer.

    Parameters
    ----------
    lambda_copy : float in [0, 1]
        Weight of the copy distribution.
    add_k : float > 0
        Additive smoothing of the bigram distribution.
    copy_smoothing : float >= 0
        Additive smoothing of the copy distribution; the target token holds
        one pseudo-count.
    """

    def __init__(self, lambda_copy=0.5, add_k=1.0, copy_smoothing=1e-3):
        self.lambda_copy = lambda_copy
        self.add_k = add_k
        self.copy_smoothing = copy_smoothing

    # -- training --------------------------------------------------------------

    def fit(self, pairs: Iterable[tuple], extra_vocab: Iterable[int] = ()):
        """Count BOS -> y1 -> ... -> yN -> EOS transitions over target sequences.

        ``pairs`` yields ``(ScorerInput, target_tokens)``. ``extra_vocab``
        adds tokens that may be generated without having been observed (for
        instance the full identifier alphabet of a trie).
        """
        self._check_hyperparameters()
        bigrams: dict[int, dict[int, int]] = defaultdict(lambda: defaultdict(int))
        seen = {BOS, EOS}
        n_pairs = 0
        for _, target in pairs:
            target = tuple(int(t) for t in target)
            if not target:
                raise ValueError("training target must be non-empty")
            if min(target) < TOKEN_OFFSET:
                raise ValueError("training target contains a reserved token")
            prev = BOS
            for tok in target + (EOS,):
                bigrams[prev][tok] += 1
                prev = tok
            seen.update(target)
            n_pairs += 1
        if n_pairs == 0:
            raise EmptyCorpus()
        for tok in extra_vocab:
            tok = int(tok)
            if tok < TOKEN_OFFSET:
                raise ValueError(f"extra vocabulary contains reserved token {tok}")
            seen.add(tok)
        self._set_state(seen, {p: dict(row) for p, row in bigrams.items()})
        return self

    def _check_hyperparameters(self):
        if not 0.0 <= float(self.lambda_copy) <= 1.0:
            raise ValueError(f"lambda_copy must lie in [0, 1], got {self.lambda_copy}")
        if not float(self.add_k) > 0.0:
            raise ValueError(f"add_k must be positive, got {self.add_k}")
        if not float(self.copy_smoothing) >= 0.0:
            raise ValueError(f"copy_smoothing must be non-negative, got {self.copy_smoothing}")

    def _set_state(self, vocab, bigrams):
        self.vocab_ = frozenset(vocab) | {BOS, EOS}
        self.support_ = tuple(sorted(self.vocab_ - {BOS}))
        self._support_set = frozenset(self.support_)
        self.bigram_counts_ = {p: dict(sorted(row.items())) for p, row in sorted(bigrams.items())}
        self._row_totals = {p: sum(row.values()) for p, row in self.bigram_counts_.items()}

    @classmethod
    def from_counts(cls, vocab, bigram_counts=None, **params) -> "ReferenceScorer":
        """Scorer with a declared vocabulary and given (possibly empty) counts."""
        model = cls(**params)
        model._check_hyperparameters()
        rows: dict[int, dict[int, int]] = defaultdict(dict)
        for (prev, tok), count in dict(bigram_counts or {}).items():
            if count < 0:
                raise ValueError("bigram counts must be non-negative")
            rows[int(prev)][int(tok)] = int(count)
        vocab = set(int(t) for t in vocab)
        for prev, row in rows.items():
            vocab.add(prev)
            vocab.update(row)
        model._set_state(vocab, rows)
        return model

    @property
    def unigram_counts_(self) -> dict[int, int]:
        out: dict[int, int] = defaultdict(int)
        for row in self.bigram_counts_.values():
            for tok, c in row.items():
                out[tok] += c
        return dict(sorted(out.items()))

    def _require_fitted(self):
        if not hasattr(self, "support_"):
            raise UntrainedModel()

    # -- scoring -----------------------------------------------------------------

    def token_logprobs(self, inp: ScorerInput, prefix: Sequence[int], tokens: Sequence[int]) -> list[float]:
        self._require_fitted()
        prev = prefix[-1] if prefix else BOS
        row = self.bigram_counts_.get(prev, {})
        k = float(self.add_k)
        v = len(self.support_)
        bigram_norm = self._row_totals.get(prev, 0) + k * v

        lam = float(self.lambda_copy)
        target = copy_target(inp.mention_tokens, prefix)
        if target is None or target not in self._support_set:
            lam = 0.0
        eps = float(self.copy_smoothing)
        copy_norm = 1.0 + eps * v

        support = self._support_set
        out = []
        for tok in tokens:
            if tok not in support:
                out.append(-math.inf)
                continue
            p = (1.0 - lam) * (row.get(tok, 0) + k) / bigram_norm
            if lam:
                p += lam * ((1.0 if tok == target else 0.0) + eps) / copy_norm
            out.append(math.log(p) if p > 0.0 else -math.inf)
        return out

    def next_logprobs(self, inp: ScorerInput, prefix: Sequence[int]) -> dict[int, float]:
        self._require_fitted()
        return dict(zip(self.support_, self.token_logprobs(inp, prefix, self.support_)))

    def sequence_logprob(self, inp: ScorerInput, target: Sequence[int]) -> float:
        return sequence_logprob(self, inp, target)

    # -- persistence -----------------------------------------------------------

    def to_json(self) -> dict:
        self._require_fitted()
        return {
            "lambda_copy": float(self.lambda_copy),
            "add_k": float(self.add_k),
            "copy_smoothing": float(self.copy_smoothing),
            "vocab": sorted(self.vocab_),
            "bigrams": [[p, t, c] for p, row in self.bigram_counts_.items() for t, c in row.items()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReferenceScorer":
        return cls.from_counts(
            obj["vocab"],
            {(p, t): c for p, t, c in obj["bigrams"]},
            lambda_copy=obj["lambda_copy"],
            add_k=obj["add_k"],
            copy_smoothing=obj["copy_smoothing"],
        )


def train_reference(pairs, lambda_copy=0.5, add_k=1.0, copy_smoothing=1e-3, extra_vocab=()) -> ReferenceScorer:
    return ReferenceScorer(lambda_copy, add_k, copy_smoothing).fit(pairs, extra_vocab)
