"""Trie-constrained beam search and the exhaustive ranking oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .codec import EOS
from .errors import EmptyTrie, TooManyIdentifiers
from .scorer import Scorer, ScorerInput, sequence_logprob
from .trie import Trie

DEFAULT_BEAMS = 10
DEFAULT_LENGTH_PENALTY = 1.0
DEFAULT_MAX_STEPS = 32
EXHAUSTIVE_BOUND = 10_000


@dataclass(frozen=True)
class BeamConfig:
    beams: int = DEFAULT_BEAMS
    length_penalty: float = DEFAULT_LENGTH_PENALTY
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if int(self.beams) < 1:
            raise ValueError(f"beams must be positive, got {self.beams}")
        if not float(self.length_penalty) >= 0.0:
            raise ValueError(f"length_penalty must be >= 0, got {self.length_penalty}")
        if int(self.max_steps) < 1:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple
    logprob: float
    finished: bool

    @property
    def length(self) -> int:
        """Generated tokens, counting EOS for finished hypotheses."""
        return len(self.tokens) + (1 if self.finished else 0)


def length_normalize(logprob: float, length: int, exponent: float) -> float:
    if exponent == 0.0:
        return logprob
    return logprob / (length**exponent)


def _order_key(tokens: tuple, logprob: float, finished: bool):
    # EOS (id 2) sorts below every text token, so a finished sequence
    # precedes its own extensions on equal score
    return (-logprob, tokens + (EOS,) if finished else tokens)


def beam_search(scorer: Scorer, trie: Trie, inp: ScorerInput, cfg: BeamConfig = BeamConfig()):
    """Top finished identifiers under the trie constraint.

    Each step expands the live hypotheses over the trie children of their
    prefix (plus EOS at terminal nodes), scoring tokens with the scorer's
    unconstrained log-probabilities. The ``beams - n_finished`` best
    expansions by cumulative log-probability survive; those ending in EOS
    are finished, the rest stay live. Hypotheses still live after
    ``max_steps`` tokens are dropped.

    Returns ``[(Hypothesis, ranked_score), ...]`` sorted by ranked score
    ``logprob / length ** length_penalty`` descending, ties by token
    sequence.
    """
    if trie.name_count == 0:
        raise EmptyTrie()
    k = int(cfg.beams)
    live = [((), 0.0, 0)]  # (tokens, logprob, node)
    finished: list[Hypothesis] = []

    for _ in range(int(cfg.max_steps)):
        if not live or len(finished) >= k:
            break
        expansions = []
        for tokens, logprob, node in live:
            labels, nodes = trie.children(node)
            if trie.is_terminal(node):
                labels.append(EOS)
                nodes.append(-1)
            step = scorer.token_logprobs(inp, tokens, labels)
            for tok, child, lp in zip(labels, nodes, step):
                if lp == -math.inf:
                    continue
                total = logprob + lp
                if tok == EOS:
                    expansions.append((_order_key(tokens, total, True), tokens, total, -1))
                else:
                    new = tokens + (tok,)
                    expansions.append((_order_key(new, total, False), new, total, child))
        expansions.sort(key=lambda e: e[0])
        live = []
        for _, tokens, total, child in expansions[: k - len(finished)]:
            if child < 0:
                finished.append(Hypothesis(tokens, total, True))
            else:
                live.append((tokens, total, child))

    lp = float(cfg.length_penalty)
    ranked = [(h, length_normalize(h.logprob, h.length, lp)) for h in finished]
    ranked.sort(key=lambda hs: (-hs[1], hs[0].tokens))
    return ranked


def exhaustive_rank(scorer: Scorer, identifiers: Sequence[Sequence[int]], inp: ScorerInput, bound: int = EXHAUSTIVE_BOUND):
    """Score every identifier with the full chain rule and sort descending.

    This is the brute-force reference the beam search approximates; ties
    are broken by token sequence as in :func:`beam_search`.
    """
    identifiers = [tuple(y) for y in identifiers]
    if len(identifiers) > bound:
        raise TooManyIdentifiers(len(identifiers), bound)
    scored = [(y, sequence_logprob(scorer, inp, y)) for y in identifiers]
    scored.sort(key=lambda ys: (-ys[1], ys[0]))
    return scored
