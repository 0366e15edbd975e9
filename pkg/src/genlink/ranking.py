"""From decoded identifiers to ranked entities, and the ``link`` entry point."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .alias import AliasTable
from .codec import RenderMode, detokenize
from .corpus import DEFAULT_MAX_INPUT_TOKENS, MentionInstance, build_input
from .decoding import BeamConfig, Hypothesis, beam_search
from .errors import NoHypotheses, UnfinishedHypothesis
from .kb import KnowledgeBase
from .scorer import Scorer
from .trie import Trie, restrict

DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class LinkConfig:
    mode: RenderMode = RenderMode.NAME_FIRST
    use_candidates: bool = False
    use_marginalization: bool = False
    alpha: float = DEFAULT_ALPHA
    beam: BeamConfig = field(default_factory=BeamConfig)
    top_k: Optional[int] = None
    max_input_tokens: int = DEFAULT_MAX_INPUT_TOKENS

    def __post_init__(self):
        object.__setattr__(self, "mode", RenderMode.parse(self.mode))
        if not float(self.alpha) >= 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.top_k is not None and int(self.top_k) < 1:
            raise ValueError(f"top_k must be positive, got {self.top_k}")


@dataclass(frozen=True)
class EntityScore:
    entity: str
    score: float
    supporting: tuple  # ((identifier, logprob, length), ...)


class LinkResult(NamedTuple):
    prediction: str
    ranking: list


def _entities_for(payload: frozenset, mode: Optional[RenderMode]) -> list[str]:
    """Entities an identifier stands for.

    Canonical strings may be homographs across languages and every entity is
    kept. Language-qualified strings are unique among primary titles, so a
    primary entry wins; redirect-only collisions stay ambiguous.
    """
    if mode is None or mode is RenderMode.CANONICAL:
        return sorted({e for e, _, _ in payload})
    primary = {e for e, _, r in payload if not r}
    return sorted(primary or {e for e, _, _ in payload})


def _supports(hyps, trie: Trie):
    per_entity = defaultdict(list)
    for hyp, ranked in hyps:
        if not hyp.finished:
            raise UnfinishedHypothesis(hyp.tokens)
        ident = detokenize(hyp.tokens)
        for eid in _entities_for(trie.payload(hyp.tokens), trie.mode):
            per_entity[eid].append((ident, hyp.logprob, hyp.length, ranked))
    return per_entity


def _sorted(scores: list[EntityScore]) -> list[EntityScore]:
    return sorted(scores, key=lambda s: (-s.score, s.entity))


def rank_plain(hyps: Sequence[tuple[Hypothesis, float]], trie: Trie) -> list[EntityScore]:
    """Entity score = best ranked score among the identifiers pointing to it."""
    out = []
    for eid, support in _supports(hyps, trie).items():
        support.sort(key=lambda s: (-s[3], s[0]))
        out.append(EntityScore(eid, support[0][3], tuple(s[:3] for s in support)))
    return _sorted(out)


def logsumexp(values: Sequence[float]) -> float:
    top = max(values)
    if top == -math.inf:
        return top
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def rank_marginalized(hyps: Sequence[tuple[Hypothesis, float]], trie: Trie, alpha: float = DEFAULT_ALPHA) -> list[EntityScore]:
    """Entity score = logsumexp of ``logprob / length**alpha`` over its identifiers.

    ``length`` counts generated tokens including EOS; ``alpha = 0`` sums the
    raw sequence probabilities.
    """
    if not alpha >= 0.0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    out = []
    for eid, support in _supports(hyps, trie).items():
        terms = [lp if alpha == 0.0 else lp / (n**alpha) for _, lp, n, _ in support]
        support = sorted(zip(terms, support), key=lambda ts: (-ts[0], ts[1][0]))
        out.append(EntityScore(eid, logsumexp(sorted(terms, reverse=True)), tuple(s[:3] for _, s in support)))
    return _sorted(out)


def candidate_set(inst: MentionInstance, alias_table: Optional[AliasTable], cfg: LinkConfig) -> list[str]:
    if not cfg.use_candidates or alias_table is None:
        return []
    return [e for e, _ in alias_table.candidates(inst.mention, cfg.top_k)]


def link(
    inst: MentionInstance,
    kb: KnowledgeBase,
    full_trie: Trie,
    alias_table: Optional[AliasTable],
    scorer: Scorer,
    cfg: LinkConfig = LinkConfig(),
) -> LinkResult:
    """Link one mention.

    With candidates enabled and a non-empty alias-table hit, decoding runs
    over a trie of the candidates' identifiers only; otherwise the whole KB
    trie is searched.
    """
    inp = build_input(inst, cfg.max_input_tokens)
    candidates = candidate_set(inst, alias_table, cfg)
    if candidates:
        trie = restrict(kb, candidates, full_trie.mode or cfg.mode, full_trie.include_redirects)
    else:
        trie = full_trie
    hyps = beam_search(scorer, trie, inp, cfg.beam)
    if not hyps:
        raise NoHypotheses()
    if cfg.use_marginalization:
        ranking = rank_marginalized(hyps, trie, cfg.alpha)
    else:
        ranking = rank_plain(hyps, trie)
    return LinkResult(ranking[0].entity, ranking)
