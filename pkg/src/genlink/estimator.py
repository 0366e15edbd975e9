"""scikit-learn style wrapper around the whole linking pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .alias import build_alias_table
from .codec import RenderMode
from .corpus import DEFAULT_MAX_INPUT_TOKENS, training_pairs
from .decoding import DEFAULT_BEAMS, DEFAULT_LENGTH_PENALTY, DEFAULT_MAX_STEPS, BeamConfig
from .errors import NoHypotheses
from .evaluation import EvalReport, accuracy
from .kb import KnowledgeBase
from .ranking import DEFAULT_ALPHA, LinkConfig, link
from .scorer import ReferenceScorer
from .trie import build_from_kb
from .validation import check_gold_in_kb, check_mentions


class EntityLinker(ClassifierMixin, BaseEstimator):
    """Generative entity linker over a fixed knowledge base.

    ``fit`` builds the identifier trie, the alias table and the reference
    scorer from training mentions; ``predict`` decodes one entity id per
    mention. Mentions with no reachable identifier get ``None``.

    Parameters
    ----------
    kb : KnowledgeBase
    mode : {"name-first", "lang-first", "canonical"}
    include_redirects : bool
        Add redirect titles to the trie as extra identifiers.
    use_candidates, use_marginalization : bool
        Alias-table restriction and cross-language marginalization.
    alpha : float
        Length-normalization exponent used by marginalization.
    beams, length_penalty, max_steps : beam search settings.
    top_k : int or None
        Keep only the most frequent alias-table candidates.
    max_input_tokens : int
    lambda_copy, add_k, copy_smoothing : reference scorer settings.
    seed : int
        Seed for sampling alternative-language training targets.
    """

    def __init__(
        self,
        kb=None,
        mode="name-first",
        include_redirects=True,
        use_candidates=False,
        use_marginalization=False,
        alpha=DEFAULT_ALPHA,
        beams=DEFAULT_BEAMS,
        length_penalty=DEFAULT_LENGTH_PENALTY,
        max_steps=DEFAULT_MAX_STEPS,
        top_k=None,
        max_input_tokens=DEFAULT_MAX_INPUT_TOKENS,
        lambda_copy=0.5,
        add_k=1.0,
        copy_smoothing=1e-3,
        seed=17,
    ):
        self.kb = kb
        self.mode = mode
        self.include_redirects = include_redirects
        self.use_candidates = use_candidates
        self.use_marginalization = use_marginalization
        self.alpha = alpha
        self.beams = beams
        self.length_penalty = length_penalty
        self.max_steps = max_steps
        self.top_k = top_k
        self.max_input_tokens = max_input_tokens
        self.lambda_copy = lambda_copy
        self.add_k = add_k
        self.copy_smoothing = copy_smoothing
        self.seed = seed

    def _link_config(self) -> LinkConfig:
        return LinkConfig(
            mode=self.mode,
            use_candidates=self.use_candidates,
            use_marginalization=self.use_marginalization,
            alpha=self.alpha,
            beam=BeamConfig(self.beams, self.length_penalty, self.max_steps),
            top_k=self.top_k,
            max_input_tokens=self.max_input_tokens,
        )

    def fit(self, X, y=None):
        if not isinstance(self.kb, KnowledgeBase):
            raise TypeError("kb must be a KnowledgeBase")
        train = check_mentions(X, y)
        check_gold_in_kb(train, self.kb)
        mode = RenderMode.parse(self.mode)
        self._link_config()  # validates the decoding settings up front

        self.trie_ = build_from_kb(self.kb, mode, self.include_redirects)
        self.alias_table_ = build_alias_table(((m.mention, m.gold) for m in train), self.kb)
        pairs = training_pairs(train, self.kb, mode, self.seed, self.max_input_tokens)
        self.scorer_ = ReferenceScorer(self.lambda_copy, self.add_k, self.copy_smoothing).fit(
            pairs, extra_vocab=self.trie_.token_alphabet()
        )
        self.classes_ = np.array(sorted(self.kb), dtype=object)
        return self

    def link_one(self, instance):
        check_is_fitted(self, "scorer_")
        return link(instance, self.kb, self.trie_, self.alias_table_, self.scorer_, self._link_config())

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "scorer_")
        out = []
        for m in check_mentions(X):
            try:
                out.append(self.link_one(m).prediction)
            except NoHypotheses:
                out.append(None)
        return np.array(out, dtype=object)

    def evaluate(self, X, y=None) -> EvalReport:
        instances = check_mentions(X, y)
        return accuracy(zip(instances, self.predict(instances)))

    def score(self, X, y, sample_weight=None) -> float:
        """Micro accuracy (exact entity-id match)."""
        hits = [p is not None and p == str(g) for p, g in zip(self.predict(X), y)]
        return float(np.average(hits, weights=sample_weight))
