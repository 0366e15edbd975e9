"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Optional, Sequence

from .corpus import MentionInstance
from .kb import KnowledgeBase


def as_instance(x, index: int = 0) -> MentionInstance:
    """Coerce ``x`` to a :class:`MentionInstance`.

    Accepts an instance, a mapping with ``lang/left/mention/right[/gold]``
    keys, or a 4- or 5-tuple in that order.
    """
    if isinstance(x, MentionInstance):
        return x
    if isinstance(x, dict):
        try:
            return MentionInstance(x["lang"], x.get("left", ""), x["mention"], x.get("right", ""), x.get("gold"))
        except KeyError as exc:
            raise ValueError(f"sample {index}: missing field {exc}") from None
    if isinstance(x, (tuple, list)) and len(x) in (4, 5):
        return MentionInstance(*x)
    raise TypeError(f"sample {index}: expected a MentionInstance, mapping or 4/5-tuple, got {type(x).__name__}")


def check_mentions(X, y: Optional[Sequence] = None) -> list[MentionInstance]:
    """Validate a batch of mentions, attaching ``y`` as gold ids when given."""
    if isinstance(X, (str, bytes)):
        raise TypeError("X must be a sequence of mentions, not a string")
    instances = [as_instance(x, i) for i, x in enumerate(X)]
    if not instances:
        raise ValueError("X contains no mentions")
    if y is not None:
        y = list(y)
        if len(y) != len(instances):
            raise ValueError(f"X has {len(instances)} mentions but y has {len(y)} labels")
        instances = [MentionInstance(m.lang, m.left, m.mention, m.right, str(g)) for m, g in zip(instances, y)]
    return instances


def check_gold_in_kb(instances: Sequence[MentionInstance], kb: KnowledgeBase):
    for i, m in enumerate(instances):
        if m.gold is None:
            raise ValueError(f"sample {i}: no gold entity")
        if m.gold not in kb:
            raise ValueError(f"sample {i}: gold entity {m.gold!r} is not in the KB")
