"""Turning rule votes into one speaker per utterance."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .errors import log_event
from .mentions import CharacterEntity
from .quotes import Utterance
from .rules import CONTINUATION, DIRECT, FOR, RULE_PRIORITY, Vote, dedupe

logger = logging.getLogger(__name__)

_GENDERED = {"he": "male", "him": "male", "his": "male", "himself": "male",
             "she": "female", "her": "female", "hers": "female", "herself": "female"}


@dataclass
class Attribution:
    utt_id: str
    speaker: str | None = None
    tally: dict[str, int] = field(default_factory=dict)
    decided_by: tuple[str, ...] = ()
    confidence: int = 0


def tally_votes(votes: Iterable[Vote]) -> dict[str, int]:
    tally: dict[str, int] = {}
    for v in votes:
        tally[v.entity_id] = tally.get(v.entity_id, 0) + (1 if v.polarity == FOR else -1)
    return tally


def decide(utt_id: str, votes: Sequence[Vote], allowed: set[str] | None = None,
           proximity: Mapping[str, int] | None = None) -> Attribution:
    """Strict maximum of net votes, above zero.

    Ties go to the entity whose supporting votes come from the
    highest-priority rule (direct > coref > alternation), then to the entity
    mentioned closest to the utterance; a remaining tie stays unattributed.
    """
    tally = tally_votes(votes)
    support: dict[str, int] = {}
    for v in votes:
        if v.polarity == FOR:
            support[v.entity_id] = max(support.get(v.entity_id, 0), RULE_PRIORITY.get(v.rule, 0))
    contenders = [e for e, n in tally.items() if n > 0 and (allowed is None or e in allowed)]
    if not contenders:
        return Attribution(utt_id, None, tally)
    best = max(tally[e] for e in contenders)
    top = [e for e in contenders if tally[e] == best]
    if len(top) > 1:
        prio = max(support.get(e, 0) for e in top)
        top = [e for e in top if support.get(e, 0) == prio]
    if len(top) > 1 and proximity:
        near = min(proximity.get(e, float("inf")) for e in top)
        top = [e for e in top if proximity.get(e, float("inf")) == near]
    if len(top) != 1:
        return Attribution(utt_id, None, tally)
    winner = top[0]
    rules = tuple(sorted({v.rule for v in votes if v.entity_id == winner and v.polarity == FOR}))
    return Attribution(utt_id, winner, tally, rules, tally[winner])


def named_direct_override(attr: Attribution, direct_votes: Iterable[Vote]) -> Attribution:
    """A named direct-speaker vote is final, whatever the tally says."""
    named = [v for v in direct_votes if v.rule == DIRECT and v.polarity == FOR and v.utt_id == attr.utt_id]
    if not named:
        return attr
    # The rule emits at most one per utterance; pick deterministically anyway.
    entity = min({v.entity_id for v in named}, key=lambda e: (-attr.tally.get(e, 0), e))
    if attr.speaker == entity:
        return attr
    return replace(attr, speaker=entity, decided_by=(DIRECT,), confidence=attr.tally.get(entity, 0))


def pronoun_gender(pronoun) -> str:
    surface = getattr(pronoun, "surface", pronoun)
    if not isinstance(surface, str):
        return "unknown"
    return _GENDERED.get(surface.lower(), "unknown")


def gender_filter(candidates: Sequence[CharacterEntity], direct_pronoun) -> list[CharacterEntity]:
    """Drop candidates whose known gender differs from the pronoun's."""
    g = pronoun_gender(direct_pronoun) if direct_pronoun is not None else "unknown"
    if g == "unknown":
        return list(candidates)
    return [c for c in candidates if c.gender in (g, "unknown")]


def filtered_or_all(candidates: Sequence[CharacterEntity], direct_pronoun, where: str = "") -> list[CharacterEntity]:
    """:func:`gender_filter` that falls back to the unfiltered list when it empties."""
    kept = gender_filter(candidates, direct_pronoun)
    if candidates and not kept:
        log_event(logger, "GenderFilterEmpty", logging.INFO, where=where,
                  pronoun=getattr(direct_pronoun, "surface", str(direct_pronoun)))
        return list(candidates)
    return kept


def aggregate(utts: Sequence[Utterance], votes: Iterable[Vote], *,
              alternation: Callable[[Mapping[str, str]], list[Vote]] | None = None,
              allowed: Mapping[str, set[str]] | None = None,
              proximity: Mapping[str, Mapping[str, int]] | None = None,
              override: bool = True,
              trace: list | None = None) -> dict[str, Attribution]:
    """Decide every utterance, then iterate alternation to a fixpoint.

    ``alternation`` maps the current ``utt_id -> speaker`` attributions to
    fresh alternation votes. Each round only undecided utterances are
    revisited, so decisions are never withdrawn and at most ``len(utts)``
    rounds run. ``trace`` (if given) receives the set of decided utterance
    ids after every round.
    """
    static = dedupe(votes)
    by_utt: dict[str, list[Vote]] = {u.utt_id: [] for u in utts}
    for v in static:
        by_utt.setdefault(v.utt_id, []).append(v)
    allowed = allowed or {}
    proximity = proximity or {}

    def settle(uid: str, extra: Sequence[Vote]) -> Attribution:
        vs = by_utt.get(uid, []) + list(extra)
        attr = decide(uid, vs, allowed.get(uid), proximity.get(uid))
        return named_direct_override(attr, vs) if override else attr

    attrs = {u.utt_id: settle(u.utt_id, ()) for u in utts}
    if trace is not None:
        trace.append({k for k, a in attrs.items() if a.speaker})
    if alternation is None:
        return attrs
    alt: dict[tuple, Vote] = {}
    for _ in range(len(utts)):
        prior = {k: a.speaker for k, a in attrs.items() if a.speaker is not None}
        fresh = [v for v in alternation(prior) if v.utt_id not in prior and v.key not in alt]
        if not fresh:
            break
        for v in fresh:
            alt[v.key] = v
        alt_by_utt: dict[str, list[Vote]] = {}
        for v in alt.values():
            alt_by_utt.setdefault(v.utt_id, []).append(v)
        changed = False
        for uid, extra in alt_by_utt.items():
            if uid in prior or uid not in attrs:
                continue
            new = settle(uid, extra)
            attrs[uid] = new
            changed = changed or new.speaker is not None
        if trace is not None:
            trace.append({k for k, a in attrs.items() if a.speaker})
        if not changed:
            break
    return attrs


def propagate_continuations(attrs: dict[str, Attribution], utts: Sequence[Utterance]) -> dict[str, Attribution]:
    """Copy a speaker along ``continuation_of`` chains to undecided members."""
    parent = {u.utt_id: u.continuation_of for u in utts}
    chains: dict[str, list[str]] = {}
    for u in utts:
        root = u.utt_id
        while parent.get(root):
            root = parent[root]
        chains.setdefault(root, []).append(u.utt_id)
    out = dict(attrs)
    for members in chains.values():
        if len(members) < 2:
            continue
        decided = [(i, attrs[m].speaker) for i, m in enumerate(members) if m in attrs and attrs[m].speaker]
        if not decided:
            continue
        if len({s for _, s in decided}) > 1:
            log_event(logger, "ContinuationConflict", logging.INFO, chain=",".join(members))
        for i, m in enumerate(members):
            if m in attrs and attrs[m].speaker:
                continue
            before = [s for j, s in decided if j < i]
            speaker = before[-1] if before else decided[0][1]
            base = attrs.get(m, Attribution(m))
            out[m] = replace(base, speaker=speaker, decided_by=(CONTINUATION,), confidence=base.tally.get(speaker, 0))
    return out
