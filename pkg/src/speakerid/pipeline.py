"""Running every rule over one document and settling the votes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from .aggregation import Attribution, aggregate, filtered_or_all, gender_filter, pronoun_gender, propagate_continuations
from .errors import log_event
from .ingest import Document
from .lexicons import Lexicons, default_lexicons
from .mentions import (NAMED, CharacterEntity, HeuristicRecognizer, Mention, Recognizer, detect_mentions,
                       infer_genders, merge_aliases)
from .quotes import Utterance, extract_utterances
from .rules import (COREF, DIRECT, DIRECT_PRONOUN_NOTE, CorefCluster, DirectPatterns, DirectPronoun,
                    MentionIndex, Vote, alternation_rule, direct_speaker_rule, pronoun_coref_rule,
                    resolve_local_coref, sentence_windows)

logger = logging.getLogger(__name__)

EXPLICIT = "explicit"
ANAPHORIC = "anaphoric"
IMPLICIT = "implicit"
CATEGORIES = (EXPLICIT, ANAPHORIC, IMPLICIT)

CONTEXT_BEFORE = 3
CONTEXT_AFTER = 2


@dataclass
class PipelineConfig:
    lexicons: Lexicons = field(default_factory=default_lexicons)
    recognizer: Callable[[Lexicons], Recognizer] | None = None
    single_quote_dialogue: bool = False
    use_direct: bool = True
    use_coref: bool = True
    use_alternation: bool = True
    override: bool = True
    gender_filter: bool = True


@dataclass
class DocumentAnalysis:
    doc: Document
    utterances: list[Utterance]
    mentions: list[Mention]
    entities: list[CharacterEntity]
    entity_of: dict[int, str]
    index: MentionIndex
    votes: list[Vote]
    markers: list[DirectPronoun]
    attributions: dict[str, Attribution]
    direct_links: dict[str, Mention] = field(default_factory=dict)

    @property
    def entity_by_id(self) -> dict[str, CharacterEntity]:
        return {e.entity_id: e for e in self.entities}

    def utterance(self, utt_id: str) -> Utterance:
        return next(u for u in self.utterances if u.utt_id == utt_id)

    def votes_for(self, utt_id: str) -> list[Vote]:
        return [v for v in self.votes if v.utt_id == utt_id]

    def category(self, utt_id: str) -> str | None:
        attr = self.attributions.get(utt_id)
        if attr is None or attr.speaker is None:
            return None
        return classify_category(attr, self.votes_for(utt_id))

    def speaker_name(self, utt_id: str) -> str | None:
        attr = self.attributions.get(utt_id)
        if attr is None or attr.speaker is None:
            return None
        return self.entity_by_id[attr.speaker].canonical


def context_range(doc: Document, utt: Utterance) -> tuple[int, int]:
    """Inclusive sentence range: three sentences before the host, two after."""
    first, last = utt.sentence_ids[0], utt.sentence_ids[-1]
    return max(0, first - CONTEXT_BEFORE), min(len(doc.sentences) - 1, last + CONTEXT_AFTER)


def classify_category(attr: Attribution, votes: list[Vote]) -> str:
    """explicit: a named direct vote decided it; anaphoric: a resolved direct pronoun; else implicit."""
    speaker = attr.speaker
    if speaker is None:
        raise ValueError("cannot classify an unattributed utterance")
    if DIRECT in attr.decided_by and any(v.rule == DIRECT and v.entity_id == speaker for v in votes):
        return EXPLICIT
    if COREF in attr.decided_by and any(v.rule == COREF and v.entity_id == speaker and v.polarity == "for"
                                        and v.note.startswith(DIRECT_PRONOUN_NOTE) for v in votes):
        return ANAPHORIC
    return IMPLICIT


def analyze(doc: Document, config: PipelineConfig | None = None) -> DocumentAnalysis:
    """Extract utterances and attribute a speaker to as many as the rules allow."""
    config = config or PipelineConfig()
    lex = config.lexicons
    quote_char = "'" if config.single_quote_dialogue else '"'
    utts = extract_utterances(doc, config.single_quote_dialogue)
    recognizer = config.recognizer(lex) if config.recognizer else HeuristicRecognizer(lex)
    mentions = detect_mentions(doc, range(len(doc.sentences)), recognizer, lex, utts)
    entities = merge_aliases(mentions, scope=doc.doc_id, lexicons=lex)
    genders = infer_genders(entities, mentions, lexicons=lex)
    for e in entities:
        e.gender = genders[e.entity_id]
    entity_of = {mid: e.entity_id for e in entities for mid in e.mention_ids}
    mention_gender = {mid: genders[eid] for mid, eid in entity_of.items()}
    index = MentionIndex(mentions)
    utt_by_id = {u.utt_id: u for u in utts}

    votes: list[Vote] = []
    markers: list[DirectPronoun] = []
    direct_links: dict[str, Mention] = {}
    if config.use_direct:
        patterns = DirectPatterns(lex.speech_verbs)
        for u in utts:
            vs, ms = direct_speaker_rule(u, doc, index, entity_of, patterns, quote_char, direct_links)
            votes.extend(vs)
            markers.extend(ms)

    if config.use_coref:
        windows = sentence_windows(len(doc.sentences))
        clusters: dict[int, list[CorefCluster]] = {
            w.start: resolve_local_coref(doc, w, index, mention_gender, direct_links, utt_by_id) for w in windows}
        by_utt_markers: dict[str, list[DirectPronoun]] = {}
        for mk in markers:
            by_utt_markers.setdefault(mk.utt_id, []).append(mk)
        for u in utts:
            lo, hi = context_range(doc, u)
            overlapping = [c for start in range(max(0, lo - 2), hi + 1) for c in clusters.get(start, ())]
            votes.extend(pronoun_coref_rule(u, overlapping, index, entity_of, (lo, hi),
                                            by_utt_markers.get(u.utt_id, ())))

    allowed: dict[str, set[str]] = {}
    proximity: dict[str, dict[str, int]] = {}
    resolved_markers = {v.utt_id for v in votes if v.note.startswith(DIRECT_PRONOUN_NOTE)}
    for u in utts:
        lo, hi = context_range(doc, u)
        first, last = u.sentence_ids[0], u.sentence_ids[-1]
        near: dict[str, int] = {}
        for m in index.in_sentences(lo, hi):
            if m.kind == NAMED and m.mention_id in entity_of:
                d = 0 if first <= m.sentence_id <= last else min(abs(m.sentence_id - first), abs(m.sentence_id - last))
                eid = entity_of[m.mention_id]
                near[eid] = min(d, near.get(eid, d))
        proximity[u.utt_id] = near
    if config.gender_filter:
        # An unresolved he/she marker still rules out speakers of the other gender.
        for mk in markers:
            g = pronoun_gender(mk.mention)
            if mk.utt_id in resolved_markers or g == "unknown":
                continue
            context = [e for e in entities if e.entity_id in proximity[mk.utt_id]]
            if context and gender_filter(context, mk.mention):
                allowed[mk.utt_id] = {e.entity_id for e in entities if e.gender in (g, "unknown")}
            else:
                filtered_or_all(context, mk.mention, where=f"{doc.doc_id}:{mk.utt_id}")

    alternation = (lambda prior: alternation_rule(utts, prior)) if config.use_alternation else None
    attrs = aggregate(utts, votes, alternation=alternation, allowed=allowed, proximity=proximity,
                      override=config.override)
    attrs = propagate_continuations(attrs, utts)
    n_attr = sum(1 for a in attrs.values() if a.speaker)
    log_event(logger, "DocumentAttributed", logging.DEBUG, doc=doc.doc_id, utterances=len(utts), attributed=n_attr)
    return DocumentAnalysis(doc, utts, mentions, entities, entity_of, index, votes, markers, attrs, direct_links)
