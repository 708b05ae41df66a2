"""The three voting heuristics: direct speaker, alternation, pronoun coreference.

Every rule emits :class:`Vote` records; no rule decides on its own. The
vote tally is settled in :mod:`speakerid.aggregation`.
"""

from __future__ import annotations

import re
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .ingest import Document
from .mentions import NAMED, PRONOUN, Mention, compatible
from .quotes import Utterance

FOR = "for"
AGAINST = "against"
DIRECT = "direct"
ALTERNATION = "alternation"
COREF = "coref"
CONTINUATION = "continuation"
RULE_PRIORITY = {DIRECT: 3, COREF: 2, ALTERNATION: 1}
DIRECT_PRONOUN_NOTE = "direct pronoun"

SUBJECT_PRONOUNS = frozenset({"i", "he", "she"})


@dataclass(frozen=True)
class Vote:
    utt_id: str
    entity_id: str
    polarity: str
    rule: str
    note: str = ""

    @property
    def key(self):
        return (self.utt_id, self.entity_id, self.rule, self.polarity)


@dataclass(frozen=True)
class DirectPronoun:
    """A speech-verb pattern matched a pronoun; resolved later through coref."""

    utt_id: str
    mention: Mention


@dataclass(frozen=True)
class CorefCluster:
    cluster_id: str
    mention_ids: tuple[int, ...]


def dedupe(votes: Iterable[Vote]) -> list[Vote]:
    """Keep the first vote per (utterance, entity, rule, polarity)."""
    seen = {}
    for v in votes:
        seen.setdefault(v.key, v)
    return list(seen.values())


class MentionIndex:
    """Mentions sorted by start offset with range lookup."""

    def __init__(self, mentions: Sequence[Mention]):
        self.mentions = sorted(mentions, key=lambda m: m.span.start)
        self.starts = [m.span.start for m in self.mentions]
        self.by_id = {m.mention_id: m for m in self.mentions}
        self.sentence_ids = [m.sentence_id for m in self.mentions]

    def between(self, a: int, b: int) -> list[Mention]:
        i = bisect_left(self.starts, a)
        out = []
        while i < len(self.mentions) and self.mentions[i].span.start < b:
            if self.mentions[i].span.end <= b:
                out.append(self.mentions[i])
            i += 1
        return out

    def in_sentences(self, first: int, last: int) -> list[Mention]:
        lo = bisect_left(self.sentence_ids, first)
        hi = bisect_left(self.sentence_ids, last + 1)
        return self.mentions[lo:hi]


_ADVERB = r"(?:\s+(?:\w+ly|only|again|aloud|then|at\s+last|at\s+once|once\s+more))?"


class DirectPatterns:
    """Compiled surface patterns around a quote for one speech-verb lexicon."""

    def __init__(self, speech_verbs: Iterable[str]):
        verbs = sorted((re.escape(v).replace(r"\ ", r"\s+") for v in speech_verbs), key=len, reverse=True)
        verb = r"(?:%s)\b" % "|".join(verbs)
        # <QUOTE, verb NAME>
        self.verb_first = re.compile(r"[\s,;:—-]*" + verb + _ADVERB + r"\s+", re.IGNORECASE)
        # <QUOTE, NAME verb>: text between the mention and the verb
        self.name_first_tail = re.compile(r",?" + _ADVERB + r",?\s+" + verb, re.IGNORECASE)
        # <NAME verb, QUOTE>
        self.before_tail = re.compile(
            _ADVERB + r"\s+" + verb + _ADVERB
            + r"(?:\s+(?:to|unto)\s+[^,:;.!?\"]{1,40})?\s*[,:]?\s*$", re.IGNORECASE)
        # <NAME verb that-clause QUOTE>
        self.that_tail = re.compile(_ADVERB + r"\s+" + verb + r"\s+that\b[^\".!?]*$", re.IGNORECASE)


def _is_subject(m: Mention) -> bool:
    return m.kind == NAMED or m.surface.lower() in SUBJECT_PRONOUNS


def _quote_regions(utt: Utterance, doc: Document, quote_char: str = '"') -> tuple[tuple[int, int] | None, tuple[int, int] | None]:
    """Narration just before the opening mark and just after the closing mark."""
    text = doc.text
    para = doc.paragraphs[utt.paragraph_id]
    open_pos = text.rfind(quote_char, para.start, utt.span.start)
    before = after = None
    if open_pos >= 0:
        sent = doc.sentences[doc.sentence_at(open_pos)]
        prev_close = text.rfind(quote_char, sent.start, open_pos)
        lo = prev_close + 1 if prev_close >= 0 else sent.start
        before = (max(lo, para.start), open_pos)
    if not utt.open_ended:
        close_pos = text.find(quote_char, utt.span.end, para.end)
        if close_pos >= 0:
            sent = doc.sentences[doc.sentence_at(close_pos)]
            nxt = text.find(quote_char, close_pos + 1, para.end)
            hi = min(sent.end, nxt if nxt >= 0 else para.end)
            # A closing quote that ends its sentence leaves no narration in it,
            # except after "?" or "!", where a capitalised `Natasha asked`
            # still belongs to the quote.
            if not text[close_pos + 1:sent.end].strip():
                hi = close_pos + 1
                si = doc.sentence_at(close_pos) + 1
                if text[utt.span.start:utt.span.end].rstrip()[-1:] in "?!" and si < len(doc.sentences) \
                        and doc.sentence_to_paragraph[si] == utt.paragraph_id:
                    nxt_sent = doc.sentences[si]
                    hi = min(nxt_sent.end, nxt if nxt >= 0 else para.end)
            after = (close_pos + 1, hi)
    return before, after


def _after_shapes(a: int, b: int, doc: Document, index: MentionIndex,
                  patterns: DirectPatterns) -> tuple[Mention, str] | None:
    """``verb NAME`` or ``NAME verb`` opening the narration span ``[a, b)``."""
    text = doc.text
    region = text[a:b]
    cands = [m for m in index.between(a, b) if not m.in_quote]
    m = patterns.verb_first.match(region)
    if m:
        hit = next((c for c in cands if c.span.start == a + m.end()), None)
        if hit is not None and _is_subject(hit):
            return hit, "quote-verb-name"
    lead = len(region) - len(region.lstrip(" \t\n,;:—-"))
    first = next((c for c in cands if c.span.start == a + lead), None)
    if first is not None and _is_subject(first):
        if patterns.name_first_tail.match(text, first.span.end, b):
            return first, "quote-name-verb"
    return None


def find_direct_speaker(utt: Utterance, doc: Document, index: MentionIndex, patterns: DirectPatterns,
                        quote_char: str = '"') -> tuple[Mention, str] | None:
    """The mention matched by the first applicable pattern, with the pattern name.

    When a sentence interrupts one speech with narration (``"A," said X,
    "B."``), that narration is adjacent to both halves, so the shapes that
    follow a quote also apply to the quote after it.
    """
    text = doc.text
    before, after = _quote_regions(utt, doc, quote_char)
    if after is not None and after[1] > after[0]:
        hit = _after_shapes(after[0], after[1], doc, index, patterns)
        if hit is not None:
            return hit
    if before is not None and before[1] > before[0]:
        a, b = before
        subjects = [c for c in reversed(index.between(a, b)) if not c.in_quote and _is_subject(c)]
        if subjects and patterns.before_tail.match(text, subjects[0].span.end, b):
            return subjects[0], "name-verb-quote"
        # The that-clause may hold its own subject ("she replied that she ..."),
        # so look further back for the one followed by the speech verb.
        for c in subjects:
            if patterns.that_tail.match(text, c.span.end, b):
                return c, "name-verb-that-quote"
        if a > 0 and text[a - 1] == quote_char:
            return _after_shapes(a, b, doc, index, patterns)
    return None


def direct_speaker_rule(utt: Utterance, doc: Document, index: MentionIndex, entity_of: Mapping[int, str],
                        patterns: DirectPatterns, quote_char: str = '"',
                        links: dict[str, Mention] | None = None) -> tuple[list[Vote], list[DirectPronoun]]:
    """One ``for`` vote for a named speaker next to a speech verb, or a pronoun marker.

    ``links`` (if given) records the matched mention under the utterance id.
    """
    found = find_direct_speaker(utt, doc, index, patterns, quote_char)
    if found is None:
        return [], []
    mention, shape = found
    if links is not None:
        links[utt.utt_id] = mention
    if mention.kind == PRONOUN:
        return [], [DirectPronoun(utt.utt_id, mention)]
    entity = entity_of.get(mention.mention_id)
    if entity is None:
        return [], []
    return [Vote(utt.utt_id, entity, FOR, DIRECT, f"{shape}: {mention.surface}")], []


# -- conversation alternation -------------------------------------------------

def conversation_turns(utts: Sequence[Utterance]) -> list[list[list[Utterance]]]:
    """Group utterances into turns (one paragraph, continuations folded in)
    and turns into runs of back-to-back quote-bearing paragraphs."""
    turns: list[tuple[int, int, list[Utterance]]] = []  # (first para, last para, utts)
    for u in utts:
        if turns and (u.paragraph_id == turns[-1][1] or
                      (u.continuation_of is not None and u.paragraph_id == turns[-1][1] + 1)):
            first, _, members = turns[-1]
            turns[-1] = (first, u.paragraph_id, members + [u])
        else:
            turns.append((u.paragraph_id, u.paragraph_id, [u]))
    runs: list[list[list[Utterance]]] = []
    last_para = None
    for first, last, members in turns:
        if runs and last_para is not None and first == last_para + 1:
            runs[-1].append(members)
        else:
            runs.append([members])
        last_para = last
    return runs


def alternation_rule(utts: Sequence[Utterance], prior: Mapping[str, str], entities=None) -> list[Vote]:
    """Votes from turn structure.

    Unattributed utterances in a turn whose other utterances share one
    speaker get that speaker. In a two-party run, a fully unattributed
    turn gets a ``for`` vote for the speaker two turns away and an
    ``against`` vote for the other party.
    """
    votes = []
    for run in conversation_turns(utts):
        speakers = []
        for turn in run:
            found = {prior[u.utt_id] for u in turn if u.utt_id in prior}
            speakers.append(next(iter(found)) if len(found) == 1 else None)
        parties = {prior[u.utt_id] for turn in run for u in turn if u.utt_id in prior}
        for t, turn in enumerate(run):
            open_utts = [u for u in turn if u.utt_id not in prior]
            if not open_utts:
                continue
            if len(open_utts) < len(turn):
                if speakers[t] is not None:
                    votes.extend(Vote(u.utt_id, speakers[t], FOR, ALTERNATION, "same turn") for u in open_utts)
                continue
            if len(parties) != 2:
                continue
            for d in (-2, 2):
                k = t + d
                if 0 <= k < len(run) and speakers[k] is not None:
                    speaker = speakers[k]
                    (other,) = parties - {speaker}
                    for u in open_utts:
                        votes.append(Vote(u.utt_id, speaker, FOR, ALTERNATION, f"turn {d:+d}"))
                        votes.append(Vote(u.utt_id, other, AGAINST, ALTERNATION, f"turn {d:+d}"))
    return dedupe(votes)


# -- local coreference ----------------------------------------------------------

class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


_VOCATIVE_BEFORE = re.compile(r"(?:^|[,.!?;—-]\s*|\b(?:dear|my|oh|O|Oh)\s+)$")
_VOCATIVE_AFTER = re.compile(r"\s*(?:[,.!?;—-]|$)")


def _is_vocative(m: Mention, doc: Document, utt_span) -> bool:
    before = doc.text[utt_span.start:m.span.start]
    after = doc.text[m.span.end:utt_span.end]
    return bool(_VOCATIVE_BEFORE.search(before)) and bool(_VOCATIVE_AFTER.match(after))


def resolve_local_coref(doc: Document, window: range, index: MentionIndex, entity_gender: Mapping[int, str],
                        direct_links: Mapping[str, Mention] | None = None,
                        utterances: Mapping[str, Utterance] | None = None) -> list[CorefCluster]:
    """Deterministic clustering of the mentions in one sentence window.

    * a third-person pronoun links to the nearest preceding
      gender-compatible named mention (narration pronouns only look at
      narration names); a narration pronoun without such a name links to
      the nearest preceding narration pronoun of the same gender;
    * identical named surfaces link;
    * inside a quote, a first-person pronoun links to the speaker mention
      found by the direct rule and a second-person pronoun links to a
      vocative name in the same quote;
    * first-person pronouns in narration stay alone.

    ``entity_gender`` maps a named mention id to its entity's gender.
    """
    direct_links = direct_links or {}
    ms = index.in_sentences(window.start, window.stop - 1)
    uf = _UnionFind()
    for m in ms:
        uf.find(m.mention_id)
    by_surface: dict[str, int] = {}
    for i, m in enumerate(ms):
        if m.kind == NAMED:
            if m.surface in by_surface:
                uf.union(by_surface[m.surface], m.mention_id)
            else:
                by_surface[m.surface] = m.mention_id
            continue
        if m.person == "third":
            ante = None
            for p in reversed(ms[:i]):
                if p.kind == NAMED and (m.in_quote or not p.in_quote) and \
                        compatible(m.gender, entity_gender.get(p.mention_id, "unknown")):
                    ante = p
                    break
            if ante is None and not m.in_quote:
                ante = next((p for p in reversed(ms[:i]) if p.kind == PRONOUN and p.person == "third"
                             and not p.in_quote and p.gender == m.gender), None)
            if ante is not None:
                uf.union(ante.mention_id, m.mention_id)
        elif m.in_quote and m.person == "first":
            link = direct_links.get(m.utt_id)
            if link is not None and window.start <= link.sentence_id < window.stop:
                uf.union(link.mention_id, m.mention_id)
        elif m.in_quote and m.person == "second" and utterances is not None:
            span = utterances[m.utt_id].span
            voc = [p for p in ms if p.kind == NAMED and p.utt_id == m.utt_id and _is_vocative(p, doc, span)]
            if voc:
                uf.union(voc[0].mention_id, m.mention_id)
    groups: dict[int, list[int]] = {}
    for m in ms:
        groups.setdefault(uf.find(m.mention_id), []).append(m.mention_id)
    return [CorefCluster(f"w{window.start}c{n}", tuple(sorted(ids)))
            for n, ids in enumerate(sorted(groups.values(), key=min))]


def sentence_windows(n_sentences: int, size: int = 3) -> list[range]:
    if n_sentences <= 0:
        return []
    if n_sentences <= size:
        return [range(0, n_sentences)]
    return [range(a, a + size) for a in range(n_sentences - size + 1)]


def resolve_entity(mention: Mention, clusters: Iterable[CorefCluster], index: MentionIndex,
                   entity_of: Mapping[int, str], sentence_range: tuple[int, int]) -> str | None:
    """Entity reached from ``mention`` through clusters sharing mentions.

    Only named mentions inside ``sentence_range`` count; if they belong to
    more than one entity the mention is left unresolved.
    """
    uf = _UnionFind()
    for c in clusters:
        for mid in c.mention_ids[1:]:
            uf.union(c.mention_ids[0], mid)
    root = uf.find(mention.mention_id)
    lo, hi = sentence_range
    found = set()
    for mid in list(uf.parent):
        if uf.find(mid) != root:
            continue
        m = index.by_id.get(mid)
        if m is not None and m.kind == NAMED and lo <= m.sentence_id <= hi and mid in entity_of:
            found.add(entity_of[mid])
    return found.pop() if len(found) == 1 else None


def pronoun_coref_rule(utt: Utterance, clusters: Sequence[CorefCluster], index: MentionIndex,
                       entity_of: Mapping[int, str], context: tuple[int, int],
                       markers: Sequence[DirectPronoun] = ()) -> list[Vote]:
    """Votes from pronouns inside the utterance and from direct-pronoun markers.

    First-person pronouns vote for the entity they resolve to; second- and
    third-person pronouns vote against it. A direct-pronoun marker that
    resolves yields a ``for`` vote; one that does not yields nothing.
    """
    votes = []
    second_person_against = set()
    # Marker votes go first so that dedupe keeps their note.
    for marker in markers:
        if marker.utt_id != utt.utt_id:
            continue
        entity = resolve_entity(marker.mention, clusters, index, entity_of, context)
        if entity is not None:
            votes.append(Vote(utt.utt_id, entity, FOR, COREF, f"{DIRECT_PRONOUN_NOTE} '{marker.mention.surface}'"))
    inside = [m for m in index.between(utt.span.start, utt.span.end)
              if m.kind == PRONOUN and m.utt_id == utt.utt_id]
    for m in inside:
        entity = resolve_entity(m, clusters, index, entity_of, context)
        if entity is None:
            continue
        if m.person == "first":
            votes.append(Vote(utt.utt_id, entity, FOR, COREF, f"first person '{m.surface}'"))
        else:
            votes.append(Vote(utt.utt_id, entity, AGAINST, COREF, f"{m.person} person '{m.surface}'"))
            if m.person == "second":
                second_person_against.add(entity)
    votes = [v for v in votes if not (v.polarity == FOR and v.entity_id in second_person_against)]
    return dedupe(votes)
