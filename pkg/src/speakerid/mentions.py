"""Person mentions: detection, alias merging and gender hints.

Named mentions come from a pluggable recognizer. The shipped
:class:`HeuristicRecognizer` takes maximal runs of capitalised tokens,
honours honorific prefixes ("Mr. Darcy") and uses the document's own
lowercase vocabulary to reject sentence-initial common words.
:class:`GazetteerRecognizer` only finds names from a fixed list.
"""

from __future__ import annotations

import logging
import re
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from .errors import log_event
from .ingest import Document, Span
from .lexicons import Lexicons, default_lexicons

logger = logging.getLogger(__name__)

NAMED = "named"
PRONOUN = "pronoun"


@dataclass(frozen=True)
class Mention:
    span: Span
    surface: str
    kind: str
    person: str = "none"
    gender: str = "unknown"
    sentence_id: int = -1
    mention_id: int = -1
    utt_id: str | None = None  # utterance whose quoted span holds the mention

    def __post_init__(self):
        if self.kind == NAMED and self.person != "none":
            raise ValueError("named mentions carry no grammatical person")
        if self.kind == PRONOUN and self.person == "none":
            raise ValueError("pronoun mentions need a grammatical person")

    @property
    def in_quote(self) -> bool:
        return self.utt_id is not None


@dataclass
class CharacterEntity:
    entity_id: str
    canonical: str
    aliases: frozenset[str]
    mention_ids: list[int] = field(default_factory=list)
    gender: str = "unknown"


class Recognizer(Protocol):
    def find(self, doc: Document, sentence_ids: Iterable[int]) -> list[tuple[Span, str]]:
        """Return ``(span, surface)`` pairs of named person mentions."""


_TOKEN = re.compile(r"[A-Za-z](?:[A-Za-z'’]|-(?=[A-Za-z]))*")
_POSSESSIVE = re.compile(r"(?:['’]s|['’])$")
_CONTRACTION = re.compile(r"(?:n['’]t|['’](?:ll|ve|re|d|m))$", re.IGNORECASE)


def _honorific_at(text: str, tok, honorifics) -> tuple[str, int] | None:
    """Honorific surface and its end offset (period included) if ``tok`` is one."""
    word = tok.group()
    end = tok.end()
    if end < len(text) and text[end] == "." and word + "." in honorifics:
        return word + ".", end + 1
    if word in honorifics:
        return word, end
    return None


class HeuristicRecognizer:
    """Capitalised-token-sequence recognizer with honorific awareness."""

    def __init__(self, lexicons: Lexicons | None = None):
        self.lex = lexicons or default_lexicons()

    def _is_initial(self, text: str, pos: int, floor: int) -> bool:
        j = pos - 1
        while j >= floor and text[j].isspace():
            j -= 1
        return j < floor or text[j] in '".!?(—-:;\''

    def find(self, doc, sentence_ids):
        out = []
        lex = self.lex
        text = doc.text
        for si in sentence_ids:
            sent = doc.sentences[si]
            toks = list(_TOKEN.finditer(text, sent.start, sent.end))
            i = 0
            while i < len(toks):
                tok = toks[i]
                hon = _honorific_at(text, tok, lex.honorifics)
                start = tok.start()
                names = []
                j = i
                if hon is not None:
                    # Honorific followed directly by a capitalised word.
                    _, h_end = hon
                    j = i + 1
                    if j < len(toks) and text[h_end:toks[j].start()].strip() == "" and toks[j].group()[0].isupper():
                        pass
                    else:
                        i += 1
                        continue
                else:
                    if not tok.group()[0].isupper():
                        i += 1
                        continue
                # Collect a run of capitalised tokens separated by plain whitespace.
                prev_end = None
                while j < len(toks):
                    t = toks[j]
                    word = _POSSESSIVE.sub("", t.group())
                    if not word or not word[0].isupper() or (word.isupper() and len(word) > 1):
                        break
                    if word.lower() in lex.pronouns:
                        break
                    if prev_end is not None and text[prev_end:t.start()].strip() != "":
                        break
                    names.append((t.start(), t.start() + len(word), word))
                    prev_end = t.end()
                    if word != t.group():
                        j += 1
                        break
                    j += 1
                for piece in self._filter(doc, names, hon is not None, start, sent.start):
                    out.append(piece)
                i = max(j, i + 1)
        return out

    def _filter(self, doc, names, has_honorific, hon_start, floor):
        """Drop stoplisted and sentence-initial common words; split on stopwords."""
        lex = self.lex
        if not names:
            return []
        pieces = []
        current = []
        for k, (a, b, word) in enumerate(names):
            initial = k == 0 and not has_honorific and self._is_initial(doc.text, a, floor)
            bad = word in lex.stoplist or (initial and word.lower() in doc.lowercase_vocab) \
                or _CONTRACTION.search(word) is not None
            if k == 0 and not has_honorific and len(word) < 2:
                bad = True
            if bad:
                if current:
                    pieces.append(current)
                current = []
                if k == 0 and has_honorific:
                    return []
                continue
            current.append((a, b, word))
        if current:
            pieces.append(current)
        out = []
        for idx, piece in enumerate(pieces):
            if piece[-1][2] in lex.place_heads:
                continue
            if len(piece) == 1 and len(piece[0][2]) < 2:
                continue
            a = hon_start if (idx == 0 and has_honorific and piece[0] == names[0]) else piece[0][0]
            b = piece[-1][1]
            out.append((Span(a, b), doc.text[a:b]))
        return out


class GazetteerRecognizer:
    """Finds only the given names, their single name tokens and honorific forms."""

    def __init__(self, names: Iterable[str], lexicons: Lexicons | None = None):
        self.lex = lexicons or default_lexicons()
        forms = set()
        for name in names:
            name = " ".join(name.split())
            if not name:
                continue
            forms.add(name)
            for tok in strip_honorifics(name, self.lex.honorifics):
                if len(tok) > 1 and tok[0].isupper() and tok not in self.lex.stoplist:
                    forms.add(tok)
        hons = sorted((re.escape(h) for h in self.lex.honorifics), key=len, reverse=True)
        alts = sorted((re.escape(f).replace(r"\ ", r"\s+") for f in forms), key=len, reverse=True)
        self.names = frozenset(forms)
        self._pattern = re.compile(
            r"(?<![\w])(?:(?:%s)\s+)?(?:%s)(?![\w])" % ("|".join(hons), "|".join(alts))
        ) if alts else None

    def find(self, doc, sentence_ids):
        if self._pattern is None:
            return []
        out = []
        for si in sentence_ids:
            s = doc.sentences[si]
            for m in self._pattern.finditer(doc.text, s.start, s.end):
                surface = " ".join(m.group().split())
                out.append((Span(m.start(), m.end()), surface))
        return out


def detect_mentions(doc: Document, window: range | Iterable[int], recognizer: Recognizer | None = None,
                    lexicons: Lexicons | None = None, utterances=None) -> list[Mention]:
    """Named mentions from ``recognizer`` plus every pronoun-lexicon match.

    ``window`` is a range of sentence indices. When ``utterances`` is given,
    mentions inside a quoted span record that utterance's id.
    """
    lex = lexicons or default_lexicons()
    recognizer = recognizer or HeuristicRecognizer(lex)
    sids = list(window)
    if sids and (min(sids) < 0 or max(sids) >= len(doc.sentences)):
        raise IndexError("sentence window outside the document")
    found: list[tuple[Span, str, str, str, str, int]] = []
    for si in sids:
        s = doc.sentences[si]
        for m in _TOKEN.finditer(doc.text, s.start, s.end):
            word = re.split(r"['’]", m.group())[0]  # I'm, she'll, you've
            key = word.lower()
            if key not in lex.pronouns or (key == "i" and word != "I"):
                continue
            person, gender = lex.pronouns[key]
            found.append((Span(m.start(), m.start() + len(word)), word, PRONOUN, person, gender, si))
    for si in sids:
        for span, surface in recognizer.find(doc, [si]):
            found.append((span, surface, NAMED, "none", "unknown", si))
    found.sort(key=lambda f: (f[0].start, f[0].end))
    quote_spans = sorted(((u.span.start, u.span.end, u.utt_id) for u in utterances or ()))
    q_starts = [q[0] for q in quote_spans]
    mentions = []
    last_end = -1
    for span, surface, kind, person, gender, si in found:
        if span.start < last_end:
            continue  # a pronoun-shaped token inside a longer name
        utt_id = None
        k = bisect_right(q_starts, span.start) - 1
        if k >= 0 and quote_spans[k][0] <= span.start and span.end <= quote_spans[k][1]:
            utt_id = quote_spans[k][2]
        mentions.append(Mention(span, surface, kind, person, gender, si, len(mentions), utt_id))
        last_end = span.end
    return mentions


def strip_honorifics(surface: str, honorifics) -> tuple[str, ...]:
    toks = surface.split()
    while toks and toks[0] in honorifics:
        toks = toks[1:]
    return tuple(_POSSESSIVE.sub("", t) for t in toks)


def surface_gender(surface: str, honorifics) -> str:
    for tok in surface.split():
        if tok in honorifics:
            if honorifics[tok] != "unknown":
                return honorifics[tok]
        else:
            break
    return "unknown"


def compatible(g1: str, g2: str) -> bool:
    return g1 == g2 or "unknown" in (g1, g2)


def _contained(short: tuple, long: tuple) -> bool:
    n = len(short)
    return n > 0 and any(long[i:i + n] == short for i in range(len(long) - n + 1))


def alias_related(a: str, b: str, honorifics=None) -> bool:
    """True when one surface is a token-boundary substring of the other.

    Honorifics are ignored for the containment test, but surfaces whose
    honorifics carry conflicting genders ("Mr. X" / "Mrs. X") never match.
    """
    honorifics = default_lexicons().honorifics if honorifics is None else honorifics
    ka, kb = strip_honorifics(a, honorifics), strip_honorifics(b, honorifics)
    if not compatible(surface_gender(a, honorifics), surface_gender(b, honorifics)):
        return False
    return _contained(ka, kb) or _contained(kb, ka)


def merge_aliases(mentions: Iterable[Mention], scope=None, lexicons: Lexicons | None = None,
                  id_prefix: str = "e") -> list[CharacterEntity]:
    """Cluster named surfaces that are token-boundary substrings of each other.

    Surfaces are visited longest key first. A surface joins the single
    existing entity holding a compatible superset surface; if two or more
    entities qualify it stays on its own and ``AmbiguousMerge`` is logged.
    The result depends only on the set of surfaces and mention positions.
    """
    lex = lexicons or default_lexicons()
    hon = lex.honorifics
    named = [m for m in mentions if m.kind == NAMED]
    surfaces = {m.surface for m in named}
    keys = {s: strip_honorifics(s, hon) for s in surfaces}
    genders = {s: surface_gender(s, hon) for s in surfaces}
    order = sorted((s for s in surfaces if keys[s]),
                   key=lambda s: (-len(keys[s]), genders[s] == "unknown", -len(s), s))
    groups: list[dict] = []
    for s in order:
        hits = [g for g in groups
                if compatible(genders[s], g["gender"]) and any(_contained(keys[s], keys[a]) for a in g["aliases"])]
        if len(hits) == 1:
            g = hits[0]
            g["aliases"].add(s)
            if g["gender"] == "unknown":
                g["gender"] = genders[s]
            continue
        if len(hits) > 1:
            log_event(logger, "AmbiguousMerge", logging.INFO, surface=s, scope=str(scope),
                      candidates=len(hits))
        groups.append({"aliases": {s}, "gender": genders[s]})
    by_surface = {a: gi for gi, g in enumerate(groups) for a in g["aliases"]}
    members: dict[int, list[Mention]] = {}
    for m in named:
        if m.surface in by_surface:
            members.setdefault(by_surface[m.surface], []).append(m)
    ranked = sorted(members, key=lambda gi: (min(m.span.start for m in members[gi]), gi))
    entities = []
    for n, gi in enumerate(ranked):
        aliases = groups[gi]["aliases"]
        canonical = max(sorted(aliases), key=len)
        entities.append(CharacterEntity(
            entity_id=f"{id_prefix}{n}",
            canonical=canonical,
            aliases=frozenset(aliases),
            mention_ids=sorted(m.mention_id for m in members[gi]),
            gender=groups[gi]["gender"],
        ))
    return entities


def infer_genders(entities: list[CharacterEntity], mentions: list[Mention], max_distance: int = 2,
                  lexicons: Lexicons | None = None) -> dict[str, str]:
    """Gender for every entity: honorific first, then narration pronoun majority.

    A narration "he" or "she" votes for the entity of the nearest
    preceding named mention, provided that mention is at most
    ``max_distance`` sentences back. Object and possessive forms are left
    out: "her" after a name is as often someone else as a back-reference.
    """
    lex = lexicons or default_lexicons()
    owner = {}
    for e in entities:
        for mid in e.mention_ids:
            owner[mid] = e.entity_id
    votes: dict[str, Counter] = {e.entity_id: Counter() for e in entities}
    last = None
    for m in sorted(mentions, key=lambda m: m.span.start):
        if m.kind == NAMED and m.mention_id in owner and not m.in_quote:
            last = m
        elif (m.kind == PRONOUN and m.surface.lower() in ("he", "she") and not m.in_quote and last is not None
              and m.sentence_id - last.sentence_id <= max_distance):
            votes[owner[last.mention_id]][m.gender] += 1
    out = {}
    for e in entities:
        g = e.gender
        if g == "unknown":
            for alias in e.aliases:
                if surface_gender(alias, lex.honorifics) != "unknown":
                    g = surface_gender(alias, lex.honorifics)
                    break
        if g == "unknown":
            c = votes[e.entity_id]
            if c["male"] != c["female"]:
                g = "male" if c["male"] > c["female"] else "female"
        out[e.entity_id] = g
    return out


def infer_gender(entity: CharacterEntity, doc: Document, mentions: list[Mention] | None = None,
                 lexicons: Lexicons | None = None) -> str:
    """Gender of one entity; mentions default to a fresh whole-document detection."""
    if mentions is None:
        mentions = detect_mentions(doc, range(len(doc.sentences)), lexicons=lexicons)
        by_surface = {}
        for m in mentions:
            if m.kind == NAMED and m.surface in entity.aliases:
                by_surface.setdefault(m.surface, []).append(m.mention_id)
        entity = CharacterEntity(entity.entity_id, entity.canonical, entity.aliases,
                                 sorted(i for ids in by_surface.values() for i in ids), entity.gender)
    return infer_genders([entity], mentions, lexicons=lexicons)[entity.entity_id]
