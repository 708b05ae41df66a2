"""Quoted-utterance extraction by quotation-mark pairing."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import log_event
from .ingest import Document, Span

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Utterance:
    utt_id: str
    span: Span
    sentence_ids: tuple[int, ...]
    paragraph_id: int
    continuation_of: str | None = None
    open_ended: bool = False

    def text(self, doc: Document) -> str:
        return doc.text[self.span.start:self.span.end]


@dataclass
class QuoteStats:
    count: int
    mean_tokens: float | None
    quoted_paragraph_fraction: float | None


# A single quote opens dialogue only at a word start and closes only at a word end.
_SQ_OPEN = re.compile(r"(?:(?<=^)|(?<=[\s(\[—-]))'(?=\S)")
_SQ_CLOSE = re.compile(r"(?<=[^\s])'(?=$|[\s.,;:!?)\]—-])")


def _quote_positions(text: str, start: int, end: int, single_quote: bool) -> list[int]:
    if not single_quote:
        return [m.start() for m in re.finditer('"', text[start:end])]
    positions = []
    inside = False
    chunk = text[start:end]
    for i, ch in enumerate(chunk):
        if ch != "'":
            continue
        if not inside and _SQ_OPEN.match(chunk, i):
            positions.append(i)
            inside = True
        elif inside and _SQ_CLOSE.match(chunk, i):
            positions.append(i)
            inside = False
    return positions


def _trimmed(text: str, a: int, b: int) -> tuple[int, int]:
    while a < b and text[a].isspace():
        a += 1
    while b > a and text[b - 1].isspace():
        b -= 1
    return a, b


def extract_utterances(doc: Document, single_quote_dialogue: bool = False) -> list[Utterance]:
    """Pair quotation marks paragraph by paragraph.

    A paragraph whose last quote is left open is a continued speech when
    the following paragraph opens with a quote; the next paragraph's
    first utterance then points back to it through ``continuation_of``.
    Any other dangling quote is skipped with an ``UnbalancedQuotes`` event.
    """
    text = doc.text
    quote_char = "'" if single_quote_dialogue else '"'
    utts: list[Utterance] = []
    pending: str | None = None  # open-ended utterance of the previous paragraph
    for pi, para in enumerate(doc.paragraphs):
        rel = _quote_positions(text, para.start, para.end, single_quote_dialogue)
        marks = [para.start + r for r in rel]
        pairs = [(marks[k], marks[k + 1]) for k in range(0, len(marks) - 1, 2)]
        dangling = marks[-1] if len(marks) % 2 else None
        opens_with_quote = text[para.start] == quote_char
        link = pending if opens_with_quote else None
        pending = None

        spans: list[tuple[int, int, bool]] = []
        for a, b in pairs:
            spans.append((a + 1, b, False))
        if dangling is not None:
            nxt = doc.paragraphs[pi + 1] if pi + 1 < len(doc.paragraphs) else None
            if nxt is not None and text[nxt.start] == quote_char:
                spans.append((dangling + 1, para.end, True))
            else:
                log_event(logger, "UnbalancedQuotes", logging.WARNING,
                          doc=doc.doc_id, paragraph=pi, offset=dangling)

        first = True
        for a, b, open_ended in spans:
            a, b = _trimmed(text, a, b)
            if a >= b:
                log_event(logger, "EmptyQuote", logging.DEBUG, doc=doc.doc_id, paragraph=pi, offset=a)
                continue
            span = Span(a, b)
            sids = tuple(si for si in doc.paragraph_sentences[pi] if doc.sentences[si].overlaps(span))
            utt = Utterance(
                utt_id=f"u{len(utts)}",
                span=span,
                sentence_ids=sids,
                paragraph_id=pi,
                continuation_of=link if first else None,
                open_ended=open_ended,
            )
            first = False
            utts.append(utt)
            if open_ended:
                pending = utt.utt_id
    return utts


def _tokens(s: str) -> list[str]:
    return s.split()


def utterance_stats(doc: Document, utts: list[Utterance]) -> QuoteStats:
    """Count, mean whitespace-token length and share of quoted paragraphs."""
    if not utts:
        frac = 0.0 if doc.paragraphs else None
        return QuoteStats(0, None, frac)
    lengths = [len(_tokens(u.text(doc))) for u in utts]
    quoted = len({u.paragraph_id for u in utts})
    return QuoteStats(len(utts), sum(lengths) / len(lengths), quoted / len(doc.paragraphs))
