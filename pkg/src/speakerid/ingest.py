"""Reading raw books and cutting them into paragraphs and sentences.

Offsets are the contract of this module: every :class:`Span` indexes the
normalized ``Document.text`` and everything downstream addresses text
through those offsets.
"""

from __future__ import annotations

import gzip
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .errors import EmptyBody, EncodingError, IoError, log_event
from .lexicons import load_abbreviations

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass
class RawDocument:
    doc_id: str
    text: str
    source: str = ""
    warnings: list[str] = field(default_factory=list)


@dataclass
class Document:
    doc_id: str
    text: str
    paragraphs: list[Span]
    sentences: list[Span]
    sentence_to_paragraph: list[int]

    def sentence_text(self, i: int) -> str:
        s = self.sentences[i]
        return self.text[s.start:s.end].strip()

    def paragraph_text(self, i: int) -> str:
        p = self.paragraphs[i]
        return self.text[p.start:p.end]

    @cached_property
    def paragraph_sentences(self) -> list[range]:
        """Sentence index range of each paragraph."""
        first: dict[int, int] = {}
        last: dict[int, int] = {}
        for si, pi in enumerate(self.sentence_to_paragraph):
            first.setdefault(pi, si)
            last[pi] = si
        return [range(first[p], last[p] + 1) if p in first else range(0)
                for p in range(len(self.paragraphs))]

    @cached_property
    def sentence_starts(self) -> list[int]:
        return [s.start for s in self.sentences]

    def sentence_at(self, offset: int) -> int:
        """Index of the sentence containing ``offset`` (or the one before it)."""
        from bisect import bisect_right

        return max(0, bisect_right(self.sentence_starts, offset) - 1)

    @cached_property
    def lowercase_vocab(self) -> frozenset[str]:
        """Every word that occurs at least once in all-lowercase form."""
        return frozenset(w for w in re.findall(r"[A-Za-z](?:[A-Za-z']|-(?=[A-Za-z]))*", self.text) if w.islower())


def load_document(path, doc_id: str | None = None) -> RawDocument:
    """Read a UTF-8 text file (optionally gzip-compressed)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".gz":
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise EncodingError(f"{path}: corrupt gzip data: {exc}") from exc
    if not data:
        raise EncodingError(f"{path}: file is empty")
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc
    text = unicodedata.normalize("NFC", text.replace("\r\n", "\n").replace("\r", "\n"))
    if doc_id is None:
        doc_id = path.name
        for suffix in (".gz", ".txt"):
            doc_id = doc_id.removesuffix(suffix)
    return RawDocument(doc_id=doc_id, text=text, source=str(path))


_START_MARK = re.compile(
    r"^\*{3}\s*START OF (?:THE|THIS) PROJECT GUTENBERG.*$", re.IGNORECASE | re.MULTILINE)
_END_MARK = re.compile(
    r"^\*{3}\s*END OF (?:THE|THIS) PROJECT GUTENBERG.*$", re.IGNORECASE | re.MULTILINE)


def strip_boilerplate(doc: RawDocument) -> RawDocument:
    """Keep only the body between Gutenberg START/END marker lines.

    Without any marker the text passes through unchanged and a
    ``NoBoilerplateMarkers`` warning is attached to the result.
    """
    start = _START_MARK.search(doc.text)
    end = _END_MARK.search(doc.text, start.end() if start else 0)
    if start is None and end is None:
        log_event(logger, "NoBoilerplateMarkers", logging.WARNING, doc=doc.doc_id)
        return RawDocument(doc.doc_id, doc.text, doc.source, doc.warnings + ["NoBoilerplateMarkers"])
    body = doc.text[start.end() if start else 0:end.start() if end else len(doc.text)]
    body = body.strip("\n")
    if not body.strip():
        raise EmptyBody(f"{doc.doc_id}: boilerplate markers enclose no text")
    return RawDocument(doc.doc_id, body, doc.source, list(doc.warnings))


_WORD_APOSTROPHE = re.compile(r"(?<=\w)’(?=\w)")


def normalize_quotes(text: str) -> str:
    """Map curly double quotes and in-word curly apostrophes to ASCII.

    The output has the same length as the input, so offsets survive.
    """
    text = text.replace("“", '"').replace("”", '"')
    return _WORD_APOSTROPHE.sub("'", text)


_PARA_BREAK = re.compile(r"\n[ \t]*\n\s*")
_TERMINATORS = ".!?"
_CLOSERS = ")]'’"


class Segmenter:
    """Rule-based sentence splitter.

    A boundary is placed after ``.``, ``!`` or ``?`` (plus any closing
    brackets or a closing double quote) when the next non-space character
    starts a new sentence, unless the terminator sits inside an open
    double-quoted span or ends a listed abbreviation or an initial.
    """

    def __init__(self, abbreviations=None, quote_chars='"'):
        self.abbreviations = load_abbreviations() if abbreviations is None else abbreviations
        self.quote_chars = quote_chars

    def paragraphs(self, text: str) -> list[Span]:
        spans = []
        pos = 0
        for m in [*_PARA_BREAK.finditer(text), None]:
            chunk_end = m.start() if m else len(text)
            chunk = text[pos:chunk_end]
            lead = len(chunk) - len(chunk.lstrip())
            body = chunk.strip()
            if body:
                spans.append(Span(pos + lead, pos + lead + len(body)))
            if m:
                pos = m.end()
        return spans

    def _is_abbreviation(self, text: str, pos: int, para_start: int) -> bool:
        j = pos
        while j > para_start and not text[j - 1].isspace() and text[j - 1] not in '"(':
            j -= 1
        word = text[j:pos]
        if not word:
            return False
        if word.lower() in self.abbreviations:
            return True
        # Initials such as "J." or "J.R."
        return bool(re.fullmatch(r"(?:[A-Z]\.)*[A-Z]", word))

    def sentences(self, text: str, para: Span) -> list[Span]:
        """Contiguous sentence spans covering the paragraph exactly."""
        bounds = [para.start]
        inside = False
        i = para.start
        end = para.end
        while i < end:
            ch = text[i]
            if ch in self.quote_chars:
                inside = not inside
                i += 1
                continue
            if ch in _TERMINATORS and not (ch == "." and self._is_abbreviation(text, i, para.start)):
                j = i + 1
                state = inside
                while j < end and (text[j] in _TERMINATORS or text[j] in _CLOSERS or text[j] in self.quote_chars):
                    if text[j] in self.quote_chars:
                        state = not state
                    j += 1
                k = j
                while k < end and text[k].isspace():
                    k += 1
                if not state and k > j and k < end and _starts_sentence(text[k]):
                    bounds.append(k)
                    inside = state
                    i = k
                    continue
                inside = state
                i = j
                continue
            i += 1
        bounds.append(end)
        return [Span(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]

    def segment(self, doc: RawDocument) -> Document:
        text = doc.text
        paragraphs = self.paragraphs(text)
        sentences: list[Span] = []
        owner: list[int] = []
        for pi, para in enumerate(paragraphs):
            for s in self.sentences(text, para):
                sentences.append(s)
                owner.append(pi)
        return Document(doc.doc_id, text, paragraphs, sentences, owner)


def _starts_sentence(ch: str) -> bool:
    return ch.isupper() or ch.isdigit() or ch in "\"'(“‘["


def segment(doc: RawDocument, abbreviations=None) -> Document:
    """Split a quote-normalized document into paragraphs and sentences."""
    return Segmenter(abbreviations).segment(doc)


def prepare(raw: RawDocument, abbreviations=None, strip=True) -> Document:
    """Boilerplate stripping, quote normalization and segmentation in one call."""
    if strip:
        raw = strip_boilerplate(raw)
    raw = RawDocument(raw.doc_id, normalize_quotes(raw.text), raw.source, raw.warnings)
    return segment(raw, abbreviations)


def document_from_text(text: str, doc_id: str = "doc", abbreviations=None) -> Document:
    """Build a :class:`Document` straight from a string (no boilerplate step)."""
    text = unicodedata.normalize("NFC", text)
    return prepare(RawDocument(doc_id, text, "<string>"), abbreviations, strip=False)
