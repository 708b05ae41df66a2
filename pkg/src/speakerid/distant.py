"""Distant-supervision instances: context windows, masking, anonymization, export."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
import string
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import BudgetImpossible, ConfigError, IoError, ParseError, log_event
from .ingest import Document
from .mentions import NAMED, CharacterEntity, Mention
from .pipeline import CATEGORIES, EXPLICIT, ANAPHORIC, DocumentAnalysis, context_range
from .quotes import Utterance
from .rules import conversation_turns

logger = logging.getLogger(__name__)

MASK_TOKEN = "someone"
STANDALONE_LETTERS = frozenset({"I", "A"})
DEFAULT_POOL = tuple(c for c in string.ascii_uppercase if c not in STANDALONE_LETTERS)
DEFAULT_BUDGET = 400
FORMATS = ("instance-lines", "qa-lines")


@dataclass(frozen=True)
class MaskingConfig:
    mask_probability: float = 0.85
    letter_pool: tuple[str, ...] = DEFAULT_POOL
    seed: int = 0
    standalone_words: frozenset = STANDALONE_LETTERS

    def __post_init__(self):
        if not 0.0 <= self.mask_probability <= 1.0:
            raise ConfigError(f"mask_probability must be in [0, 1], got {self.mask_probability}")
        pool = tuple(self.letter_pool)
        if not pool or any(len(c) != 1 or not c.isalpha() for c in pool) or len(set(pool)) != len(pool):
            raise ConfigError("letter_pool must be distinct single letters")
        bad = sorted(set(pool) & set(self.standalone_words))
        if bad:
            raise ConfigError(f"letter_pool contains standalone words: {', '.join(bad)}")
        object.__setattr__(self, "letter_pool", tuple(sorted(pool)))


def derive_rng(seed: int, doc_id: str, utt_id: str, stream: str) -> random.Random:
    """An RNG that depends only on the run seed and the instance, never on run order."""
    digest = hashlib.sha256(f"{seed}\x1f{doc_id}\x1f{utt_id}\x1f{stream}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


# -- context windows ------------------------------------------------------------

@dataclass(frozen=True)
class ContextWindow:
    """A slice of sentences around an utterance plus pending text edits.

    Edits are ``(start, end, replacement)`` in document offsets and never
    overlap; :attr:`text` renders the window with them applied.
    """

    doc: Document = field(repr=False, compare=False)
    sentence_ids: tuple[int, ...]
    host_ids: tuple[int, ...]
    edits: tuple[tuple[int, int, str], ...] = ()

    @property
    def start(self) -> int:
        return self.doc.sentences[self.sentence_ids[0]].start

    @property
    def end(self) -> int:
        return self.doc.sentences[self.sentence_ids[-1]].end

    def render(self, a: int, b: int) -> str:
        """Text of ``[a, b)`` with edits applied and whitespace collapsed."""
        out, pos = [], a
        for s, e, rep in sorted(self.edits):
            if s >= b or e <= a:
                continue
            out.append(self.doc.text[pos:s])
            out.append(rep)
            pos = e
        out.append(self.doc.text[pos:b])
        return " ".join("".join(out).split())

    def sentence_texts(self) -> list[str]:
        return [self.render(self.doc.sentences[i].start, self.doc.sentences[i].end) for i in self.sentence_ids]

    @property
    def text(self) -> str:
        return " ".join(t for t in self.sentence_texts() if t)

    def free(self, a: int, b: int) -> bool:
        return all(e <= a or s >= b for s, e, _ in self.edits)

    def with_edit(self, a: int, b: int, rep: str) -> "ContextWindow":
        if not self.free(a, b):
            raise ValueError("overlapping edit")
        return replace(self, edits=tuple(sorted(self.edits + ((a, b, rep),))))


def build_context(doc: Document, utt: Utterance) -> ContextWindow:
    """Three sentences before the utterance, its host sentences, two after."""
    if not utt.sentence_ids or utt.sentence_ids[-1] >= len(doc.sentences):
        raise ValueError(f"utterance {utt.utt_id} does not belong to document {doc.doc_id}")
    lo, hi = context_range(doc, utt)
    return ContextWindow(doc, tuple(range(lo, hi + 1)), tuple(utt.sentence_ids))


# -- masking and anonymization ----------------------------------------------------

def mask_explicit_speaker(window: ContextWindow, mention: Mention, cfg: MaskingConfig,
                          rng: random.Random) -> ContextWindow:
    """Replace the narration speaker mention by "someone" with probability p.

    One draw is consumed whatever the outcome, so the stream stays aligned.
    """
    draw = rng.random()
    if mention.in_quote or not (window.start <= mention.span.start and mention.span.end <= window.end):
        return window
    if draw >= cfg.mask_probability:
        return window
    return window.with_edit(mention.span.start, mention.span.end, MASK_TOKEN)


def letter_codes(n: int, pool: Sequence[str], rng: random.Random) -> list[str]:
    """``n`` distinct codes: single letters drawn without replacement, then two-letter codes."""
    pool = list(pool)
    if n <= len(pool):
        return rng.sample(pool, n)
    extra = ["".join(p) for p in product(pool, repeat=2)]
    return rng.sample(pool, len(pool)) + rng.sample(extra, n - len(pool))


def alias_pattern(aliases: Iterable[str]) -> re.Pattern | None:
    names = sorted({a for a in aliases if a}, key=lambda a: (-len(a), a))
    if not names:
        return None
    alts = "|".join(r"\s+".join(re.escape(t) for t in a.split()) for a in names)
    return re.compile(r"(?<![\w])(?:%s)(?![\w])" % alts)


def anonymize_characters(window: ContextWindow, entities: Sequence[CharacterEntity], cfg: MaskingConfig,
                         rng: random.Random) -> tuple[ContextWindow, dict[str, str]]:
    """Give each entity a distinct "Person X" name and substitute every alias in the window.

    Aliases are matched longest first on word boundaries, inside and
    outside quotes; text already edited (a mask) is left alone.
    """
    codes = letter_codes(len(entities), cfg.letter_pool, rng)
    mapping = {e.entity_id: f"Person {c}" for e, c in zip(entities, codes)}
    owner = {}
    for e in sorted(entities, key=lambda e: e.entity_id):
        for a in e.aliases:
            owner.setdefault(" ".join(a.split()), e.entity_id)
    pattern = alias_pattern(owner)
    if pattern is None:
        return window, mapping
    for m in pattern.finditer(window.doc.text, window.start, window.end):
        if window.free(m.start(), m.end()):
            window = window.with_edit(m.start(), m.end(), mapping[owner[" ".join(m.group().split())]])
    return window, mapping


# -- instances --------------------------------------------------------------------

@dataclass(frozen=True)
class DistantInstance:
    instance_id: str
    context: str
    utterance: str
    candidates: tuple[str, ...]
    speaker: str
    category: str
    answer_span: tuple[int, int]
    doc_id: str
    utt_id: str
    masked: bool | None = None

    def __post_init__(self):
        if self.speaker not in self.candidates:
            raise ValueError(f"{self.instance_id}: speaker not among candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError(f"{self.instance_id}: duplicate candidates")
        if self.category not in CATEGORIES:
            raise ValueError(f"{self.instance_id}: unknown category {self.category!r}")
        a, b = self.answer_span
        if render_input(self.candidates, self.context, self.utterance)[a:b] != self.speaker:
            raise ValueError(f"{self.instance_id}: answer_span does not slice the speaker")

    @property
    def question(self) -> str:
        return question_for(self.utterance)

    @property
    def rendered(self) -> str:
        return render_input(self.candidates, self.context, self.utterance)


PEOPLE_PREFIX = "People: "
CANDIDATE_SEP = "; "


def question_for(utterance: str) -> str:
    return f'who said "{utterance}"?'


def render_input(candidates: Sequence[str], context: str, utterance: str) -> str:
    return "\n".join([PEOPLE_PREFIX + CANDIDATE_SEP.join(candidates), context, question_for(utterance)])


def answer_span_for(candidates: Sequence[str], speaker: str) -> tuple[int, int]:
    k = list(candidates).index(speaker)
    start = len(PEOPLE_PREFIX) + sum(len(c) + len(CANDIDATE_SEP) for c in candidates[:k])
    return start, start + len(speaker)


def whitespace_tokens(s: str) -> int:
    return len(s.split())


def truncate_to_budget(candidates: Sequence[str], sentences: Sequence[str], host: Sequence[int],
                       utterance: str, budget: int = DEFAULT_BUDGET,
                       count: Callable[[str], int] = whitespace_tokens) -> list[int]:
    """Indices of the context sentences kept so the rendered input fits ``budget``.

    Sentences after the host go first, last one first; then sentences
    before it, earliest first, so the kept window stays contiguous.
    """
    keep = list(range(len(sentences)))

    def size(idx):
        return count(render_input(candidates, " ".join(sentences[i] for i in idx if sentences[i]), utterance))

    if size(keep) <= budget:
        return keep
    host = set(host)
    if size([i for i in keep if i in host]) > budget:
        raise BudgetImpossible(f"candidates, host sentences and question need more than {budget} tokens")
    order = [i for i in reversed(keep) if i not in host and i > max(host)] + \
            [i for i in keep if i not in host and i < min(host)]
    for i in order:
        keep.remove(i)
        if size(keep) <= budget:
            break
    return keep


def conversation_members(utts: Sequence[Utterance]) -> dict[str, tuple[str, ...]]:
    """Utterance id -> ids of all utterances in its dialogue run."""
    out = {}
    for run in conversation_turns(utts):
        ids = tuple(u.utt_id for turn in run for u in turn)
        for i in ids:
            out[i] = ids
    return out


def build_instances(analysis: DocumentAnalysis, cfg: MaskingConfig | None = None,
                    budget: int | None = DEFAULT_BUDGET,
                    count: Callable[[str], int] = whitespace_tokens) -> list[DistantInstance]:
    """One instance per attributed utterance of an analysed document."""
    cfg = cfg or MaskingConfig()
    doc = analysis.doc
    entities = analysis.entity_by_id
    runs = conversation_members(analysis.utterances)
    out = []
    for utt in analysis.utterances:
        attr = analysis.attributions.get(utt.utt_id)
        if attr is None or attr.speaker is None:
            continue
        category = analysis.category(utt.utt_id)
        window = build_context(doc, utt)
        lo, hi = window.sentence_ids[0], window.sentence_ids[-1]
        present = {analysis.entity_of[m.mention_id] for m in analysis.index.in_sentences(lo, hi)
                   if m.kind == NAMED and m.mention_id in analysis.entity_of}
        talkers = {analysis.attributions[u].speaker for u in runs.get(utt.utt_id, ())
                   if u in analysis.attributions and analysis.attributions[u].speaker}
        cand_ids = sorted(present | talkers, key=lambda e: int(e.lstrip("e")) if e.lstrip("e").isdigit() else e)
        if attr.speaker not in cand_ids:
            log_event(logger, "SpeakerOutsideCandidates", logging.DEBUG, doc=doc.doc_id, utt=utt.utt_id)
            continue

        masked = None
        direct = analysis.direct_links.get(utt.utt_id)
        if category in (EXPLICIT, ANAPHORIC) and direct is not None and not direct.in_quote:
            before = window
            window = mask_explicit_speaker(window, direct, cfg, derive_rng(cfg.seed, doc.doc_id, utt.utt_id, "mask"))
            masked = window is not before
        anon_rng = derive_rng(cfg.seed, doc.doc_id, utt.utt_id, "anon")
        window, mapping = anonymize_characters(window, [entities[e] for e in cand_ids], cfg, anon_rng)
        candidates = [mapping[e] for e in cand_ids]
        anon_rng.shuffle(candidates)
        speaker = mapping[attr.speaker]
        utterance = window.render(utt.span.start, utt.span.end)

        sentences = window.sentence_texts()
        host = [k for k, si in enumerate(window.sentence_ids) if si in window.host_ids]
        keep = list(range(len(sentences)))
        if budget is not None:
            try:
                keep = truncate_to_budget(candidates, sentences, host, utterance, budget, count)
            except BudgetImpossible as exc:
                log_event(logger, "BudgetImpossible", logging.INFO, doc=doc.doc_id, utt=utt.utt_id, detail=str(exc))
                continue
        context = " ".join(sentences[k] for k in keep if sentences[k])
        out.append(DistantInstance(
            instance_id=f"{doc.doc_id}:{utt.utt_id}",
            context=context,
            utterance=utterance,
            candidates=tuple(candidates),
            speaker=speaker,
            category=category,
            answer_span=answer_span_for(candidates, speaker),
            doc_id=doc.doc_id,
            utt_id=utt.utt_id,
            masked=masked,
        ))
    return out


# -- export -----------------------------------------------------------------------

def instance_record(inst: DistantInstance) -> dict:
    d = asdict(inst)
    d["candidates"] = list(inst.candidates)
    d["answer_span"] = list(inst.answer_span)
    return d


def qa_record(inst: DistantInstance) -> dict:
    return {
        "instance_id": inst.instance_id,
        "input": inst.rendered,
        "question": inst.question,
        "answer": inst.speaker,
        "answer_span": list(inst.answer_span),
        "category": inst.category,
    }


def dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": ")) + "\n"


def export_instances(instances: Iterable[DistantInstance], path, fmt: str = "instance-lines") -> int:
    """Write one JSON record per line; returns the number of lines."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    to_record = instance_record if fmt == "instance-lines" else qa_record
    n = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for inst in instances:
                fh.write(dump_line(to_record(inst)))
                n += 1
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return n


def import_instances(path) -> list[DistantInstance]:
    """Read an instance-lines file back."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out = []
    for row, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            d["candidates"] = tuple(d["candidates"])
            d["answer_span"] = tuple(d["answer_span"])
            out.append(DistantInstance(**d))
        except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
            raise ParseError(str(exc), row) from exc
    return out


# -- statistics ---------------------------------------------------------------------

@dataclass
class CorpusStats:
    count: int
    category_counts: dict[str, int]
    category_fractions: dict[str, float] | None
    eligible_for_mask: int
    mask_rate: float | None
    mean_utterance_tokens: float | None
    sample: list[str]

    def as_dict(self) -> dict:
        return asdict(self)

    def render(self) -> str:
        lines = [f"instances: {self.count}"]
        for c in CATEGORIES:
            frac = "n/a" if self.category_fractions is None else f"{self.category_fractions[c]:.3f}"
            lines.append(f"{c}: {self.category_counts[c]} ({frac})")
        rate = "n/a" if self.mask_rate is None else f"{self.mask_rate:.4f}"
        lines.append(f"mask rate: {rate} over {self.eligible_for_mask} eligible")
        mean = "n/a" if self.mean_utterance_tokens is None else f"{self.mean_utterance_tokens:.1f}"
        lines.append(f"mean utterance tokens: {mean}")
        if self.sample:
            lines.append("audit sample: " + ", ".join(self.sample))
        return "\n".join(lines)


def corpus_stats(instances: Sequence[DistantInstance], sample_size: int = 0, seed: int = 0) -> CorpusStats:
    counts = {c: 0 for c in CATEGORIES}
    for inst in instances:
        counts[inst.category] += 1
    n = len(instances)
    eligible = [i for i in instances if i.masked is not None]
    ids = sorted(i.instance_id for i in instances)
    sample = random.Random(seed).sample(ids, min(sample_size, n)) if sample_size > 0 else []
    return CorpusStats(
        count=n,
        category_counts=counts,
        category_fractions={c: counts[c] / n for c in CATEGORIES} if n else None,
        eligible_for_mask=len(eligible),
        mask_rate=sum(1 for i in eligible if i.masked) / len(eligible) if eligible else None,
        mean_utterance_tokens=sum(whitespace_tokens(i.utterance) for i in instances) / n if n else None,
        sample=sample,
    )
