"""Scoring the rule pipeline on gold speaker benchmarks."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IoError, ParseError, UnsupportedLanguage, ValidationError, log_event
from .ingest import document_from_text
from .mentions import GazetteerRecognizer, alias_related
from .pipeline import CATEGORIES, PipelineConfig, analyze

logger = logging.getLogger(__name__)

SUPPORTED_LANGUAGES = ("en",)
UNCATEGORIZED = "uncategorized"
FIELDS = ("record_id", "context", "utterance", "candidates", "gold_speaker", "category", "language")


def _norm(name: str) -> str:
    return " ".join(name.split())


@dataclass(frozen=True)
class BenchmarkRecord:
    record_id: str
    context: str
    utterance: str
    candidates: tuple[str, ...]
    gold_speaker: str
    category: str | None = None
    language: str = "en"

    def __post_init__(self):
        if _norm(self.gold_speaker) not in {_norm(c) for c in self.candidates}:
            raise ValidationError(f"{self.record_id}: gold speaker {self.gold_speaker!r} is not a candidate")
        if self.category is not None and self.category not in CATEGORIES:
            raise ValidationError(f"{self.record_id}: unknown category {self.category!r}")


def names_match(predicted: str, gold: str, strict: bool = False, honorifics=None) -> bool:
    """Strict: equal after whitespace normalisation. Otherwise also alias-related."""
    if _norm(predicted) == _norm(gold):
        return True
    return not strict and alias_related(_norm(predicted), _norm(gold), honorifics)


# -- loading -----------------------------------------------------------------------

def _record(d: Mapping, row: int, candidate_sep: str = ";") -> BenchmarkRecord:
    missing = [f for f in ("context", "utterance", "candidates", "gold_speaker") if d.get(f) in (None, "")]
    if missing:
        raise ParseError(f"missing field(s): {', '.join(missing)}", row)
    cands = d["candidates"]
    if isinstance(cands, str):
        cands = [c.strip() for c in cands.split(candidate_sep) if c.strip()]
    if not isinstance(cands, (list, tuple)) or not all(isinstance(c, str) for c in cands):
        raise ParseError("candidates must be a list of names", row)
    try:
        return BenchmarkRecord(
            record_id=str(d.get("record_id") or f"r{row}"),
            context=str(d["context"]),
            utterance=str(d["utterance"]),
            candidates=tuple(cands),
            gold_speaker=str(d["gold_speaker"]),
            category=d.get("category") or None,
            language=str(d.get("language") or "en"),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc), row) from None


def load_benchmark(path, fmt: str = "jsonl", column_map: Mapping[str, str] | None = None,
                   delimiter: str = ",", candidate_sep: str = ";") -> list[BenchmarkRecord]:
    """Read native line-delimited JSON, or a delimited file through ``column_map``.

    ``column_map`` maps record fields to column headers; unmapped fields
    are looked up under their own name. Row numbers in errors are 1-based
    data rows.
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out = []
    if fmt == "jsonl":
        for row, line in enumerate(raw.splitlines(), 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", row) from None
            if not isinstance(d, dict):
                raise ParseError("record must be a JSON object", row)
            out.append(_record(d, row, candidate_sep))
    elif fmt == "delimited":
        cmap = dict(column_map or {})
        reader = csv.DictReader(raw.splitlines(), delimiter=delimiter)
        for row, cols in enumerate(reader, 1):
            if None in cols:
                raise ParseError("more values than header columns", row)
            d = {f: cols.get(cmap.get(f, f)) for f in FIELDS}
            out.append(_record(d, row, candidate_sep))
    else:
        raise ParseError(f"unknown benchmark format {fmt!r}")
    return out


# -- scoring -----------------------------------------------------------------------

@dataclass
class Prediction:
    record_id: str
    predicted: str | None
    gold: str
    correct: bool
    category: str | None


@dataclass
class EvalReport:
    total: int = 0
    correct: int = 0
    unattributed: int = 0
    per_category: dict[str, tuple[int, int, float]] = field(default_factory=dict)
    predictions: list[Prediction] = field(default_factory=list)

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.total if self.total else None

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "unattributed": self.unattributed,
            "per_category": {k: {"total": t, "correct": c, "accuracy": a} for k, (t, c, a) in self.per_category.items()},
            "predictions": [asdict(p) for p in self.predictions],
        }


def _locate(analysis, utterance: str):
    """The extracted utterance whose text equals the record's utterance."""
    target = _norm(utterance.strip().strip('"'))
    hits = [u for u in analysis.utterances if _norm(u.text(analysis.doc)) == target]
    if not hits:
        hits = [u for u in analysis.utterances if target and target in _norm(u.text(analysis.doc))]
    return hits[0] if hits else None


def predict(record: BenchmarkRecord, config: PipelineConfig | None = None) -> str | None:
    """Predicted candidate name for one record, or None."""
    if record.language not in SUPPORTED_LANGUAGES:
        raise UnsupportedLanguage(f"{record.record_id}: no rules for language {record.language!r}")
    base = config or PipelineConfig()
    names = list(record.candidates)
    cfg = replace(base, recognizer=lambda lex: GazetteerRecognizer(names, lex))
    doc = document_from_text(record.context, doc_id=record.record_id, abbreviations=cfg.lexicons.abbreviations)
    analysis = analyze(doc, cfg)
    utt = _locate(analysis, record.utterance)
    if utt is None:
        log_event(logger, "UtteranceNotFound", logging.INFO, record=record.record_id)
        return None
    attr = analysis.attributions.get(utt.utt_id)
    if attr is None or attr.speaker is None:
        return None
    entity = analysis.entity_by_id[attr.speaker]
    # Report the candidate the entity stands for.
    hon = cfg.lexicons.honorifics
    for cand in names:
        if _norm(cand) in {_norm(a) for a in entity.aliases}:
            return cand
    for cand in names:
        if any(alias_related(_norm(a), _norm(cand), hon) for a in entity.aliases):
            return cand
    return entity.canonical


def score(predictions: Iterable[Prediction]) -> EvalReport:
    """Order-independent reduction of per-record outcomes."""
    report = EvalReport()
    groups: dict[str, list[int]] = {}
    for p in predictions:
        report.total += 1
        report.correct += p.correct
        report.unattributed += p.predicted is None
        g = groups.setdefault(p.category or UNCATEGORIZED, [0, 0])
        g[0] += 1
        g[1] += p.correct
        report.predictions.append(p)
    report.predictions.sort(key=lambda p: p.record_id)
    order = list(CATEGORIES) + [UNCATEGORIZED]
    report.per_category = {k: (groups[k][0], groups[k][1], groups[k][1] / groups[k][0]) for k in order if k in groups}
    return report


def evaluate(records: Sequence[BenchmarkRecord], config: PipelineConfig | None = None,
             strict: bool = False) -> EvalReport:
    """Accuracy over records; an unattributed record counts as wrong."""
    for r in records:
        if r.language not in SUPPORTED_LANGUAGES:
            raise UnsupportedLanguage(f"{r.record_id}: no rules for language {r.language!r}")
    hon = (config or PipelineConfig()).lexicons.honorifics
    preds = []
    for r in records:
        guess = predict(r, config)
        ok = guess is not None and names_match(guess, r.gold_speaker, strict, hon)
        preds.append(Prediction(r.record_id, guess, r.gold_speaker, ok, r.category))
    return score(preds)


def stratified_report(report: EvalReport) -> str:
    """Plain-text table of accuracy by category."""
    header = f"{'category':<14} {'total':>6} {'correct':>8} {'accuracy':>9}"
    lines = [header, "-" * len(header)]
    for cat, (total, correct, acc) in report.per_category.items():
        lines.append(f"{cat:<14} {total:>6} {correct:>8} {acc:>9.3f}")
    return "\n".join(lines)
