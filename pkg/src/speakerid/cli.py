"""Command-line entry point: extract, build-dataset, eval, stats."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .distant import (DEFAULT_BUDGET, DEFAULT_POOL, FORMATS, MaskingConfig, build_instances, corpus_stats,
                      export_instances, import_instances)
from .errors import ConfigError, IoError, SpeakerIdError
from .evaluation import evaluate, load_benchmark, stratified_report
from .ingest import load_document, prepare
from .lexicons import Lexicons, default_lexicons
from .pipeline import PipelineConfig, analyze

logger = logging.getLogger("speakerid")

ENV_CORPUS = "SPEAKERID_CORPUS"
ENV_OUT = "SPEAKERID_OUT"
CORPUS_SUFFIXES = (".txt", ".txt.gz", ".gz")


@dataclass
class RunConfig:
    corpus: str | None = None
    out: str | None = None
    seed: int = 0
    mask_prob: float = 0.85
    letter_pool: str = "".join(DEFAULT_POOL)
    budget: int = DEFAULT_BUDGET
    format: str = "instance-lines"
    jobs: int = 1
    log_level: str = "WARNING"
    sample: int = 10
    single_quote_dialogue: bool = False
    lexicons: dict = field(default_factory=dict)
    bench_format: str = "jsonl"
    columns: dict = field(default_factory=dict)
    strict: bool = False

    def validate(self) -> "RunConfig":
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.sample < 0:
            raise ConfigError("sample must be >= 0")
        self.masking()
        return self

    def masking(self) -> MaskingConfig:
        return MaskingConfig(self.mask_prob, tuple(self.letter_pool), self.seed)

    def lexicon_set(self) -> Lexicons:
        if not self.lexicons:
            return default_lexicons()
        known = {"abbreviations", "speech_verbs", "stoplist", "place_heads", "honorifics", "pronouns"}
        bad = set(self.lexicons) - known
        if bad:
            raise ConfigError(f"unknown lexicon(s): {', '.join(sorted(bad))}")
        return Lexicons.from_paths(**self.lexicons)


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    names = {f.name for f in fields(RunConfig)}
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown key(s): {', '.join(sorted(unknown))}")
    return data


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Defaults < config file < environment < command-line flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    if environ.get(ENV_CORPUS):
        values["corpus"] = environ[ENV_CORPUS]
    if environ.get(ENV_OUT):
        values["out"] = environ[ENV_OUT]
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def corpus_files(corpus: str | None) -> list[Path]:
    if not corpus:
        raise ConfigError(f"no corpus given (use --corpus or {ENV_CORPUS})")
    files = []
    for part in corpus.split(os.pathsep):
        p = Path(part)
        if p.is_dir():
            files.extend(sorted(f for f in p.iterdir() if f.is_file() and f.name.endswith(CORPUS_SUFFIXES)))
        elif p.is_file():
            files.append(p)
        else:
            raise IoError(f"corpus path not found: {p}")
    return files


# -- per-document workers (top level so they pickle) ------------------------------

def _pipeline(cfg: RunConfig) -> PipelineConfig:
    return PipelineConfig(lexicons=cfg.lexicon_set(), single_quote_dialogue=cfg.single_quote_dialogue)


def _extract_one(path: Path, cfg: RunConfig) -> tuple[str, list[dict]]:
    pcfg = _pipeline(cfg)
    doc = prepare(load_document(path), pcfg.lexicons.abbreviations)
    a = analyze(doc, pcfg)
    rows = []
    for u in a.utterances:
        attr = a.attributions[u.utt_id]
        rows.append({
            "doc_id": doc.doc_id,
            "utt_id": u.utt_id,
            "span": [u.span.start, u.span.end],
            "paragraph_id": u.paragraph_id,
            "text": " ".join(u.text(doc).split()),
            "speaker": a.speaker_name(u.utt_id),
            "entity_id": attr.speaker,
            "category": a.category(u.utt_id),
            "decided_by": list(attr.decided_by),
            "continuation_of": u.continuation_of,
        })
    return doc.doc_id, rows


def _build_one(path: Path, cfg: RunConfig):
    pcfg = _pipeline(cfg)
    doc = prepare(load_document(path), pcfg.lexicons.abbreviations)
    return build_instances(analyze(doc, pcfg), cfg.masking(), cfg.budget)


def _map_docs(fn, files: Sequence[Path], cfg: RunConfig) -> list:
    """Results in corpus order whatever the worker count."""
    if cfg.jobs == 1 or len(files) < 2:
        return [fn(f, cfg) for f in files]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, files, [cfg] * len(files)))


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise ConfigError(f"no output path given (use --out or {ENV_OUT})")
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise IoError(f"output directory not writable: {out}")
    return out


def _write_lines(path: Path, rows: list[dict]):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for r in rows:
                fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# -- commands ----------------------------------------------------------------------

def cmd_extract(cfg: RunConfig) -> int:
    files = corpus_files(cfg.corpus)
    out = _out_dir(cfg)
    if not files:
        logger.warning("event=EmptyCorpus corpus=%r", cfg.corpus)
        print("documents=0 utterances=0 attributed=0")
        return 0
    results = _map_docs(_extract_one, files, cfg)
    n_utt = n_attr = 0
    for doc_id, rows in results:
        _write_lines(out / f"{doc_id}.attributions.jsonl", rows)
        n_utt += len(rows)
        n_attr += sum(1 for r in rows if r["speaker"] is not None)
    print(f"documents={len(results)} utterances={n_utt} attributed={n_attr}")
    return 0


def instances_filename(fmt: str) -> str:
    return "instances.jsonl" if fmt == "instance-lines" else "qa.jsonl"


def cmd_build_dataset(cfg: RunConfig) -> int:
    files = corpus_files(cfg.corpus)
    out = _out_dir(cfg)
    if not files:
        logger.warning("event=EmptyCorpus corpus=%r", cfg.corpus)
    instances = [i for batch in _map_docs(_build_one, files, cfg) for i in batch]
    export_instances(instances, out / instances_filename(cfg.format), cfg.format)
    stats = corpus_stats(instances, cfg.sample, cfg.seed)
    try:
        (out / "stats.json").write_text(json.dumps(stats.as_dict(), indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write stats: {exc}") from exc
    print(stats.render())
    return 0


def cmd_eval(cfg: RunConfig, benchmark: str) -> int:
    records = load_benchmark(benchmark, cfg.bench_format, cfg.columns or None)
    report = evaluate(records, _pipeline(cfg), strict=cfg.strict)
    target = Path(cfg.out) if cfg.out else Path(str(benchmark) + ".report.json")
    if target.is_dir():
        target = target / (Path(benchmark).name + ".report.json")
    try:
        target.write_text(json.dumps(report.as_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report {target}: {exc}") from exc
    acc = "n/a" if report.accuracy is None else f"{report.accuracy:.3f}"
    print(f"records={report.total} correct={report.correct} unattributed={report.unattributed} accuracy={acc}")
    print(stratified_report(report))
    return 0


def cmd_stats(cfg: RunConfig, instance_file: str) -> int:
    instances = import_instances(instance_file)
    print(corpus_stats(instances, cfg.sample, cfg.seed).render())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags and environment override it")
    common.add_argument("--corpus", help=f"corpus directory or file(s), {os.pathsep}-separated (env {ENV_CORPUS})")
    common.add_argument("--out", help=f"output directory, or report file for eval (env {ENV_OUT})")
    common.add_argument("--seed", type=int, help="seed for masking, anonymization and audit samples (default 0)")
    common.add_argument("--mask-prob", dest="mask_prob", type=float,
                        help="probability of masking an explicit speaker (default 0.85)")
    common.add_argument("--budget", type=int, help=f"whitespace-token budget per input (default {DEFAULT_BUDGET})")
    common.add_argument("--format", choices=FORMATS, help="export format (default instance-lines)")
    common.add_argument("--jobs", type=int, help="worker processes (default 1)")
    common.add_argument("--sample", type=int, help="size of the audit sample (default 10)")
    common.add_argument("--log-level", dest="log_level", help="logging level (default WARNING)")
    common.add_argument("--single-quote-dialogue", dest="single_quote_dialogue", action="store_true", default=None,
                        help="treat single quotes as dialogue marks")

    p = argparse.ArgumentParser(prog="speakerid", description="Rule-based speaker identification and "
                                "distant-supervision dataset builder.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="attribute speakers in every corpus document")
    sub.add_parser("build-dataset", parents=[common], help="export masked, anonymized instances and stats")
    ev = sub.add_parser("eval", parents=[common], help="score the rules on a gold benchmark")
    ev.add_argument("benchmark", help="benchmark file")
    ev.add_argument("--bench-format", dest="bench_format", choices=("jsonl", "delimited"),
                    help="benchmark file format (default jsonl)")
    ev.add_argument("--strict", action="store_true", default=None, help="exact-string matching of names")
    st = sub.add_parser("stats", parents=[common], help="summarize an instance-lines file")
    st.add_argument("instances", help="instance-lines file")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        logging.basicConfig(level=getattr(logging, str(cfg.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s %(message)s", stream=sys.stderr, force=True)
        if args.command == "extract":
            return cmd_extract(cfg)
        if args.command == "build-dataset":
            return cmd_build_dataset(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.benchmark)
        return cmd_stats(cfg, args.instances)
    except SpeakerIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
