"""Rule-based speaker identification for quoted speech in novels, and a
distant-supervision dataset builder on top of it."""

from .distant import DistantInstance, MaskingConfig, build_instances, export_instances
from .evaluation import BenchmarkRecord, EvalReport, evaluate, load_benchmark
from .ingest import Document, document_from_text, load_document, prepare
from .pipeline import DocumentAnalysis, PipelineConfig, analyze
from .quotes import Utterance, extract_utterances

__all__ = [
    "BenchmarkRecord", "DistantInstance", "Document", "DocumentAnalysis", "EvalReport", "MaskingConfig",
    "PipelineConfig", "Utterance", "analyze", "build_instances", "document_from_text", "evaluate",
    "export_instances", "extract_utterances", "load_benchmark", "load_document", "prepare",
]
__version__ = "0.1.0"
