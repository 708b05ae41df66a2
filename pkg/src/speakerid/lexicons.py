"""Loading of the word lists shipped in ``speakerid/data``.

Every list is a plain UTF-8 file; blank lines and lines starting with
``#`` are ignored. Tab-separated files carry extra columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ConfigError

GENDERS = ("male", "female", "unknown")
PERSONS = ("first", "second", "third")


def _read_lines(path: str | Path | None, default: str) -> list[str]:
    if path is None:
        text = resources.files("speakerid.data").joinpath(default).read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read lexicon {path}: {exc}") from exc
    rows = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append(line.rstrip("\n").strip())
    return rows


def _columns(row: str, n: int, path) -> list[str]:
    cols = [c.strip() for c in row.split("\t")]
    if len(cols) != n:
        raise ConfigError(f"{path or 'builtin'}: expected {n} tab-separated columns in {row!r}")
    return cols


def load_abbreviations(path=None) -> frozenset[str]:
    """Lower-cased abbreviations without their final period."""
    return frozenset(r.lower().rstrip(".") for r in _read_lines(path, "abbreviations.txt"))


def load_speech_verbs(path=None) -> frozenset[str]:
    return frozenset(r.lower() for r in _read_lines(path, "speech_verbs.txt"))


def load_stoplist(path=None) -> frozenset[str]:
    return frozenset(_read_lines(path, "stoplist.txt"))


def load_place_heads(path=None) -> frozenset[str]:
    return frozenset(_read_lines(path, "place_heads.txt"))


def load_honorifics(path=None) -> dict[str, str]:
    out = {}
    for row in _read_lines(path, "honorifics.tsv"):
        surface, gender = _columns(row, 2, path)
        if gender not in GENDERS:
            raise ConfigError(f"unknown gender {gender!r} for honorific {surface!r}")
        out[surface] = gender
    return out


def load_pronouns(path=None) -> dict[str, tuple[str, str]]:
    """Map lower-cased pronoun surface to ``(person, gender)``."""
    out = {}
    for row in _read_lines(path, "pronouns.tsv"):
        surface, person, gender = _columns(row, 3, path)
        if person not in PERSONS or gender not in GENDERS:
            raise ConfigError(f"bad pronoun row {row!r}")
        out[surface.lower()] = (person, gender)
    return out


@dataclass(frozen=True)
class Lexicons:
    """All word lists used by the rule pipeline."""

    abbreviations: frozenset = field(default_factory=load_abbreviations)
    speech_verbs: frozenset = field(default_factory=load_speech_verbs)
    stoplist: frozenset = field(default_factory=load_stoplist)
    place_heads: frozenset = field(default_factory=load_place_heads)
    honorifics: dict = field(default_factory=load_honorifics)
    pronouns: dict = field(default_factory=load_pronouns)

    @classmethod
    def from_paths(cls, abbreviations=None, speech_verbs=None, stoplist=None,
                   place_heads=None, honorifics=None, pronouns=None) -> "Lexicons":
        return cls(
            abbreviations=load_abbreviations(abbreviations),
            speech_verbs=load_speech_verbs(speech_verbs),
            stoplist=load_stoplist(stoplist),
            place_heads=load_place_heads(place_heads),
            honorifics=load_honorifics(honorifics),
            pronouns=load_pronouns(pronouns),
        )

    def __hash__(self):
        return id(self)


@lru_cache(maxsize=1)
def default_lexicons() -> Lexicons:
    return Lexicons()
