import logging

import pytest
from hypothesis import given, settings, strategies as st

from speakerid.ingest import Span, document_from_text
from speakerid.lexicons import default_lexicons
from speakerid.mentions import (NAMED, PRONOUN, CharacterEntity, GazetteerRecognizer, Mention, alias_related,
                                detect_mentions, infer_gender, merge_aliases)
from speakerid.quotes import extract_utterances


def named(doc, **kw):
    ms = detect_mentions(doc, range(len(doc.sentences)), **kw)
    return [m.surface for m in ms if m.kind == NAMED]


def mk(surfaces):
    return [Mention(Span(i * 20, i * 20 + len(s)), s, NAMED, sentence_id=0, mention_id=i)
            for i, s in enumerate(surfaces)]


def partition(entities):
    return sorted(sorted(e.aliases) for e in entities)


def test_named_and_honorific():
    doc = document_from_text("Elizabeth smiled at Mr. Darcy.")
    assert named(doc) == ["Elizabeth", "Mr. Darcy"]


def test_sentence_initial_stoplist():
    assert named(document_from_text("The house stood alone.")) == []


def test_pronoun_in_quote():
    doc = document_from_text('"I should be sorry indeed," said he.')
    utts = extract_utterances(doc)
    ms = detect_mentions(doc, range(1), utterances=utts)
    first = [m for m in ms if m.surface == "I"]
    assert len(first) == 1 and first[0].person == "first" and first[0].utt_id == utts[0].utt_id
    he = next(m for m in ms if m.surface == "he")
    assert he.kind == PRONOUN and he.gender == "male" and not he.in_quote


def test_contractions_and_exclamations_are_not_names():
    doc = document_from_text('"Don\'t go!" cried Jane. "Nonsense!" True, she thought.')
    assert named(doc) == ["Jane"]


def test_honorific_kept_with_first_name():
    doc = document_from_text("Then Princess Mary rose.")
    assert named(doc) == ["Princess Mary"]


def test_gazetteer():
    doc = document_from_text("Person A met Person B and Person A left.")
    names = named(doc, recognizer=GazetteerRecognizer(["Person A", "Person B"]))
    assert names == ["Person A", "Person B", "Person A"]


def test_every_pronoun_once():
    doc = document_from_text("She told him that I would see her and you.")
    pro = [m.surface for m in detect_mentions(doc, range(1)) if m.kind == PRONOUN]
    assert pro == ["She", "him", "I", "her", "you"]


def test_window_bounds():
    doc = document_from_text("One. Two.")
    with pytest.raises(IndexError):
        detect_mentions(doc, range(0, 5))


def test_mention_invariants():
    with pytest.raises(ValueError):
        Mention(Span(0, 2), "he", PRONOUN)
    with pytest.raises(ValueError):
        Mention(Span(0, 2), "Al", NAMED, person="third")


def test_merge_transitive():
    (e,) = merge_aliases(mk(["Darcy", "Mr. Darcy", "Fitzwilliam Darcy"]))
    assert e.canonical == "Fitzwilliam Darcy"
    assert e.gender == "male"


def test_merge_distinct():
    assert len(merge_aliases(mk(["Elizabeth", "Wickham"]))) == 2


def test_ambiguous_merge(caplog):
    caplog.set_level(logging.INFO)
    ents = merge_aliases(mk(["Bennet", "Jane Bennet", "Mary Bennet"]))
    assert partition(ents) == [["Bennet"], ["Jane Bennet"], ["Mary Bennet"]]
    assert "AmbiguousMerge" in caplog.text


def test_gender_guard():
    ents = merge_aliases(mk(["Mr. Bennet", "Mrs. Bennet"]))
    assert len(ents) == 2
    assert not alias_related("Mr. Bennet", "Mrs. Bennet")
    assert alias_related("Bennet", "Mrs. Bennet")
    assert not alias_related("Ann", "Anne")


def test_infer_gender():
    doc = document_from_text("Elizabeth paused. She smiled. Elizabeth left, and she sighed. Then Ruth came.")
    ent = CharacterEntity("e0", "Elizabeth", frozenset({"Elizabeth"}))
    assert infer_gender(ent, doc) == "female"
    ruth = CharacterEntity("e1", "Ruth", frozenset({"Ruth"}))
    assert infer_gender(ruth, doc) == "unknown"
    darcy = CharacterEntity("e2", "Mr. Darcy", frozenset({"Mr. Darcy"}))
    assert infer_gender(darcy, doc) == "male"


def test_fixture_genders():
    from conftest import DATA
    from speakerid.mentions import infer_genders
    doc = document_from_text((DATA / "pride_and_prejudice_ch1_2.txt").read_text())
    ms = detect_mentions(doc, range(len(doc.sentences)), utterances=extract_utterances(doc))
    ents = merge_aliases(ms)
    genders = infer_genders(ents, ms)
    by_name = {e.canonical: genders[e.entity_id] for e in ents}
    assert by_name["Mr. Bennet"] == "male"
    assert by_name["Mrs. Bennet"] == "female"


# -- properties ------------------------------------------------------------------

FIRST = ["Jane", "Mary", "Elizabeth", "Charles", "Fitzwilliam", "Ann"]
LAST = ["Bennet", "Darcy", "Bingley", "Lucas"]
HON = ["", "Mr. ", "Mrs. ", "Miss ", "Lady "]

surface = st.one_of(
    st.sampled_from(FIRST), st.sampled_from(LAST),
    st.builds(lambda h, f, l: f"{h}{f} {l}", st.sampled_from(HON), st.sampled_from(FIRST), st.sampled_from(LAST)),
    st.builds(lambda h, l: f"{h}{l}", st.sampled_from(HON[1:]), st.sampled_from(LAST)),
)


@settings(max_examples=150)
@given(st.lists(surface, min_size=1, max_size=10), st.randoms(use_true_random=False))
@pytest.mark.property
def test_merge_order_invariant(surfaces, rnd):
    ms = mk(surfaces)
    shuffled = list(ms)
    rnd.shuffle(shuffled)
    a, b = merge_aliases(ms), merge_aliases(shuffled)
    assert partition(a) == partition(b)
    assert [(e.canonical, e.gender, e.mention_ids) for e in a] == [(e.canonical, e.gender, e.mention_ids) for e in b]


@settings(max_examples=150)
@given(st.lists(surface, min_size=1, max_size=10))
@pytest.mark.property
def test_merge_disjoint_and_canonical(surfaces):
    ents = merge_aliases(mk(surfaces))
    seen = set()
    for e in ents:
        assert not (seen & e.aliases)
        seen |= e.aliases
        assert e.canonical in e.aliases
        assert len(e.canonical) == max(len(a) for a in e.aliases)
        # Every alias relates to some other alias of its entity.
        for a in e.aliases:
            assert len(e.aliases) == 1 or any(alias_related(a, b) for b in e.aliases - {a})
    assert seen == set(surfaces)


pronoun_words = st.sampled_from(sorted(default_lexicons().pronouns))
filler = st.sampled_from(["the", "cat", "went", "home", "slowly", "and", "then", "rain"])


@settings(max_examples=150)
@given(st.lists(st.one_of(pronoun_words, filler), min_size=1, max_size=15))
@pytest.mark.property
def test_each_pronoun_once(words):
    words = [w for w in words if w != "i"]
    text = " ".join(words) + "."
    doc = document_from_text(text)
    got = [m.surface.lower() for m in detect_mentions(doc, range(len(doc.sentences))) if m.kind == PRONOUN]
    want = [w.lower() for w in words if w.lower() in default_lexicons().pronouns]
    assert got == want
