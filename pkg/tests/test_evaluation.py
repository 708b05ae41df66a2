import copy
import json

import pytest
from hypothesis import given, settings, strategies as st

from speakerid.errors import ParseError, UnsupportedLanguage, ValidationError
from speakerid.evaluation import (BenchmarkRecord, EvalReport, Prediction, evaluate, load_benchmark, names_match,
                                  score, stratified_report)

CANDS = ("Elizabeth", "Wickham")


def rec(rid, context, utterance, gold, cands=CANDS, category=None, language="en"):
    return BenchmarkRecord(rid, context, utterance, tuple(cands), gold, category, language)


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def row(rid, gold="X", cands=("X", "Y")):
    return {"record_id": rid, "context": '"Hi," said X.', "utterance": "Hi,", "candidates": list(cands),
            "gold_speaker": gold}


def test_load_valid_and_empty(tmp_path):
    assert len(load_benchmark(write_jsonl(tmp_path / "b.jsonl", [row("a"), row("b"), row("c")]))) == 3
    (tmp_path / "e.jsonl").write_text("")
    assert load_benchmark(tmp_path / "e.jsonl") == []


def test_load_errors_carry_row(tmp_path):
    p = write_jsonl(tmp_path / "b.jsonl", [row("a"), row("b", gold="Z")])
    with pytest.raises(ValidationError) as exc:
        load_benchmark(p)
    assert exc.value.row == 2
    (tmp_path / "bad.jsonl").write_text('{"record_id": "a"}\nnot json\n')
    with pytest.raises(ParseError) as exc:
        load_benchmark(tmp_path / "bad.jsonl")
    assert exc.value.row == 1


def test_load_delimited(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text('id,ctx,utt,cands,gold\nr1,"""Hi,"" said X.","Hi,",X;Y,X\n')
    cmap = {"record_id": "id", "context": "ctx", "utterance": "utt", "candidates": "cands", "gold_speaker": "gold"}
    (r,) = load_benchmark(p, "delimited", cmap)
    assert r.candidates == ("X", "Y") and r.gold_speaker == "X"


def test_direct_record_correct():
    r = rec("r1", '"It is always the way," said Person X.', "It is always the way,", "Person X",
            ("Person X", "Person K"))
    report = evaluate([r])
    assert report.accuracy == 1.0


def test_silent_record_wrong():
    r = rec("r1", '"Nothing at all."', "Nothing at all.", "Elizabeth")
    report = evaluate([r])
    assert report.accuracy == 0.0 and report.unattributed == 1


def test_table1(table1_text):
    records = [
        rec("p3", table1_text, "You certainly do,", "Elizabeth", category="anaphoric"),
        rec("p4", table1_text, "I should be sorry indeed, if it were.", "Wickham", category="implicit"),
        rec("p5", table1_text, "True. Are the others coming out?", "Elizabeth", category="implicit"),
    ]
    report = evaluate(records)
    assert {p.record_id: p.correct for p in report.predictions} == {"p3": True, "p4": True, "p5": True}
    table = stratified_report(report)
    assert "anaphoric" in table and "implicit" in table


def test_unsupported_language():
    with pytest.raises(UnsupportedLanguage):
        evaluate([rec("r", "x", "x", "Elizabeth", language="zh")])


def test_alias_aware_matching():
    assert names_match("Mr. Darcy", "Darcy")
    assert names_match("Darcy", "Mr. Darcy")
    assert not names_match("Mr. Darcy", "Darcy", strict=True)
    assert not names_match("Mr. Bennet", "Mrs. Bennet")


def test_report_tables():
    assert stratified_report(EvalReport()).count("\n") == 1
    one = score([Prediction("a", "X", "X", True, "explicit")])
    assert stratified_report(one).count("\n") == 2
    mixed = score([Prediction("a", "X", "X", True, None), Prediction("b", None, "X", False, "implicit")])
    assert "uncategorized" in stratified_report(mixed)
    assert sum(t for t, _, _ in mixed.per_category.values()) == mixed.total


def test_evaluate_does_not_mutate(table1_text):
    records = [rec("p3", table1_text, "You certainly do,", "Elizabeth")]
    before = copy.deepcopy(records)
    evaluate(records)
    assert records == before


# -- properties ------------------------------------------------------------------

pred = st.builds(Prediction, st.text("abc", min_size=1, max_size=3), st.sampled_from([None, "X", "Y"]),
                 st.just("X"), st.booleans(), st.sampled_from([None, "explicit", "anaphoric", "implicit"]))


@settings(max_examples=200)
@given(st.lists(pred, max_size=25), st.randoms(use_true_random=False))
@pytest.mark.property
def test_scoring_permutation_invariant(preds, rnd):
    shuffled = list(preds)
    rnd.shuffle(shuffled)
    a, b = score(preds), score(shuffled)
    assert (a.total, a.correct, a.accuracy, a.unattributed, a.per_category) == \
        (b.total, b.correct, b.accuracy, b.unattributed, b.per_category)
    assert a.correct <= a.total
    assert sum(t for t, _, _ in a.per_category.values()) == a.total


names = st.sampled_from(["Darcy", "Mr. Darcy", "Fitzwilliam Darcy", "Jane", "Jane Bennet", "Mrs. Bennet", "Bennet"])


@settings(max_examples=200)
@given(names, names, st.booleans())
@pytest.mark.property
def test_matching_symmetric(a, b, strict):
    assert names_match(a, b, strict) == names_match(b, a, strict)
