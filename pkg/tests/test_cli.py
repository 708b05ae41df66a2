import json

import pytest

from speakerid.cli import RunConfig, build_parser, load_config_file, main, resolve_config
from speakerid.errors import ConfigError

from conftest import DATA, TABLE1


@pytest.fixture
def corpus(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    (d / "table1.txt").write_text(TABLE1)
    return d


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_extract(corpus, tmp_path, capsys):
    code, out, _ = run(["extract", "--corpus", corpus, "--out", tmp_path / "o"], capsys)
    assert code == 0
    assert out.strip() == "documents=1 utterances=5 attributed=5"
    rows = [json.loads(l) for l in (tmp_path / "o" / "table1.attributions.jsonl").read_text().splitlines()]
    assert [r["speaker"] for r in rows] == ["Wickham", "Elizabeth", "Elizabeth", "Wickham", "Elizabeth"]


def test_extract_empty_corpus(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code, out, err = run(["extract", "--corpus", tmp_path / "empty", "--out", tmp_path / "o"], capsys)
    assert code == 0 and "documents=0" in out
    assert "EmptyCorpus" in err
    assert list((tmp_path / "o").iterdir()) == []


def test_missing_path_nonzero(tmp_path, capsys):
    code, out, err = run(["extract", "--corpus", tmp_path / "nope", "--out", tmp_path / "o"], capsys)
    assert code != 0 and str(tmp_path / "nope") in err
    assert out == ""


def test_build_dataset_deterministic(corpus, tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        code, out, _ = run(["build-dataset", "--corpus", corpus, "--out", tmp_path / name, "--seed", 5], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    for f in ("instances.jsonl", "stats.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_build_dataset_forced_mask(corpus, tmp_path, capsys):
    code, out, _ = run(["build-dataset", "--corpus", corpus, "--out", tmp_path / "o", "--mask-prob", 1.0], capsys)
    assert code == 0
    stats = json.loads((tmp_path / "o" / "stats.json").read_text())
    assert stats["mask_rate"] == 1.0
    assert "mask rate: 1.0000" in out


def test_qa_format(corpus, tmp_path, capsys):
    code, _, _ = run(["build-dataset", "--corpus", corpus, "--out", tmp_path / "o", "--format", "qa-lines"], capsys)
    assert code == 0
    rec = json.loads((tmp_path / "o" / "qa.jsonl").read_text().splitlines()[0])
    assert rec["input"].startswith("People: ")


def test_stats(corpus, tmp_path, capsys):
    run(["build-dataset", "--corpus", corpus, "--out", tmp_path / "o"], capsys)
    path = tmp_path / "o" / "instances.jsonl"
    code, out1, _ = run(["stats", path, "--seed", 3, "--sample", 3], capsys)
    _, out2, _ = run(["stats", path, "--seed", 3, "--sample", 3], capsys)
    assert code == 0 and out1 == out2
    counts = [int(l.split(":")[1].split()[0]) for l in out1.splitlines()
              if l.split(":")[0] in ("explicit", "anaphoric", "implicit")]
    assert sum(counts) == int(out1.splitlines()[0].split(":")[1])
    (tmp_path / "empty.jsonl").write_text("")
    code, out, _ = run(["stats", tmp_path / "empty.jsonl"], capsys)
    assert code == 0 and "instances: 0" in out


def test_eval(tmp_path, capsys):
    rows = [{"record_id": f"r{i}", "context": f'"Line {i}," said {n}.', "utterance": f"Line {i},",
             "candidates": ["Jane", "Tom"], "gold_speaker": n, "category": "explicit"}
            for i, n in enumerate(["Jane", "Tom", "Jane"])]
    bench = tmp_path / "bench.jsonl"
    bench.write_text("".join(json.dumps(r) + "\n" for r in rows))
    code, out, _ = run(["eval", bench], capsys)
    assert code == 0 and "accuracy=1.000" in out and "explicit" in out
    assert json.loads((tmp_path / "bench.jsonl.report.json").read_text())["accuracy"] == 1.0


def test_eval_unsupported_language(tmp_path, capsys):
    bench = tmp_path / "bench.jsonl"
    bench.write_text(json.dumps({"context": "x", "utterance": "x", "candidates": ["A"], "gold_speaker": "A",
                                 "language": "zh"}) + "\n")
    code, out, err = run(["eval", bench], capsys)
    assert code != 0 and "zh" in err and out == ""


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"seed": 4, "corpus": "from-file", "out": "file-out", "budget": 100}))
    args = build_parser().parse_args(["extract", "--config", str(cfg_file), "--seed", "9"])
    cfg = resolve_config(args, {"SPEAKERID_CORPUS": "from-env"})
    assert (cfg.seed, cfg.corpus, cfg.out, cfg.budget) == (9, "from-env", "file-out", 100)


def test_config_errors(tmp_path):
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"sed": 1}))
    with pytest.raises(ConfigError):
        load_config_file(bad)
    with pytest.raises(ConfigError):
        RunConfig(jobs=0).validate()
    with pytest.raises(ConfigError):
        RunConfig(letter_pool="BI").validate()


def test_jobs_match_serial(tmp_path, capsys):
    d = tmp_path / "c"
    d.mkdir()
    (d / "one.txt").write_text(TABLE1)
    (d / "two.txt").write_text((DATA / "pride_and_prejudice_ch1_2.txt").read_text())
    run(["build-dataset", "--corpus", d, "--out", tmp_path / "s", "--jobs", 1], capsys)
    run(["build-dataset", "--corpus", d, "--out", tmp_path / "p", "--jobs", 2], capsys)
    assert (tmp_path / "s" / "instances.jsonl").read_bytes() == (tmp_path / "p" / "instances.jsonl").read_bytes()


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["build-dataset", "--help"])
    out = " ".join(capsys.readouterr().out.split())
    assert "default 0.85" in out and "default 400" in out
