import csv
import json

import pytest

from ovvis.cli import main


@pytest.fixture
def corpus(tmp_path):
    assert main(["synth", "--kind", "disappear_reappear", "--seed", "0", "--count", "3", "--frames", "12",
                 "--shuffle", "--out", str(tmp_path / "bundles")]) == 0
    return tmp_path / "bundles"


def test_synth_run_eval(corpus, tmp_path, capsys):
    names = sorted(p.name for p in corpus.iterdir())
    assert names == ["disappear_reappear_000000", "disappear_reappear_000001", "disappear_reappear_000002"]
    one = corpus / names[0]
    pred = tmp_path / "pred.json"
    assert main(["run", "--bundle", str(one), "--strategy", "topk", "--T", "9", "--K", "5",
                 "--out", str(pred)]) == 0
    doc = json.loads(pred.read_text())
    assert doc["videos"][0]["strategy"] == "topk(T=9,K=5)"

    capsys.readouterr()
    res = tmp_path / "res.json"
    assert main(["eval", "--pred", str(pred), "--gt", str(one / "gt.json"), "--out", str(res)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(res.read_text())
    assert set(printed) >= {"AP", "AP_n", "per_threshold"}
    assert res.with_suffix(".png").stat().st_size > 0


def test_run_is_reproducible(corpus, tmp_path):
    outs = []
    for i, workers in enumerate(("1", "3")):
        out = tmp_path / f"p{i}.json"
        assert main(["run", "--bundle", str(corpus), "--strategy", "longterm", "--workers", workers,
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert len(json.loads(outs[0])["videos"]) == 3


def test_ablate_writes_csv_and_figure(corpus, tmp_path, capsys):
    out = tmp_path / "ablation.csv"
    assert main(["ablate", "--bundles", str(corpus), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 15
    assert list(rows[0]) == ["strategy", "T", "K", "AP", "AP_n", "id_switches", "runtime_ms"]
    assert out.with_suffix(".png").stat().st_size > 0
    assert len(capsys.readouterr().out.splitlines()) == 15


def test_eval_novel_override(corpus, tmp_path, capsys):
    one = next(corpus.iterdir())
    pred = tmp_path / "pred.json"
    main(["run", "--bundle", str(one), "--out", str(pred)])
    novel = tmp_path / "novel.json"
    novel.write_text("[]")
    capsys.readouterr()
    assert main(["eval", "--pred", str(pred), "--gt", str(one / "gt.json"), "--novel", str(novel)]) == 0
    assert json.loads(capsys.readouterr().out)["AP_n"] is None


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--bundle", "x"],
    ["synth", "--kind", "nonsense", "--out", "x"],
    ["synth", "--kind", "stable", "--queries", "3", "--instances", "5", "--out", "{tmp}/s"],
    ["run", "--bundle", "{tmp}", "--out", "{tmp}/p.json"],
])
def test_invalid_input_exits_1(argv, tmp_path, capsys):
    assert main([a.replace("{tmp}", str(tmp_path)) for a in argv]) == 1
    assert "error" in capsys.readouterr().err


def test_io_failure_exits_2(tmp_path, capsys):
    assert main(["run", "--bundle", str(tmp_path / "absent"), "--out", str(tmp_path / "p.json")]) == 2
    assert main(["eval", "--pred", str(tmp_path / "no.json"), "--gt", str(tmp_path / "no.json")]) == 2
