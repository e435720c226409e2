import json
import shutil
from pathlib import Path

import pytest

from chunkorder.cli import main
from chunkorder.errors import EmptyCorpus
from chunkorder.report import TIMESTAMP_KEY, build_bundle, config_from_mapping, load_config, run_report

from conftest import FIXTURES, fixture_path

GOLDEN = FIXTURES / "expected_bundle"


def bundle_files(root: Path) -> dict:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            data = p.read_bytes()
            if p.name == "manifest.json":
                m = json.loads(data)
                m.pop(TIMESTAMP_KEY)
                data = json.dumps(m, sort_keys=True).encode()
            out[p.relative_to(root).as_posix()] = data
    return out


def test_report_matches_golden(tmp_path):
    out = tmp_path / "bundle"
    assert main(["report", "--config", str(fixture_path("report.toml")), "--output-dir", str(out)]) == 0
    got, want = bundle_files(out), bundle_files(GOLDEN)
    assert sorted(got) == sorted(want)
    for name in want:
        assert got[name] == want[name], name


def test_report_deterministic_in_memory():
    cfg = load_config(fixture_path("report.toml"))
    assert build_bundle(cfg, "t0") == build_bundle(cfg, "t0")
    manifest = json.loads(build_bundle(cfg, "t0")["manifest.json"])
    assert set(manifest["inputs"]) == {"mini_en", "mini_zh", "embeddings"}
    assert all(len(v["sha256"]) == 64 for v in manifest["inputs"].values())


def test_report_replaces_previous_bundle_only(tmp_path):
    cfg = load_config(fixture_path("report.toml"))
    out = tmp_path / "bundle"
    (out / "stale").mkdir(parents=True)
    (out / "manifest.json").write_text("{}")
    (out / "stale" / "junk.csv").write_text("x")
    run_report(config_from_mapping({**_raw_cfg(), "output_dir": str(out)}, FIXTURES))
    assert not (out / "stale").exists()
    foreign = tmp_path / "foreign"
    foreign.mkdir()
    (foreign / "notes.txt").write_text("keep me")
    assert main(["report", "--config", str(fixture_path("report.toml")), "--output-dir", str(foreign)]) == 1
    assert (foreign / "notes.txt").read_text() == "keep me"
    assert cfg.output_dir.name == "out"


def _raw_cfg():
    return {
        "corpora": [
            {"name": "mini_en", "path": "mini_en.txt", "language": "english"},
            {"name": "mini_zh", "path": "mini_zh.txt", "language": "chinese"},
        ]
    }


def test_empty_corpus_fails_before_writing(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("\n")
    shutil.copy(fixture_path("mini_en.txt"), tmp_path / "en.txt")
    out = tmp_path / "bundle"
    cfg = config_from_mapping(
        {
            "output_dir": "bundle",
            "corpora": [
                {"name": "en", "path": "en.txt", "language": "english"},
                {"name": "nothing", "path": "empty.txt", "language": "english"},
            ],
        },
        tmp_path,
    )
    with pytest.raises(EmptyCorpus):
        run_report(cfg)
    assert not out.exists()
    assert not list(tmp_path.glob(".bundle-*"))


def test_exit_codes(tmp_path, capsys):
    assert main([]) == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    nested = tmp_path / "nested.txt"
    nested.write_text("<S>a</S>\n<S>b <V>c</V></S>\n", encoding="utf-8")
    assert main(["validate", "--in", str(nested)]) == 2
    assert "NestedTag" in capsys.readouterr().err
    assert main(["validate", "--in", str(fixture_path("mini_en.txt"))]) == 0
    assert main(["stats", "--in", str(tmp_path / "missing.txt")]) == 2
    bad_cfg = tmp_path / "bad.toml"
    bad_cfg.write_text("corpora = [ {name = 'x'} ]\n")
    assert main(["report", "--config", str(bad_cfg)]) == 1


def test_annotate_exit_codes(tmp_path, mock_chat, api_key):
    m = mock_chat(lambda target, msgs: "<S>broken" if target == "bad" else f"<S>{target}</S>")
    cfg = tmp_path / "chunkorder.toml"
    cfg.write_text(
        "[annotation]\n"
        f'endpoint_url = "{m.url}"\n'
        'model_name = "mock"\n'
        "retry_limit = 0\n"
        f'few_shot_path = "{fixture_path("fewshot.json").as_posix()}"\n'
    )
    raw = tmp_path / "raw.txt"
    raw.write_text("good one\ngood two\n")
    out = tmp_path / "tagged.txt"
    assert main(["annotate", "--in", str(raw), "--out", str(out), "--config", str(cfg)]) == 0
    assert out.read_text().splitlines() == ["raw-L1\t<S>good one</S>", "raw-L2\t<S>good two</S>"]
    raw.write_text("good one\nbad\n")
    assert main(["annotate", "--in", str(raw), "--out", str(out), "--config", str(cfg)]) == 3


def test_annotate_service_down(tmp_path, api_key):
    cfg = tmp_path / "chunkorder.toml"
    cfg.write_text(
        "[annotation]\n"
        'endpoint_url = "http://127.0.0.1:9/v1/chat/completions"\n'
        'model_name = "mock"\n'
        "retry_limit = 0\n"
        "timeout = 2\n"
        f'few_shot_path = "{fixture_path("fewshot.json").as_posix()}"\n'
    )
    raw = tmp_path / "raw.txt"
    raw.write_text("hello\n")
    assert main(["annotate", "--in", str(raw), "--out", str(tmp_path / "o.txt"), "--config", str(cfg)]) == 3


def test_annotate_config_refuses_api_key(tmp_path):
    cfg = tmp_path / "chunkorder.toml"
    cfg.write_text('[annotation]\nendpoint_url = "http://x"\nmodel_name = "m"\napi_key = "sk"\n')
    assert main(["annotate", "--in", "x", "--out", "y", "--config", str(cfg)]) == 1


def test_subcommand_outputs(tmp_path, capsys):
    en = str(fixture_path("mini_en.txt"))
    zh = str(fixture_path("mini_zh.txt"))
    assert main(["stats", "--in", zh, "--language", "zh"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["lines"] == 30 and stats["tags"] == 121 and len(stats["fc_distribution"]) == 8
    assert main(["tests", "--in", en, "--against", zh, "--against-language", "chinese"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "cross/mini_en_vs_mini_zh/tests.csv").read_text()
    assert main(["condprob", "--in", en, "--name", "mini_en"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "mini_en/condprob.csv").read_text()
    svg = tmp_path / "t.svg"
    assert main(["transitions", "--in", en, "--matrix", "--svg", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")
    assert capsys.readouterr().out.startswith("from,time,place,")
    assert main(["parse", "--in", en]) == 0
    first = json.loads(capsys.readouterr().out.splitlines()[0])
    assert first["chunks"][0]["label"] in {"S", "V", "O", "time", "place", "manner"}
    assert main(["semantics", "--embeddings", str(fixture_path("emb_mini.jsonl")), "--subset", "en", "--subset", "zh"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("en,zh,")
