"""Command line behavior: exit codes, config resolution, and the full
gen-fixtures -> ingest -> query -> report chain on a small corpus."""

import hashlib
import json
import os

import pytest

from reviewlake import clean, cli


def sha_tree(d):
    out = {}
    for name in sorted(os.listdir(d)):
        with open(os.path.join(d, name), "rb") as fh:
            out[name] = hashlib.sha256(fh.read()).hexdigest()
    return out


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("clidata")
    assert cli.run(["gen-fixtures", "--out", str(d), "--rows", "300", "--seed", "4"]) == 0
    return d


@pytest.fixture(scope="module")
def lake_dir(data_dir, tmp_path_factory):
    d = tmp_path_factory.mktemp("clilake") / "lake"
    assert cli.run(["ingest", "--config", str(data_dir / "config.json"), "--lake", str(d)]) == 0
    return d


def test_gen_fixtures_writes_corpus(data_dir):
    truth = json.load(open(data_dir / "ground_truth.json"))
    assert (data_dir / "config.json").exists()
    for src, t in truth["per_source"].items():
        assert (data_dir / t["file"]).exists(), src


def test_ingest_reports_manifest_and_matches_truth(data_dir, tmp_path, capsys):
    lake = tmp_path / "lake"
    assert cli.run(["ingest", "--config", str(data_dir / "config.json"), "--lake", str(lake)]) == 0
    printed = json.loads(capsys.readouterr().out)
    on_disk = json.load(open(lake / "manifest.json"))
    assert printed == on_disk
    assert (lake / "rejects.jsonl").exists()
    for name in on_disk["record_files"]:
        assert (lake / name).exists()
    truth = json.load(open(data_dir / "ground_truth.json"))
    for src, t in truth["per_source"].items():
        st = on_disk["per_source"][src]
        assert st["accepted"] == t["accepted"]
        assert st["blank_lines"] == t["blank_lines"]
        assert st["rejected_by_reason"] == t["rejected_by_reason"]


def test_query_single_id(lake_dir, tmp_path):
    assert cli.run(["query", "per_year", "--lake", str(lake_dir), "--out", str(tmp_path)]) == 0
    blob = open(tmp_path / "per_year.csv", "rb").read()
    assert blob.startswith(b"year,source,count\n")
    assert sorted(os.listdir(tmp_path)) == ["per_year.csv"]


def test_query_defaults_to_all_views(lake_dir, tmp_path):
    assert cli.run(["query", "--lake", str(lake_dir), "--out", str(tmp_path)]) == 0
    assert sorted(os.listdir(tmp_path)) == sorted(f"{q}.csv" for q in cli.analytics.QUERY_IDS)


def test_query_json_format(lake_dir, tmp_path):
    rc = cli.run(["query", "per_month", "--format", "json", "--lake", str(lake_dir), "--out", str(tmp_path)])
    assert rc == 0
    rows = json.load(open(tmp_path / "per_month.json"))
    assert rows and set(rows[0]) == {"month", "source", "count"}


def test_report_emits_tables_and_charts(lake_dir, tmp_path):
    assert cli.run(["report", "--lake", str(lake_dir), "--out", str(tmp_path)]) == 0
    names = sorted(os.listdir(tmp_path))
    want = sorted([f"{q}.csv" for q in cli.analytics.QUERY_IDS] + [f"{q}.svg" for q in cli.analytics.QUERY_IDS])
    assert names == want
    for q in cli.analytics.QUERY_IDS:
        svg = open(tmp_path / f"{q}.svg", encoding="utf-8").read()
        assert svg.startswith("<svg ") and svg.endswith("</svg>\n")


def test_exit_codes(lake_dir, tmp_path, capsys):
    assert cli.run(["ingest", "--lake", str(tmp_path / "l")]) == 2  # no sources
    assert cli.run(["query", "bogus", "--lake", str(lake_dir), "--out", str(tmp_path)]) == 2
    assert cli.run(["query", "--lake", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 1
    assert cli.run(["query", "--lake", str(lake_dir), "--out", str(tmp_path), "--partitions", "0"]) == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as ei:
        cli.run(["query", "--format", "tsv"])
    assert ei.value.code == 2


@pytest.mark.parametrize(
    "doc",
    [
        '{"sources": []',  # not valid JSON
        '{"lake": "x"}',  # unknown key
        '{"neutral_policy": "keep"}',
        '{"sources": [{"source": "mars", "path": "x.csv"}]}',
        '{"sources": [{"source": "yelp", "path": "a.csv"}, {"source": "yelp", "path": "b.csv"}]}',
        '{"threads": 0}',
        '{"format": "tsv"}',
    ],
)
def test_bad_config_is_exit_2(tmp_path, capsys, doc):
    p = tmp_path / "cfg.json"
    p.write_text(doc)
    assert cli.run(["ingest", "--config", str(p), "--lake", str(tmp_path / "l")]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_is_exit_1(tmp_path, capsys):
    assert cli.run(["ingest", "--config", str(tmp_path / "nope.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_config_paths_resolve_against_config_dir(tmp_path, monkeypatch):
    data = tmp_path / "data"
    assert cli.run(["gen-fixtures", "--out", str(data), "--rows", "120", "--seed", "6"]) == 0
    monkeypatch.chdir(tmp_path)  # cwd differs from the config's directory
    assert cli.run(["ingest", "--config", str(data / "config.json")]) == 0
    assert (data / "lake" / "manifest.json").exists()
    assert not (tmp_path / "lake").exists()


def test_mapping_source_mismatch_is_exit_1(data_dir, tmp_path, capsys):
    truth = json.load(open(data_dir / "ground_truth.json"))
    amazon_file = str(data_dir / truth["per_source"]["amazon"]["file"])
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({
        "source": "yelp",
        "column_map": {"name": "a", "date": "b", "sentiment": "c", "upvotes": "d", "text": "e"},
        "sentiment_scheme": "five_class_label",
        "date_formats": ["iso"],
    }))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"sources": [{"source": "amazon", "path": amazon_file, "mapping": str(mp)}]}
    ))
    assert cli.run(["ingest", "--config", str(cfg), "--lake", str(tmp_path / "lake")]) == 1
    assert "is for 'yelp'" in capsys.readouterr().err


def test_stoplist_env_override(data_dir, tmp_path, monkeypatch):
    sp = tmp_path / "stops.txt"
    sp.write_text("the\nzebra\n")
    monkeypatch.setenv("REVIEWLAKE_STOPLIST", str(sp))
    lake = tmp_path / "lake"
    assert cli.run(["ingest", "--config", str(data_dir / "config.json"), "--lake", str(lake)]) == 0
    manifest = json.load(open(lake / "manifest.json"))
    assert manifest["stoplist_checksum"] == clean.load_stoplist(str(sp)).checksum
    assert manifest["stoplist_checksum"] != clean.default_stoplist().checksum


def test_threads_do_not_change_lake_bytes(data_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    cfg = str(data_dir / "config.json")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["ingest", "--config", cfg, "--lake", str(a), "--threads", "1"]) == 0
    assert cli.run(["ingest", "--config", cfg, "--lake", str(b), "--threads", "3"]) == 0
    assert sha_tree(a) == sha_tree(b)


def test_partitions_do_not_change_tables(lake_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["query", "--lake", str(lake_dir), "--out", str(a), "--partitions", "2"]) == 0
    assert cli.run(["query", "--lake", str(lake_dir), "--out", str(b), "--partitions", "5", "--threads", "2"]) == 0
    assert sha_tree(a) == sha_tree(b)
