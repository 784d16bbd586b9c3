import json

import pytest
from click.testing import CliRunner

from medmatch.cli import cli, main

MASTERLIST = "id,text\nd1,ecg\nd2,blood test\nd3,test\n"
PAIRS = "clinic_text,masterlist_id\nekg inima,d1\nanaliza sange,d2\ntest lab,d3\nekg repaus,d1\necg efort,d1\n"


@pytest.fixture
def files(tmp_path):
    m = tmp_path / "masterlist.csv"
    p = tmp_path / "pairs.csv"
    m.write_text(MASTERLIST, encoding="utf-8")
    p.write_text(PAIRS, encoding="utf-8")
    return str(m), str(p)


def run(*args):
    return CliRunner().invoke(cli, list(args))


def test_ingest_reports_counts(files):
    m, p = files
    result = run("ingest", "--masterlist", m, "--pairs", p, "--json")
    assert result.exit_code == 0
    assert json.loads(result.stdout) == {
        "masterlist_count": 3,
        "pair_count": 5,
        "duplicate_pairs_merged": 0,
    }


def test_split_writes_jsonl(files, tmp_path):
    m, p = files
    out = tmp_path / "folds.jsonl"
    result = run("split", "--masterlist", m, "--pairs", p, "--folds", "5",
                 "--seed", "7", "--out", str(out))
    assert result.exit_code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["pair_index"] for r in records] == list(range(5))


def test_search_three_doc_fixture(files):
    m, p = files
    result = run("search", "--masterlist", m, "--pairs", p, "--q", "ecg",
                 "--k", "3", "--mode", "sparse", "--json")
    assert result.exit_code == 0
    hits = json.loads(result.stdout)
    assert hits[0]["masterlist_id"] == "d1"


def test_eval_deterministic(files):
    m, p = files
    args = ["eval", "--masterlist", m, "--pairs", p, "--mode", "sparse",
            "--scenario", "masterlist_only", "--folds", "5", "--seed", "7", "--json"]
    a = run(*args)
    b = run(*args)
    assert a.exit_code == 0
    assert a.stdout == b.stdout


def test_train_adapter_and_dense_eval(files, tmp_path):
    m, p = files
    adapter = tmp_path / "adapter.json"
    result = run("train-adapter", "--masterlist", m, "--pairs", p,
                 "--epochs", "2", "--batch-size", "4", "--lr", "0.01",
                 "--dim", "32", "--out", str(adapter))
    assert result.exit_code == 0
    assert adapter.exists()
    evald = run("eval", "--masterlist", m, "--pairs", p, "--mode", "dense",
                "--adapter", str(adapter), "--json")
    assert evald.exit_code == 0


def test_build_index_artifacts(files, tmp_path):
    m, p = files
    sparse_out = tmp_path / "sparse.json"
    dense_out = tmp_path / "dense.jsonl"
    result = run("build-index", "--masterlist", m, "--pairs", p,
                 "--sparse-out", str(sparse_out), "--dense-out", str(dense_out),
                 "--dim", "32")
    assert result.exit_code == 0
    assert "MMSPARSE1" in sparse_out.read_text()
    ids = [json.loads(line)["id"] for line in dense_out.read_text().splitlines()]
    assert any(i.startswith("M:") for i in ids)
    assert any(i.startswith("P:") for i in ids)


def test_main_exit_codes(files, tmp_path):
    m, p = files
    assert main(["ingest", "--masterlist", m, "--pairs", p]) == 0
    # usage error: unknown flag
    assert main(["ingest", "--nope"]) == 1
    # data error: dangling reference
    bad = tmp_path / "bad_pairs.csv"
    bad.write_text("clinic_text,masterlist_id\nx,M999\n", encoding="utf-8")
    assert main(["ingest", "--masterlist", m, "--pairs", str(bad)]) == 2


def test_config_file_defaults(files, tmp_path):
    m, p = files
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"split": {"folds": 3, "seed": 1}}))
    out = tmp_path / "folds.jsonl"
    result = run("--config", str(cfg), "split", "--masterlist", m, "--pairs", p,
                 "--out", str(out))
    assert result.exit_code == 0
    folds = {json.loads(line)["fold"] for line in out.read_text().splitlines()}
    assert folds <= {0, 1, 2}
