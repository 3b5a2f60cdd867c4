import json

from click.testing import CliRunner

from promptmap.cli import main


def test_demo_ingest_recommend_evaluate_roundtrip(tmp_path):
    runner = CliRunner()

    res = runner.invoke(main, ["demo", "--out", str(tmp_path / "raw"),
                               "--n", "30", "--blobs", "2", "--seed", "3"])
    assert res.exit_code == 0, res.output

    res = runner.invoke(main, ["ingest",
                               "--manifest", str(tmp_path / "raw" / "manifest.jsonl"),
                               "--embeddings", str(tmp_path / "raw"),
                               "--out", str(tmp_path / "index")])
    assert res.exit_code == 0, res.output
    assert "30 records" in res.output

    res = runner.invoke(main, ["recommend", "--index", str(tmp_path / "index"),
                               "--prompt", "epic castle painting",
                               "--k", "15", "--top", "3", "--json",
                               "--save", str(tmp_path / "sess")])
    assert res.exit_code == 0, res.output
    rows = json.loads(res.output)
    assert isinstance(rows, list)
    assert (tmp_path / "sess" / "session.json").exists()

    res = runner.invoke(main, ["evaluate", "--session", str(tmp_path / "sess"),
                               "--a", "cute", "--json"])
    assert res.exit_code == 0, res.output
    body = json.loads(res.output)
    assert body["criterion"]["b"] == "not cute"
    assert len(body["ratings"]) == 15


def test_recommend_deterministic_with_seed(tmp_path):
    runner = CliRunner()
    runner.invoke(main, ["demo", "--out", str(tmp_path / "raw"), "--n", "24",
                         "--blobs", "2", "--seed", "5"])
    args = ["recommend", "--index", str(tmp_path / "raw"), "--prompt", "neon city",
            "--k", "12", "--seed", "9", "--json"]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args)
    assert a.exit_code == 0 and b.exit_code == 0
    assert a.output == b.output


def test_oracle_commands():
    runner = CliRunner()
    payload = json.dumps({
        "cluster": ["cat ghibli style", "cat ghibli art"],
        "corpus": ["cat ghibli style", "cat ghibli art", "dog photo real", "dog photo hdr"],
        "max_n": 1,
    })
    res = runner.invoke(main, ["oracle", "tfidf"], input=payload)
    assert res.exit_code == 0, res.output
    scores = json.loads(res.output)
    assert abs(scores["ghibli"] - 0.10034333188799373) < 1e-12

    res = runner.invoke(main, ["oracle", "hac"],
                        input=json.dumps({"points": [[0, 0], [0, 1], [10, 0], [10, 1]]}))
    assert res.exit_code == 0, res.output
    merges = json.loads(res.output)
    assert merges[0][:2] == [0, 1]
    assert abs(merges[2][2] - 10.0249378) < 1e-6


def test_config_file_env_merge(tmp_path, monkeypatch):
    from promptmap.cli import load_config_env

    config = tmp_path / "pm.conf"
    config.write_text("# comment\nPM_SEED=123\nPM_EMBEDDER_URL=http://file-wins\n")
    monkeypatch.delenv("PM_SEED", raising=False)
    monkeypatch.setenv("PM_EMBEDDER_URL", "http://env-wins")
    env = load_config_env(str(config))
    assert env["PM_SEED"] == "123"
    assert env["PM_EMBEDDER_URL"] == "http://env-wins"
