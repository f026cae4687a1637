from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from fixtures import topic_bundle
from xicl.cli import main
from xicl.corpus import dump_labeled, dump_parallel, write_bundle


@pytest.fixture
def bundle_dir(tmp_path):
    path = tmp_path / "bundle"
    write_bundle(topic_bundle(), path)
    return path


@pytest.fixture
def raw_inputs(tmp_path):
    bundle = topic_bundle()
    ex = tmp_path / "exemplars.jsonl"
    pa = tmp_path / "parallel.jsonl"
    ev = tmp_path / "eval.jsonl"
    ex.write_text(dump_labeled(bundle.exemplar_store), encoding="utf-8")
    pa.write_text(dump_parallel(bundle.parallel_store), encoding="utf-8")
    ev.write_text(dump_labeled(bundle.eval_set), encoding="utf-8")
    return ex, pa, ev


def _strip_timing(text: str) -> str:
    return re.sub(r'"wall_ms":[0-9.e+-]+', '"wall_ms":0', text)


class TestBasics:
    def test_help_exit_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "usage" in capsys.readouterr().out.lower()

    def test_unknown_flag_exit_one(self, capsys):
        assert main(["run", "--frobnicate"]) == 1
        err = capsys.readouterr().err.lower()
        assert "usage" in err or "error" in err

    def test_unknown_command_exit_one(self):
        assert main(["transmogrify"]) == 1


class TestIngest:
    def test_writes_bundle_with_manifest(self, raw_inputs, tmp_path, capsys):
        ex, pa, ev = raw_inputs
        out = tmp_path / "out-bundle"
        code = main([
            "ingest", "--task", "topic",
            "--exemplars", str(ex), "--parallel", str(pa), "--eval", str(ev),
            "--out", str(out),
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["task"] == "topic"
        assert manifest["files"]["exemplars.jsonl"]["count"] == 7
        assert len(manifest["files"]["eval.jsonl"]["sha256"]) == 64

    def test_validation_error_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id":"1","text":"x","label":"happy","language":"eng"}\n', encoding="utf-8")
        code = main(["ingest", "--task", "sentiment", "--exemplars", str(bad), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "happy" in capsys.readouterr().err


class TestRetrieve:
    def test_random_json_output(self, bundle_dir, tmp_path, capsys):
        qf = tmp_path / "q.txt"
        qf.write_text("kasuwa ta tashi a yau\n", encoding="utf-8")
        code = main([
            "retrieve", "--strategy", "random", "--k", "3",
            "--query-file", str(qf), "--bundle", str(bundle_dir), "--seed", "7",
        ])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["strategy"] == "random"
        assert out["prng"] == "splitmix64-fisher-yates-v1"
        assert len(out["items"]) == 3

    def test_translate_strategy_with_provenance(self, bundle_dir, tmp_path, capsys):
        qf = tmp_path / "q.txt"
        qf.write_text("kasuwa ta haura sosai yau", encoding="utf-8")
        code = main([
            "retrieve", "--strategy", "translate", "--k", "2",
            "--query-file", str(qf), "--bundle", str(bundle_dir),
            "--weights", "1,1,1",
        ])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["bridge_pair_id"] == "p1" or out["bridge_pair_id"].startswith("p")
        assert len(out["items"]) == 2

    def test_random_without_seed_exit_one(self, bundle_dir, tmp_path, capsys):
        qf = tmp_path / "q.txt"
        qf.write_text("x", encoding="utf-8")
        code = main([
            "retrieve", "--strategy", "random", "--query-file", str(qf), "--bundle", str(bundle_dir),
        ])
        assert code == 1


class TestPrompt:
    def test_dry_run_prints_prompt_and_candidates(self, bundle_dir, tmp_path, capsys):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"shots": 2, "label_config": "target_only"}), encoding="utf-8")
        code = main([
            "prompt", "--plan", str(plan), "--query-id", "q1", "--bundle", str(bundle_dir), "--dry-run",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "Label: " in out
        assert "kasuwanci" in out  # target-only candidates are Hausa

    def test_unknown_query_id(self, bundle_dir, tmp_path, capsys):
        plan = tmp_path / "plan.json"
        plan.write_text("{}", encoding="utf-8")
        assert main(["prompt", "--plan", str(plan), "--query-id", "zzz", "--bundle", str(bundle_dir)]) == 1


class TestRun:
    def test_mock_run_deterministic_files(self, bundle_dir, tmp_path, capsys):
        args = [
            "run", "--bundle", str(bundle_dir), "--mock-scorer", "--seed", "7",
            "--strategy", "random", "--shots", "3",
        ]
        code1 = main(args + ["--out", str(tmp_path / "r1")])
        code2 = main(args + ["--out", str(tmp_path / "r2")])
        assert code1 == 0 and code2 == 0
        rec1 = next((tmp_path / "r1").glob("*.records.jsonl")).read_text(encoding="utf-8")
        rec2 = next((tmp_path / "r2").glob("*.records.jsonl")).read_text(encoding="utf-8")
        assert _strip_timing(rec1) == _strip_timing(rec2)

    def test_manifest_contents(self, bundle_dir, tmp_path):
        code = main([
            "run", "--bundle", str(bundle_dir), "--mock-scorer", "--out", str(tmp_path / "r"),
            "--run-id", "my-run",
        ])
        assert code == 0
        manifest = json.loads((tmp_path / "r" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["tool_version"]
        assert manifest["results"]["my-run"]["status"] == "ok"
        assert set(manifest["bundle_hashes"]) == {"exemplars.jsonl", "parallel.jsonl", "eval.jsonl"}
        config = manifest["configs"][0]
        # empty config: spec defaults
        assert config["plan"]["shots"] == 3
        assert config["plan"]["format"] == "align_after"
        assert config["plan"]["label_config"] == "source_only"
        assert config["plan"]["retrieval"]["kind"] == "mono"

    def test_unreachable_scorer_exit_two(self, bundle_dir, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("SCORER_URL", "http://127.0.0.1:1/score")
        code = main(["run", "--bundle", str(bundle_dir), "--out", str(tmp_path / "r"), "--shots", "0"])
        assert code == 2
        assert "transport" in capsys.readouterr().err.lower()

    def test_flag_overrides_env(self, bundle_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("SCORER_URL", "http://127.0.0.1:1/score")
        code = main([
            "run", "--bundle", str(bundle_dir), "--scorer-url", "mock:3",
            "--out", str(tmp_path / "r"), "--shots", "0",
        ])
        assert code == 0
        manifest = json.loads((tmp_path / "r" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["configs"][0]["scorer"] == "mock:3"

    def test_env_overrides_config_file(self, bundle_dir, tmp_path, monkeypatch):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"scorer": "mock:1", "plan": {"shots": 0}}), encoding="utf-8")
        monkeypatch.setenv("SCORER_URL", "mock:2")
        code = main([
            "run", "--bundle", str(bundle_dir), "--config", str(config), "--out", str(tmp_path / "r"),
        ])
        assert code == 0
        manifest = json.loads((tmp_path / "r" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["configs"][0]["scorer"] == "mock:2"

    def test_tabular_without_labels_names_invariant(self, tmp_path, capsys):
        bundle = topic_bundle()
        from dataclasses import replace

        stripped = [replace(p, label=None) for p in bundle.parallel_store]
        bad = replace(bundle, parallel_store=stripped)
        bdir = tmp_path / "bad-bundle"
        write_bundle(bad, bdir)
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"plan": {"format": "tabular", "shots": 3}}), encoding="utf-8")
        code = main([
            "run", "--bundle", str(bdir), "--config", str(config),
            "--mock-scorer", "--out", str(tmp_path / "r"),
        ])
        assert code == 1
        assert "Tabular" in capsys.readouterr().err

    def test_config_file_matrix(self, bundle_dir, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(
            json.dumps(
                {
                    "configs": [
                        {"run_id": "zs", "plan": {"shots": 0}},
                        {"run_id": "icl", "plan": {"shots": 2, "retrieval": {"kind": "random", "seed": 3}}},
                    ]
                }
            ),
            encoding="utf-8",
        )
        code = main([
            "run", "--bundle", str(bundle_dir), "--config", str(config),
            "--mock-scorer", "--out", str(tmp_path / "r"),
        ])
        assert code == 0
        assert (tmp_path / "r" / "zs.records.jsonl").exists()
        assert (tmp_path / "r" / "icl.records.jsonl").exists()


class TestEvalAndReport:
    @pytest.fixture
    def two_runs(self, bundle_dir, tmp_path):
        main(["run", "--bundle", str(bundle_dir), "--mock-scorer", "--shots", "0",
              "--run-id", "base", "--out", str(tmp_path / "base")])
        main(["run", "--bundle", str(bundle_dir), "--mock-scorer", "--shots", "2",
              "--strategy", "random", "--seed", "5", "--run-id", "treat",
              "--out", str(tmp_path / "treat")])
        return (tmp_path / "base" / "base.records.jsonl", tmp_path / "treat" / "treat.records.jsonl")

    def test_eval_outputs(self, two_runs, tmp_path, capsys):
        base, _ = two_runs
        code = main(["eval", "--records", str(base), "--out", str(tmp_path / "ev"),
                     "--format", "csv,json,tsv"])
        assert code == 0
        assert (tmp_path / "ev" / "metrics.csv").exists()
        assert (tmp_path / "ev" / "metrics.json").exists()
        assert (tmp_path / "ev" / "metrics.tsv").exists()
        payload = json.loads((tmp_path / "ev" / "metrics.json").read_text(encoding="utf-8"))
        assert "hau" in payload["per_language"]

    def test_report_delta(self, two_runs, tmp_path):
        base, treat = two_runs
        code = main(["report", "--records", str(treat), "--baseline", str(base),
                     "--out", str(tmp_path / "rep")])
        assert code == 0
        delta = json.loads((tmp_path / "rep" / "delta.json").read_text(encoding="utf-8"))
        assert delta["rows"][0]["language"] == "hau"
        assert "frac_improved" in delta["summary"]

    def test_eval_with_baseline_is_delta(self, two_runs, tmp_path):
        base, treat = two_runs
        code = main(["eval", "--records", str(treat), "--baseline", str(base),
                     "--out", str(tmp_path / "ev2"), "--format", "json"])
        assert code == 0
        assert (tmp_path / "ev2" / "delta.json").exists()
