import json
import shutil

import pytest

from cea.cli import main
from cea.data import path as data_path
from cea.metrics import MetricReport, aggregate


@pytest.fixture()
def toy_run(tmp_path, sentiment_records):
    """A 4-record dataset with matching lexicon bundle and config."""
    dataset = tmp_path / "toy.jsonl"
    with open(dataset, "w") as fh:
        for rec in sentiment_records[:4]:
            fh.write(json.dumps(rec) + "\n")
    lex_lines = open(data_path("sentiment_lexicons.jsonl")).read().splitlines()
    lexicons = tmp_path / "toy_lex.jsonl"
    lexicons.write_text("\n".join(lex_lines[:4]) + "\n")

    cfg = json.load(open(data_path("config_hard.json")))
    cfg["attack"]["iterations"] = 8
    config = tmp_path / "config.json"
    config.write_text(json.dumps(cfg))
    return config, dataset, lexicons


def run_attack_cmd(config, dataset, lexicons, output, *extra):
    return main([
        "attack", "--config", str(config), "--dataset", str(dataset),
        "--lexicons", str(lexicons), "--output", str(output), *extra,
    ])


class TestAttackCommand:
    def test_record_arity_and_summary(self, toy_run, tmp_path, capsys):
        config, dataset, lexicons = toy_run
        out = tmp_path / "out.jsonl"
        assert run_attack_cmd(config, dataset, lexicons, out) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(lines) == 5
        assert all("metrics" in l for l in lines[:4])
        assert "summary" in lines[4]
        assert lines[4]["summary"]["total"] == 4

    def test_byte_identical_reruns(self, toy_run, tmp_path):
        config, dataset, lexicons = toy_run
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_attack_cmd(config, dataset, lexicons, a)
        run_attack_cmd(config, dataset, lexicons, b)
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_changes_output(self, toy_run, tmp_path):
        config, dataset, lexicons = toy_run
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_attack_cmd(config, dataset, lexicons, a)
        run_attack_cmd(config, dataset, lexicons, b, "--seed", "777")
        recs_a = [json.loads(l) for l in a.read_text().splitlines()[:-1]]
        recs_b = [json.loads(l) for l in b.read_text().splitlines()[:-1]]
        assert [r["seed"] for r in recs_a] != [r["seed"] for r in recs_b]

    def test_workers_preserve_order_and_results(self, toy_run, tmp_path):
        config, dataset, lexicons = toy_run
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_attack_cmd(config, dataset, lexicons, a)
        run_attack_cmd(config, dataset, lexicons, b, "--workers", "3")
        assert a.read_bytes() == b.read_bytes()

    def test_trace_export_lines(self, toy_run, tmp_path):
        config, dataset, lexicons = toy_run
        cfg = json.loads(config.read_text())
        trace_path = tmp_path / "trace.jsonl"
        cfg["io"]["trace_path"] = str(trace_path)
        cfg["attack"]["full_trace"] = True
        config.write_text(json.dumps(cfg))
        run_attack_cmd(config, dataset, lexicons, tmp_path / "out.jsonl")
        lines = [json.loads(l) for l in trace_path.read_text().splitlines()]
        assert lines
        assert {"index", "iteration", "gamma", "elite_count"} <= set(lines[0])

    def test_missing_dataset_is_io_error(self, toy_run, tmp_path):
        config, _, lexicons = toy_run
        rc = run_attack_cmd(config, tmp_path / "nope.jsonl", lexicons,
                            tmp_path / "out.jsonl")
        assert rc == 3

    def test_bad_config_is_config_error(self, toy_run, tmp_path):
        _, dataset, lexicons = toy_run
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"attack": {"rho": 5.0}}))
        rc = run_attack_cmd(bad, dataset, lexicons, tmp_path / "out.jsonl")
        assert rc == 2

    def test_remote_without_server_is_protocol_error(self, toy_run, tmp_path,
                                                     monkeypatch):
        config, dataset, lexicons = toy_run
        cfg = json.loads(config.read_text())
        cfg["oracle"] = {"type": "remote", "url": "http://127.0.0.1:9",
                         "num_classes": 2}
        config.write_text(json.dumps(cfg))
        monkeypatch.setattr("cea.oracle.RemoteVictim.BACKOFF", 0.0)
        rc = run_attack_cmd(config, dataset, lexicons, tmp_path / "out.jsonl")
        assert rc == 4


class TestTrainVictimCommand:
    def test_separable_fixture_reports_full_accuracy(self, tmp_path, capsys):
        dataset = tmp_path / "train.jsonl"
        with open(dataset, "w") as fh:
            for i in range(10):
                fh.write(json.dumps({"text": f"row {i} great fine", "label": 1}) + "\n")
                fh.write(json.dumps({"text": f"row {i} awful dire", "label": 0}) + "\n")
        out = tmp_path / "model.json"
        rc = main(["train-victim", "--dataset", str(dataset), "--output", str(out),
                   "--kind", "logistic-regression"])
        assert rc == 0
        assert "accuracy 1.000" in capsys.readouterr().out

    def test_missing_file_is_io_error(self, tmp_path):
        rc = main(["train-victim", "--dataset", str(tmp_path / "none.jsonl"),
                   "--output", str(tmp_path / "m.json")])
        assert rc == 3

    def test_fixed_seed_identical_model_files(self, tmp_path):
        dataset = tmp_path / "train.jsonl"
        with open(dataset, "w") as fh:
            for i in range(6):
                fh.write(json.dumps({"text": f"r {i} good", "label": 1}) + "\n")
                fh.write(json.dumps({"text": f"r {i} bad", "label": 0}) + "\n")
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        main(["train-victim", "--dataset", str(dataset), "--output", str(m1),
              "--seed", "5"])
        main(["train-victim", "--dataset", str(dataset), "--output", str(m2),
              "--seed", "5"])
        assert m1.read_bytes() == m2.read_bytes()


class TestVerifyCommand:
    def test_identity_only_spaces_match_fully(self, tmp_path, capsys,
                                              sentiment_records):
        dataset = tmp_path / "d.jsonl"
        with open(dataset, "w") as fh:
            for rec in sentiment_records[:3]:
                fh.write(json.dumps(rec) + "\n")
        lexicons = tmp_path / "lex.jsonl"
        lexicons.write_text('{"positions": []}\n' * 3)
        rc = main(["verify", "--config", str(data_path("config_verify.json")),
                   "--dataset", str(dataset), "--lexicons", str(lexicons)])
        assert rc == 0
        assert "match rate: 1.000" in capsys.readouterr().out

    def test_cap_exceeded_names_record(self, tmp_path, capsys,
                                       sentiment_records):
        dataset = tmp_path / "d.jsonl"
        dataset.write_text(json.dumps(sentiment_records[0]) + "\n")
        lex_line = open(data_path("sentiment_lexicons.jsonl")).readline()
        (tmp_path / "lex.jsonl").write_text(lex_line)
        rc = main(["verify", "--config", str(data_path("config_verify.json")),
                   "--dataset", str(dataset),
                   "--lexicons", str(tmp_path / "lex.jsonl"),
                   "--cap", "10"])
        assert rc == 3
        assert "record 0" in capsys.readouterr().err

    def test_bundled_fixture_match_rate(self, capsys):
        rc = main(["verify", "--config", str(data_path("config_verify.json")),
                   "--dataset", str(data_path("verify_20.jsonl")),
                   "--lexicons", str(data_path("verify_lexicons.jsonl"))])
        assert rc == 0
        out = capsys.readouterr().out
        rate = float(out.splitlines()[-1].split()[2])
        assert rate >= 0.95


class TestReportCommand:
    def _write_results(self, path, successes, total):
        reports = []
        with open(path, "w") as fh:
            for i in range(total):
                r = MetricReport(success=i < successes, mod_rate=0.1,
                                 semantic_similarity=0.9, queries=7)
                reports.append(r)
                fh.write(json.dumps({"index": i, "metrics": r.to_dict()}) + "\n")
            summary = aggregate(reports)
            fh.write(json.dumps({"summary": summary.to_dict()}) + "\n")
        return reports

    def test_percent_formatting(self, tmp_path, capsys):
        f = tmp_path / "r.jsonl"
        self._write_results(f, 3, 4)
        assert main(["report", str(f)]) == 0
        out = capsys.readouterr().out
        assert "75.0" in out

    def test_two_files_sorted_rows(self, tmp_path, capsys):
        fb = tmp_path / "b.jsonl"
        fa = tmp_path / "a.jsonl"
        self._write_results(fb, 1, 4)
        self._write_results(fa, 2, 4)
        main(["report", str(fb), str(fa)])
        out = capsys.readouterr().out.splitlines()
        rows = [l for l in out if l.endswith("7.0")]
        assert rows[0].startswith("a.jsonl")
        assert rows[1].startswith("b.jsonl")

    def test_empty_file_malformed(self, tmp_path):
        f = tmp_path / "empty.jsonl"
        f.write_text("")
        assert main(["report", str(f)]) == 3

    def test_report_matches_embedded_summary(self, toy_run, tmp_path):
        config, dataset, lexicons = toy_run
        out = tmp_path / "out.jsonl"
        run_attack_cmd(config, dataset, lexicons, out)
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        embedded = lines[-1]["summary"]
        reports = [MetricReport.from_dict(l["metrics"]) for l in lines[:-1]]
        recomputed = aggregate(
            reports, successes_only=embedded["successes_only"]
        )
        assert recomputed.to_dict() == embedded


class TestEstimateCommand:
    def test_emits_estimates(self, toy_run, capsys):
        config, dataset, lexicons = toy_run
        rc = main(["estimate", "--config", str(config), "--dataset", str(dataset),
                   "--lexicons", str(lexicons), "--gamma", "0.5",
                   "--n-samples", "200"])
        assert rc == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert len(lines) == 4
        for l in lines:
            assert 0.0 <= l["estimate"] <= 1.0
            assert l["n_samples"] == 200
