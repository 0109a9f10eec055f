"""End-to-end subcommand behavior through the single entry point."""

import csv
import json
from datetime import date, timedelta
from pathlib import Path

import pytest

from define_engine import analogy, extractor, ingest
from define_engine.cli import run

from ._sample import DAL_DIR

SUBCOMMANDS = [
    "schema", "ingest", "label", "extract", "pairs", "fit", "predict",
    "retrieve", "decide-analogical", "eval", "synth", "report",
]


def run_ok(argv):
    code = run(argv)
    assert code == 0, f"{argv} exited {code}"


class TestParsing:
    def test_no_subcommand_is_user_error(self, capsys):
        assert run([]) == 1

    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag(self, capsys):
        assert run(["schema", "--frobnicate"]) == 1

    @pytest.mark.parametrize("name", SUBCOMMANDS)
    def test_every_subcommand_has_help(self, name, capsys):
        with pytest.raises(SystemExit) as excinfo:
            run([name, "--help"])
        assert excinfo.value.code == 0
        assert "usage" in capsys.readouterr().out.lower()


class TestSchemaCommand:
    def test_emits_default_schema(self, capsys):
        run_ok(["schema"])
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["factors"]) == 15

    def test_round_trips_through_file(self, tmp_path, capsys):
        out = tmp_path / "schema.json"
        run_ok(["schema", "--out", str(out)])
        run_ok(["schema", "--schema", str(out)])
        assert json.loads(capsys.readouterr().out) == json.loads(out.read_text())


class TestDalPipeline:
    def test_ingest_stats(self, capsys):
        run_ok(["ingest", "--manifest", str(DAL_DIR / "manifest.json")])
        stats = json.loads(capsys.readouterr().out)
        assert stats["transcripts"] == 1
        assert stats["avg_qa_pairs"] == 10.0
        assert stats["sectors"] == ["Industrials"]

    def test_label_matches_independent_arithmetic(self, tmp_path, capsys):
        out = tmp_path / "labels.jsonl"
        run_ok(["label", "--manifest", str(DAL_DIR / "manifest.json"), "--out", str(out)])
        row = json.loads(out.read_text().splitlines()[0])
        # oracle: recompute from the CSV with stdlib csv only
        closes = {}
        with open(DAL_DIR / "prices.csv") as fh:
            for line in csv.DictReader(fh):
                closes[date.fromisoformat(line["date"])] = float(line["close"])
        announce = date(2021, 10, 13)
        base_date = min(d for d in closes if d >= announce)
        horizon_date = min(d for d in closes if d >= announce + timedelta(days=30))
        expected = 100 * (closes[horizon_date] - closes[base_date]) / closes[base_date]
        assert row["profile_id"] == "DAL-2021-10-13"
        assert row["return_pct"] == pytest.approx(expected, abs=1e-12)
        assert row["base_date"] == base_date.isoformat()
        assert row["horizon_date"] == horizon_date.isoformat()
        assert row["label"] == ("sell" if -5 <= expected < -2 else "unexpected")

    def test_extract_fixture_mode_matches_expected(self, tmp_path):
        out = tmp_path / "profiles.jsonl"
        run_ok(
            [
                "extract",
                "--manifest", str(DAL_DIR / "manifest.json"),
                "--fixtures", str(DAL_DIR / "responses"),
                "--mode", "fixture",
                "--out", str(out),
            ]
        )
        assert out.read_text() == (DAL_DIR / "expected_profile.jsonl").read_text()

    def test_extract_live_without_key_fails_actionably(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv(extractor.API_KEY_ENV, raising=False)
        code = run(
            [
                "extract",
                "--manifest", str(DAL_DIR / "manifest.json"),
                "--mode", "live",
                "--out", str(tmp_path / "x.jsonl"),
            ]
        )
        assert code == 1
        assert extractor.API_KEY_ENV in capsys.readouterr().err


@pytest.fixture(scope="module")
def synth_workspace(tmp_path_factory):
    """One synthetic corpus driven entirely through the CLI."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus.jsonl"
    model = root / "model.json"
    preds = root / "preds.jsonl"
    report = root / "report.json"
    run_ok(
        [
            "synth", "--seed", "7", "--n", "120", "--noise", "0.0",
            "--planted", "Economic Health:positive-outlook", "--out", str(corpus),
        ]
    )
    run_ok(
        [
            "fit", "--profiles", str(corpus), "--regime", "cross-sector",
            "--cap", "2000", "--seed", "7", "--out", str(model),
        ]
    )
    run_ok(
        [
            "predict", "--model", str(model), "--profiles", str(corpus),
            "--counts-from", str(corpus), "--out", str(preds),
        ]
    )
    run_ok(
        [
            "eval", "--preds", str(preds), "--golds", str(corpus),
            "--out", str(report), "--confusion-csv", str(root / "confusion.csv"),
        ]
    )
    return root


class TestSynthPipeline:
    def test_composed_pipeline_reaches_perfect_f1(self, synth_workspace):
        report = json.loads((synth_workspace / "report.json").read_text())
        assert report["macro_f1"] == pytest.approx(1.0)
        assert report["accuracy"] == pytest.approx(1.0)
        confusion = (synth_workspace / "confusion.csv").read_text().splitlines()
        assert confusion[0].startswith("gold\\pred")

    def test_outputs_are_idempotent(self, synth_workspace, tmp_path):
        again = tmp_path / "corpus2.jsonl"
        run_ok(
            [
                "synth", "--seed", "7", "--n", "120", "--noise", "0.0",
                "--planted", "Economic Health:positive-outlook", "--out", str(again),
            ]
        )
        assert again.read_text() == (synth_workspace / "corpus.jsonl").read_text()
        model_again = tmp_path / "model2.json"
        run_ok(
            [
                "fit", "--profiles", str(again), "--regime", "cross-sector",
                "--cap", "2000", "--seed", "7", "--out", str(model_again),
            ]
        )
        assert model_again.read_text() == (synth_workspace / "model.json").read_text()

    def test_model_file_format(self, synth_workspace):
        doc = json.loads((synth_workspace / "model.json").read_text())
        assert set(doc) >= {"schema_hash", "p", "iterations", "tol", "regime", "seed"}
        assert len(doc["p"]) == 33
        assert doc["regime"] == "cross-sector"
        assert doc["seed"] == 7

    def test_pairs_command(self, synth_workspace, capsys):
        run_ok(
            [
                "pairs", "--profiles", str(synth_workspace / "corpus.jsonl"),
                "--regime", "cross-sector", "--cap", "50", "--seed", "3",
            ]
        )
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert len(lines) == 50
        assert set(lines[0]) == {"winner", "loser", "regime"}

    def test_predict_with_cutpoints(self, synth_workspace, capsys):
        run_ok(
            [
                "predict", "--model", str(synth_workspace / "model.json"),
                "--profiles", str(synth_workspace / "corpus.jsonl"),
                "--cutpoints", "0.4,0.45,0.5,0.55",
            ]
        )
        rows = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert len(rows) == 120
        assert all("score" in r and "label" in r for r in rows)

    def test_retrieve_returns_sorted_neighbors(self, synth_workspace, capsys):
        corpus = synth_workspace / "corpus.jsonl"
        target = json.loads(corpus.read_text().splitlines()[0])["profile_id"]
        run_ok(["retrieve", "--target", target, "--corpus", str(corpus)])
        payload = json.loads(capsys.readouterr().out)
        assert payload["k"] == 5
        assert len(payload["neighbors"]) == 5
        divergences = [n["divergence"] for n in payload["neighbors"]]
        assert divergences == sorted(divergences)
        assert all(n["profile_id"] != target for n in payload["neighbors"])

    def test_decide_analogical_with_fixture(self, synth_workspace, tmp_path, capsys):
        corpus_path = synth_workspace / "corpus.jsonl"
        records = ingest.load_profiles(corpus_path)
        target = records[0]
        neighbors = analogy.retrieve(
            target.profile, records, k=5, target_id=target.profile_id
        )
        by_id = {r.profile_id: r for r in records}
        examples = [(by_id[n.profile_id].profile, by_id[n.profile_id].label) for n in neighbors]
        exchange = extractor.build_analogy_prompt(
            examples, target.profile, target.ticker, target.date
        )
        fixtures = tmp_path / "fixtures"
        fixtures.mkdir()
        (fixtures / f"{exchange.content_hash()}.json").write_text(
            json.dumps({"response": '{"idx": 1, "recommendation": "strong buy", "justification": "nearest"}'})
        )
        run_ok(
            [
                "decide-analogical", "--target", target.profile_id,
                "--corpus", str(corpus_path), "--fixtures", str(fixtures),
                "--mode", "fixture",
            ]
        )
        payload = json.loads(capsys.readouterr().out)
        assert payload["chosen_idx"] == 1
        assert payload["recommendation"] == "strong-buy"
        assert payload["neighbor_ids"] == [n.profile_id for n in neighbors]

    def test_report_density_csv(self, synth_workspace, tmp_path):
        out = tmp_path / "density.csv"
        run_ok(
            [
                "report", "--profiles", str(synth_workspace / "corpus.jsonl"),
                "--density-csv", str(out),
            ]
        )
        lines = out.read_text().splitlines()
        assert lines[0] == "label,positive_mass,negative_mass"
        assert len(lines) == 121

    def test_report_top_factors_ranks_planted_item_first(self, synth_workspace, capsys):
        run_ok(
            [
                "report", "--model", str(synth_workspace / "model.json"),
                "--top-factors", "3",
            ]
        )
        ranked = json.loads(capsys.readouterr().out)
        assert len(ranked) == 3
        assert ranked[0]["item"] == "Economic Health (positive-outlook)"
        saliences = [r["salience"] for r in ranked]
        assert saliences == sorted(saliences, reverse=True)

    def test_report_agreement(self, synth_workspace, tmp_path, capsys):
        preds = synth_workspace / "preds.jsonl"
        run_ok(
            [
                "report", "--preds", str(preds), "--nearest", str(preds),
                "--agreement-out", "-",
            ]
        )
        payload = json.loads(capsys.readouterr().out)
        assert payload["agreement_rate"] == 1.0

    def test_stdin_profiles(self, synth_workspace, capsys, monkeypatch):
        import io

        corpus_text = (synth_workspace / "corpus.jsonl").read_text()
        monkeypatch.setattr("sys.stdin", io.StringIO(corpus_text))
        run_ok(["pairs", "--profiles", "-", "--regime", "cross-sector", "--cap", "10"])
        assert len(capsys.readouterr().out.splitlines()) == 10

    def test_console_script_pipe(self, tmp_path):
        import shutil
        import subprocess

        if shutil.which("define") is None:
            pytest.skip("console script not installed")
        model = tmp_path / "model.json"
        synth = subprocess.run(
            ["define", "synth", "--seed", "5", "--n", "60",
             "--planted", "0:0", "--out", "-"],
            capture_output=True, text=True, check=True,
        )
        fit = subprocess.run(
            ["define", "fit", "--profiles", "-", "--cap", "500",
             "--out", str(model)],
            input=synth.stdout, capture_output=True, text=True,
        )
        assert fit.returncode == 0, fit.stderr
        assert json.loads(model.read_text())["regime"] == "cross-sector"


class TestErrorPaths:
    def test_missing_file_is_user_error(self, capsys):
        assert run(["eval", "--preds", "nope.jsonl", "--golds", "nope.jsonl"]) == 1
        assert "error" in capsys.readouterr().err.lower()

    def test_predict_requires_counts_or_cutpoints(self, synth_workspace, capsys):
        code = run(
            [
                "predict", "--model", str(synth_workspace / "model.json"),
                "--profiles", str(synth_workspace / "corpus.jsonl"),
            ]
        )
        assert code == 1

    def test_bad_config_key(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text('{"quantum": true}')
        assert run(["schema", "--config", str(config)]) == 1

    def test_config_supplies_defaults_flags_win(self, synth_workspace, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text('{"k": 2}')
        corpus = synth_workspace / "corpus.jsonl"
        target = json.loads(corpus.read_text().splitlines()[0])["profile_id"]
        run_ok(["retrieve", "--target", target, "--corpus", str(corpus),
                "--config", str(config)])
        assert json.loads(capsys.readouterr().out)["k"] == 2
        run_ok(["retrieve", "--target", target, "--corpus", str(corpus),
                "--config", str(config), "--k", "3"])
        assert json.loads(capsys.readouterr().out)["k"] == 3

    def test_synth_bad_planted(self, capsys):
        assert run(["synth", "--n", "50", "--planted", "Nonexistent:thing"]) == 1
