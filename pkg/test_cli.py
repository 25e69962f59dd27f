import argparse
import csv
import json
import os

import pytest

from conftest import HPO_CSV, make_terms, query_vectors, write_replay_file
from ontonorm import __version__
from ontonorm.cli.main import build_parser, route
from ontonorm.services.embed_store import write_embedding_file
from ontonorm.services.pipeline import read_results

COMMANDS = ["build-index", "normalize", "evaluate", "judge-export", "judge-import", "sweep", "report", "ingest-omim", "extract"]


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in list(os.environ):
        if name.startswith("ONTONORM_"):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def workspace(tmp_path, entry_table, hpo_matrix):
    terms = make_terms(12)
    embeddings = tmp_path / "embeddings.csv"
    write_embedding_file(embeddings, entry_table, hpo_matrix)
    (tmp_path / "terms.txt").write_text("\n".join(terms) + "\n", encoding="utf-8")
    write_replay_file(tmp_path / "queries.csv", query_vectors(terms))
    return tmp_path


def _index_flags(ws):
    return ["--index", str(ws / "index"), "--query-embeddings", str(ws / "queries.csv")]


def _subparsers():
    parser = build_parser()
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_has_help(command, capsys):
    assert route([command, "--help"]) == 0
    out = capsys.readouterr().out

    assert out.startswith("usage:")
    flags = [flag for action in _subparsers()[command]._actions for flag in action.option_strings]
    assert flags
    for flag in flags:
        assert flag in out, f"{command} help does not mention {flag}"


def test_every_command_is_registered():
    assert sorted(_subparsers()) == sorted(COMMANDS)


def test_version(capsys):
    assert route(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["normalize", "--terms", "t.txt", "--out", "r.jsonl", "--k", "51"],
        ["normalize", "--terms", "t.txt", "--out", "r.jsonl", "--k", "zero"],
        ["normalize", "--mode", "hybrid"],
        ["sweep", "--ks", "5,1"],
        ["evaluate", "--threshold", "1.5"],
        ["normalize", "--mock", "random"],
    ],
)
def test_bad_flags_are_usage_errors(argv):
    assert route(argv) == 2


def test_missing_required_flags_are_usage_errors():
    assert route(["normalize", "--mode", "embed"]) == 2
    assert route(["build-index", "--ontology", str(HPO_CSV)]) == 2
    assert route(["report"]) == 2


def test_missing_embeddings_are_a_configuration_error(workspace):
    argv = ["normalize", "--mode", "embed", "--terms", str(workspace / "terms.txt"), "--out", str(workspace / "r.jsonl")]
    assert route(argv + ["--ontology", str(HPO_CSV), "--embeddings", str(workspace / "embeddings.csv")]) == 2


def test_missing_files_are_data_errors(workspace):
    assert route(["build-index", "--ontology", str(workspace / "absent.csv"), "--out", str(workspace / "index")]) == 1


def test_missing_config_file(workspace):
    assert route(["--config", str(workspace / "absent.toml"), "report"]) == 2


def test_end_to_end(workspace, capsys):
    ws = workspace
    assert route([
        "build-index", "--ontology", str(HPO_CSV), "--embeddings", str(ws / "embeddings.csv"), "--out", str(ws / "index"),
    ]) == 0
    meta = json.loads((ws / "index" / "index.json").read_text(encoding="utf-8"))
    assert (meta["labels"], meta["entries"], meta["dim"]) == (51, 93, 16)

    common = ["--terms", str(ws / "terms.txt")] + _index_flags(ws)
    assert route(["normalize", "--mode", "embed", "--out", str(ws / "embed.jsonl")] + common) == 0
    assert route([
        "normalize", "--mode", "rag", "--mock", "highest-cosine", "--k", "5", "--out", str(ws / "rag.jsonl"),
    ] + common) == 0
    assert (ws / "rag.jsonl.manifest.json").exists()

    embed = read_results(ws / "embed.jsonl")
    rag = read_results(ws / "rag.jsonl")
    assert [r.chosen_id for r in rag] == [r.chosen_id for r in embed]
    assert all(len(r.candidates) == 5 for r in rag)

    with (ws / "gold.csv").open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["term", "gold_id", "gold_surface", "malformed"])
        for result in embed:
            writer.writerow([result.input, result.chosen_id, result.chosen_surface, "0"])

    capsys.readouterr()
    assert route([
        "evaluate", "--results", str(ws / "rag.jsonl"), "--gold", str(ws / "gold.csv"),
        "--threshold", "0.01", "--label", "rag", "--out", str(ws / "metrics.json"),
    ]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[2].split() == ["rag", "1.00", "1.00", "1.00", "1.00", "12"]
    metrics = json.loads((ws / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["methods"][0]["counts"]["tp"] == 12

    assert route([
        "sweep", "--terms", str(ws / "terms.txt"), "--gold", str(ws / "gold.csv"), "--ks", "1,5",
        "--mock", "highest-cosine", "--threshold", "0.01", "--out", str(ws / "sweep.csv"),
    ] + _index_flags(ws)) == 0
    assert (ws / "sweep.csv").read_text(encoding="utf-8").splitlines() == [
        "k,accuracy,tp,fp,fn",
        "1,1.0,12,0,0",
        "5,1.0,12,0,0",
    ]

    capsys.readouterr()
    assert route([
        "report", "--rag", str(ws / "rag.jsonl"), "--embed", str(ws / "embed.jsonl"),
        "--metrics", str(ws / "metrics.json"), "--out", str(ws / "disagreements.csv"),
    ]) == 0
    assert "rag" in capsys.readouterr().out
    assert len((ws / "disagreements.csv").read_text(encoding="utf-8").splitlines()) == 1


def test_review_round_trip_through_the_cli(workspace):
    ws = workspace
    route(["build-index", "--ontology", str(HPO_CSV), "--embeddings", str(ws / "embeddings.csv"), "--out", str(ws / "index")])
    route(["normalize", "--mode", "embed", "--terms", str(ws / "terms.txt"), "--out", str(ws / "embed.jsonl")] + _index_flags(ws))
    embed = read_results(ws / "embed.jsonl")
    with (ws / "gold.csv").open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["term", "gold_id", "gold_surface", "malformed"])
        for result in embed:
            writer.writerow([result.input, result.chosen_id, "", "0"])

    sheet = ws / "review.csv"
    assert route([
        "judge-export", "--results", str(ws / "embed.jsonl"), "--gold", str(ws / "gold.csv"), "--out", str(sheet),
    ]) == 0
    rows = list(csv.DictReader(sheet.read_text(encoding="utf-8").splitlines()))
    assert len(rows) == 12

    rows[0]["human_verdict"] = "no"
    with sheet.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    assert route([
        "judge-import", "--verdicts", str(sheet), "--results", str(ws / "embed.jsonl"), "--out", str(ws / "human.json"),
    ]) == 0
    stored = json.loads((ws / "human.json").read_text(encoding="utf-8"))["verdicts"]
    assert stored == [{"term": rows[0]["term"], "candidate": rows[0]["candidate"], "human_verdict": False}]

    assert route([
        "evaluate", "--results", str(ws / "embed.jsonl"), "--gold", str(ws / "gold.csv"),
        "--verdicts", str(ws / "human.json"), "--threshold", "0.01", "--out", str(ws / "metrics.json"),
    ]) == 0
    counts = json.loads((ws / "metrics.json").read_text(encoding="utf-8"))["methods"][0]["counts"]
    assert (counts["tp"], counts["fp"]) == (11, 1)


def test_ingest_and_extract_offline(tmp_path):
    cache = tmp_path / "cache"
    cache.mkdir()
    entry = {
        "omim": {
            "entryList": [
                {
                    "entry": {
                        "titles": {"preferredTitle": "SPINOCEREBELLAR ATAXIA 1; SCA1"},
                        "textSectionList": [
                            {"textSection": {"textSectionName": "clinicalFeatures", "textSectionContent": "Gait ataxia."}}
                        ],
                    }
                }
            ]
        }
    }
    (cache / "164400.json").write_text(json.dumps(entry), encoding="utf-8")
    (tmp_path / "mims.txt").write_text("164400\n", encoding="utf-8")
    (tmp_path / "table.json").write_text(
        json.dumps({"164400": json.dumps({"Signs": ["gait ataxia", "Legs and arms", "dysarthria"]})}),
        encoding="utf-8",
    )

    assert route([
        "ingest-omim", "--mim-file", str(tmp_path / "mims.txt"), "--cache-dir", str(cache), "--out", str(tmp_path / "docs.jsonl"),
    ]) == 0
    assert route([
        "extract", "--documents", str(tmp_path / "docs.jsonl"), "--out", str(tmp_path / "terms.txt"),
        "--mock", "fixed-table", "--mock-table", str(tmp_path / "table.json"),
    ]) == 0

    assert (tmp_path / "terms.txt").read_text(encoding="utf-8").splitlines() == ["gait ataxia", "dysarthria"]
    assert (tmp_path / "terms.txt.dropped.txt").read_text(encoding="utf-8").splitlines() == ["Legs and arms"]
    assert (tmp_path / "terms.txt.signs.jsonl").exists()


def test_ingest_without_key_or_cache(tmp_path):
    (tmp_path / "mims.txt").write_text("164400\n", encoding="utf-8")
    assert route([
        "ingest-omim", "--mim-file", str(tmp_path / "mims.txt"), "--cache-dir", str(tmp_path / "cache"),
        "--out", str(tmp_path / "docs.jsonl"),
    ]) == 1
