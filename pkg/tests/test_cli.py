from __future__ import annotations

import json

import pytest

from worktrace.cli import main


def test_run_verb(toy_workdir, capsys):
    assert main(["run", "--config", str(toy_workdir), "--workers", "2"]) == 0
    out = capsys.readouterr().out
    assert "manifest.json" in out
    assert (toy_workdir.parent / "out" / "manifest.json").exists()


def test_stage_verb_without_upstream(toy_workdir, capsys):
    code = main(["stage", "--config", str(toy_workdir), "--stage", "propagate"])
    assert code == 1
    assert "MissingArtifactError" in capsys.readouterr().err


def test_stage_verb_runs_single_stage(toy_workdir, capsys):
    assert main(["stage", "--config", str(toy_workdir), "--stage", "validate"]) == 0
    assert "stage validate done" in capsys.readouterr().out
    assert (toy_workdir.parent / "out" / "validation.json").exists()
    assert not (toy_workdir.parent / "out" / "chunks.csv").exists()


def test_bad_config_exits_two(toy_workdir, capsys):
    raw = json.loads(toy_workdir.read_text())
    raw["windows"] = [20, 25, 100]
    toy_workdir.write_text(json.dumps(raw))
    assert main(["run", "--config", str(toy_workdir)]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_stage_rejected_by_parser(toy_workdir):
    with pytest.raises(SystemExit) as excinfo:
        main(["stage", "--config", str(toy_workdir), "--stage", "polish"])
    assert excinfo.value.code == 2


def test_validate_decomposition_clean(toy_workdir, capsys):
    code = main(["validate-decomposition", "--config", str(toy_workdir)])
    assert code == 0
    assert "ok: 10 nodes, 6 leaves" in capsys.readouterr().out


def test_validate_decomposition_violations(tmp_path, capsys):
    (tmp_path / "decomposition.json").write_text(
        json.dumps(
            {
                "format_version": 1,
                "nodes": [
                    {"id": "0", "label": "root", "parent_id": None},
                    {"id": "1", "label": "only branch", "parent_id": "0"},
                    {"id": "1.1", "label": "only leaf", "parent_id": "1"},
                ],
                "dependencies": [],
            }
        )
    )
    (tmp_path / "config.json").write_text(
        json.dumps(
            {
                "decomposition": "decomposition.json",
                "transcripts": "transcripts.csv",
                "reports_dir": "reports",
                "provider": {"kind": "lexical"},
                "windows": [20, 50],
                "output_dir": "out",
            }
        )
    )
    code = main(["validate-decomposition", "--config", str(tmp_path / "config.json")])
    assert code == 1
    out = capsys.readouterr().out
    assert "min_children" in out
    assert "violation" in out


def test_export_verb_rebuilds_manifest(toy_workdir, capsys):
    assert main(["run", "--config", str(toy_workdir)]) == 0
    manifest = toy_workdir.parent / "out" / "manifest.json"
    before = manifest.read_bytes()
    manifest.unlink()
    assert main(["export", "--config", str(toy_workdir)]) == 0
    assert manifest.read_bytes() == before
