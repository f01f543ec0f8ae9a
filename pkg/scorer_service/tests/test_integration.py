"""The primary pipeline run against this service, compared with the same
scores fed back through its file-backed provider. Needs the primary
package installed; its toy fixture is used as the corpus."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from serving import start
from scorer_service.models import LexicalStub
from scorer_service.service import build_server
from worktrace.cli import main as worktrace_main
from worktrace.simprovider import RemoteProvider

TOY = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "toy"


def run_with_provider(tmp_path: Path, tag: str, provider: dict) -> Path:
    workdir = tmp_path / tag
    shutil.copytree(TOY, workdir)
    config = json.loads((workdir / "config.json").read_text())
    config["provider"] = provider
    (workdir / "config.json").write_text(json.dumps(config))
    assert worktrace_main(["run", "--config", str(workdir / "config.json")]) == 0
    return workdir / "out"


def test_client_waits_for_ready_then_scores():
    server = build_server(LexicalStub(), load_delay=0.4)
    endpoint = start(server)
    try:
        provider = RemoteProvider(endpoint, poll_interval=0.05)
        assert provider.wait_ready() == "lexical-stub"
    finally:
        server.shutdown()
        server.server_close()


def test_full_run_matches_file_backed_equivalent(tmp_path, stub_endpoint):
    remote_out = run_with_provider(
        tmp_path, "remote", {"kind": "remote", "endpoint": stub_endpoint}
    )

    file_dir = tmp_path / "filebacked"
    shutil.copytree(TOY, file_dir)
    shutil.copy(remote_out / "scores.csv", file_dir / "scores.csv")
    assert worktrace_main(["run", "--config", str(file_dir / "config.json")]) == 0
    file_out = file_dir / "out"

    # configs differ by provider, so the manifest may; every result must not
    compared = 0
    for path in sorted(remote_out.rglob("*")):
        if not path.is_file() or path.name in ("manifest.json", "run_info.json"):
            continue
        other = file_out / path.relative_to(remote_out)
        assert path.read_bytes() == other.read_bytes(), f"{path.name} differs"
        compared += 1
    assert compared >= 10


def test_endpoint_env_override(tmp_path, stub_endpoint, monkeypatch):
    monkeypatch.setenv("WORKTRACE_SCORER_ENDPOINT", stub_endpoint)
    out = run_with_provider(tmp_path, "env", {"kind": "remote"})
    assert (out / "manifest.json").exists()
