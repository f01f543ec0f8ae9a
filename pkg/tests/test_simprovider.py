from __future__ import annotations

import json
import logging
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

import oracles
import synth
from worktrace.chunker import Chunk
from worktrace.errors import (
    ConfigError,
    MissingPairError,
    ProviderUnavailableError,
    WindowMismatchError,
)
from worktrace.simprovider import (
    ENDPOINT_ENV_VAR,
    ConstantProvider,
    FileProvider,
    LexicalProvider,
    RemoteProvider,
    load_score_file,
    make_provider,
    write_score_file,
)
from worktrace.textnorm import canonical_set


def chunk(text: str, window: int = 20, origin: str = "P1:t1p", side: str = "transcript", start: int = 0):
    tokens = tuple(text.split())
    return Chunk(
        chunk_id=f"{origin}:w{window}:{start}",
        origin=origin,
        side=side,
        window=window,
        start_index=start,
        words=tokens,
        word_set=canonical_set(tokens),
    )


def pair(left_text: str, right_text: str, window: int = 20):
    return (
        chunk(left_text, window=window),
        chunk(right_text, window=window, origin="P1:doc", side="report"),
    )


def test_constant_provider_scores_everything_the_same():
    provider = ConstantProvider(0.7)
    pairs = [pair("alpha beta", "gamma"), pair("one", "two")]
    scores = provider.score_pairs(pairs)
    assert [s.score for s in scores] == [0.7, 0.7]
    assert scores[0].left == pairs[0][0].chunk_id
    assert scores[0].right == pairs[0][1].chunk_id


def test_lexical_provider_matches_jaccard_oracle():
    provider = LexicalProvider()
    same = provider.score_pairs([pair("alpha beta", "alpha beta")])
    assert same[0].score == 1.0
    disjoint = provider.score_pairs([pair("alpha beta", "gamma delta")])
    assert disjoint[0].score == 0.0
    rng = random.Random(3)
    pairs = [
        pair(synth.random_text(rng, 3, 15), synth.random_text(rng, 3, 15))
        for _ in range(40)
    ]
    scores = provider.score_pairs(pairs)
    for (left, right), got in zip(pairs, scores):
        assert got.score == pytest.approx(oracles.jaccard(left.words, right.words))


def test_window_mismatch_rejected():
    left = chunk("a b c", window=20)
    right = chunk("a b c", window=50, origin="P1:doc", side="report")
    with pytest.raises(WindowMismatchError):
        ConstantProvider().score_pairs([(left, right)])


def test_out_of_range_scores_clamped_and_logged(caplog):
    provider = ConstantProvider(1.5)
    with caplog.at_level(logging.WARNING, logger="worktrace.simprovider"):
        scores = provider.score_pairs([pair("a", "b")])
    assert scores[0].score == 1.0
    assert "clamped" in caplog.text
    with pytest.raises(ValueError, match="non-finite"):
        ConstantProvider(float("nan")).score_pairs([pair("a", "b")])


def test_file_provider_roundtrip(tmp_path):
    provider = LexicalProvider()
    pairs = [
        (chunk("alpha beta", origin="P1:t1p"), chunk("beta gamma", origin="P1:doc", side="report")),
        (chunk("delta", origin="P1:t2p"), chunk("delta", origin="P1:doc", side="report", start=10)),
    ]
    scores = provider.score_pairs(pairs)
    path = tmp_path / "scores.csv"
    write_score_file(path, scores)
    table = load_score_file(path)
    assert table[(scores[0].left, scores[0].right)] == scores[0].score
    file_provider = FileProvider(table)
    again = file_provider.score_pairs(pairs)
    assert again == scores


def test_file_provider_missing_pairs_listed():
    provider = FileProvider({})
    pairs = [pair("a", "b"), pair("c", "d")]
    with pytest.raises(MissingPairError) as err:
        provider.score_pairs(pairs)
    assert len(err.value.pairs) == 2


class _StubHandler(BaseHTTPRequestHandler):
    health_countdown = 0
    batch_sizes: list[int] = []

    def log_message(self, *args):  # noqa: N802 - silence request logging
        pass

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802
        if self.path != "/v1/health":
            self._send(404, {})
            return
        cls = type(self)
        if cls.health_countdown > 0:
            cls.health_countdown -= 1
            self._send(200, {"status": "loading", "model": "stub"})
        else:
            self._send(200, {"status": "ready", "model": "stub"})

    def do_POST(self):  # noqa: N802
        if self.path != "/v1/score":
            self._send(404, {})
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        pairs = payload["pairs"]
        type(self).batch_sizes.append(len(pairs))
        scores = [
            1.0 if p["left_text"] == p["right_text"] else 0.25 for p in pairs
        ]
        self._send(200, {"scores": scores, "model": "stub"})


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    _StubHandler.health_countdown = 2
    _StubHandler.batch_sizes = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    thread.join()


def test_remote_provider_waits_for_ready_then_scores(stub_server):
    provider = RemoteProvider(stub_server, batch_size=3, poll_interval=0.01)
    pairs = [pair(f"text {i}", f"text {i}" if i % 2 else "other") for i in range(7)]
    scores = provider.score_pairs(pairs)
    assert [s.score for s in scores] == [0.25, 1.0, 0.25, 1.0, 0.25, 1.0, 0.25]
    assert _StubHandler.batch_sizes == [3, 3, 1]
    # A second call reuses readiness; identical answers.
    assert provider.score_pairs(pairs) == scores


def test_remote_provider_unavailable():
    provider = RemoteProvider(
        "http://127.0.0.1:9", ready_timeout=0.2, poll_interval=0.05, timeout=0.2
    )
    with pytest.raises(ProviderUnavailableError):
        provider.score_pairs([pair("a", "b")])


def test_make_provider_factory(tmp_path, monkeypatch):
    assert isinstance(make_provider({"kind": "lexical"}, tmp_path), LexicalProvider)
    constant = make_provider({"kind": "constant", "value": 0.3}, tmp_path)
    assert isinstance(constant, ConstantProvider) and constant.value == 0.3
    write_score_file(tmp_path / "s.csv", [])
    assert isinstance(make_provider({"kind": "file", "path": "s.csv"}, tmp_path), FileProvider)
    with pytest.raises(ConfigError):
        make_provider({"kind": "file"}, tmp_path)
    with pytest.raises(ConfigError):
        make_provider({"kind": "oracle"}, tmp_path)

    monkeypatch.delenv(ENDPOINT_ENV_VAR, raising=False)
    with pytest.raises(ConfigError):
        make_provider({"kind": "remote"}, tmp_path)
    remote = make_provider(
        {"kind": "remote", "endpoint": "http://config-host:1", "batch_size": 7}, tmp_path
    )
    assert remote.endpoint == "http://config-host:1"
    assert remote.batch_size == 7
    monkeypatch.setenv(ENDPOINT_ENV_VAR, "http://operator-host:2")
    overridden = make_provider({"kind": "remote", "endpoint": "http://config-host:1"}, tmp_path)
    assert overridden.endpoint == "http://operator-host:2"
