"""JSON-over-HTTP face of the scorer.

POST /v1/score with {"pairs": [{"left_text": ..., "right_text": ...}, ...]}
answers {"scores": [...], "model": "..."}, order-aligned with the request.
GET /v1/health answers {"status": "loading" | "ready", "model": "..."}.

The model loads on a background thread; scoring requests get 503 until it
reports ready. Malformed requests get 400 with a reason. Whatever the
model's native range, responses are clamped to [0, 1] here, and inference
batches are serialized through the model while the HTTP layer stays
concurrent.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

log = logging.getLogger("scorer_service")

DEFAULT_BATCH_CAP = 1024

LOADING = "loading"
READY = "ready"


class BadRequest(Exception):
    pass


class ScorerState:
    def __init__(self, model, *, batch_cap: int = DEFAULT_BATCH_CAP, load_delay: float = 0.0):
        self.model = model
        self.batch_cap = batch_cap
        self.load_delay = load_delay
        self.ready = threading.Event()
        self._inference = threading.Lock()

    def start_loading(self) -> None:
        threading.Thread(target=self._load, daemon=True).start()

    def _load(self) -> None:
        if self.load_delay:
            time.sleep(self.load_delay)
        self.model.load()
        self.ready.set()
        log.info("model %s ready", self.model.name)

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        with self._inference:
            raw = self.model.score_batch(pairs)
        return [min(1.0, max(0.0, float(v))) for v in raw]


def parse_pairs(payload, batch_cap: int) -> list[tuple[str, str]]:
    if not isinstance(payload, dict):
        raise BadRequest("request body must be a JSON object")
    pairs = payload.get("pairs")
    if not isinstance(pairs, list) or not pairs:
        raise BadRequest("'pairs' must be a nonempty list")
    if len(pairs) > batch_cap:
        raise BadRequest(f"batch of {len(pairs)} exceeds the cap of {batch_cap}")
    out = []
    for index, item in enumerate(pairs):
        if not isinstance(item, dict):
            raise BadRequest(f"pair {index} is not an object")
        left = item.get("left_text")
        right = item.get("right_text")
        for side, text in (("left_text", left), ("right_text", right)):
            if not isinstance(text, str):
                raise BadRequest(f"pair {index} is missing a string {side}")
            if not text:
                raise BadRequest(f"pair {index} has an empty {side}")
        out.append((left, right))
    return out


class _Handler(BaseHTTPRequestHandler):
    server: "ScorerServer"

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        state = self.server.state
        if self.path == "/v1/health":
            status = READY if state.ready.is_set() else LOADING
            self._send(200, {"status": status, "model": state.model.name})
        elif self.path == "/v1/score":
            self._send(405, {"error": "use POST for /v1/score"})
        else:
            self._send(404, {"error": f"no such path {self.path}"})

    def do_POST(self) -> None:
        state = self.server.state
        if self.path != "/v1/score":
            self._send(404, {"error": f"no such path {self.path}"})
            return
        if not state.ready.is_set():
            self._send(503, {"error": "model is loading", "model": state.model.name})
            return
        length = int(self.headers.get("Content-Length") or 0)
        try:
            payload = json.loads(self.rfile.read(length) or b"")
        except json.JSONDecodeError as exc:
            self._send(400, {"error": f"body is not valid JSON: {exc}"})
            return
        try:
            pairs = parse_pairs(payload, state.batch_cap)
        except BadRequest as exc:
            self._send(400, {"error": str(exc)})
            return
        self._send(200, {"scores": state.score(pairs), "model": state.model.name})

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s %s", self.address_string(), fmt % args)


class ScorerServer(ThreadingHTTPServer):
    daemon_threads = True
    state: ScorerState


def build_server(
    model,
    *,
    host: str = "127.0.0.1",
    port: int = 0,
    batch_cap: int = DEFAULT_BATCH_CAP,
    load_delay: float = 0.0,
) -> ScorerServer:
    """Bound server with the model loading in the background; port 0 picks
    a free one (server_address holds the real port)."""
    server = ScorerServer((host, port), _Handler)
    server.state = ScorerState(model, batch_cap=batch_cap, load_delay=load_delay)
    server.state.start_loading()
    return server


def serve(model, *, host: str = "127.0.0.1", port: int = 8090, batch_cap: int = DEFAULT_BATCH_CAP) -> None:
    server = build_server(model, host=host, port=port, batch_cap=batch_cap)
    log.info("scoring at http://%s:%d with model %s", *server.server_address[:2], model.name)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
