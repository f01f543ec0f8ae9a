"""Shared server-in-a-thread helper for the service tests."""

from __future__ import annotations

import threading


def start(server) -> str:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return f"http://127.0.0.1:{server.server_address[1]}"
