from __future__ import annotations

import pytest

from scorer_service.models import LexicalStub
from scorer_service.service import build_server
from serving import start


@pytest.fixture()
def stub_endpoint():
    server = build_server(LexicalStub())
    url = start(server)
    yield url
    server.shutdown()
    server.server_close()
