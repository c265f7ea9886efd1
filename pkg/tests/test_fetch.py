"""Fetcher cache semantics against a local stub server."""
import http.server
import threading

import pytest

from spreadscope.errors import FetchError
from spreadscope.fetch import CACHE_ENV, cache_path, default_cache_dir, fetch_series

BODY = "DATE,GS3M\n1969-01-01,6.14\n"


class StubHandler(http.server.BaseHTTPRequestHandler):
    hits = []

    def do_GET(self):
        StubHandler.hits.append(self.path)
        if "missing" in self.path:
            self.send_response(404)
            self.end_headers()
            return
        payload = BODY.encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    StubHandler.hits = []
    yield f"http://127.0.0.1:{server.server_port}/fred"
    server.shutdown()
    thread.join()


def test_miss_fetches_and_stores(stub_server, tmp_path):
    body = fetch_series("GS3M", stub_server, tmp_path)
    assert body == BODY
    stored = cache_path("GS3M", tmp_path)
    assert stored.read_text() == BODY
    assert StubHandler.hits == ["/fred?id=GS3M"]


def test_hit_skips_network(stub_server, tmp_path):
    fetch_series("GS3M", stub_server, tmp_path)
    # A dead endpoint proves the second call never leaves the cache.
    body = fetch_series("GS3M", "http://127.0.0.1:1/fred", tmp_path)
    assert body == BODY
    assert len(StubHandler.hits) == 1


def test_non_200_is_an_error(stub_server, tmp_path):
    with pytest.raises(FetchError, match="404"):
        fetch_series("missing", stub_server, tmp_path)
    assert not cache_path("missing", tmp_path).exists()


def test_unreachable_with_empty_cache(tmp_path):
    with pytest.raises(FetchError, match="cannot reach"):
        fetch_series("GS3M", "http://127.0.0.1:1/fred", tmp_path)


def test_url_template_placeholder(stub_server, tmp_path):
    fetch_series("GS6M", stub_server + "/csv/{id}", tmp_path)
    assert StubHandler.hits == ["/fred/csv/GS6M"]


def test_default_cache_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "c"))
    assert default_cache_dir() == tmp_path / "c"
    monkeypatch.delenv(CACHE_ENV)
    assert default_cache_dir().name == "spreadscope"