import json
import random
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from chunkorder.corpus import load_corpus

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name):
    return FIXTURES / name


def read_json(name):
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def mini_en():
    corpus, diags = load_corpus(fixture_path("mini_en.txt"), "english", "strict")
    assert diags == []
    return corpus


@pytest.fixture(scope="session")
def mini_zh():
    corpus, diags = load_corpus(fixture_path("mini_zh.txt"), "chinese", "strict")
    assert diags == []
    return corpus


# -- mock chat-completion endpoint ---------------------------------------------


def target_sentence(messages):
    """The sentence under annotation: the last ``Original:`` line of the first prompt."""
    prompt = messages[0]["content"]
    lines = [line for line in prompt.splitlines() if line.startswith("Original: ")]
    return lines[-1][len("Original: "):]


class MockChat:
    """Tiny threaded HTTP server speaking the chat-completion wire format.

    ``respond(target, messages)`` returns the assistant text, or an int to
    send that HTTP status instead. Tracks requests and peak concurrency.
    """

    def __init__(self, respond, latency=None):
        self.respond = respond
        self.latency = latency or (lambda: 0.0)
        self.requests = []
        self.active = 0
        self.peak = 0
        self.lock = threading.Lock()
        mock = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with mock.lock:
                    mock.active += 1
                    mock.peak = max(mock.peak, mock.active)
                    mock.requests.append({"body": body, "auth": self.headers.get("Authorization")})
                try:
                    time.sleep(mock.latency())
                    result = mock.respond(target_sentence(body["messages"]), body["messages"])
                finally:
                    with mock.lock:
                        mock.active -= 1
                if isinstance(result, int):
                    self.send_response(result)
                    self.end_headers()
                    return
                payload = json.dumps(
                    {"choices": [{"index": 0, "message": {"role": "assistant", "content": result}}]}
                ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.server.daemon_threads = True
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"
        self.thread = threading.Thread(target=self.server.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def mock_chat():
    servers = []

    def start(respond, latency=None):
        m = MockChat(respond, latency).__enter__()
        servers.append(m)
        return m

    yield start
    for m in servers:
        m.__exit__()


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("CHUNKORDER_API_KEY", "test-key")
    return "test-key"


def jitter(seed=0, high=0.03):
    rng = random.Random(seed)
    lock = threading.Lock()

    def latency():
        with lock:
            return rng.uniform(0, high)

    return latency


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
