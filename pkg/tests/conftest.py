import http.server
import json
import threading

import pytest

from pathdiv.core import Problem, Solution, count_tokens


def make_solution(sid: str, text: str) -> Solution:
    return Solution(sid, text, count_tokens(text))


def make_problem(pid: str, n_solutions: int = 3, question: str | None = None) -> Problem:
    sols = tuple(
        make_solution(f"{pid}-s{i}", f"solution {i} of {pid} with final answer {i * 7}")
        for i in range(n_solutions)
    )
    return Problem(pid, question or f"question for {pid}", sols)


class _Handler(http.server.BaseHTTPRequestHandler):
    """Scriptable chat/embeddings endpoint for transport tests."""

    server_version = "stub"

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append((self.path, body, dict(self.headers)))
        if self.server.fail_first and len(self.server.requests) == 1:
            self.send_response(500)
            self.end_headers()
            return
        if self.path.endswith("/chat/completions"):
            payload = {"choices": [{"message": {"content": self.server.chat_response}}]}
        elif self.path.endswith("/embeddings"):
            dim = self.server.embed_dim
            payload = {
                "data": [
                    {"embedding": [float(i + 1)] * dim} for i in range(len(body["input"]))
                ]
            }
        else:
            self.send_response(404)
            self.end_headers()
            return
        raw = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)


@pytest.fixture
def stub_server():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    server.requests = []
    server.chat_response = "ok //boxed{{1}}"
    server.embed_dim = 4
    server.fail_first = False
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


@pytest.fixture
def stub_url(stub_server):
    return f"http://127.0.0.1:{stub_server.server_address[1]}"
