"""JSON-over-HTTP study service: the Experiment-1 flow behind a thin client.

Routes:
    GET  /study/{id}/next-task?annotator=...   next pair, pending verdict, or done
    POST /study/{id}/labels     {task_id, annotator_id, label}
    POST /study/{id}/verdicts   {article_id, annotator_id, verdict}
    GET  /study/{id}/stats      agreement, distributions, accuracy, majority votes
    GET  /study/{id}/progress   completed/total per annotator and overall

Submissions are idempotent: resubmitting the same (task, annotator) pair
replaces the prior record via the store's last-write-wins log.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .study import PAIR_LABELS, VERDICTS, Study


class StudyRequestHandler(BaseHTTPRequestHandler):
    server_version = "MultiverseStudy/1.0"
    studies: dict[str, Study] = {}

    def log_message(self, format, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict):
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _study_and_action(self) -> tuple[Study | None, str, dict]:
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        if len(parts) != 3 or parts[0] != "study":
            return None, "", query
        study = self.studies.get(parts[1])
        return study, parts[2], query

    def do_OPTIONS(self):
        self._send(200, {})

    def do_GET(self):
        study, action, query = self._study_and_action()
        if study is None:
            self._send(404, {"error": "unknown study"})
            return
        try:
            if action == "next-task":
                annotator = query.get("annotator", "")
                if not annotator:
                    self._send(400, {"error": "annotator query parameter required"})
                    return
                self._send(200, study.next_step(annotator))
            elif action == "stats":
                self._send(200, study.stats())
            elif action == "progress":
                self._send(200, study.progress())
            else:
                self._send(404, {"error": f"unknown action {action!r}"})
        except KeyError as exc:
            self._send(404, {"error": str(exc)})

    def do_POST(self):
        study, action, _ = self._study_and_action()
        if study is None:
            self._send(404, {"error": "unknown study"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            payload = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "invalid JSON body"})
            return
        try:
            if action == "labels":
                task_id = payload["task_id"]
                annotator = payload["annotator_id"]
                label = payload["label"]
                if task_id not in study.tasks:
                    self._send(404, {"error": f"unknown task {task_id!r}"})
                    return
                if label not in PAIR_LABELS:
                    self._send(400, {"error": f"label must be one of {PAIR_LABELS}"})
                    return
                study.store.add_label(task_id, annotator, label)
                self._send(200, {"ok": True, "task_id": task_id})
            elif action == "verdicts":
                article_id = payload["article_id"]
                annotator = payload["annotator_id"]
                verdict = payload["verdict"]
                if article_id not in study.articles:
                    self._send(404, {"error": f"unknown article {article_id!r}"})
                    return
                if verdict not in VERDICTS:
                    self._send(400, {"error": f"verdict must be one of {VERDICTS}"})
                    return
                study.store.add_verdict(article_id, annotator, verdict)
                self._send(200, {"ok": True, "article_id": article_id})
            else:
                self._send(404, {"error": f"unknown action {action!r}"})
        except KeyError as exc:
            self._send(400, {"error": f"missing field {exc}"})


class StudyServer:
    """Threaded HTTP server hosting one or more studies."""

    def __init__(self, studies: dict[str, Study], host: str = "127.0.0.1",
                 port: int = 0):
        handler = type("BoundHandler", (StudyRequestHandler,), {"studies": studies})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "StudyServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self.httpd.serve_forever()

    def shutdown(self):
        self.httpd.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.httpd.server_close()
