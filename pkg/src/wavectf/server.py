"""JSON-over-HTTP front end for the referee.

Routes::

    POST /v1/submissions            body: manifest; files must sit in the inbox
    GET  /v1/leaderboard?dataset=X  ordered table (same bytes as ``ctf board --json``)
    GET  /v1/scores/{id}            latest ledger entry for a submission id
"""
from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import _jsonfmt
from .referee import (
    LedgerError,
    ManifestError,
    ingest_dict,
    leaderboard,
    leaderboard_json,
    read_ledger,
    score_and_record,
)
from .splits import Bundle

log = logging.getLogger(__name__)

MAX_BODY = 1 << 20


class RefereeService:
    """State shared by request handlers: ledger path, bundles, inbox."""

    def __init__(self, ledger, bundles_root, inbox, workers=1):
        self.ledger = Path(ledger)
        self.bundles_root = Path(bundles_root)
        self.inbox = Path(inbox)
        self.workers = workers
        self._bundles = {}
        self._lock = threading.Lock()

    def bundle(self, dataset):
        with self._lock:
            if dataset not in self._bundles:
                root = self.bundles_root / dataset
                if not (root / "dataset.json").is_file():
                    raise LookupError(f"no referee bundle for dataset {dataset!r}")
                bundle = Bundle.load(root)
                if not bundle.has_tests:
                    raise LookupError(f"bundle for {dataset!r} lacks test matrices")
                self._bundles[dataset] = bundle
            return self._bundles[dataset]

    def submit(self, doc):
        sub = ingest_dict(doc, self.inbox, confine=True)
        entry = score_and_record(sub, self.bundle(sub.dataset), self.ledger, workers=self.workers)
        return {"id": entry.id, "submitted_at": entry.submitted_at, **entry.report.to_dict()}

    def board(self, dataset, view="best"):
        return leaderboard_json(leaderboard(read_ledger(self.ledger), dataset, view), dataset, view)

    def score(self, sub_id):
        matches = [e for e in read_ledger(self.ledger) if e.id == sub_id]
        if not matches:
            raise LookupError(f"no submission {sub_id!r}")
        return matches[-1].to_dict()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: RefereeService = None

    def log_message(self, fmt, *args):
        log.info("%s %s", self.address_string(), fmt % args)

    def _send(self, status, text):
        body = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status, message):
        self._send(status, _jsonfmt.dumps({"error": message}) + "\n")

    def do_GET(self):
        url = urlparse(self.path)
        try:
            if url.path == "/v1/leaderboard":
                q = parse_qs(url.query)
                if "dataset" not in q:
                    return self._error(400, "missing dataset query parameter")
                view = q.get("view", ["best"])[0]
                return self._send(200, self.service.board(q["dataset"][0], view))
            if url.path.startswith("/v1/scores/"):
                sub_id = url.path[len("/v1/scores/"):]
                return self._send(200, _jsonfmt.dumps(self.service.score(sub_id), indent=2) + "\n")
            return self._error(404, f"no route {url.path}")
        except LookupError as exc:
            return self._error(404, str(exc))
        except ValueError as exc:
            return self._error(400, str(exc))
        except Exception as exc:  # noqa: BLE001 - report, don't kill the server thread
            log.exception("GET %s failed", self.path)
            return self._error(500, str(exc))

    def do_POST(self):
        if urlparse(self.path).path != "/v1/submissions":
            return self._error(404, f"no route {self.path}")
        length = int(self.headers.get("Content-Length") or 0)
        if length <= 0 or length > MAX_BODY:
            return self._error(400, "request body missing or too large")
        try:
            doc = json.loads(self.rfile.read(length))
        except json.JSONDecodeError as exc:
            return self._error(400, f"invalid JSON: {exc}")
        try:
            result = self.service.submit(doc)
        except ManifestError as exc:
            return self._error(400, str(exc))
        except LookupError as exc:
            return self._error(404, str(exc))
        except LedgerError as exc:
            return self._error(503, str(exc))
        except Exception as exc:  # noqa: BLE001
            log.exception("POST failed")
            return self._error(500, str(exc))
        return self._send(200, _jsonfmt.dumps(result, indent=2) + "\n")


def make_server(service, host="127.0.0.1", port=8080):
    handler = type("RefereeHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
