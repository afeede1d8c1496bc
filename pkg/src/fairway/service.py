"""Read-only HTTP endpoint classifying (flow, density) queries.

Serves an immutable, pre-trained model document: the classification
depends only on the loaded state bands and the query, so concurrent
requests share the snapshot without locking.  Retraining happens offline
via the CLI followed by a restart.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import DomainError
from .io_store import ModelDocument, document_to_dict
from .traffic_state import classify_flow_density


def make_server(doc: ModelDocument, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Build (but do not start) the service; requires state bands in the document."""
    if doc.bands is None:
        raise DomainError("the served model document must contain state bands")
    bands = doc.bands
    model_body = json.dumps(document_to_dict(doc), sort_keys=True,
                            separators=(",", ":")).encode()

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, body: bytes) -> None:
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status: int, obj) -> None:
            self._send(status, json.dumps(obj, separators=(",", ":")).encode())

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/health":
                self._send_json(200, {"status": "ok"})
            elif url.path == "/model":
                self._send(200, model_body)
            elif url.path == "/state":
                self._handle_state(parse_qs(url.query))
            else:
                self._send_json(404, {"error": f"unknown path {url.path}"})

        def _handle_state(self, query) -> None:
            values = {}
            for name in ("flow", "density"):
                if name not in query:
                    self._send_json(400, {"error": f"missing query parameter {name!r}"})
                    return
                try:
                    values[name] = float(query[name][0])
                except ValueError:
                    self._send_json(
                        400, {"error": f"invalid value for {name!r}: {query[name][0]!r}"}
                    )
                    return
            if values["density"] <= 0:
                self._send_json(422, {"error": "density must be positive"})
                return
            try:
                speed, state = classify_flow_density(bands, values["flow"], values["density"])
            except DomainError as exc:
                self._send_json(422, {"error": str(exc)})
                return
            self._send_json(
                200, {"speed_kmh": speed, "state": state.value, "color": state.color}
            )

    return ThreadingHTTPServer((host, port), Handler)


def serve(doc: ModelDocument, port: int, host: str = "0.0.0.0") -> None:
    """Run the service until interrupted."""
    server = make_server(doc, port, host=host)
    try:
        server.serve_forever()
    finally:
        server.server_close()
