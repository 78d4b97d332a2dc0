"""Inference servers speaking the evaluation engine's wire protocol.

One JSON object per line over stdio, or the same body POSTed to
``/predict``. Requests carry {"id", "shape": [H, W, C], "data": [floats]},
responses {"id", "scores": [floats]} with softmax probabilities, or
{"id", "error": text}. Any per-request failure becomes an error response;
the server stays alive.
"""

import json
import sys
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np

from .methods import predict_probs


def handle_request(model, obj) -> dict:
    rid = obj.get("id") if isinstance(obj, dict) else None
    try:
        if not isinstance(obj, dict):
            raise ValueError("request must be a JSON object")
        shape = obj.get("shape")
        if (not isinstance(shape, list) or len(shape) != 3
                or not all(isinstance(v, int) and v > 0 for v in shape)):
            raise ValueError(f"shape must be [H, W, C] positive ints, "
                             f"got {shape!r}")
        h, w, c = shape
        if c not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {c}")
        data = obj.get("data")
        if not isinstance(data, list) or len(data) != h * w * c:
            raise ValueError(
                f"data must hold {h * w * c} values for shape {shape}, "
                f"got {len(data) if isinstance(data, list) else type(data).__name__}"
            )
        raster = np.asarray(data, dtype=np.float64).reshape(h, w, c)
        if not np.isfinite(raster).all():
            raise ValueError("data contains non-finite values")
        probs = predict_probs(model, raster)
        return {"id": rid, "scores": [float(v) for v in probs]}
    except Exception as exc:
        return {"id": rid, "error": str(exc)}


def serve_stdio(model, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            resp = {"id": None, "error": f"unparseable request: {exc}"}
        else:
            resp = handle_request(model, obj)
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()


class _Handler(BaseHTTPRequestHandler):
    model = None

    def do_POST(self):  # noqa: N802 - http.server API
        if self.path.rstrip("/").split("/")[-1] != "predict":
            self.send_error(404, "POST /predict only")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length)
            obj = json.loads(body.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            resp = {"id": None, "error": f"unparseable request: {exc}"}
        else:
            resp = handle_request(self.model, obj)
        payload = json.dumps(resp).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):  # quiet by default
        pass


def make_http_server(model, host: str = "127.0.0.1",
                     port: int = 0) -> HTTPServer:
    """Single-threaded HTTP server (the engine batches; one request at
    a time is the contract)."""
    handler = type("BoundHandler", (_Handler,), {"model": model})
    return HTTPServer((host, port), handler)


def serve_http(model, host: str, port: int) -> None:
    server = make_http_server(model, host, port)
    print(f"serving on http://{server.server_address[0]}:"
          f"{server.server_address[1]}/predict", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
