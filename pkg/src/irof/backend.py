"""Black-box classifier access: batched forward inference over a transport.

Three transports exist. The reference one spawns an external process and
speaks line-delimited JSON over its stdin/stdout: request
``{"id", "shape": [H, W, C], "data": [floats]}``, response
``{"id", "scores": [floats]}`` or ``{"id", "error": text}``, one object
per line, UTF-8. An HTTP transport POSTs the same objects to /predict.
The ONNX transport loads a model file in-process and is optional: it
activates only if onnxruntime is importable.

Transport failures are retried with a fresh connection/process; the raised
BackendError carries the attempt count. Model-side rejections (an "error"
response, non-finite scores) are not retried.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .errors import BackendError, ConfigError, DataError
from .imagery import Image

RETRY_ATTEMPTS = 3


@dataclass(frozen=True, eq=False)
class ClassScores:
    """One score per class for a single input."""

    scores: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.scores, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)
        # attempts=0: model-side defects are not retryable transport failures
        if arr.ndim != 1 or arr.size < 1:
            raise BackendError(
                f"scores must be a non-empty vector, got {arr.shape}", attempts=0
            )
        if not np.isfinite(arr).all():
            raise BackendError("model returned non-finite scores", attempts=0)
        if self.normalized:
            if arr.min() < -1e-9 or abs(float(arr.sum()) - 1.0) > 1e-4:
                raise BackendError(
                    "scores declared softmax-normalized but are not "
                    f"(sum={float(arr.sum())!r}, min={float(arr.min())!r})",
                    attempts=0,
                )

    @property
    def class_count(self) -> int:
        return self.scores.size


def class_score(scores: ClassScores, target: int) -> float:
    if not 0 <= target < scores.class_count:
        raise DataError(
            f"target class {target} outside 0..{scores.class_count - 1}"
        )
    return float(scores.scores[target])


@dataclass(frozen=True)
class BackendConfig:
    """How to reach the model and what layout it expects."""

    transport: str  # external-process | http | onnx-file
    endpoint: str  # command line, URL, or model path
    batch_size: int = 16
    channel_order: str = "hwc"  # onnx only: hwc or chw
    softmax: bool = True

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.transport not in ("external-process", "http", "onnx-file"):
            raise ConfigError(f"unknown transport {self.transport!r}")
        if self.channel_order not in ("hwc", "chw"):
            raise ConfigError(
                f"channel_order must be hwc or chw, got {self.channel_order!r}"
            )


def _chunks(seq: Sequence, size: int):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


class Backend:
    """Shared batching, retry, locking, and self-test scaffolding.

    A handle may be shared across worker threads; calls are serialized so
    transports with a single connection/process stay coherent.
    """

    def __init__(self, batch_size: int = 16, softmax: bool = True) -> None:
        if batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
        self.batch_size = batch_size
        self.softmax = softmax
        self._lock = threading.RLock()

    def predict_batch(self, images: Sequence[Image]) -> List[ClassScores]:
        """One ClassScores per image, order-preserving."""
        out: List[ClassScores] = []
        with self._lock:
            for chunk in _chunks(list(images), self.batch_size):
                out.extend(self._predict_chunk(chunk))
        return out

    def _predict_chunk(self, images: Sequence[Image]) -> List[ClassScores]:
        last_exc: Optional[Exception] = None
        for attempt in range(1, RETRY_ATTEMPTS + 1):
            try:
                return self._transport(images)
            except BackendError as exc:
                if exc.attempts == 0:  # model-side rejection, do not retry
                    raise BackendError(str(exc), attempts=attempt) from None
                last_exc = exc
                self._reset()
        raise BackendError(
            f"transport failed after {RETRY_ATTEMPTS} attempts: {last_exc}",
            attempts=RETRY_ATTEMPTS,
        )

    def _transport(self, images: Sequence[Image]) -> List[ClassScores]:
        raise NotImplementedError

    def _reset(self) -> None:
        pass

    def self_test(self, image: Image) -> None:
        """Determinism check: the same input twice must score identically."""
        a = self.predict_batch([image])[0].scores
        b = self.predict_batch([image])[0].scores
        if a.shape != b.shape or float(np.abs(a - b).max()) >= 1e-6:
            raise BackendError(
                "backend is not deterministic: repeated inference on one "
                f"image differs by {float(np.abs(a - b).max())!r}"
            )

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def _reject(msg: str) -> BackendError:
    # attempts=0 marks a non-retryable model-side failure for _predict_chunk
    return BackendError(msg, attempts=0)


class CallableBackend(Backend):
    """In-process model function, mainly for tests and fixtures."""

    def __init__(self, fn: Callable[[np.ndarray], Sequence[float]], *,
                 batch_size: int = 16, softmax: bool = True) -> None:
        super().__init__(batch_size, softmax)
        self._fn = fn

    def _transport(self, images: Sequence[Image]) -> List[ClassScores]:
        return [
            ClassScores(np.asarray(self._fn(im.data), np.float64), self.softmax)
            for im in images
        ]


class ProcessBackend(Backend):
    """Spawned model process speaking the line-delimited JSON protocol."""

    def __init__(self, command: str, *, batch_size: int = 16,
                 softmax: bool = True) -> None:
        super().__init__(batch_size, softmax)
        self._command = command
        self._proc: Optional[subprocess.Popen] = None
        self._next_id = 0

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self._command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as exc:
                raise BackendError(
                    f"cannot spawn model process {self._command!r}: {exc}"
                ) from None
        return self._proc

    def _transport(self, images: Sequence[Image]) -> List[ClassScores]:
        proc = self._ensure_proc()
        ids = []
        lines = []
        for im in images:
            rid = self._next_id
            self._next_id += 1
            ids.append(rid)
            lines.append(
                json.dumps(
                    {
                        "id": rid,
                        "shape": list(im.data.shape),
                        "data": im.data.ravel().tolist(),
                    }
                )
                + "\n"
            )

        # writing and reading from the same thread can deadlock on full
        # pipes, so requests go out on a side thread
        def _write() -> None:
            try:
                for ln in lines:
                    proc.stdin.write(ln)
                proc.stdin.flush()
            except (OSError, ValueError):
                pass  # reader sees EOF and reports the failure

        writer = threading.Thread(target=_write, daemon=True)
        writer.start()

        pending = set(ids)
        by_id = {}
        try:
            while pending:
                line = proc.stdout.readline()
                if not line:
                    raise BackendError(
                        f"model process exited mid-batch "
                        f"({len(pending)} responses outstanding)"
                    )
                try:
                    msg = json.loads(line)
                except ValueError:
                    raise BackendError(
                        f"unparseable response line: {line[:120]!r}"
                    ) from None
                rid = msg.get("id")
                if rid not in pending:
                    raise BackendError(f"response for unknown request id {rid!r}")
                if "error" in msg:
                    raise _reject(f"model rejected request {rid}: {msg['error']}")
                scores = msg.get("scores")
                if not isinstance(scores, list) or not scores:
                    raise _reject(f"response {rid} lacks a scores list")
                by_id[rid] = ClassScores(
                    np.asarray(scores, np.float64), self.softmax
                )
                pending.discard(rid)
        finally:
            writer.join(timeout=5.0)
        return [by_id[rid] for rid in ids]

    def _reset(self) -> None:
        self.close()

    def close(self) -> None:
        if self._proc is not None:
            for stream in (self._proc.stdin, self._proc.stdout):
                try:
                    stream.close()
                except OSError:
                    pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._proc = None


class HttpBackend(Backend):
    """POST /predict with the same JSON objects as the process transport."""

    def __init__(self, url: str, *, batch_size: int = 16,
                 softmax: bool = True, timeout: float = 30.0) -> None:
        super().__init__(batch_size, softmax)
        self._url = url if url.rstrip("/").endswith("/predict") else (
            url.rstrip("/") + "/predict"
        )
        self._timeout = timeout
        self._next_id = 0

    def _transport(self, images: Sequence[Image]) -> List[ClassScores]:
        out = []
        for im in images:
            rid = self._next_id
            self._next_id += 1
            body = json.dumps(
                {
                    "id": rid,
                    "shape": list(im.data.shape),
                    "data": im.data.ravel().tolist(),
                }
            ).encode("utf-8")
            req = urllib.request.Request(
                self._url, data=body,
                headers={"Content-Type": "application/json"},
            )
            try:
                with urllib.request.urlopen(req, timeout=self._timeout) as resp:
                    if resp.status != 200:
                        raise BackendError(f"HTTP status {resp.status}")
                    msg = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, ValueError) as exc:
                raise BackendError(f"HTTP transport failure: {exc}") from None
            if "error" in msg:
                raise _reject(f"model rejected request {rid}: {msg['error']}")
            out.append(
                ClassScores(np.asarray(msg.get("scores"), np.float64),
                            self.softmax)
            )
        return out


class OnnxBackend(Backend):
    """In-process inference from an ONNX model file (optional extra)."""

    def __init__(self, path: str, *, batch_size: int = 16,
                 softmax: bool = True, channel_order: str = "chw") -> None:
        super().__init__(batch_size, softmax)
        try:
            import onnxruntime
        except ImportError:
            raise ConfigError(
                "the onnx transport needs onnxruntime; install the "
                "'onnx' extra or use proc:/http: backends"
            ) from None
        self._session = onnxruntime.InferenceSession(
            path, providers=["CPUExecutionProvider"]
        )
        self._input_name = self._session.get_inputs()[0].name
        self._channel_order = channel_order

    def _transport(self, images: Sequence[Image]) -> List[ClassScores]:
        batch = np.stack([im.data for im in images]).astype(np.float32)
        if self._channel_order == "chw":
            batch = batch.transpose(0, 3, 1, 2)
        try:
            outputs = self._session.run(None, {self._input_name: batch})
        except Exception as exc:
            raise _reject(f"onnx inference failed: {exc}") from None
        scores = np.asarray(outputs[0], np.float64)
        return [ClassScores(row, self.softmax) for row in scores]


def backend_from_spec(spec: str, *, batch_size: int = 16,
                      softmax: bool = True) -> Backend:
    """Parse ``proc:CMD`` / ``http:URL`` / ``onnx:PATH`` into a backend."""
    kind, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise ConfigError(
            f"backend spec {spec!r} must look like proc:CMD, http:URL, "
            "or onnx:PATH"
        )
    if kind == "proc":
        return ProcessBackend(rest, batch_size=batch_size, softmax=softmax)
    if kind == "http":
        return HttpBackend(rest, batch_size=batch_size, softmax=softmax)
    if kind == "onnx":
        return OnnxBackend(rest, batch_size=batch_size, softmax=softmax)
    raise ConfigError(f"unknown backend kind {kind!r} in {spec!r}")


def open_backend(config: BackendConfig) -> Backend:
    """Instantiate a backend from a BackendConfig."""
    if config.transport == "external-process":
        return ProcessBackend(
            config.endpoint, batch_size=config.batch_size,
            softmax=config.softmax,
        )
    if config.transport == "http":
        return HttpBackend(
            config.endpoint, batch_size=config.batch_size,
            softmax=config.softmax,
        )
    return OnnxBackend(
        config.endpoint, batch_size=config.batch_size,
        softmax=config.softmax, channel_order=config.channel_order,
    )


def predict_batch(images: Iterable[Image], backend: Backend) -> List[ClassScores]:
    """Convenience wrapper mirroring Backend.predict_batch."""
    return backend.predict_batch(list(images))
