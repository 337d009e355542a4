"""Client for external models speaking line-delimited JSON over stdio.

One JSON object per line, UTF-8, LF-terminated. Requests go to the
child's stdin, responses come back on stdout, matched by request id.
The first exchange is the info handshake (id 0), which reports the
task and feature count. Requests are serialized under a lock, so
concurrent callers interleave whole request/response pairs, never
fragments.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading

import numpy as np

from eamex.core import Task, ValidationError
from eamex.models import ModelHandle, ModelKind

DEFAULT_TIMEOUT = 30.0
_LINE_PREVIEW = 200


class ExternalError(RuntimeError):
    """Base for anything that goes wrong talking to an external model."""


class TransportError(ExternalError):
    """Timeout, dead process, or a protocol violation (bad line, bad id)."""


class ExternalModelError(ExternalError):
    """The model itself reported an error response."""


def _preview(line: str) -> str:
    line = line.rstrip("\n")
    if len(line) > _LINE_PREVIEW:
        return line[:_LINE_PREVIEW] + "..."
    return line


class ExternalModel:
    """Owns the child process and speaks the request/response protocol."""

    def __init__(self, command: list[str], timeout: float = DEFAULT_TIMEOUT):
        self._timeout = timeout
        self._lock = threading.Lock()
        self._responses: queue.Queue = queue.Queue()
        self._next_id = 1
        self._closed = False
        self._eof = False
        self._no_proba = False
        try:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"could not start {command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

        info = self._request({"op": "info"}, rid=0)
        task = info.get("task")
        n_features = info.get("n_features")
        if task not in ("classification", "regression"):
            raise TransportError(f"handshake reported unknown task {task!r}")
        if not isinstance(n_features, int) or n_features < 1:
            raise TransportError(f"handshake reported bad n_features {n_features!r}")
        self.task = Task.parse(task)
        self.n_features = n_features

    # -- plumbing ----------------------------------------------------------

    def _pump(self):
        try:
            for line in self._proc.stdout:
                self._responses.put(line)
        finally:
            self._responses.put(None)

    def _request(self, payload: dict, rid: int | None = None) -> dict:
        with self._lock:
            if self._closed:
                raise TransportError("external model already closed")
            if self._eof:
                raise TransportError(self._exit_message())
            if rid is None:
                rid = self._next_id
                self._next_id += 1
            line = json.dumps({"id": rid, **payload}, separators=(",", ":")) + "\n"
            try:
                self._proc.stdin.write(line)
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                self._eof = True
                raise TransportError(self._exit_message()) from exc

            try:
                raw = self._responses.get(timeout=self._timeout)
            except queue.Empty:
                raise TransportError(
                    f"no response to request {rid} within {self._timeout}s"
                ) from None
            if raw is None:
                self._eof = True
                raise TransportError(self._exit_message())

            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise TransportError(
                    f"response is not valid JSON: {_preview(raw)!r}"
                ) from exc
            if not isinstance(obj, dict) or obj.get("id") != rid:
                raise TransportError(
                    f"response id does not match request {rid}: {_preview(raw)!r}"
                )
            if "error" in obj:
                raise ExternalModelError(str(obj["error"]))
            return obj

    def _exit_message(self) -> str:
        code = self._proc.poll()
        if code is None:
            return "external model closed its output stream"
        return f"external model exited with code {code}"

    # -- model surface -----------------------------------------------------

    def predict(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        obj = self._request({"op": "predict", "rows": rows.tolist()})
        values = obj.get("predictions")
        if not isinstance(values, list) or len(values) != rows.shape[0]:
            raise TransportError(
                f"expected {rows.shape[0]} predictions, got {values!r:.200}"
            )
        out = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise TransportError("predictions contain NaN or infinite entries")
        return out

    def predict_proba(self, rows: np.ndarray) -> np.ndarray | None:
        if self.task is not Task.CLASSIFICATION or self._no_proba:
            return None
        rows = np.asarray(rows, dtype=np.float64)
        try:
            obj = self._request({"op": "predict_proba", "rows": rows.tolist()})
        except ExternalModelError:
            # the model declined: remember and fall back to labels everywhere
            self._no_proba = True
            return None
        matrix = obj.get("probabilities")
        if not isinstance(matrix, list) or len(matrix) != rows.shape[0]:
            raise TransportError(
                f"expected {rows.shape[0]} probability rows in response"
            )
        return np.asarray(matrix, dtype=np.float64)

    def close(self):
        with self._lock:
            if self._closed:
                return
            self._closed = True
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def launch_external(command: str | list[str], expected_task: Task | None = None,
                    timeout: float = DEFAULT_TIMEOUT,
                    name: str = "external") -> ModelHandle:
    """Start the child process, run the handshake, wrap it as a model handle.

    Close the handle's `impl` when finished (context manager supported).
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    if not argv:
        raise ValidationError("external model command is empty")
    model = ExternalModel(argv, timeout=timeout)
    if expected_task is not None and model.task is not expected_task:
        model.close()
        raise ValidationError(
            f"external model reports task {model.task.value!r}, "
            f"config says {expected_task.value!r}"
        )
    return ModelHandle(kind=ModelKind.EXTERNAL_PROCESS, task=model.task,
                       name=name, n_features=model.n_features, impl=model)
