"""Objective oracles: in-process callables and the subprocess JSON-lines protocol.

External protocol (one JSON document per line, UTF-8):

* optimizer -> child, once at startup: ``{"k": K, "q": Q}``
* optimizer -> child: ``{"id": <int>, "x": [<K floats>]}``
* child -> optimizer: ``{"id": <int>, "phi": [<Q floats>]}``

Responses may arrive in any order; they are matched by ``id``. Floats are
written with 17 significant digits.
"""

from __future__ import annotations

import json
import logging
import queue
import shlex
import subprocess
import threading
import time
from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np

from .dominance import Bounds

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 300.0


class EvaluationError(RuntimeError):
    """A single evaluation failed; the optimizer may carry on."""


class EvaluatorCrashed(RuntimeError):
    """The evaluator is unusable; the run must stop."""


class Evaluator(ABC):
    """Deterministic map from a design vector to an objective vector."""

    bounds: Bounds
    n_obj: int

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @abstractmethod
    def evaluate(self, x: np.ndarray) -> np.ndarray: ...

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(x) for x in X], dtype=float)

    def _checked(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (self.n_obj,):
            raise EvaluationError(f"evaluator returned {phi.shape}, expected ({self.n_obj},)")
        if not np.all(np.isfinite(phi)):
            raise EvaluationError("evaluator returned non-finite objectives")
        return phi

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class FunctionEvaluator(Evaluator):
    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], bounds: Bounds, n_obj: int, name: str = ""):
        self.fn = fn
        self.bounds = bounds
        self.n_obj = n_obj
        self.name = name or getattr(fn, "__name__", "function")

    def evaluate(self, x):
        x = self.bounds.check(x)
        return self._checked(self.fn(x))


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def encode_request(idx: int, x: Sequence[float]) -> str:
    return '{"id":%d,"x":[%s]}' % (idx, ",".join(_fmt(v) for v in x))


def encode_response(idx: int, phi: Sequence[float]) -> str:
    return '{"id":%d,"phi":[%s]}' % (idx, ",".join(_fmt(v) for v in phi))


class ExternalEvaluator(Evaluator):
    """Evaluator backed by a child process speaking newline-delimited JSON."""

    def __init__(self, command: str | Sequence[str], bounds: Bounds, n_obj: int, timeout: float = DEFAULT_TIMEOUT):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.bounds = bounds
        self.n_obj = n_obj
        self.timeout = timeout
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()
        self._ready: dict[int, object] = {}
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._send(json.dumps({"k": bounds.dim, "q": n_obj}))

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, line: str) -> None:
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise EvaluatorCrashed(f"evaluator process is gone: {exc}") from exc

    def _submit(self, x) -> int:
        x = self.bounds.check(x)
        idx = self._next_id
        self._next_id += 1
        self._send(encode_request(idx, x))
        return idx

    def _parse(self, line: str):
        try:
            msg = json.loads(line)
            idx = msg["id"]
            if not isinstance(idx, int):
                raise TypeError("id must be an integer")
        except (ValueError, KeyError, TypeError) as exc:
            raise EvaluationError(f"malformed evaluator response {line.strip()!r}: {exc}") from exc
        try:
            return idx, self._checked(msg["phi"])
        except (KeyError, TypeError, ValueError, EvaluationError) as exc:
            return idx, EvaluationError(f"bad objectives for id {idx}: {exc}")

    def _collect(self, ids: Sequence[int]) -> dict[int, object]:
        """Wait for the given ids; each maps to an array or an EvaluationError."""
        wanted = set(ids)
        deadline = time.monotonic() + self.timeout
        while not wanted.issubset(self._ready):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                break
            if line is None:
                code = self._proc.poll()
                raise EvaluatorCrashed(f"evaluator process exited (status {code})")
            if not line.strip():
                continue
            try:
                idx, result = self._parse(line)
            except EvaluationError as exc:
                # unattributable garbage fails every outstanding request
                for i in wanted - set(self._ready):
                    self._ready[i] = exc
                break
            if idx in wanted:
                self._ready[idx] = result
            else:
                log.warning("dropping response with unexpected id %s", idx)
        out = {}
        for i in ids:
            out[i] = self._ready.pop(i, None)
            if out[i] is None:
                out[i] = EvaluationError(f"evaluation {i} timed out after {self.timeout} s")
        return out

    def evaluate(self, x):
        idx = self._submit(x)
        result = self._collect([idx])[idx]
        if isinstance(result, Exception):
            raise result
        return result

    def evaluate_batch(self, X):
        """Pipelined evaluation: every request is sent before any reply is read."""
        ids = [self._submit(x) for x in X]
        results = self._collect(ids)
        rows = []
        for i in ids:
            if isinstance(results[i], Exception):
                raise results[i]
            rows.append(results[i])
        return np.array(rows, dtype=float)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
