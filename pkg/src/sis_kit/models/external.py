"""Subprocess model bridge speaking newline-delimited JSON.

Protocol (one JSON object per line, UTF-8):

    parent -> child   {"hello": 1}
    child  -> parent  {"ready": 1}
    parent -> child   {"id": <int>, "inputs": [[[f64, ...], ...], ...]}
    child  -> parent  {"id": <int>, "outputs": [f64, ...]}

``inputs`` is batch x features x feature-dimension. Responses may arrive
in any order; they are matched by id. Any line that does not parse as the
expected message aborts the run.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from pathlib import Path

import numpy as np

from .base import Evaluator, EvaluatorError, feature_offsets

PROTOCOL_VERSION = 1


class ExternalModelError(EvaluatorError):
    pass


class ExternalEvaluator(Evaluator):
    thread_safe = False

    def __init__(self, command, max_in_flight: int = 1, max_batch: int | None = None, cwd=None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.max_in_flight = max(1, int(max_in_flight))
        # rows per request; requests are pipelined up to max_in_flight
        self.request_size = None if max_batch is None else max(1, int(max_batch))
        self.cwd = cwd
        self._proc = None
        self._next_id = 0
        self._lock = threading.Lock()

    @classmethod
    def from_parameters(cls, params: dict, base_dir: Path | None = None) -> "ExternalEvaluator":
        version = params.get("protocol_version", PROTOCOL_VERSION)
        if version != PROTOCOL_VERSION:
            raise ValueError(f"unsupported external protocol version {version}")
        return cls(
            params["command"],
            params.get("max_in_flight", 1),
            params.get("max_batch"),
            cwd=params.get("cwd", None if base_dir is None else str(base_dir)),
        )

    def _start(self):
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
            cwd=self.cwd,
        )
        self._send({"hello": PROTOCOL_VERSION})
        msg, line = self._recv()
        if msg != {"ready": PROTOCOL_VERSION}:
            raise ExternalModelError(f"bad handshake reply: {line!r}")

    def _send(self, obj):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ExternalModelError(f"model process closed its input: {e}") from e

    def _recv(self):
        line = self._proc.stdout.readline()
        if not line:
            code = self._proc.poll()
            raise ExternalModelError(f"model process ended the stream (exit code {code})")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            raise ExternalModelError(f"malformed line from model: {line.rstrip()!r}") from None
        if not isinstance(msg, dict):
            raise ExternalModelError(f"malformed line from model: {line.rstrip()!r}")
        return msg, line.rstrip()

    def score(self, X, dims):
        with self._lock:
            if self._proc is None:
                self._start()
            off = feature_offsets(dims)
            rows = [[row[off[i] : off[i + 1]].tolist() for i in range(len(dims))] for row in X]
            step = self.request_size or len(rows)
            ids = []
            pending = {}
            results = {}
            cursor = 0
            while cursor < len(rows) or pending:
                while cursor < len(rows) and len(pending) < self.max_in_flight:
                    rid = self._next_id
                    self._next_id += 1
                    chunk = rows[cursor : cursor + step]
                    self._send({"id": rid, "inputs": chunk})
                    pending[rid] = len(chunk)
                    ids.append(rid)
                    cursor += len(chunk)
                msg, line = self._recv()
                rid = msg.get("id")
                outs = msg.get("outputs")
                if rid not in pending or not isinstance(outs, list) or len(outs) != pending[rid]:
                    raise ExternalModelError(f"malformed line from model: {line!r}")
                try:
                    results[rid] = [float(v) for v in outs]
                except (TypeError, ValueError):
                    raise ExternalModelError(f"malformed line from model: {line!r}") from None
                del pending[rid]
            return np.array([v for rid in ids for v in results[rid]], dtype=np.float64)

    def close(self):
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
