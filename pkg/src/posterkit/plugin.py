"""Subprocess scorer plug-in speaking newline-delimited JSON on stdio.

Protocol, one JSON object per line:

    request  {"op": "logprobs", "text": ..., "context": ...}
    response {"tokens": [[token_id, logprob], ...]}

    request  {"op": "count", "text": ...}
    response {"count": n}

The child process is spawned lazily on first use and kept alive for the
scorer's lifetime. Calls are serialized with a lock because the wire is
a single stdio pair; ``concurrent_safe`` is therefore False unless the
caller opts in for a plug-in that multiplexes internally.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading

from .scoring import Scorer, ScorerFailure


class PluginScorer(Scorer):
    def __init__(self, command: str | list[str], concurrent_safe: bool = False):
        self._argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self._argv:
            raise ValueError("plugin command must be non-empty")
        self.concurrent_safe = concurrent_safe
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self._argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise ScorerFailure(f"cannot start scorer plug-in {self._argv[0]!r}: {exc}") from exc
        return self._proc

    def _roundtrip(self, request: dict) -> dict:
        with self._lock:
            proc = self._ensure_process()
            try:
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise ScorerFailure(f"scorer plug-in I/O failed: {exc}") from exc
        if not line:
            raise ScorerFailure("scorer plug-in closed its stdout")
        try:
            response = json.loads(line)
        except ValueError as exc:
            raise ScorerFailure(f"scorer plug-in sent invalid JSON: {line!r}") from exc
        if "error" in response:
            raise ScorerFailure(f"scorer plug-in error: {response['error']}")
        return response

    def token_logprobs(self, text: str, context: str = "") -> list[tuple[int, float]]:
        response = self._roundtrip({"op": "logprobs", "text": text, "context": context})
        tokens = response.get("tokens")
        if not isinstance(tokens, list):
            raise ScorerFailure("scorer plug-in response missing 'tokens' list")
        out = []
        for pair in tokens:
            try:
                token_id, logprob = pair
                logprob = float(logprob)
            except (TypeError, ValueError) as exc:
                raise ScorerFailure(f"malformed token entry {pair!r}") from exc
            if logprob > 0.0:
                raise ScorerFailure(f"plug-in returned log-probability > 0: {logprob}")
            out.append((int(token_id), logprob))
        return out

    def count_tokens(self, text: str) -> int:
        response = self._roundtrip({"op": "count", "text": text})
        count = response.get("count")
        if not isinstance(count, int) or count < 0:
            raise ScorerFailure(f"scorer plug-in sent invalid count: {count!r}")
        return count

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
        self._proc = None

    def __enter__(self) -> "PluginScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
