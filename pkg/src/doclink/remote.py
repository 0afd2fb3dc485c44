"""Client side of the external-scorer wire protocol.

Transport is UTF-8 line-delimited JSON, either over the standard streams of a
spawned child process or over a local TCP socket. One adapter process serves
one engine session set; requests within a session (one document) are strictly
sequential, but sessions may interleave, so every response is matched back by
(session_id, request_id).

Message schema (versioned by the handshake):

    engine -> adapter  {"type": "hello", "protocol_version": 1,
                        "tokenizer_fingerprint": str, "vocab_size": int}
    adapter -> engine  {"type": "hello_ack", "protocol_version": 1,
                        "tokenizer_fingerprint": str, "vocab_size": int}
                       | {"type": "error", "message": str}
    engine -> adapter  {"type": "score", "session_id": str, "request_id": int,
                        "prompt"?: str, "prompt_id": str,
                        "prefix": [int], "allowed": [int]}
    adapter -> engine  {"type": "scores", "session_id": str, "request_id": int,
                        "scores": [float]}
                       | {"type": "error", "session_id"?, "request_id"?,
                          "message": str}

``prompt`` may be omitted after the first request carrying a given
``prompt_id`` (adapter-side caching); correctness never depends on the cache
because the engine resends the text whenever the prompt changes.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import socket
import subprocess
import threading
import time
from typing import Callable, Sequence

from .decoding import DecodeError

PROTOCOL_VERSION = 1


class AdapterProtocolError(RuntimeError):
    """Malformed traffic or transport failure on the adapter channel."""


class AdapterHandshakeError(AdapterProtocolError):
    """Adapter refused the session (version or fingerprint mismatch)."""


class AdapterScoreError(DecodeError):
    """Adapter answered a score request with an error; the mention fails."""


class _StdioTransport:
    def __init__(self, command: Sequence[str]):
        self.proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )

    def send(self, line: str) -> None:
        if self.proc.stdin is None or self.proc.poll() is not None:
            raise AdapterProtocolError("adapter process is not running")
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def recv(self) -> str:
        if self.proc.stdout is None:
            raise AdapterProtocolError("adapter process has no stdout")
        line = self.proc.stdout.readline()
        if not line:
            raise AdapterProtocolError("adapter closed the stream")
        return line.rstrip("\n")

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
            self.proc.wait(timeout=10)


class _SocketTransport:
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.writer = self.sock.makefile("w", encoding="utf-8")

    def send(self, line: str) -> None:
        self.writer.write(line + "\n")
        self.writer.flush()

    def recv(self) -> str:
        line = self.reader.readline()
        if not line:
            raise AdapterProtocolError("adapter closed the connection")
        return line.rstrip("\n")

    def close(self) -> None:
        self.reader.close()
        self.writer.close()
        self.sock.close()


class AdapterClient:
    """Handshakes with one adapter and relays score requests.

    A single lock serializes request/response pairs, which keeps matching
    trivial and is safe under cross-document threading (the adapter is
    stateless between requests apart from the optional prompt cache).
    """

    def __init__(
        self,
        transport,
        tokenizer_fingerprint: str,
        vocab_size: int,
        on_latency: Callable[[str, int, float], None] | None = None,
    ):
        self._transport = transport
        self._lock = threading.Lock()
        self._request_id = 0
        self._prompt_cache: dict[str, str] = {}
        self._on_latency = on_latency
        self.request_count = 0
        self.total_latency = 0.0
        self._handshake(tokenizer_fingerprint, vocab_size)

    @classmethod
    def spawn(
        cls, command: str | Sequence[str], tokenizer_fingerprint: str, vocab_size: int
    ) -> "AdapterClient":
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        return cls(_StdioTransport(argv), tokenizer_fingerprint, vocab_size)

    @classmethod
    def connect(
        cls, host: str, port: int, tokenizer_fingerprint: str, vocab_size: int
    ) -> "AdapterClient":
        return cls(_SocketTransport(host, port), tokenizer_fingerprint, vocab_size)

    def _handshake(self, fingerprint: str, vocab_size: int) -> None:
        self._transport.send(
            json.dumps(
                {
                    "type": "hello",
                    "protocol_version": PROTOCOL_VERSION,
                    "tokenizer_fingerprint": fingerprint,
                    "vocab_size": vocab_size,
                },
                ensure_ascii=False,
            )
        )
        reply = self._read_message()
        if reply.get("type") == "error":
            raise AdapterHandshakeError(
                f"adapter refused session: {reply.get('message', 'no message')}"
            )
        if reply.get("type") != "hello_ack":
            raise AdapterProtocolError(f"unexpected handshake reply: {reply}")
        if reply.get("protocol_version") != PROTOCOL_VERSION:
            raise AdapterHandshakeError(
                f"adapter speaks protocol version {reply.get('protocol_version')}, "
                f"engine speaks {PROTOCOL_VERSION}"
            )
        if reply.get("tokenizer_fingerprint") != fingerprint:
            raise AdapterHandshakeError(
                "adapter tokenizer fingerprint does not match the trie set"
            )

    def _read_message(self) -> dict:
        line = self._transport.recv()
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterProtocolError(f"invalid JSON from adapter: {line!r}") from exc
        if not isinstance(msg, dict):
            raise AdapterProtocolError(f"non-object message from adapter: {line!r}")
        return msg

    def score(
        self, session_id: str, prompt: str, prefix: Sequence[int], allowed: Sequence[int]
    ) -> list[float]:
        prompt_id = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:32]
        started = time.perf_counter()
        with self._lock:
            self._request_id += 1
            request = {
                "type": "score",
                "session_id": session_id,
                "request_id": self._request_id,
                "prompt_id": prompt_id,
                "prefix": list(prefix),
                "allowed": list(allowed),
            }
            if self._prompt_cache.get(session_id) != prompt_id:
                request["prompt"] = prompt
                self._prompt_cache[session_id] = prompt_id
            self._transport.send(json.dumps(request, ensure_ascii=False))
            reply = self._read_message()
            if reply.get("type") == "error":
                raise AdapterScoreError(
                    f"adapter error: {reply.get('message', 'no message')}"
                )
            if reply.get("type") != "scores":
                raise AdapterProtocolError(f"unexpected reply: {reply}")
            if (
                reply.get("session_id") != session_id
                or reply.get("request_id") != request["request_id"]
            ):
                raise AdapterProtocolError(
                    "response does not match the outstanding request"
                )
            scores = reply.get("scores")
            if not isinstance(scores, list) or len(scores) != len(allowed):
                raise AdapterProtocolError(
                    f"expected {len(allowed)} scores, got {scores!r}"
                )
            elapsed = time.perf_counter() - started
            self.request_count += 1
            self.total_latency += elapsed
            if self._on_latency is not None:
                self._on_latency(session_id, self._request_id, elapsed)
            return [float(s) for s in scores]

    def close(self) -> None:
        self._transport.close()


class RemoteScorer:
    """TokenScorer bound to one (client, session, prompt)."""

    shareable = False

    def __init__(self, client: AdapterClient, session_id: str, prompt: str):
        self.client = client
        self.session_id = session_id
        self.prompt = prompt

    def score_step(self, prompt, prefix, allowed):
        return self.client.score(self.session_id, self.prompt, prefix, allowed)


def remote_factory(client: AdapterClient):
    """Scorer factory wiring each mention's prompt to an adapter session
    keyed by document id."""

    def factory(step) -> RemoteScorer:
        return RemoteScorer(client, session_id=step.doc.doc_id, prompt=step.prompt)

    return factory
