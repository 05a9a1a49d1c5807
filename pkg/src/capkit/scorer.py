"""Scorers for the decode module: an in-process table scorer and a client
for out-of-process scorers speaking the newline-delimited JSON protocol.

Wire protocol (stdio or TCP, one outstanding request per connection):
  server -> client handshake line:
      {"protocol": "capkit-scorer", "version": 1,
       "vocab_size": V, "has_repr": bool}
  client -> server request:   {"prefix": [token ids]}
  server -> client response:  {"logprobs": [...], "repr": [...]}
                              ("repr" only when has_repr)
  errors:                     {"error": "message"}

A scorer object exposes vocab_size, next_logprobs(prefix) and, when
representations are available, representation(prefix); scorers without
representations carry representation = None.
"""

from __future__ import annotations

import hashlib
import json
import socket
import subprocess
import sys

import numpy as np

from capkit.errors import DataError
from capkit.decode import ScorerProtocolError

PROTOCOL_NAME = "capkit-scorer"
PROTOCOL_VERSION = 1
NORMALIZATION_TOL = 1e-5


def _logsumexp(values: np.ndarray) -> float:
    m = values.max()
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.exp(values - m).sum()))


def _hash_unit_vector(prefix: tuple[int, ...], dim: int) -> np.ndarray:
    """Deterministic pseudo-random unit vector for prefixes missing from
    the representation table; stable across platforms."""
    digest = hashlib.blake2b(
        ",".join(map(str, prefix)).encode(), digest_size=8
    ).digest()
    seed = int.from_bytes(digest, "little")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    vec = rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


class TableScorer:
    """Exact-match lookup over full prefixes with a uniform fallback."""

    def __init__(self, vocab_size: int, table=None, reprs=None):
        if vocab_size < 1:
            raise DataError("vocab_size must be >= 1")
        self.vocab_size = vocab_size
        self.table: dict[tuple[int, ...], np.ndarray] = {}
        for prefix, logprobs in (table or {}).items():
            self.table[tuple(prefix)] = self._check_vector(prefix, logprobs)
        self._uniform = np.full(vocab_size, -np.log(vocab_size))
        self.reprs: dict[tuple[int, ...], np.ndarray] = {}
        self.repr_dim = 0
        if reprs:
            for prefix, rep in reprs.items():
                rep = np.asarray(rep, dtype=np.float64)
                if rep.ndim != 1 or len(rep) == 0:
                    raise DataError(f"repr for {prefix} must be a non-empty vector")
                norm = np.linalg.norm(rep)
                if norm == 0:
                    raise DataError(f"repr for {prefix} must be nonzero")
                if self.repr_dim and len(rep) != self.repr_dim:
                    raise DataError("representation vectors must share one dimension")
                self.repr_dim = len(rep)
                self.reprs[tuple(prefix)] = rep / norm
        else:
            self.representation = None  # no representation capability

    def _check_vector(self, prefix, logprobs) -> np.ndarray:
        vec = np.asarray(logprobs, dtype=np.float64)
        if vec.shape != (self.vocab_size,):
            raise DataError(
                f"entry {tuple(prefix)}: expected {self.vocab_size} logprobs, "
                f"got shape {vec.shape}"
            )
        lse = _logsumexp(vec)
        if not np.isfinite(lse) or abs(lse) > NORMALIZATION_TOL:
            raise DataError(f"entry {tuple(prefix)}: logprobs do not normalize")
        return vec

    def next_logprobs(self, prefix) -> np.ndarray:
        return self.table.get(tuple(prefix), self._uniform)

    def representation(self, prefix) -> np.ndarray:
        rep = self.reprs.get(tuple(prefix))
        if rep is None:
            rep = _hash_unit_vector(tuple(prefix), self.repr_dim)
        return rep

    @property
    def has_repr(self) -> bool:
        return bool(self.reprs)


def load_table(path) -> TableScorer:
    """Load the JSON table format:
    {"vocab_size": V, "entries": [{"prefix": [...], "logprobs": [...],
    "repr": [...]?}, ...]}"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "vocab_size" not in doc:
        raise DataError(f"{path}: expected an object with vocab_size")
    table = {}
    reprs = {}
    for i, entry in enumerate(doc.get("entries", [])):
        try:
            prefix = tuple(int(t) for t in entry["prefix"])
            logprobs = entry["logprobs"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: entry {i} malformed: {exc}") from None
        if prefix in table:
            raise DataError(f"{path}: duplicate prefix {prefix}")
        table[prefix] = logprobs
        if "repr" in entry:
            reprs[prefix] = entry["repr"]
    return TableScorer(int(doc["vocab_size"]), table, reprs)


def dump_table(path, scorer: TableScorer) -> None:
    entries = []
    for prefix, logprobs in scorer.table.items():
        entry = {"prefix": list(prefix), "logprobs": list(map(float, logprobs))}
        if prefix in scorer.reprs:
            entry["repr"] = list(map(float, scorer.reprs[prefix]))
        entries.append(entry)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"vocab_size": scorer.vocab_size, "entries": entries}, fh)


# ---------------------------------------------------------------------------
# wire protocol: server side

def serve_connection(scorer, rfile, wfile) -> None:
    """Answer requests on one connection until EOF. Stateless per request."""
    handshake = {
        "protocol": PROTOCOL_NAME,
        "version": PROTOCOL_VERSION,
        "vocab_size": scorer.vocab_size,
        "has_repr": getattr(scorer, "representation", None) is not None,
    }
    wfile.write(json.dumps(handshake) + "\n")
    wfile.flush()
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            prefix = tuple(int(t) for t in request["prefix"])
            response = {
                "logprobs": [float(v) for v in scorer.next_logprobs(prefix)]
            }
            if handshake["has_repr"]:
                response["repr"] = [float(v) for v in scorer.representation(prefix)]
        except Exception as exc:  # noqa: BLE001 - reported to the peer
            response = {"error": f"{type(exc).__name__}: {exc}"}
        wfile.write(json.dumps(response) + "\n")
        wfile.flush()


def serve_stdio(scorer) -> None:
    serve_connection(scorer, sys.stdin, sys.stdout)


def serve_tcp(scorer, host: str, port: int, max_connections: int | None = None) -> None:
    """Serve sequential connections, one request at a time."""
    served = 0
    with socket.create_server((host, port)) as server:
        while max_connections is None or served < max_connections:
            conn, _ = server.accept()
            with conn:
                rfile = conn.makefile("r", encoding="utf-8")
                wfile = conn.makefile("w", encoding="utf-8")
                serve_connection(scorer, rfile, wfile)
            served += 1


# ---------------------------------------------------------------------------
# wire protocol: client side

class RemoteScorer:
    """Scorer backed by a wire-protocol peer. Responses are cached per
    prefix so next_logprobs and representation for the same prefix cost
    one round trip."""

    def __init__(self, rfile, wfile, closer=None):
        self._rfile = rfile
        self._wfile = wfile
        self._closer = closer
        self._cache: dict[tuple[int, ...], dict] = {}
        line = self._rfile.readline()
        if not line:
            raise ScorerProtocolError("no handshake from scorer server")
        handshake = json.loads(line)
        if handshake.get("protocol") != PROTOCOL_NAME:
            raise ScorerProtocolError(f"unexpected protocol: {handshake}")
        if handshake.get("version") != PROTOCOL_VERSION:
            raise ScorerProtocolError(
                f"protocol version mismatch: {handshake.get('version')}"
            )
        self.vocab_size = int(handshake["vocab_size"])
        self.has_repr = bool(handshake.get("has_repr", False))
        if not self.has_repr:
            self.representation = None

    @classmethod
    def spawn_stdio(cls, cmd: list[str]) -> "RemoteScorer":
        proc = subprocess.Popen(
            cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
        )

        def closer():
            proc.stdin.close()
            proc.wait(timeout=10)

        return cls(proc.stdout, proc.stdin, closer)

    @classmethod
    def connect_tcp(cls, host: str, port: int) -> "RemoteScorer":
        sock = socket.create_connection((host, port))
        rfile = sock.makefile("r", encoding="utf-8")
        wfile = sock.makefile("w", encoding="utf-8")
        return cls(rfile, wfile, sock.close)

    def _query(self, prefix: tuple[int, ...]) -> dict:
        cached = self._cache.get(prefix)
        if cached is not None:
            return cached
        self._wfile.write(json.dumps({"prefix": list(prefix)}) + "\n")
        self._wfile.flush()
        line = self._rfile.readline()
        if not line:
            raise ScorerProtocolError("scorer server closed the connection")
        response = json.loads(line)
        if "error" in response:
            raise ScorerProtocolError(f"scorer server error: {response['error']}")
        if len(self._cache) > 100_000:
            self._cache.clear()
        self._cache[prefix] = response
        return response

    def next_logprobs(self, prefix) -> np.ndarray:
        response = self._query(tuple(prefix))
        return np.asarray(response["logprobs"], dtype=np.float64)

    def representation(self, prefix) -> np.ndarray:
        response = self._query(tuple(prefix))
        if "repr" not in response:
            raise ScorerProtocolError("server response carries no representation")
        return np.asarray(response["repr"], dtype=np.float64)

    def close(self) -> None:
        if self._closer is not None:
            self._closer()
            self._closer = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
