"""Tamper-evident audit chain over canonically serialized JSON payloads.

Each entry commits to its payload and to the digest of the previous entry,
so flipping any byte anywhere breaks every digest from that point on.
Serialization is one JSON object per line with a fixed field order and
compact separators; digests are lowercase hex SHA-256.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from .types import canonical_json

GENESIS_PREV = "0" * 64  # prev_hash of the first entry

# Field order is part of the byte format; never reorder.
_FIELDS = ("seq", "prev_hash", "payload_hash", "payload")


class TamperError(Exception):
    """The chain failed verification.

    ``index`` is the sequence number of the first entry whose linkage or
    payload hash no longer checks out.
    """

    def __init__(self, index: int, reason: str) -> None:
        super().__init__(f"audit chain broken at entry {index}: {reason}")
        self.index = index


def _sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    prev_hash: str
    payload_hash: str
    payload: str  # canonical JSON text

    def to_line(self) -> str:
        obj = {name: getattr(self, name) for name in _FIELDS}
        # payload is embedded as a JSON string; field order fixed by _FIELDS
        return json.dumps(obj, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return _sha256_hex(self.to_line().encode("utf-8"))

    @classmethod
    def from_line(cls, line: str) -> "AuditEntry":
        obj = json.loads(line)
        return cls(
            seq=int(obj["seq"]),
            prev_hash=obj["prev_hash"],
            payload_hash=obj["payload_hash"],
            payload=obj["payload"],
        )


class AuditChain:
    """Append-only log with hash linkage.

    ``append`` is O(1) and trusts its own in-memory tail; use
    :func:`audit_append` when the chain may have been touched by anything
    else (it re-verifies from genesis first).
    """

    def __init__(self, entries: Iterable[AuditEntry] = ()) -> None:
        self.entries: list[AuditEntry] = list(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[AuditEntry]:
        return iter(self.entries)

    @property
    def head(self) -> str:
        """Digest of the newest entry, or the genesis sentinel when empty."""
        return self.entries[-1].digest if self.entries else GENESIS_PREV

    def append(self, payload: Any) -> AuditEntry:
        """Serialize payload canonically and link it to the current head."""
        text = canonical_json(payload)
        entry = AuditEntry(
            seq=len(self.entries),
            prev_hash=self.head,
            payload_hash=_sha256_hex(text.encode("utf-8")),
            payload=text,
        )
        self.entries.append(entry)
        return entry

    def verify(self) -> None:
        """Recompute every linkage; raise TamperError at the first break."""
        prev = GENESIS_PREV
        for i, entry in enumerate(self.entries):
            if entry.seq != i:
                raise TamperError(i, f"sequence {entry.seq} != {i}")
            if entry.prev_hash != prev:
                raise TamperError(i, "previous-entry digest mismatch")
            if _sha256_hex(entry.payload.encode("utf-8")) != entry.payload_hash:
                raise TamperError(i, "payload digest mismatch")
            prev = entry.digest

    def to_lines(self) -> list[str]:
        return [entry.to_line() for entry in self.entries]

    def dump(self) -> str:
        return "".join(line + "\n" for line in self.to_lines())

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "AuditChain":
        return cls(
            AuditEntry.from_line(line)
            for line in lines
            if line.strip()
        )

    @classmethod
    def loads(cls, text: str) -> "AuditChain":
        return cls.from_lines(text.splitlines())


def audit_append(chain: AuditChain, payload: Any) -> AuditEntry:
    """Verify the whole chain, then append; the untrusted-path entry point."""
    chain.verify()
    return chain.append(payload)
