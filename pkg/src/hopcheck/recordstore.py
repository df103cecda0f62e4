"""Append-only record log with per-record framing.

Each record is framed as <u32 payload length><u32 crc32><json payload>.
Reload after a crash keeps the longest valid prefix: a torn or corrupt
final frame is detected and dropped.
"""

import json
import logging
import os
import struct
import threading
import zlib
from pathlib import Path

log = logging.getLogger(__name__)

_HEADER = struct.Struct("<II")


class RecordStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        payload = json.dumps(record, ensure_ascii=False, sort_keys=True).encode("utf-8")
        frame = _HEADER.pack(len(payload), zlib.crc32(payload)) + payload
        with self._lock:
            with open(self.path, "ab") as fh:
                fh.write(frame)
                fh.flush()
                os.fsync(fh.fileno())

    def load(self) -> list[dict]:
        """All complete records; an invalid tail is dropped with a warning."""
        if not self.path.exists():
            return []
        data = self.path.read_bytes()
        records = []
        pos = 0
        while pos + _HEADER.size <= len(data):
            length, crc = _HEADER.unpack_from(data, pos)
            end = pos + _HEADER.size + length
            if end > len(data):
                break
            payload = data[pos + _HEADER.size:end]
            if zlib.crc32(payload) != crc:
                break
            try:
                records.append(json.loads(payload.decode("utf-8")))
            except (json.JSONDecodeError, UnicodeDecodeError):
                break
            pos = end
        if pos != len(data):
            log.warning("%s: dropped %d trailing bytes (torn or corrupt record)",
                        self.path, len(data) - pos)
        return records
