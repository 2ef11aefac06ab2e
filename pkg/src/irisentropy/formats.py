"""ICB1 template files and score CSV files."""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .codes import CodeLayout, IrisCode, ScoreRecord, ScoreTable
from .errors import FormatError

MAGIC = b"ICBIN\x00\x31\x00"
_HEADER = struct.Struct("<IIII")
SCORE_HEADER = ["id_a", "id_b", "hd", "valid_bits", "rotation_offset", "valid"]


def encode_templates(codes: Iterable[IrisCode], layout: CodeLayout | None = None) -> bytes:
    codes = list(codes)
    if layout is None:
        if not codes:
            raise ValueError("layout required for an empty template file")
        layout = codes[0].layout
    parts = [MAGIC, _HEADER.pack(layout.angular_resolution, layout.radial_resolution,
                                 layout.phase_bits, len(codes))]
    nb = layout.n_bytes
    for c in codes:
        if c.layout != layout:
            raise ValueError(f"code {c.id!r} does not match the file layout")
        ident = c.id.encode("utf-8")
        if len(ident) > 0xFFFF:
            raise ValueError(f"id too long: {c.id[:40]!r}...")
        parts.append(struct.pack("<H", len(ident)))
        parts.append(ident)
        parts.append(c.data.astype("<u8").tobytes()[:nb])
        parts.append(c.mask.astype("<u8").tobytes()[:nb])
    return b"".join(parts)


def decode_templates(buf: bytes, path=None) -> tuple[CodeLayout, list[IrisCode]]:
    if len(buf) < len(MAGIC) + _HEADER.size:
        raise FormatError("truncated header", offset=len(buf), path=path)
    if buf[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic, not an ICB1 template file", offset=0, path=path)
    pos = len(MAGIC)
    ang, rad, phase, count = _HEADER.unpack_from(buf, pos)
    try:
        layout = CodeLayout(ang, rad, phase)
    except ValueError as exc:
        raise FormatError(f"invalid layout: {exc}", offset=pos, path=path) from None
    pos += _HEADER.size
    nb = layout.n_bytes
    pad = layout.n_words * 8 - nb
    codes = []
    for index in range(count):
        if pos + 2 > len(buf):
            raise FormatError(f"truncated id length of code {index}", offset=pos, path=path)
        (id_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        end = pos + id_len + 2 * nb
        if end > len(buf):
            raise FormatError(f"truncated record for code {index}", offset=pos - 2, path=path)
        try:
            ident = buf[pos: pos + id_len].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"id of code {index} is not valid UTF-8", offset=pos, path=path) from None
        pos += id_len
        words = []
        for _ in range(2):
            raw = buf[pos: pos + nb] + b"\x00" * pad
            words.append(np.frombuffer(raw, dtype="<u8").astype(np.uint64))
            pos += nb
        try:
            codes.append(IrisCode(ident, layout, words[0], words[1]))
        except ValueError as exc:
            raise FormatError(f"code {index} ({ident!r}): {exc}", offset=pos - 2 * nb, path=path) from None
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after {count} codes", offset=pos, path=path)
    return layout, codes


def write_templates(path, codes: Iterable[IrisCode], layout: CodeLayout | None = None):
    Path(path).write_bytes(encode_templates(codes, layout))


def read_templates(path) -> tuple[CodeLayout, list[IrisCode]]:
    return decode_templates(Path(path).read_bytes(), path=path)


def _fmt(x: float) -> str:
    # repr is the shortest round-trip form: exact, so always >= 9 significant digits worth.
    return repr(float(x))


def write_scores(path, scores: ScoreTable | Iterable[ScoreRecord]):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SCORE_HEADER) + "\n")
        if isinstance(scores, ScoreTable):
            ids = scores.ids
            rows = zip(scores.index_a.tolist(), scores.index_b.tolist(), scores.hd.tolist(),
                       scores.valid_bits.tolist(), scores.rotation_offset.tolist(),
                       scores.valid.tolist())
            fh.writelines(
                f"{ids[a]},{ids[b]},{_fmt(h)},{v},{o},{int(ok)}\n"
                for a, b, h, v, o, ok in rows)
        else:
            w = csv.writer(fh, lineterminator="\n")
            for r in scores:
                w.writerow([r.id_a, r.id_b, _fmt(r.hd), r.valid_bits, r.rotation_offset, int(r.valid)])


class ScoreFile:
    """Parsed score CSV held column-wise."""

    def __init__(self, id_a, id_b, hd, valid_bits, rotation_offset, valid):
        self.id_a = id_a
        self.id_b = id_b
        self.hd = np.asarray(hd, dtype=float)
        self.valid_bits = np.asarray(valid_bits, dtype=np.int64)
        self.rotation_offset = np.asarray(rotation_offset, dtype=np.int64)
        self.valid = np.asarray(valid, dtype=bool)

    def __len__(self):
        return len(self.hd)

    def scores(self) -> np.ndarray:
        return self.hd[self.valid]

    def records(self) -> list[ScoreRecord]:
        return [ScoreRecord(a, b, float(h), int(v), int(o), bool(ok)) for a, b, h, v, o, ok in
                zip(self.id_a, self.id_b, self.hd, self.valid_bits, self.rotation_offset, self.valid)]


def read_scores(path) -> ScoreFile:
    cols: list[list] = [[] for _ in SCORE_HEADER]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORE_HEADER:
            raise FormatError(f"expected header {','.join(SCORE_HEADER)}, got {header}", offset=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SCORE_HEADER):
                raise FormatError(f"expected {len(SCORE_HEADER)} fields, got {len(row)}",
                                  offset=f"line {lineno}", path=path)
            for c, v in zip(cols, row):
                c.append(v)
    try:
        return ScoreFile(cols[0], cols[1], np.array(cols[2], dtype=float),
                         np.array(cols[3], dtype=np.int64), np.array(cols[4], dtype=np.int64),
                         np.array(cols[5], dtype=np.int64) != 0)
    except ValueError as exc:
        raise FormatError(f"non-numeric field: {exc}", path=path) from None
