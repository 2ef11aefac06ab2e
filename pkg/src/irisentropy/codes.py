"""Binary iris templates, masked Hamming distance and the all-pairs engine.

Templates are stored as little-endian packed ``uint64`` words in
angular-major order: all ``radial_resolution * phase_bits`` bits of angular
position 0 come first, then position 1, and so on. Bit ``i`` of a template
lives in word ``i // 64`` at bit position ``i % 64``; padding bits past
``total_bits`` are always zero in both data and mask.

A rotation offset ``s`` reported by :func:`best_match` means that ``a`` was
compared against ``rotate(b, s)``.
"""

from __future__ import annotations

import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InsufficientOverlap, LayoutMismatch

DEFAULT_ROTATIONS = 7
MIN_OVERLAP = 512


@dataclass(frozen=True)
class CodeLayout:
    """Angular x radial x phase grid of a template."""

    angular_resolution: int = 128
    radial_resolution: int = 8
    phase_bits: int = 2

    def __post_init__(self):
        for name in ("angular_resolution", "radial_resolution", "phase_bits"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.angular_resolution < 2:
            raise ValueError("angular_resolution must be at least 2")

    @property
    def total_bits(self) -> int:
        return self.angular_resolution * self.radial_resolution * self.phase_bits

    @property
    def bits_per_step(self) -> int:
        """Bits moved by one angular rotation step."""
        return self.radial_resolution * self.phase_bits

    @property
    def n_words(self) -> int:
        return -(-self.total_bits // 64)

    @property
    def n_bytes(self) -> int:
        return -(-self.total_bits // 8)

    def default_min_overlap(self) -> int:
        # 512 bits on the default layout; scaled to 25% for smaller toy layouts.
        return min(MIN_OVERLAP, self.total_bits // 4)


def pack_bits(bits, layout: CodeLayout) -> np.ndarray:
    """Pack a 0/1 array of shape ``(..., total_bits)`` into ``uint64`` words."""
    bits = np.asarray(bits)
    if bits.shape[-1] != layout.total_bits:
        raise LayoutMismatch(
            f"expected {layout.total_bits} bits, got {bits.shape[-1]}")
    padded_bits = layout.n_words * 64
    if padded_bits != layout.total_bits:
        pad = [(0, 0)] * (bits.ndim - 1) + [(0, padded_bits - layout.total_bits)]
        bits = np.pad(bits, pad)
    packed = np.packbits(bits.astype(np.uint8, copy=False), axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, layout: CodeLayout) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns ``uint8`` 0/1 values."""
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    bits = np.unpackbits(raw, axis=-1, bitorder="little")
    return bits[..., : layout.total_bits]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.uint64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class IrisCode:
    """A template: data bits plus a validity mask (1 = bit usable)."""

    id: str
    layout: CodeLayout
    data: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("data", "mask"):
            words = np.asarray(getattr(self, name))
            if words.shape != (self.layout.n_words,):
                raise LayoutMismatch(
                    f"{name} must hold {self.layout.n_words} words, got shape {words.shape}")
            object.__setattr__(self, name, _frozen(words))
        pad = self.layout.n_words * 64 - self.layout.total_bits
        if pad:
            keep = np.uint64((1 << (64 - pad)) - 1)
            if (self.data[-1] & ~keep) or (self.mask[-1] & ~keep):
                raise ValueError("padding bits past total_bits must be zero")
        if self.valid_count == 0:
            raise ValueError(f"code {self.id!r} has an all-zero mask")

    @classmethod
    def from_bits(cls, id, layout, data_bits, mask_bits=None) -> "IrisCode":
        data_bits = np.asarray(data_bits, dtype=np.uint8)
        if mask_bits is None:
            mask_bits = np.ones(layout.total_bits, dtype=np.uint8)
        return cls(str(id), layout, pack_bits(data_bits, layout),
                   pack_bits(np.asarray(mask_bits, dtype=np.uint8), layout))

    @classmethod
    def from_string(cls, id, layout, data: str, mask: str | None = None) -> "IrisCode":
        """Build from '0'/'1' strings, index 0 first."""
        to_bits = lambda s: np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")
        return cls.from_bits(id, layout, to_bits(data), None if mask is None else to_bits(mask))

    def data_bits(self) -> np.ndarray:
        return unpack_bits(self.data, self.layout)

    def mask_bits(self) -> np.ndarray:
        return unpack_bits(self.mask, self.layout)

    @property
    def valid_count(self) -> int:
        return int(np.bitwise_count(self.mask).sum())

    def with_mask(self, mask_bits) -> "IrisCode":
        return IrisCode(self.id, self.layout, self.data, pack_bits(mask_bits, self.layout))

    def __eq__(self, other):
        if not isinstance(other, IrisCode):
            return NotImplemented
        return (self.id == other.id and self.layout == other.layout
                and np.array_equal(self.data, other.data)
                and np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.id, self.layout, self.data.tobytes(), self.mask.tobytes()))


class ScoreRecord(NamedTuple):
    id_a: str
    id_b: str
    hd: float
    valid_bits: int
    rotation_offset: int
    valid: bool = True


def _check_layouts(a: IrisCode, b: IrisCode):
    if a.layout != b.layout:
        raise LayoutMismatch(f"layouts differ: {a.layout} vs {b.layout}")


def _raw_compare(a_data, a_mask, b_data, b_mask) -> tuple[int, int]:
    joint = a_mask & b_mask
    valid = int(np.bitwise_count(joint).sum())
    disagree = int(np.bitwise_count((a_data ^ b_data) & joint).sum())
    return disagree, valid


def hamming_distance(a: IrisCode, b: IrisCode, min_overlap: int | None = None) -> tuple[float, int]:
    """Masked fractional Hamming distance.

    Returns ``(hd, valid_bits)`` where ``valid_bits`` counts the bits valid
    in both masks and ``hd`` is the disagreeing fraction of those bits.

    Raises
    ------
    LayoutMismatch
        If the two codes do not share a layout.
    InsufficientOverlap
        If fewer than ``min_overlap`` bits are jointly valid.
    """
    _check_layouts(a, b)
    if min_overlap is None:
        min_overlap = a.layout.default_min_overlap()
    disagree, valid = _raw_compare(a.data, a.mask, b.data, b.mask)
    if valid == 0 or valid < min_overlap:
        raise InsufficientOverlap(valid, min_overlap)
    return disagree / valid, valid


def rotate_words(words: np.ndarray, layout: CodeLayout, steps: int) -> np.ndarray:
    """Cyclically shift packed templates (any leading shape) by ``steps`` angular positions."""
    steps %= layout.angular_resolution
    if steps == 0:
        return np.array(words, dtype=np.uint64, copy=True)
    bits = unpack_bits(words, layout)
    grid = bits.reshape(bits.shape[:-1] + (layout.angular_resolution, layout.bits_per_step))
    grid = np.roll(grid, steps, axis=-2)
    return pack_bits(grid.reshape(bits.shape), layout)


def rotate(code: IrisCode, steps: int) -> IrisCode:
    """Rotate data and mask so bit ``i`` moves to ``(i + steps * bits_per_step) mod total_bits``."""
    layout = code.layout
    return IrisCode(code.id, layout, rotate_words(code.data, layout, steps),
                    rotate_words(code.mask, layout, steps))


def rotation_offsets(k: int, layout: CodeLayout | None = None) -> list[int]:
    """Offsets in tie-break preference order: 0, -1, +1, -2, +2, ..."""
    if not isinstance(k, (int, np.integer)) or k < 1 or k % 2 == 0:
        raise ValueError(f"rotation count must be an odd positive integer, got {k!r}")
    if layout is not None and k > 1 and k > layout.angular_resolution - 1:
        raise ValueError(
            f"rotation count {k} exceeds angular_resolution - 1 = {layout.angular_resolution - 1}")
    order = [0]
    for s in range(1, (k - 1) // 2 + 1):
        order += [-s, s]
    return order


def best_match(a: IrisCode, b: IrisCode, k: int = DEFAULT_ROTATIONS,
               min_overlap: int | None = None) -> ScoreRecord:
    """Best (minimum) Hamming distance over ``k`` symmetric rotations of ``b``.

    Ties go to the smallest ``|offset|``, then to the negative offset.
    Offsets whose joint mask falls below ``min_overlap`` are skipped; if none
    qualifies :class:`InsufficientOverlap` is raised.
    """
    _check_layouts(a, b)
    layout = a.layout
    if min_overlap is None:
        min_overlap = layout.default_min_overlap()
    best = None
    largest_overlap = 0
    for s in rotation_offsets(k, layout):
        disagree, valid = _raw_compare(a.data, a.mask, rotate_words(b.data, layout, s),
                                       rotate_words(b.mask, layout, s))
        largest_overlap = max(largest_overlap, valid)
        if valid == 0 or valid < min_overlap:
            continue
        if best is None or disagree * best[1] < best[0] * valid:
            best = (disagree, valid, s)
    if best is None:
        raise InsufficientOverlap(largest_overlap, min_overlap)
    disagree, valid, s = best
    return ScoreRecord(a.id, b.id, disagree / valid, valid, s, True)


class ScoreTable(Sequence):
    """Columnar result of :func:`all_pairs`; indexing yields :class:`ScoreRecord`.

    Columns are numpy arrays of equal length. ``index_a``/``index_b`` point
    into ``ids``. Invalid-overlap pairs are kept with ``valid == False``.
    """

    def __init__(self, ids, index_a, index_b, disagree, valid_bits, rotation_offset, valid, k=1):
        self.ids = list(ids)
        self.index_a = np.asarray(index_a, dtype=np.int64)
        self.index_b = np.asarray(index_b, dtype=np.int64)
        self.disagree = np.asarray(disagree, dtype=np.int64)
        self.valid_bits = np.asarray(valid_bits, dtype=np.int64)
        self.rotation_offset = np.asarray(rotation_offset, dtype=np.int64)
        self.valid = np.asarray(valid, dtype=bool)
        self.k = k
        with np.errstate(invalid="ignore", divide="ignore"):
            self.hd = np.where(self.valid_bits > 0,
                               self.disagree / np.maximum(self.valid_bits, 1), np.nan)

    def __len__(self):
        return len(self.hd)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return ScoreRecord(self.ids[self.index_a[i]], self.ids[self.index_b[i]], float(self.hd[i]),
                           int(self.valid_bits[i]), int(self.rotation_offset[i]), bool(self.valid[i]))

    def __iter__(self) -> Iterator[ScoreRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def id_a(self) -> np.ndarray:
        return np.asarray(self.ids, dtype=object)[self.index_a]

    @property
    def id_b(self) -> np.ndarray:
        return np.asarray(self.ids, dtype=object)[self.index_b]

    def scores(self) -> np.ndarray:
        """Hamming distances of the valid pairs only."""
        return self.hd[self.valid]

    def summary(self) -> dict:
        s = self.scores()
        return {
            "pairs": len(self),
            "valid_pairs": int(s.size),
            "mean": float(s.mean()) if s.size else float("nan"),
            "sd": float(s.std(ddof=1)) if s.size > 1 else float("nan"),
        }


def stack_codes(codes: Sequence[IrisCode]) -> tuple[CodeLayout, np.ndarray, np.ndarray]:
    if not codes:
        raise ValueError("no codes given")
    layout = codes[0].layout
    for c in codes:
        if c.layout != layout:
            raise LayoutMismatch(f"code {c.id!r} has layout {c.layout}, expected {layout}")
    data = np.stack([c.data for c in codes])
    mask = np.stack([c.mask for c in codes])
    return layout, data, mask


def set_threads(threads: int | None):
    """Apply a worker-count hint to the parallel kernel (results do not depend on it)."""
    import numba

    if threads is None:
        env = os.environ.get("IRISENTROPY_THREADS")
        threads = int(env) if env else None
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def all_pairs(codes: Sequence[IrisCode], k: int = DEFAULT_ROTATIONS,
              min_overlap: int | None = None, threads: int | None = None) -> ScoreTable:
    """Compare every unordered pair of codes with a ``k``-offset rotation search.

    Output rows are ordered lexicographically by ``(id_a, id_b)`` with
    ``id_a < id_b``; ids must be unique. Exactly ``n (n - 1) / 2`` rows are
    produced, including pairs flagged invalid for insufficient overlap.
    """
    from ._kernel import all_pairs_kernel

    codes = list(codes)
    if len(codes) < 2:
        raise ValueError("all_pairs needs at least two codes")
    layout, _, _ = stack_codes(codes)
    order = sorted(range(len(codes)), key=lambda i: codes[i].id)
    ids = [codes[i].id for i in order]
    if len(set(ids)) != len(ids):
        raise ValueError("code ids must be unique")
    _, data, mask = stack_codes([codes[i] for i in order])
    offsets = rotation_offsets(k, layout)
    if min_overlap is None:
        min_overlap = layout.default_min_overlap()

    rot_data = np.stack([rotate_words(data, layout, s) for s in offsets])
    rot_mask = np.stack([rotate_words(mask, layout, s) for s in offsets])

    n = len(codes)
    n_pairs = n * (n - 1) // 2
    out_a = np.empty(n_pairs, np.int64)
    out_b = np.empty(n_pairs, np.int64)
    disagree = np.empty(n_pairs, np.int64)
    valid_bits = np.empty(n_pairs, np.int64)
    slot = np.empty(n_pairs, np.int64)
    ok = np.empty(n_pairs, np.bool_)
    set_threads(threads)
    all_pairs_kernel(data, mask, rot_data, rot_mask, int(min_overlap),
                     out_a, out_b, disagree, valid_bits, slot, ok)
    return ScoreTable(ids, out_a, out_b, disagree, valid_bits,
                      np.asarray(offsets, dtype=np.int64)[slot], ok, k=k)


def all_pairs_serial(codes: Sequence[IrisCode], k: int = DEFAULT_ROTATIONS,
                     min_overlap: int | None = None) -> list[ScoreRecord]:
    """Reference one-pair-at-a-time implementation of :func:`all_pairs`."""
    codes = sorted(codes, key=lambda c: c.id)
    out = []
    for i, a in enumerate(codes):
        for b in codes[i + 1:]:
            try:
                out.append(best_match(a, b, k, min_overlap))
            except InsufficientOverlap:
                disagree, valid = _raw_compare(a.data, a.mask, b.data, b.mask)
                out.append(ScoreRecord(a.id, b.id, disagree / valid if valid else float("nan"),
                                       valid, 0, False))
    return out


def same_subject_pairs(ids: Sequence[str], subject_of) -> tuple[int, float]:
    """Count pairings whose two codes belong to the same subject (e.g. left/right eyes).

    ``subject_of`` maps a code id to a subject key. Returns the count and
    its fraction of all ``n (n - 1) / 2`` pairings.
    """
    counts: dict = {}
    for i in ids:
        key = subject_of(i)
        counts[key] = counts.get(key, 0) + 1
    same = sum(c * (c - 1) // 2 for c in counts.values())
    n = len(ids)
    total = n * (n - 1) // 2
    return same, (same / total if total else 0.0)
