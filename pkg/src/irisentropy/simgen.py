"""Seeded synthetic cohorts with a prescribed impostor-score model.

Each code is built from ``dof`` independent feature bits, each replicated
over a contiguous block of template bits. Blocks tile the layout and their
sizes differ by at most one, so a pairwise Hamming distance is (up to block
weighting) the fraction of disagreeing features out of ``dof``.

Mean control: a cohort-wide hidden pattern is drawn once. Each feature of
each code copies the pattern bit with probability ``r`` and takes the
complement otherwise, so two codes disagree on a feature with probability
``2 r (1 - r) = (1 - q**2) / 2`` where ``q = 2 r - 1``. Solving for the
requested mean gives ``q = sqrt(1 - 2 * mean_hd)``.

Randomness comes from Philox streams keyed by ``SeedSequence(seed,
spawn_key=...)``: ``(0,)`` for the hidden pattern, ``(1, i)`` for code
``i`` and ``(2, i)`` for its occlusion mask. Output is therefore identical
across platforms and independent of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codes import CodeLayout, IrisCode, pack_bits
from .errors import SpecInvalid

_PATTERN_STREAM = 0
_CODE_STREAM = 1
_MASK_STREAM = 2


def _rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class CohortSpec:
    n_codes: int
    dof: int
    mean_hd: float = 0.5
    layout: CodeLayout = field(default_factory=CodeLayout)
    seed: int = 0
    id_prefix: str = "c"

    def __post_init__(self):
        if int(self.n_codes) != self.n_codes or self.n_codes < 1:
            raise SpecInvalid(f"n_codes must be a positive integer, got {self.n_codes!r}")
        if int(self.dof) != self.dof or self.dof < 1:
            raise SpecInvalid(f"dof must be a positive integer, got {self.dof!r}")
        if self.dof > self.layout.total_bits:
            raise SpecInvalid(f"dof {self.dof} exceeds total_bits {self.layout.total_bits}")
        if not (0.0 < self.mean_hd <= 0.5):
            raise SpecInvalid(f"mean_hd must lie in (0, 0.5], got {self.mean_hd!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise SpecInvalid(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def copy_probability(self) -> float:
        return (1.0 + math.sqrt(1.0 - 2.0 * self.mean_hd)) / 2.0


def block_index(layout: CodeLayout, dof: int) -> np.ndarray:
    """Feature index owning each template bit (contiguous, near-equal blocks)."""
    t = layout.total_bits
    return (np.arange(t, dtype=np.int64) * dof) // t


def block_sizes(layout: CodeLayout, dof: int) -> np.ndarray:
    return np.bincount(block_index(layout, dof), minlength=dof)


def effective_dof(layout: CodeLayout, dof: int) -> float:
    """Exact DoF of the block-weighted score: ``total_bits**2 / sum(block_size**2)``."""
    w = block_sizes(layout, dof).astype(float)
    return float(w.sum() ** 2 / (w ** 2).sum())


def features_to_bits(features: np.ndarray, layout: CodeLayout) -> np.ndarray:
    features = np.asarray(features, dtype=np.uint8)
    return features[..., block_index(layout, features.shape[-1])]


def cohort_features(spec: CohortSpec) -> np.ndarray:
    """Feature matrix of shape ``(n_codes, dof)``."""
    pattern = _rng(spec.seed, _PATTERN_STREAM).integers(0, 2, spec.dof, dtype=np.uint8)
    r = spec.copy_probability
    out = np.empty((spec.n_codes, spec.dof), dtype=np.uint8)
    for i in range(spec.n_codes):
        flip = _rng(spec.seed, _CODE_STREAM, i).random(spec.dof) >= r
        out[i] = pattern ^ flip
    return out


def generate_cohort(spec: CohortSpec) -> list[IrisCode]:
    layout = spec.layout
    bits = features_to_bits(cohort_features(spec), layout)
    data = pack_bits(bits, layout)
    mask = pack_bits(np.ones(layout.total_bits, dtype=np.uint8), layout)
    width = len(str(spec.n_codes - 1))
    return [IrisCode(f"{spec.id_prefix}{i:0{width}d}", layout, data[i], mask)
            for i in range(spec.n_codes)]


def generate_masks(cohort: list[IrisCode], occlusion_fraction: float, seed: int = 0) -> list[IrisCode]:
    """Zero a contiguous angular arc of each mask, at a seeded random start.

    The arc spans ``round(occlusion_fraction * angular_resolution)`` angular
    positions and wraps around the angular axis. Data bits are untouched.
    """
    if not (0.0 <= occlusion_fraction < 1.0):
        raise ValueError(f"occlusion_fraction must lie in [0, 1), got {occlusion_fraction!r}")
    out = []
    for i, code in enumerate(cohort):
        layout = code.layout
        arc = int(round(occlusion_fraction * layout.angular_resolution))
        if arc == 0:
            out.append(code)
            continue
        start = int(_rng(seed, _MASK_STREAM, i).integers(0, layout.angular_resolution))
        mask = code.mask_bits().reshape(layout.angular_resolution, layout.bits_per_step).copy()
        mask[(start + np.arange(arc)) % layout.angular_resolution] = 0
        out.append(code.with_mask(mask.ravel()))
    return out
