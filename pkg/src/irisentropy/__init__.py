"""All-against-all iris template matching and impostor score statistics."""

from .codes import (CodeLayout, IrisCode, ScoreRecord, ScoreTable, all_pairs, best_match,
                    hamming_distance, rotate)
from .simgen import CohortSpec, generate_cohort, generate_masks

__version__ = "0.1.0"

__all__ = [
    "CodeLayout", "IrisCode", "ScoreRecord", "ScoreTable", "all_pairs", "best_match",
    "hamming_distance", "rotate", "CohortSpec", "generate_cohort", "generate_masks",
]
