"""Rating images against a pair of opposing keywords.

A criterion is two keywords filled into the fixed template "{keyword} image";
the second keyword defaults to "not <first>".  An image's rating is the
softmax of its cosine similarities to the two template embeddings:

    s_bar = e^s1 / (e^s1 + e^s2)

which lands in (0, 1) and satisfies s_bar(a, b) = 1 - s_bar(b, a).  Ratings
use the 512-d image features only; the concatenated features would leak the
original prompt into its own evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import EmptyKeyword, InvalidRange

TEMPLATE = "{keyword} image"
DEFAULT_BINS = 20


@dataclass(frozen=True)
class Criterion:
    keyword_a: str
    keyword_b: str

    @property
    def text_a(self) -> str:
        return TEMPLATE.format(keyword=self.keyword_a)

    @property
    def text_b(self) -> str:
        return TEMPLATE.format(keyword=self.keyword_b)


@dataclass(frozen=True)
class Rating:
    record_id: str
    s1: float
    s2: float
    s_bar: float


@dataclass(frozen=True)
class Histogram:
    lo: float
    hi: float
    counts: tuple[int, ...] = field(default_factory=tuple)

    @property
    def bins(self) -> int:
        return len(self.counts)

    def edges(self) -> list[float]:
        if self.hi == self.lo:
            return [self.lo] * (self.bins + 1)
        width = (self.hi - self.lo) / self.bins
        return [self.lo + i * width for i in range(self.bins + 1)]


def build_criterion(keyword_a: str, keyword_b: str | None = None) -> Criterion:
    """Criterion from one or two keywords; absent second opposes the first."""
    if not keyword_a or not keyword_a.strip():
        raise EmptyKeyword("first keyword must be nonempty")
    keyword_a = keyword_a.strip()
    if keyword_b is None or not keyword_b.strip():
        keyword_b = "not " + keyword_a
    else:
        keyword_b = keyword_b.strip()
    return Criterion(keyword_a, keyword_b)


def softmax_pair(s1: float, s2: float) -> float:
    """e^s1 / (e^s1 + e^s2), computed in the overflow-safe sigmoid form."""
    return 1.0 / (1.0 + math.exp(s2 - s1))


def rate_image(
    image_vec: np.ndarray, criterion: Criterion, embedder, record_id: str = ""
) -> Rating:
    """Rate one image; s1/s2 are cosine similarities to the template texts."""
    a_vec = embedder.embed_text(criterion.text_a)
    b_vec = embedder.embed_text(criterion.text_b)
    return rate_with_templates(image_vec, a_vec, b_vec, record_id)


def rate_with_templates(
    image_vec: np.ndarray, a_vec: np.ndarray, b_vec: np.ndarray, record_id: str = ""
) -> Rating:
    v = np.asarray(image_vec, dtype=np.float64)
    v = v / np.linalg.norm(v)
    s1 = float(np.dot(v, np.asarray(a_vec, dtype=np.float64)))
    s2 = float(np.dot(v, np.asarray(b_vec, dtype=np.float64)))
    return Rating(record_id, s1, s2, softmax_pair(s1, s2))


def histogram(values: list[float], bins: int, lo: float, hi: float) -> Histogram:
    """Equal-width histogram; bins are half-open except the last (closed)."""
    if bins < 1:
        raise InvalidRange(f"bins must be >= 1, got {bins}")
    counts = [0] * bins
    span = hi - lo
    for v in values:
        if v < lo or v > hi:
            continue
        if span == 0:
            idx = 0
        else:
            idx = min(int((v - lo) / span * bins), bins - 1)
        counts[idx] += 1
    return Histogram(lo=lo, hi=hi, counts=tuple(counts))


def rating_histogram(ratings: list[Rating], bins: int = DEFAULT_BINS) -> Histogram:
    """Distribution of s_bar values over [0, 1]."""
    return histogram([r.s_bar for r in ratings], bins, 0.0, 1.0)


def filter_by_range(ratings: list[Rating], lo: float, hi: float) -> list[str]:
    """Record ids with lo <= s_bar <= hi, ascending id order."""
    if not (0.0 <= lo <= hi <= 1.0):
        raise InvalidRange(f"need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
    return sorted(r.record_id for r in ratings if lo <= r.s_bar <= hi)


@lru_cache(maxsize=1)
def common_pairs() -> list[dict]:
    """Suggested opposing-keyword pairs shipped with the package."""
    raw = resources.files("promptmap.data").joinpath("common_pairs.json").read_text("utf-8")
    return json.loads(raw)
