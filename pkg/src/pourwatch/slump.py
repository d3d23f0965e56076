"""Slump-range taxonomy, clip extraction, majority voting and the verdict.

Slump (the cone-test settlement in mm) is discretized into five 30 mm-wide
intervals; a pluggable clip classifier produces a probability distribution
over them, the prediction is repeated over several clips and settled by
majority vote, and the voted bin is compared against the ordered range.
Soft-label utilities (label smoothing, mix interpolation, soft-target
cross-entropy) are provided for scoring classifier outputs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .optflow import Frame

N_BINS = 5
PROB_SUM_TOLERANCE = 1e-6
LOG_CLAMP = 1e-12


class InsufficientFramesError(ValueError):
    """The video does not contain every frame the clip needs."""

    def __init__(self, message: str, available: int):
        super().__init__(message)
        self.available = available


class AdapterError(RuntimeError):
    """A classifier or detector adapter violated the protocol."""


class SlumpBin(enum.Enum):
    """KS F 4009-motivated slump intervals, mm, half-open [lo, hi)."""

    UNDER_150 = ("under150", float("-inf"), 150.0)
    S150_180 = ("150-180", 150.0, 180.0)
    S180_210 = ("180-210", 180.0, 210.0)
    S210_240 = ("210-240", 210.0, 240.0)
    OVER_240 = ("over240", 240.0, float("inf"))

    def __init__(self, label: str, lo: float, hi: float):
        self.label = label
        self.lo = lo
        self.hi = hi

    @property
    def index(self) -> int:
        return list(SlumpBin).index(self)

    @staticmethod
    def from_index(i: int) -> "SlumpBin":
        return list(SlumpBin)[i]

    @staticmethod
    def from_label(label: str) -> "SlumpBin":
        for b in SlumpBin:
            if b.label == label:
                return b
        raise ValueError(f"unknown slump bin {label!r}")

    @property
    def midpoint_mm(self) -> float:
        """Representative mm value (open-ended bins use a 15 mm margin)."""
        if math.isinf(self.lo):
            return self.hi - 15.0
        if math.isinf(self.hi):
            return self.lo + 15.0
        return (self.lo + self.hi) / 2.0


def bin_of(slump_mm: float) -> SlumpBin:
    """The unique bin whose [lo, hi) interval contains the value."""
    if not math.isfinite(slump_mm):
        raise ValueError("slump must be finite")
    for b in SlumpBin:
        if b.lo <= slump_mm < b.hi:
            return b
    raise AssertionError("intervals partition the mm axis")  # pragma: no cover


@dataclass(frozen=True)
class ClassDistribution:
    """Classifier output: five probabilities summing to one."""

    p: tuple[float, ...]

    def __post_init__(self):
        if len(self.p) != N_BINS:
            raise ValueError(f"expected {N_BINS} probabilities, got {len(self.p)}")
        if any((not math.isfinite(v)) or v < 0 for v in self.p):
            raise ValueError(f"probabilities must be finite and non-negative: {self.p}")
        if abs(sum(self.p) - 1.0) > PROB_SUM_TOLERANCE:
            raise ValueError(f"probabilities must sum to 1, got {sum(self.p)}")

    @property
    def argmax(self) -> int:
        return max(range(N_BINS), key=lambda i: (self.p[i], -i))


@dataclass(frozen=True)
class SoftLabel:
    """Training-style soft target: five non-negative weights summing to one."""

    y: tuple[float, ...]

    def __post_init__(self):
        if len(self.y) != N_BINS:
            raise ValueError(f"expected {N_BINS} weights, got {len(self.y)}")
        if any((not math.isfinite(v)) or v < 0 for v in self.y):
            raise ValueError(f"weights must be finite and non-negative: {self.y}")
        if abs(sum(self.y) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.y)}")


@dataclass(frozen=True)
class SlumpOrder:
    ordered_bin: SlumpBin


@dataclass(frozen=True)
class ClipWindow:
    side: object
    start_frame: int
    frames: tuple[Frame, ...]
    n: int
    stride: int

    def __post_init__(self):
        if len(self.frames) != self.n:
            raise ValueError(f"clip holds {len(self.frames)} frames, declared n={self.n}")
        for k, f in enumerate(self.frames):
            expect = self.start_frame + k * self.stride
            if f.index != expect:
                raise ValueError(f"clip frame {k} has index {f.index}, expected {expect}")


@dataclass(frozen=True)
class Verdict:
    predicted: SlumpBin
    order: SlumpOrder
    status: str                      # "acceptable" | "abnormal"
    votes: tuple[int, ...]
    t_drop: int


@dataclass(frozen=True)
class SlumpConfig:
    n: int = 16             # frames per clip
    stride: int = 2         # frame interval within a clip
    votes: int = 5          # T, number of clips voted
    hop: int = 8            # frames between consecutive clip starts


class ClassifierHandle(Protocol):
    def classify(self, clip: ClipWindow) -> Sequence[float]: ...


class StubClassifier:
    """Fixed-distribution classifier for harness runs."""

    def __init__(self, probs: Sequence[float]):
        self.dist = ClassDistribution(tuple(float(v) for v in probs))

    @staticmethod
    def for_bin(b: SlumpBin) -> "StubClassifier":
        probs = [0.0] * N_BINS
        probs[b.index] = 1.0
        return StubClassifier(probs)

    def classify(self, clip: ClipWindow) -> Sequence[float]:
        return self.dist.p


def extract_clip(video: Sequence[Frame], t: int, n: int, stride: int,
                 side: object = None) -> ClipWindow:
    """Clip of ``n`` frames starting at frame index ``t`` with the given stride.

    ``video`` is any frame sequence carrying .index; raises
    InsufficientFramesError when any required index is missing.
    """
    by_index = {f.index: f for f in video}
    picked = []
    for k in range(n):
        idx = t + k * stride
        if idx not in by_index:
            raise InsufficientFramesError(
                f"clip needs frame {idx}, video has {len(by_index)} frames", len(by_index))
        picked.append(by_index[idx])
    return ClipWindow(side=side, start_frame=t, frames=tuple(picked), n=n, stride=stride)


def classify(handle: ClassifierHandle, clip: ClipWindow) -> ClassDistribution:
    """Run the classifier and validate its output distribution."""
    try:
        raw = handle.classify(clip)
    except AdapterError:
        raise
    except Exception as exc:  # protocol-level failures surface uniformly
        raise AdapterError(f"classifier failed: {exc}") from exc
    try:
        return ClassDistribution(tuple(float(v) for v in raw))
    except (TypeError, ValueError) as exc:
        raise AdapterError(f"invalid class distribution from adapter: {exc}") from exc


def majority_vote(dists: Sequence[ClassDistribution]) -> tuple[SlumpBin, tuple[int, ...]]:
    """Plurality vote over per-clip argmax bins.

    Ties break by the larger probability mass summed over the tied bins,
    then by the lower bin index.
    """
    if not dists:
        raise ValueError("majority_vote needs at least one distribution")
    votes = [0] * N_BINS
    mass = [0.0] * N_BINS
    for d in dists:
        votes[d.argmax] += 1
        for i in range(N_BINS):
            mass[i] += d.p[i]
    best = max(range(N_BINS), key=lambda i: (votes[i], mass[i], -i))
    return SlumpBin.from_index(best), tuple(votes)


def verdict(predicted: SlumpBin, order: SlumpOrder, t_drop: int,
            votes: tuple[int, ...]) -> Verdict:
    """Acceptable iff the voted bin equals the ordered bin."""
    status = "acceptable" if predicted is order.ordered_bin else "abnormal"
    return Verdict(predicted=predicted, order=order, status=status,
                   votes=votes, t_drop=t_drop)


def classify_at_drop(handle: ClassifierHandle, video: Sequence[Frame], t_drop: int,
                     cfg: SlumpConfig | None = None,
                     side: object = None) -> tuple[SlumpBin, tuple[int, ...], list[ClassDistribution]]:
    """T clips from the drop frame, classified and majority-voted."""
    cfg = cfg or SlumpConfig()
    dists = []
    for k in range(cfg.votes):
        clip = extract_clip(video, t_drop + k * cfg.hop, cfg.n, cfg.stride, side=side)
        dists.append(classify(handle, clip))
    winner, votes = majority_vote(dists)
    return winner, votes, dists


def smooth_label(cls: int, factor: float) -> SoftLabel:
    """Label smoothing: 1 - factor + factor/5 on the class, factor/5 elsewhere."""
    if not 0 <= cls < N_BINS:
        raise ValueError(f"class index out of range: {cls}")
    if not 0.0 <= factor < 1.0:
        raise ValueError(f"smoothing factor must be in [0, 1), got {factor}")
    base = factor / N_BINS
    y = [base] * N_BINS
    y[cls] = 1.0 - factor + base
    return SoftLabel(tuple(y))


def mix_labels(a: SoftLabel, b: SoftLabel, lambda_mix: float) -> SoftLabel:
    """Convex interpolation lambda*a + (1-lambda)*b."""
    if not 0.0 <= lambda_mix <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lambda_mix}")
    return SoftLabel(tuple(lambda_mix * ya + (1.0 - lambda_mix) * yb
                           for ya, yb in zip(a.y, b.y)))


def soft_cross_entropy(y: SoftLabel, p: ClassDistribution, lambda_cls: float = 1.0) -> float:
    """Soft-target cross-entropy -lambda * sum(y_i * log p_i), clamped logs."""
    total = 0.0
    for yi, pi in zip(y.y, p.p):
        if yi > 0:
            total += yi * math.log(max(pi, LOG_CLAMP))
    return -lambda_cls * total
