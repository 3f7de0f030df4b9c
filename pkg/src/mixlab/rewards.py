"""Verifiable reward functions: answer extraction, exact match, box IoU, totals.

The reasoning-format contract is a ``<think>...</think>`` block followed by
``<answer>...</answer>`` (tags are case-sensitive; whitespace between them is
free).  The pair may appear anywhere in the output and the last pair wins.
If extraction fails, format, accuracy, and IoU are all zero.
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidBox, MalformedLine

TAG_PATTERN = re.compile(r"<think>(.*?)</think>\s*<answer>(.*?)</answer>", re.DOTALL)

_WS_RUN = re.compile(r"\s+")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, corners (x1, y1) <= (x2, y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise InvalidBox(f"box corners out of order: {self}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


@dataclass(frozen=True)
class RewardWeights:
    accuracy: float = 2.0  # applies to both exact match and IoU
    format: float = 1.0

    def __post_init__(self):
        if self.accuracy < 0 or self.format < 0:
            raise ValueError("reward weights must be >= 0")


DEFAULT_WEIGHTS = RewardWeights()


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-component rewards; ``accuracy`` is None for box tasks and vice versa."""

    format: int
    accuracy: int | None
    iou: float | None
    total: float


def extract_answer(text: str, mode: str = "text"):
    """Pull the final answer out of a model response.

    Returns ``(format_flag, payload)``.  In text mode the payload is the
    trimmed answer span; in box mode it is a list of (BoundingBox, confidence)
    pairs parsed from the span, and a span that does not parse as such counts
    as a format failure.  Never raises on malformed input.
    """
    if mode not in ("text", "box"):
        raise ValueError(f"mode must be 'text' or 'box', got {mode!r}")
    matches = TAG_PATTERN.findall(text or "")
    if not matches:
        return 0, None
    span = matches[-1][1].strip()
    if mode == "text":
        return 1, span
    boxes = _parse_box_payload(span)
    if boxes is None:
        return 0, None
    return 1, boxes


def _parse_box_payload(span: str):
    """Parse ``[{'Position': [x1, y1, x2, y2], 'Confidence': c}, ...]`` or None.

    Accepts single- or double-quoted keys and integer or decimal numbers.
    """
    try:
        obj = ast.literal_eval(span)
    except (ValueError, SyntaxError, MemoryError, RecursionError):
        return None
    if not isinstance(obj, list) or not obj:
        return None
    parsed = []
    for item in obj:
        if not isinstance(item, dict) or "Position" not in item or "Confidence" not in item:
            return None
        position = item["Position"]
        confidence = item["Confidence"]
        if not isinstance(position, (list, tuple)) or len(position) != 4:
            return None
        if not all(_is_number(v) for v in position) or not _is_number(confidence):
            return None
        try:
            box = BoundingBox(*(float(v) for v in position))
        except InvalidBox:
            return None
        parsed.append((box, float(confidence)))
    return parsed


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def normalize_answer(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WS_RUN.sub(" ", text.strip())


def accuracy_reward(predicted: str, gold: str) -> int:
    """Binary exact match after whitespace normalization; case-sensitive."""
    return int(normalize_answer(predicted) == normalize_answer(gold))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; a zero-area union scores 0."""
    inter_w = min(a.x2, b.x2) - max(a.x1, b.x1)
    inter_h = min(a.y2, b.y2) - max(a.y1, b.y1)
    intersection = max(0.0, inter_w) * max(0.0, inter_h)
    union = a.area + b.area - intersection
    if union <= 0.0:
        return 0.0
    return intersection / union


def best_box(boxes: Sequence[tuple[BoundingBox, float]]) -> BoundingBox:
    """Highest-confidence predicted box; ties go to the first listed."""
    index = max(range(len(boxes)), key=lambda i: (boxes[i][1], -i))
    return boxes[index][0]


def combined_reward(
    format_flag: int,
    accuracy: int | None = None,
    iou_value: float | None = None,
    weights: RewardWeights = DEFAULT_WEIGHTS,
) -> RewardBreakdown:
    """Weighted total: quality (accuracy or IoU) plus format bonus.

    A format failure zeroes every component before weighting, so the total is
    0 regardless of the other inputs.
    """
    if accuracy is not None and iou_value is not None:
        raise ValueError("a task is scored by accuracy or IoU, not both")
    if format_flag == 0:
        return RewardBreakdown(
            format=0,
            accuracy=0 if accuracy is not None else None,
            iou=0.0 if iou_value is not None else None,
            total=0.0,
        )
    quality = 0.0
    if accuracy is not None:
        quality = float(accuracy)
    elif iou_value is not None:
        quality = float(iou_value)
    total = weights.accuracy * quality + weights.format
    return RewardBreakdown(format=1, accuracy=accuracy, iou=iou_value, total=total)


def score_pair(prediction: str, gold, mode: str, weights: RewardWeights = DEFAULT_WEIGHTS) -> RewardBreakdown:
    """Score one (prediction, gold) pair end to end."""
    flag, payload = extract_answer(prediction, mode=mode)
    if mode == "text":
        acc = accuracy_reward(payload, gold) if flag else 0
        return combined_reward(flag, accuracy=acc, weights=weights)
    gold_box = gold if isinstance(gold, BoundingBox) else BoundingBox(*(float(v) for v in gold))
    value = iou(best_box(payload), gold_box) if flag else 0.0
    return combined_reward(flag, iou_value=value, weights=weights)


def score_pairs(lines: Iterable[str], weights: RewardWeights = DEFAULT_WEIGHTS) -> list[RewardBreakdown]:
    """Score a JSONL stream of ``{"prediction": ..., "gold": ..., "mode": ...}``."""
    results = []
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_number, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict) or not {"prediction", "gold", "mode"} <= obj.keys():
            raise MalformedLine(line_number, "expected {prediction, gold, mode}")
        if obj["mode"] not in ("text", "box"):
            raise MalformedLine(line_number, f"unknown mode {obj['mode']!r}")
        results.append(score_pair(obj["prediction"], obj["gold"], obj["mode"], weights))
    return results


def mean_iou(breakdowns: Sequence[RewardBreakdown]) -> float:
    """Mean IoU over box-task breakdowns (format failures count as 0)."""
    values = [b.iou if b.iou is not None else 0.0 for b in breakdowns]
    if not values:
        return 0.0
    return sum(values) / len(values)
