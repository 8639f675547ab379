"""Project size classes by lines of code."""

from __future__ import annotations

import enum


class SizeClass(enum.Enum):
    BELOW_RANGE = "BelowRange"
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE = "Large"


def classify_size(loc: int) -> SizeClass:
    if loc < 0:
        raise ValueError("loc must be non-negative")
    if loc < 100:
        return SizeClass.BELOW_RANGE
    if loc < 500:
        return SizeClass.SMALL
    if loc < 2000:
        return SizeClass.MEDIUM
    return SizeClass.LARGE
