"""Praat TextGrid parsing (long and short formats) and 40 ms frame labeling."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

_EPS = 1e-12


class MalformedTextGrid(ValueError):
    """The input does not parse as a TextGrid or violates tier invariants."""


@dataclass(frozen=True)
class Interval:
    xmin: float
    xmax: float
    label: str


@dataclass
class TextGridDoc:
    tiers: dict[str, list[Interval]] = field(default_factory=dict)

    def tier(self, name: str) -> list[Interval]:
        if name not in self.tiers:
            raise KeyError(f"no tier named {name!r}; have {sorted(self.tiers)}")
        return self.tiers[name]


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    if data.startswith(b"\xff\xfe") or data.startswith(b"\xfe\xff"):
        return data.decode("utf-16")
    return data.decode("utf-8-sig")


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value.startswith('"') and value.endswith('"'):
        return value[1:-1].replace('""', '"')
    return value


_ASSIGN = re.compile(r"^\s*([A-Za-z ?]+?)\s*(?:\[\d+\])?\s*[=:]\s*(.*?)\s*$")


def _check_tier(name: str, intervals: list[Interval]) -> None:
    prev: Interval | None = None
    for iv in intervals:
        if iv.xmax < iv.xmin - _EPS:
            raise MalformedTextGrid(f"tier {name!r}: interval ends before it starts: {iv}")
        if prev is not None and iv.xmin < prev.xmax - _EPS:
            raise MalformedTextGrid(
                f"tier {name!r}: overlapping intervals at {prev.xmax} > {iv.xmin}"
            )
        prev = iv


def parse_textgrid(data: bytes | str) -> TextGridDoc:
    """Parse a long- or short-format TextGrid; interval tiers only.

    Point tiers are skipped. Within each tier, intervals must be
    time-ordered and non-overlapping.
    """
    text = _decode(data)
    lines = text.splitlines()
    if not any("ooTextFile" in line for line in lines[:3]):
        raise MalformedTextGrid("missing ooTextFile header")
    if any(line.lstrip().startswith("item") for line in lines):
        return _parse_long(lines)
    return _parse_short(lines)


def _parse_long(lines: Sequence[str]) -> TextGridDoc:
    doc = TextGridDoc()
    tier_class = ""
    tier_name: str | None = None
    in_interval = False
    cur: dict[str, object] = {}

    def flush_interval() -> None:
        nonlocal cur
        if not in_interval:
            return
        if not {"xmin", "xmax", "text"} <= cur.keys():
            raise MalformedTextGrid(f"incomplete interval near {cur!r}")
        assert tier_name is not None
        doc.tiers[tier_name].append(
            Interval(float(cur["xmin"]), float(cur["xmax"]), str(cur["text"]))
        )
        cur = {}

    for raw in lines:
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("intervals [") or stripped.startswith("points ["):
            flush_interval()
            in_interval = stripped.startswith("intervals [")
            cur = {}
            continue
        m = _ASSIGN.match(raw)
        if not m:
            continue
        key, value = m.group(1).strip(), m.group(2)
        if key == "class":
            flush_interval()
            in_interval = False
            tier_class = _unquote(value)
            tier_name = None
        elif key == "name":
            name = _unquote(value)
            if tier_class == "IntervalTier":
                if name in doc.tiers:
                    raise MalformedTextGrid(f"duplicate tier name {name!r}")
                doc.tiers[name] = []
                tier_name = name
            else:
                tier_name = None
        elif key in ("xmin", "xmax") and in_interval and tier_name is not None:
            cur[key] = float(value)
        elif key == "text" and in_interval and tier_name is not None:
            cur["text"] = _unquote(value)
    flush_interval()
    for name, intervals in doc.tiers.items():
        _check_tier(name, intervals)
    return doc


def _parse_short(lines: Sequence[str]) -> TextGridDoc:
    values = [line.strip() for line in lines if line.strip()]
    # values[0:2] are the File type / Object class header lines.
    pos = 2

    def take() -> str:
        nonlocal pos
        if pos >= len(values):
            raise MalformedTextGrid("unexpected end of short-format TextGrid")
        v = values[pos]
        pos += 1
        return v

    take()  # document xmin
    take()  # document xmax
    take()  # <exists> flag
    n_tiers = int(take())
    doc = TextGridDoc()
    for _ in range(n_tiers):
        klass = _unquote(take())
        name = _unquote(take())
        take()  # tier xmin
        take()  # tier xmax
        n_items = int(take())
        if klass == "IntervalTier":
            if name in doc.tiers:
                raise MalformedTextGrid(f"duplicate tier name {name!r}")
            intervals = []
            for _ in range(n_items):
                xmin = float(take())
                xmax = float(take())
                label = _unquote(take())
                intervals.append(Interval(xmin, xmax, label))
            doc.tiers[name] = intervals
        else:
            for _ in range(n_items):
                take()  # point time
                take()  # point mark
    for name, intervals in doc.tiers.items():
        _check_tier(name, intervals)
    return doc


def frames_from_textgrid(
    doc: TextGridDoc,
    frame_period_ms: float = 40.0,
    tier_name: str = "phones",
) -> list[str | None]:
    """Label each fixed-period frame by the interval containing its center.

    Frame k covers [k*T, (k+1)*T); its label comes from the half-open
    interval [xmin, xmax) containing the center (k+0.5)*T, so a center
    sitting exactly on a boundary belongs to the later interval. Centers
    in silence (empty label) or outside every interval get None.
    """
    intervals = doc.tier(tier_name)
    if not intervals:
        return []
    duration = max(iv.xmax for iv in intervals)
    period = frame_period_ms / 1000.0
    if period <= 0:
        raise ValueError("frame_period_ms must be positive")
    # Frame k exists while its start k*T lies inside the audio.
    n_frames = max(0, math.ceil(duration / period - 1e-9))
    labels: list[str | None] = []
    for k in range(n_frames):
        center = (k + 0.5) * period
        label: str | None = None
        for iv in intervals:
            if center >= iv.xmin - _EPS and center < iv.xmax - _EPS:
                label = iv.label if iv.label.strip() else None
                break
        labels.append(label)
    return labels
