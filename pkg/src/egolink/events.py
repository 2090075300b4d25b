"""Interaction log parsing and preprocessing.

The log format is one event per line::

    kind,source,destination,timestamp[,duration]

with ``kind`` in ``{call, text}``. Calls carry a duration in seconds, texts
do not. Lines starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

import enum
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

log = logging.getLogger(__name__)


class Kind(str, enum.Enum):
    CALL = "call"
    TEXT = "text"

    def __str__(self) -> str:
        return self.value


KINDS: tuple[Kind, Kind] = (Kind.CALL, Kind.TEXT)

Pair = tuple[int, int]


def undirected(u: int, v: int) -> Pair:
    return (u, v) if u < v else (v, u)


class MalformedLineError(ValueError):
    """A log line could not be parsed (raised only in strict mode)."""

    def __init__(self, lineno: int, line: str, reason: str) -> None:
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno
        self.line = line
        self.reason = reason


@dataclass(frozen=True, slots=True)
class InteractionEvent:
    kind: Kind
    source: int
    destination: int
    timestamp: int
    duration: int | None = None

    def __post_init__(self) -> None:
        if self.source == self.destination:
            raise ValueError(f"self-loop on node {self.source}")
        if (self.kind is Kind.CALL) != (self.duration is not None):
            raise ValueError("duration must be present exactly for calls")
        if self.duration is not None and self.duration < 0:
            raise ValueError("negative duration")

    @property
    def pair(self) -> Pair:
        return undirected(self.source, self.destination)

    def to_line(self) -> str:
        base = f"{self.kind.value},{self.source},{self.destination},{self.timestamp}"
        if self.duration is None:
            return base
        return f"{base},{self.duration}"


@dataclass
class ParsedLog:
    events: list[InteractionEvent]
    rejected: list[tuple[int, str]] = field(default_factory=list)
    out_of_window: int = 0


_KIND_BY_NAME = {kind.value: kind for kind in Kind}


def _parse_line(line: str) -> InteractionEvent:
    parts = line.split(",")
    kind = _KIND_BY_NAME.get(parts[0].strip().lower())
    if kind is None:
        raise ValueError(f"unknown kind {parts[0]!r}")
    expected = 5 if kind is Kind.CALL else 4
    if len(parts) != expected:
        raise ValueError(f"expected {expected} fields for {kind.value}, got {len(parts)}")
    try:
        values = [int(p) for p in parts[1:]]
    except ValueError:
        raise ValueError("non-integer field") from None
    duration = values[3] if kind is Kind.CALL else None
    return InteractionEvent(kind, values[0], values[1], values[2], duration)


def _lines(source: Iterable[str | bytes] | TextIO | io.BufferedIOBase) -> Iterator[str]:
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def parse_events(
    source: Iterable[str | bytes],
    window: tuple[int, int] | None = None,
    strict: bool = False,
) -> ParsedLog:
    """Parse an event log.

    Malformed lines are recorded in ``rejected`` as ``(lineno, reason)`` and
    skipped, unless ``strict`` is set, in which case the first one raises
    :class:`MalformedLineError`. Events outside the half-open ``window`` are
    dropped and counted in ``out_of_window``.
    """
    result = ParsedLog(events=[])
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            event = _parse_line(line)
        except ValueError as exc:
            if strict:
                raise MalformedLineError(lineno, line, str(exc)) from None
            result.rejected.append((lineno, str(exc)))
            continue
        if window is not None and not (window[0] <= event.timestamp < window[1]):
            result.out_of_window += 1
            continue
        result.events.append(event)
    if result.rejected:
        log.warning("skipped %d malformed line(s)", len(result.rejected))
    return result


def read_events(
    path: str | Path, window: tuple[int, int] | None = None, strict: bool = False
) -> ParsedLog:
    with open(path, encoding="utf-8") as fh:
        return parse_events(fh, window=window, strict=strict)


def write_events(events: Iterable[InteractionEvent], fh: TextIO) -> None:
    for event in events:
        fh.write(event.to_line())
        fh.write("\n")


@dataclass
class CleanInteractionSet:
    """Preprocessed, undirected interaction record.

    ``weights`` holds total counts per unordered pair; ``kind_weights`` splits
    them by kind.
    """

    events: list[InteractionEvent]
    weights: dict[Pair, int]
    kind_weights: dict[Kind, dict[Pair, int]]
    window: tuple[int, int]

    @property
    def links(self) -> set[Pair]:
        return set(self.weights)

    @property
    def nodes(self) -> set[int]:
        return {u for pair in self.weights for u in pair}

    def to_lines(self) -> list[str]:
        return [event.to_line() for event in self.events]


def preprocess(
    raw: Iterable[InteractionEvent], window: tuple[int, int] | None = None
) -> CleanInteractionSet:
    """Filter a raw log down to answered calls on reciprocated links plus all texts."""
    raw = list(raw)
    answered = [e for e in raw if not (e.kind is Kind.CALL and e.duration == 0)]

    directions: set[tuple[int, int]] = {
        (e.source, e.destination) for e in answered if e.kind is Kind.CALL
    }
    kept = [
        e
        for e in answered
        if e.kind is Kind.TEXT
        or ((e.source, e.destination) in directions and (e.destination, e.source) in directions)
    ]
    # stable: ties keep input order, so re-running on sorted output is a no-op
    n = len(kept)
    src = np.fromiter((e.source for e in kept), dtype=np.int64, count=n)
    dst = np.fromiter((e.destination for e in kept), dtype=np.int64, count=n)
    ts = np.fromiter((e.timestamp for e in kept), dtype=np.int64, count=n)
    is_call = np.fromiter((e.kind is Kind.CALL for e in kept), dtype=bool, count=n)
    order = np.lexsort((dst, src, ts))
    kept = [kept[idx] for idx in order.tolist()]

    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    kind_weights: dict[Kind, dict[Pair, int]] = {}
    for kind, mask in ((Kind.CALL, is_call), (Kind.TEXT, ~is_call)):
        pairs, counts = np.unique(np.stack([lo[mask], hi[mask]], axis=1), axis=0, return_counts=True)
        kind_weights[kind] = {(u, v): c for (u, v), c in zip(pairs.tolist(), counts.tolist())}
    weights = dict(Counter(kind_weights[Kind.CALL]) + Counter(kind_weights[Kind.TEXT]))

    if window is None:
        if kept:
            window = (kept[0].timestamp, kept[-1].timestamp + 1)
        else:
            window = (0, 0)
    dropped = len(raw) - len(kept)
    log.debug("preprocess kept %d of %d events (%d dropped)", len(kept), len(raw), dropped)
    return CleanInteractionSet(events=kept, weights=weights, kind_weights=kind_weights, window=window)
