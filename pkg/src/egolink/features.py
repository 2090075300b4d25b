"""Per-pair scores for the neighbors of an ego.

All scores are symmetric in ``(i, j)`` and computed from the ego-neighbor
series only. Undefined values are represented by ``None`` in the scalar
functions and by ``NaN`` in score tables.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from itertools import combinations
from typing import Callable, Iterable, Sequence, TextIO
from zoneinfo import ZoneInfo

import numpy as np

from egolink.ego import CandidatePair, EgoNetwork, enumerate_pairs
from egolink.events import KINDS, Kind

F_MIN = 1e-9
HOUR = 3600
DAY = 24 * HOUR
WEEK = 7 * DAY
DEFAULT_D_GRID = (HOUR, 3 * HOUR, DAY, WEEK)

# --------------------------------------------------------------------------
# static benchmarks


def benchmark_scores(ego: EgoNetwork, i: int, j: int) -> tuple[float, float, float, float, float]:
    """The five weight-only scores s1..s5 using total (call + text) weights."""
    wi, wj = ego.weight[i], ego.weight[j]
    product = wi * wj
    return (float(product), float(wi + wj), float(max(wi, wj)), product / ego.k, product / ego.total_weight)


# --------------------------------------------------------------------------
# link strength


def duration_score(ego: EgoNetwork, i: int, j: int) -> float | None:
    total = sum(ego.call_duration(n) for n in ego.neighbors)
    if total == 0:
        return None
    return ego.call_duration(i) * ego.call_duration(j) / total**2


def fano_factor(times: np.ndarray) -> float:
    """Variance-to-mean ratio of the inter-event gaps (population variance)."""
    gaps = np.diff(np.asarray(times, dtype=np.float64))
    if gaps.size < 2:
        raise ValueError("need at least two inter-event gaps")
    mean = gaps.mean()
    if mean == 0.0:
        # all events share one timestamp: treated as perfectly regular
        return 0.0
    return float(gaps.var() / mean)


def regularity(ego: EgoNetwork, i: int, kind: Kind, f_min: float = F_MIN) -> float | None:
    times = ego.series(i, kind)
    if len(times) < 3:
        return None
    return ego.kind_weight[kind][i] / max(fano_factor(times), f_min)


def regularity_score(ego: EgoNetwork, i: int, j: int, kind: Kind, f_min: float = F_MIN) -> float | None:
    gi = regularity(ego, i, kind, f_min)
    if gi is None:
        return None
    gj = regularity(ego, j, kind, f_min)
    if gj is None:
        return None
    return gi * gj


# --------------------------------------------------------------------------
# temporal profiles


class LocalClock:
    """Maps epoch seconds to local weekday (Mon=0) and seconds since midnight."""

    # every real UTC offset is a multiple of 15 minutes
    _BUCKET = 900

    def __init__(self, tz: str = "UTC") -> None:
        self.tz = tz
        zone = timezone.utc if tz.upper() == "UTC" else ZoneInfo(tz)

        @lru_cache(maxsize=None)
        def offset(bucket: int) -> int:
            moment = datetime.fromtimestamp(bucket * self._BUCKET, tz=zone)
            return int(moment.utcoffset().total_seconds())

        self._offset = offset

    def local(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        times = np.asarray(times, dtype=np.int64)
        buckets = times // self._BUCKET
        uniq, inverse = np.unique(buckets, return_inverse=True)
        offsets = np.array([self._offset(int(b)) for b in uniq], dtype=np.int64)
        local = times + offsets[inverse].reshape(times.shape)
        days = local // DAY
        # 1970-01-01 was a Thursday
        weekday = (days + 3) % 7
        return weekday, local - days * DAY


@dataclass(frozen=True)
class TimelinePartition:
    """Two-set split of the timeline; ``rule`` returns True for the A side."""

    id: str
    rule: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def in_a(self, times: np.ndarray, clock: LocalClock) -> np.ndarray:
        weekday, seconds = clock.local(times)
        return np.asarray(self.rule(weekday, seconds), dtype=bool)

    def side(self, timestamp: int, clock: LocalClock) -> str:
        return "A" if self.in_a(np.array([timestamp]), clock)[0] else "B"


def builtin_partitions() -> dict[str, TimelinePartition]:
    """Weekday/weekend, office hours/rest, and day/evening splits.

    Boundaries are half-open in local time: ``[Mon 00:00, Sat 00:00)``,
    ``[08:00, 18:00)`` and ``[00:00, 18:00)`` are the A sides.
    """
    return {
        "pr1": TimelinePartition("pr1", lambda wd, sec: wd < 5),
        "pr2": TimelinePartition("pr2", lambda wd, sec: (sec >= 8 * HOUR) & (sec < 18 * HOUR)),
        "pr3": TimelinePartition("pr3", lambda wd, sec: sec < 18 * HOUR),
    }


WHOLE_TIMELINE = TimelinePartition("all", lambda wd, sec: np.ones_like(wd, dtype=bool))


def profile_weights(
    ego: EgoNetwork, i: int, partition: TimelinePartition, kind: Kind, clock: LocalClock
) -> tuple[int, int]:
    times = ego.series(i, kind)
    n_a = int(partition.in_a(times, clock).sum()) if len(times) else 0
    return n_a, len(times) - n_a


def profile_score(
    ego: EgoNetwork,
    i: int,
    j: int,
    partition: TimelinePartition,
    kind: Kind,
    clock: LocalClock | None = None,
) -> float:
    clock = clock or LocalClock()
    ai, bi = profile_weights(ego, i, partition, kind, clock)
    aj, bj = profile_weights(ego, j, partition, kind, clock)
    return (ai * aj + bi * bj) / ego.total_weight


# --------------------------------------------------------------------------
# elapsed time


def count_within(a: Sequence[int], b: Sequence[int], d: int) -> int:
    """Number of cross pairs ``(s, t)``, s from ``a``, t from ``b``, with ``|s - t| <= d``.

    Both inputs must be sorted. Two-pointer sweep: for each ``s`` the window
    ``[s - d, s + d]`` over ``b`` only moves forward.
    """
    count = 0
    lo = hi = 0
    nb = len(b)
    for s in a:
        while lo < nb and b[lo] < s - d:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < nb and b[hi] <= s + d:
            hi += 1
        count += hi - lo
    return count


def count_within_many(a: np.ndarray, b: np.ndarray, ds: np.ndarray) -> np.ndarray:
    """:func:`count_within` for several ``d`` at once.

    The sweep's pointers for element ``s`` sit at ``searchsorted(b, s - d,
    'left')`` and ``searchsorted(b, s + d, 'right')``; they are computed here
    for all ``s`` and ``d`` in bulk.
    """
    if len(a) == 0 or len(b) == 0:
        return np.zeros(len(ds), dtype=np.int64)
    lo = np.searchsorted(b, a[None, :] - ds[:, None], side="left")
    hi = np.searchsorted(b, a[None, :] + ds[:, None], side="right")
    return (hi - lo).sum(axis=1)


def elapsed_time_score(ego: EgoNetwork, i: int, j: int, d: int, kind: Kind) -> float:
    if d <= 0:
        raise ValueError(f"d must be positive, got {d}")
    ti = ego.series(i, kind).tolist()
    tj = ego.series(j, kind).tolist()
    return count_within(ti, tj, d) / ego.total_weight


# --------------------------------------------------------------------------
# score catalogue

_UNITS = {"s": 1, "m": 60, "h": HOUR, "d": DAY, "w": WEEK}


def parse_duration(text: str) -> int:
    m = re.fullmatch(r"\s*(\d+)\s*([smhdw]?)\s*", text)
    if not m:
        raise ValueError(f"bad duration {text!r}")
    value = int(m.group(1)) * _UNITS[m.group(2) or "s"]
    if value <= 0:
        raise ValueError(f"duration must be positive: {text!r}")
    return value


def format_duration(seconds: int) -> str:
    if seconds % HOUR == 0:
        return f"{seconds // HOUR}h"
    if seconds % 60 == 0:
        return f"{seconds // 60}m"
    return f"{seconds}s"


_SCORE_RE = re.compile(r"^(?:(s[1-5])|(dur)_call|(reg)_(call|text)|(pr[123])_(call|text)|d(\d+[smhdw]?)_(call|text))$")


@dataclass(frozen=True)
class ScoreId:
    family: str  # bench | dur | reg | pr | d
    name: str
    kind: Kind | None = None
    param: str | int | None = None


def parse_score_id(score_id: str) -> ScoreId:
    m = _SCORE_RE.match(score_id)
    if not m:
        raise ValueError(f"unknown score id {score_id!r}")
    bench, dur, reg, reg_kind, pr, pr_kind, d, d_kind = m.groups()
    if bench:
        return ScoreId("bench", score_id, None, int(bench[1]))
    if dur:
        return ScoreId("dur", score_id, Kind.CALL)
    if reg:
        return ScoreId("reg", score_id, Kind(reg_kind))
    if pr:
        return ScoreId("pr", score_id, Kind(pr_kind), pr)
    return ScoreId("d", score_id, Kind(d_kind), parse_duration(d))


def catalogue(d_grid: Iterable[int] = DEFAULT_D_GRID) -> list[str]:
    """The 18-score catalogue (for the default grid) in canonical order."""
    d_grid = list(d_grid)
    ids = ["s5", "dur_call", "reg_call", "reg_text"]
    for kind in KINDS:
        ids += [f"d{format_duration(d)}_{kind.value}" for d in d_grid]
    for kind in KINDS:
        ids += [f"pr{n}_{kind.value}" for n in (1, 2, 3)]
    return ids


BENCHMARKS = ["s1", "s2", "s3", "s4", "s5"]


@dataclass
class ScoreParams:
    tz: str = "UTC"
    f_min: float = F_MIN
    partitions: dict[str, TimelinePartition] = field(default_factory=builtin_partitions)

    def __post_init__(self) -> None:
        self.clock = LocalClock(self.tz)


def _leg_profiles(
    ego: EgoNetwork, kind: Kind, partitions: Sequence[TimelinePartition], clock: LocalClock
) -> dict[str, dict[int, tuple[int, int]]]:
    series = [ego.series(n, kind) for n in ego.neighbors]
    sizes = np.array([len(s) for s in series])
    out: dict[str, dict[int, tuple[int, int]]] = {}
    if sizes.sum() == 0:
        return {p.id: {n: (0, 0) for n in ego.neighbors} for p in partitions}
    weekday, seconds = clock.local(np.concatenate(series))
    owner = np.repeat(np.arange(len(series)), sizes)
    for p in partitions:
        in_a = np.bincount(owner, weights=np.asarray(p.rule(weekday, seconds), dtype=bool), minlength=len(series))
        out[p.id] = {n: (int(a), int(total - a)) for n, a, total in zip(ego.neighbors, in_a, sizes)}
    return out


def score_ego(ego: EgoNetwork, score_ids: Sequence[str], params: ScoreParams | None = None) -> dict[str, list[float]]:
    """Scores of every neighbor pair of one ego, in :func:`enumerate_pairs` order."""
    params = params or ScoreParams()
    clock = params.clock
    specs = [parse_score_id(s) for s in score_ids]
    pairs = list(combinations(ego.neighbors, 2))
    W = ego.total_weight
    out: dict[str, list[float]] = {}

    durations = {n: ego.call_duration(n) for n in ego.neighbors}
    dur_total = sum(durations.values())
    gamma_cache: dict[Kind, dict[int, float | None]] = {}
    profile_cache: dict[Kind, dict[str, dict[int, tuple[int, int]]]] = {}
    elapsed: dict[Kind, dict[int, int]] = {}
    for kind in KINDS:
        grid = sorted({spec.param for spec in specs if spec.family == "d" and spec.kind is kind})
        if grid:
            ds = np.array(grid, dtype=np.int64)
            counts = np.array(
                [count_within_many(ego.series(i, kind), ego.series(j, kind), ds) for i, j in pairs]
            ).reshape(len(pairs), len(grid))
            elapsed[kind] = {d: counts[:, col].tolist() for col, d in enumerate(grid)}

    for spec in specs:
        values: list[float] = []
        if spec.family == "bench":
            idx = spec.param - 1
            values = [benchmark_scores(ego, i, j)[idx] for i, j in pairs]
        elif spec.family == "dur":
            if dur_total == 0:
                values = [math.nan] * len(pairs)
            else:
                values = [durations[i] * durations[j] / dur_total**2 for i, j in pairs]
        elif spec.family == "reg":
            if spec.kind not in gamma_cache:
                gamma_cache[spec.kind] = {n: regularity(ego, n, spec.kind, params.f_min) for n in ego.neighbors}
            gamma = gamma_cache[spec.kind]
            values = [
                math.nan if gamma[i] is None or gamma[j] is None else gamma[i] * gamma[j] for i, j in pairs
            ]
        elif spec.family == "pr":
            if spec.kind not in profile_cache:
                wanted = [params.partitions[p.param] for p in specs if p.family == "pr" and p.kind is spec.kind]
                profile_cache[spec.kind] = _leg_profiles(ego, spec.kind, wanted, clock)
            w = profile_cache[spec.kind][spec.param]
            values = [(w[i][0] * w[j][0] + w[i][1] * w[j][1]) / W for i, j in pairs]
        else:
            values = [c / W for c in elapsed[spec.kind][spec.param]]
        out[spec.name] = values
    return out


@dataclass
class ScoreTable:
    """Scores of all candidate pairs of one (degree class, split set)."""

    pairs: list[CandidatePair]
    values: dict[str, np.ndarray]

    @property
    def score_ids(self) -> list[str]:
        return list(self.values)

    @property
    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.pairs], dtype=bool)

    def __len__(self) -> int:
        return len(self.pairs)

    def write_wide(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ego", "i", "j", "label", *self.values])
        columns = list(self.values.values())
        for row, pair in enumerate(self.pairs):
            cells = ["" if math.isnan(col[row]) else repr(float(col[row])) for col in columns]
            writer.writerow([pair.ego, pair.i, pair.j, int(pair.label), *cells])

    def write_long(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ego", "i", "j", "label", "score_id", "value"])
        for score_id, col in self.values.items():
            for pair, value in zip(self.pairs, col):
                if not math.isnan(value):
                    writer.writerow([pair.ego, pair.i, pair.j, int(pair.label), score_id, repr(float(value))])

    @classmethod
    def read_wide(cls, fh: TextIO) -> "ScoreTable":
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["ego", "i", "j", "label"]:
            raise ValueError(f"unexpected score table header {header[:4]}")
        ids = header[4:]
        pairs, cols = [], [[] for _ in ids]
        for row in reader:
            pairs.append(CandidatePair(int(row[0]), int(row[1]), int(row[2]), row[3] == "1"))
            for col, cell in zip(cols, row[4:]):
                col.append(float(cell) if cell else math.nan)
        return cls(pairs, {sid: np.array(col, dtype=np.float64) for sid, col in zip(ids, cols)})


def compute_score_table(
    egos: Iterable[EgoNetwork], score_ids: Sequence[str], params: ScoreParams | None = None
) -> ScoreTable:
    params = params or ScoreParams()
    egos = list(egos)
    for sid in score_ids:
        parse_score_id(sid)
    columns: dict[str, list[float]] = {sid: [] for sid in score_ids}
    for ego in egos:
        for sid, vals in score_ego(ego, score_ids, params).items():
            columns[sid].extend(vals)
    return ScoreTable(enumerate_pairs(egos), {sid: np.array(v, dtype=np.float64) for sid, v in columns.items()})
