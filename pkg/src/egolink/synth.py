"""Synthetic ego-network logs with planted social circles.

Each ego's neighbors are split into circles plus a few isolates. Links
among neighbors are planted with probability ``p_in`` inside a circle and
``p_out`` otherwise. Two temporal mechanisms tie same-circle legs
together: a shared activity profile (when in the week the circle is
active) and cascades (an event on one leg triggers a copy on another
same-circle leg shortly after).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from egolink.events import InteractionEvent, Kind, write_events

DAY = 86400
HOUR = 3600
# 2024-01-01 00:00 UTC, a Monday
DEFAULT_START = 1704067200

PROFILES = ("uniform", "workday", "weekend", "evening")
DISTINCT_PROFILES = ("workday", "weekend", "evening")


@dataclass
class SynthConfig:
    degrees: dict[int, int] = field(default_factory=lambda: {8: 200})
    circles: int = 2
    p_in: float = 0.8
    p_out: float = 0.05
    base_rate: float = 1.0
    cascade_prob: float = 0.0
    cascade_window: int = 1800
    profiles: str = "distinct"
    duration_mu: float = 4.5
    duration_sigma: float = 1.0
    text_fraction: float = 0.5
    isolate_fraction: float = 0.25
    isolate_rate: float = 0.3
    ego_activity_sigma: float = 0.5
    leg_sigma: float = 0.3
    days: int = 28
    start: int = DEFAULT_START
    seed: int = 0

    def validate(self) -> None:
        for name in ("p_in", "p_out", "cascade_prob", "text_fraction", "isolate_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.cascade_window <= 0:
            raise ValueError("cascade_window must be positive")
        if self.base_rate <= 0 or self.isolate_rate <= 0:
            raise ValueError("rates must be positive")
        if self.days <= 0:
            raise ValueError("days must be positive")
        if self.profiles not in ("distinct", "uniform"):
            raise ValueError(f"profiles must be 'distinct' or 'uniform', got {self.profiles!r}")
        if self.circles < 1:
            raise ValueError("need at least one circle")
        for k, count in self.degrees.items():
            if k < 2:
                raise ValueError(f"degree {k} < 2 yields no candidate pairs")
            if k < self.circles:
                raise ValueError(f"cannot split {k} neighbors into {self.circles} circles")
            if count < 0:
                raise ValueError("negative ego count")

    @property
    def window(self) -> tuple[int, int]:
        return (self.start, self.start + self.days * DAY)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["degrees"] = {str(k): v for k, v in sorted(self.degrees.items())}
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        data = dict(data)
        if "degrees" in data:
            data["degrees"] = {int(k): int(v) for k, v in data["degrees"].items()}
        return cls(**data)


@dataclass
class SynthResult:
    events: list[InteractionEvent]
    truth: list[tuple[int, int, int]]
    config: SynthConfig

    def write(self, directory: str | Path, log_name: str = "events.csv") -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / log_name, "w", encoding="utf-8") as fh:
            write_events(self.events, fh)
        with open(directory / "truth.csv", "w", encoding="utf-8") as fh:
            fh.write("ego,i,j\n")
            for ego, i, j in self.truth:
                fh.write(f"{ego},{i},{j}\n")
        (directory / "synth_manifest.json").write_text(
            json.dumps(self.config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _profile_intervals(profile: str, start: int, days: int) -> np.ndarray:
    if profile == "uniform":
        return np.array([[start, start + days * DAY]], dtype=np.int64)
    rows = []
    start_weekday = ((start // DAY) + 3) % 7
    for d in range(days):
        midnight = start + d * DAY
        weekday = (start_weekday + d) % 7
        if profile == "workday" and weekday < 5:
            rows.append((midnight + 8 * HOUR, midnight + 18 * HOUR))
        elif profile == "weekend" and weekday >= 5:
            rows.append((midnight + 9 * HOUR, midnight + 23 * HOUR))
        elif profile == "evening":
            rows.append((midnight + 18 * HOUR, midnight + 24 * HOUR))
    if not rows:
        raise ValueError(f"profile {profile!r} has no active time in a {days}-day window")
    return np.array(rows, dtype=np.int64)


def _sample_times(rng: np.random.Generator, intervals: np.ndarray, n: int) -> np.ndarray:
    lengths = intervals[:, 1] - intervals[:, 0]
    cum = np.cumsum(lengths)
    u = rng.uniform(0, cum[-1], size=n)
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, len(intervals) - 1)
    offset = u - (cum[idx] - lengths[idx])
    return intervals[idx, 0] + np.floor(offset).astype(np.int64)


def _generate_ego(
    config: SynthConfig,
    ego: int,
    neighbors: list[int],
    seed: np.random.SeedSequence,
    intervals: dict[str, np.ndarray],
) -> tuple[list[InteractionEvent], list[tuple[int, int, int]]]:
    rng = np.random.default_rng(seed)
    k = len(neighbors)
    C = config.circles
    n_iso = min(int(round(config.isolate_fraction * k)), k - C)
    order = rng.permutation(k)
    circle_of = np.full(k, -1)
    for rank, idx in enumerate(order[: k - n_iso]):
        circle_of[idx] = rank % C

    truth = []
    for a, b in combinations(range(k), 2):
        same = circle_of[a] >= 0 and circle_of[a] == circle_of[b]
        if rng.random() < (config.p_in if same else config.p_out):
            i, j = sorted((neighbors[a], neighbors[b]))
            truth.append((ego, i, j))

    def profile_of(idx: int) -> str:
        if config.profiles == "uniform" or circle_of[idx] < 0:
            return "uniform"
        return DISTINCT_PROFILES[circle_of[idx] % len(DISTINCT_PROFILES)]

    activity = rng.lognormal(0.0, config.ego_activity_sigma)
    leg_times: list[np.ndarray] = []
    leg_kinds: list[np.ndarray] = []
    for idx in range(k):
        rate = config.base_rate * config.days * activity * rng.lognormal(0.0, config.leg_sigma)
        if circle_of[idx] < 0:
            rate *= config.isolate_rate
        n = max(int(rng.poisson(rate)), 1)
        leg_times.append(_sample_times(rng, intervals[profile_of(idx)], n))
        leg_kinds.append(rng.random(n) < config.text_fraction)

    end = config.start + config.days * DAY
    if config.cascade_prob > 0:
        extra_t: list[list[int]] = [[] for _ in range(k)]
        extra_k: list[list[bool]] = [[] for _ in range(k)]
        for idx in range(k):
            c = circle_of[idx]
            if c < 0:
                continue
            mates = [m for m in range(k) if m != idx and circle_of[m] == c]
            if not mates:
                continue
            fire = rng.random(len(leg_times[idx])) < config.cascade_prob
            for t, is_text in zip(leg_times[idx][fire], leg_kinds[idx][fire]):
                target = mates[rng.integers(len(mates))]
                t2 = int(t) + int(rng.integers(0, config.cascade_window + 1))
                if t2 < end:
                    extra_t[target].append(t2)
                    extra_k[target].append(bool(is_text))
        for idx in range(k):
            if extra_t[idx]:
                leg_times[idx] = np.concatenate([leg_times[idx], np.array(extra_t[idx], dtype=np.int64)])
                leg_kinds[idx] = np.concatenate([leg_kinds[idx], np.array(extra_k[idx], dtype=bool)])

    cols: list[list[np.ndarray]] = [[], [], [], [], []]
    for idx, nb in enumerate(neighbors):
        times, is_text = leg_times[idx], leg_kinds[idx]
        outgoing = rng.random(len(times)) < 0.5
        calls = np.flatnonzero(~is_text)
        if len(calls) >= 2 and (outgoing[calls].all() or not outgoing[calls].any()):
            flip = calls[rng.integers(len(calls))]
            outgoing[flip] = not outgoing[flip]
        elif len(calls) == 1:
            # lone call: add the reciprocal one so the leg survives preprocessing
            extra = _sample_times(rng, intervals[profile_of(idx)], 1)
            times = np.concatenate([times, extra])
            is_text = np.concatenate([is_text, [False]])
            outgoing = np.concatenate([outgoing, [not outgoing[calls[0]]]])
        for col, values in zip(
            cols,
            (
                times,
                np.where(outgoing, ego, nb),
                np.where(outgoing, nb, ego),
                is_text,
                _durations(rng, config, len(times)),
            ),
        ):
            col.append(values)
    times, src, dst, is_text, dur = (np.concatenate(c) for c in cols)
    order = np.lexsort((is_text, dst, src, times))
    events = [
        InteractionEvent(Kind.TEXT, s, d, t) if text else InteractionEvent(Kind.CALL, s, d, t, du)
        for t, s, d, text, du in zip(
            times[order].tolist(),
            src[order].tolist(),
            dst[order].tolist(),
            is_text[order].tolist(),
            dur[order].tolist(),
        )
    ]
    return events, truth


def _durations(rng: np.random.Generator, config: SynthConfig, n: int) -> np.ndarray:
    raw = np.rint(rng.lognormal(config.duration_mu, config.duration_sigma, size=n))
    return np.maximum(raw, 1).astype(np.int64)


def generate(config: SynthConfig) -> SynthResult:
    """Synthetic raw log plus planted truth; deterministic given ``config.seed``.

    Egos are numbered from 1; neighbor ids are unique across egos so every
    neighbor has degree 1 and never becomes an ego itself.
    """
    config.validate()
    plan = [k for k in sorted(config.degrees) for _ in range(config.degrees[k])]
    seeds = np.random.SeedSequence(config.seed).spawn(len(plan))
    intervals = {p: _profile_intervals(p, config.start, config.days) for p in PROFILES}

    events: list[InteractionEvent] = []
    truth: list[tuple[int, int, int]] = []
    next_id = len(plan) + 1
    for n, (k, sub) in enumerate(zip(plan, seeds)):
        ego = n + 1
        neighbors = list(range(next_id, next_id + k))
        next_id += k
        ego_events, ego_truth = _generate_ego(config, ego, neighbors, sub, intervals)
        events.extend(ego_events)
        truth.extend(ego_truth)
    return SynthResult(events, truth, config)


def read_truth(path: str | Path) -> list[tuple[int, int, int]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "ego,i,j":
            raise ValueError(f"unexpected truth header {header!r}")
        for line in fh:
            if line.strip():
                ego, i, j = (int(x) for x in line.split(","))
                rows.append((ego, i, j))
    return rows
