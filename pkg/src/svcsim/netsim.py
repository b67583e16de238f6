"""Discrete-event model of a single bottleneck link.

The link is a drop-tail FIFO whose service rate follows a piecewise-constant
available-bandwidth schedule.  A packet's transmission time integrates the rate
across step boundaries; delivery adds a fixed propagation delay.
"""

from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, InputError
from .trace import DEFAULT_MTU, PacketRecord, ReceivedRecord, fmt_float

LINK_STATS_COLUMNS = "t_bin throughput_bps queue_bytes drops_congestion drops_filtered"


@dataclass(frozen=True)
class BandwidthSchedule:
    """Piecewise-constant rate: ``steps`` is a sequence of ``(start_time, bps)``."""

    steps: tuple

    def __post_init__(self):
        steps = tuple((float(t), float(r)) for t, r in self.steps)
        if not steps:
            raise ConfigError("schedule needs at least one step", "link.schedule")
        for i, (t, r) in enumerate(steps):
            if r <= 0 or not math.isfinite(r):
                raise ConfigError("available_bps must be positive", f"link.schedule[{i}]")
            if i and t <= steps[i - 1][0]:
                raise ConfigError("start times must be strictly increasing", f"link.schedule[{i}]")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "_starts", [t for t, _ in steps])

    @property
    def start(self) -> float:
        return self.steps[0][0]

    @property
    def max_rate(self) -> float:
        return max(r for _, r in self.steps)

    def _index(self, t: float) -> int:
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            raise ValueError(f"time {t} precedes the schedule start {self.start}")
        return i

    def rate_at(self, t: float) -> float:
        return self.steps[self._index(t)][1]

    def integrate(self, a: float, b: float) -> float:
        """Bits the link can carry over ``[a, b]``."""
        if b <= a:
            return 0.0
        total = 0.0
        i = self._index(a)
        t = a
        while t < b:
            end = self.steps[i + 1][0] if i + 1 < len(self.steps) else math.inf
            seg_end = min(end, b)
            total += (seg_end - t) * self.steps[i][1]
            t = seg_end
            i += 1
        return total

    def finish_time(self, start: float, bits: float) -> float:
        """Time at which ``bits`` bits started at ``start`` are fully serialized."""
        i = self._index(start)
        t = start
        left = float(bits)
        while True:
            rate = self.steps[i][1]
            end = self.steps[i + 1][0] if i + 1 < len(self.steps) else math.inf
            span = end - t
            if left <= rate * span:
                return t + left / rate
            left -= rate * span
            t = end
            i += 1

    def plateaus(self, until: float) -> list[tuple[float, float, float]]:
        """``(start, end, bps)`` intervals, the last one closed at ``until``."""
        out = []
        for i, (t, r) in enumerate(self.steps):
            end = self.steps[i + 1][0] if i + 1 < len(self.steps) else until
            if t < until:
                out.append((t, min(end, until), r))
        return out


def schedule_at(schedule: BandwidthSchedule, t: float) -> float:
    return schedule.rate_at(t)


# Available bandwidth between source and destination (bps), 4 s plateaus from
# t=10 s.  Fixed points: 1.5 Mbps at the start, the 0.2 Mbps floor over 22-30 s,
# the ascent from 42 s back to 1.5 Mbps.  The other plateau values are artifact
# defaults; the ascent values sit just above the Q1 rungs of the default ladder.
DEFAULT_DESCENT = (1.5e6, 1.0e6, 0.6e6, 0.2e6, 0.2e6, 0.45e6, 0.45e6, 0.45e6)
DEFAULT_ASCENT = (0.365e6, 0.68e6, 0.68e6, 0.68e6, 1.5e6, 1.5e6, 1.5e6, 1.5e6)
DEFAULT_QUEUE_PACKETS = 10


def default_schedule(start: float = 10.0, step: float = 4.0) -> BandwidthSchedule:
    values = DEFAULT_DESCENT + DEFAULT_ASCENT
    return BandwidthSchedule(tuple((start + i * step, v) for i, v in enumerate(values)))


@dataclass(frozen=True)
class LinkConfig:
    schedule: BandwidthSchedule
    queue_capacity_bytes: int = DEFAULT_QUEUE_PACKETS * DEFAULT_MTU
    propagation_delay: float = 0.010

    def __post_init__(self):
        if self.queue_capacity_bytes < DEFAULT_MTU:
            raise ConfigError("queue_capacity_bytes must be >= MTU", "link.queue_capacity_bytes")
        if self.propagation_delay < 0:
            raise ConfigError("propagation_delay must be >= 0", "link.propagation_delay")


@dataclass
class LinkStats:
    bin_width: float
    t0: float
    throughput_bps: np.ndarray
    queue_bytes: np.ndarray
    drops_congestion: np.ndarray
    drops_filtered: np.ndarray
    sent: int = 0
    delivered: int = 0
    dropped_congestion: int = 0
    filtered: int = 0
    mean_queue_bytes: float = 0.0
    filtered_ids: frozenset = field(default_factory=frozenset)
    dropped_ids: frozenset = field(default_factory=frozenset)

    @property
    def bin_starts(self) -> np.ndarray:
        return self.t0 + self.bin_width * np.arange(len(self.throughput_bps))

    def write_csv(self, dest) -> None:
        with open(dest, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(LINK_STATS_COLUMNS.split()) + "\n")
            for t, thr, q, dc, df in zip(self.bin_starts, self.throughput_bps, self.queue_bytes,
                                         self.drops_congestion, self.drops_filtered):
                fh.write(f"{fmt_float(t)},{fmt_float(thr)},{fmt_float(q)},{int(dc)},{int(df)}\n")


class LinkView:
    """What an adaptation hook may observe about the link at decision time."""

    def __init__(self, schedule: BandwidthSchedule):
        self.schedule = schedule
        self._done_times: list[float] = []
        self._done_bits: list[float] = []
        self._cum = [0.0]

    def _record(self, t: float, bits: float) -> None:
        self._done_times.append(t)
        self._done_bits.append(bits)
        self._cum.append(self._cum[-1] + bits)

    def delivered_bits(self, a: float, b: float) -> float:
        """Bits whose transmission completed in ``(a, b]`` as of now."""
        lo = bisect.bisect_right(self._done_times, a)
        hi = bisect.bisect_right(self._done_times, b)
        return self._cum[hi] - self._cum[lo]


Adapter = Callable[[PacketRecord, float, LinkView], bool]


class _Bins:
    def __init__(self, t0, width, nbins):
        self.t0, self.width = t0, width
        self.thr = np.zeros(nbins)
        self.qarea = np.zeros(nbins)
        self.dc = np.zeros(nbins, dtype=np.int64)
        self.df = np.zeros(nbins, dtype=np.int64)

    def index(self, t):
        return min(max(int((t - self.t0) // self.width), 0), len(self.thr) - 1)

    def add_area(self, a, b, level):
        if b <= a or level == 0:
            return
        i = self.index(a)
        while a < b:
            edge = self.t0 + (i + 1) * self.width
            seg = min(b, edge) if i < len(self.thr) - 1 else b
            self.qarea[i] += (seg - a) * level
            a = seg
            i += 1


def run_link(packets: Sequence[PacketRecord], link: LinkConfig, adapter: Adapter | None = None,
             bin_width: float = 1.0, horizon: float | None = None):
    """Push ``packets`` through the bottleneck.

    Returns ``(received, stats)``; dropped or source-filtered packets have no
    received record.  ``adapter(pkt, now, view)`` returns False to filter a
    packet at the source.
    """
    sched = link.schedule
    for a, b in zip(packets, packets[1:]):
        if b.send_time < a.send_time:
            raise InputError(f"packets not sorted by send_time at packet {b.packet_id}")
    if packets and packets[0].send_time < sched.start:
        raise InputError("first packet precedes the bandwidth schedule start")

    t0 = sched.start
    last_send = packets[-1].send_time if packets else t0
    # enough bins to drain a full queue at the slowest rate
    drain = link.queue_capacity_bytes * 8.0 / min(r for _, r in sched.steps)
    end = horizon if horizon is not None else last_send + drain + link.propagation_delay + 1.0
    nbins = max(1, math.ceil((end - t0) / bin_width))
    bins = _Bins(t0, bin_width, nbins)
    view = LinkView(sched)

    ARRIVAL, DONE = 1, 0  # completions first on ties: frees the server/queue
    events = [(p.send_time, ARRIVAL, p.packet_id, i) for i, p in enumerate(packets)]
    heapq.heapify(events)

    queue: list[int] = []
    qhead = 0
    qbytes = 0
    busy = False
    last_t = t0
    received = []
    filtered, dropped = [], []

    def start_service(now, idx):
        nonlocal busy
        busy = True
        p = packets[idx]
        heapq.heappush(events, (sched.finish_time(now, p.size_bytes * 8), DONE, p.packet_id, idx))

    while events:
        now, kind, pid, idx = heapq.heappop(events)
        bins.add_area(last_t, now, qbytes)
        last_t = now
        p = packets[idx]
        if kind == DONE:
            bits = p.size_bytes * 8
            view._record(now, bits)
            bins.thr[bins.index(now)] += bits
            arrival = now + link.propagation_delay
            received.append(ReceivedRecord(p.packet_id, arrival, arrival - p.send_time))
            busy = False
            if qhead < len(queue):
                nxt = queue[qhead]
                qhead += 1
                qbytes -= packets[nxt].size_bytes
                start_service(now, nxt)
            continue
        if adapter is not None and not adapter(p, now, view):
            filtered.append(pid)
            bins.df[bins.index(now)] += 1
            continue
        if not busy:
            start_service(now, idx)
        elif qbytes + p.size_bytes <= link.queue_capacity_bytes:
            queue.append(idx)
            qbytes += p.size_bytes
        else:
            dropped.append(pid)
            bins.dc[bins.index(now)] += 1

    span = max(last_t - t0, 0.0)
    stats = LinkStats(
        bin_width=bin_width,
        t0=t0,
        throughput_bps=bins.thr / bin_width,
        queue_bytes=bins.qarea / bin_width,
        drops_congestion=bins.dc,
        drops_filtered=bins.df,
        sent=len(packets),
        delivered=len(received),
        dropped_congestion=len(dropped),
        filtered=len(filtered),
        mean_queue_bytes=float(bins.qarea.sum() / span) if span > 0 else 0.0,
        filtered_ids=frozenset(filtered),
        dropped_ids=frozenset(dropped),
    )
    return received, stats
