"""Source-side rate adaptation: bandwidth estimation, layer selection, DTQ filtering."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError
from .netsim import LinkView
from .svc_model import LayerId
from .trace import BitrateLadder, PacketRecord, fmt_float

SELECTION_LOG_COLUMNS = "time estimate_bps did tid qid bitrate_kbps"


class EstimatorMode(str, enum.Enum):
    ORACLE = "oracle"
    THROUGHPUT_WINDOW = "throughput-window"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EstimatorConfig:
    period: float = 1.0
    mode: EstimatorMode = EstimatorMode.ORACLE
    window: float = 2.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", EstimatorMode(self.mode))
        except ValueError:
            raise ConfigError(f"unknown estimator mode {self.mode!r}", "estimator.mode") from None
        if not self.period > 0:
            raise ConfigError("period must be > 0", "estimator.period")
        if self.mode is EstimatorMode.THROUGHPUT_WINDOW and self.window < self.period:
            raise ConfigError("window must be >= period", "estimator.window")


@dataclass(frozen=True)
class Selection:
    time: float
    estimate_bps: float
    chosen_layer: LayerId
    chosen_bitrate_kbps: float


def estimate_bandwidth(t: float, view: LinkView, cfg: EstimatorConfig) -> float:
    if cfg.mode is EstimatorMode.ORACLE:
        return view.schedule.rate_at(t)
    return view.delivered_bits(t - cfg.window, t) / cfg.window


def select_layer(ladder: BitrateLadder, estimate: float, time: float = 0.0) -> Selection:
    """Highest ladder row whose rate does not exceed ``estimate``; the base row otherwise."""
    if ladder is None or len(ladder) == 0:
        raise ConfigError("empty ladder", "ladder")
    chosen = ladder.lowest
    for row in ladder:
        if row.bitrate_kbps * 1000.0 <= estimate:
            chosen = row
        else:
            break
    return Selection(time, estimate, chosen.layer, chosen.bitrate_kbps)


def filter_packet(pkt: PacketRecord, current: Selection) -> bool:
    """True to transmit, False to drop at the source."""
    if pkt.frame_index < 0:  # parameter sets
        return True
    return pkt.layer.within(current.chosen_layer)


class AdaptationUnit:
    """Stateful adapter hook for :func:`svcsim.netsim.run_link`.

    The estimate is refreshed at ``start_time + k * period``; a packet uses the
    selection in force when the first fragment of its NALU reaches the source queue.
    """

    def __init__(self, ladder: BitrateLadder, cfg: EstimatorConfig = EstimatorConfig(),
                 start_time: float = 0.0):
        self.ladder = ladder
        self.cfg = cfg
        self.start_time = start_time
        self.log: list[Selection] = []
        self.current: Selection | None = None
        self._next_tick = 0
        self._nalu_decision: dict[int, bool] = {}

    def _advance(self, now: float, view: LinkView) -> None:
        while True:
            t = self.start_time + self._next_tick * self.cfg.period
            if t > now + 1e-12:
                break
            est = estimate_bandwidth(t, view, self.cfg)
            self.current = select_layer(self.ladder, est, t)
            self.log.append(self.current)
            self._next_tick += 1

    def __call__(self, pkt: PacketRecord, now: float, view: LinkView) -> bool:
        self._advance(now, view)
        decision = self._nalu_decision.get(pkt.nalu_id)
        if decision is None:
            if self.current is None:
                decision = pkt.frame_index < 0 or pkt.layer.qid == 0 and pkt.layer.tid == 0
            else:
                decision = filter_packet(pkt, self.current)
            self._nalu_decision[pkt.nalu_id] = decision
        return decision

    def finish(self, until: float, view: LinkView) -> None:
        """Extend the selection log to ``until`` (no packets are affected)."""
        self._advance(until, view)

    def write_log(self, dest) -> None:
        write_selection_log(self.log, dest)


def write_selection_log(log, dest) -> None:
    with open(dest, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(SELECTION_LOG_COLUMNS.split()) + "\n")
        for s in log:
            fh.write(f"{fmt_float(s.time)},{fmt_float(s.estimate_bps)},{s.chosen_layer.did},"
                     f"{s.chosen_layer.tid},{s.chosen_layer.qid},{fmt_float(s.chosen_bitrate_kbps)}\n")


def read_selection_log(source) -> list[Selection]:
    out = []
    with open(source, encoding="ascii") as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            t, est, d, tid, q, kbps = line.strip().split(",")
            out.append(Selection(float(t), float(est), LayerId(int(d), int(tid), int(q)), float(kbps)))
    return out


def offered_rate_by_plateau(packets, transmitted_ids, schedule, until):
    """Offered bits per second on each schedule plateau: ``[(start, end, bps, offered_bps)]``."""
    out = []
    for a, b, bw in schedule.plateaus(until):
        bits = sum(p.size_bytes * 8 for p in packets
                   if p.packet_id in transmitted_ids and a <= p.send_time < b)
        out.append((a, b, bw, bits / (b - a) if b > a else math.nan))
    return out
