"""Receiver-side post-processing of a simulated transmission.

received packets -> complete NALUs -> deadline filter (send order) ->
dependency pruning -> per-frame outcome.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, InputError
from .svc_model import CodedUnit, DependencyGraph, decodable_units, operating_point_graph
from .trace import NaluKind, NaluRecord, PacketRecord, ReceivedRecord

FRAME_COLUMNS = "frame_index decodable delivered_tid delivered_qid"


@dataclass(frozen=True)
class PlayoutConfig:
    deadline: float = 1.0

    def __post_init__(self):
        if not self.deadline > 0:
            raise ConfigError("deadline must be > 0", "playout.deadline")


@dataclass(frozen=True)
class FrameOutcome:
    """Decoding result of one source frame.

    ``decodable`` follows the strict rule: every unit of the frame that the
    source transmitted, and everything those units depend on, arrived in time.
    ``delivered_qid`` is the best quality that can be reconstructed; it is set
    whenever the base unit is decodable, so it can be set on a non-decodable frame
    whose enhancement was lost.  ``delivered_tid`` is the temporal level of the
    operating point seen in the frame's GOP.
    """

    frame_index: int
    decodable: bool
    delivered_tid: int
    delivered_qid: int | None
    sent: bool = True


def reassemble_nalus(received: Iterable[ReceivedRecord], packets: Sequence[PacketRecord]) -> dict:
    """``{nalu_id: delay}`` of NALUs whose fragments all arrived; delay is the worst fragment's."""
    by_id = {p.packet_id: p for p in packets}
    expected = defaultdict(int)
    for p in packets:
        expected[p.nalu_id] += 1
    got = defaultdict(int)
    delay: dict[int, float] = {}
    for r in received:
        p = by_id.get(r.packet_id)
        if p is None:
            raise InputError(f"received packet {r.packet_id} is not in the packet trace")
        got[p.nalu_id] += 1
        delay[p.nalu_id] = max(delay.get(p.nalu_id, -math.inf), r.delay)
    return {n: delay[n] for n in sorted(got) if got[n] == expected[n]}


def apply_deadline(nalus: Mapping[int, float], cfg: PlayoutConfig) -> dict:
    """Drop NALUs later than the deadline; result is in send order."""
    return {n: d for n, d in sorted(nalus.items()) if d <= cfg.deadline}


def _unit(n: NaluRecord) -> CodedUnit:
    return CodedUnit(n.frame_index, n.layer)


def prune_and_decode(surviving: Iterable[int], nalus: Sequence[NaluRecord], graph: DependencyGraph,
                     sent: Iterable[int] | None = None) -> list[FrameOutcome]:
    """Frame outcomes given the surviving NALU ids.

    ``sent`` lists the NALU ids the source actually transmitted (default: all).
    Losing the parameter set makes the whole stream undecodable.
    """
    by_id = {n.nalu_id: n for n in nalus}
    surviving = set(surviving)
    sent_ids = set(by_id) if sent is None else set(sent)
    units = {}
    for nid in surviving | sent_ids:
        n = by_id.get(nid)
        if n is None:
            raise InputError(f"NALU {nid} is not in the NALU trace")
        if n.kind is NaluKind.PARAMETER_SET:
            continue
        u = units[nid] = _unit(n)
        if u not in graph.nodes:
            raise InputError(f"NALU {nid} maps to {u}, which is not in the dependency graph")

    ps_ids = [n.nalu_id for n in nalus if n.kind is NaluKind.PARAMETER_SET]
    ps_ok = all(i in surviving for i in ps_ids)
    sent_units = {units[i] for i in sent_ids if i in units}
    received_units = {units[i] for i in surviving if i in units} if ps_ok else set()
    g = operating_point_graph(graph, sent_units)
    ok = decodable_units(received_units & sent_units, g)

    sent_by_frame = defaultdict(list)
    for u in sent_units:
        sent_by_frame[u.frame_index].append(u)
    ok_by_frame = defaultdict(list)
    for u in ok:
        ok_by_frame[u.frame_index].append(u)

    gop_size = graph.gop.gop_size if graph.gop is not None else 1
    num_frames = graph.num_frames
    base_ok = {}
    for f in range(num_frames):
        base_ok[f] = any(u.qid == 0 for u in ok_by_frame[f])
    op_tid = {}
    for f in range(num_frames):
        k = f // gop_size
        if k not in op_tid:
            frames = range(k * gop_size, min((k + 1) * gop_size, num_frames))
            tids = [u.tid for g_ in frames for u in ok_by_frame[g_] if u.qid == 0]
            op_tid[k] = max(tids, default=0)

    out = []
    for f in range(num_frames):
        units = sent_by_frame[f]
        decodable = bool(units) and ps_ok and all(u in ok for u in units)
        qid = max((u.qid for u in ok_by_frame[f]), default=None) if base_ok[f] else None
        out.append(FrameOutcome(f, decodable, op_tid[f // gop_size], qid, bool(units)))
    return out


def decodable_frame_ratio(outcomes: Sequence[FrameOutcome], total_sent_frames: int | None = None) -> float:
    """Decodable frames over frames sent by the source."""
    if total_sent_frames is None:
        total_sent_frames = sum(o.sent for o in outcomes)
    if total_sent_frames < 1:
        raise InputError("total_sent_frames must be >= 1")
    return sum(o.decodable for o in outcomes) / total_sent_frames


def write_frame_outcomes(outcomes: Iterable[FrameOutcome], dest) -> None:
    with open(dest, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(FRAME_COLUMNS.split()) + ",sent\n")
        for o in outcomes:
            q = "" if o.delivered_qid is None else o.delivered_qid
            fh.write(f"{o.frame_index},{int(o.decodable)},{o.delivered_tid},{q},{int(o.sent)}\n")


def read_frame_outcomes(source) -> list[FrameOutcome]:
    out = []
    with open(source, encoding="ascii") as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            f, dec, tid, q, sent = line.rstrip("\n").split(",")
            out.append(FrameOutcome(int(f), dec == "1", int(tid), int(q) if q else None, sent == "1"))
    return out
