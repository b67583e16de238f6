"""Scenario configuration and the end-to-end CGS/FGS/MGS comparison."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import adaptation, metrics, netsim, receiver, svc_model, trace
from .adaptation import AdaptationUnit, EstimatorConfig
from .errors import ConfigError
from .netsim import BandwidthSchedule, LinkConfig, LinkStats
from .receiver import PlayoutConfig
from .svc_model import GopConfig, LayerId, Scheme
from .trace import BitrateLadder, LadderRow

log = logging.getLogger(__name__)

# Per-cell increments (kbps) of the default 3 temporal x 2 quality encoding and
# the encoded PSNR of each cumulative operating point.  Artifact defaults: they
# place the full ladder between the schedule's extremes.
DEFAULT_CELL_KBPS = {
    (0, 0): 230.0, (1, 0): 200.0, (2, 0): 503.0,
    (0, 1): 115.0, (1, 1): 100.0, (2, 1): 252.0,
}
DEFAULT_LADDER_PSNR = (20.0, 23.0, 26.0, 28.5, 31.0, 34.0)


def ladder_from_cells(cells: dict, psnrs, base_fps: float = 30.0, temporal_levels: int = 3) -> BitrateLadder:
    """Build the cumulative ladder (sorted by rate) from per-cell increments."""
    nq = 1 + max(q for _, q in cells)
    boxes = []
    for t in range(temporal_levels):
        for q in range(nq):
            rate = sum(v for (tt, qq), v in cells.items() if tt <= t and qq <= q)
            boxes.append((rate, t, q))
    boxes.sort()
    if len(psnrs) != len(boxes):
        raise ConfigError(f"need {len(boxes)} PSNR values, got {len(psnrs)}", "ladder")
    rows = []
    for i, ((rate, t, q), p) in enumerate(zip(boxes, psnrs)):
        fps = base_fps / 2 ** (temporal_levels - 1 - t)
        rows.append(LadderRow(i, LayerId(0, t, q), fps, round(rate, 3), p))
    return BitrateLadder(tuple(rows))


def default_ladder() -> BitrateLadder:
    return ladder_from_cells(DEFAULT_CELL_KBPS, DEFAULT_LADDER_PSNR)


@dataclass(frozen=True)
class ScenarioConfig:
    gop: GopConfig = field(default_factory=lambda: GopConfig(4, 2, Scheme.MGS, 4, 32))
    num_frames: int = 1920
    frame_rate: float = 30.0
    start_time: float = 10.0
    ladder: BitrateLadder = field(default_factory=default_ladder)
    link: LinkConfig = field(default_factory=lambda: LinkConfig(netsim.default_schedule()))
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    playout: PlayoutConfig = field(default_factory=PlayoutConfig)
    seed: int = 1
    schemes: tuple = (Scheme.CGS, Scheme.FGS, Scheme.MGS)
    mtu: int = trace.DEFAULT_MTU
    header_overhead: int = trace.DEFAULT_HEADER_OVERHEAD
    nondecodable_psnr: float = metrics.NONDECODABLE_PSNR_DB
    size_sigma: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) for s in self.schemes))
        if not self.schemes:
            raise ConfigError("at least one scheme is required", "schemes")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("duplicate scheme", "schemes")
        if not isinstance(self.num_frames, int) or self.num_frames < 1:
            raise ConfigError("must be a positive integer", "num_frames")
        if not self.frame_rate > 0:
            raise ConfigError("must be positive", "frame_rate")
        if self.mtu <= self.header_overhead:
            raise ConfigError("mtu must exceed header_overhead", "packet.mtu")
        if self.start_time < self.link.schedule.start:
            raise ConfigError("video starts before the bandwidth schedule", "start_time")
        if not self.size_sigma >= 0:
            raise ConfigError("must be >= 0", "size_sigma")
        trace.layer_cell_rates(self.ladder, self.gop)

    @property
    def duration(self) -> float:
        return self.num_frames / self.frame_rate

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    def segments(self) -> list[tuple[float, float]]:
        out = []
        for a, b, _ in self.link.schedule.plateaus(self.end_time):
            a, b = max(a, self.start_time), min(b, self.end_time)
            if b > a:
                out.append((a, b))
        return out

    def gop_for(self, scheme: Scheme) -> GopConfig:
        return replace(self.gop, scheme=scheme)


# ------------------------------------------------------------------ config I/O

def config_to_dict(cfg: ScenarioConfig) -> dict:
    g = cfg.gop
    return {
        "gop": {"gop_size": g.gop_size, "quality_levels": g.quality_levels,
                "mgs_key_period": g.mgs_key_period, "intra_period": g.intra_period},
        "num_frames": cfg.num_frames,
        "frame_rate": cfg.frame_rate,
        "start_time": cfg.start_time,
        "ladder": [{"layer_id": r.layer_id, "did": r.layer.did, "tid": r.layer.tid, "qid": r.layer.qid,
                    "fps": r.frame_rate, "bitrate_kbps": r.bitrate_kbps, "psnr_db": r.encoded_psnr_db}
                   for r in cfg.ladder],
        "link": {"schedule": [[t, r] for t, r in cfg.link.schedule.steps],
                 "queue_capacity_bytes": cfg.link.queue_capacity_bytes,
                 "propagation_delay": cfg.link.propagation_delay},
        "estimator": {"mode": cfg.estimator.mode.value, "period": cfg.estimator.period,
                      "window": cfg.estimator.window},
        "playout": {"deadline": cfg.playout.deadline},
        "packet": {"mtu": cfg.mtu, "header_overhead": cfg.header_overhead},
        "seed": cfg.seed,
        "schemes": [s.value for s in cfg.schemes],
        "nondecodable_psnr": cfg.nondecodable_psnr,
        "size_sigma": cfg.size_sigma,
    }


_SCHEMA = {
    "gop": {"gop_size": int, "quality_levels": int, "mgs_key_period": (int, type(None)),
            "intra_period": (int, type(None))},
    "num_frames": int, "frame_rate": (int, float), "start_time": (int, float),
    "ladder": list,
    "link": {"schedule": list, "queue_capacity_bytes": int, "propagation_delay": (int, float)},
    "estimator": {"mode": str, "period": (int, float), "window": (int, float)},
    "playout": {"deadline": (int, float)},
    "packet": {"mtu": int, "header_overhead": int},
    "seed": int, "schemes": list, "nondecodable_psnr": (int, float), "size_sigma": (int, float),
}
_LADDER_ROW = {"layer_id": int, "did": int, "tid": int, "qid": int, "fps": (int, float),
               "bitrate_kbps": (int, float), "psnr_db": (int, float)}


def _check(obj: Any, schema, path: str, partial: bool) -> None:
    if isinstance(schema, dict):
        if not isinstance(obj, dict):
            raise ConfigError("expected an object", path or "<root>")
        for key in obj:
            if key not in schema:
                raise ConfigError("unknown key", f"{path}.{key}" if path else key)
        for key, sub in schema.items():
            p = f"{path}.{key}" if path else key
            if key not in obj:
                if not partial:
                    raise ConfigError("missing key", p)
                continue
            _check(obj[key], sub, p, partial)
        return
    types = schema if isinstance(schema, tuple) else (schema,)
    if isinstance(obj, bool) or not isinstance(obj, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"expected {names}, got {type(obj).__name__}", path)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        out[k] = _merge(base[k], v) if isinstance(v, dict) and isinstance(base.get(k), dict) else v
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    """Validate ``data`` (missing keys take defaults) and build a config."""
    _check(data, _SCHEMA, "", partial=True)
    d = _merge(config_to_dict(ScenarioConfig()), data)
    _check(d, _SCHEMA, "", partial=False)
    rows = []
    for i, row in enumerate(d["ladder"]):
        _check(row, _LADDER_ROW, f"ladder[{i}]", partial=False)
        rows.append(LadderRow(row["layer_id"], LayerId(row["did"], row["tid"], row["qid"]),
                              float(row["fps"]), float(row["bitrate_kbps"]), float(row["psnr_db"])))
    steps = []
    for i, step in enumerate(d["link"]["schedule"]):
        if (not isinstance(step, list) or len(step) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in step)):
            raise ConfigError("expected [start_time, bps]", f"link.schedule[{i}]")
        steps.append((float(step[0]), float(step[1])))
    g = d["gop"]
    return ScenarioConfig(
        gop=GopConfig(g["gop_size"], g["quality_levels"], Scheme.MGS, g["mgs_key_period"], g["intra_period"]),
        num_frames=d["num_frames"],
        frame_rate=float(d["frame_rate"]),
        start_time=float(d["start_time"]),
        ladder=BitrateLadder(tuple(rows)),
        link=LinkConfig(BandwidthSchedule(tuple(steps)), d["link"]["queue_capacity_bytes"],
                        float(d["link"]["propagation_delay"])),
        estimator=EstimatorConfig(float(d["estimator"]["period"]), d["estimator"]["mode"],
                                  float(d["estimator"]["window"])),
        playout=PlayoutConfig(float(d["playout"]["deadline"])),
        seed=d["seed"],
        schemes=tuple(d["schemes"]),
        mtu=d["packet"]["mtu"],
        header_overhead=d["packet"]["header_overhead"],
        nondecodable_psnr=float(d["nondecodable_psnr"]),
        size_sigma=float(d["size_sigma"]),
    )


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", os.fspath(path)) from None
    return config_from_dict(data)


# ------------------------------------------------------------------ running

@dataclass
class SchemeResult:
    scheme: Scheme
    mean_psnr: float
    decodable_ratio: float
    mos: int
    mos_label: str
    loss_rate: float
    mean_delay: float
    frames_sent: int
    timeline: metrics.QualityTimeline
    outcomes: list
    selection_log: list = field(default_factory=list)
    link_stats: LinkStats | None = None

    @property
    def segments(self):
        return self.timeline.segments

    def summary(self) -> dict:
        return {
            "mean_psnr_db": round(self.mean_psnr, 6),
            "decodable_ratio": round(self.decodable_ratio, 6),
            "mos": self.mos,
            "mos_label": self.mos_label,
            "loss_rate": round(self.loss_rate, 6),
            "mean_delay_s": None if math.isnan(self.mean_delay) else round(self.mean_delay, 6),
            "frames_sent": self.frames_sent,
            "segments": [[a, b, round(m, 6)] for a, b, m in self.timeline.segments],
        }


@dataclass
class RunReport:
    config: ScenarioConfig
    results: dict  # Scheme -> SchemeResult

    def __getitem__(self, scheme) -> SchemeResult:
        return self.results[Scheme.parse(scheme)]

    def to_dict(self) -> dict:
        return {"seed": self.config.seed,
                "schemes": {s.value: r.summary() for s, r in self.results.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate(cfg: ScenarioConfig, scheme: Scheme, nalus, ladder: BitrateLadder, transmitted,
             received) -> SchemeResult:
    """Receiver post-processing and metrics for one scheme's traces."""
    graph = svc_model.build_dependency_graph(cfg.gop_for(scheme), cfg.num_frames)
    delays = receiver.reassemble_nalus(received, transmitted)
    survivors = receiver.apply_deadline(delays, cfg.playout)
    sent_nalus = {p.nalu_id for p in transmitted}
    outcomes = receiver.prune_and_decode(survivors, nalus, graph, sent_nalus)
    ratio = receiver.decodable_frame_ratio(outcomes, cfg.num_frames)
    timeline = metrics.reconstruct_psnr_timeline(
        outcomes, ladder, cfg.nondecodable_psnr, cfg.frame_rate, cfg.start_time, cfg.segments())
    net = metrics.network_stats(transmitted, received)
    mean = timeline.mean_psnr
    mos, label = metrics.mos_from_psnr(mean)
    return SchemeResult(scheme, mean, ratio, mos, label, net.loss_rate, net.mean_delay,
                        sum(o.sent for o in outcomes), timeline, outcomes)


def run_scheme(cfg: ScenarioConfig, scheme: Scheme, outdir: Path | None = None) -> SchemeResult:
    gop = cfg.gop_for(scheme)
    nalus, ladder = trace.synthesize_trace(gop, cfg.num_frames, cfg.ladder, cfg.frame_rate, cfg.seed,
                                           sigma=cfg.size_sigma)
    packets = trace.packetize(nalus, cfg.mtu, cfg.header_overhead, cfg.frame_rate, cfg.start_time)
    unit = AdaptationUnit(ladder, cfg.estimator, cfg.start_time)
    received, stats = netsim.run_link(packets, cfg.link, unit)
    view = netsim.LinkView(cfg.link.schedule)
    if cfg.estimator.mode is adaptation.EstimatorMode.ORACLE:
        unit.finish(cfg.end_time, view)
    transmitted = [p for p in packets if p.packet_id not in stats.filtered_ids]
    result = evaluate(cfg, scheme, nalus, ladder, transmitted, received)
    result.selection_log = list(unit.log)
    result.link_stats = stats
    log.info("%s: psnr %.2f dB, decodable %.3f, loss %.3f", scheme, result.mean_psnr,
             result.decodable_ratio, result.loss_rate)
    if outdir is not None:
        d = Path(outdir) / scheme.value
        d.mkdir(parents=True, exist_ok=True)
        trace.write_nalu_trace(nalus, d / "nalu_trace.txt")
        trace.write_bitrate_ladder(ladder, d / "bitrate_ladder.txt")
        trace.write_packet_trace(packets, d / "packet_trace.txt")
        trace.write_packet_trace(transmitted, d / "sent_trace.txt")
        trace.write_received_trace(received, d / "received_trace.txt")
        stats.write_csv(d / "link_stats.csv")
        adaptation.write_selection_log(unit.log, d / "selection_log.csv")
        receiver.write_frame_outcomes(result.outcomes, d / "frames.csv")
        result.timeline.write_csv(d / "quality.csv")
        result.timeline.write_segments_csv(d / "segments.csv")
    return result


def run_scenario(cfg: ScenarioConfig, outdir=None) -> RunReport:
    """Run every configured scheme; with ``outdir`` all traces and the report are written."""
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "config.json").write_text(dump_config(cfg), encoding="utf-8")
    results = {s: run_scheme(cfg, s, outdir) for s in cfg.schemes}
    report = RunReport(cfg, results)
    if outdir is not None:
        (outdir / "report.json").write_text(report.to_json(), encoding="utf-8")
        emit_plots(report, outdir)
    return report


def recompute_report(rundir) -> RunReport:
    """Re-derive every reported number from the trace files of a finished run."""
    rundir = Path(rundir)
    cfg = load_config(rundir / "config.json")
    results = {}
    for s in cfg.schemes:
        d = rundir / s.value
        nalus = trace.parse_nalu_trace(d / "nalu_trace.txt")
        ladder = trace.parse_bitrate_ladder(d / "bitrate_ladder.txt")
        transmitted = trace.parse_packet_trace(d / "sent_trace.txt")
        received = trace.parse_received_trace(d / "received_trace.txt")
        res = evaluate(cfg, s, nalus, ladder, transmitted, received)
        res.selection_log = adaptation.read_selection_log(d / "selection_log.csv")
        results[s] = res
    return RunReport(cfg, results)


# ------------------------------------------------------------------ plot data

def emit_plots(report: RunReport, outdir) -> list[Path]:
    """Write plot-ready CSVs: per-frame PSNR, per-segment mean PSNR, decodable %."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    schemes = list(report.results)
    fmt = trace.fmt_float
    first = report.results[schemes[0]]

    p_frames = outdir / "psnr_timeline.csv"
    with open(p_frames, "w", encoding="ascii", newline="\n") as fh:
        fh.write("time_s," + ",".join(f"{s.value}_psnr_db" for s in schemes) + "\n")
        for i, t in enumerate(first.timeline.time_s):
            vals = ",".join(fmt(report.results[s].timeline.psnr_db[i]) for s in schemes)
            fh.write(f"{fmt(t)},{vals}\n")

    p_segments = outdir / "segment_psnr.csv"
    with open(p_segments, "w", encoding="ascii", newline="\n") as fh:
        fh.write("segment_start_s,segment_end_s," + ",".join(f"{s.value}_mean_psnr_db" for s in schemes) + "\n")
        for j, (a, b, _) in enumerate(first.timeline.segments):
            vals = ",".join(fmt(report.results[s].timeline.segments[j][2]) for s in schemes)
            fh.write(f"{fmt(a)},{fmt(b)},{vals}\n")

    p_decodable = outdir / "decodable_percent.csv"
    with open(p_decodable, "w", encoding="ascii", newline="\n") as fh:
        fh.write("scheme,decodable_percent\n")
        for s in schemes:
            fh.write(f"{s.value},{fmt(100.0 * report.results[s].decodable_ratio)}\n")
    return [p_frames, p_segments, p_decodable]
