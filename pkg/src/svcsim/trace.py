"""Trace records, text file formats, synthetic trace generation and packetization.

All files are whitespace-separated columns with a leading ``#`` header naming
the columns.  Blank lines and further ``#`` lines are ignored on input.

==================  =============================================================
NALU trace          ``nalu_id frame_index did tid qid size_bytes kind``
bitrate ladder      ``layer_id did tid qid fps bitrate_kbps psnr_db``
packet trace        ``packet_id send_time_s size_bytes nalu_id frag_index did tid qid frame_index``
received trace      ``packet_id arrival_time_s delay_s``
==================  =============================================================
"""

from __future__ import annotations

import enum
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, TraceFormatError
from .svc_model import GopConfig, LayerId, frame_tid

NALU_COLUMNS = "nalu_id frame_index did tid qid size_bytes kind"
LADDER_COLUMNS = "layer_id did tid qid fps bitrate_kbps psnr_db"
PACKET_COLUMNS = "packet_id send_time_s size_bytes nalu_id frag_index did tid qid frame_index"
RECEIVED_COLUMNS = "packet_id arrival_time_s delay_s"

DEFAULT_MTU = 1500
DEFAULT_HEADER_OVERHEAD = 40  # RTP + UDP + IPv4
PARAMETER_SET_BYTES = 24


class NaluKind(str, enum.Enum):
    PARAMETER_SET = "ps"
    BASE = "base"
    ENHANCEMENT = "enh"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NaluRecord:
    nalu_id: int
    frame_index: int
    layer: LayerId
    size_bytes: int
    kind: NaluKind

    def __post_init__(self):
        object.__setattr__(self, "kind", NaluKind(self.kind))
        if self.size_bytes < 1:
            raise ValueError(f"NALU {self.nalu_id}: size_bytes must be >= 1")
        if self.kind is NaluKind.BASE and self.layer.qid != 0:
            raise ValueError(f"NALU {self.nalu_id}: base slice with qid {self.layer.qid}")
        if self.kind is NaluKind.ENHANCEMENT and self.layer.qid == 0:
            raise ValueError(f"NALU {self.nalu_id}: enhancement slice with qid 0")


@dataclass(frozen=True)
class LadderRow:
    layer_id: int
    layer: LayerId
    frame_rate: float
    bitrate_kbps: float
    encoded_psnr_db: float


@dataclass(frozen=True)
class BitrateLadder:
    """Cumulative operating points, sorted by bitrate."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise ConfigError("bitrate ladder is empty", "ladder")
        seen = set()
        for i, row in enumerate(rows):
            if row.bitrate_kbps <= 0 or row.frame_rate <= 0:
                raise ConfigError("bitrate_kbps and fps must be positive", f"ladder[{i}]")
            if row.layer in seen:
                raise ConfigError(f"duplicate layer {row.layer}", f"ladder[{i}]")
            seen.add(row.layer)
            if i:
                prev = rows[i - 1]
                if row.layer_id <= prev.layer_id:
                    raise ConfigError("layer_id must increase down the ladder", f"ladder[{i}]")
                if row.bitrate_kbps <= prev.bitrate_kbps:
                    raise ConfigError("bitrate_kbps must be strictly increasing", f"ladder[{i}]")
                if row.encoded_psnr_db < prev.encoded_psnr_db:
                    raise ConfigError("psnr_db must be non-decreasing", f"ladder[{i}]")

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def lowest(self) -> LadderRow:
        return self.rows[0]

    @property
    def top(self) -> LadderRow:
        return self.rows[-1]

    def row_for(self, layer: LayerId) -> LadderRow:
        for row in self.rows:
            if row.layer == layer:
                return row
        raise ConfigError(f"no ladder row for layer {layer}", "ladder")


def layer_cell_rates(ladder: BitrateLadder, gop: GopConfig) -> dict:
    """Per-(tid, qid) increment rates in kbps, recovered by inclusion-exclusion.

    Ladder rows hold the rate of the whole box ``T <= t, Q <= q``; the increment
    of a single (t, q) cell must be positive for the ladder to be realizable.
    """
    nt, nq = gop.temporal_levels, gop.quality_levels
    box = {}
    for row in ladder:
        if row.layer.did != 0:
            raise ConfigError("spatial layers (did > 0) are not supported", "ladder")
        box[(row.layer.tid, row.layer.qid)] = row.bitrate_kbps
    expected = {(t, q) for t in range(nt) for q in range(nq)}
    if set(box) != expected:
        raise ConfigError(
            f"ladder must have one row per (tid, qid) in {nt}x{nq} grid, got {sorted(box)}", "ladder")

    def b(t, q):
        return box[(t, q)] if t >= 0 and q >= 0 else 0.0

    cells = {}
    for t, q in sorted(expected):
        cells[(t, q)] = b(t, q) - b(t - 1, q) - b(t, q - 1) + b(t - 1, q - 1)
        if cells[(t, q)] <= 0:
            raise ConfigError(f"ladder implies non-positive rate for layer T{t}Q{q}", "ladder")
    return cells


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    raw = weights / weights.sum() * total
    out = np.floor(raw).astype(np.int64)
    short = int(total - out.sum())
    if short > 0:
        order = np.argsort(-(raw - out), kind="stable")
        out[order[:short]] += 1
    return out


def synthesize_trace(gop: GopConfig, num_frames: int, ladder: BitrateLadder, frame_rate: float,
                     size_model_seed: int, sigma: float = 0.2):
    """Generate a NALU trace whose per-layer byte rates realize ``ladder``.

    One lognormal size factor is drawn per frame; it is shared by all quality
    units of the frame, so the base/enhancement split of every frame follows the
    ladder's cell ratio.  Cell totals are matched exactly (up to whole bytes).
    Returns the NALU list and the ladder measured from it.
    """
    if num_frames < 1:
        raise ConfigError("num_frames must be >= 1")
    if frame_rate <= 0:
        raise ConfigError("frame_rate must be positive")
    cells = layer_cell_rates(ladder, gop)
    for t in range(gop.temporal_levels):
        for q in range(1, gop.quality_levels):
            if cells[(t, q)] >= cells[(t, 0)]:
                raise ConfigError(
                    f"ladder makes T{t} enhancement (Q{q}) at least as large as its base", "ladder")
    duration = num_frames / frame_rate
    rng = np.random.default_rng(size_model_seed)
    factors = rng.lognormal(mean=-0.5 * sigma * sigma, sigma=sigma, size=num_frames)
    tids = np.array([frame_tid(f, gop.gop_size) for f in range(num_frames)])

    sizes = {}
    for (t, q), kbps in cells.items():
        idx = np.flatnonzero(tids == t)
        if idx.size == 0:
            continue
        total = int(round(kbps * 1000.0 * duration / 8.0))
        if (t, q) == (0, 0):
            total -= PARAMETER_SET_BYTES
        cell = _largest_remainder(factors[idx], max(total, idx.size))
        cell = np.maximum(cell, 1)
        for f, s in zip(idx, cell):
            sizes[(int(f), q)] = int(s)

    nalus = [NaluRecord(0, -1, LayerId(0, 0, 0), PARAMETER_SET_BYTES, NaluKind.PARAMETER_SET)]
    for f in range(num_frames):
        t = int(tids[f])
        for q in range(gop.quality_levels):
            kind = NaluKind.BASE if q == 0 else NaluKind.ENHANCEMENT
            nalus.append(NaluRecord(len(nalus), f, LayerId(0, t, q), sizes[(f, q)], kind))
    return nalus, measured_ladder(nalus, ladder, duration)


def measured_ladder(nalus: Sequence[NaluRecord], ladder: BitrateLadder, duration: float) -> BitrateLadder:
    """Recompute each row's bitrate from the bytes of the NALUs it contains."""
    rows = []
    for row in ladder:
        total = sum(n.size_bytes for n in nalus if n.layer.within(row.layer))
        rows.append(LadderRow(row.layer_id, row.layer, row.frame_rate,
                              round(total * 8.0 / duration / 1000.0, 3), row.encoded_psnr_db))
    return BitrateLadder(tuple(rows))


@dataclass(frozen=True)
class PacketRecord:
    packet_id: int
    send_time: float
    size_bytes: int
    nalu_id: int
    fragment_index: int
    layer: LayerId
    frame_index: int


def packetize(nalus: Iterable[NaluRecord], mtu: int = DEFAULT_MTU,
              header_overhead: int = DEFAULT_HEADER_OVERHEAD, frame_rate: float = 30.0,
              start_time: float = 0.0) -> list[PacketRecord]:
    """Split NALUs into transport packets of at most ``mtu`` bytes.

    Frame ``f`` is sent at ``start_time + f / frame_rate``; parameter sets
    (frame -1) go out at ``start_time``.
    """
    if mtu <= header_overhead:
        raise ConfigError("mtu must exceed header_overhead")
    chunk = mtu - header_overhead
    packets = []
    for n in nalus:
        t = start_time + max(n.frame_index, 0) / frame_rate
        count = math.ceil(n.size_bytes / chunk)
        for i in range(count):
            payload = chunk if i < count - 1 else n.size_bytes - chunk * (count - 1)
            packets.append(PacketRecord(len(packets), t, payload + header_overhead, n.nalu_id, i,
                                        n.layer, n.frame_index))
    return packets


@dataclass(frozen=True)
class ReceivedRecord:
    packet_id: int
    arrival_time: float
    delay: float


# ---------------------------------------------------------------- text I/O

def fmt_float(x: float) -> str:
    """Shortest round-tripping decimal with at least six fractional digits."""
    return np.format_float_positional(float(x), unique=True, min_digits=6, trim="k")


def _fmt_num(x: float) -> str:
    return np.format_float_positional(float(x), unique=True, trim="-")


class _Writer:
    def __init__(self, dest):
        self.dest = dest

    def __enter__(self):
        if isinstance(self.dest, (str, os.PathLike)):
            self.fh = open(self.dest, "w", encoding="ascii", newline="\n")
            self.owned = True
        else:
            self.fh = self.dest
            self.owned = False
        return self.fh

    def __exit__(self, *exc):
        if self.owned:
            self.fh.close()


def _lines(source) -> Iterator[tuple[int, list[str]]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        text = source.read()
    else:
        text = "\n".join(source)
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def _source_name(source):
    return os.fspath(source) if isinstance(source, (str, os.PathLike)) else None


def _parse_fields(source, ncols, converters, names):
    name = _source_name(source)
    for lineno, cols in _lines(source):
        if len(cols) != ncols:
            raise TraceFormatError(f"expected {ncols} columns, got {len(cols)}", lineno, None, name)
        values = []
        for col, (conv, field_name, text) in enumerate(zip(converters, names, cols), 1):
            try:
                values.append(conv(text))
            except ValueError:
                raise TraceFormatError(f"bad {field_name} {text!r}", lineno, col, name) from None
        yield lineno, values


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise ValueError(text)
    return v


def _finite(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def write_nalu_trace(records: Iterable[NaluRecord], dest) -> None:
    with _Writer(dest) as fh:
        fh.write(f"# {NALU_COLUMNS}\n")
        for r in records:
            fh.write(f"{r.nalu_id} {r.frame_index} {r.layer.did} {r.layer.tid} {r.layer.qid} "
                     f"{r.size_bytes} {r.kind.value}\n")


def parse_nalu_trace(source) -> list[NaluRecord]:
    names = NALU_COLUMNS.split()
    convs = [int, int, _nonneg_int, _nonneg_int, _nonneg_int, int, NaluKind]
    out = []
    for lineno, v in _parse_fields(source, 7, convs, names):
        if v[5] < 1:
            raise TraceFormatError(f"size_bytes must be >= 1, got {v[5]}", lineno, 6, _source_name(source))
        if out and v[0] <= out[-1].nalu_id:
            raise TraceFormatError("nalu_id must be strictly increasing", lineno, 1, _source_name(source))
        try:
            out.append(NaluRecord(v[0], v[1], LayerId(v[2], v[3], v[4]), v[5], v[6]))
        except ValueError as exc:
            raise TraceFormatError(str(exc), lineno, None, _source_name(source)) from None
    return out


def write_bitrate_ladder(ladder: BitrateLadder, dest) -> None:
    with _Writer(dest) as fh:
        fh.write(f"# {LADDER_COLUMNS}\n")
        for r in ladder:
            fh.write(f"{r.layer_id} {r.layer.did} {r.layer.tid} {r.layer.qid} {_fmt_num(r.frame_rate)} "
                     f"{_fmt_num(r.bitrate_kbps)} {_fmt_num(r.encoded_psnr_db)}\n")


def parse_bitrate_ladder(source) -> BitrateLadder:
    names = LADDER_COLUMNS.split()
    convs = [int, _nonneg_int, _nonneg_int, _nonneg_int, _finite, _finite, _finite]
    rows = []
    last_line = None
    for lineno, v in _parse_fields(source, 7, convs, names):
        rows.append(LadderRow(v[0], LayerId(v[1], v[2], v[3]), v[4], v[5], v[6]))
        last_line = lineno
    try:
        return BitrateLadder(tuple(rows))
    except ConfigError as exc:
        raise TraceFormatError(f"invalid ladder: {exc}", last_line, None, _source_name(source)) from None


def write_packet_trace(records: Iterable[PacketRecord], dest) -> None:
    with _Writer(dest) as fh:
        fh.write(f"# {PACKET_COLUMNS}\n")
        for r in records:
            fh.write(f"{r.packet_id} {fmt_float(r.send_time)} {r.size_bytes} {r.nalu_id} "
                     f"{r.fragment_index} {r.layer.did} {r.layer.tid} {r.layer.qid} {r.frame_index}\n")


def parse_packet_trace(source) -> list[PacketRecord]:
    names = PACKET_COLUMNS.split()
    convs = [int, _finite, int, int, _nonneg_int, _nonneg_int, _nonneg_int, _nonneg_int, int]
    out = []
    for lineno, v in _parse_fields(source, 9, convs, names):
        if v[2] < 1:
            raise TraceFormatError(f"size_bytes must be >= 1, got {v[2]}", lineno, 3, _source_name(source))
        out.append(PacketRecord(v[0], v[1], v[2], v[3], v[4], LayerId(v[5], v[6], v[7]), v[8]))
    return out


def write_received_trace(records: Iterable[ReceivedRecord], dest) -> None:
    with _Writer(dest) as fh:
        fh.write(f"# {RECEIVED_COLUMNS}\n")
        for r in records:
            fh.write(f"{r.packet_id} {fmt_float(r.arrival_time)} {fmt_float(r.delay)}\n")


def parse_received_trace(source) -> list[ReceivedRecord]:
    names = RECEIVED_COLUMNS.split()
    out = []
    for lineno, v in _parse_fields(source, 3, [int, _finite, _finite], names):
        if v[2] < 0:
            raise TraceFormatError(f"delay must be >= 0, got {v[2]}", lineno, 3, _source_name(source))
        out.append(ReceivedRecord(*v))
    return out
