"""Quality and network metrics."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .svc_model import LayerId
from .trace import BitrateLadder, PacketRecord, ReceivedRecord, fmt_float

PSNR_CAP_DB = 100.0
NONDECODABLE_PSNR_DB = 15.0
PEAK = 255.0

# (lower bound, inclusive?, score, label) checked top-down
_MOS_TABLE = (
    (37.0, False, 5, "Excellent"),
    (31.0, True, 4, "Good"),
    (25.0, True, 3, "Fair"),
    (20.0, True, 2, "Poor"),
)


@dataclass(frozen=True)
class ImageBuffer:
    """8-bit luminance plane, ``samples`` has shape (height, width)."""

    width: int
    height: int
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.size != self.width * self.height:
            raise InputError(f"expected {self.width * self.height} samples, got {s.size}")
        if s.size and (s.min() < 0 or s.max() > 255):
            raise InputError("samples must lie in [0, 255]")
        object.__setattr__(self, "samples", s.reshape(self.height, self.width).astype(np.uint8))

    @classmethod
    def from_array(cls, arr) -> "ImageBuffer":
        arr = np.asarray(arr)
        return cls(arr.shape[1], arr.shape[0], arr)


def write_image(img: ImageBuffer, path) -> None:
    """Raw 8-bit grayscale with a one-line ``width height`` header."""
    with open(path, "wb") as fh:
        fh.write(f"{img.width} {img.height}\n".encode("ascii"))
        fh.write(img.samples.tobytes())


def read_image(path) -> ImageBuffer:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 2:
            raise InputError(f"{os.fspath(path)}: bad header {header!r}")
        w, h = int(header[0]), int(header[1])
        data = np.frombuffer(fh.read(), dtype=np.uint8)
    return ImageBuffer(w, h, data)


def _check_dims(org: ImageBuffer, rec: ImageBuffer):
    if (org.width, org.height) != (rec.width, rec.height):
        raise InputError(f"dimension mismatch: {org.width}x{org.height} vs {rec.width}x{rec.height}")


def mse(org: ImageBuffer, rec: ImageBuffer) -> float:
    _check_dims(org, rec)
    diff = org.samples.astype(np.float64) - rec.samples.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_from_mse(value: float, cap: float = PSNR_CAP_DB) -> float:
    if value == 0:
        return cap
    return 10.0 * math.log10(PEAK * PEAK / value)


def psnr(org: ImageBuffer, rec: ImageBuffer, cap: float = PSNR_CAP_DB) -> float:
    return psnr_from_mse(mse(org, rec), cap)


def mos_from_psnr(psnr_db: float) -> tuple[int, str]:
    if psnr_db < 0:
        raise InputError("psnr must be >= 0")
    for bound, inclusive, score, label in _MOS_TABLE:
        if psnr_db > bound or (inclusive and psnr_db == bound):
            return score, label
    return 1, "Bad"


@dataclass
class QualityTimeline:
    frame_index: np.ndarray
    time_s: np.ndarray
    psnr_db: np.ndarray
    segments: list = field(default_factory=list)  # (start, end, mean_psnr)

    @property
    def mean_psnr(self) -> float:
        return float(self.psnr_db.mean()) if self.psnr_db.size else math.nan

    def write_csv(self, dest) -> None:
        with open(dest, "w", encoding="ascii", newline="\n") as fh:
            fh.write("frame_index,time_s,psnr_db,mos\n")
            for f, t, p in zip(self.frame_index, self.time_s, self.psnr_db):
                fh.write(f"{int(f)},{fmt_float(t)},{fmt_float(p)},{mos_from_psnr(float(p))[0]}\n")

    def write_segments_csv(self, dest) -> None:
        with open(dest, "w", encoding="ascii", newline="\n") as fh:
            fh.write("segment_start_s,segment_end_s,mean_psnr_db\n")
            for a, b, m in self.segments:
                fh.write(f"{fmt_float(a)},{fmt_float(b)},{fmt_float(m)}\n")


def reconstruct_psnr_timeline(outcomes, ladder: BitrateLadder, nondecodable_psnr: float = NONDECODABLE_PSNR_DB,
                              frame_rate: float = 30.0, start_time: float = 0.0,
                              segments: Sequence[tuple[float, float]] | None = None) -> QualityTimeline:
    """Per-frame PSNR from the ladder's encoded quality at each frame's delivered layer.

    A frame whose base layer can be decoded scores the ladder PSNR of
    ``(delivered_tid, delivered_qid)``; a transmitted frame without a decodable
    base scores ``nondecodable_psnr``.  Frames the source did not transmit
    (temporal down-switching) repeat the previous frame's score.
    """
    n = len(outcomes)
    psnrs = np.empty(n)
    lookup = {}
    prev = nondecodable_psnr
    for i, o in enumerate(outcomes):
        if not o.sent:
            psnrs[i] = prev
            continue
        if o.delivered_qid is None:
            value = nondecodable_psnr
        else:
            key = (o.delivered_tid, o.delivered_qid)
            if key not in lookup:
                lookup[key] = ladder.row_for(LayerId(0, *key)).encoded_psnr_db
            value = lookup[key]
        psnrs[i] = prev = value
    frames = np.array([o.frame_index for o in outcomes], dtype=np.int64)
    times = start_time + frames / frame_rate
    segs = []
    for a, b in segments or ():
        mask = (times >= a) & (times < b)
        if mask.any():
            segs.append((a, b, float(psnrs[mask].mean())))
    return QualityTimeline(frames, times, psnrs, segs)


@dataclass
class NetworkStats:
    loss_rate: float
    mean_delay: float
    bin_start: np.ndarray
    sent: np.ndarray
    received: np.ndarray
    bin_mean_delay: np.ndarray

    @property
    def bin_loss_rate(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.sent > 0, 1.0 - self.received / np.maximum(self.sent, 1), np.nan)


def network_stats(packets: Sequence[PacketRecord], received: Sequence[ReceivedRecord],
                  bin_width: float = 1.0) -> NetworkStats:
    """Loss and delay of ``received`` relative to the transmitted ``packets``, overall and binned by send time."""
    if not packets:
        empty = np.zeros(0)
        return NetworkStats(0.0, math.nan, empty, empty, empty, empty)
    send = {p.packet_id: p.send_time for p in packets}
    for r in received:
        if r.packet_id not in send:
            raise InputError(f"received packet {r.packet_id} was not sent")
    t0 = min(send.values())
    nb = int((max(send.values()) - t0) // bin_width) + 1
    sent = np.zeros(nb, dtype=np.int64)
    got = np.zeros(nb, dtype=np.int64)
    dsum = np.zeros(nb)
    for p in packets:
        sent[int((p.send_time - t0) // bin_width)] += 1
    for r in received:
        i = int((send[r.packet_id] - t0) // bin_width)
        got[i] += 1
        dsum[i] += r.delay
    with np.errstate(invalid="ignore", divide="ignore"):
        bin_delay = np.where(got > 0, dsum / np.maximum(got, 1), np.nan)
    loss = 1.0 - len(received) / len(packets)
    mean_delay = float(np.mean([r.delay for r in received])) if received else math.nan
    return NetworkStats(loss, mean_delay, t0 + bin_width * np.arange(nb), sent, got, bin_delay)
