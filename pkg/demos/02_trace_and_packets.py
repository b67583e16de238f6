"""
From a bitrate ladder to packets
================================

Synthesize a NALU trace that realizes the default six-rung ladder, check that the
measured ladder matches, and split the NALUs into MTU-sized packets.
"""

from collections import Counter

from svcsim import GopConfig, Scheme, packetize, synthesize_trace
from svcsim.scenario import default_ladder

ladder = default_ladder()
gop = GopConfig(4, 2, Scheme.MGS, 4, 32)

# 10 s of video at 30 fps
nalus, measured = synthesize_trace(gop, 300, ladder, 30.0, size_model_seed=1)
print("rung  layer        target  measured kbps")
for want, got in zip(ladder, measured):
    print(f"{want.layer_id:>4}  {str(want.layer):<11} {want.bitrate_kbps:>7.0f}  {got.bitrate_kbps:>8.1f}")

kinds = Counter(n.kind.value for n in nalus)
print("\nNALUs by kind:", dict(kinds))

packets = packetize(nalus, mtu=1500, header_overhead=40, frame_rate=30.0)
sizes = Counter(p.size_bytes == 1500 for p in packets)
print(f"{len(packets)} packets, {sizes[True]} full-size; first frame sent at {packets[1].send_time:.3f} s")
