"""
What the viewer gets
====================

Lose packets on a congested link, reassemble NALUs, apply the playout deadline,
prune undecodable units and turn the frame outcomes into a PSNR timeline and MOS.
"""

from svcsim import GopConfig, LinkConfig, PlayoutConfig, Scheme, build_dependency_graph, mos_from_psnr
from svcsim import packetize, prune_and_decode, reconstruct_psnr_timeline, run_link, synthesize_trace
from svcsim.netsim import BandwidthSchedule
from svcsim.receiver import apply_deadline, decodable_frame_ratio, reassemble_nalus
from svcsim.scenario import default_ladder

ladder = default_ladder()
link = LinkConfig(BandwidthSchedule(((0.0, 1.2e6),)))  # below the 1.4 Mbps top rung, no adaptation

for scheme in Scheme:
    gop = GopConfig(4, 2, scheme, 4 if scheme is Scheme.MGS else None, 32)
    nalus, _ = synthesize_trace(gop, 300, ladder, 30.0, 7)
    packets = packetize(nalus, frame_rate=30.0)
    received, stats = run_link(packets, link)
    timely = apply_deadline(reassemble_nalus(received, packets), PlayoutConfig(1.0))
    outcomes = prune_and_decode(timely, nalus, build_dependency_graph(gop, 300))
    tl = reconstruct_psnr_timeline(outcomes, ladder)
    print(f"{scheme.value}: packet loss {stats.dropped_congestion / stats.sent:5.1%}, "
          f"decodable {decodable_frame_ratio(outcomes):5.1%}, "
          f"mean PSNR {tl.mean_psnr:5.2f} dB, MOS {mos_from_psnr(tl.mean_psnr)}")
