"""
Picking a layer from a bandwidth estimate
=========================================

The adaptation unit re-estimates bandwidth once per second and forwards only
packets whose layer fits under the chosen ladder rung.  Here the oracle estimator
follows the default schedule.
"""

from svcsim import AdaptationUnit, EstimatorConfig, LinkConfig, default_schedule, packetize, run_link, select_layer
from svcsim import GopConfig, Scheme, synthesize_trace
from svcsim.adaptation import offered_rate_by_plateau
from svcsim.scenario import default_ladder

ladder = default_ladder()

# inclusive floor: an estimate equal to a rung selects that rung
for est in (150e3, 430e3, 600e3, 2e6):
    s = select_layer(ladder, est)
    print(f"estimate {est / 1e3:6.0f} kbps -> {s.chosen_layer} at {s.chosen_bitrate_kbps:.0f} kbps")

gop = GopConfig(4, 2, Scheme.MGS, 4, 32)
nalus, measured = synthesize_trace(gop, 1920, ladder, 30.0, 1)
packets = packetize(nalus, frame_rate=30.0, start_time=10.0)
schedule = default_schedule()
unit = AdaptationUnit(measured, EstimatorConfig(period=1.0), 10.0)
_, stats = run_link(packets, LinkConfig(schedule), unit)

sent = {p.packet_id for p in packets} - stats.filtered_ids
print(f"\nfiltered at source: {stats.filtered} of {stats.sent} packets")
print(" plateau    bw kbps  offered kbps")
for a, b, bw, offered in offered_rate_by_plateau(packets, sent, schedule, 74.0):
    print(f"{a:4.0f}-{b:<4.0f} {bw / 1e3:8.0f}  {offered / 1e3:12.0f}")
