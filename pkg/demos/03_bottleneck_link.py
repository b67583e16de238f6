"""
A drop-tail bottleneck under the staircase schedule
===================================================

Offer a constant 1 Mbps packet stream to the default varying-capacity link and
watch throughput and congestion drops follow the bandwidth plateaus.
"""

from svcsim import LinkConfig, default_schedule, run_link
from svcsim.svc_model import LayerId
from svcsim.trace import PacketRecord

schedule = default_schedule()
link = LinkConfig(schedule)  # 10-packet queue, 10 ms propagation

gap = 1500 * 8 / 1.0e6
packets = [PacketRecord(i, 10 + i * gap, 1500, i, 0, LayerId(), 0) for i in range(int(64 / gap))]
received, stats = run_link(packets, link, bin_width=4.0)

print(f"sent {stats.sent}, delivered {stats.delivered}, dropped {stats.dropped_congestion}")
print("   t   capacity  throughput (Mbps)")
for t, thr in zip(stats.bin_starts, stats.throughput_bps):
    if 10 <= t < 74:
        print(f"{t:5.0f}  {schedule.rate_at(t) / 1e6:8.2f}  {thr / 1e6:8.2f}")

delays = [r.delay for r in received]
print(f"delay: min {min(delays) * 1e3:.1f} ms, max {max(delays) * 1e3:.1f} ms")
