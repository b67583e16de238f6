"""
CGS vs FGS vs MGS over the staircase
====================================

Run the default scenario (all three schemes) and print per-segment PSNR, the
decodable-frame share and MOS.  Pass an output directory to keep the traces and
plot-ready CSVs.
"""

import sys

from svcsim import ScenarioConfig, run_scenario

outdir = sys.argv[1] if len(sys.argv) > 1 else None
report = run_scenario(ScenarioConfig(), outdir)
schemes = list(report.results)

print("segment (s)  " + "  ".join(f"{s.value:>6}" for s in schemes))
for i, (a, b, _) in enumerate(report[schemes[0]].segments):
    row = "  ".join(f"{report[s].segments[i][2]:6.2f}" for s in schemes)
    print(f"{a:4.0f}-{b:<4.0f}    {row}")

for s in schemes:
    r = report[s]
    print(f"{s.value}: mean {r.mean_psnr:.2f} dB, decodable {r.decodable_ratio:.1%}, MOS {r.mos} ({r.mos_label})")
