# Walk through the scenario geometry and the per-hop link budget.
import numpy as np

from leohap import KM, ScenarioConfig
from leohap.channel import hop_rates, link_capacity
from leohap.kinematics import propagate_constellation, window_candidates

cfg = ScenarioConfig()
const = cfg.initial_constellation()
print(f"{const.count} satellites, spacing {const.spacing / KM:.1f} km, track at x = {cfg.track_origin[0] / KM:.0f} km")

# direct link for reference
d_direct = np.linalg.norm(cfg.dst_pos - cfg.src_pos)
print(f"direct Src->Dst {d_direct / KM:.0f} km: {link_capacity(d_direct, cfg.radio) / 1e3:.1f} kbit/s")

# a minute of orbit, the two candidates the agent may pick from, and the hop rates via a HAP at the midpoint
hap = cfg.initial_hap().position
for n in range(0, 7):
    cands = window_candidates(const, cfg.kin, cfg.src_pos)
    row = []
    for idx, pos in cands:
        r = hop_rates(cfg.src_pos, pos, hap, cfg.dst_pos, cfg.radio)
        row.append(f"sat {idx:2d} @ y={pos[1] / KM:7.1f} km -> e2e {r.e2e / 1e3:7.1f} kbit/s")
    print(f"t={n * cfg.kin.dt:4.0f} s  " + " | ".join(row))
    const = propagate_constellation(const, cfg.kin.dt)
