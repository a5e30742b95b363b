# Reference schemes on the default scenario: direct, SAT only, fixed ground relay, fixed HAP.
import time

from leohap import KM, ScenarioConfig, compare_schemes

cfg = ScenarioConfig()
t0 = time.perf_counter()
rows = compare_schemes(cfg, grid_step=95 * KM)
print(f"swept two 95 km grids in {time.perf_counter() - t0:.1f} s\n")

direct = rows[0].mean_rate
print(f"{'scheme':>13}  {'SE [bit/s/Hz]':>14}  {'x direct':>8}  relay position [km]")
for r in rows:
    pos = "" if r.position is None else "(%.0f, %.0f, %.0f)" % tuple(r.position / KM)
    print(f"{r.name:>13}  {r.spectral_efficiency:14.4e}  {r.mean_rate / direct:8.2f}  {pos}")

# the fixed-HAP mean is also the reward centre the agent is scored against
print(f"\nreward centre mu = {rows[-1].mean_rate / 1e3:.1f} kbit/s")
