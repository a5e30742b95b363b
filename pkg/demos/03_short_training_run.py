# A short DQN run with the desk preset, then a greedy roll-out against the baselines.
# 5000 iterations takes well under a minute; the full preset uses 50000.
from dataclasses import replace
from pathlib import Path

import numpy as np

from leohap import calibrate_reward, direct_rate, evaluate, load_config, train

scenario, dqn = load_config(Path(__file__).resolve().parents[1] / "configs" / "desk.ini")
scenario = calibrate_reward(scenario)
dqn = replace(dqn, total_iterations=5000)

params, log, _ = train(scenario, dqn, seed=0)
rew = np.array(log.episode_rewards)
print(f"{len(rew)} episodes, mean episode reward first {rew[0]:.3f}, last {rew[-1]:.3f}")

ev = evaluate(params, scenario)
mu = scenario.reward_mu
print(f"greedy policy: {ev['mean_rate'] / 1e3:.1f} kbit/s = {ev['mean_rate'] / mu:.3f} x fixed HAP, "
      f"{ev['mean_rate'] / direct_rate(scenario).mean_rate:.2f} x direct")

# where did the HAP go? every 64th slot of the trace
print("\n   n   hap_x [km]  hap_y [km]  speed [m/s]  sat")
for row in ev["trace"][::64]:
    n, sat, x, y, vx, vy = row[:6]
    print(f"{n:4d}  {x / 1e3:10.1f}  {y / 1e3:10.1f}  {np.hypot(vx, vy):11.1f}  {sat:3d}")
