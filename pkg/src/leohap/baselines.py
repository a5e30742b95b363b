"""Reference relaying schemes: direct link, SAT only, fixed ground/HAP relay.

Every scheme reads the same candidate track (see
:func:`leohap.env.candidate_track`) and picks, slot by slot, the window
candidate that maximizes its decode-and-forward rate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .channel import link_capacity, link_distance
from .env import KM, ScenarioConfig, candidate_track


@dataclass
class SchemeResult:
    name: str
    rates: np.ndarray
    bandwidth: float
    position: Optional[np.ndarray] = None
    mean_rate: float = field(init=False)
    spectral_efficiency: float = field(init=False)

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        self.mean_rate = float(np.mean(self.rates))
        self.spectral_efficiency = self.mean_rate / self.bandwidth

    def row(self) -> dict:
        pos = self.position
        return {
            "scheme": self.name,
            "mean_rate_bps": self.mean_rate,
            "spectral_efficiency": self.spectral_efficiency,
            "relay_x": None if pos is None else float(pos[0]),
            "relay_y": None if pos is None else float(pos[1]),
            "relay_z": None if pos is None else float(pos[2]),
        }


def direct_rate(cfg: ScenarioConfig) -> SchemeResult:
    d = link_distance(cfg.src_pos, cfg.dst_pos)
    if d == 0:
        raise ValueError("Src and Dst coincide; direct link is undefined")
    c = link_capacity(d, cfg.radio)
    return SchemeResult("direct", np.full(cfg.episode_slots, c), cfg.radio.bandwidth)


def sat_only(cfg: ScenarioConfig, track=None) -> SchemeResult:
    """Two-hop Src -> SAT -> Dst, best candidate per slot."""
    _, sats = track if track is not None else candidate_track(cfg)
    c1 = link_capacity(link_distance(sats, cfg.src_pos), cfg.radio)
    c2 = link_capacity(link_distance(sats, cfg.dst_pos), cfg.radio)
    rates = np.minimum(c1, c2).max(axis=1)
    return SchemeResult("sat_only", rates, cfg.radio.bandwidth)


def _relay_rates(cfg: ScenarioConfig, sats: np.ndarray, relays: np.ndarray) -> np.ndarray:
    """Per-slot E2E rate for each relay position; ``relays`` is ``(G, 3)``.

    Returns ``(G, N)``.
    """
    c1 = link_capacity(link_distance(sats, cfg.src_pos), cfg.radio)  # (N, I')
    d2 = link_distance(sats[None, :, :, :], relays[:, None, None, :])  # (G, N, I')
    c2 = link_capacity(d2, cfg.radio)
    c3 = link_capacity(link_distance(relays, cfg.dst_pos), cfg.radio)  # (G,)
    e2e = np.minimum(np.minimum(c1[None], c2), c3[:, None, None])
    return e2e.max(axis=2)


def _check_relay(cfg: ScenarioConfig, pos: np.ndarray) -> None:
    if np.array_equal(pos, cfg.src_pos) or np.array_equal(pos, cfg.dst_pos):
        raise ValueError(f"relay at {pos} coincides with Src or Dst (zero-length hop)")


def fixed_relay_eval(position, cfg: ScenarioConfig, track=None, name: str = "fixed_relay") -> SchemeResult:
    pos = np.asarray(position, dtype=float)
    _check_relay(cfg, pos)
    _, sats = track if track is not None else candidate_track(cfg)
    rates = _relay_rates(cfg, sats, pos[None, :])[0]
    return SchemeResult(name, rates, cfg.radio.bandwidth, position=pos)


def relay_grid(cfg: ScenarioConfig, grid_step: float, altitude: float) -> np.ndarray:
    """Grid points over the scenario area, minus any that sit on Src/Dst.

    Points are ordered lexicographically by (x, y).
    """
    if not grid_step > 0:
        raise ValueError(f"grid_step must be > 0, got {grid_step}")
    axes = []
    for lo, hi in zip(cfg.area_min, cfg.area_max):
        # small slack so an endpoint that is an exact multiple is kept
        count = int(np.floor((hi - lo) / grid_step + 1e-9)) + 1
        axes.append(lo + grid_step * np.arange(count))
    xs, ys = np.meshgrid(axes[0], axes[1], indexing="ij")
    pts = np.stack([xs.ravel(), ys.ravel(), np.full(xs.size, float(altitude))], axis=1)
    keep = ~(np.all(pts == cfg.src_pos, axis=1) | np.all(pts == cfg.dst_pos, axis=1))
    return pts[keep]


def best_grid_index(means: np.ndarray, points: np.ndarray) -> int:
    """Index of the highest mean; ties go to the smallest (x, y)."""
    top = np.flatnonzero(means == means.max())
    order = np.lexsort((points[top, 1], points[top, 0]))
    return int(top[order[0]])


def fixed_relay_sweep(
    cfg: ScenarioConfig,
    grid_step: float = 95 * KM,
    relay_altitude: Optional[float] = None,
    name: Optional[str] = None,
    chunk: int = 256,
) -> SchemeResult:
    """Exhaustive placement search for a static relay at ``relay_altitude``.

    Each grid point is scored by its episode-mean E2E rate with per-slot best
    association; the winner's full trace is returned.
    """
    alt = cfg.hap_altitude if relay_altitude is None else float(relay_altitude)
    pts = relay_grid(cfg, grid_step, alt)
    if len(pts) == 0:
        raise ValueError("relay grid is empty")
    track = candidate_track(cfg)
    means = np.concatenate([
        _relay_rates(cfg, track[1], pts[i:i + chunk]).mean(axis=1)
        for i in range(0, len(pts), chunk)
    ])
    best = best_grid_index(means, pts)
    if name is None:
        name = "fixed_ground" if alt == 0 else "fixed_hap"
    return fixed_relay_eval(pts[best], cfg, track=track, name=name)


def compare_schemes(
    cfg: ScenarioConfig,
    params=None,
    grid_step: float = 95 * KM,
    schemes: Sequence[str] = ("direct", "sat_only", "fixed_ground", "fixed_hap"),
) -> List[SchemeResult]:
    """Run the requested baselines and, given trained params, the mobile HAP."""
    out = []
    track = None
    for s in schemes:
        if s == "direct":
            out.append(direct_rate(cfg))
        elif s == "sat_only":
            track = track or candidate_track(cfg)
            out.append(sat_only(cfg, track))
        elif s == "fixed_ground":
            out.append(fixed_relay_sweep(cfg, grid_step, 0.0))
        elif s == "fixed_hap":
            out.append(fixed_relay_sweep(cfg, grid_step, cfg.hap_altitude))
        else:
            raise ValueError(f"unknown scheme {s!r}; valid: {', '.join(SCHEMES)}")
    if params is not None:
        from .agent import evaluate

        ev = evaluate(params, cfg, episodes=1)
        out.append(SchemeResult("mobile_hap", ev["rates"], cfg.radio.bandwidth))
    return out


SCHEMES = ("direct", "sat_only", "fixed_ground", "fixed_hap")


def write_comparison(results: Sequence[SchemeResult], csv_path=None, json_path=None) -> None:
    rows = [r.row() for r in results]
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump({"schemes": rows}, fh, indent=2)
            fh.write("\n")


def write_scheme_traces(path, results: Sequence[SchemeResult]) -> None:
    """Per-slot E2E rate of each scheme, one column per scheme."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", *[r.name for r in results]])
        for n in range(len(results[0].rates)):
            w.writerow([n + 1, *[repr(float(r.rates[n])) for r in results]])
