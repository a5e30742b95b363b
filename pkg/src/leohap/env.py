"""The slotted Src -> SAT -> HAP -> Dst relaying MDP.

Each step picks one of the ``I'`` window candidates and a HAP acceleration
from a ``D x D`` grid, advances the world one slot and scores the resulting
end-to-end rate with a sigmoid centred on a baseline rate.

Timing convention: the action taken in slot ``n`` is evaluated on the
world *after* it has moved, i.e. HAP at ``q_H[n+1]`` and satellites at
``q_L[n+1]``. The observation therefore lists the candidates of the next
snapshot (satellite motion is deterministic and known in advance), together
with the HAP position and the distances/rates realized in the last slot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .channel import (
    BufferState,
    LinkRates,
    RadioParams,
    buffered_hop_rates,
    e2e_rate,
    link_capacity,
    link_distance,
)
from .kinematics import (
    HapState,
    KinematicsConfig,
    SatelliteConstellation,
    project_acceleration,
    propagate_constellation,
    step_hap,
    window_candidates,
)

KM = 1e3

TRACE_HEADER = [
    "n", "sat_global_idx", "hap_x", "hap_y", "v_x", "v_y", "a_x", "a_y",
    "d1", "d2", "d3", "c1", "c2", "c3", "e2e", "reward",
]


def _vec(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (n,) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be a finite {n}-vector, got {value!r}")
    return arr


@dataclass
class ScenarioConfig:
    """Everything that defines one relaying scenario. SI units throughout.

    ``reward_mu``/``reward_sigma`` left as ``None`` are filled in by
    :func:`calibrate_reward` from the fixed-HAP baseline.
    """

    src_pos: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0]))
    dst_pos: np.ndarray = field(default_factory=lambda: np.array([4000 * KM, 0.0, 0.0]))
    radio: RadioParams = field(default_factory=RadioParams)
    kin: KinematicsConfig = field(default_factory=KinematicsConfig)
    sat_count: int = 22
    sat_speed: float = 7.8 * KM
    sat_altitude: float = 550 * KM
    orbit_length: float = 40030 * KM
    phase_offset: float = 0.0
    orbit_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    track_origin: np.ndarray = field(default_factory=lambda: np.array([1000 * KM, 0.0]))
    hap_altitude: float = 50 * KM
    hap_init_pos: np.ndarray = field(default_factory=lambda: np.array([2000 * KM, 0.0]))
    hap_init_vel: np.ndarray = field(default_factory=lambda: np.zeros(2))
    episode_slots: int = 513
    accel_levels: int = 5
    reward_mu: Optional[float] = None
    reward_sigma: Optional[float] = None
    buffered: bool = False
    observe_velocity: bool = False
    area_min: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0]))
    area_max: np.ndarray = field(default_factory=lambda: np.array([4000 * KM, 4000 * KM]))

    def __post_init__(self):
        self.src_pos = _vec(self.src_pos, 3, "src_pos")
        self.dst_pos = _vec(self.dst_pos, 3, "dst_pos")
        self.orbit_axis = _vec(self.orbit_axis, 3, "orbit_axis")
        self.track_origin = _vec(self.track_origin, 2, "track_origin")
        self.hap_init_pos = _vec(self.hap_init_pos, 2, "hap_init_pos")
        self.hap_init_vel = _vec(self.hap_init_vel, 2, "hap_init_vel")
        self.area_min = _vec(self.area_min, 2, "area_min")
        self.area_max = _vec(self.area_max, 2, "area_max")
        if self.episode_slots < 1:
            raise ValueError(f"episode_slots must be > 0, got {self.episode_slots}")
        if self.accel_levels < 2:
            raise ValueError(f"accel_levels must be >= 2, got {self.accel_levels}")
        if self.sat_count < 1:
            raise ValueError(f"sat_count must be >= 1, got {self.sat_count}")
        if self.kin.candidate_count > self.sat_count:
            raise ValueError(
                f"kin.candidate_count ({self.kin.candidate_count}) exceeds sat_count ({self.sat_count})"
            )
        if self.kin.window_length > self.orbit_length:
            raise ValueError("kin.window_length must not exceed orbit_length")
        if not self.sat_speed > 0:
            raise ValueError(f"sat_speed must be > 0, got {self.sat_speed}")
        if not self.orbit_length > 0:
            raise ValueError(f"orbit_length must be > 0, got {self.orbit_length}")
        if self.reward_sigma is not None and not self.reward_sigma > 0:
            raise ValueError(f"reward_sigma must be > 0, got {self.reward_sigma}")
        if np.any(self.area_max <= self.area_min):
            raise ValueError("area_max must exceed area_min on both axes")

    @property
    def num_actions(self) -> int:
        return self.kin.candidate_count * self.accel_levels**2

    @property
    def obs_dim(self) -> int:
        return 3 * self.kin.candidate_count + 10 + (2 if self.observe_velocity else 0)

    def initial_constellation(self) -> SatelliteConstellation:
        return SatelliteConstellation.uniform(
            self.sat_count, self.orbit_length, self.sat_speed, self.sat_altitude,
            phase_offset=self.phase_offset, orbit_axis=self.orbit_axis,
            track_origin=self.track_origin,
        )

    def initial_hap(self) -> HapState:
        pos = np.array([*self.hap_init_pos, self.hap_altitude])
        return HapState(pos, self.hap_init_vel.copy(), self.hap_altitude)


def constellation_trajectory(cfg: ScenarioConfig) -> Iterator[SatelliteConstellation]:
    """Constellation snapshots for slots ``1..N`` (and one extra look-ahead).

    Every consumer propagates through this one routine so all schemes see
    bit-identical satellite positions.
    """
    c = cfg.initial_constellation()
    for _ in range(cfg.episode_slots + 1):
        c = propagate_constellation(c, cfg.kin.dt)
        yield c


def candidate_track(cfg: ScenarioConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Window candidates for every slot ``n = 1..N``.

    Returns ``(indices, positions)`` with shapes ``(N, I')`` and ``(N, I', 3)``.
    """
    idx, pos = [], []
    for n, c in enumerate(constellation_trajectory(cfg)):
        if n == cfg.episode_slots:
            break
        cands = window_candidates(c, cfg.kin, cfg.src_pos)
        idx.append([i for i, _ in cands])
        pos.append([p for _, p in cands])
    return np.array(idx, dtype=int), np.array(pos)


# -- actions ----------------------------------------------------------------


@dataclass(frozen=True)
class DecodedAction:
    sat_choice: int
    accel: np.ndarray
    cell: Tuple[int, int]


def accel_grid_value(level: int, levels: int, a_max: float) -> float:
    return -a_max + 2.0 * a_max * level / (levels - 1)


def decode_action(idx: int, candidates: int, levels: int, a_max: float) -> DecodedAction:
    """Split a joint action index into (satellite, acceleration cell).

    ``idx = sat * D**2 + i * D + j`` where ``(i, j)`` index the per-axis
    acceleration levels spanning ``[-a_max, a_max]``; the raw grid vector
    is projected onto the feasible disc.
    """
    n = candidates * levels * levels
    if not (isinstance(idx, (int, np.integer)) and 0 <= idx < n):
        raise ValueError(f"action index must be an int in [0, {n}), got {idx!r}")
    sat, rem = divmod(int(idx), levels * levels)
    i, j = divmod(rem, levels)
    raw = np.array([accel_grid_value(i, levels, a_max), accel_grid_value(j, levels, a_max)])
    return DecodedAction(sat, project_acceleration(raw, a_max), (i, j))


def encode_action(sat: int, i: int, j: int, levels: int) -> int:
    return (sat * levels + i) * levels + j


def zero_accel_action(cfg: ScenarioConfig, sat: int = 0) -> int:
    """Index of the centre acceleration cell; only exists for odd ``D``."""
    if cfg.accel_levels % 2 == 0:
        raise ValueError("no zero-acceleration cell when accel_levels is even")
    mid = cfg.accel_levels // 2
    return encode_action(sat, mid, mid, cfg.accel_levels)


# -- reward -----------------------------------------------------------------


_R_LO = np.finfo(float).tiny
_R_HI = np.nextafter(1.0, 0.0)


def reward(r_e2e, mu: float, sigma: float):
    """Logistic score of the E2E rate, 0.5 at ``mu``."""
    if not np.all(np.asarray(sigma) > 0):
        raise ValueError(f"sigma must be > 0, got {sigma}")
    with np.errstate(over="ignore"):
        g = (np.asarray(r_e2e, dtype=float) - mu) / sigma
    # split by sign so exp never overflows
    e = np.exp(-np.abs(g))
    out = np.where(g >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    # float64 saturates for |g| > ~37; keep the open interval
    out = np.clip(out, _R_LO, _R_HI)
    return out if out.ndim else float(out)


def reward_scale_from_trace(trace) -> Tuple[float, float]:
    """``mu`` = trace mean, ``sigma`` = largest deviation from it (or ``mu`` if flat)."""
    trace = np.asarray(trace, dtype=float)
    mu = float(trace.mean())
    sigma = float(np.max(np.abs(trace - mu)))
    if sigma == 0.0:
        sigma = mu
    return mu, sigma


def calibrate_reward(cfg: ScenarioConfig, grid_step: float = 95 * KM) -> ScenarioConfig:
    """Fill ``reward_mu``/``reward_sigma`` from the best fixed-HAP relay."""
    from .baselines import fixed_relay_sweep

    res = fixed_relay_sweep(cfg, grid_step, cfg.hap_altitude)
    mu, sigma = reward_scale_from_trace(res.rates)
    return replace(cfg, reward_mu=mu, reward_sigma=sigma)


# -- environment ------------------------------------------------------------


@dataclass(frozen=True)
class EnvState:
    constellation: SatelliteConstellation
    lookahead: SatelliteConstellation
    hap: HapState
    slot: int
    distances: Tuple[float, float, float]
    rates: Tuple[float, float, float, float]
    buffers: BufferState
    last_sat: int
    done: bool = False


@dataclass
class StepOutcome:
    next_obs: np.ndarray
    reward: float
    done: bool
    info: dict


def rate_features(rates, ref: float) -> np.ndarray:
    """Rates as natural-log ratios to ``ref``, clipped to [-10, 10].

    Relative to the bandwidth the rates are ~1e-4 and carry no usable signal;
    around the baseline rate they are O(1).
    """
    r = np.maximum(np.asarray(rates, dtype=float), np.finfo(float).tiny)
    return np.clip(np.log(r / ref), -10.0, 10.0)


def _observe(cfg: ScenarioConfig, state: EnvState) -> np.ndarray:
    scale = cfg.kin.window_length
    cands = window_candidates(state.lookahead, cfg.kin, cfg.src_pos)
    parts = [np.concatenate([p for _, p in cands]) / scale, state.hap.position / scale,
             np.asarray(state.distances) / scale,
             rate_features(state.rates, cfg.reward_mu)]
    if cfg.observe_velocity:
        # one slot at full thrust changes the speed by a_max * dt
        parts.append(state.hap.velocity / (cfg.kin.a_max * cfg.kin.dt))
    return np.concatenate(parts)


def _link_metrics(cfg, sat_pos, hap_pos, buffers: BufferState):
    d = (link_distance(cfg.src_pos, sat_pos), link_distance(sat_pos, hap_pos),
         link_distance(hap_pos, cfg.dst_pos))
    c1, c2, c3 = (link_capacity(x, cfg.radio) for x in d)
    if cfg.buffered:
        caps = LinkRates(c1, c2, c3, e2e_rate(c1, c2, c3))
        (r1, r2, r3), buffers = buffered_hop_rates(caps, buffers, cfg.kin.dt)
        rates = (r1, r2, r3, r3)
    else:
        rates = (c1, c2, c3, e2e_rate(c1, c2, c3))
    return d, (c1, c2, c3), rates, buffers


def _require_calibrated(cfg: ScenarioConfig) -> None:
    if cfg.reward_mu is None or cfg.reward_sigma is None:
        raise ValueError("reward_mu/reward_sigma unset; run calibrate_reward(cfg) first")


def reset(cfg: ScenarioConfig, seed: int = 0) -> Tuple[EnvState, np.ndarray]:
    """Initial state and observation.

    The dynamics are deterministic, so ``seed`` has no effect on the state; it
    is accepted so callers can treat every episode uniformly.
    """
    del seed
    _require_calibrated(cfg)
    c0 = cfg.initial_constellation()
    look = propagate_constellation(c0, cfg.kin.dt)
    hap = cfg.initial_hap()
    sat_idx, sat_pos = window_candidates(c0, cfg.kin, cfg.src_pos)[0]
    d, _, rates, _ = _link_metrics(cfg, sat_pos, hap.position, BufferState())
    state = EnvState(c0, look, hap, 0, d, rates, BufferState(), sat_idx)
    return state, _observe(cfg, state)


def transition(cfg: ScenarioConfig, state: EnvState, action_idx: int) -> Tuple[EnvState, StepOutcome]:
    """Pure one-slot transition: ``(state, action) -> (state', outcome)``."""
    if state.done:
        raise RuntimeError("episode is finished; call reset()")
    _require_calibrated(cfg)
    act = decode_action(action_idx, cfg.kin.candidate_count, cfg.accel_levels, cfg.kin.a_max)
    hap = step_hap(state.hap, act.accel, cfg.kin)
    const = state.lookahead
    sat_idx, sat_pos = window_candidates(const, cfg.kin, cfg.src_pos)[act.sat_choice]
    buffers = state.buffers
    if cfg.buffered and sat_idx != state.last_sat:
        # bits parked on the previous satellite cannot be forwarded by the new one
        buffers = BufferState(0.0, buffers.q_hap)
    d, caps, rates, buffers = _link_metrics(cfg, sat_pos, hap.position, buffers)
    r = reward(rates[3], cfg.reward_mu, cfg.reward_sigma)
    slot = state.slot + 1
    done = slot >= cfg.episode_slots
    nxt = EnvState(const, propagate_constellation(const, cfg.kin.dt), hap, slot, d, rates,
                   buffers, sat_idx, done)
    info = {
        "n": slot,
        "sat_global_idx": sat_idx,
        "link_rates": LinkRates(*caps, rates[3]),
        "hap": hap,
        "accel": act.accel,
        "distances": d,
        "rates": rates,
    }
    return nxt, StepOutcome(_observe(cfg, nxt), r, done, info)


class RelayEnv:
    """Stateful wrapper around :func:`reset`/:func:`transition`.

    Calibrates the reward on construction when ``cfg`` does not carry it.
    """

    def __init__(self, cfg: ScenarioConfig):
        if cfg.reward_mu is None or cfg.reward_sigma is None:
            cfg = calibrate_reward(cfg)
        self.cfg = cfg
        self.state: Optional[EnvState] = None

    @property
    def num_actions(self) -> int:
        return self.cfg.num_actions

    @property
    def obs_dim(self) -> int:
        return self.cfg.obs_dim

    def reset(self, seed: int = 0) -> np.ndarray:
        self.state, obs = reset(self.cfg, seed)
        return obs

    def step(self, action_idx: int) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        self.state, out = transition(self.cfg, self.state, action_idx)
        return out


def trace_row(out: StepOutcome) -> List:
    info = out.info
    hap = info["hap"]
    lr = info["link_rates"]
    return [info["n"], info["sat_global_idx"], *hap.position[:2], *hap.velocity,
            *info["accel"], *info["distances"], lr.c_src_sat, lr.c_sat_hap, lr.c_hap_dst,
            info["rates"][3], out.reward]


def write_trace(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
