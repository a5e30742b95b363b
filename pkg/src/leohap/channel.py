"""Line-of-sight RF link model and decode-and-forward rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class RadioParams:
    """Radio settings shared by every hop.

    ``reference_snr`` is the SNR at 1 m, i.e. received reference power times
    transmit power over noise variance, so distances must be in meters.
    """

    bandwidth: float = 1e9
    reference_snr: float = 1e9
    pathloss_exponent: float = 2.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")
        if not self.reference_snr > 0:
            raise ValueError(f"reference_snr must be > 0, got {self.reference_snr}")
        if not self.pathloss_exponent >= 1:
            raise ValueError(f"pathloss_exponent must be >= 1, got {self.pathloss_exponent}")


@dataclass(frozen=True)
class LinkRates:
    c_src_sat: float
    c_sat_hap: float
    c_hap_dst: float
    e2e: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.c_src_sat, self.c_sat_hap, self.c_hap_dst, self.e2e)


@dataclass(frozen=True)
class BufferState:
    q_sat: float = 0.0
    q_hap: float = 0.0

    def __post_init__(self):
        if self.q_sat < 0 or self.q_hap < 0:
            raise ValueError("buffer occupancy must be non-negative")


def link_distance(p, q):
    """Euclidean distance between points (broadcasts over leading axes)."""
    diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    return d if np.ndim(d) else float(d)


def link_capacity(d, rp: RadioParams):
    """Shannon capacity in bps of a LoS link of length ``d`` meters.

    ``B * log2(1 + gamma0 / d**alpha)``. A zero distance is rejected since the
    path-loss model is singular there.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distance must be > 0 (path-loss model is singular at 0)")
    snr = rp.reference_snr / d**rp.pathloss_exponent
    c = rp.bandwidth * np.log1p(snr) / np.log(2.0)
    return c if c.ndim else float(c)


def e2e_rate(c1, c2, c3):
    """Bufferless decode-and-forward rate: the weakest hop wins."""
    r = np.minimum(np.minimum(c1, c2), c3)
    return r if np.ndim(r) else float(r)


def hop_rates(src, sat, hap, dst, rp: RadioParams) -> LinkRates:
    c1 = link_capacity(link_distance(src, sat), rp)
    c2 = link_capacity(link_distance(sat, hap), rp)
    c3 = link_capacity(link_distance(hap, dst), rp)
    return LinkRates(c1, c2, c3, e2e_rate(c1, c2, c3))


def buffered_hop_rates(
    caps: LinkRates, buf: BufferState, dt: float = 1.0
) -> Tuple[Tuple[float, float, float], BufferState]:
    """Information-causal per-hop rates and the buffer state after one slot.

    A relay may forward at most what it holds (``Q / dt``) plus what arrives
    during the slot. Returns ``((r_src_sat, r_sat_hap, r_hap_dst), new_buf)``.
    """
    r1 = caps.c_src_sat
    r2 = min(caps.c_sat_hap, buf.q_sat / dt + r1)
    r3 = min(caps.c_hap_dst, buf.q_hap / dt + r2)
    q_sat = max(0.0, buf.q_sat + (r1 - r2) * dt)
    q_hap = max(0.0, buf.q_hap + (r2 - r3) * dt)
    return (r1, r2, r3), BufferState(q_sat, q_hap)
