"""LEO satellite to HAP relay simulator with a DQN trajectory/association agent."""

from .agent import DqnConfig, TrainingDiverged, evaluate, train
from .baselines import (
    SCHEMES,
    SchemeResult,
    compare_schemes,
    direct_rate,
    fixed_relay_eval,
    fixed_relay_sweep,
    sat_only,
)
from .channel import RadioParams, e2e_rate, link_capacity, link_distance
from .config import ConfigError, dump_config, load_config, parse_config
from .env import KM, RelayEnv, ScenarioConfig, calibrate_reward, decode_action, encode_action, reward
from .kinematics import HapState, KinematicsConfig, SatelliteConstellation

__version__ = "0.1.0"
