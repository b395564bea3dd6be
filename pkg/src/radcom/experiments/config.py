"""JSON experiment configuration.

Keys carry their units (``gamma_p_db``, ``d_r`` in metres). Scenario keys
sit at the top level next to the experiment keys::

    {
      "n_antennas": 4, "gamma_p_db": 110, "rbar_m": 0.5, "gamma_b_db": -10,
      "schemes": ["bb_noma", "tdma", "cbf_no_sic"],
      "sweep": {"param": "gamma_b_db", "values": [-20, -10, 0]},
      "trials": 50, "grid_points": 61
    }
"""

import json
import math
from dataclasses import dataclass, field, fields

from ..channel import Scenario
from ..errors import ContractViolation
from ..penalty import PenaltyConfig

SCHEMES = ("bb_noma", "cb_noma", "tdma", "cbf_no_sic", "tdma_multi")
SINGLE_PAIR = {"bb_noma", "tdma", "cbf_no_sic"}
SWEEP_PARAMS = ("gamma_b_db", "rbar_m", "gamma_p_db", "k_pairs")

# R-user angles used when the number of pairs changes
ANGLE_PRESETS = {
    1: [0.0],
    2: [-60.0, 60.0],
    3: [-60.0, 0.0, 60.0],
    4: [-60.0, -30.0, 30.0, 60.0],
    5: [-60.0, -30.0, 0.0, 30.0, 60.0],
    6: [-60.0, -40.0, -20.0, 20.0, 40.0, 60.0],
}

SCENARIO_KEYS = tuple(f.name for f in fields(Scenario))


class ConfigError(ContractViolation):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class Sweep:
    param: str
    values: list


@dataclass
class ExperimentConfig:
    scenario: dict = field(default_factory=dict)
    schemes: list = field(default_factory=lambda: ["bb_noma"])
    sweep: Sweep = None
    trials: int = 200
    penalty: dict = field(default_factory=dict)
    grid_points: int = 181
    beam_width_deg: float = 10.0
    out_dir: str = "results"
    csv_name: str = "rates.csv"
    timing: bool = False

    def __post_init__(self):
        if self.sweep is None:
            base = Scenario(**self.scenario)
            self.sweep = Sweep("gamma_b_db", [base.gamma_b_db])
        self.validate()

    @property
    def seed(self):
        return int(self.scenario.get("seed", 0))

    def penalty_config(self):
        try:
            return PenaltyConfig.from_dict(self.penalty)
        except (ContractViolation, TypeError) as exc:
            raise ConfigError(f"field 'penalty': {exc}") from None

    def scenario_at(self, value, seed):
        """Scenario for one sweep value and trial seed."""
        d = dict(self.scenario)
        d[self.sweep.param] = value
        if self.sweep.param == "k_pairs":
            d["k_pairs"] = int(value)
            d["r_angles_deg"] = angles_for(int(value))
        d["seed"] = seed
        return Scenario(**d)

    def validate(self):
        unknown = set(self.scenario) - set(SCENARIO_KEYS)
        if unknown:
            raise ConfigError(f"unknown scenario field(s): {sorted(unknown)}")
        if not self.schemes:
            raise ConfigError("field 'schemes': at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"field 'schemes': unknown scheme {s!r}; choose from {SCHEMES}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("field 'schemes': duplicate entries")
        if self.sweep.param not in SWEEP_PARAMS:
            raise ConfigError(
                f"field 'sweep.param': {self.sweep.param!r} is not one of {SWEEP_PARAMS}")
        if not self.sweep.values:
            raise ConfigError("field 'sweep.values': empty")
        for v in self.sweep.values:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ConfigError(f"field 'sweep.values': {v!r} is not a finite number")
        if not isinstance(self.trials, int) or isinstance(self.trials, bool) or self.trials < 1:
            raise ConfigError("field 'trials': must be an integer >= 1")
        if not isinstance(self.grid_points, int) or self.grid_points < 3 or self.grid_points % 2 == 0:
            raise ConfigError("field 'grid_points': must be an odd integer >= 3")
        if not self.beam_width_deg > 0:
            raise ConfigError("field 'beam_width_deg': must be positive")
        self.penalty_config()
        for value in self.sweep.values:
            try:
                sc = self.scenario_at(value, 0)
            except KeyError:
                raise ConfigError(f"field 'sweep.values': no R-user angle preset for K={value}")
            except ContractViolation as exc:
                raise ConfigError(f"{self.sweep.param}={value}: {exc}") from None
            for s in self.schemes:
                if s in SINGLE_PAIR and sc.k_pairs != 1:
                    raise ConfigError(f"scheme {s!r} needs k_pairs = 1 (got {sc.k_pairs})")
                if s == "tdma_multi" and sc.k_pairs < 2:
                    raise ConfigError("scheme 'tdma_multi' needs k_pairs >= 2")


def angles_for(k):
    if k not in ANGLE_PRESETS:
        raise KeyError(k)
    return list(ANGLE_PRESETS[k])


TOP_KEYS = {"schemes", "sweep", "trials", "penalty", "grid_points", "beam_width_deg",
            "out_dir", "csv_name", "timing"}


def config_from_dict(d):
    if not isinstance(d, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = set(d) - TOP_KEYS - set(SCENARIO_KEYS)
    if unknown:
        raise ConfigError(f"unknown field(s): {sorted(unknown)}")
    scenario = {k: d[k] for k in SCENARIO_KEYS if k in d}
    if "k_pairs" in scenario and "r_angles_deg" not in scenario:
        try:
            scenario["r_angles_deg"] = angles_for(int(scenario["k_pairs"]))
        except (KeyError, ValueError, TypeError):
            raise ConfigError("field 'r_angles_deg': required for this k_pairs") from None
    kw = {k: d[k] for k in TOP_KEYS if k in d}
    if "sweep" in kw:
        sw = kw["sweep"]
        if not isinstance(sw, dict) or set(sw) != {"param", "values"}:
            raise ConfigError("field 'sweep': expected an object with 'param' and 'values'")
        if not isinstance(sw["values"], list):
            raise ConfigError("field 'sweep.values': expected a list")
        kw["sweep"] = Sweep(sw["param"], list(sw["values"]))
    try:
        return ExperimentConfig(scenario=scenario, **kw)
    except ConfigError:
        raise
    except (ContractViolation, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    """Parse and validate a JSON config file; errors name the line or field."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(d)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
