"""Scenario configuration: schema, defaults, presets, and validation.

Configs are nested JSON. Every key has a default; unknown keys are
rejected with their dotted path. Presets shipping with the package encode
the reference simulation scenario (full scale and a reduced desk scale)
for both sensing waveforms.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from importlib import resources

import numpy as np

from .echo import LinkBudget
from .pipeline import SectorScanner
from .scene import (
    BaseStation,
    MovingTarget,
    PatternConfig,
    Scene,
    StaticScatterer,
    TiltState,
)
from .waveform import Numerology, SlotPlan, build_slot_plan

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Configuration rejected; the message carries the offending key path."""


DEFAULTS: dict = {
    "waveform": "ofdm",
    "seed": 1,
    "carrier_hz": 3.7e9,
    "bandwidth_hz": 50e6,
    "transmit_power_w": 1000.0,
    "numerology": {"mu": 2},
    "slot": {"n_dl": 6, "n_sense_rx": 5, "n_ul": 3, "slots_per_frame": 40},
    "sampling": {"sample_rate_hz": None},  # None -> 1024 x subcarrier spacing
    "noise": {"figure_db": 5.0, "temperature_k": 290.0, "enabled": True},
    "path_loss": {"exponent": 1.785, "two_way": True},
    "antenna": {
        "hpbw_elevation_deg": 6.0,
        "hpbw_azimuth_deg": 6.0,
        "gain_max_db": 21.0,
        "side_lobe_db": 30.0,
        "front_back_db": 30.0,
        "elements_horizontal": 16,
        "elements_vertical": 12,
    },
    "bs": {"position": [0.0, 0.0, 60.0], "boresight_deg": 45.0, "downtilt_deg": 0.0},
    "sector": {"width_deg": 45.0, "azimuth_bins": 45},
    "scan": {"count": 9, "rma_window": 3},
    "fault": {"offset_deg": 0.0, "at_scan": 5},
    "detector": {"threshold": 0.01, "min_fraction": 0.05, "tau_reg": None},
    "estimator": {
        "lookup_step_deg": 0.01,
        "grid_max_deg": 10.0,
        "grid_step_deg": 0.1,
        "two_way_ratio": True,
        "resolution_deg": 0.01,
        "trim_fraction": 0.0,
    },
    "peaks": {
        "prominence_db": 10.0,
        "min_separation_bins": 5,
        "max_peaks": 16,
        "dynamic_range_db": 20.0,
    },
    "payload": {"per_slot": False},
    "scene": {"static": [], "moving": []},
}

_STATIC_KEYS = {"range_m", "azimuth_deg", "diameter_m", "height_m"}
_MOVING_KEYS = {"position", "range_m", "azimuth_deg", "height_m", "velocity", "rcs_m2"}


def _check_unknown(data, reference, path=""):
    for key, value in data.items():
        if key not in reference:
            raise ConfigError(f"unknown config key: {path}{key}")
        if isinstance(reference[key], dict) and key != "scene":
            if not isinstance(value, dict):
                raise ConfigError(f"{path}{key} must be a mapping")
            _check_unknown(value, reference[key], f"{path}{key}.")


def _check_scene_entries(scene_cfg):
    for i, entry in enumerate(scene_cfg.get("static", [])):
        extra = set(entry) - _STATIC_KEYS
        if extra:
            raise ConfigError(f"unknown config key: scene.static[{i}].{sorted(extra)[0]}")
        missing = _STATIC_KEYS - set(entry)
        if missing:
            raise ConfigError(f"scene.static[{i}] missing {sorted(missing)[0]}")
    for i, entry in enumerate(scene_cfg.get("moving", [])):
        extra = set(entry) - _MOVING_KEYS
        if extra:
            raise ConfigError(f"unknown config key: scene.moving[{i}].{sorted(extra)[0]}")
        if "velocity" not in entry:
            raise ConfigError(f"scene.moving[{i}] missing velocity")
        has_polar = "range_m" in entry and "azimuth_deg" in entry
        if ("position" in entry) == has_polar:
            raise ConfigError(
                f"scene.moving[{i}] needs either position or range_m+azimuth_deg"
            )


def _merge(defaults, overrides, path=""):
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value, f"{path}{key}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ScenarioConfig:
    """Validated scenario parameters plus builders for the domain objects."""

    def __init__(self, data: dict, source: str = "<dict>"):
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: config root must be a mapping")
        _check_unknown(data, DEFAULTS)
        _check_scene_entries(data.get("scene", {}))
        if "downtilt_deg" not in data.get("bs", {}):
            logger.info("%s: bs.downtilt_deg not given, defaulting to 0 deg", source)
        self.data = _merge(DEFAULTS, data)
        self.source = source
        try:
            self._validate()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: {exc}") from exc

    # -- raw access ------------------------------------------------------
    def __getitem__(self, key):
        return self.data[key]

    def get(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            node = node[part]
        return node

    def replace(self, **dotted_updates) -> "ScenarioConfig":
        """New config with dotted-path keys replaced (e.g. fault__offset_deg)."""
        data = copy.deepcopy(self.data)
        for dotted, value in dotted_updates.items():
            parts = dotted.split("__")
            node = data
            for p in parts[:-1]:
                node = node[p]
            if parts[-1] not in node:
                raise ConfigError(f"unknown config key: {'.'.join(parts)}")
            node[parts[-1]] = value
        return ScenarioConfig(data, source=self.source)

    # -- derived values ---------------------------------------------------
    @property
    def waveform(self) -> str:
        return self.data["waveform"]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def sample_rate_hz(self) -> float:
        rate = self.data["sampling"]["sample_rate_hz"]
        if rate is None:
            return 1024.0 * self.numerology().scs_hz
        return float(rate)

    def numerology(self) -> Numerology:
        return Numerology(int(self.data["numerology"]["mu"]))

    def slot_plan(self) -> SlotPlan:
        s = self.data["slot"]
        return build_slot_plan(
            self.numerology(), self.waveform, int(s["n_dl"]), int(s["n_sense_rx"]),
            int(s["n_ul"]), n_slots_per_frame=int(s["slots_per_frame"]),
        )

    def pattern(self) -> PatternConfig:
        a = self.data["antenna"]
        return PatternConfig(
            hpbw_elevation_deg=a["hpbw_elevation_deg"],
            hpbw_azimuth_deg=a["hpbw_azimuth_deg"],
            gain_max_db=a["gain_max_db"],
            side_lobe_db=a["side_lobe_db"],
            front_back_db=a["front_back_db"],
            elements_horizontal=int(a["elements_horizontal"]),
            elements_vertical=int(a["elements_vertical"]),
        )

    def base_station(self) -> BaseStation:
        b = self.data["bs"]
        return BaseStation(tuple(float(v) for v in b["position"]),
                           float(b["boresight_deg"]), float(b["downtilt_deg"]),
                           self.pattern())

    def scene(self) -> Scene:
        bs = self.base_station()
        statics = tuple(
            StaticScatterer(e["range_m"], e["azimuth_deg"], e["diameter_m"],
                            e["height_m"])
            for e in self.data["scene"]["static"]
        )
        movers = []
        for e in self.data["scene"]["moving"]:
            if "position" in e:
                pos = tuple(float(v) for v in e["position"])
            else:
                az = math.radians(float(e["azimuth_deg"]))
                r = float(e["range_m"])
                pos = (bs.position[0] + r * math.cos(az),
                       bs.position[1] + r * math.sin(az),
                       float(e.get("height_m", 0.0)))
            movers.append(MovingTarget(pos, tuple(float(v) for v in e["velocity"]),
                                       float(e.get("rcs_m2", 1.0))))
        return Scene(bs, statics, tuple(movers))

    def link_budget(self) -> LinkBudget:
        d = self.data
        return LinkBudget(
            transmit_power_w=float(d["transmit_power_w"]),
            carrier_hz=float(d["carrier_hz"]),
            path_loss_exponent=float(d["path_loss"]["exponent"]),
            noise_figure_db=float(d["noise"]["figure_db"]),
            system_temperature_k=float(d["noise"]["temperature_k"]),
            bandwidth_hz=float(d["bandwidth_hz"]),
            two_way_path_loss=bool(d["path_loss"]["two_way"]),
        )

    def tilt_state(self) -> TiltState:
        f = self.data["fault"]
        return TiltState(float(self.data["bs"]["downtilt_deg"]),
                         float(f["offset_deg"]), int(f["at_scan"]))

    def scanner(self, seed: int | None = None) -> SectorScanner:
        sec = self.data["sector"]
        return SectorScanner(
            self.scene(), self.slot_plan(), self.link_budget(),
            sample_rate_hz=self.sample_rate_hz,
            bandwidth_hz=float(self.data["bandwidth_hz"]),
            sector_width_deg=float(sec["width_deg"]),
            n_azimuth_bins=int(sec["azimuth_bins"]),
            master_seed=self.seed if seed is None else int(seed),
            noise_enabled=bool(self.data["noise"]["enabled"]),
            per_slot_payload=bool(self.data["payload"]["per_slot"]),
        )

    def _validate(self):
        self.slot_plan()
        self.scene()
        self.link_budget()
        self.tilt_state()
        if self.sample_rate_hz <= 0:
            raise ConfigError("sampling.sample_rate_hz must be positive")
        scan = self.data["scan"]
        if int(scan["count"]) < 1 or int(scan["rma_window"]) < 1:
            raise ConfigError("scan.count and scan.rma_window must be >= 1")
        if int(self.data["fault"]["at_scan"]) < 1:
            raise ConfigError("fault.at_scan must be >= 1")
        det = self.data["detector"]
        if det["threshold"] <= 0 or not 0 <= det["min_fraction"] <= 1:
            raise ConfigError("detector thresholds out of range")

    # -- identity ----------------------------------------------------------
    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"),
                          allow_nan=False)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def parse_override(expr: str):
    """Split a ``dotted.path=value`` override; values parse as JSON, else strings."""
    if "=" not in expr:
        raise ConfigError(f"override {expr!r} must look like key.path=value")
    dotted, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return dotted.strip(), value


def apply_overrides(data: dict, overrides) -> dict:
    data = copy.deepcopy(data)
    for expr in overrides or ():
        dotted, value = parse_override(expr)
        parts = dotted.split(".")
        node = data
        ref = DEFAULTS
        for p in parts[:-1]:
            if not isinstance(ref, dict) or p not in ref:
                raise ConfigError(f"unknown config key: {dotted}")
            ref = ref[p]
            node = node.setdefault(p, {})
        if not isinstance(ref, dict) or parts[-1] not in ref:
            raise ConfigError(f"unknown config key: {dotted}")
        node[parts[-1]] = value
    return data


def load_config(path, overrides=None) -> ScenarioConfig:
    """Read, default, and validate a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if overrides:
        data = apply_overrides(data, overrides)
    return ScenarioConfig(data, source=str(path))


def available_presets() -> list[str]:
    files = resources.files("tiltsense").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str, overrides=None) -> ScenarioConfig:
    path = resources.files("tiltsense").joinpath("presets", f"{name}.json")
    if not path.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(available_presets())}"
        )
    data = json.loads(path.read_text(encoding="utf-8"))
    if overrides:
        data = apply_overrides(data, overrides)
    return ScenarioConfig(data, source=f"preset:{name}")
