"""Experiment configuration files.

One JSON document per experiment; every numeric field carries its unit in the
key (``_nm``, ``_um``, ``_mm``, ``_deg``, ``_C``, ``_ns``, ``_hz``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .counting import GateModel
from .dispersion import CrystalSpec, load_sellmeier
from .errors import ConfigError, HeraldkitError
from .heralding import BeamGeometry, EfficiencyBudget
from .phasematching import CollectionMode, PumpSpec

DEFAULT_CONFIG = "paper-default"


@dataclass(frozen=True)
class ExperimentConfig:
    crystal: CrystalSpec
    pump: PumpSpec
    heralding_mode: CollectionMode
    heralded_mode: CollectionMode
    budget: EfficiencyBudget
    gate: GateModel | None
    source: str = ""

    @property
    def geometry(self):
        return BeamGeometry(self.pump, self.heralding_mode, self.heralded_mode)

    @property
    def theta_s_ext(self):
        return self.heralding_mode.external_angle


def _get(section, key, name, required=True, default=None):
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(f"missing field {name}.{key}")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name}.{key} must be a finite number, got {v!r}")
    return float(v)


def _section(doc, name, required=True):
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section {name!r}")
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return sec


def _mode(sec, name):
    ang = _get(sec, "external_angle_deg", name, required=False)
    return CollectionMode(
        mfd=_get(sec, "mfd_um", name) * 1e-6,
        waist_at_crystal_wo=_get(sec, "waist_um", name) * 1e-6,
        external_angle=None if ang is None else math.radians(ang),
        bandwidth_fwhm=_get(sec, "bandwidth_nm", name, required=False),
    )


def config_from_dict(doc, base_dir=None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    cr = _section(doc, "crystal")
    sell_ref = cr.get("sellmeier")
    if not isinstance(sell_ref, str):
        raise ConfigError("crystal.sellmeier must name a coefficient set or file")
    if base_dir is not None and (sell_ref.endswith(".json") or "/" in sell_ref):
        candidate = Path(base_dir) / sell_ref
        if candidate.exists():
            sell_ref = str(candidate)
    try:
        sell = load_sellmeier(sell_ref)
    except HeraldkitError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot load Sellmeier set {sell_ref!r}: {exc}") from None
    poling_len = _get(cr, "poling_length_mm", "crystal", required=False)
    crystal = CrystalSpec(
        length=_get(cr, "length_mm", "crystal") * 1e-3,
        poling_period=_get(cr, "poling_period_um", "crystal") * 1e-6,
        temperature=_get(cr, "temperature_C", "crystal"),
        sellmeier=sell,
        poling_length=None if poling_len is None else poling_len * 1e-3,
    )
    crystal.sellmeier.check_temperature(crystal.temperature)
    pu = _section(doc, "pump")
    pump = PumpSpec(_get(pu, "wavelength_nm", "pump"), _get(pu, "waist_um", "pump") * 1e-6)
    h1 = _mode(_section(doc, "heralding_mode"), "heralding_mode")
    h2 = _mode(_section(doc, "heralded_mode"), "heralded_mode")
    bu = _section(doc, "budget")
    budget = EfficiencyBudget(
        tau_opt=_get(bu, "tau_opt", "budget"),
        tau_smf_lens=_get(bu, "tau_smf_lens", "budget"),
        eta_det=_get(bu, "eta_det", "budget", required=False),
    )
    ga = _section(doc, "gate", required=False)
    gate = None
    if ga is not None:
        gate = GateModel(
            gate_duration_T=_get(ga, "gate_duration_ns", "gate") * 1e-9,
            background_event_rate=_get(ga, "background_rate_hz", "gate"),
            P_heralding_backgnd=_get(ga, "p_heralding_backgnd", "gate"),
            chi_D_true=_get(ga, "chi_d_true", "gate"),
        )
    return ExperimentConfig(crystal, pump, h1, h2, budget, gate)


def shipped_configs():
    d = resources.files("heraldkit") / "data" / "configs"
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def load_config(path_or_name=None) -> ExperimentConfig:
    """Load a config file, or a shipped config by name (default ``paper-default``)."""
    ref = DEFAULT_CONFIG if path_or_name is None else str(path_or_name)
    p = Path(ref)
    if p.is_file():
        text, base, source = p.read_text(), p.parent, str(p)
    else:
        res = resources.files("heraldkit") / "data" / "configs" / f"{ref}.json"
        if not res.is_file():
            raise ConfigError(f"no config file or shipped config named {ref!r}")
        text, base, source = res.read_text(), None, ref
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    cfg = config_from_dict(doc, base)
    return ExperimentConfig(cfg.crystal, cfg.pump, cfg.heralding_mode, cfg.heralded_mode,
                            cfg.budget, cfg.gate, source)
