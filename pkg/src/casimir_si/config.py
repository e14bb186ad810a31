"""Run configuration: a JSON file in nm / pN / um units, validated on load.

Relative file paths are resolved against the configuration file's directory.
Unknown keys are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .analysis import BudgetConstants
from .lifshitz import Geometry, QuadratureSpec, RoughnessProfile
from .materials import DrudeParams, GOLD_DRUDE, SI_RHO, SI_TAU, gold_model, silicon_model
from .pipeline import DEFAULT_DR, DEFAULT_GRID, DEFAULT_R, DEFAULT_SYSTEMATICS, TheoryModel, default_roughness


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "gold": {"table", "freq_unit", "omega_p_rad_s", "gamma_rad_s"},
    "silicon": {"table", "freq_unit", "rho_ohm_cm", "tau_s", "augment", "omega_p_scale"},
    "geometry": {"R_um", "dR_um"},
    "roughness": {"enabled", "sphere", "plate"},
    "grid_nm": None,
    "quadrature": {"rel_tol", "max_panel_depth", "xi_cutoff_factor", "interpolate"},
    "budget": {"systematics_pN", "pooling_window_nm", "dz_nm", "delta2", "confidence"},
    "synthesis": {"n_sets", "noise_pN", "seed"},
    "calibration": {"R_um", "confidence", "n_bootstrap", "seed"},
    "threads": None,
    "output_dir": None,
}


@dataclass
class RunConfig:
    gold_table: Path | None = None
    gold_freq_unit: str = "rad_s"
    gold_drude: DrudeParams = GOLD_DRUDE
    si_table: Path | None = None
    si_freq_unit: str = "rad_s"
    si_rho: float = SI_RHO
    si_tau: float = SI_TAU
    si_augment: bool = True
    si_omega_p_scale: float = 1.0
    R: float = DEFAULT_R
    dR: float = DEFAULT_DR
    roughness: bool = True
    rough_sphere: Path | None = None
    rough_plate: Path | None = None
    grid: tuple = DEFAULT_GRID
    quadrature: QuadratureSpec = QuadratureSpec()
    interpolate: bool = True
    budget: BudgetConstants = BudgetConstants()
    n_sets: int = 65
    noise_sigma: float = 12e-12
    seed: int = 0
    calib_R: float | None = None
    calib_confidence: float = 0.95
    calib_bootstrap: int = 200
    calib_seed: int = 0
    threads: int = 1
    output_dir: Path = Path("out")
    source: Path | None = field(default=None, compare=False)

    # -- derived objects -------------------------------------------------
    def gold(self):
        return gold_model(self.gold_table, self.gold_drude, freq_unit=self.gold_freq_unit)

    def silicon(self, augment=None):
        return silicon_model(self.si_rho, self.si_tau, self.si_table, self.si_omega_p_scale,
                             self.si_augment if augment is None else augment, freq_unit=self.si_freq_unit)

    def geometry(self):
        return Geometry(self.R, self.dR)

    def roughness_profiles(self):
        if not self.roughness:
            return None, None
        ds, dp = default_roughness()
        rs = RoughnessProfile.load(self.rough_sphere) if self.rough_sphere else ds
        rp = RoughnessProfile.load(self.rough_plate) if self.rough_plate else dp
        return rs, rp

    def theory_model(self, plate="silicon", roughness=None):
        """Gold sphere against a silicon (or gold) plate."""
        use_rough = self.roughness if roughness is None else roughness
        rs, rp = self.roughness_profiles() if use_rough else (None, None)
        plate_mat = self.silicon() if plate == "silicon" else self.gold()
        return TheoryModel(self.gold(), plate_mat, self.geometry(), rs, rp, self.quadrature, self.interpolate)


def _num(sec, key, val, positive=False, nonneg=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{sec}.{key}: expected a number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{sec}.{key}: must be positive, got {val!r}")
    if nonneg and val < 0:
        raise ConfigError(f"{sec}.{key}: must be non-negative, got {val!r}")
    return float(val)


def _file(base, sec, key, val):
    if val is None:
        return None
    p = Path(val)
    if not p.is_absolute():
        p = base / p
    if not p.is_file():
        raise ConfigError(f"{sec}.{key}: file not found: {p}")
    return p


def _freq_unit(sec, val):
    if val not in ("rad_s", "eV"):
        raise ConfigError(f"{sec}.freq_unit: expected 'rad_s' or 'eV', got {val!r}")
    return val


def parse_config(data: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(data) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown configuration section(s): {sorted(unknown)}")
    for sec, keys in _SCHEMA.items():
        if keys is not None and sec in data:
            if not isinstance(data[sec], dict):
                raise ConfigError(f"{sec}: expected an object")
            bad = set(data[sec]) - keys
            if bad:
                raise ConfigError(f"{sec}: unknown key(s) {sorted(bad)}")
    cfg = RunConfig()
    g = data.get("gold", {})
    cfg.gold_table = _file(base, "gold", "table", g.get("table"))
    cfg.gold_freq_unit = _freq_unit("gold", g.get("freq_unit", "rad_s"))
    cfg.gold_drude = DrudeParams(_num("gold", "omega_p_rad_s", g.get("omega_p_rad_s", GOLD_DRUDE.omega_p), positive=True),
                                 _num("gold", "gamma_rad_s", g.get("gamma_rad_s", GOLD_DRUDE.gamma), nonneg=True))
    s = data.get("silicon", {})
    cfg.si_table = _file(base, "silicon", "table", s.get("table"))
    cfg.si_freq_unit = _freq_unit("silicon", s.get("freq_unit", "rad_s"))
    cfg.si_rho = _num("silicon", "rho_ohm_cm", s.get("rho_ohm_cm", SI_RHO), positive=True)
    cfg.si_tau = _num("silicon", "tau_s", s.get("tau_s", SI_TAU), positive=True)
    cfg.si_omega_p_scale = _num("silicon", "omega_p_scale", s.get("omega_p_scale", 1.0), positive=True)
    cfg.si_augment = bool(s.get("augment", True))
    geo = data.get("geometry", {})
    cfg.R = 1e-6 * _num("geometry", "R_um", geo.get("R_um", DEFAULT_R * 1e6), positive=True)
    cfg.dR = 1e-6 * _num("geometry", "dR_um", geo.get("dR_um", DEFAULT_DR * 1e6), nonneg=True)
    r = data.get("roughness", {})
    cfg.roughness = bool(r.get("enabled", True))
    cfg.rough_sphere = _file(base, "roughness", "sphere", r.get("sphere"))
    cfg.rough_plate = _file(base, "roughness", "plate", r.get("plate"))
    if "grid_nm" in data:
        cfg.grid = parse_grid(data["grid_nm"])
    q = data.get("quadrature", {})
    try:
        cfg.quadrature = QuadratureSpec(
            _num("quadrature", "rel_tol", q.get("rel_tol", 1e-6), positive=True),
            int(q.get("max_panel_depth", 5)),
            _num("quadrature", "xi_cutoff_factor", q.get("xi_cutoff_factor", 40.0), positive=True))
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}") from None
    cfg.interpolate = bool(q.get("interpolate", True))
    b = data.get("budget", {})
    syst = b.get("systematics_pN")
    if syst is None:
        systematics = DEFAULT_SYSTEMATICS
    else:
        try:
            systematics = tuple((str(lab), 1e-12 * _num("budget", "systematics_pN", a, nonneg=True)) for lab, a in syst)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"budget.systematics_pN: expected [[label, half_width_pN], ...] ({exc})") from None
    cfg.budget = BudgetConstants(
        systematics,
        1e-9 * _num("budget", "pooling_window_nm", b.get("pooling_window_nm", 0.8), positive=True),
        1e-9 * _num("budget", "dz_nm", b.get("dz_nm", 0.8), nonneg=True),
        _num("budget", "delta2", b.get("delta2", 0.005), nonneg=True),
        _num("budget", "confidence", b.get("confidence", 0.95), positive=True))
    sy = data.get("synthesis", {})
    cfg.n_sets = int(sy.get("n_sets", 65))
    cfg.noise_sigma = 1e-12 * _num("synthesis", "noise_pN", sy.get("noise_pN", 12.0), nonneg=True)
    cfg.seed = int(sy.get("seed", 0))
    if cfg.n_sets < 2:
        raise ConfigError("synthesis.n_sets: must be at least 2")
    c = data.get("calibration", {})
    if "R_um" in c:
        cfg.calib_R = 1e-6 * _num("calibration", "R_um", c["R_um"], positive=True)
    cfg.calib_confidence = _num("calibration", "confidence", c.get("confidence", 0.95), positive=True)
    cfg.calib_bootstrap = int(c.get("n_bootstrap", 200))
    cfg.calib_seed = int(c.get("seed", 0))
    cfg.threads = int(data.get("threads", 1))
    if cfg.threads < 1:
        raise ConfigError("threads: must be at least 1")
    if "output_dir" in data:
        out = Path(data["output_dir"])
        cfg.output_dir = out if out.is_absolute() else base / out
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    cfg = parse_config(data, path.parent)
    cfg.source = path
    return cfg


def parse_grid(spec) -> tuple:
    """``"zmin:zmax:step"`` or a 3-sequence in nm -> (z_min, z_max, step) in m."""
    if isinstance(spec, str):
        parts = spec.split(":")
    else:
        parts = list(spec)
    try:
        lo, hi, step = (float(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError(f"grid must be zmin:zmax:step in nm, got {spec!r}") from None
    if not (step > 0 and 0 < lo <= hi):
        raise ConfigError(f"grid needs 0 < zmin <= zmax and step > 0, got {spec!r}")
    return lo * 1e-9, hi * 1e-9, step * 1e-9


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
