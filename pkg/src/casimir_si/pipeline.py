"""Measurement ensembles: CSV I/O, synthesis from theory and mean curves.

Files use nm and pN; everything in memory is SI.
"""
from __future__ import annotations

import csv
from decimal import Decimal
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .defaults import PLATE_ROUGHNESS, SPHERE_ROUGHNESS
from .lifshitz import ForceCurve, Geometry, QuadratureSpec, RoughnessProfile, force_curve, separation_grid
from .materials import gold_model, silicon_model
from .stats import MeasurementEnsemble

ENSEMBLE_HEADER = ("set_id", "z_nm", "F_pN")

# measurement grid and sphere radius of the reference experiment
DEFAULT_GRID = (62.33e-9, 600.04e-9, 0.17e-9)
DEFAULT_R = 101.3e-6
DEFAULT_DR = 0.15e-6
# labelled systematic half-widths (N)
DEFAULT_SYSTEMATICS = (
    ("force_calibration", 0.82e-12),
    ("calibration_voltage_noise", 0.55e-12),
    ("instrumental_sensitivity", 0.31e-12),
    ("data_resolution", 0.12e-12),
)


def default_roughness():
    """(sphere, plate) roughness profiles of the reference samples."""
    sphere = RoughnessProfile(tuple((v, h * 1e-9) for v, h in SPHERE_ROUGHNESS), "sphere")
    plate = RoughnessProfile(tuple((v, h * 1e-9) for v, h in PLATE_ROUGHNESS), "plate")
    return sphere, plate


@dataclass(frozen=True, eq=False)
class TheoryModel:
    """Everything needed to evaluate a theoretical force curve.

    ``rough_sphere``/``rough_plate`` set to None give the smooth-surface force.
    """

    sphere_material: object
    plate_material: object
    geometry: Geometry = Geometry(DEFAULT_R, DEFAULT_DR)
    rough_sphere: RoughnessProfile | None = None
    rough_plate: RoughnessProfile | None = None
    quadrature: QuadratureSpec = QuadratureSpec()
    interpolate: bool = True

    @classmethod
    def gold_silicon(cls, roughness=True, **kw):
        rs, rp = default_roughness() if roughness else (None, None)
        return cls(gold_model(), silicon_model(), rough_sphere=rs, rough_plate=rp, **kw)

    def curve(self, z, threads=1) -> ForceCurve:
        return force_curve(z, self.geometry, self.sphere_material, self.plate_material, self.quadrature,
                           self.rough_sphere, self.rough_plate, threads=threads,
                           interpolate=self.interpolate)


@dataclass(frozen=True, eq=False)
class SynthesisSpec:
    """Parameters of a synthetic measurement ensemble (SI units)."""

    model: TheoryModel | None = None
    n_sets: int = 65
    noise_sigma: float = 12e-12
    systematic_offsets: tuple = DEFAULT_SYSTEMATICS
    grid: tuple = DEFAULT_GRID
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.grid) != 3 or not self.grid[2] > 0:
            raise ValueError("grid must be (z_min, z_max, step) with step > 0")
        if not 0 < self.grid[0] <= self.grid[1]:
            raise ValueError("grid needs 0 < z_min <= z_max")
        if self.n_sets < 2:
            raise ValueError("n_sets must be at least 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        offs = tuple((str(lab), float(a)) for lab, a in self.systematic_offsets)
        if any(a < 0 for _, a in offs):
            raise ValueError("systematic half-widths must be non-negative")
        object.__setattr__(self, "systematic_offsets", offs)

    @property
    def z(self):
        return separation_grid(*self.grid)


def synthesize_ensemble(spec: SynthesisSpec, theory: ForceCurve | None = None, threads=1) -> MeasurementEnsemble:
    """Theory curve plus Gaussian noise and one uniform offset per systematic component per set.

    ``theory`` may be passed to reuse a precomputed curve on ``spec``'s grid.
    Set i draws from its own stream spawned from ``rng_seed``, so results do
    not depend on ``threads``.
    """
    z = spec.z
    if theory is None:
        model = spec.model if spec.model is not None else TheoryModel.gold_silicon()
        theory = model.curve(z, threads=threads)
    elif theory.z.shape != z.shape or not np.allclose(theory.z, z, rtol=0, atol=1e-15):
        raise ValueError("theory curve is not on the synthesis grid")
    F0 = theory.F
    half = np.array([a for _, a in spec.systematic_offsets])
    seeds = np.random.SeedSequence(spec.rng_seed).spawn(spec.n_sets)

    def one(seed):
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, spec.noise_sigma, z.size) if spec.noise_sigma > 0 else 0.0
        offset = float(np.sum(rng.uniform(-half, half))) if half.size else 0.0
        return F0 + noise + offset

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, seeds))
    else:
        rows = [one(s) for s in seeds]
    return MeasurementEnsemble(z.copy(), np.vstack(rows))


def mean_curve(ens: MeasurementEnsemble) -> ForceCurve:
    """Pointwise mean over sets, tagged ``experimental_mean``."""
    return ForceCurve(ens.z.copy(), ens.F.mean(axis=0), "experimental_mean")


def _to_unit(x, exp):
    # shift the shortest round-trip decimal of x; exact in both directions
    return format(Decimal(repr(float(x))).scaleb(exp).normalize(), "f")


def _from_unit(s, exp):
    return float(Decimal(s.strip()).scaleb(-exp))


def save_ensemble(ens: MeasurementEnsemble, path):
    """Write ``set_id,z_nm,F_pN`` rows, grid repeated per set; values round-trip exactly."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ENSEMBLE_HEADER)
        for i, row in enumerate(ens.F):
            for z, f in zip(ens.z, row):
                w.writerow((i, _to_unit(z, 9), _to_unit(f, 12)))


def load_ensemble(path) -> MeasurementEnsemble:
    """Read an ensemble CSV; sets must share one grid exactly."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ensemble file not found: {path}")
    sets: dict[str, tuple[list, list]] = {}
    header_seen = False
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if not header_seen:
                if tuple(c.strip() for c in row) != ENSEMBLE_HEADER:
                    raise ValueError(f"{path}:{lineno}: expected header {','.join(ENSEMBLE_HEADER)}")
                header_seen = True
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                z, f = _from_unit(row[1], 9), _from_unit(row[2], 12)
            except ArithmeticError:
                raise ValueError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
            if not (np.isfinite(z) and np.isfinite(f)):
                raise ValueError(f"{path}:{lineno}: non-finite value in {row!r}")
            zs, fs = sets.setdefault(row[0].strip(), ([], []))
            zs.append(z)
            fs.append(f)
    if not sets:
        raise ValueError(f"{path}: no measurement rows")
    ids = list(sets)
    ref_id = ids[0]
    ref = np.array(sets[ref_id][0])
    for sid in ids[1:]:
        zs = np.array(sets[sid][0])
        if zs.shape != ref.shape or np.any(zs != ref):
            raise ValueError(f"{path}: set {sid!r} has a different separation grid from set {ref_id!r} "
                             f"({zs.size} vs {ref.size} points)")
    F = np.array([sets[s][1] for s in ids])
    return MeasurementEnsemble(ref, F)
