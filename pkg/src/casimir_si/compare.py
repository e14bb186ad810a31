"""Theory versus experiment: differences inside the confidence envelope, agreement
measure, and force ratios between material pairs."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lifshitz import ForceCurve
from .stats import ConfidenceEnvelope, ExperimentalErrorBudget, TheoreticalErrorBudget

# relative tolerance on shared grids
_GRID_RTOL = 1e-9
# |slope| * span below this (relative change across the grid) is "flat"
FLAT_TOLERANCE = 1e-9


class GridMismatchError(ValueError):
    pass


def _check_grid(za, zb, what):
    za, zb = np.asarray(za), np.asarray(zb)
    if za.shape != zb.shape or not np.allclose(za, zb, rtol=_GRID_RTOL, atol=0):
        raise GridMismatchError(f"{what}: separation grids differ")


@dataclass(eq=False)
class AgreementCurve:
    z: np.ndarray
    measure: np.ndarray
    excluded: np.ndarray

    @property
    def minimum(self):
        """(value, (z_lo, z_hi)): the minimum and the contiguous z-range within 1e-3 relative of it."""
        i = int(np.argmin(self.measure))
        m = self.measure[i]
        near = self.measure <= m * (1 + 1e-3)
        lo = hi = i
        while lo > 0 and near[lo - 1]:
            lo -= 1
        while hi < near.size - 1 and near[hi + 1]:
            hi += 1
        return float(m), (float(self.z[lo]), float(self.z[hi]))


@dataclass(eq=False)
class RatioCurve:
    z: np.ndarray
    ratio: np.ndarray
    excluded: np.ndarray
    slope: float
    trend: str
    strictly_monotone: bool


@dataclass(eq=False)
class ComparisonReport:
    z: np.ndarray
    differences: np.ndarray
    envelope: ConfidenceEnvelope
    within: np.ndarray
    fraction_within: float
    agreement: AgreementCurve
    min_agreement: tuple
    cutoff_z: float | None

    def summary(self):
        m, (a, b) = self.min_agreement
        cut = "none on grid" if self.cutoff_z is None else f"{self.cutoff_z * 1e9:.2f} nm"
        return "\n".join([
            f"points = {self.z.size}",
            f"fraction within envelope = {self.fraction_within:.4f}",
            f"agreement at {self.z[0] * 1e9:.2f} nm = {100 * self.agreement.measure[0]:.3f}%",
            f"minimum agreement = {100 * m:.3f}% over {a * 1e9:.2f}-{b * 1e9:.2f} nm",
            f"envelope exceeds |F_theor| from = {cut}",
        ])

    def to_csv(self, path):
        with Path(path).open("w") as fh:
            fh.write("z_nm,diff_pN,xi_pN,within\n")
            for z, d, x, w in zip(self.z, self.differences, self.envelope.Xi, self.within):
                fh.write(f"{z * 1e9:.6f},{d * 1e12:.9e},{x * 1e12:.9e},{int(w)}\n")


def agreement_measure(envelope: ConfidenceEnvelope, F_theor: ForceCurve) -> AgreementCurve:
    """Xi(z) / |F_theor(z)|; points with zero theoretical force are excluded with a warning."""
    _check_grid(envelope.z, F_theor.z, "agreement measure")
    mag = np.abs(F_theor.F)
    bad = mag == 0
    if np.any(bad):
        warnings.warn(f"agreement measure: {int(bad.sum())} point(s) with zero force excluded", RuntimeWarning)
    keep = ~bad
    if not np.any(keep):
        raise ValueError("theoretical force is zero everywhere")
    return AgreementCurve(F_theor.z[keep], envelope.Xi[keep] / mag[keep], F_theor.z[bad])


def difference_report(F_theor: ForceCurve, F_expt: ForceCurve, envelope: ConfidenceEnvelope) -> ComparisonReport:
    _check_grid(F_theor.z, F_expt.z, "theory vs experiment")
    _check_grid(F_theor.z, envelope.z, "theory vs envelope")
    diff = F_theor.F - F_expt.F
    within = np.abs(diff) <= envelope.Xi
    agr = agreement_measure(envelope, F_theor)
    over = np.nonzero(np.abs(F_theor.F) < envelope.Xi)[0]
    cutoff = float(F_theor.z[over[0]]) if over.size else None
    return ComparisonReport(F_theor.z.copy(), diff, envelope, within, float(within.mean()),
                            agr, agr.minimum, cutoff)


def force_ratio(curve_a: ForceCurve, curve_b: ForceCurve, zero_rtol=1e-12) -> RatioCurve:
    """Pointwise curve_a / curve_b with a trend classification from a least-squares slope.

    Points where |curve_b| <= zero_rtol * max|curve_b| are excluded with a warning.
    """
    _check_grid(curve_a.z, curve_b.z, "force ratio")
    scale = np.max(np.abs(curve_b.F))
    bad = np.abs(curve_b.F) <= zero_rtol * scale
    if np.any(bad):
        warnings.warn(f"force ratio: {int(bad.sum())} point(s) with vanishing denominator excluded",
                      RuntimeWarning)
    keep = ~bad
    z, r = curve_a.z[keep], curve_a.F[keep] / curve_b.F[keep]
    if z.size >= 2:
        slope = float(np.polyfit(z, r, 1)[0])
        span = (z[-1] - z[0]) * abs(slope) / max(np.max(np.abs(r)), 1e-300)
        trend = "flat" if span <= FLAT_TOLERANCE else ("increasing" if slope > 0 else "decreasing")
        d = np.diff(r)
        strict = bool(np.all(d > 0) or np.all(d < 0))
    else:
        slope, trend, strict = 0.0, "flat", False
    return RatioCurve(z, r, curve_a.z[bad], slope, trend, strict)


def write_agreement_csv(agr: AgreementCurve, path):
    with Path(path).open("w") as fh:
        fh.write("z_nm,agreement\n")
        for z, m in zip(agr.z, agr.measure):
            fh.write(f"{z * 1e9:.6f},{m:.9e}\n")


def write_ratio_csv(rc: RatioCurve, path):
    with Path(path).open("w") as fh:
        fh.write("z_nm,ratio\n")
        for z, r in zip(rc.z, rc.ratio):
            fh.write(f"{z * 1e9:.6f},{r:.9e}\n")


def write_budget_csv(path, F_expt: ForceCurve, exp_budget: ExperimentalErrorBudget,
                     theor_budget: TheoreticalErrorBudget, envelope: ConfidenceEnvelope):
    """Rows ``z_nm,delta_expt,delta_theor,Xi_pN`` with delta_expt = total experimental error / |mean force|."""
    _check_grid(F_expt.z, envelope.z, "budget")
    dt = np.broadcast_to(np.asarray(theor_budget.delta_theor, dtype=float), envelope.z.shape)
    with np.errstate(divide="ignore"):
        de = exp_budget.delta_total / np.abs(F_expt.F)
    with Path(path).open("w") as fh:
        fh.write("z_nm,delta_expt,delta_theor,Xi_pN\n")
        for z, a, b, x in zip(envelope.z, de, dt, envelope.Xi):
            fh.write(f"{z * 1e9:.6f},{a:.9e},{b:.9e},{x * 1e12:.9e}\n")
