"""Sphere-plate electrostatics and the voltage-sweep calibration fit.

The capacitance is the classical image-charge series

    C(z) = 4 pi eps0 R sinh(a) sum_{n>=1} 1 / sinh(n a),   cosh(a) = 1 + z / R,

and the attractive force magnitude is F = -(1/2) (V - V0)^2 dC/dz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats as sps
from scipy.constants import epsilon_0

_SERIES_RTOL = 1e-15
_DEFAULT_MAX_TERMS = 2_000_000


class SeriesNotConvergedError(RuntimeError):
    def __init__(self, message, partial_sum):
        super().__init__(message)
        self.partial_sum = partial_sum


class CalibrationError(RuntimeError):
    """The calibration sweep could not be fitted."""


def _alpha(z, R):
    # acosh(1 + x) computed without cancellation for small x = z/R
    x = np.asarray(z, dtype=float) / R
    return np.log1p(x + np.sqrt(x * (x + 2.0)))


def _csch(x):
    ex = np.exp(-x)
    return 2.0 * ex / (1.0 - ex * ex)


def _series(alpha, n_terms, deriv):
    """sum_n 1/sinh(n a) and, if deriv, sum_n n cosh(n a)/sinh^2(n a) for each alpha."""
    alpha = np.atleast_1d(alpha)
    # terms decay like n exp(-n a); n a = 40 puts the tail far below 1e-15 of the sum
    need = int(np.ceil(40.0 / alpha.min())) + 10
    if need > n_terms:
        n = np.arange(1, n_terms + 1)
        partial = np.sum(_csch(np.outer(alpha, n)), axis=1)
        raise SeriesNotConvergedError(
            f"image series needs ~{need} terms, cap is {n_terms}", partial)
    s0 = np.empty(alpha.size)
    s1 = np.empty(alpha.size)
    block = max(1, 4_000_000 // need)
    n = np.arange(1, need + 1, dtype=float)
    for i in range(0, alpha.size, block):
        na = np.outer(alpha[i:i + block], n)
        cs = _csch(na)
        s0[i:i + block] = cs.sum(axis=1)
        if deriv:
            # n cosh(na)/sinh(na)^2 = n csch(na) coth(na)
            s1[i:i + block] = (n * cs / np.tanh(na)).sum(axis=1)
    last = _csch(alpha * need)
    if np.any(last > _SERIES_RTOL * s0):
        raise SeriesNotConvergedError("image series did not reach 1e-15 relative accuracy", s0)
    return s0, s1


def sphere_plate_capacitance(z, R, n_terms=_DEFAULT_MAX_TERMS):
    """Capacitance (F) between a sphere of radius R and a grounded plane at gap z (m)."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0) or not R > 0:
        raise ValueError("need z > 0 and R > 0")
    a = _alpha(z_arr, R)
    s0, _ = _series(a, n_terms, deriv=False)
    out = 4 * math.pi * epsilon_0 * R * np.sinh(a) * s0
    return out if np.ndim(z) else float(out[0])


def capacitance_gradient(z, R, n_terms=_DEFAULT_MAX_TERMS):
    """dC/dz (F/m), term-by-term derivative of the image series; always negative."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0) or not R > 0:
        raise ValueError("need z > 0 and R > 0")
    a = _alpha(z_arr, R)
    s0, s1 = _series(a, n_terms, deriv=True)
    dS_da = np.cosh(a) * s0 - np.sinh(a) * s1
    da_dz = 1.0 / (R * np.sinh(a))
    out = 4 * math.pi * epsilon_0 * R * dS_da * da_dz
    return out if np.ndim(z) else float(out[0])


def electrostatic_force(z, R, V, V0, n_terms=_DEFAULT_MAX_TERMS):
    """Attractive force magnitude (N), -(1/2)(V - V0)^2 dC/dz."""
    V = np.asarray(V, dtype=float)
    return -0.5 * (V - V0) ** 2 * capacitance_gradient(z, R, n_terms)


def pfa_electrostatic_force(z, R, V, V0):
    """Leading small-gap term pi eps0 R (V - V0)^2 / z."""
    return math.pi * epsilon_0 * R * (np.asarray(V, dtype=float) - V0) ** 2 / np.asarray(z, dtype=float)


# ---------------------------------------------------------------------------
# calibration


@dataclass
class CalibrationRun:
    V_applied: float
    piezo: np.ndarray  # distance from contact, m
    F: np.ndarray  # N, attractive positive
    run_id: str = ""


@dataclass
class CalibrationSweep:
    runs: list
    repeats_per_voltage: int = 1

    def __post_init__(self):
        if len({round(r.V_applied, 12) for r in self.runs}) < 2:
            raise CalibrationError("calibration sweep needs at least 2 distinct voltages")
        for r in self.runs:
            r.piezo = np.asarray(r.piezo, dtype=float)
            r.F = np.asarray(r.F, dtype=float)
            if r.piezo.size < 5 or r.piezo.shape != r.F.shape:
                raise CalibrationError(f"run {r.run_id!r}: need >= 5 (piezo, F) points")
            d = np.diff(r.piezo)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise CalibrationError(f"run {r.run_id!r}: piezo extension must be monotone")

    def averaged(self):
        """Average repeats: arrays (V, piezo, F) with one entry per distinct (V, piezo)."""
        acc = {}
        for r in self.runs:
            for p, f in zip(r.piezo, r.F):
                acc.setdefault((round(r.V_applied, 12), round(p * 1e15)), []).append(f)
        keys = sorted(acc)
        V = np.array([k[0] for k in keys])
        P = np.array([k[1] * 1e-15 for k in keys])
        F = np.array([np.mean(acc[k]) for k in keys])
        return V, P, F

    @classmethod
    def load(cls, path):
        """Read ``V_applied,piezo_nm,F_pN,run_id`` CSV."""
        path = Path(path)
        runs = {}
        lines = path.read_text().splitlines()
        if not lines or lines[0].strip().replace(" ", "") != "V_applied,piezo_nm,F_pN,run_id":
            raise CalibrationError(f"{path}: expected header 'V_applied,piezo_nm,F_pN,run_id'")
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                v, p, f, rid = float(parts[0]), float(parts[1]), float(parts[2]), parts[3]
            except (ValueError, IndexError):
                raise CalibrationError(f"{path}:{lineno}: malformed row {line!r}") from None
            run = runs.setdefault(rid, [v, [], []])
            if run[0] != v:
                raise CalibrationError(f"{path}:{lineno}: run {rid!r} changes voltage")
            run[1].append(p * 1e-9)
            run[2].append(f * 1e-12)
        if not runs:
            raise CalibrationError(f"{path}: no data rows")
        per_v = {}
        for v, _, _ in runs.values():
            per_v[v] = per_v.get(v, 0) + 1
        return cls([CalibrationRun(v, np.array(p), np.array(f), rid) for rid, (v, p, f) in runs.items()],
                   repeats_per_voltage=min(per_v.values()))

    def save(self, path):
        with Path(path).open("w") as fh:
            fh.write("V_applied,piezo_nm,F_pN,run_id\n")
            for r in self.runs:
                for p, f in zip(r.piezo, r.F):
                    fh.write(f"{r.V_applied!r},{p * 1e9:.6f},{f * 1e12:.9e},{r.run_id}\n")


@dataclass
class CalibrationFit:
    z0: float
    dz0: float
    V0: float
    dV0: float
    per_voltage_V0: list  # (V_applied, V0 from that voltage's curve alone)
    v0_by_separation: list  # (z, V0, sigma) from the parabola vertex at each separation
    separation_dependent_V0: bool
    v0_constancy_pvalue: float
    residual_rms: float
    n_points: int
    dz0_bootstrap: float | None = None
    dV0_bootstrap: float | None = None
    confidence: float = 0.95
    diagnostics: dict = field(default_factory=dict)

    def report(self):
        lines = [
            f"z0 = {self.z0 * 1e9:.4f} +- {self.dz0 * 1e9:.4f} nm ({self.confidence:.0%}, linearised)",
            f"V0 = {self.V0:.6f} +- {self.dV0:.6f} V ({self.confidence:.0%}, linearised)",
        ]
        if self.dz0_bootstrap is not None:
            lines.append(f"bootstrap half-widths: dz0 = {self.dz0_bootstrap * 1e9:.4f} nm, "
                         f"dV0 = {self.dV0_bootstrap:.6f} V")
        lines.append(f"points = {self.n_points}, residual rms = {self.residual_rms * 1e12:.4f} pN")
        lines.append(f"V0 constancy across separation: p = {self.v0_constancy_pvalue:.4g}"
                     + (" -> SEPARATION-DEPENDENT V0" if self.separation_dependent_V0 else " (consistent)"))
        for v, v0 in self.per_voltage_V0:
            lines.append(f"  V_applied = {v:+.4f} V: fitted V0 = {v0:.6f} V")
        for k, val in self.diagnostics.items():
            lines.append(f"{k} = {val}")
        return "\n".join(lines)


def _best_v0(F, g, V):
    """V0 minimising sum (F - g (V - V0)^2)^2 at fixed gradients g; exact via the cubic."""
    # d/dV0: sum (F - g (V-V0)^2) g (V - V0) = 0, a cubic in V0
    c3 = -np.sum(g * g)
    c2 = 3 * np.sum(g * g * V)
    c1 = -np.sum(g * F) - 3 * np.sum(g * g * V * V)
    c0 = np.sum(g * F * V) + np.sum(g * g * V**3)
    roots = np.roots([c3, c2, c1, c0])
    real = roots[np.abs(roots.imag) < 1e-9 * (1 + np.abs(roots.real))].real
    if real.size == 0:
        real = roots.real
    sse = [np.sum((F - g * (V - r) ** 2) ** 2) for r in real]
    i = int(np.argmin(sse))
    return real[i], sse[i]


def _fit_point(V, P, F, R, z_bounds):
    up, ip = np.unique(P, return_inverse=True)

    def sse(z0):
        g = -0.5 * capacitance_gradient(z0 + up, R)[ip]
        return _best_v0(F, g, V)[1]

    lo, hi = z_bounds
    grid = np.geomspace(lo, hi, 40)
    vals = [sse(z) for z in grid]
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(sse, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-9 * a, "maxiter": 500})
    z0 = res.x
    g = -0.5 * capacitance_gradient(z0 + up, R)[ip]
    V0, _ = _best_v0(F, g, V)

    # Gauss-Newton polish with a scaled parameter vector
    def resid(p):
        zz = p[0] * 1e-9
        gg = -0.5 * capacitance_gradient(zz + up, R)[ip]
        return (F - gg * (V - p[1]) ** 2) * 1e12

    ls = optimize.least_squares(resid, [z0 * 1e9, V0], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return ls.x[0] * 1e-9, ls.x[1], ls


def _vertex_by_separation(V, P, F):
    """Per-separation parabola F = a V^2 + b V + c; vertex V0 = -b/(2a) with its sigma.

    The force noise is taken as common to all separations, so the residual
    variance is pooled over every per-separation fit.
    """
    fits = []
    ss, dof = 0.0, 0
    for p in np.unique(P):
        m = P == p
        if np.unique(V[m]).size < 3:
            continue
        A = np.vstack([V[m] ** 2, V[m], np.ones(m.sum())]).T
        coef, *_ = np.linalg.lstsq(A, F[m], rcond=None)
        r = F[m] - A @ coef
        ss += r @ r
        dof += m.sum() - 3
        fits.append((p, coef, np.linalg.inv(A.T @ A)))
    s2 = ss / dof if dof > 0 else 0.0
    out = []
    for p, (a, b, _), inv in fits:
        jac = np.array([b / (2 * a * a), -1 / (2 * a), 0.0])
        out.append((p, -b / (2 * a), math.sqrt(max(s2 * (jac @ inv @ jac), 0.0))))
    return out


def fit_calibration(sweep: CalibrationSweep, R, confidence=0.95, z_bounds=(1e-9, 1e-6),
                    n_bootstrap=200, rng=None, drift_pvalue=1e-3) -> CalibrationFit:
    """Fit contact separation z0 and residual potential V0 to an averaged voltage sweep.

    Absolute separation is z = z0 + piezo. V0 is solved exactly for each trial
    z0 and z0 by a bounded 1-D search, then both are polished jointly.
    Intervals come from the linearised covariance; ``n_bootstrap`` residual
    resamples give a cross-check.
    """
    V, P, F = sweep.averaged()
    if np.unique(V).size < 2:
        raise CalibrationError("degenerate sweep: all voltages equal")
    try:
        z0, V0, ls = _fit_point(V, P, F, R, z_bounds)
    except (SeriesNotConvergedError, np.linalg.LinAlgError) as exc:
        raise CalibrationError(f"calibration fit failed: {exc}") from exc
    if not (ls.success and z0 > 0 and np.isfinite(V0)):
        raise CalibrationError(f"calibration fit did not converge: {ls.message}; z0={z0!r}, V0={V0!r}")

    resid = ls.fun * 1e-12
    n, k = F.size, 2
    dof = max(n - k, 1)
    s2 = resid @ resid / dof
    J = ls.jac * np.array([1e-12 * 1e9, 1e-12])  # back to SI per (m, V)
    try:
        cov = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    tq = sps.t.ppf(0.5 * (1 + confidence), dof)
    dz0 = tq * math.sqrt(max(cov[0, 0], 0.0))
    dV0 = tq * math.sqrt(max(cov[1, 1], 0.0))
    dz0 = max(dz0, np.finfo(float).tiny)

    fitted = F - resid
    boot_z = boot_v = None
    if n_bootstrap:
        rng = np.random.default_rng(rng)
        zs, vs = [], []
        for _ in range(n_bootstrap):
            Fb = fitted + rng.choice(resid, size=resid.size, replace=True)
            zb, vb, _ = _fit_point(V, P, Fb, R, (max(z_bounds[0], 0.5 * z0), min(z_bounds[1], 2 * z0)))
            zs.append(zb)
            vs.append(vb)
        q = 100 * np.array([(1 - confidence) / 2, (1 + confidence) / 2])
        boot_z = float(np.diff(np.percentile(zs, q))[0] / 2)
        boot_v = float(np.diff(np.percentile(vs, q))[0] / 2)

    per_voltage = []
    for v in np.unique(V):
        m = V == v
        g = -0.5 * capacitance_gradient(z0 + P[m], R)
        # single voltage: (V - V0)^2 = F/g, root on the side of the global V0
        amp = math.sqrt(max(np.sum(F[m] * g) / np.sum(g * g), 0.0))
        per_voltage.append((float(v), float(v - amp if v >= V0 else v + amp)))

    by_sep = _vertex_by_separation(V, P, F)
    pval = 1.0
    if len(by_sep) >= 3:
        v0s = np.array([b for _, b, _ in by_sep])
        sig = np.array([c for _, _, c in by_sep])
        if np.all(sig > 0):
            w = 1 / sig**2
            mean = np.sum(w * v0s) / np.sum(w)
            chi2 = np.sum(w * (v0s - mean) ** 2)
            pval = float(sps.chi2.sf(chi2, len(by_sep) - 1))
        else:
            pval = 1.0 if np.ptp(v0s) < 1e-9 else 0.0

    return CalibrationFit(
        z0=float(z0), dz0=float(dz0), V0=float(V0), dV0=float(dV0),
        per_voltage_V0=per_voltage,
        v0_by_separation=[(float(p + z0), float(v), float(s)) for p, v, s in by_sep],
        separation_dependent_V0=pval < drift_pvalue,
        v0_constancy_pvalue=pval,
        residual_rms=float(math.sqrt(np.mean(resid**2))),
        n_points=int(n),
        dz0_bootstrap=boot_z, dV0_bootstrap=boot_v, confidence=confidence,
        diagnostics={"optimizer": ls.message, "nfev": ls.nfev, "dof": dof},
    )


def synthesize_sweep(z0, V0, R, voltages=(0.2, 0.1, 0.0, -0.1, -0.2, -0.3, -0.4), piezo=None,
                     repeats=5, noise=0.0, rng=None, v0_of_z=None) -> CalibrationSweep:
    """Synthetic calibration sweep from the exact electrostatic force.

    ``v0_of_z`` (callable of absolute separation) injects a separation-dependent
    residual potential, as a dipole layer or patch charge would produce.
    """
    rng = np.random.default_rng(rng)
    if piezo is None:
        piezo = np.geomspace(30e-9, 3e-6, 40)
    piezo = np.asarray(piezo, dtype=float)
    z = z0 + piezo
    v0z = np.full_like(z, V0) if v0_of_z is None else np.asarray(v0_of_z(z), dtype=float)
    grad = capacitance_gradient(z, R)
    runs = []
    for v in voltages:
        clean = -0.5 * (v - v0z) ** 2 * grad
        for rep in range(repeats):
            F = clean + (rng.normal(0.0, noise, clean.size) if noise > 0 else 0.0)
            runs.append(CalibrationRun(float(v), piezo.copy(), F, f"V{v:+.3f}_r{rep}"))
    return CalibrationSweep(runs, repeats)
