"""Dielectric permittivity along the imaginary frequency axis.

Tabulated Im eps(omega) is turned into eps(i xi) with the dispersion relation

    eps(i xi) = 1 + (2/pi) * int_0^inf omega Im eps(omega) / (omega^2 + xi^2) d omega,

optionally with a Drude free-carrier term added to the tabulated absorption
(doped silicon) and analytic tails outside the tabulated band.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.constants import epsilon_0, hbar, e as e_charge
from scipy.interpolate import CubicSpline

LOW_EXTENSIONS = ("drude_tail", "constant", "none")
HIGH_EXTENSIONS = ("vacuum", "power_law")

# sub-panel width in ln(omega) and Gauss-Legendre order for the dispersion integral
_MAX_LOG_PANEL = 0.25
_GL_ORDER = 6
# a tail whose bound exceeds this fraction of eps-1 cannot be ignored
_TAIL_BOUND_RTOL = 1e-3


class InsufficientOpticalDataError(ValueError):
    """The optical table does not cover the band needed for the dispersion integral."""


@dataclass(frozen=True, eq=False)
class OpticalDataTable:
    """Im eps(omega) sampled on a strictly increasing angular-frequency grid (rad/s)."""

    omega: np.ndarray
    eps_im: np.ndarray
    material_label: str = ""

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        eps_im = np.asarray(self.eps_im, dtype=float)
        if omega.ndim != 1 or omega.shape != eps_im.shape:
            raise ValueError("omega and eps_im must be 1-D arrays of equal length")
        if omega.size < 2:
            raise ValueError("an optical table needs at least 2 rows")
        if np.any(omega <= 0) or np.any(np.diff(omega) <= 0):
            raise ValueError("omega must be positive and strictly increasing")
        if np.any(eps_im < 0) or not np.all(np.isfinite(eps_im)):
            raise ValueError("eps_im must be finite and non-negative (passive medium)")
        omega.setflags(write=False)
        eps_im.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "eps_im", eps_im)

    def __len__(self):
        return self.omega.size

    @classmethod
    def from_nk(cls, omega, n, k, material_label=""):
        """Build from refractive-index data; Im eps = 2 n k."""
        return cls(np.asarray(omega, float), 2.0 * np.asarray(n, float) * np.asarray(k, float),
                   material_label)

    @cached_property
    def _nodes(self):
        """Quadrature nodes (omega_k) and weights (w_k * omega_k^2 * Im eps) in ln(omega)."""
        x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
        u = np.log(self.omega)
        om_nodes, weights = [], []
        for i in range(self.omega.size - 1):
            u0, u1 = u[i], u[i + 1]
            e0, e1 = self.eps_im[i], self.eps_im[i + 1]
            nsub = max(1, math.ceil((u1 - u0) / _MAX_LOG_PANEL))
            edges = np.linspace(u0, u1, nsub + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            uu = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            ww = (half[:, None] * w[None, :]).ravel()
            om = np.exp(uu)
            # linear in ln(omega) between rows; keeps the transform linear in Im eps
            eps = e0 + (e1 - e0) * (uu - u0) / (u1 - u0)
            om_nodes.append(om)
            weights.append(ww * om * om * eps)
        return np.concatenate(om_nodes), np.concatenate(weights)


@dataclass(frozen=True)
class DrudeParams:
    """Free-carrier parameters: plasma frequency and relaxation rate, both rad/s."""

    omega_p: float
    gamma: float

    def __post_init__(self):
        if not (self.omega_p > 0 and self.gamma > 0):
            raise ValueError("Drude omega_p and gamma must be positive")

    def eps_im_real_axis(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.omega_p**2 * self.gamma / (omega * (omega**2 + self.gamma**2))


def plasma_frequency_from_resistivity(rho, tau):
    """Plasma frequency (rad/s) of a conductor with resistivity `rho` (Ohm cm).

    Uses omega_p = 2 sqrt(pi) / sqrt(eps0 rho tau) with eps0 and rho in SI.
    This is the convention that gives 6.37e14 rad/s for doped Si at
    rho = 0.0035 Ohm cm and tau = 1e-13 s.
    """
    if not (rho > 0 and tau > 0):
        raise ValueError("resistivity and relaxation time must be positive")
    rho_si = rho * 1e-2  # Ohm cm -> Ohm m
    return 2.0 * math.sqrt(math.pi) / math.sqrt(epsilon_0 * rho_si * tau)


def drude_eps_imag_axis(params: DrudeParams, xi):
    """eps(i xi) = 1 + omega_p^2 / (xi (xi + gamma))."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise ValueError("imaginary frequency xi must be positive")
    return 1.0 + params.omega_p**2 / (xi * (xi + params.gamma))


def lorentz_drude_eps(omega, drude: DrudeParams | None = None, oscillators=(), eps_inf=1.0):
    """Complex eps(omega) of a Drude term plus Lorentz oscillators.

    Each oscillator is (strength, omega_0, damping) and contributes
    strength * omega_0^2 / (omega_0^2 - omega^2 - i damping omega).
    """
    omega = np.asarray(omega, dtype=complex)
    eps = np.full(omega.shape, eps_inf, dtype=complex)
    if drude is not None:
        eps -= drude.omega_p**2 / (omega * (omega + 1j * drude.gamma))
    for strength, w0, damp in oscillators:
        eps += strength * w0**2 / (w0**2 - omega**2 - 1j * damp * omega)
    return eps


def lorentz_drude_eps_imag_axis(xi, drude: DrudeParams | None = None, oscillators=(), eps_inf=1.0):
    """Closed-form eps(i xi) of the same Drude-Lorentz model."""
    xi = np.asarray(xi, dtype=float)
    eps = np.full(xi.shape, float(eps_inf))
    if drude is not None:
        eps += drude.omega_p**2 / (xi * (xi + drude.gamma))
    for strength, w0, damp in oscillators:
        eps += strength * w0**2 / (w0**2 + xi**2 + damp * xi)
    return eps


def _drude_low_tail(drude: DrudeParams, w1, xi):
    """(2/pi) int_0^w1 omega Im eps_D / (omega^2 + xi^2) d omega, analytic."""
    g = drude.gamma

    def a(x):
        return np.arctan(w1 / x) / x

    d = xi * xi - g * g
    near = np.abs(xi - g) < 1e-4 * g
    safe_d = np.where(near, 1.0, d)
    val = (a(g) - a(xi)) / safe_d
    # xi -> gamma limit: -A'(gamma) / (2 gamma)
    da = -math.atan(w1 / g) / g**2 - w1 / (g * (g * g + w1 * w1))
    val = np.where(near, -da / (2 * g), val)
    return (2 / math.pi) * drude.omega_p**2 * g * val


def _power_law_high_tail(coef, wn, xi):
    """(2/pi) int_wn^inf coef omega^-2 / (omega^2 + xi^2) d omega, analytic."""
    u = xi / wn
    small = u < 1e-3
    us = np.where(small, 1.0, u)
    big = (us - np.arctan(us)) / xi**3
    series = (1.0 / 3 - u * u / 5 + u**4 / 7) / wn**3
    return (2 / math.pi) * coef * np.where(small, series, big)


def _decade_span(lo, hi):
    return f"{lo:.3g}-{hi:.3g} rad/s (decades 1e{math.floor(math.log10(lo))}..1e{math.ceil(math.log10(hi))})"


def kramers_kronig_imag_axis(table: OpticalDataTable, xi, drude: DrudeParams | None = None,
                             low_freq_extension="none", high_freq_extension="vacuum"):
    """eps(i xi) from tabulated Im eps by the dispersion integral.

    Between rows Im eps is interpolated linearly in ln(omega) and integrated
    by Gauss-Legendre in ln(omega). Below the first row
    the integral uses the analytic Drude absorption (``drude_tail``), a
    constant equal to the first row (``constant``) or nothing (``none``).
    Above the last row it uses C/omega^3 matched to the last two rows
    (``power_law``) or nothing (``vacuum``).

    Raises InsufficientOpticalDataError when an unmodelled tail could carry
    more than 1e-3 of eps - 1.
    """
    if low_freq_extension not in LOW_EXTENSIONS:
        raise ValueError(f"unknown low-frequency extension {low_freq_extension!r}")
    if high_freq_extension not in HIGH_EXTENSIONS:
        raise ValueError(f"unknown high-frequency extension {high_freq_extension!r}")
    if low_freq_extension == "drude_tail" and drude is None:
        raise ValueError("drude_tail extension requires Drude parameters")
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi_arr <= 0):
        raise ValueError("imaginary frequency xi must be positive")

    om, wt = table._nodes
    eps = np.empty_like(xi_arr)
    # chunk to bound memory of the (xi, node) matrix
    step = max(1, 2_000_000 // om.size)
    for s in range(0, xi_arr.size, step):
        x = xi_arr[s:s + step]
        eps[s:s + step] = (2 / math.pi) * (wt[None, :] / (om[None, :] ** 2 + x[:, None] ** 2)).sum(axis=1)

    w1, wn = table.omega[0], table.omega[-1]
    e1, en = table.eps_im[0], table.eps_im[-1]

    if low_freq_extension == "drude_tail":
        eps += _drude_low_tail(drude, w1, xi_arr)
        low_bound = np.zeros_like(xi_arr)
    elif low_freq_extension == "constant":
        eps += (1 / math.pi) * e1 * np.log1p((w1 / xi_arr) ** 2)
        low_bound = np.zeros_like(xi_arr)
    else:
        low_bound = (1 / math.pi) * e1 * np.log1p((w1 / xi_arr) ** 2)

    if high_freq_extension == "power_law":
        coef = 0.5 * (table.eps_im[-1] * table.omega[-1] ** 3 + table.eps_im[-2] * table.omega[-2] ** 3)
        eps += _power_law_high_tail(coef, wn, xi_arr)
        high_bound = np.zeros_like(xi_arr)
    else:
        # bound assuming Im eps decays no slower than 1/omega above the table
        high_bound = (2 / math.pi) * en * (wn / xi_arr) * np.arctan(xi_arr / wn)

    scale = np.maximum(eps, 1e-300)
    bad_low = low_bound > _TAIL_BOUND_RTOL * scale
    bad_high = high_bound > _TAIL_BOUND_RTOL * scale
    if np.any(bad_low) or np.any(bad_high):
        parts = []
        if np.any(bad_low):
            parts.append("below table: " + _decade_span(xi_arr[bad_low].min() / 10, w1))
        if np.any(bad_high):
            parts.append("above table: " + _decade_span(wn, 10 * xi_arr[bad_high].max()))
        raise InsufficientOpticalDataError(
            f"insufficient optical data for {table.material_label or 'table'}; uncovered "
            + "; ".join(parts))

    out = 1.0 + eps
    return out if np.ndim(xi) else float(out[0])


def augment_table_with_drude(table: OpticalDataTable, params: DrudeParams) -> OpticalDataTable:
    """Add the Drude absorption omega_p^2 gamma / (omega (omega^2 + gamma^2)) row by row."""
    return OpticalDataTable(table.omega, table.eps_im + params.eps_im_real_axis(table.omega),
                            table.material_label + "+drude")


@dataclass(frozen=True, eq=False)
class DielectricModel:
    """eps(i xi) evaluator built from a table, a Drude term, or both.

    With only Drude parameters the closed form is used. With a table the
    dispersion integral is used and the Drude parameters (if any) only feed
    the low-frequency tail. Evaluation goes through a log-log cubic spline
    over ``spline_range``; outside it the integral is evaluated directly.
    """

    table: OpticalDataTable | None = None
    drude: DrudeParams | None = None
    low_freq_extension: str = "drude_tail"
    high_freq_extension: str = "power_law"
    label: str = ""
    spline_range: tuple = (1e-3, 1e21)
    spline_per_decade: int = 40

    def __post_init__(self):
        if self.table is None and self.drude is None:
            raise ValueError("a dielectric model needs a table, Drude parameters, or both")
        if self.low_freq_extension not in LOW_EXTENSIONS:
            raise ValueError(f"unknown low-frequency extension {self.low_freq_extension!r}")
        if self.high_freq_extension not in HIGH_EXTENSIONS:
            raise ValueError(f"unknown high-frequency extension {self.high_freq_extension!r}")
        if self.table is not None and self.low_freq_extension == "drude_tail" and self.drude is None:
            raise ValueError("drude_tail extension requires Drude parameters")
        if self.table is not None:
            self._spline  # built eagerly so the model is read-only afterwards

    def exact(self, xi):
        """eps(i xi) without the interpolation cache."""
        if self.table is None:
            return drude_eps_imag_axis(self.drude, xi)
        return kramers_kronig_imag_axis(self.table, xi, self.drude,
                                        self.low_freq_extension, self.high_freq_extension)

    @cached_property
    def _spline(self):
        lo, hi = self.spline_range
        n = int(round(math.log10(hi / lo) * self.spline_per_decade)) + 1
        lx = np.linspace(math.log(lo), math.log(hi), n)
        em1 = self.exact(np.exp(lx)) - 1.0
        kind = "log" if np.all(em1 > 0) else "lin"
        spl = CubicSpline(lx, np.log(em1) if kind == "log" else em1)
        # polynomial coefficients per interval on a uniform grid, for fast lookup
        return kind, lx[0], lx[1] - lx[0], np.ascontiguousarray(spl.c.T)

    def _spline_eval(self, lnxi):
        kind, x0, h, coef = self._spline
        i = np.clip(((lnxi - x0) * (1.0 / h)).astype(np.intp), 0, coef.shape[0] - 1)
        dx = lnxi - (x0 + i * h)
        v = ((coef[i, 0] * dx + coef[i, 1]) * dx + coef[i, 2]) * dx + coef[i, 3]
        return 1.0 + (np.exp(v) if kind == "log" else v)

    def __call__(self, xi):
        return self.eps_imag_axis(xi)

    def eps_imag_axis(self, xi):
        """eps(i xi), vectorised over xi (rad/s)."""
        if self.table is None:
            return drude_eps_imag_axis(self.drude, xi)
        xi_arr = np.asarray(xi, dtype=float)
        if np.any(xi_arr <= 0):
            raise ValueError("imaginary frequency xi must be positive")
        lo, hi = self.spline_range
        inside = (xi_arr >= lo) & (xi_arr <= hi)
        if np.all(inside):
            return self._spline_eval(np.log(xi_arr))
        out = np.empty(xi_arr.shape)
        if np.any(inside):
            out[inside] = self._spline_eval(np.log(xi_arr[inside]))
        out[~inside] = self.exact(xi_arr[~inside])
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ConstantPermittivity:
    """Frequency-independent eps(i xi); a large value approximates an ideal metal."""

    value: float
    label: str = ""

    def __post_init__(self):
        if self.value < 1:
            raise ValueError("permittivity on the imaginary axis must be >= 1")

    def eps_imag_axis(self, xi):
        return np.full(np.shape(xi), float(self.value)) if np.ndim(xi) else float(self.value)

    __call__ = eps_imag_axis


# ---------------------------------------------------------------------------
# table ingestion

EV_TO_RAD_S = e_charge / hbar


def load_optical_table(path, freq_unit="rad_s", material_label=None) -> OpticalDataTable:
    """Read `omega_rad_s,n,k` or `omega_rad_s,eps_im` CSV; '#' lines are comments.

    With ``freq_unit='eV'`` the first column is photon energy and is converted
    via omega = E / hbar.
    """
    if freq_unit not in ("rad_s", "eV"):
        raise ValueError(f"unknown frequency unit {freq_unit!r}")
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [(i, ln) for i, ln in enumerate(fh, 1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: no data")
    header = [h.strip() for h in lines[0][1].split(",")]
    cols = header[1:]
    if cols == ["n", "k"]:
        kind = "nk"
    elif cols == ["eps_im"]:
        kind = "eps"
    else:
        raise ValueError(f"{path}:{lines[0][0]}: expected header 'omega_rad_s,n,k' or 'omega_rad_s,eps_im'")
    rows = []
    for lineno, ln in lines[1:]:
        parts = next(csv.reader([ln]))
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {ln.strip()!r}") from None
        if len(vals) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(vals)}")
        rows.append(vals)
    data = np.array(rows, dtype=float)
    omega = data[:, 0] * (EV_TO_RAD_S if freq_unit == "eV" else 1.0)
    label = material_label if material_label is not None else path.stem
    if kind == "nk":
        return OpticalDataTable.from_nk(omega, data[:, 1], data[:, 2], label)
    return OpticalDataTable(omega, data[:, 1], label)


def save_optical_table(table: OpticalDataTable, path, comments: Iterable[str] = ()):
    with Path(path).open("w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("omega_rad_s,eps_im\n")
        for w, e in zip(table.omega, table.eps_im):
            fh.write(f"{float(w)!r},{float(e)!r}\n")


# ---------------------------------------------------------------------------
# shipped defaults

DATA_DIR = Path(__file__).with_name("data")

GOLD_DRUDE = DrudeParams(omega_p=1.37e16, gamma=5.3e13)
SI_TAU = 1e-13
SI_RHO = 0.0035
SI_RHO_TABLE = 1000.0


def gold_model(table_path=None, drude: DrudeParams = GOLD_DRUDE, freq_unit="rad_s") -> DielectricModel:
    """Gold: tabulated Im eps with a Drude low-frequency tail.

    ``freq_unit`` applies to a user table only; the shipped table is in rad/s.
    """
    if table_path is None:
        table_path, freq_unit = DATA_DIR / "gold_nk.csv", "rad_s"
    table = load_optical_table(table_path, freq_unit=freq_unit, material_label="Au")
    return DielectricModel(table=table, drude=drude, low_freq_extension="drude_tail",
                           high_freq_extension="power_law", label="Au")


def silicon_model(rho=SI_RHO, tau=SI_TAU, table_path=None, omega_p_scale=1.0,
                  augment=True, freq_unit="rad_s") -> DielectricModel:
    """Doped silicon: high-resistivity table plus the Drude term for resistivity `rho`.

    With ``augment=False`` the high-resistivity table is used as is, with the
    Drude tail of the table's own resistivity below the first row.
    """
    if table_path is None:
        table_path, freq_unit = DATA_DIR / "silicon_nk.csv", "rad_s"
    table = load_optical_table(table_path, freq_unit=freq_unit, material_label="Si")
    if not augment:
        params = DrudeParams(plasma_frequency_from_resistivity(SI_RHO_TABLE, tau), 1.0 / tau)
        return DielectricModel(table=table, drude=params, low_freq_extension="drude_tail",
                               high_freq_extension="power_law",
                               label=f"Si (rho={SI_RHO_TABLE:g} Ohm cm)")
    params = DrudeParams(omega_p_scale * plasma_frequency_from_resistivity(rho, tau), 1.0 / tau)
    return DielectricModel(table=augment_table_with_drude(table, params), drude=params,
                           low_freq_extension="drude_tail", high_freq_extension="power_law",
                           label=f"Si (rho={rho:g} Ohm cm)")
