"""Zero-temperature Lifshitz force between a sphere and a plate.

With the proximity-force prefactor hbar R / 2pi the force magnitude is

    F(z) = -hbar c R / (16 pi z^3) * int_0^inf y^2 dy int_0^1 dt
           sum_{TM,TE} ln(1 - r^(1) r^(2) e^{-y}),

where y = 2 q z and t = xi / (c q), so that xi = c y t / (2 z). In these
variables the reflection coefficients depend on z only through eps(i xi):

    r_TM = (eps - s) / (eps + s),  r_TE = (s - 1) / (s + 1),
    s = sqrt(1 + (eps - 1) t^2).

Forces are reported as positive magnitudes of the attraction.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.constants import c as C_LIGHT, hbar

SIGN_CONVENTION = "attractive_positive"
PROVENANCES = ("smooth", "roughness_corrected", "ideal_metal", "experimental_mean")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
# graded towards 0: y^2 ln y behaviour at small y, TE boundary layer at small t
_Y_BREAKS = (0.0, 0.05, 0.5, 2.0, 6.0, 14.0)
_T_BREAKS = (0.0, 1e-6, 1e-4, 1e-2, 0.1, 0.4, 1.0)
_CHUNK_ELEMENTS = 1_500_000


class QuadratureError(RuntimeError):
    """The force integral did not reach the requested tolerance."""

    def __init__(self, message, estimate, error_bound):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class RoughnessError(ValueError):
    """A roughness configuration brings the bodies into contact."""


@dataclass(frozen=True)
class Geometry:
    """Sphere radius R and its uncertainty dR, metres."""

    R: float
    dR: float = 0.0

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("sphere radius must be positive")
        if self.dR < 0:
            raise ValueError("radius uncertainty must be non-negative")
        if self.dR > 0.1 * self.R:
            raise ValueError("radius uncertainty must be small compared with R")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and refinement controls for the Lifshitz double integral.

    ``xi_cutoff_factor`` truncates the integral at y = 2 q z = factor, which
    also caps xi at factor * c / (2 z).
    """

    rel_tol: float = 1e-6
    max_panel_depth: int = 5
    xi_cutoff_factor: float = 40.0

    def __post_init__(self):
        if not 0 < self.rel_tol < 1e-2:
            raise ValueError("rel_tol must lie in (0, 1e-2)")
        if self.xi_cutoff_factor < 20:
            raise ValueError("xi_cutoff_factor must be at least 20")
        if self.max_panel_depth < 1:
            raise ValueError("max_panel_depth must be at least 1")


@dataclass(frozen=True)
class RoughnessProfile:
    """Fraction-weighted roughness heights (fraction, height in metres) of one body."""

    entries: tuple
    body: str = ""
    zero_level: float = field(init=False)

    def __post_init__(self):
        entries = tuple((float(v), float(h)) for v, h in self.entries)
        if not entries:
            raise ValueError("roughness profile needs at least one entry")
        if any(v <= 0 for v, _ in entries):
            raise ValueError("roughness fractions must be positive")
        if any(h < 0 for _, h in entries):
            raise ValueError("roughness heights must be non-negative")
        total = math.fsum(v for v, _ in entries)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"roughness fractions sum to {total!r}, not 1")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "zero_level", math.fsum(v * h for v, h in entries))

    @classmethod
    def flat(cls, height=0.0, body=""):
        return cls(((1.0, height),), body)

    @property
    def fractions(self):
        return np.array([v for v, _ in self.entries])

    @property
    def heights(self):
        return np.array([h for _, h in self.entries])

    @classmethod
    def load(cls, path):
        """Read lines ``fraction,height_nm`` with an optional ``# body: sphere|plate`` header."""
        body = ""
        entries = []
        path = Path(path)
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, _, val = s[1:].partition(":")
                if key.strip().lower() == "body":
                    body = val.strip()
                continue
            if s.replace(" ", "").lower() == "fraction,height_nm":
                continue
            try:
                v, h = (float(p) for p in s.split(","))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed roughness row {s!r}") from None
            entries.append((v, h * 1e-9))
        if body and body not in ("sphere", "plate"):
            raise ValueError(f"{path}: body must be 'sphere' or 'plate', got {body!r}")
        return cls(tuple(entries), body)

    def save(self, path):
        lines = [f"# body: {self.body}"] if self.body else []
        lines.append("fraction,height_nm")
        lines += [f"{v!r},{h * 1e9!r}" for v, h in self.entries]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class ForceCurve:
    """Force magnitudes F (N) on a strictly increasing separation grid z (m)."""

    z: np.ndarray
    F: np.ndarray
    provenance: str
    geometry: Geometry | None = None
    sign_convention: str = SIGN_CONVENTION

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        F = np.asarray(self.F, dtype=float)
        if z.ndim != 1 or z.shape != F.shape:
            raise ValueError("z and F must be 1-D arrays of equal length")
        if np.any(np.diff(z) <= 0):
            raise ValueError("separations must be strictly increasing")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "F", F)

    def __len__(self):
        return self.z.size

    def to_csv(self, path):
        with Path(path).open("w") as fh:
            fh.write("z_nm,F_pN,provenance\n")
            for z, f in zip(self.z, self.F):
                fh.write(f"{z * 1e9:.6f},{f * 1e12:.9e},{self.provenance}\n")

    @classmethod
    def from_csv(cls, path, geometry=None):
        rows = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
        rows = np.atleast_1d(rows)
        prov = {str(p) for p in rows["provenance"]}
        if len(prov) != 1:
            raise ValueError(f"{path}: mixed provenance {sorted(prov)}")
        return cls(rows["z_nm"] * 1e-9, rows["F_pN"] * 1e-12, prov.pop(), geometry)


def separation_grid(z_min, z_max, step):
    """Uniform grid z_min, z_min + step, ... up to z_max (inclusive within rounding)."""
    if not (step > 0 and z_max >= z_min > 0):
        raise ValueError("need 0 < z_min <= z_max and step > 0")
    n = int(math.floor((z_max - z_min) / step + 1e-9)) + 1
    return z_min + step * np.arange(n)


def ideal_metal_force(z, R):
    """pi^3 hbar c R / (360 z^3), the perfect-conductor limit."""
    z = np.asarray(z, dtype=float)
    return math.pi**3 * hbar * C_LIGHT * R / (360.0 * z**3)


def reflection_coeffs(eps1, eps2, k_perp, xi):
    """Reflection coefficients ((r_par1, r_par2), (r_perp1, r_perp2)) at imaginary frequency.

    r_par = (eps q - k) / (eps q + k), r_perp = (k - q) / (k + q), with
    q^2 = k_perp^2 + xi^2/c^2 and k^2 = k_perp^2 + eps xi^2/c^2.
    """
    eps1, eps2, k_perp, xi = (np.asarray(a, dtype=float) for a in (eps1, eps2, k_perp, xi))
    if np.any(eps1 < 1) or np.any(eps2 < 1):
        raise ValueError("permittivity on the imaginary axis must be >= 1")
    if np.any(k_perp < 0) or np.any(xi <= 0):
        raise ValueError("need k_perp >= 0 and xi > 0")
    q = np.sqrt(k_perp**2 + (xi / C_LIGHT) ** 2)
    out_par, out_perp = [], []
    for eps in (eps1, eps2):
        k = np.sqrt(k_perp**2 + eps * (xi / C_LIGHT) ** 2)
        out_par.append((eps * q - k) / (eps * q + k))
        out_perp.append((k - q) / (k + q))
    return tuple(out_par), tuple(out_perp)


def _panel_nodes(breaks, level):
    edges = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        edges.append(np.linspace(a, b, 2**level + 1)[:-1])
    edges = np.append(np.concatenate(edges), breaks[-1])
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_X).ravel()
    w = (half[:, None] * _GL_W).ravel()
    return x, w


def _integral(z, mat1, mat2, level, y_max):
    """Dimensionless double integral for each separation in z."""
    y, wy = _panel_nodes(_Y_BREAKS + (y_max,), level)
    t, wt = _panel_nodes(_T_BREAKS, level)
    yt = (y[:, None] * t[None, :]).ravel()
    t2 = np.broadcast_to(t * t, (y.size, t.size)).ravel()
    ey = np.repeat(np.exp(-y), t.size)
    weights = (np.outer(wy * y * y, wt)).ravel()
    out = np.empty(z.size)
    per = yt.size
    step = max(1, _CHUNK_ELEMENTS // per)
    for s in range(0, z.size, step):
        zz = z[s:s + step]
        xi = (C_LIGHT / (2.0 * zz))[:, None] * yt[None, :]
        e1 = np.asarray(mat1.eps_imag_axis(xi), dtype=float)
        e2 = np.asarray(mat2.eps_imag_axis(xi), dtype=float)
        s1 = np.sqrt(1.0 + (e1 - 1.0) * t2)
        s2 = np.sqrt(1.0 + (e2 - 1.0) * t2)
        tm = (e1 - s1) / (e1 + s1) * (e2 - s2) / (e2 + s2)
        te = (s1 - 1.0) / (s1 + 1.0) * (s2 - 1.0) / (s2 + 1.0)
        f = np.log1p(-tm * ey) + np.log1p(-te * ey)
        out[s:s + step] = np.sum(f * weights, axis=1)
    return out


def _lifshitz_vector(z, R, mat1, mat2, spec):
    y_max = float(spec.xi_cutoff_factor)
    prev = _integral(z, mat1, mat2, 0, y_max)
    result = prev.copy()
    todo = np.arange(z.size)
    for level in range(1, spec.max_panel_depth + 1):
        cur = _integral(z[todo], mat1, mat2, level, y_max)
        err = np.abs(cur - prev[todo])
        result[todo] = cur
        ok = err <= spec.rel_tol * np.abs(cur)
        todo, prev_err = todo[~ok], err[~ok]
        if todo.size == 0:
            break
        prev = result.copy()
    else:
        est = -hbar * C_LIGHT * R / (16 * math.pi * z[todo] ** 3) * result[todo]
        bound = hbar * C_LIGHT * R / (16 * math.pi * z[todo] ** 3) * prev_err
        raise QuadratureError(
            f"Lifshitz integral not converged to rel_tol={spec.rel_tol} at "
            f"max_panel_depth={spec.max_panel_depth} for {todo.size} separation(s)",
            est, bound)
    return -hbar * C_LIGHT * R / (16 * math.pi * z**3) * result


def lifshitz_force(z, geom: Geometry, mat1, mat2, spec: QuadratureSpec = QuadratureSpec()):
    """Casimir force magnitude (N) between sphere and plate at separation(s) z (m).

    ``mat1``/``mat2`` are anything with ``eps_imag_axis(xi)``.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0):
        raise ValueError("separation must be positive")
    out = _lifshitz_vector(z_arr, geom.R, mat1, mat2, spec)
    return out if np.ndim(z) else float(out[0])


def _shifted_separations(z, rough1: RoughnessProfile, rough2: RoughnessProfile):
    shift1 = rough1.zero_level - rough1.heights
    shift2 = rough2.zero_level - rough2.heights
    zt = z[:, None, None] + shift1[None, :, None] + shift2[None, None, :]
    w = rough1.fractions[:, None] * rough2.fractions[None, :]
    return zt, w


def roughness_corrected_force(z, geom: Geometry, mat1, mat2, rough1: RoughnessProfile,
                              rough2: RoughnessProfile, spec: QuadratureSpec = QuadratureSpec()):
    """sum_{k,j} v_k v_j F(z + H1 + H2 - h_k - h_j), separations measured between zero levels."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0):
        raise ValueError("separation must be positive")
    zt, w = _shifted_separations(z_arr, rough1, rough2)
    if np.any(zt <= 0):
        raise RoughnessError(
            f"roughness exceeds separation: smallest shifted separation is {zt.min():.3e} m")
    flat = zt.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    forces = lifshitz_force(uniq, geom, mat1, mat2, spec)[inv].reshape(zt.shape)
    out = np.sum(forces * w[None, :, :], axis=(1, 2))
    return out if np.ndim(z) else float(out[0])


class SmoothForceInterpolant:
    """Chebyshev interpolant of ln(F z^3) in ln z, checked against direct evaluation.

    The degree is doubled until the interpolant matches the direct integral at
    every midpoint between nodes within ``check_tol`` (relative). Evaluation
    is elementwise, so results do not depend on how a grid is split.
    """

    def __init__(self, z_lo, z_hi, geom, mat1, mat2, spec=QuadratureSpec(), n_nodes=32,
                 check_tol=None, max_nodes=1024):
        if not 0 < z_lo < z_hi:
            raise ValueError("need 0 < z_lo < z_hi")
        self.z_lo, self.z_hi = z_lo, z_hi
        tol = 10 * spec.rel_tol if check_tol is None else check_tol
        domain = [math.log(z_lo), math.log(z_hi)]

        def target(u):
            z = np.exp(u)
            return np.log(lifshitz_force(z, geom, mat1, mat2, spec) * z**3)

        n = n_nodes
        while True:
            self._series = Chebyshev.interpolate(target, n - 1, domain=domain)
            u = np.polynomial.chebyshev.chebpts1(n)
            nodes = np.sort(np.exp(0.5 * (domain[0] + domain[1]) + 0.5 * (domain[1] - domain[0]) * u))
            zc = np.sqrt(nodes[:-1] * nodes[1:])
            direct = lifshitz_force(zc, geom, mat1, mat2, spec)
            approx = self(zc)
            err = float(np.max(np.abs(approx / direct - 1)))
            if err <= tol:
                break
            if 2 * n > max_nodes:
                raise QuadratureError(f"force interpolant error {err:.2e} above {tol:.1e}",
                                      approx, np.abs(approx - direct))
            n *= 2
        self.n_nodes = n
        self.max_check_error = err

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.z_lo * (1 - 1e-12)) or np.any(z > self.z_hi * (1 + 1e-12)):
            raise ValueError("separation outside the interpolation range")
        return np.exp(self._series(np.log(z))) / z**3


def force_curve(z_grid, geom: Geometry, mat1=None, mat2=None, spec: QuadratureSpec = QuadratureSpec(),
                rough1: RoughnessProfile | None = None, rough2: RoughnessProfile | None = None,
                ideal=False, threads=1, interpolate=False) -> ForceCurve:
    """Evaluate the force on a grid; roughness-corrected when both profiles are given.

    ``ideal=True`` returns the closed-form perfect-conductor curve.
    ``interpolate=True`` evaluates the smooth force through a verified
    Chebyshev interpolant instead of one integral per (shifted) separation.
    Grid points are split into contiguous blocks for ``threads`` workers;
    each point's quadrature decisions are independent of the split.
    """
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z_grid must be a non-empty 1-D sequence")
    if np.any(z <= 0) or np.any(np.diff(z) <= 0):
        raise ValueError("z_grid must be positive and strictly increasing")
    if ideal:
        return ForceCurve(z, ideal_metal_force(z, geom.R), "ideal_metal", geom)
    if mat1 is None or mat2 is None:
        raise ValueError("two materials are required unless ideal=True")
    if (rough1 is None) != (rough2 is None):
        raise ValueError("give roughness profiles for both bodies or neither")

    if rough1 is None:
        provenance = "smooth"
        lo, hi = z[0], z[-1]
    else:
        provenance = "roughness_corrected"
        zt, _ = _shifted_separations(z[[0, -1]], rough1, rough2)
        lo, hi = zt.min(), zt.max()
        if lo <= 0:
            raise RoughnessError(f"roughness exceeds separation: smallest shifted separation is {lo:.3e} m")

    if interpolate and hi > lo:
        smooth = SmoothForceInterpolant(lo, hi, geom, mat1, mat2, spec)
    else:
        def smooth(zz):
            return lifshitz_force(zz, geom, mat1, mat2, spec)

    def work(zz):
        if rough1 is None:
            return smooth(zz)
        zt, w = _shifted_separations(zz, rough1, rough2)
        return np.sum(smooth(zt.ravel()).reshape(zt.shape) * w[None, :, :], axis=(1, 2))

    if threads > 1 and z.size > 1:
        blocks = np.array_split(z, min(threads, z.size))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            F = np.concatenate(list(pool.map(work, blocks)))
    else:
        F = np.atleast_1d(work(z))
    mag = np.abs(F)
    if np.any(mag > 0) and np.any(np.diff(mag) >= 0):
        bad = int(np.argmax(np.diff(mag) >= 0))
        raise RuntimeError(f"force magnitude not strictly decreasing near z = {z[bad]:.4e} m")
    return ForceCurve(z, F, provenance, geom)
