"""Error analysis for repeated force-distance measurements.

Random error from the Student distribution, systematic errors composed as
uniform distributions, a theoretical error budget, and the combined absolute
envelope for theory minus experiment.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy import stats as sps

# coefficient k(beta) in  Delta = k sqrt(sum a_i^2)
UNIFORM_COMPOSITION_K = {0.95: 1.1, 0.99: 1.4}
# random (+) systematic: 0.8 * (sum) inside 0.8 <= syst/s <= 8
COMBINATION_FACTOR = 0.8
COMBINATION_BAND = (0.8, 8.0)
BAND_SLACK = 0.05


@dataclass(eq=False)
class MeasurementEnsemble:
    """n force sweeps F[set, point] (N) on a shared separation grid z (m)."""

    z: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if self.z.ndim != 1 or self.F.shape[1] != self.z.size:
            raise ValueError("F must have shape (n_sets, len(z))")
        if self.F.shape[0] < 1:
            raise ValueError("ensemble is empty")
        if np.any(np.diff(self.z) <= 0):
            raise ValueError("separation grid must be strictly increasing")

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def grid(self):
        return self.z

    @property
    def step(self):
        return float(np.median(np.diff(self.z))) if self.z.size > 1 else 0.0


@dataclass
class ExperimentalErrorBudget:
    s_mean: float
    t_p: float
    delta_rand: float
    systematic_components: list
    delta_syst: float
    delta_total: float
    n: int
    confidence: float = 0.95

    def summary(self):
        parts = ", ".join(f"{lab}={a * 1e12:.3g}" for lab, a in self.systematic_components)
        return "\n".join([
            f"n = {self.n}, confidence = {self.confidence}",
            f"s_mean = {self.s_mean * 1e12:.4f} pN",
            f"t_p(n-1) = {self.t_p:.4f}",
            f"random error = {self.delta_rand * 1e12:.4f} pN",
            f"systematic components (pN): {parts}",
            f"systematic error = {self.delta_syst * 1e12:.4f} pN",
            f"total experimental error = {self.delta_total * 1e12:.4f} pN",
        ])


@dataclass
class TheoreticalErrorBudget:
    """Relative theoretical errors; fields are arrays when z is an array."""

    delta1: np.ndarray
    delta2: float
    delta0: np.ndarray
    delta3: np.ndarray
    delta_theor: np.ndarray
    inputs: dict = field(default_factory=dict)


@dataclass(eq=False)
class ConfidenceEnvelope:
    z: np.ndarray
    Xi: np.ndarray
    confidence: float = 0.95

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.Xi = np.asarray(self.Xi, dtype=float)
        if np.any(self.Xi <= 0):
            raise ValueError("envelope half-width must be positive")


# ---------------------------------------------------------------------------


def _grubbs_critical(n, alpha):
    t = sps.t.ppf(1 - alpha / (2 * n), n - 2)
    return (n - 1) / math.sqrt(n) * math.sqrt(t * t / (n - 2 + t * t))


def screen_outlier_sets(ens: MeasurementEnsemble, confidence=0.95):
    """Indices of sets flagged as outlying by an iterated two-sided Grubbs test.

    Each set is summarised by its mean deviation from the ensemble mean.
    """
    if ens.n < 3:
        raise ValueError("outlier screening needs at least 3 sets")
    summary = (ens.F - ens.F.mean(axis=0)).mean(axis=1)
    alpha = 1 - confidence
    active = list(range(ens.n))
    flagged = []
    while len(active) >= 3:
        x = summary[active]
        s = x.std(ddof=1)
        if not s > 0 or s < 1e-12 * (np.abs(x).max() + 1e-300):
            break
        dev = np.abs(x - x.mean()) / s
        k = int(np.argmax(dev))
        if dev[k] <= _grubbs_critical(len(active), alpha):
            break
        flagged.append(active.pop(k))
    return sorted(flagged)


def variance_of_mean_profile(ens: MeasurementEnsemble, window):
    """Per-point variance of the mean, averaged over sliding windows of width `window` (m)."""
    if ens.n < 2:
        raise ValueError("need at least 2 sets")
    step = ens.step
    if step > 0 and window < step * (1 - 1e-9):
        raise ValueError("pooling window must be at least one grid step")
    # shifted by the first set: identical sets give exactly zero
    var_mean = (ens.F - ens.F[0]).var(axis=0, ddof=1) / ens.n
    npts = max(1, int(round(window / step))) if step > 0 else 1
    if npts == 1:
        return var_mean
    kernel = np.ones(npts)
    num = np.convolve(var_mean, kernel, mode="same")
    den = np.convolve(np.ones_like(var_mean), kernel, mode="same")
    return num / den


def pooled_variance_of_mean(ens: MeasurementEnsemble, window=0.8e-9):
    """Representative standard deviation of the mean s_mean (N) over the whole grid."""
    return float(math.sqrt(np.mean(variance_of_mean_profile(ens, window))))


def student_t(n, confidence=0.95):
    """t_p(n-1) with p = (1 + confidence) / 2."""
    if n < 2 or not 0 < confidence < 1:
        raise ValueError("need n >= 2 and 0 < confidence < 1")
    return float(sps.t.ppf(0.5 * (1 + confidence), n - 1))


def random_error_student(s_mean, n, confidence=0.95):
    return s_mean * student_t(n, confidence)


def compose_uniform_systematics(half_widths, confidence=0.95):
    """Half-width at `confidence` of a sum of independent uniform errors.

    k sqrt(sum a_i^2) with k = 1.1 at 0.95 and 1.4 at 0.99, never more than
    the arithmetic sum of the half-widths.
    """
    a = np.asarray(list(half_widths), dtype=float)
    if np.any(a < 0):
        raise ValueError("half-widths must be non-negative")
    k = UNIFORM_COMPOSITION_K.get(round(confidence, 6))
    if k is None:
        raise ValueError(f"composition coefficient only available for {sorted(UNIFORM_COMPOSITION_K)}")
    if a.size == 0:
        return 0.0
    return float(min(k * math.sqrt(np.sum(a * a)), np.sum(a)))


def uniform_sum_quantile(half_widths, confidence=0.95):
    """Exact symmetric half-width d with P(|sum U_i| <= d) = confidence.

    Uses the closed-form CDF of a sum of uniforms on [-a_i, a_i]
    (inclusion-exclusion over the 2^N corners); meant for N up to ~15.
    """
    a = np.asarray([x for x in half_widths if x > 0], dtype=float)
    if a.size == 0:
        return 0.0
    n = a.size
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    shift = corners @ a
    sign = np.prod(corners, axis=1)  # (-1)^(number of -a corners)
    norm = math.factorial(n) * np.prod(2 * a)

    def cdf(x):
        return float(np.sum(sign * np.maximum(x + shift, 0.0) ** n) / norm)

    target = 0.5 * (1 + confidence)
    return float(optimize.brentq(lambda x: cdf(x) - target, 0.0, a.sum(), xtol=1e-14 * a.sum()))


def combine_random_systematic(delta_rand, delta_syst, s_rand):
    """Combine a random error (std s_rand, half-width delta_rand) with a systematic one.

    Within 0.8 <= delta_syst / s_rand <= 8 (5% slack on both edges) the result is
    0.8 (delta_rand + delta_syst); outside it, the dominant term in quadrature
    with the minor one. The result is never below the larger of the two.
    """
    if min(delta_rand, delta_syst, s_rand) < 0:
        raise ValueError("errors must be non-negative")
    lo, hi = COMBINATION_BAND
    ratio = math.inf if s_rand == 0 else delta_syst / s_rand
    if lo * (1 - BAND_SLACK) <= ratio <= hi * (1 + BAND_SLACK):
        return max(COMBINATION_FACTOR * (delta_rand + delta_syst), delta_rand, delta_syst)
    return math.hypot(delta_rand, delta_syst)


def total_experimental_error(delta_rand, delta_syst, s_mean, confidence=0.95):
    return combine_random_systematic(delta_rand, delta_syst, s_mean)


def experimental_error_budget(s_mean, n, systematic_components, confidence=0.95):
    """Budget from s_mean, the number of sets and labelled systematic half-widths (N)."""
    comps = list(systematic_components)
    t = student_t(n, confidence)
    d_rand = s_mean * t
    d_syst = compose_uniform_systematics([a for _, a in comps], confidence)
    d_tot = total_experimental_error(d_rand, d_syst, s_mean, confidence)
    return ExperimentalErrorBudget(s_mean, t, d_rand, comps, d_syst, d_tot, n, confidence)


def theoretical_error_budget(z, R, dR, dz, delta2=0.005, confidence=0.95):
    """Relative theoretical errors at separation(s) z.

    delta1 = z/R (proximity force approximation), delta2 = optical data,
    delta0 = their uniform composition, delta3 = dR/R + 3 dz/z (input data),
    delta_theor = delta0 (std taken as delta0/2) combined with delta3.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0) or not R > 0 or dR < 0 or dz < 0 or delta2 < 0:
        raise ValueError("need z > 0, R > 0 and non-negative errors")
    d1 = z_arr / R
    d0 = np.array([compose_uniform_systematics([a, delta2], confidence) for a in d1])
    try:
        with np.errstate(over="raise", divide="raise"):
            d3 = dR / R + 3.0 * dz / z_arr
    except FloatingPointError:
        d3 = np.array([np.inf])
    if not np.all(np.isfinite(d3)):
        raise OverflowError("input-data error diverges at this separation")
    dt = np.array([combine_random_systematic(a, b, a / 2) for a, b in zip(d0, d3)])
    scal = np.ndim(z) == 0
    pick = (lambda v: float(v[0])) if scal else (lambda v: v)
    return TheoreticalErrorBudget(pick(d1), delta2, pick(d0), pick(d3), pick(dt),
                                  {"R": R, "dR": dR, "dz": dz, "confidence": confidence})


def confidence_envelope(exp_budget: ExperimentalErrorBudget, theor_budget: TheoreticalErrorBudget,
                        F_theor, confidence=0.95) -> ConfidenceEnvelope:
    """Xi(z) = total experimental error + delta_theor(z) |F_theor(z)|."""
    dt = np.atleast_1d(np.asarray(theor_budget.delta_theor, dtype=float))
    if dt.size != F_theor.z.size:
        raise ValueError("theoretical budget and force curve are on different grids")
    Xi = exp_budget.delta_total + dt * np.abs(F_theor.F)
    return ConfidenceEnvelope(F_theor.z.copy(), Xi, confidence)
