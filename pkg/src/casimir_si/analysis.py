"""End-to-end analysis of a measurement ensemble against a theoretical curve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compare import ComparisonReport, difference_report
from .lifshitz import ForceCurve
from .pipeline import DEFAULT_SYSTEMATICS, mean_curve
from .stats import (ConfidenceEnvelope, ExperimentalErrorBudget, MeasurementEnsemble, TheoreticalErrorBudget,
                    confidence_envelope, experimental_error_budget, pooled_variance_of_mean,
                    screen_outlier_sets, theoretical_error_budget)


@dataclass(frozen=True)
class BudgetConstants:
    """Inputs of the error budgets (SI)."""

    systematics: tuple = DEFAULT_SYSTEMATICS
    pooling_window: float = 0.8e-9
    dz: float = 0.8e-9
    delta2: float = 0.005
    confidence: float = 0.95


@dataclass(eq=False)
class AnalysisResult:
    mean: ForceCurve
    theory: ForceCurve
    outliers: list
    exp_budget: ExperimentalErrorBudget
    theor_budget: TheoreticalErrorBudget
    envelope: ConfidenceEnvelope
    report: ComparisonReport

    def summary(self):
        lines = [f"sets = {self.exp_budget.n}, outlying sets = {self.outliers or 'none'}",
                 self.exp_budget.summary(),
                 f"relative experimental error at {self.mean.z[0] * 1e9:.2f} nm = "
                 f"{100 * self.exp_budget.delta_total / abs(self.mean.F[0]):.3f}%",
                 f"relative theoretical error at {self.theory.z[0] * 1e9:.2f} nm = "
                 f"{100 * np.atleast_1d(self.theor_budget.delta_theor)[0]:.3f}% "
                 "(composite member's std approximated by half its half-width)",
                 self.report.summary()]
        return "\n".join(lines)


def analyze(ens: MeasurementEnsemble, theory: ForceCurve, constants: BudgetConstants = BudgetConstants(),
            screen=True) -> AnalysisResult:
    """Mean curve, error budgets, envelope and comparison for one ensemble.

    Flagged outlying sets are reported, not removed.
    """
    if theory.geometry is None:
        raise ValueError("theory curve carries no geometry")
    outliers = screen_outlier_sets(ens, constants.confidence) if screen and ens.n >= 3 else []
    mean = mean_curve(ens)
    s_mean = pooled_variance_of_mean(ens, constants.pooling_window)
    eb = experimental_error_budget(s_mean, ens.n, constants.systematics, constants.confidence)
    tb = theoretical_error_budget(theory.z, theory.geometry.R, theory.geometry.dR, constants.dz,
                                  constants.delta2, constants.confidence)
    env = confidence_envelope(eb, tb, theory, constants.confidence)
    rep = difference_report(theory, mean, env)
    return AnalysisResult(mean, theory, outliers, eb, tb, env, rep)
