"""Thresholded fluorescence readout and raw population estimation.

A shot reads the qubit by counting photons: a bright (|1>) qubit emits
Poisson(lambda_bright) counts, a dark (|0>) one Poisson(lambda_dark),
and the shot is called bright when the count exceeds a threshold.  State
preparation is imperfect too: with probability prep_error the qubit
starts in the wrong state, which folds into the bright probability
before detection.  Estimates are raw thresholded fractions; no readout
correction is applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class DetectorModel:
    """Poisson count rates per shot, decision threshold, and prep error."""

    lambda_dark: float = 0.1
    lambda_bright: float = 10.0
    threshold: int = 2
    prep_error: float = 0.005

    def __post_init__(self):
        if not (0.0 <= self.lambda_dark < self.lambda_bright):
            raise ValueError("need 0 <= lambda_dark < lambda_bright")
        if int(self.threshold) != self.threshold or self.threshold < 0:
            raise ValueError("threshold must be a nonnegative integer")
        if not (0.0 <= self.prep_error < 1.0):
            raise ValueError("prep_error must lie in [0, 1)")

    @classmethod
    def ideal(cls) -> "DetectorModel":
        """A detector whose misclassification rates underflow to zero."""
        return cls(lambda_dark=0.0, lambda_bright=1000.0, threshold=2,
                   prep_error=0.0)


class SpamErrors(NamedTuple):
    """Misclassification rates: false bright, false dark, and their mean."""

    false_bright: float
    false_dark: float
    mean: float


def spam_errors(det: DetectorModel) -> SpamErrors:
    """Detection error rates of a detector model.

    false_bright: a dark qubit yields counts above threshold.
    false_dark: a bright qubit yields counts at or below threshold.
    mean: (false_bright + false_dark) / 2, the symmetric detection error.
    """
    false_bright = float(stats.poisson.sf(det.threshold, det.lambda_dark))
    false_dark = float(stats.poisson.cdf(det.threshold, det.lambda_bright))
    return SpamErrors(false_bright, false_dark,
                      0.5 * (false_bright + false_dark))


def predicted_bright_fraction(p_bright: float, det: DetectorModel) -> float:
    """Expected thresholded bright fraction for a true |1> population."""
    if not (0.0 <= p_bright <= 1.0):
        raise ValueError("p_bright must lie in [0, 1]")
    p_eff = (1.0 - det.prep_error) * p_bright + det.prep_error * (1.0 - p_bright)
    fb, fd, _ = spam_errors(det)
    return p_eff * (1.0 - fd) + (1.0 - p_eff) * fb


def simulate_shot(p_bright: float, det: DetectorModel,
                  rng: np.random.Generator) -> bool:
    """One thresholded shot against a true |1> population."""
    if not (0.0 <= p_bright <= 1.0):
        raise ValueError("p_bright must lie in [0, 1]")
    p_eff = (1.0 - det.prep_error) * p_bright + det.prep_error * (1.0 - p_bright)
    lam = det.lambda_bright if rng.random() < p_eff else det.lambda_dark
    return int(rng.poisson(lam)) > det.threshold


@dataclass(frozen=True)
class PopulationEstimate:
    """Raw bright-fraction estimate with its binomial standard error."""

    p_hat: float
    std_error: float
    n_shots: int

    def __post_init__(self):
        if not (0.0 <= self.p_hat <= 1.0):
            raise ValueError("p_hat must lie in [0, 1]")
        if self.n_shots < 0:
            raise ValueError("n_shots must be >= 0")


def estimate_population(p_bright: float, det: DetectorModel, n_shots: int,
                        rng: np.random.Generator) -> PopulationEstimate:
    """Estimate the bright fraction from n thresholded shots.

    Shots are drawn in one vectorized pass, so the estimate for a given
    generator state is reproducible.  The returned p_hat is the raw
    thresholded fraction (its mean is ``predicted_bright_fraction``, not
    the true population).
    """
    if not (0.0 <= p_bright <= 1.0):
        raise ValueError("p_bright must lie in [0, 1]")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    p_eff = (1.0 - det.prep_error) * p_bright + det.prep_error * (1.0 - p_bright)
    bright = rng.random(n_shots) < p_eff
    lam = np.where(bright, det.lambda_bright, det.lambda_dark)
    counts = rng.poisson(lam)
    p_hat = float(np.mean(counts > det.threshold))
    std = float(np.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_shots))
    return PopulationEstimate(p_hat=p_hat, std_error=std, n_shots=n_shots)
