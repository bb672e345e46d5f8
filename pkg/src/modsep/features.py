"""Lag-product classification features.

The discriminating statistic is w[k] = s[k] * conj(s[k-1]).  Frequency
modulations and linear modulations imprint different first and second
moments on Im(w[k]); the classifier uses the sample mean at the pi/2
spectrum placement together with the sample variances at the 0 and pi/2
placements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sigmodel import ComplexSeries


@dataclass(frozen=True)
class FeatureVector:
    """The three lag-product features of one realization."""

    mean_im_halfpi: float
    var_im_zero: float
    var_im_halfpi: float

    def __post_init__(self):
        values = (self.mean_im_halfpi, self.var_im_zero, self.var_im_halfpi)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("features must be finite")
        if self.var_im_zero < 0 or self.var_im_halfpi < 0:
            raise ValueError("variances must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.mean_im_halfpi, self.var_im_zero, self.var_im_halfpi])


def lag_product(s: ComplexSeries) -> ComplexSeries:
    """w[k] = s[k] * conj(s[k-1]); output is one sample shorter."""
    if len(s) < 2:
        raise ValueError("lag product needs at least 2 samples")
    w = s.samples[1:] * np.conj(s.samples[:-1])
    return ComplexSeries(w, s.sample_period)


def im_mean(w: ComplexSeries) -> float:
    """Sample mean of Im(w[k])."""
    return float(np.mean(w.samples.imag))


def im_variance(w: ComplexSeries) -> float:
    """Unbiased sample variance of Im(w[k])."""
    if len(w) < 2:
        raise ValueError("sample variance needs at least 2 lag samples")
    return float(np.var(w.samples.imag, ddof=1))


def extract_features(s_at_zero: ComplexSeries, s_at_halfpi: ComplexSeries) -> FeatureVector:
    """Features from one realization translated to the two spectrum placements.

    s_at_halfpi must be the same realization translated by pi/2 rad/sample;
    by the lag-product translation covariance this is equivalent to receiving
    the signal with its spectrum centered there.
    """
    w_zero = lag_product(s_at_zero)
    w_half = lag_product(s_at_halfpi)
    return FeatureVector(
        mean_im_halfpi=im_mean(w_half),
        var_im_zero=im_variance(w_zero),
        var_im_halfpi=im_variance(w_half),
    )
