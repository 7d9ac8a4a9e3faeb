"""Upper-Jensen-bound acquisition values for GP-guided importance sampling.

The surrogate models a transform f of the target density q through a convex
link phi with q = phi(f): Exp (f = log q), Relu (f = q on positives), Square
(f = sqrt(q)). The acquisition value at a candidate is the exact posterior
expectation U = E[phi(f)] under the GP marginal N(m, sigma^2), which by
Jensen's inequality upper-bounds phi(m): the gap is an exploration bonus that
vanishes at noiselessly observed training points.
"""

from __future__ import annotations

import enum
import warnings

import numpy as np
from scipy import special

# exp() overflows just above this on float64; transform inputs are clipped
# here and flagged, though centered training data never gets close.
_LOG_SATURATION = 700.0


class Phi(enum.Enum):
    """Convex link family connecting the GP surrogate to the density."""

    EXP = "exp"
    RELU = "relu"
    SQUARE = "square"


def _normal_pdf(x: np.ndarray) -> np.ndarray:
    # Squaring huge z overflows to inf; exp(-inf) = 0 is the right limit.
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * np.square(x)) / np.sqrt(2.0 * np.pi)


def _normal_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * special.erfc(-x / np.sqrt(2.0))


def transform_output(phi: Phi, q_log_scale):
    """Map a log-density value to the GP training target phi^{-1}(q).

    Exp trains on log q directly; Relu on q; Square on sqrt(q). Inputs large
    enough to overflow exp are saturated with a warning; in sampler runs the
    running-max centering keeps inputs at or below zero.
    """
    q_log_scale = np.asarray(q_log_scale, dtype=float)
    if phi is Phi.EXP:
        return q_log_scale
    if np.any(q_log_scale > _LOG_SATURATION):
        warnings.warn("log-density exceeds exp() range, saturating", RuntimeWarning)
        q_log_scale = np.minimum(q_log_scale, _LOG_SATURATION)
    if phi is Phi.RELU:
        return np.exp(q_log_scale)
    if phi is Phi.SQUARE:
        return np.exp(0.5 * q_log_scale)
    raise ValueError(f"unknown phi family: {phi}")


def ujb(mean, variance, phi: Phi):
    """Closed-form E[phi(X)] for X ~ N(mean, variance), elementwise.

    Exp: exp(m + sigma^2 / 2). Square: m^2 + sigma^2. Relu:
    m Phi(m/sigma) + sigma pdf(m/sigma), the expectation of max(0, X); note
    the CDF weights the mean term and the PDF the deviation term, a pairing
    easy to transpose by accident, so the Monte Carlo oracle is the authority
    in the tests. At sigma = 0 every family collapses to phi(m).
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0):
        raise ValueError("variance must be nonnegative")
    if phi is Phi.EXP:
        return np.exp(mean + 0.5 * variance)
    if phi is Phi.SQUARE:
        return np.square(mean) + variance
    if phi is Phi.RELU:
        sigma = np.sqrt(variance)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(sigma > 0, mean / np.where(sigma > 0, sigma, 1.0), 0.0)
            smooth = mean * _normal_cdf(z) + sigma * _normal_pdf(z)
        return np.where(sigma > 0, smooth, np.maximum(mean, 0.0))
    raise ValueError(f"unknown phi family: {phi}")


def ujb_log(mean, variance):
    """log ujb for the Exp family: m + sigma^2 / 2.

    Stays finite where ujb itself under- or overflows; monotone in ujb, so
    pool argmaxes agree between the two representations.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0):
        raise ValueError("variance must be nonnegative")
    return mean + 0.5 * variance


def ujb_mc_oracle(
    mean: float, variance: float, phi: Phi, draws: int, seed: int
) -> float:
    """Plain Monte Carlo estimate of E[phi(X)], X ~ N(mean, variance)."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if draws < 1:
        raise ValueError("draws must be positive")
    rng = np.random.default_rng(seed)
    samples = mean + np.sqrt(variance) * rng.standard_normal(draws)
    if phi is Phi.EXP:
        values = np.exp(samples)
    elif phi is Phi.RELU:
        values = np.maximum(samples, 0.0)
    elif phi is Phi.SQUARE:
        values = np.square(samples)
    else:
        raise ValueError(f"unknown phi family: {phi}")
    return float(np.mean(values))
