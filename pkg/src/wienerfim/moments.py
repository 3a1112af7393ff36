"""Moments of the Gaussian linear-block output ``w = c @ x``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNonlinearityError, DegenerateOutputError, InputSpecError
from .model import WienerModel, derivative_coefficients
from .realization import SensitivityRealization, StateStatistics

SIGMA_FLOOR = 1e-12


def output_stats(real: SensitivityRealization, stats: StateStatistics) -> tuple[float, float]:
    """Mean ``gamma = c @ eta`` and variance ``sigma = c @ Sigma @ c`` of ``w``."""
    gamma = float(real.c @ stats.eta)
    sigma = float(real.c @ stats.Sigma @ real.c)
    if sigma <= SIGMA_FLOOR:
        raise DegenerateOutputError(f"output variance {sigma:.3g} is degenerate")
    return gamma, sigma


def moment_sequence(kmax: int, gamma: float, sigma: float) -> np.ndarray:
    """Raw moments ``E[X**k]``, ``k = 0..kmax``, of ``X ~ N(gamma, sigma)``.

    Uses ``mu_k = gamma mu_{k-1} + (k-1) sigma mu_{k-2}``.
    """
    if sigma < 0:
        raise InputSpecError("variance must be nonnegative")
    mu = np.empty(kmax + 1)
    mu[0] = 1.0
    if kmax >= 1:
        mu[1] = gamma
    for k in range(2, kmax + 1):
        mu[k] = gamma * mu[k - 1] + (k - 1) * sigma * mu[k - 2]
    return mu


def gaussian_moment(k: int, gamma: float, sigma: float) -> float:
    if k < 0:
        raise ValueError("moment order must be >= 0")
    return float(moment_sequence(k, gamma, sigma)[k])


def hankel_moments(mu: np.ndarray, m: int) -> np.ndarray:
    idx = np.arange(m + 1)
    return mu[idx[:, None] + idx[None, :]]


@dataclass(frozen=True)
class MomentContext:
    """Everything the information matrix needs from ``(gamma, sigma)``.

    ``Lambda[j, k] = E[w**(j+k)]`` is the second-moment matrix of
    ``z = (1, w, ..., w**m)``; ``beta = alpha2 @ Lambda @ alpha2`` is the mean
    square of the polynomial slope ``p'(w)``.
    """

    gamma: float
    sigma: float
    mu: np.ndarray
    Lambda: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    beta: float


def build_moment_context(model: WienerModel, gamma: float, sigma: float) -> MomentContext:
    if sigma <= SIGMA_FLOOR:
        raise DegenerateOutputError(f"output variance {sigma:.3g} is degenerate")
    m = model.m
    alpha1, alpha2 = derivative_coefficients(model.alpha_bar)
    if not np.any(alpha2):
        raise DegenerateNonlinearityError("polynomial is constant; its slope vanishes")
    mu = moment_sequence(2 * m, gamma, sigma)
    Lam = hankel_moments(mu, m)
    beta = float(alpha2 @ Lam @ alpha2)
    for arr in (mu, Lam, alpha1, alpha2):
        arr.setflags(write=False)
    return MomentContext(
        gamma=float(gamma), sigma=float(sigma), mu=mu, Lambda=Lam,
        alpha1=alpha1, alpha2=alpha2, beta=beta,
    )
