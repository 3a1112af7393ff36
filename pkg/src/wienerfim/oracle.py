"""Monte Carlo and finite-difference ground truth for the closed forms.

Samples are split over independent generator streams (Philox, spawned from
one ``SeedSequence``); per-stream moment sums are merged in stream order, so
a report depends only on ``(seed, streams)`` and never on thread timing.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import kernels
from .errors import DimensionError, StepSizeError
from .model import WienerModel, derivative_coefficients, eval_model
from .realization import (
    GaussianInputSpec,
    SensitivityRealization,
    build_sensitivity_realization,
    stationary_mean,
)

INPUT_CHUNK = 1 << 18
FD_REL_STEP = 1e-6
FD_REL_FLOOR = 1e-3


@dataclass(frozen=True)
class SimulationPlan:
    samples: int
    burn_in: int | None = None
    seed: int = 0
    streams: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.streams < 1:
            raise ValueError("streams must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def stream_sizes(self) -> list[int]:
        q, r = divmod(self.samples, self.streams)
        return [q + (i < r) for i in range(self.streams)]

    def generators(self) -> list[np.random.Generator]:
        seqs = np.random.SeedSequence(self.seed).spawn(self.streams)
        return [np.random.Generator(np.random.Philox(s)) for s in seqs]


def default_burn_in(model: WienerModel, input: GaussianInputSpec | None = None) -> int:
    """``max(100 n, 10 * slowest time constant, d)``, counting the shaping filter."""
    radius = model.linear.pole_radius()
    if input is not None and input.kind == "shaped":
        den = np.asarray(input.den, dtype=float)
        if den.size > 1:
            radius = max(radius, float(np.max(np.abs(np.roots(den)))))
    tau = -1.0 / math.log(radius) if radius > 0 else 0.0
    return max(100 * model.linear.n, math.ceil(10 * tau), model.d)


def _input_chunks(input: GaussianInputSpec, rng: np.random.Generator, total: int):
    """Yield consecutive chunks of a length-``total`` input realization."""
    zi = None
    if input.kind == "shaped":
        num = np.asarray(input.num, dtype=float)
        den = np.asarray(input.den, dtype=float)
        zi = np.zeros(max(num.size, den.size) - 1)
    done = 0
    while done < total:
        k = min(INPUT_CHUNK, total - done)
        e = rng.standard_normal(k)
        if input.kind == "white":
            u = input.mean + math.sqrt(input.variance) * e
        else:
            y, zi = lfilter(num, den, e, zi=zi)
            u = input.mean + y
        done += k
        yield u


def _direct_draws(real, input, rng, count):
    eta = stationary_mean(real, input.mean)
    chol = np.linalg.cholesky(input.sigma)
    return eta + rng.standard_normal((count, real.d)) @ chol.T


def simulate_states(
    real: SensitivityRealization,
    input: GaussianInputSpec,
    plan: SimulationPlan,
    model: WienerModel | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Simulated post-burn-in ``(X, u)`` with one row per sample, streams concatenated.

    A ``direct`` input fixes only the state distribution, so its states are
    drawn i.i.d. from ``N(eta, Sigma)`` and ``u`` is ``None``.
    """
    burn = plan.burn_in
    if burn is None:
        burn = default_burn_in(model, input) if model is not None else 0
    Xs, Us = [], []
    for rng, size in zip(plan.generators(), plan.stream_sizes()):
        if input.kind == "direct":
            Xs.append(_direct_draws(real, input, rng, size))
            continue
        u = np.concatenate(list(_input_chunks(input, rng, burn + size)))
        X, _ = kernels.state_recursion(real.A, real.b, u, np.zeros(real.d))
        Xs.append(X[burn:])
        Us.append(u[burn:])
    X = np.concatenate(Xs)
    return X, (np.concatenate(Us) if Us else None)


@dataclass(frozen=True)
class _Sums:
    S_vv: np.ndarray
    S_x: np.ndarray
    S_xx: np.ndarray
    S_w: float
    S_ww: float
    count: int


def _stream_sums(model, real, input, rng, size, burn) -> _Sums:
    L1 = np.ascontiguousarray(model.maps.L1)
    _, alpha2 = derivative_coefficients(model.alpha_bar)
    A, b, c = (np.ascontiguousarray(v) for v in (real.A, real.b, real.c))
    if input.kind == "direct":
        X = _direct_draws(real, input, rng, size)
        S_vv, S_x, S_xx, S_w, S_ww = kernels.score_outer(X, c, L1, alpha2)
        return _Sums(S_vv, S_x, S_xx, float(S_w), float(S_ww), size)
    p, d = model.n_params, real.d
    acc = [np.zeros((p, p)), np.zeros(d), np.zeros((d, d)), 0.0, 0.0]
    x = np.zeros(d)
    seen = 0
    for u in _input_chunks(input, rng, burn + size):
        skip = min(max(burn - seen, 0), u.size)
        *parts, x = kernels.simulate_accumulate(A, b, c, L1, alpha2, u, x, skip)
        for i, part in enumerate(parts):
            acc[i] = acc[i] + part
        seen += u.size
    return _Sums(acc[0], acc[1], acc[2], float(acc[3]), float(acc[4]), size)


@dataclass(frozen=True)
class OracleReport:
    J_hat: np.ndarray
    Sigma_hat: np.ndarray
    eta_hat: np.ndarray
    gamma_hat: float
    sigma_hat: float
    samples: int
    burn_in: int
    seed: int
    streams: int
    backend: str
    stream_gamma: tuple[float, ...]
    stream_sigma: tuple[float, ...]
    rel_err_J: float | None = None
    grad_max_rel_err: float | None = None
    J_closed: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "J_hat": self.J_hat.tolist(),
            "Sigma_hat": self.Sigma_hat.tolist(),
            "eta_hat": self.eta_hat.tolist(),
            "gamma_hat": self.gamma_hat,
            "sigma_hat": self.sigma_hat,
            "rel_err_J": self.rel_err_J,
            "grad_max_rel_err": self.grad_max_rel_err,
            "samples": self.samples,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "streams": self.streams,
            "backend": self.backend,
        }


def empirical_fim(
    model: WienerModel,
    input: GaussianInputSpec,
    plan: SimulationPlan,
    J_closed: np.ndarray | None = None,
    real: SensitivityRealization | None = None,
) -> OracleReport:
    """Estimate ``E[v v^T]`` and the state statistics by simulation.

    When ``J_closed`` is given the relative Frobenius error of the estimate is
    filled in.
    """
    if real is None:
        real = build_sensitivity_realization(model.linear)
    burn = plan.burn_in if plan.burn_in is not None else default_burn_in(model, input)
    jobs = list(zip(plan.generators(), plan.stream_sizes()))

    def run(job):
        rng, size = job
        return _stream_sums(model, real, input, rng, size, burn)

    workers = min(plan.streams, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]

    N = sum(p.count for p in parts)
    S_vv = sum(p.S_vv for p in parts)
    S_x = sum(p.S_x for p in parts)
    S_xx = sum(p.S_xx for p in parts)
    S_w = sum(p.S_w for p in parts)
    S_ww = sum(p.S_ww for p in parts)
    J_hat = S_vv / N
    eta_hat = S_x / N
    Sigma_hat = S_xx / N - np.outer(eta_hat, eta_hat)
    gamma_hat = S_w / N
    sigma_hat = S_ww / N - gamma_hat ** 2
    rel = None
    if J_closed is not None:
        if J_closed.shape != J_hat.shape:
            raise DimensionError(f"closed-form J has shape {J_closed.shape}, expected {J_hat.shape}")
        rel = float(np.linalg.norm(J_hat - J_closed) / np.linalg.norm(J_closed))
    return OracleReport(
        J_hat=J_hat,
        Sigma_hat=Sigma_hat,
        eta_hat=eta_hat,
        gamma_hat=float(gamma_hat),
        sigma_hat=float(sigma_hat),
        samples=N,
        burn_in=burn,
        seed=plan.seed,
        streams=plan.streams,
        backend=kernels.BACKEND_NAME,
        stream_gamma=tuple(p.S_w / p.count for p in parts),
        stream_sigma=tuple(p.S_ww / p.count - (p.S_w / p.count) ** 2 for p in parts),
        rel_err_J=rel,
        J_closed=J_closed,
    )


def analytic_score(model: WienerModel, u_window, t: int, real: SensitivityRealization | None = None):
    """Score ``[L1 z; x * (alpha2 @ z)]`` at time ``t`` from a zero initial state."""
    if real is None:
        real = build_sensitivity_realization(model.linear)
    u = np.asarray(u_window, dtype=float)[: t + 1]
    X, _ = kernels.state_recursion(real.A, real.b, np.ascontiguousarray(u), np.zeros(real.d))
    x = X[t]
    w = real.c @ x
    z = w ** np.arange(model.m + 1)
    _, alpha2 = derivative_coefficients(model.alpha_bar)
    return np.concatenate([model.maps.L1 @ z, x * (alpha2 @ z)])


@dataclass(frozen=True)
class ScoreCheck:
    numeric: np.ndarray
    analytic: np.ndarray
    max_rel_err: float


def finite_diff_score(
    model: WienerModel, u_window, t: int, rel_step: float = FD_REL_STEP
) -> ScoreCheck:
    """Central-difference gradient of the model output at time ``t``.

    Free nonlinear coefficients are perturbed through the constraint lift, so
    every perturbed model still satisfies the normalization.  The mismatch is
    componentwise, relative to ``max(|v_i|, 1e-3 * max|v|)``.
    """
    u = np.asarray(u_window, dtype=float)
    if not 0 <= t < u.size:
        raise DimensionError(f"t={t} outside the input window of length {u.size}")
    u = u[: t + 1]
    params = model.params
    numeric = np.empty(params.size)
    for i, p in enumerate(params):
        h = rel_step * (1.0 + abs(p))
        hi, lo = params.copy(), params.copy()
        hi[i] += h
        lo[i] -= h
        if hi[i] == lo[i] or not np.isfinite(h) or h == 0:
            raise StepSizeError(f"step {h!r} underflows for parameter {i}")
        numeric[i] = (
            eval_model(model.with_params(hi), u)[t] - eval_model(model.with_params(lo), u)[t]
        ) / (hi[i] - lo[i])
    analytic = analytic_score(model, u, t)
    scale = np.maximum(np.abs(analytic), FD_REL_FLOOR * np.max(np.abs(analytic)))
    scale = np.where(scale > 0, scale, 1.0)
    err = float(np.max(np.abs(numeric - analytic) / scale))
    return ScoreCheck(numeric=numeric, analytic=analytic, max_rel_err=err)
