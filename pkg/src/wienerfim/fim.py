"""Closed-form Gaussian information matrix and its determinant factorization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConditioningError
from .model import WienerModel, check_identifiability
from .moments import MomentContext, build_moment_context, output_stats
from .realization import (
    GaussianInputSpec,
    SensitivityRealization,
    StateStatistics,
    build_sensitivity_realization,
    state_statistics,
)

LAMBDA_COND_MAX = 1e13
R2_ZERO_RTOL = 1e-10
DET_FLOOR = 1e-300


@dataclass(frozen=True)
class FimResult:
    J: np.ndarray
    m: int
    det_direct: float
    det_factored: float
    det_sigma: float
    r1: float
    r2: float
    f: float
    beta: float
    gamma: float
    sigma: float
    identifiability_scalar: float
    identifiable: bool

    @property
    def J11(self) -> np.ndarray:
        return self.J[: self.m, : self.m]

    @property
    def J21(self) -> np.ndarray:
        return self.J[self.m :, : self.m]

    @property
    def J22(self) -> np.ndarray:
        return self.J[self.m :, self.m :]

    def det_rel_diff(self) -> float:
        return abs(self.det_direct - self.det_factored) / max(
            abs(self.det_direct), abs(self.det_factored), DET_FLOOR
        )

    def to_dict(self) -> dict:
        return {
            "J": self.J.tolist(),
            "m": self.m,
            "d": self.J.shape[0] - self.m,
            "det_direct": self.det_direct,
            "det_factored": self.det_factored,
            "det_sigma": self.det_sigma,
            "r1": self.r1,
            "r2": self.r2,
            "f": self.f,
            "beta": self.beta,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "identifiability_scalar": self.identifiability_scalar,
            "identifiable": self.identifiable,
        }


@dataclass(frozen=True)
class SchurReport:
    residual_closed_form: float
    residual_det: float
    residual_schur_det: float
    residual_inverse: float | None
    branch: str  # "r2_zero" or "r2_nonzero"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _blocks(model: WienerModel, stats: StateStatistics, real: SensitivityRealization, ctx: MomentContext):
    gamma, sigma, beta = ctx.gamma, ctx.sigma, ctx.beta
    Q = np.array([[1.0 / sigma, -gamma / sigma], [0.0, 1.0]])
    F = np.column_stack([stats.Sigma @ real.c, stats.eta])
    H = np.diag([beta * sigma, 0.0])
    L2 = np.vstack([ctx.alpha1, ctx.alpha2])
    return model.maps.L1, L2, F @ Q, H


def assemble_fim_matrix(model, real, stats, ctx) -> np.ndarray:
    """Information matrix over ``[alpha, theta]`` from the block formulas."""
    L1, L2, FQ, H = _blocks(model, stats, real, ctx)
    Lam = ctx.Lambda
    J11 = L1 @ Lam @ L1.T
    J21 = FQ @ L2 @ Lam @ L1.T
    J22 = FQ @ (L2 @ Lam @ L2.T - H) @ FQ.T + ctx.beta * stats.Sigma
    J = np.block([[J11, J21.T], [J21, J22]])
    return 0.5 * (J + J.T)


def _lambda_inv_upsilon(model: WienerModel, ctx: MomentContext) -> np.ndarray:
    Lam = ctx.Lambda
    cond = np.linalg.cond(Lam)
    if not np.isfinite(cond) or cond > LAMBDA_COND_MAX:
        raise ConditioningError(f"moment matrix condition number {cond:.3g} is too large")
    try:
        fac = linalg.cho_factor(Lam)
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"moment matrix is not positive definite (cond {cond:.3g})") from exc
    return linalg.cho_solve(fac, model.constraint.upsilon)


def r_scalars(model: WienerModel, ctx: MomentContext) -> tuple[float, float]:
    """``r_i = alpha_i @ upsilon / sqrt(upsilon @ Lambda^-1 @ upsilon)``."""
    ups = model.constraint.upsilon
    q = float(ups @ _lambda_inv_upsilon(model, ctx))
    root = np.sqrt(q)
    return float(ctx.alpha1 @ ups) / root, float(ctx.alpha2 @ ups) / root


def f_from_context(model: WienerModel, ctx: MomentContext) -> float:
    """``beta**(d-1) r1**2 det(J11) / sigma``: depends on (model, gamma, sigma) only."""
    r1, _ = r_scalars(model, ctx)
    L1 = model.maps.L1
    det_j11 = np.linalg.det(L1 @ ctx.Lambda @ L1.T)
    return float(ctx.beta ** (model.d - 1) * r1 ** 2 * det_j11 / ctx.sigma)


def fim_determinant(model, real, stats, ctx) -> tuple[float, float, float, float]:
    """Return ``(det_factored, r1, r2, f)`` with ``det_factored = f det(Sigma)``."""
    r1, r2 = r_scalars(model, ctx)
    f = f_from_context(model, ctx)
    return f * float(np.linalg.det(stats.Sigma)), r1, r2, f


def assemble_fim(model, real, stats, ctx) -> FimResult:
    J = assemble_fim_matrix(model, real, stats, ctx)
    det_factored, r1, r2, f = fim_determinant(model, real, stats, ctx)
    s, ident = check_identifiability(model)
    return FimResult(
        J=J,
        m=model.m,
        det_direct=float(np.linalg.det(J)),
        det_factored=det_factored,
        det_sigma=float(np.linalg.det(stats.Sigma)),
        r1=r1,
        r2=r2,
        f=f,
        beta=ctx.beta,
        gamma=ctx.gamma,
        sigma=ctx.sigma,
        identifiability_scalar=s,
        identifiable=ident,
    )


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), DET_FLOOR))


def schur_consistency(model, real, stats, ctx) -> SchurReport:
    """Cross-check the Schur complement of ``J11`` against its closed forms.

    Residuals are relative; the caller decides what is small enough.
    """
    J = assemble_fim_matrix(model, real, stats, ctx)
    m = model.m
    J11, J21, J22 = J[:m, :m], J[m:, :m], J[m:, m:]
    S = J22 - J21 @ np.linalg.solve(J11, J21.T)

    L1, L2, FQ, H = _blocks(model, stats, real, ctx)
    ups = model.constraint.upsilon
    q = float(ups @ _lambda_inv_upsilon(model, ctx))
    L2u = L2 @ ups
    beta, sigma, gamma = ctx.beta, ctx.sigma, ctx.gamma
    Sigma, c, eta = stats.Sigma, real.c, stats.eta
    S_closed = beta * Sigma + FQ @ (np.outer(L2u, L2u) / q - H) @ FQ.T
    res_closed = _rel(S, S_closed)

    r1, r2 = L2u / np.sqrt(q)
    d = Sigma.shape[0]
    det_pred = r1 ** 2 / (beta * sigma) * np.linalg.det(beta * Sigma)
    res_det = _rel(np.linalg.det(S), det_pred)
    res_schur = _rel(np.linalg.det(J), np.linalg.det(J11) * np.linalg.det(S))

    r2_zero = abs(L2u[1]) <= R2_ZERO_RTOL * np.linalg.norm(ctx.alpha2) * np.linalg.norm(ups)
    res_inv = None
    if not r2_zero and r1 != 0:
        ratio = r2 / r1
        K = ratio * np.outer(c, eta) - np.eye(d)
        S_inv = (1.0 / r1 ** 2 - (ratio * gamma - 1.0) ** 2 / (beta * sigma)) * np.outer(c, c)
        S_inv = S_inv + K @ np.linalg.solve(beta * Sigma, K.T)
        res_inv = float(np.linalg.norm(S @ S_inv - np.eye(d)) / np.sqrt(d))
    return SchurReport(
        residual_closed_form=res_closed,
        residual_det=res_det,
        residual_schur_det=res_schur,
        residual_inverse=res_inv,
        branch="r2_zero" if r2_zero else "r2_nonzero",
    )


@dataclass(frozen=True)
class Pipeline:
    """Intermediate objects for one (model, input) pair."""

    model: WienerModel
    input: GaussianInputSpec
    real: SensitivityRealization
    stats: StateStatistics
    ctx: MomentContext


def prepare(model: WienerModel, input: GaussianInputSpec) -> Pipeline:
    real = build_sensitivity_realization(model.linear)
    stats = state_statistics(real, input)
    gamma, sigma = output_stats(real, stats)
    ctx = build_moment_context(model, gamma, sigma)
    return Pipeline(model, input, real, stats, ctx)


def compute_fim(model: WienerModel, input: GaussianInputSpec) -> FimResult:
    p = prepare(model, input)
    return assemble_fim(p.model, p.real, p.stats, p.ctx)
