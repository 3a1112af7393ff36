"""State-space realizations and stationary Gaussian state statistics.

The sensitivity realization ``x(t) = A x(t-1) + b u(t)`` produces the
gradient of the linear-block output with respect to ``theta`` as its state:
``dw/dtheta = x(t)`` and ``w = c @ x(t)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputSpecError, StabilityError
from .model import STABILITY_MARGIN, LinearParams, spectral_radius

PD_RTOL = 1e-12


def build_canonical(linear: LinearParams) -> tuple[np.ndarray, np.ndarray]:
    """Controllable canonical pair ``(A1, b1)`` for the denominator of ``G``.

    For an FIR block the denominator coefficients are zero and ``A1`` is the
    down-shift matrix.
    """
    n = linear.n
    A1 = np.zeros((n, n))
    if n:
        A1[0, :] = -linear.a if not linear.fir else 0.0
        A1[1:, :-1] = np.eye(n - 1)
    b1 = np.zeros(n)
    if n:
        b1[0] = 1.0
    return A1, b1


@dataclass(frozen=True)
class SensitivityRealization:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    Cbar: np.ndarray

    @property
    def d(self) -> int:
        return self.b.size

    def transfer(self, z) -> np.ndarray:
        """``(I - A/z)^-1 b`` at each complex ``z``; shape ``(len(z), d)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        eye = np.eye(self.d)
        return np.array([np.linalg.solve(eye - self.A / zk, self.b) for zk in z])


def build_sensitivity_realization(linear: LinearParams) -> SensitivityRealization:
    n = linear.n
    A1, b1 = build_canonical(linear)
    if linear.fir:
        d = n + 1
        A = np.zeros((d, d))
        A[:n, :n] = A1
        A[:n, n] = b1
        b = np.zeros(d)
        b[n] = 1.0
        Cbar = np.eye(d)
        c = linear.theta
    else:
        if spectral_radius(A1) >= 1.0 - STABILITY_MARGIN:
            raise StabilityError("canonical A1 has spectral radius >= 1")
        d = 2 * n + 1
        a, g, g0 = linear.a, linear.g, linear.g0
        eye = np.eye(n)
        Cbar = np.zeros((d, d))
        Cbar[:n, :n] = eye
        Cbar[:n, n:2 * n] = -g0 * eye
        Cbar[n:2 * n, n:2 * n] = eye
        Cbar[2 * n, n:2 * n] = -a
        Cbar[2 * n, 2 * n] = 1.0
        inner = np.zeros((d, d))
        inner[:n, :n] = A1
        inner[:n, n:2 * n] = -np.outer(b1, g - a * g0)
        inner[n:2 * n, n:2 * n] = A1
        inner[n:2 * n, 2 * n] = b1
        # Cbar is unit triangular: solve instead of inverting.
        A = np.linalg.solve(Cbar.T, (Cbar @ inner).T).T
        b = np.zeros(d)
        b[-1] = 1.0
        c = np.concatenate([np.zeros(n), g, [g0]])
    for arr in (A, b, c, Cbar):
        arr.setflags(write=False)
    return SensitivityRealization(A=A, b=b, c=c, Cbar=Cbar)


def solve_discrete_lyapunov(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve ``X = A X A^T + Q`` through the vectorized linear system."""
    d = A.shape[0]
    if spectral_radius(A) >= 1.0 - STABILITY_MARGIN:
        raise StabilityError("Lyapunov equation needs a stable A")
    K = np.eye(d * d) - np.kron(A, A)
    X = np.linalg.solve(K, Q.reshape(-1)).reshape(d, d)
    return 0.5 * (X + X.T)


def _filter_realization(num, den) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Canonical ``(A_h, b_h, c_h, h0)`` for ``H(z) = num(z^-1)/den(z^-1)``.

    Convention: ``s(t+1) = A_h s(t) + b_h e(t)``, ``y(t) = c_h @ s(t) + h0 e(t)``.
    """
    num = np.atleast_1d(np.asarray(num, dtype=float))
    den = np.atleast_1d(np.asarray(den, dtype=float))
    if den.size == 0 or den[0] == 0:
        raise InputSpecError("shaping denominator must have a nonzero leading coefficient")
    num, den = num / den[0], den / den[0]
    k = max(num.size, den.size) - 1
    num = np.pad(num, (0, k + 1 - num.size))
    den = np.pad(den, (0, k + 1 - den.size))
    h0 = float(num[0])
    A_h = np.zeros((k, k))
    if k:
        A_h[0, :] = -den[1:]
        A_h[1:, :-1] = np.eye(k - 1)
    b_h = np.zeros(k)
    if k:
        b_h[0] = 1.0
    c_h = num[1:] - den[1:] * h0
    return A_h, b_h, c_h, h0


@dataclass(frozen=True)
class GaussianInputSpec:
    """Stationary Gaussian input: mean plus one second-order description.

    ``kind`` is ``"white"`` (i.i.d. with ``variance``), ``"shaped"`` (unit white
    noise through the stable filter ``num/den``) or ``"direct"`` (the state
    covariance ``sigma`` is given outright).
    """

    mean: float = 0.0
    kind: str = "white"
    variance: float | None = None
    num: tuple[float, ...] | None = None
    den: tuple[float, ...] | None = None
    sigma: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        if self.kind == "white":
            if self.variance is None or not self.variance > 0:
                raise InputSpecError("white input needs variance > 0")
            object.__setattr__(self, "variance", float(self.variance))
        elif self.kind == "shaped":
            if self.num is None or self.den is None:
                raise InputSpecError("shaped input needs num and den")
            num = tuple(float(v) for v in np.atleast_1d(self.num))
            den = tuple(float(v) for v in np.atleast_1d(self.den))
            object.__setattr__(self, "num", num)
            object.__setattr__(self, "den", den)
            A_h, _, c_h, h0 = _filter_realization(num, den)
            if spectral_radius(A_h) >= 1.0 - STABILITY_MARGIN:
                raise InputSpecError("shaping filter is not stable")
            if h0 == 0 and not np.any(c_h):
                raise InputSpecError("shaping filter is identically zero")
        elif self.kind == "direct":
            if self.sigma is None:
                raise InputSpecError("direct input needs sigma")
            S = np.array(self.sigma, dtype=float, ndmin=2)
            if S.shape[0] != S.shape[1]:
                raise InputSpecError("sigma must be square")
            if not np.allclose(S, S.T, rtol=1e-12, atol=1e-14 * np.abs(S).max()):
                raise InputSpecError("sigma must be symmetric")
            S = 0.5 * (S + S.T)
            eig = np.linalg.eigvalsh(S)
            if eig[0] <= PD_RTOL * max(eig[-1], 0.0) or eig[-1] <= 0:
                raise InputSpecError("sigma must be positive definite")
            S.setflags(write=False)
            object.__setattr__(self, "sigma", S)
        else:
            raise InputSpecError(f"unknown input kind {self.kind!r}")

    @classmethod
    def white(cls, variance: float, mean: float = 0.0) -> "GaussianInputSpec":
        return cls(mean=mean, kind="white", variance=variance)

    @classmethod
    def shaped(cls, num, den, mean: float = 0.0) -> "GaussianInputSpec":
        return cls(mean=mean, kind="shaped", num=tuple(num), den=tuple(den))

    @classmethod
    def direct(cls, sigma, mean: float = 0.0) -> "GaussianInputSpec":
        return cls(mean=mean, kind="direct", sigma=sigma)

    def scaled(self, s: float) -> "GaussianInputSpec":
        """Same mean, covariance contribution multiplied by ``s``."""
        if not s > 0:
            raise InputSpecError("scale must be positive")
        if self.kind == "white":
            return GaussianInputSpec.white(self.variance * s, self.mean)
        if self.kind == "shaped":
            r = np.sqrt(s)
            return GaussianInputSpec.shaped([r * v for v in self.num], self.den, self.mean)
        return GaussianInputSpec.direct(self.sigma * s, self.mean)

    def input_variance(self) -> float | None:
        """Variance of ``u``; ``None`` for a direct state covariance."""
        if self.kind == "white":
            return self.variance
        if self.kind == "shaped":
            A_h, b_h, c_h, h0 = _filter_realization(self.num, self.den)
            if A_h.size == 0:
                return h0 ** 2
            P = solve_discrete_lyapunov(A_h, np.outer(b_h, b_h))
            return float(c_h @ P @ c_h + h0 ** 2)
        return None


@dataclass(frozen=True)
class StateStatistics:
    eta: np.ndarray
    Sigma: np.ndarray
    min_eig: float
    pd: bool


def stationary_mean(real: SensitivityRealization, input_mean: float) -> np.ndarray:
    return np.linalg.solve(np.eye(real.d) - real.A, real.b * input_mean)


def state_statistics(real: SensitivityRealization, input: GaussianInputSpec) -> StateStatistics:
    d = real.d
    if spectral_radius(real.A) >= 1.0 - STABILITY_MARGIN:
        raise StabilityError("sensitivity realization is not stable")
    eta = stationary_mean(real, input.mean)
    if input.kind == "white":
        Sigma = solve_discrete_lyapunov(real.A, input.variance * np.outer(real.b, real.b))
    elif input.kind == "shaped":
        A_h, b_h, c_h, h0 = _filter_realization(input.num, input.den)
        k = A_h.shape[0]
        A_aug = np.zeros((d + k, d + k))
        A_aug[:d, :d] = real.A
        A_aug[:d, d:] = np.outer(real.b, c_h)
        A_aug[d:, d:] = A_h
        B_aug = np.concatenate([real.b * h0, b_h])
        Sigma = solve_discrete_lyapunov(A_aug, np.outer(B_aug, B_aug))[:d, :d].copy()
    else:
        Sigma = np.array(input.sigma, dtype=float)
        if Sigma.shape != (d, d):
            raise DimensionError(f"direct sigma must be {d}x{d}, got {Sigma.shape}")
    eig = np.linalg.eigvalsh(Sigma)
    pd = bool(eig[0] > PD_RTOL * max(eig[-1], 0.0))
    if not pd:
        warnings.warn(
            f"state covariance is not numerically positive definite (min eig {eig[0]:.3g}); "
            "the linear block may be non-minimal",
            RuntimeWarning,
            stacklevel=2,
        )
    eta.setflags(write=False)
    Sigma.setflags(write=False)
    return StateStatistics(eta=eta, Sigma=Sigma, min_eig=float(eig[0]), pd=pd)
