"""Wiener model parameterization and the normalization constraint.

A Wiener model is a rational filter ``G(z, theta)`` followed by a polynomial
``p(x) = alpha_0 + alpha_1 x + ... + alpha_m x**m``.  The gain ambiguity
between the two blocks is removed by an affine constraint
``upsilon @ alpha_bar == 1``, which is solved for one coefficient
``alpha_ell``; the remaining ``m`` coefficients (in the order ``i_1..i_m``)
are the free nonlinear parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import lfilter

from .errors import ConstraintError, DimensionError, NormalizationError, StabilityError

STABILITY_MARGIN = 1e-8
NORMALIZATION_RESCALE_TOL = 1e-6
REDUCE_TOL = 1e-9
IDENTIFIABILITY_RTOL = 1e-8


def _frozen(x, ndim=1) -> np.ndarray:
    arr = np.array(x, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


def spectral_radius(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


@dataclass(frozen=True)
class LinearParams:
    """Coefficients of ``G(z) = (g0 + g1 z^-1 + ...) / (1 + a1 z^-1 + ...)``.

    With ``fir=True`` the denominator is fixed to one, ``a`` must be empty
    (or all zero) and ``theta = [g, g0]``.  Otherwise ``theta = [a, g, g0]``.
    """

    a: np.ndarray
    g: np.ndarray
    g0: float
    fir: bool = False

    def __post_init__(self):
        g = _frozen(self.g)
        a = _frozen(self.a) if len(np.atleast_1d(self.a)) else np.zeros(0)
        if g.ndim != 1:
            raise DimensionError("g must be a vector")
        if self.fir:
            if a.size and np.any(a != 0):
                raise DimensionError("an FIR linear block cannot carry denominator coefficients")
            a = np.zeros(0)
        else:
            if g.size < 1:
                raise DimensionError("a rational linear block needs n >= 1")
            if a.shape != g.shape:
                raise DimensionError(f"a has {a.size} coefficients but g has {g.size}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "g0", float(self.g0))
        object.__setattr__(self, "fir", bool(self.fir))
        if not self.fir:
            radius = self.pole_radius()
            if radius >= 1.0 - STABILITY_MARGIN:
                raise StabilityError(
                    f"denominator has a root of modulus {radius:.6g} (must be < 1)"
                )

    @property
    def n(self) -> int:
        return int(self.g.size)

    @property
    def state_dim(self) -> int:
        """Dimension ``d`` of the sensitivity realization."""
        return self.n + 1 if self.fir else 2 * self.n + 1

    @property
    def theta(self) -> np.ndarray:
        if self.fir:
            return np.concatenate([self.g, [self.g0]])
        return np.concatenate([self.a, self.g, [self.g0]])

    @property
    def numerator(self) -> np.ndarray:
        return np.concatenate([[self.g0], self.g])

    @property
    def denominator(self) -> np.ndarray:
        if self.fir:
            return np.ones(1)
        return np.concatenate([[1.0], self.a])

    def pole_radius(self) -> float:
        if self.fir or self.n == 0:
            return 0.0
        return float(np.max(np.abs(np.roots(self.denominator))))

    def with_theta(self, theta) -> "LinearParams":
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.state_dim:
            raise DimensionError(f"theta must have {self.state_dim} entries")
        n = self.n
        if self.fir:
            return LinearParams(a=[], g=theta[:n], g0=theta[n], fir=True)
        return LinearParams(a=theta[:n], g=theta[n:2 * n], g0=theta[2 * n])

    def transfer(self, z):
        """Evaluate ``G`` at complex ``z`` (array-like)."""
        zinv = 1.0 / np.asarray(z, dtype=complex)
        num = npoly.polyval(zinv, self.numerator)
        den = npoly.polyval(zinv, self.denominator)
        return num / den


@dataclass(frozen=True)
class NormalizationConstraint:
    """``upsilon @ alpha_bar == 1`` solved for ``alpha_bar[ell]``.

    ``ell`` defaults to the first index ``k >= 1`` with ``upsilon[k] != 0``.
    ``ell = 0`` is accepted so that the degenerate normalization
    ``upsilon = (1, 0, ..., 0)`` can be represented; such a model is never
    identifiable.  ``order`` defaults to the ascending free indices.
    """

    upsilon: np.ndarray
    ell: int | None = None
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        ups = _frozen(self.upsilon)
        if ups.ndim != 1 or ups.size < 2:
            raise DimensionError("upsilon needs m + 1 >= 2 entries")
        m = ups.size - 1
        ell = self.ell
        if ell is None:
            nz = [k for k in range(1, m + 1) if ups[k] != 0]
            if nz:
                ell = nz[0]
            elif ups[0] != 0:
                ell = 0
            else:
                raise ConstraintError("upsilon is identically zero")
        ell = int(ell)
        if not 0 <= ell <= m:
            raise ConstraintError(f"ell={ell} outside 0..{m}")
        if ups[ell] == 0:
            raise ConstraintError(f"upsilon[{ell}] must be nonzero")
        free = [k for k in range(m + 1) if k != ell]
        order = tuple(free) if self.order is None else tuple(int(k) for k in self.order)
        if sorted(order) != free:
            raise ConstraintError(
                f"order {order} must list each index of {free} exactly once"
            )
        object.__setattr__(self, "upsilon", ups)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "order", order)

    @property
    def m(self) -> int:
        return self.upsilon.size - 1


@dataclass(frozen=True)
class ConstraintMaps:
    L: np.ndarray
    P: np.ndarray

    @property
    def L1(self) -> np.ndarray:
        return self.L @ self.P


def build_constraint_maps(constraint: NormalizationConstraint, m: int | None = None) -> ConstraintMaps:
    """Return the reduction matrix ``L`` (m x m+1) and permutation ``P``.

    ``P`` reorders ``alpha_bar`` to ``(alpha_i1, ..., alpha_im, alpha_ell)``
    and ``L = [I, -upsilon_ik / upsilon_ell]``, so ``L @ P @ upsilon == 0``.
    """
    if m is None:
        m = constraint.m
    if m != constraint.m:
        raise DimensionError(f"m={m} but upsilon has {constraint.upsilon.size} entries")
    ups = constraint.upsilon
    ell = constraint.ell
    if ups[ell] == 0:
        raise ConstraintError(f"upsilon[{ell}] must be nonzero")
    P = np.zeros((m + 1, m + 1))
    for row, k in enumerate(constraint.order + (ell,)):
        P[row, k] = 1.0
    L = np.hstack([np.eye(m), (-ups[list(constraint.order)] / ups[ell])[:, None]])
    L.setflags(write=False)
    P.setflags(write=False)
    return ConstraintMaps(L=L, P=P)


def lift_alpha(alpha, constraint: NormalizationConstraint) -> np.ndarray:
    """Free coefficients -> full coefficient vector satisfying the constraint."""
    alpha = np.asarray(alpha, dtype=float)
    m = constraint.m
    if alpha.shape != (m,):
        raise DimensionError(f"expected {m} free coefficients, got shape {alpha.shape}")
    ups = constraint.upsilon
    ell = constraint.ell
    alpha_bar = np.zeros(m + 1)
    alpha_bar[list(constraint.order)] = alpha
    rest = ups @ alpha_bar
    alpha_bar[ell] = (1.0 - rest) / ups[ell]
    return alpha_bar


def reduce_alpha(alpha_bar, constraint: NormalizationConstraint) -> np.ndarray:
    alpha_bar = np.asarray(alpha_bar, dtype=float)
    if alpha_bar.shape != constraint.upsilon.shape:
        raise DimensionError(
            f"alpha_bar has shape {alpha_bar.shape}, upsilon {constraint.upsilon.shape}"
        )
    s = float(constraint.upsilon @ alpha_bar)
    if abs(s - 1.0) > REDUCE_TOL:
        raise NormalizationError(f"upsilon @ alpha_bar = {s!r}, expected 1")
    return alpha_bar[list(constraint.order)].copy()


def derivative_coefficients(alpha_bar) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient vectors of ``w p'(w)`` and ``p'(w)`` in the monomial basis.

    ``alpha1 = (0, a1, 2 a2, ..., m am)`` and ``alpha2 = (a1, 2 a2, ..., m am, 0)``.
    """
    alpha_bar = np.asarray(alpha_bar, dtype=float)
    m = alpha_bar.size - 1
    k_alpha = np.arange(1, m + 1) * alpha_bar[1:]
    return np.concatenate([[0.0], k_alpha]), np.concatenate([k_alpha, [0.0]])


@dataclass(frozen=True)
class WienerModel:
    """True parameters of a Wiener system plus its normalization.

    ``alpha_bar`` is rescaled onto the constraint hyperplane if it misses it by
    less than ``1e-6``; larger violations raise :class:`NormalizationError`.
    """

    linear: LinearParams
    alpha_bar: np.ndarray
    constraint: NormalizationConstraint
    maps: ConstraintMaps = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alpha_bar = np.array(self.alpha_bar, dtype=float)
        if alpha_bar.ndim != 1 or alpha_bar.size < 2:
            raise DimensionError("alpha_bar needs m + 1 >= 2 entries")
        if alpha_bar.size != self.constraint.upsilon.size:
            raise DimensionError(
                f"alpha_bar has {alpha_bar.size} entries, upsilon {self.constraint.upsilon.size}"
            )
        s = float(self.constraint.upsilon @ alpha_bar)
        if abs(s - 1.0) >= NORMALIZATION_RESCALE_TOL:
            raise NormalizationError(f"upsilon @ alpha_bar = {s!r}, expected 1")
        if s != 1.0:
            alpha_bar = alpha_bar / s
        alpha_bar.setflags(write=False)
        object.__setattr__(self, "alpha_bar", alpha_bar)
        object.__setattr__(self, "maps", build_constraint_maps(self.constraint))

    @property
    def m(self) -> int:
        return self.alpha_bar.size - 1

    @property
    def d(self) -> int:
        return self.linear.state_dim

    @property
    def n_params(self) -> int:
        return self.m + self.d

    @property
    def alpha(self) -> np.ndarray:
        return self.alpha_bar[list(self.constraint.order)].copy()

    @property
    def params(self) -> np.ndarray:
        """Free parameter vector ``[alpha, theta]``."""
        return np.concatenate([self.alpha, self.linear.theta])

    def with_params(self, params) -> "WienerModel":
        params = np.asarray(params, dtype=float)
        m = self.m
        return WienerModel(
            linear=self.linear.with_theta(params[m:]),
            alpha_bar=lift_alpha(params[:m], self.constraint),
            constraint=self.constraint,
        )

    def polynomial(self, x):
        return npoly.polyval(x, self.alpha_bar)


def check_identifiability(model: WienerModel) -> tuple[float, bool]:
    """Return ``s = sum_k k upsilon_k alpha_k`` and whether ``s`` is nonzero.

    The information matrix is singular exactly when ``s == 0``; "nonzero" is
    judged relative to ``|alpha1| |upsilon|``.
    """
    alpha1, _ = derivative_coefficients(model.alpha_bar)
    ups = model.constraint.upsilon
    s = float(alpha1 @ ups)
    scale = np.linalg.norm(alpha1) * np.linalg.norm(ups)
    return s, bool(abs(s) > IDENTIFIABILITY_RTOL * scale)


def filter_linear(linear: LinearParams, u) -> np.ndarray:
    """Zero-initial-state direct-form filtering of ``u`` through ``G``."""
    if not linear.fir and linear.pole_radius() >= 1.0 - STABILITY_MARGIN:
        raise StabilityError("linear block is not asymptotically stable")
    return lfilter(linear.numerator, linear.denominator, np.asarray(u, dtype=float))


def eval_model(model: WienerModel, u) -> np.ndarray:
    """Model output ``y(t) = p(G(z) u(t))`` from a zero initial state."""
    return model.polynomial(filter_linear(model.linear, u))
