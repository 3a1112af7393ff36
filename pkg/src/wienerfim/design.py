"""One-dimensional D-optimal scan over the input power.

With the input mean held fixed, ``det J = f(gamma, sigma) * det(Sigma)``
where only ``det(Sigma)`` depends on the spectrum.  Scaling the input
covariance by ``s`` sweeps ``sigma`` along a ray, and the scan reports
``det J`` for each scale under a power budget.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .fim import f_from_context, prepare
from .model import WienerModel
from .moments import build_moment_context
from .realization import GaussianInputSpec

CSV_COLUMNS = ("s", "sigma", "gamma", "f", "detSigma", "detJ", "feasible")
BUDGET_RTOL = 1e-12


def f_factor(model: WienerModel, gamma: float, sigma: float) -> float:
    """The spectrum-independent determinant factor at output statistics ``(gamma, sigma)``."""
    return f_from_context(model, build_moment_context(model, gamma, sigma))


@dataclass(frozen=True)
class ScanRow:
    s: float
    sigma: float
    gamma: float
    f: float
    detSigma: float
    detJ: float
    feasible: bool
    power: float


@dataclass(frozen=True)
class ScanResult:
    rows: list[ScanRow]
    argmax: int
    budget: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [repr(r.s), repr(r.sigma), repr(r.gamma), repr(r.f),
                 repr(r.detSigma), repr(r.detJ), "true" if r.feasible else "false"]
            )
        return buf.getvalue()

    def summary(self) -> dict:
        best = self.rows[self.argmax]
        return {
            "argmax": self.argmax,
            "best": {k: getattr(best, k) for k in CSV_COLUMNS},
            "budget": self.budget,
            "n_rows": len(self.rows),
            "n_feasible": sum(r.feasible for r in self.rows),
        }


def input_power(input: GaussianInputSpec, s: float = 1.0) -> float:
    """Budgeted power of ``input.scaled(s)``; a direct covariance counts as unit power."""
    base = input.input_variance()
    return s * (1.0 if base is None else base)


def scan_sigma(model: WienerModel, base_input: GaussianInputSpec, scales, budget: float) -> ScanResult:
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("need at least one scale")
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly ascending")
    rows = []
    for s in scales:
        inp = base_input.scaled(s)
        p = prepare(model, inp)
        f = f_from_context(model, p.ctx)
        det_sigma = float(np.linalg.det(p.stats.Sigma))
        power = input_power(base_input, s)
        rows.append(ScanRow(
            s=s, sigma=p.ctx.sigma, gamma=p.ctx.gamma, f=f, detSigma=det_sigma,
            detJ=f * det_sigma, feasible=power <= budget * (1 + BUDGET_RTOL), power=power,
        ))
    feasible = [i for i, r in enumerate(rows) if r.feasible]
    if not feasible:
        raise BudgetError(f"no scale satisfies the power budget {budget!r}")
    best = max(feasible, key=lambda i: rows[i].detJ)
    return ScanResult(rows=rows, argmax=best, budget=float(budget))
