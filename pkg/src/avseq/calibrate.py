"""p-to-e calibrators, distribution functions and the randomisation device."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Calibrator:
    """Nonincreasing ``f`` on ``[0, 1]`` with unit integral.

    ``kind`` is ``"sqrt"`` (``1/(2 sqrt u)``), ``"power"`` (``kappa u^(kappa-1)``)
    or ``"table"`` (step function, value ``values[i]`` on ``(edges[i], edges[i+1]]``).
    """

    kind: str = "sqrt"
    kappa: float = 0.5
    edges: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("sqrt", "power", "table"):
            raise ValueError(f"unknown calibrator kind {self.kind!r}")
        if self.kind == "power" and not 0 < self.kappa < 1:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.kind == "table":
            self._check_table()

    def _check_table(self):
        e, v = np.asarray(self.edges, float), np.asarray(self.values, float)
        if e.size != v.size + 1 or e[0] != 0.0 or e[-1] != 1.0 or np.any(np.diff(e) <= 0):
            raise ValueError("table edges must increase from 0 to 1, one more than values")
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise ValueError("table values must be nonnegative and nonincreasing")
        if abs(self.integral() - 1) > 1e-6:
            raise ValueError(f"calibrator integrates to {float(self.integral())}, not 1")

    def integral(self) -> Fraction | float:
        """Exact for every kind: 1 for sqrt/power, exact step sum for tables."""
        if self.kind != "table":
            return Fraction(1)
        return sum((Fraction(hi) - Fraction(lo)) * Fraction(val)
                   for lo, hi, val in zip(self.edges[:-1], self.edges[1:], self.values))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
            raise ValueError("p-values must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            if self.kind == "sqrt":
                out = 0.5 / np.sqrt(p)
            elif self.kind == "power":
                out = self.kappa * p ** (self.kappa - 1)
            else:
                idx = np.searchsorted(self.edges, p, side="left") - 1
                vals = np.asarray(self.values, dtype=float)
                out = vals[np.clip(idx, 0, len(vals) - 1)]
        return out if out.ndim else float(out)


def sqrt_calibrator() -> Calibrator:
    return Calibrator("sqrt")


def power_calibrator(kappa: float) -> Calibrator:
    return Calibrator("power", kappa=kappa)


def table_calibrator(edges: Sequence[float], values: Sequence[float]) -> Calibrator:
    return Calibrator("table", edges=tuple(edges), values=tuple(values))


def apply_calibrator(c: Calibrator, p):
    """``f(p)``; ``p = 0`` gives ``inf`` (rejection at every level)."""
    return c(p)


class Cdf:
    """Right-continuous distribution function with left limits.

    Build with :meth:`empirical`, :meth:`step` or :meth:`analytic`.
    """

    def __init__(self, points=None, masses=None, dist=None):
        self._dist = dist
        if dist is None:
            pts = np.asarray(points, dtype=float)
            m = np.asarray(masses, dtype=float)
            order = np.argsort(pts, kind="stable")
            pts, m = pts[order], m[order]
            if np.any(m < 0) or abs(m.sum() - 1) > 1e-9:
                raise ValueError("masses must be nonnegative and sum to 1")
            self.points = pts
            self.cum = np.minimum(np.cumsum(m), 1.0)

    @classmethod
    def empirical(cls, samples) -> "Cdf":
        pts, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return cls(pts, counts / counts.sum())

    @classmethod
    def step(cls, points, masses) -> "Cdf":
        return cls(points, masses)

    @classmethod
    def analytic(cls, name: str, *args) -> "Cdf":
        """A continuous family from :mod:`scipy.stats`, e.g. ``("norm", 0, 1)``."""
        return cls(dist=getattr(stats, name)(*args))

    def __call__(self, y):
        if self._dist is not None:
            return self._dist.cdf(y)
        idx = np.searchsorted(self.points, y, side="right")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)

    def left(self, y):
        """``F(y-)``."""
        if self._dist is not None:
            return self._dist.cdf(y)
        idx = np.searchsorted(self.points, y, side="left")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)


def randomize(y, F: Cdf, u):
    """``u F(y) + (1 - u) F(y-)``: uniform when ``y ~ F`` and ``u`` is an
    independent uniform, and never above ``F(y)``."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("u must lie in [0, 1]")
    out = u * F(y) + (1 - u) * F.left(y)
    return out if np.ndim(out) else float(out)


def ks_uniformity(samples) -> float:
    """Kolmogorov-Smirnov distance between the samples and Uniform[0, 1]."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise ValueError(f"need at least 100 samples, got {x.size}")
    return float(stats.kstest(x, "uniform").statistic)


def dkw_bound(n: int, delta: float = 1e-3) -> float:
    """Radius ``eps`` with ``P(KS > eps) <= delta`` (Dvoretzky-Kiefer-Wolfowitz)."""
    return float(np.sqrt(np.log(2 / delta) / (2 * n)))
