"""Gaussian nonnegative martingales and the normal-mixture confidence sequence.

For observations ``Y_t | past ~ N(m, sigma_t^2)`` with predictable ``sigma_t^2``,

    log G_t(lam) = lam * S_t - lam^2 / 2 * V_t,   S_t = sum (Y_s - m),  V_t = sum sigma_s^2

is a martingale for every ``lam``.  Mixing ``lam ~ N(0, rho^2)`` gives

    log G_t = 1/2 log(1 / (1 + rho^2 V_t)) + rho^2 S_t^2 / (2 (1 + rho^2 V_t)).
"""

from __future__ import annotations

import copy
import math
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .instruments import BatchProcess, ConfidenceSequence, EProcess
from .model import NullModel


class GaussianMartingale(EProcess):
    """Streaming ``G_t^m(lam)``; ``lam = 1`` is the plain Gaussian NM."""

    def __init__(self, m: float = 0.0, lam: float = 1.0):
        super().__init__()
        self.m, self.lam = m, lam
        self.S = 0.0
        self.V = 0.0

    def update(self, y: float, sigma_sq: float = 1.0) -> float:
        if not sigma_sq > 0:
            raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
        d = y - self.m
        self.S += d
        self.V += sigma_sq
        self.log_value += self.lam * d - 0.5 * self.lam**2 * sigma_sq
        self.t += 1
        return self.value

    def reconstructed_log_value(self) -> float:
        return self.lam * self.S - 0.5 * self.lam**2 * self.V


class MixtureMartingale(EProcess):
    """Streaming normal-mixture martingale with mixing ``N(0, rho^2)``."""

    def __init__(self, m: float = 0.0, rho: float = 1.0):
        super().__init__()
        if not rho > 0:
            raise ValueError("rho must be positive")
        self.m, self.rho = m, rho
        self.S = 0.0
        self.V = 0.0

    def update(self, y: float, sigma_sq: float = 1.0) -> float:
        if not sigma_sq > 0:
            raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
        self.S += y - self.m
        self.V += sigma_sq
        self.t += 1
        self.log_value = float(mixture_log_value(self.S, self.V, self.rho))
        return self.value


def gaussian_nm_step(state: GaussianMartingale, y: float, sigma_sq: float) -> GaussianMartingale:
    """Return a copy of ``state`` advanced by one observation."""
    new = copy.deepcopy(state)
    new.update(y, sigma_sq)
    return new


def mixture_log_value(S, V, rho: float = 1.0):
    """Closed-form log of the normal-mixture martingale."""
    S = np.asarray(S, dtype=float)
    V = np.asarray(V, dtype=float)
    r2 = rho * rho
    denom = 1.0 + r2 * V
    out = -0.5 * np.log(denom) + r2 * S * S / (2.0 * denom)
    return out if out.ndim else float(out)


def mixture_log_value_quadrature(S: float, V: float, rho: float = 1.0, nodes: int = 41) -> float:
    """Log of ``int exp(lam S - lam^2 V / 2) dN(0, rho^2)(lam)`` by adaptive
    Gauss-Hermite quadrature.

    The integrand's mode and curvature are located numerically (no use of the
    closed form), then a ``nodes``-point Gauss-Hermite rule is laid over them.
    """
    def h(lam):
        return lam * S - 0.5 * lam * lam * V - 0.5 * (lam / rho) ** 2

    res = optimize.minimize_scalar(lambda x: -h(x), bracket=(-1.0, 1.0), tol=1e-12)
    mode = float(res.x)
    step = 1e-3 / math.sqrt(1.0 + V + 1.0 / rho**2)
    curv = -(h(mode + step) - 2 * h(mode) + h(mode - step)) / step**2
    if not curv > 0:
        raise ArithmeticError("integrand is not log-concave; quadrature undefined")
    scale = math.sqrt(2.0 / curv)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    log_terms = np.log(w) + h(mode + scale * x) + x * x
    return float(special.logsumexp(log_terms) + math.log(scale) - 0.5 * math.log(2 * math.pi) - math.log(rho))


def mixture_cs_radius(t, alpha: float):
    """Half-width of the unit-variance normal-mixture confidence sequence at time ``t``.

    ``sqrt((1 + 1/t) log((t + 1) / alpha^2) / t)``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise ValueError("t must be >= 1")
    out = np.sqrt((1 + 1 / t) * np.log((t + 1) / alpha**2) / t)
    return out if out.ndim else float(out)


def mixture_cs(ys: Sequence[float], alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact-interval mode for unit variance: ``(centers, radii)`` per time.

    The set at time ``t`` is the open interval ``center +/- radius``.
    """
    ys = np.asarray(ys, dtype=float)
    t = np.arange(1, ys.size + 1)
    return np.cumsum(ys) / t, mixture_cs_radius(t, alpha)


def gaussian_log_paths(ys: np.ndarray, m: float = 0.0, sigma_sq=1.0, *, kind: str = "plain",
                       lam: float = 1.0, rho: float = 1.0) -> np.ndarray:
    """Log martingale paths (row per path) for the plain or mixture NM."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    var = np.broadcast_to(np.asarray(sigma_sq, dtype=float), ys.shape)
    S = np.cumsum(ys - m, axis=1)
    V = np.cumsum(var, axis=1)
    if kind == "plain":
        return lam * S - 0.5 * lam**2 * V
    if kind == "mixture":
        return mixture_log_value(S, V, rho)
    raise ValueError(f"unknown kind {kind!r}")


def gaussian_cs(ys: Sequence[float], alpha: float, grid: Sequence[float], sigma_sq=1.0,
                kind: str = "mixture", lam: float = 1.0, rho: float = 1.0) -> ConfidenceSequence:
    """Grid confidence sequence ``{m : G_t^m < 1/alpha}`` with running intersection."""
    ys = np.asarray(ys, dtype=float)
    grid = np.asarray(grid, dtype=float)
    thresh = math.log(1 / alpha)
    masks = np.empty((ys.size, grid.size), dtype=bool)
    for j, m in enumerate(grid):
        masks[:, j] = gaussian_log_paths(ys, m, sigma_sq, kind=kind, lam=lam, rho=rho)[0] < thresh
    return ConfidenceSequence(grid, masks, alpha)


class GaussianNMBatch(BatchProcess):
    """Batch ``log G_t^m(lam)``.  ``model`` supplies predictable variances;
    without one the variance is ``sigma_sq``."""

    def __init__(self, m: float = 0.0, lam: float = 1.0, sigma_sq: float = 1.0,
                 model: NullModel | None = None):
        self.m, self.lam, self.sigma_sq, self.model = m, lam, sigma_sq, model

    def start(self, us):
        return {"log": np.zeros(len(us)), "prev": np.zeros(len(us))}

    def advance(self, state, xs):
        if self.model is None:
            out = xs - (self.m + 0.5 * self.lam * self.sigma_sq) if self.lam == 1.0 else \
                self.lam * (xs - self.m) - 0.5 * self.lam**2 * self.sigma_sq
        else:
            var = self.model.variances(xs, state["prev"])
            out = self.lam * (xs - self.m) - 0.5 * self.lam**2 * var
        np.cumsum(out, axis=1, out=out)
        out += state["log"][:, None]
        state["log"] = out[:, -1].copy()
        state["prev"] = xs[:, -1].copy()
        return out


class MixtureBatch(BatchProcess):
    """Batch normal-mixture martingale (known variance ``sigma_sq``)."""

    def __init__(self, m: float = 0.0, rho: float = 1.0, sigma_sq: float = 1.0):
        self.m, self.rho, self.sigma_sq = m, rho, sigma_sq

    def start(self, us):
        n = len(us)
        return {"S": np.zeros(n), "V": np.zeros(n)}

    def advance(self, state, xs):
        S = np.cumsum(xs - self.m, axis=1) + state["S"][:, None]
        V = state["V"][:, None] + self.sigma_sq * np.arange(1, xs.shape[1] + 1)
        state["S"] = S[:, -1].copy()
        state["V"] = V[:, -1].copy()
        return mixture_log_value(S, np.broadcast_to(V, S.shape), self.rho)
