"""Processes for conditionally symmetric nulls.

Under a null where ``X_t - m`` is conditionally symmetric, a product of
per-step factors ``f(X_t - m)`` is a nonnegative martingale exactly when
``f >= 0`` and ``f(x) + f(-x) = 2``, and a supermartingale when the sum is at
most 2.  This module provides the exponential supermartingale, the mirroring
map that turns it into a martingale, a small family of odd-increment factors,
the integer sign walk (an admissible test when ``1/alpha`` is an integer), the
dyadic p-value and a confidence sequence for the center of symmetry.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .instruments import BatchProcess, ConfidenceSequence, EProcess, LogFactorProcess
from .model import NEVER

DEFAULT_PROBE = np.linspace(-5.0, 5.0, 1000)
_TOL = 1e-12


def exp_nsm_factor(x):
    """``g(x) = exp(x - x^2/2)``."""
    x = np.asarray(x, dtype=float)
    out = np.exp(x - 0.5 * x * x)
    return out if out.ndim else float(out)


def exp_nsm_log_factor(x):
    x = np.asarray(x, dtype=float)
    out = x - 0.5 * x * x
    return out if out.ndim else float(out)


def _mirrored_exp_log(x):
    # g(x) >= g(-x) iff x >= 0, so the mirror keeps g on x >= 0
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    up = ax - 0.5 * ax * ax
    with np.errstate(divide="ignore"):
        down = np.log(2.0 - np.exp(up))
    out = np.where(x >= 0, up, down)
    return out if out.ndim else float(out)


def mirrored_exp_factor(x):
    """Mirror image of :func:`exp_nsm_factor`; odd increments, dominates ``g``."""
    out = np.exp(_mirrored_exp_log(x))
    return out if np.ndim(out) else float(out)


class FactorError(ValueError):
    """A factor fails a functional condition; ``x`` is the offending point."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message if x is None else f"{message} (at x={x:.6g})")
        self.x = x


def mirror(g: Callable, probe: Sequence[float] | None = None) -> Callable:
    """Return ``f(x) = g(x)`` where ``g(x) >= g(-x)``, else ``2 - g(-x)``.

    ``g`` must satisfy ``g(x) + g(-x) <= 2`` (checked on ``probe``); the result
    then satisfies ``f >= g``, ``f >= 0`` and ``f(x) + f(-x) = 2``.
    """
    xs = DEFAULT_PROBE if probe is None else np.asarray(probe, dtype=float)
    s = np.asarray(g(xs), dtype=float) + np.asarray(g(-xs), dtype=float)
    bad = np.flatnonzero(s > 2 + _TOL)
    if bad.size:
        raise FactorError("g(x) + g(-x) exceeds 2, so g is not a supermartingale factor",
                          float(xs[bad[0]]))

    def f(x):
        x = np.asarray(x, dtype=float)
        gx, gm = np.asarray(g(x), dtype=float), np.asarray(g(-x), dtype=float)
        out = np.where(gx >= gm, gx, 2.0 - gm)
        return out if out.ndim else float(out)

    return f


_H = {
    "identity": lambda x, c: x,
    "cube": lambda x, c: x**3,
    "sinh": lambda x, c: np.sinh(x),
    "clip": lambda x, c: np.clip(x, -c, c),
}


@dataclass(frozen=True)
class OddIncrementFactor:
    """``f(x - center)`` built from an odd ``h`` and a wrapper.

    Wrappers: ``arctan`` (``1 + arctan h``), ``sin`` (``1 + sin h``), ``cos``
    (``1 + cos h``, *not* odd: :meth:`check` rejects it), ``mirrored-exponential``
    (the mirror of ``exp(y - y^2/2)`` at ``y = h``) and ``table``
    (``1 + sign(y) * interp(|y|)`` through ``(knots, values)``, odd by
    construction).  ``1 + arctan h`` is negative where ``h < -tan 1``; clip
    ``h`` (``h='clip'``, ``clip <= tan 1``) to keep it nonnegative everywhere.
    """

    wrapper: str = "arctan"
    h: str = "identity"
    center: float = 0.0
    clip: float = 1.0
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.h not in _H:
            raise ValueError(f"unknown odd function {self.h!r}")
        if self.wrapper not in ("arctan", "sin", "cos", "mirrored-exponential", "table"):
            raise ValueError(f"unknown wrapper {self.wrapper!r}")
        if self.h == "clip" and not self.clip > 0:
            raise ValueError("clip level must be positive")
        if self.wrapper == "table":
            k = np.asarray(self.knots, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if k.size == 0 or k.size != v.size or np.any(k <= 0) or np.any(np.diff(k) <= 0):
                raise ValueError("table needs increasing positive knots, one value each")
            if np.any(np.abs(v) > 1):
                raise ValueError("table values (f - 1) must lie in [-1, 1]")

    def _y(self, x):
        return _H[self.h](np.asarray(x, dtype=float) - self.center, self.clip)

    def __call__(self, x):
        y = self._y(x)
        if self.wrapper == "arctan":
            out = 1.0 + np.arctan(y)
        elif self.wrapper == "sin":
            out = 1.0 + np.sin(y)
        elif self.wrapper == "cos":
            out = 1.0 + np.cos(y)
        elif self.wrapper == "mirrored-exponential":
            out = mirrored_exp_factor(y)
        else:
            k = np.concatenate([[0.0], self.knots])
            v = np.concatenate([[0.0], self.values])
            out = 1.0 + np.sign(y) * np.interp(np.abs(y), k, v)
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def log_factor(self, x):
        if self.wrapper == "mirrored-exponential":
            return _mirrored_exp_log(self._y(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(np.asarray(self(x), dtype=float))
        return out if np.ndim(out) else float(out)

    def check(self, probe: Sequence[float] | None = None) -> None:
        """Raise :class:`FactorError` unless ``f(m+y) + f(m-y) = 2`` and
        ``f >= 0`` on the probe grid (offsets ``y`` from the center)."""
        ys = DEFAULT_PROBE if probe is None else np.asarray(probe, dtype=float)
        fp, fm = self(self.center + ys), self(self.center - ys)
        bad = np.flatnonzero(np.abs(fp + fm - 2) > _TOL)
        if bad.size:
            raise FactorError("f(x) + f(-x) != 2: f - 1 is not odd", float(ys[bad[0]]))
        neg = np.flatnonzero(np.minimum(fp, fm) < 0)
        if neg.size:
            raise FactorError("factor is negative", float(ys[neg[0]]))


# ---------------------------------------------------------------------------
# streaming e-processes


class ExpNSM(EProcess):
    """``prod exp((x - m) - (x - m)^2 / 2)``: a supermartingale, not a martingale."""

    def __init__(self, m: float = 0.0):
        super().__init__()
        self.m = m

    def log_factor(self, x):
        return exp_nsm_log_factor(x - self.m)


class FactorEProcess(EProcess):
    """Product of ``factor(x)`` over observations."""

    def __init__(self, factor: Callable):
        super().__init__()
        self.factor = factor

    def log_factor(self, x):
        if hasattr(self.factor, "log_factor"):
            return float(self.factor.log_factor(x))
        v = float(self.factor(x))
        return math.log(v) if v > 0 else -math.inf


def symmetric_nsm_step(state: EProcess, x: float, m: float) -> EProcess:
    """Copy of ``state`` with log value increased by ``(x - m) - (x - m)^2 / 2``."""
    new = copy.deepcopy(state)
    new.log_value += exp_nsm_log_factor(x - m)
    new.t += 1
    return new


def odd_evalue_step(state: EProcess, x: float, factor: OddIncrementFactor) -> EProcess:
    """Copy of ``state`` multiplied by ``factor(x)`` (``factor`` carries its center)."""
    new = copy.deepcopy(state)
    new.log_value += float(factor.log_factor(x))
    new.t += 1
    return new


# ---------------------------------------------------------------------------
# sign walk


def walk_threshold(alpha: float) -> int:
    """``1/alpha`` as an integer; anything else is refused."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    b = round(1 / alpha)
    if abs(b * alpha - 1) > 1e-12:
        raise ValueError(f"1/alpha = {1 / alpha} is not an integer; the sign-walk test "
                         "needs an integer threshold")
    return int(b)


@dataclass(frozen=True)
class SignWalkState:
    """Integer walk from 1, moving by the sign of each nonzero observation.

    Both 0 and ``threshold`` are absorbing; reaching ``threshold`` rejects.
    """

    threshold: int
    value: int = 1
    t: int = 0
    rejection_time: float = NEVER

    @property
    def absorbed_zero(self) -> bool:
        return self.value == 0

    @property
    def rejected(self) -> bool:
        return self.value >= self.threshold


def sign_walk_start(alpha: float) -> SignWalkState:
    b = walk_threshold(alpha)
    return SignWalkState(b, 1, 0, 0 if b <= 1 else NEVER)


def sign_walk_step(state: SignWalkState, x: float, m: float = 0.0) -> SignWalkState:
    t = state.t + 1
    if state.absorbed_zero or state.rejected or x == m:
        return SignWalkState(state.threshold, state.value, t, state.rejection_time)
    value = state.value + (1 if x > m else -1)
    rt = t if value >= state.threshold else NEVER
    return SignWalkState(state.threshold, value, t, rt)


def sign_walk_test(xs: Sequence[float], alpha: float, m: float = 0.0) -> float:
    """Rejection time of the sign-walk test at level ``alpha`` (``0`` when
    ``alpha = 1``: the walk starts on the threshold)."""
    s = sign_walk_start(alpha)
    for x in xs:
        if s.rejected or s.absorbed_zero:
            break
        s = sign_walk_step(s, x, m)
    return s.rejection_time


def sign_walk_paths(xs: np.ndarray, threshold: int, start=None, m: float = 0.0) -> np.ndarray:
    """Vectorised walk values ``(n, T)`` frozen after absorption."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    n, T = xs.shape
    start = np.ones(n, dtype=np.int64) if start is None else np.asarray(start, dtype=np.int64)
    steps = np.sign(xs - m).astype(np.int64)
    walk = start[:, None] + np.cumsum(steps, axis=1)
    live0 = (start > 0) & (start < threshold)
    hit = (walk <= 0) | (walk >= threshold)
    first = np.where(hit.any(axis=1), hit.argmax(axis=1), T)
    ts = np.arange(T)
    frozen = walk[np.arange(n), np.minimum(first, T - 1)]
    out = np.where(ts[None, :] >= first[:, None], frozen[:, None], walk)
    return np.where(live0[:, None], out, start[:, None])


class SignWalkBatch(BatchProcess):
    """Batch sign walk.  ``values`` are the walk; paths are done once absorbed."""

    kind = "walk"

    def __init__(self, alpha: float, m: float = 0.0):
        self.threshold = walk_threshold(alpha)
        self.m = m

    def start(self, us):
        return {"value": np.ones(len(us), dtype=np.int64)}

    def advance(self, state, xs):
        out = sign_walk_paths(xs, self.threshold, state["value"], self.m)
        state["value"] = out[:, -1].copy()
        return out

    def done(self, state) -> np.ndarray:
        v = state["value"]
        return (v <= 0) | (v >= self.threshold)


# ---------------------------------------------------------------------------
# dyadic p-value

DYADIC_BITS = 64


@dataclass(frozen=True)
class DyadicPValueState:
    """``p_t = 1 - sum_{s<=t} 2^{-N_s} 1{X_s > 0}`` where ``N_s`` counts the
    nonzero observations so far.  Stored exactly as ``q = 1 - p`` over
    ``2^64``; increments below ``2^-64`` are dropped."""

    q_num: int = 0
    n_nonzero: int = 0

    @property
    def p(self) -> Fraction:
        return 1 - Fraction(self.q_num, 1 << DYADIC_BITS)

    def __float__(self) -> float:
        return float(self.p)


def dyadic_pvalue_step(state: DyadicPValueState, x: float, m: float = 0.0) -> DyadicPValueState:
    if x == m:
        return state
    n = state.n_nonzero + 1
    q = state.q_num
    if x > m and n <= DYADIC_BITS:
        q += 1 << (DYADIC_BITS - n)
    return DyadicPValueState(q, n)


def dyadic_pvalues(xs: Sequence[float], m: float = 0.0) -> list[Fraction]:
    s, out = DyadicPValueState(), []
    for x in xs:
        s = dyadic_pvalue_step(s, x, m)
        out.append(s.p)
    return out


_TWO64 = 2.0**-64


def dyadic_p_batch(xs: np.ndarray, q_num=None, n_nonzero=None, m: float = 0.0):
    """Vectorised dyadic p-value.  Returns ``(p, q_num, n_nonzero)`` where the
    last two are the per-path state after the block (``uint64`` / ``int64``)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    n = xs.shape[0]
    q0 = np.zeros(n, dtype=np.uint64) if q_num is None else np.asarray(q_num, dtype=np.uint64)
    n0 = np.zeros(n, dtype=np.int64) if n_nonzero is None else np.asarray(n_nonzero, dtype=np.int64)
    d = xs - m
    N = n0[:, None] + np.cumsum(d != 0, axis=1)
    live = (d > 0) & (N <= DYADIC_BITS)
    shift = np.where(live, DYADIC_BITS - N, 0).astype(np.uint64)
    terms = np.where(live, np.left_shift(np.uint64(1), shift), np.uint64(0))
    q = q0[:, None] + np.cumsum(terms, axis=1, dtype=np.uint64)
    # 2^64 - q without overflow; q == 0 means p == 1
    pnum = (np.uint64(0) - q).astype(float) * _TWO64
    p = np.where(q == 0, 1.0, pnum)
    return p, q[:, -1].copy(), N[:, -1].copy()


class DyadicPBatch(BatchProcess):
    kind = "p"

    def __init__(self, m: float = 0.0):
        self.m = m

    def start(self, us):
        n = len(us)
        return {"q": np.zeros(n, dtype=np.uint64), "n": np.zeros(n, dtype=np.int64)}

    def advance(self, state, xs):
        p, state["q"], state["n"] = dyadic_p_batch(xs, state["q"], state["n"], self.m)
        return p


# ---------------------------------------------------------------------------
# batch e-processes


def exp_nsm_batch(m: float = 0.0) -> LogFactorProcess:
    return LogFactorProcess(lambda xs: exp_nsm_log_factor(xs - m), name="exp-nsm")


def mirrored_batch(m: float = 0.0) -> LogFactorProcess:
    return LogFactorProcess(lambda xs: _mirrored_exp_log(xs - m), name="mirrored")


def factor_batch(factor: OddIncrementFactor) -> LogFactorProcess:
    return LogFactorProcess(factor.log_factor, name=f"odd-{factor.wrapper}")


# ---------------------------------------------------------------------------
# confidence sequence for the center of symmetry


def symmetry_center_cs(xs: Sequence[float], alpha: float, grid: Sequence[float],
                       engine: str = "mirrored_nm",
                       factor: OddIncrementFactor | None = None) -> ConfidenceSequence:
    """``{m : test for center m has not rejected}`` over ``grid``.

    Engines: ``sign_walk`` (needs integer ``1/alpha``), ``mirrored_nm`` and
    ``odd_family`` (``factor``, default ``1 + arctan(clip(x - m, 1))``).  The
    martingales start at 1, so ``alpha = 1`` excludes every point at once.
    """
    xs = np.asarray(xs, dtype=float)
    grid = np.asarray(grid, dtype=float)
    T = xs.size
    masks = np.empty((T, grid.size), dtype=bool)
    if engine == "sign_walk":
        b = walk_threshold(alpha)
        walks = sign_walk_paths(np.broadcast_to(xs, (grid.size, T)) - grid[:, None], b)
        masks[:] = (walks < b).T if b > 1 else False
    elif engine in ("mirrored_nm", "odd_family"):
        if not 0 < alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        base = factor or OddIncrementFactor("arctan", "clip", clip=1.0)
        thresh = math.log(1 / alpha)
        for j, m in enumerate(grid):
            if engine == "mirrored_nm":
                lf = _mirrored_exp_log(xs - m)
            else:
                lf = OddIncrementFactor(base.wrapper, base.h, m, base.clip,
                                        base.knots, base.values).log_factor(xs)
            log_m = np.cumsum(lf)
            masks[:, j] = (np.maximum.accumulate(log_m) < thresh) & (0.0 < thresh)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return ConfidenceSequence(grid, masks, alpha)
