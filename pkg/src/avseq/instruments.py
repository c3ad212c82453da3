"""The four anytime-valid instruments and the reductions between them.

e-values and martingales are kept in log space (value 0 is ``-inf``) so long
horizons do not overflow.  Times are 1-based; :data:`~avseq.model.NEVER`
(``inf``) means "not within the horizon".  Threshold comparisons are
inclusive: a test rejects when ``e_t >= 1/alpha`` or ``p_t <= alpha``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calibrate import Calibrator, sqrt_calibrator
from .model import NEVER, NullModel, make_rng, sample_paths
from .report import Check, Report, binomial_se


def _check_alpha(alpha: float) -> float:
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


# ---------------------------------------------------------------------------
# streaming instruments


class EProcess:
    """Streaming e-process: a product of per-step factors, stored as a log.

    Subclasses define :meth:`log_factor`.  ``update`` consumes one observation
    and returns the new e-value.
    """

    def __init__(self):
        self.log_value = 0.0
        self.t = 0

    def log_factor(self, x: float) -> float:
        raise NotImplementedError

    def update(self, x: float) -> float:
        self.log_value += self.log_factor(x)
        self.t += 1
        return self.value

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value > -math.inf else 0.0

    def run(self, xs: Sequence[float]) -> np.ndarray:
        return np.array([self.update(x) for x in xs])

    def copy(self) -> "EProcess":
        return copy.deepcopy(self)


class PProcess:
    """Streaming p-process; with ``monotone`` set the running infimum is kept."""

    def __init__(self, monotone: bool = True):
        self.current = 1.0
        self.monotone = monotone

    def update(self, p: float) -> float:
        if not 0 <= p <= 1:
            raise ValueError(f"p-value must lie in [0, 1], got {p}")
        self.current = min(self.current, p) if self.monotone else p
        return self.current


class SequentialTest:
    """Absorbing reject/continue decision at level ``alpha``."""

    def __init__(self, alpha: float, source: str = "Direct"):
        if source not in ("FromE", "FromP", "FromCS", "Direct"):
            raise ValueError(f"unknown test source {source!r}")
        self.alpha = _check_alpha(alpha)
        self.source = source
        self.rejected = False
        self.t = 0
        self.rejection_time = NEVER

    def update(self, evidence: float) -> bool:
        """Feed the source statistic (e-value, p-value or a 0/1 flag)."""
        self.t += 1
        if not self.rejected:
            if self.source == "FromE":
                hit = evidence >= 1 / self.alpha
            elif self.source == "FromP":
                hit = evidence <= self.alpha
            else:
                hit = bool(evidence)
            if hit:
                self.rejected = True
                self.rejection_time = self.t
        return self.rejected


@dataclass
class ConfidenceSequence:
    """Per-time inclusion masks over a finite grid of candidate values.

    ``masks[t-1, j]`` says whether ``grid[j]`` is in the set at time ``t``.
    """

    grid: np.ndarray
    masks: np.ndarray
    alpha: float
    running_intersection: bool = True

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.masks = np.asarray(self.masks, dtype=bool)
        if self.masks.ndim != 2 or self.masks.shape[1] != self.grid.size:
            raise ValueError("masks must have shape (T, len(grid))")
        if self.running_intersection:
            self.masks = np.logical_and.accumulate(self.masks, axis=0)

    @property
    def horizon(self) -> int:
        return self.masks.shape[0]

    def at(self, t: int) -> np.ndarray:
        return self.grid[self.masks[t - 1]]

    def _index(self, value) -> int:
        hits = np.flatnonzero(self.grid == value)
        if hits.size == 0:
            raise ValueError(f"{value} is not on the grid")
        return int(hits[0])

    def covers(self, value) -> np.ndarray:
        return self.masks[:, self._index(value)]

    def exclusion_time(self, value) -> float:
        out = np.flatnonzero(~self.covers(value))
        return float(out[0] + 1) if out.size else NEVER


@dataclass
class MeasureFamily:
    """Finite stand-in for a composite family of laws."""

    members: list[NullModel]
    role: str = "null"
    reference: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("a measure family needs at least one member")
        if self.role not in ("null", "alternative"):
            raise ValueError("role must be 'null' or 'alternative'")


# ---------------------------------------------------------------------------
# batch processes (vectorised over paths, consumed block by block)


class BatchProcess:
    """Vectorised adapted process.

    ``start(us)`` returns a state dict of per-path arrays; ``advance(state, xs)``
    consumes an ``(n, B)`` block and returns the ``(n, B)`` values.  ``kind`` is
    ``"e"`` (values are log e-values), ``"p"`` (p-values) or ``"walk"``.
    States are dicts of arrays indexed by path, so the harness can drop
    finished paths with a boolean mask.
    """

    kind = "e"

    def start(self, us: np.ndarray) -> dict:
        return {"log": np.zeros(len(us))}

    def advance(self, state: dict, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class LogFactorProcess(BatchProcess):
    """``log M_t = sum_s log_factor(x_s)``."""

    def __init__(self, log_factor: Callable[[np.ndarray], np.ndarray], name: str = ""):
        self.log_factor = log_factor
        self.name = name

    def advance(self, state, xs):
        out = np.asarray(self.log_factor(xs), dtype=float)
        if out is xs:
            out = out.copy()
        np.cumsum(out, axis=1, out=out)
        out += state["log"][:, None]
        state["log"] = out[:, -1].copy()
        return out


def corrupted_martingale(rate: float = 1.01) -> LogFactorProcess:
    """Deterministic growth by ``rate`` per step: a broken "martingale" used as
    a positive control (it must be caught by any Ville check)."""
    lr = math.log(rate)
    return LogFactorProcess(lambda xs: np.full(np.shape(xs), lr), name=f"corrupted({rate})")


# ---------------------------------------------------------------------------
# reductions


def e_to_p(e_path) -> np.ndarray:
    """``p_t = 1 ^ inf_{s<=t} 1/e_s``; ``e_s = 0`` leaves ``p`` unchanged."""
    e = np.asarray(e_path, dtype=float)
    if np.any(e < 0) or np.any(np.isnan(e)):
        raise ValueError("e-values must be nonnegative")
    with np.errstate(divide="ignore"):
        inv = np.where(e > 0, 1.0 / np.where(e > 0, e, 1.0), np.inf)
    return np.minimum.accumulate(np.minimum(inv, 1.0), axis=-1)


def log_e_to_p(log_e) -> np.ndarray:
    """:func:`e_to_p` on log e-values (works along the last axis)."""
    running = np.maximum.accumulate(np.asarray(log_e, dtype=float), axis=-1)
    return np.exp(-np.maximum(running, 0.0))


def e_to_test(e_path, alpha: float) -> float:
    """First time ``e_t >= 1/alpha``, else ``NEVER``."""
    _check_alpha(alpha)
    e = np.asarray(e_path, dtype=float)
    hits = np.flatnonzero(e >= 1 / alpha)
    return float(hits[0] + 1) if hits.size else NEVER


def p_to_test(p_path, alpha: float) -> float:
    """First time ``p_t <= alpha``, else ``NEVER``."""
    _check_alpha(alpha)
    hits = np.flatnonzero(np.asarray(p_path, dtype=float) <= alpha)
    return float(hits[0] + 1) if hits.size else NEVER


def test_family_to_p(alphas: Sequence[float], rejection_times: Sequence[float],
                     horizon: int) -> np.ndarray:
    """p-path from a nested family of tests indexed by an alpha grid.

    ``p_t`` is the smallest grid level whose test has rejected by ``t``
    (1 when none has).
    """
    alphas = np.asarray(alphas, dtype=float)
    times = np.asarray(rejection_times, dtype=float)
    if alphas.shape != times.shape:
        raise ValueError("one rejection time per alpha is required")
    order = np.argsort(alphas)
    alphas, times = alphas[order], times[order]
    if np.any(times[1:] > times[:-1]):
        raise ValueError("tests are not nested: rejection time must be nonincreasing in alpha")
    ts = np.arange(1, horizon + 1)
    rejected = times[None, :] <= ts[:, None]
    return np.where(rejected, alphas[None, :], 1.0).min(axis=1)


test_family_to_p.__test__ = False  # not a pytest test


def p_to_e_calibrated(p_path, calibrator: Calibrator | None = None) -> np.ndarray:
    """``e_t = f(p_t)`` for a calibrator ``f`` (default ``1/(2 sqrt p)``)."""
    c = calibrator or sqrt_calibrator()
    if abs(float(c.integral()) - 1) > 1e-6:
        raise ValueError("calibrator does not integrate to 1")
    return np.asarray(c(np.asarray(p_path, dtype=float)), dtype=float)


def invert_tests_to_cs(grid: Sequence[float], rejection_times: Sequence[float],
                       alpha: float, horizon: int) -> ConfidenceSequence:
    """``C_t = {gamma : test for gamma has not rejected by t}``."""
    grid = np.asarray(grid, dtype=float)
    times = np.asarray(rejection_times, dtype=float)
    if grid.shape != times.shape:
        raise ValueError("one test per grid point is required")
    ts = np.arange(1, horizon + 1)
    return ConfidenceSequence(grid, times[None, :] > ts[:, None], alpha)


def cs_to_test(cs: ConfidenceSequence, null_values: Sequence[float]) -> float:
    """First time the set shares no point with ``null_values``."""
    null_values = list(null_values)
    if not null_values:
        raise ValueError("null_values must be non-empty")
    cols = [cs._index(v) for v in null_values]
    empty = ~cs.masks[:, cols].any(axis=1)
    hits = np.flatnonzero(empty)
    return float(hits[0] + 1) if hits.size else NEVER


def aggregate_composite(paths: Sequence, kind: str) -> np.ndarray:
    """Combine per-member instruments over a finite family.

    p-values take the max, e-values the min, and 0/1 test paths the min
    (the composite rejects only when every member does).
    """
    if len(paths) == 0:
        raise ValueError("empty family")
    stack = np.stack([np.asarray(p, dtype=float) for p in paths])
    if kind == "p":
        return stack.max(axis=0)
    if kind in ("e", "test"):
        return stack.min(axis=0)
    raise ValueError(f"unknown instrument kind {kind!r}")


def convex_mixture_check(instrument: Callable[[np.ndarray, np.ndarray], np.ndarray],
                         members: Sequence[NullModel], weights: Sequence[float],
                         kind: str, *, horizon: int, n_paths: int, seed: int,
                         alpha: float = 0.05, t: int | None = None,
                         n_se: float = 3.0) -> Report:
    """Monte Carlo validity of ``instrument`` under a mixture of ``members``.

    ``instrument(us, xs)`` returns an ``(n, T)`` array: e-values (``kind='e'``,
    mean at time ``t`` must be <= 1), p-values (``'p'``, ``P(min p <= alpha)``
    <= alpha), 0/1 test flags (``'test'``) or, for ``'cs'``, whether the
    mixture's functional value is covered (coverage >= 1 - alpha).  Each member
    uses its own child stream, so a degenerate weight vector reproduces the
    single-member run exactly.
    """
    w = np.asarray(weights, dtype=float)
    if len(w) != len(members) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be nonnegative, sum to 1, one per member")
    counts = make_rng(seed, 0).multinomial(n_paths, w / w.sum())
    values = []
    for i, (m, c) in enumerate(zip(members, counts)):
        if c:
            us, xs = sample_paths(m, horizon, int(c), seed, i + 1)
            values.append(np.asarray(instrument(us, xs)))
    v = np.concatenate(values)
    n = v.shape[0]
    rep = Report("convex-mixture", seed, metadata={"weights": w.tolist(), "counts": counts.tolist()})
    if kind == "e":
        col = v[:, (t or horizon) - 1]
        est, se = float(col.mean()), float(col.std(ddof=1) / math.sqrt(n))
        rep.add(Check(f"mean e at t={t or horizon}", est, se, 1 + n_se * se, passed=est <= 1 + n_se * se))
    elif kind in ("p", "test"):
        hit = (v.min(axis=1) <= alpha) if kind == "p" else v.max(axis=1) >= 1
        est = float(hit.mean())
        se = binomial_se(alpha, n)
        rep.add(Check("type-I error", est, se, alpha + n_se * se, passed=est <= alpha + n_se * se))
    elif kind == "cs":
        cov = float(v.all(axis=1).mean())
        se = binomial_se(1 - alpha, n)
        rep.add(Check("coverage", cov, se, lower=1 - alpha - n_se * se,
                      passed=cov >= 1 - alpha - n_se * se))
    else:
        raise ValueError(f"unknown instrument kind {kind!r}")
    return rep
