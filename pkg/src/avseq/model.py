"""Observation models, sample paths and stopping rules.

Every random quantity in the package is drawn from a Philox counter-based
generator.  Streams are split with :class:`numpy.random.SeedSequence` spawn
keys: ``make_rng(seed)`` is the root stream and ``make_rng(seed, i)`` is the
``i``-th child.  Children are independent of one another and do not depend on
how many siblings exist, which is what keeps parallel Monte Carlo runs
reproducible for any thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NEVER = math.inf
"""Stop/rejection time meaning "not within the horizon"."""


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for ``seed``, optionally on the child stream ``key``."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SamplePath:
    """One realisation: the initial randomiser ``u`` and observations ``xs``.

    The filtration is implicit: information at time ``t`` is the prefix
    ``(u, xs[:t])``.
    """

    u: float
    xs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim != 1 or xs.size == 0:
            raise ValueError("xs must be a non-empty 1-d sequence")
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"u must lie in [0, 1], got {self.u}")
        if not np.all(np.isfinite(xs)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "xs", xs)

    @property
    def horizon(self) -> int:
        return self.xs.size


# ---------------------------------------------------------------------------
# null / alternative models


class NullModel:
    """Law of ``(X_t)`` given the past.  Subclasses implement :meth:`sample`."""

    center: float = 0.0
    symmetric: bool = False

    def sample(self, rng: np.random.Generator, n_paths: int, horizon: int,
               prev: np.ndarray | None = None) -> np.ndarray:
        """Draw an ``(n_paths, horizon)`` block.

        ``prev`` holds the last observation of each path when a block continues
        an earlier one; only models with predictable structure use it.
        """
        raise NotImplementedError

    def variances(self, xs: np.ndarray, prev: np.ndarray | None = None) -> np.ndarray:
        """Predictable conditional variances matching ``xs`` (Gaussian models only)."""
        raise TypeError(f"{type(self).__name__} has no Gaussian variance process")


@dataclass(frozen=True)
class GaussianIID(NullModel):
    mean: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def center(self):
        return self.mean

    symmetric = True

    def sample(self, rng, n_paths, horizon, prev=None):
        out = rng.standard_normal((n_paths, horizon))
        if self.sigma != 1.0:
            out *= self.sigma
        if self.mean != 0.0:
            out += self.mean
        return out

    def variances(self, xs, prev=None):
        return np.full(np.shape(xs), self.sigma**2)


@dataclass(frozen=True)
class VarianceSchedule:
    """Predictable variance rule ``sigma_t^2 = g(x_{t-1})`` with ``x_0 := 0``.

    ``constant``: ``c0``; ``abs``: ``c0 + c1 |x|``; ``square``: ``c0 + c1 x^2``;
    ``affine``: ``max(c0 + c1 x, floor)``.
    """

    rule: str = "constant"
    c0: float = 1.0
    c1: float = 0.0
    floor: float = 1e-3

    def __post_init__(self):
        if self.rule not in ("constant", "abs", "square", "affine"):
            raise ValueError(f"unknown variance rule {self.rule!r}")
        if self.rule == "affine":
            if not self.floor > 0:
                raise ValueError("affine schedules need a positive floor")
        elif not (self.c0 > 0 and self.c1 >= 0):
            raise ValueError("variance schedule must be positive: need c0 > 0, c1 >= 0")

    def __call__(self, x_prev):
        x_prev = np.asarray(x_prev, dtype=float)
        if self.rule == "constant":
            return np.full(x_prev.shape, self.c0)
        if self.rule == "abs":
            return self.c0 + self.c1 * np.abs(x_prev)
        if self.rule == "square":
            return self.c0 + self.c1 * x_prev**2
        return np.maximum(self.c0 + self.c1 * x_prev, self.floor)


@dataclass(frozen=True)
class GaussianPredictableVar(NullModel):
    mean: float = 0.0
    schedule: VarianceSchedule = field(default_factory=VarianceSchedule)

    symmetric = True

    @property
    def center(self):
        return self.mean

    def sample(self, rng, n_paths, horizon, prev=None):
        z = rng.standard_normal((n_paths, horizon))
        out = np.empty_like(z)
        last = np.zeros(n_paths) if prev is None else np.asarray(prev, dtype=float)
        for t in range(horizon):
            sd = np.sqrt(self.schedule(last - self.mean))
            out[:, t] = self.mean + sd * z[:, t]
            last = out[:, t]
        return out

    def variances(self, xs, prev=None):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        first = np.zeros(xs.shape[0]) if prev is None else np.asarray(prev, dtype=float)
        lagged = np.concatenate([first[:, None], xs[:, :-1]], axis=1)
        return self.schedule(lagged - self.mean)


@dataclass(frozen=True)
class TwoPointSymmetric(NullModel):
    """``X_t = center +/- offset`` with probability 1/2 each."""

    center: float = 0.0
    offset: float = 1.0

    symmetric = True

    def __post_init__(self):
        if not self.offset > 0:
            raise ValueError(f"offset must be positive, got {self.offset}")

    def sample(self, rng, n_paths, horizon, prev=None):
        signs = rng.integers(0, 2, size=(n_paths, horizon), dtype=np.int8)
        out = signs.astype(float)
        out *= 2 * self.offset
        out += self.center - self.offset
        return out


@dataclass(frozen=True)
class RademacherShifted(TwoPointSymmetric):
    """Two-point model with unit offset."""

    center: float = 0.0
    offset: float = 1.0

    def __post_init__(self):
        if self.offset != 1.0:
            raise ValueError("RademacherShifted has unit offset; use TwoPointSymmetric")


@dataclass(frozen=True)
class SymmetricHeavyTail(NullModel):
    center: float = 0.0
    family: str = "cauchy"
    df: float = 3.0

    symmetric = True

    def __post_init__(self):
        if self.family not in ("cauchy", "student-t"):
            raise ValueError(f"unknown heavy-tailed family {self.family!r}")
        if self.family == "student-t" and not self.df > 0:
            raise ValueError("student-t needs df > 0")

    def sample(self, rng, n_paths, horizon, prev=None):
        shape = (n_paths, horizon)
        draws = (rng.standard_cauchy(shape) if self.family == "cauchy"
                 else rng.standard_t(self.df, shape))
        return draws + self.center


@dataclass(frozen=True)
class BernoulliFirstCoordinate(NullModel):
    """``X_1 ~ Bernoulli(q)`` and ``X_t = 0`` afterwards."""

    q: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q}")

    def sample(self, rng, n_paths, horizon, prev=None):
        out = np.zeros((n_paths, horizon))
        first = rng.random(n_paths) < self.q
        if prev is None:
            out[:, 0] = first
        return out


def sample_path(model: NullModel, horizon: int, seed: int) -> SamplePath:
    """Deterministic single path for ``(model, horizon, seed)``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = make_rng(seed)
    u = float(rng.random())
    return SamplePath(u, model.sample(rng, 1, horizon)[0])


def sample_paths(model: NullModel, horizon: int, n_paths: int, seed: int,
                 *key: int) -> tuple[np.ndarray, np.ndarray]:
    """Batch version of :func:`sample_path`: returns ``(us, xs)``."""
    if horizon < 1 or n_paths < 1:
        raise ValueError("horizon and n_paths must be >= 1")
    rng = make_rng(seed, *key)
    us = rng.random(n_paths)
    return us, model.sample(rng, n_paths, horizon)


# ---------------------------------------------------------------------------
# stopping rules


class StoppingRule:
    """Decides, from the prefix only, whether to stop at time ``t``.

    ``stops_at`` is given ``u`` and ``monitored[:t]`` and nothing later, so
    every rule built on it is a stopping time by construction.  Rules that look
    at the whole path override :meth:`evaluate` and set ``is_stopping_time``
    to ``False``.
    """

    is_stopping_time = True

    def stops_at(self, t: int, u: float, prefix: np.ndarray) -> bool:
        raise NotImplementedError

    def evaluate(self, u: float, monitored: np.ndarray) -> float:
        monitored = np.asarray(monitored, dtype=float)
        for t in range(1, monitored.size + 1):
            if self.stops_at(t, u, monitored[:t]):
                return t
        return NEVER

    def batch(self, us: np.ndarray, monitored: np.ndarray) -> np.ndarray:
        """Stop times for many paths at once (float array, ``inf`` = never)."""
        return np.array([self.evaluate(u, m) for u, m in zip(us, monitored)], dtype=float)


@dataclass(frozen=True)
class FixedTime(StoppingRule):
    t: int

    def stops_at(self, t, u, prefix):
        return t == self.t

    def batch(self, us, monitored):
        T = np.shape(monitored)[1]
        return np.full(len(us), float(self.t) if self.t <= T else NEVER)


@dataclass(frozen=True)
class FirstCrossing(StoppingRule):
    """Stop the first time the monitored process is ``>= threshold``
    (``direction='above'``) or ``<= threshold`` (``'below'``); inclusive."""

    threshold: float
    direction: str = "above"

    def __post_init__(self):
        if self.direction not in ("above", "below"):
            raise ValueError("direction must be 'above' or 'below'")

    def _hit(self, values):
        return values >= self.threshold if self.direction == "above" else values <= self.threshold

    def stops_at(self, t, u, prefix):
        return bool(self._hit(prefix[-1]))

    def batch(self, us, monitored):
        return first_true(self._hit(np.asarray(monitored)))


@dataclass(frozen=True)
class RandomizedTime(StoppingRule):
    """Time drawn from ``probs`` over ``{1..len(probs)}`` plus ``NEVER`` for the
    leftover mass, using the initial randomiser ``u`` (so it is F_0-measurable)."""

    probs: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or p.sum() > 1 + 1e-12:
            raise ValueError("probs must be nonnegative with total mass <= 1")

    def _time(self, u):
        idx = int(np.searchsorted(np.cumsum(self.probs), u, side="right"))
        return idx + 1 if idx < len(self.probs) else NEVER

    def stops_at(self, t, u, prefix):
        return self._time(u) == t

    def batch(self, us, monitored):
        T = np.shape(monitored)[1]
        idx = np.searchsorted(np.cumsum(self.probs), us, side="right")
        out = (idx + 1).astype(float)
        out[(idx >= len(self.probs)) | (idx + 1 > T)] = NEVER
        return out


@dataclass(frozen=True)
class AdversarialMax(StoppingRule):
    """Post-hoc time of the largest (``mode='max'``) or smallest (``'min'``)
    monitored value.  Not a stopping time: it needs the full path."""

    mode: str = "max"
    is_stopping_time = False

    def __post_init__(self):
        if self.mode not in ("max", "min"):
            raise ValueError("mode must be 'max' or 'min'")

    def stops_at(self, t, u, prefix):
        raise TypeError("AdversarialMax is not a stopping time; it has no prefix rule")

    def evaluate(self, u, monitored):
        monitored = np.asarray(monitored, dtype=float)
        i = np.argmax(monitored) if self.mode == "max" else np.argmin(monitored)
        return int(i) + 1

    def batch(self, us, monitored):
        monitored = np.asarray(monitored)
        idx = monitored.argmax(axis=1) if self.mode == "max" else monitored.argmin(axis=1)
        return idx.astype(float) + 1


def AdversarialMin() -> AdversarialMax:
    return AdversarialMax("min")


def evaluate_stopping(rule: StoppingRule, path: SamplePath,
                      monitored: Sequence[float], require_stopping_time: bool = False) -> float:
    """Stop time of ``rule`` on ``path`` (1-based), or :data:`NEVER`."""
    monitored = np.asarray(monitored, dtype=float)
    if monitored.size != path.horizon:
        raise ValueError("monitored process must have one value per time step")
    if require_stopping_time and not rule.is_stopping_time:
        raise ValueError(f"{rule!r} is not a stopping time")
    return rule.evaluate(path.u, monitored)


def first_true(hits: np.ndarray) -> np.ndarray:
    """Row-wise 1-based index of the first ``True``; ``inf`` where none."""
    hits = np.asarray(hits, dtype=bool)
    idx = hits.argmax(axis=1).astype(float) + 1
    idx[~hits.any(axis=1)] = NEVER
    return idx


def value_at(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``values[i, times[i]-1]`` with ``NEVER`` read as the last column."""
    values = np.asarray(values)
    T = values.shape[1]
    idx = np.where(np.isfinite(times), times, T).astype(np.int64) - 1
    return values[np.arange(values.shape[0]), idx]
