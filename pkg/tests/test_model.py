import math

import numpy as np
import pytest

from avseq.model import (NEVER, AdversarialMax, AdversarialMin, BernoulliFirstCoordinate,
                         FirstCrossing, FixedTime, GaussianIID, GaussianPredictableVar,
                         RademacherShifted, RandomizedTime, SamplePath, SymmetricHeavyTail,
                         TwoPointSymmetric, VarianceSchedule, evaluate_stopping, first_true,
                         make_rng, sample_path, sample_paths, value_at)


def test_two_point_support():
    for seed in range(5):
        p = sample_path(TwoPointSymmetric(0, 1), 3, seed)
        assert set(p.xs) <= {-1.0, 1.0}


def test_two_point_shifted_support(rng):
    xs = TwoPointSymmetric(2.0, 0.5).sample(rng, 50, 20)
    assert set(np.unique(xs)) == {1.5, 2.5}


def test_gaussian_sample_mean_clt():
    T = 10**5
    p = sample_path(GaussianIID(0, 1), T, 3)
    assert abs(p.xs.mean()) <= 4 / math.sqrt(T)


def test_bernoulli_first_coordinate():
    us, xs = sample_paths(BernoulliFirstCoordinate(0.5), 3, 200, 1)
    assert set(np.unique(xs[:, 0])) == {0.0, 1.0}
    assert np.all(xs[:, 1:] == 0)


def test_same_seed_same_path():
    a = sample_path(SymmetricHeavyTail(0, "cauchy"), 50, 9)
    b = sample_path(SymmetricHeavyTail(0, "cauchy"), 50, 9)
    assert a.u == b.u and np.array_equal(a.xs, b.xs)


def test_child_streams_independent_of_siblings():
    a = make_rng(4, 2).random(5)
    make_rng(4, 1).random(100)
    assert np.array_equal(a, make_rng(4, 2).random(5))
    assert not np.array_equal(a, make_rng(4, 3).random(5))


def test_predictable_variance_uses_past_only(rng):
    sched = VarianceSchedule("abs", 0.5, 0.5)
    model = GaussianPredictableVar(0.0, sched)
    xs = model.sample(rng, 4, 10)
    var = model.variances(xs)
    assert np.allclose(var[:, 0], sched(np.zeros(4)))
    assert np.allclose(var[:, 1:], sched(xs[:, :-1]))


def test_model_validation():
    with pytest.raises(ValueError):
        TwoPointSymmetric(0, 0)
    with pytest.raises(ValueError):
        RademacherShifted(0, 2.0)
    with pytest.raises(ValueError):
        GaussianIID(0, -1)
    with pytest.raises(ValueError):
        SamplePath(2.0, [1.0])
    with pytest.raises(ValueError):
        make_rng(-1)


def test_fixed_time():
    p = SamplePath(0.5, np.arange(10.0))
    assert evaluate_stopping(FixedTime(5), p, np.zeros(10)) == 5


def test_first_crossing():
    p = SamplePath(0.5, np.zeros(4))
    assert evaluate_stopping(FirstCrossing(2), p, [1, 1.5, 2.2, 3]) == 3
    assert evaluate_stopping(FirstCrossing(10), p, [1, 5, 2, 3]) == NEVER
    assert evaluate_stopping(FirstCrossing(2), p, [1, 2, 0, 0]) == 2  # inclusive


def test_first_crossing_batch_matches_scalar(rng):
    m = rng.random((50, 20))
    rule = FirstCrossing(0.1, "below")
    batch = rule.batch(np.zeros(50), m)
    scalar = [rule.evaluate(0.0, row) for row in m]
    assert np.array_equal(batch, scalar)


def test_randomized_time_uses_u_only(rng):
    rule = RandomizedTime((0.25, 0.25))
    m = rng.random((4, 3))
    us = np.array([0.1, 0.3, 0.6, 0.9])
    assert list(rule.batch(us, m)) == [1, 2, NEVER, NEVER]
    assert [rule.evaluate(u, row) for u, row in zip(us, m)] == [1, 2, NEVER, NEVER]


def test_adversarial_is_not_a_stopping_time():
    p = SamplePath(0.5, np.zeros(3))
    assert evaluate_stopping(AdversarialMax(), p, [1, 5, 2]) == 2
    assert evaluate_stopping(AdversarialMin(), p, [1, 5, 0.5]) == 3
    with pytest.raises(ValueError):
        evaluate_stopping(AdversarialMax(), p, [1, 5, 2], require_stopping_time=True)


def test_first_true_and_value_at():
    hits = np.array([[False, True, True], [False, False, False]])
    t = first_true(hits)
    assert list(t) == [2, NEVER]
    vals = np.array([[1, 2, 3], [4, 5, 6]])
    assert list(value_at(vals, t)) == [2, 6]
