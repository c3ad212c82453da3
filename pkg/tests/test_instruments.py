import math

import numpy as np
import pytest

from avseq.instruments import (ConfidenceSequence, EProcess, PProcess, SequentialTest,
                               aggregate_composite, convex_mixture_check, cs_to_test, e_to_p,
                               e_to_test, invert_tests_to_cs, log_e_to_p, p_to_e_calibrated,
                               p_to_test, test_family_to_p)
from avseq.model import NEVER, GaussianIID, RademacherShifted, SymmetricHeavyTail
from avseq.calibrate import table_calibrator


def test_e_to_p_examples():
    assert np.allclose(e_to_p([2, 0.5, 4]), [0.5, 0.5, 0.25])
    assert np.allclose(e_to_p([1, 1, 1]), [1, 1, 1])
    assert np.allclose(e_to_p([0.5, 0.25]), [1, 1])
    assert np.allclose(e_to_p([0, 2]), [1, 0.5])
    assert np.allclose(log_e_to_p(np.log([2, 0.5, 4])), [0.5, 0.5, 0.25])


def test_e_to_test():
    assert e_to_test([10, 30], 0.05) == 2
    assert e_to_test([20, 1], 0.05) == 1
    assert e_to_test([5, 1, 4], 0.05) == NEVER


def test_p_to_test():
    assert p_to_test([0.2, 0.04], 0.05) == 2
    assert p_to_test([0.05, 1], 0.05) == 1
    assert p_to_test([0.5, 0.7], 0.05) == NEVER


def test_reductions_agree():
    e = np.array([1.5, 3, 19.99, 20, 7])
    assert p_to_test(e_to_p(e), 0.05) == e_to_test(e, 0.05) == 4


def test_test_family_to_p():
    p = test_family_to_p([0.01, 0.05, 0.1], [NEVER, 7, 3], 10)
    assert p[2] == 0.1 and p[6] == 0.05 and p[9] == 0.05 and p[0] == 1
    assert np.all(test_family_to_p([0.01, 0.05], [NEVER, NEVER], 4) == 1)
    assert test_family_to_p([0.01, 0.05, 0.1], [1, 1, 1], 3)[0] == 0.01
    with pytest.raises(ValueError):
        test_family_to_p([0.01, 0.05], [1, 5], 6)


def test_calibrated_e():
    assert np.allclose(p_to_e_calibrated([0.25, 1]), [1, 0.5])
    assert np.allclose(p_to_e_calibrated([0.5], table_calibrator([0, 0.5, 1], [1.5, 0.5])), [1.5])


def test_invert_tests_to_cs():
    cs = invert_tests_to_cs([-1, 0, 1], [2, NEVER, 2], 0.05, 3)
    assert list(cs.at(1)) == [-1, 0, 1] and list(cs.at(2)) == [0]
    assert cs_to_test(cs, [0]) == NEVER
    assert cs.exclusion_time(-1) == 2
    full = invert_tests_to_cs([-1, 0, 1], [NEVER] * 3, 0.05, 3)
    assert all(full.at(t).size == 3 for t in (1, 2, 3))
    assert cs_to_test(full, [-1, 0, 1]) == NEVER
    empty = invert_tests_to_cs([-1, 0, 1], [1, 1, 1], 0.05, 2)
    assert empty.at(1).size == 0
    assert cs_to_test(empty, [-1]) == 1


def test_running_intersection():
    cs = ConfidenceSequence([0, 1], [[True, False], [True, True]], 0.1)
    assert list(cs.at(2)) == [0]
    raw = ConfidenceSequence([0, 1], [[True, False], [True, True]], 0.1, running_intersection=False)
    assert list(raw.at(2)) == [0, 1]


def test_aggregate_composite():
    assert np.allclose(aggregate_composite([[0.3, 0.2], [0.4, 0.1]], "p"), [0.4, 0.2])
    assert np.allclose(aggregate_composite([[2], [3]], "e"), [2])
    assert np.allclose(aggregate_composite([[0.3, 0.5]], "p"), [0.3, 0.5])


def test_sequential_test_boundary():
    t = SequentialTest(0.05, source="FromE")
    assert not t.update(19.99)
    assert t.update(20)
    assert t.rejection_time == 2
    p = SequentialTest(0.05, source="FromP")
    assert p.update(0.05)


def test_streaming_eprocess_and_pprocess():
    class Double(EProcess):
        def log_factor(self, x):
            return math.log(2.0)

    e = Double()
    assert np.allclose(e.run([0, 0, 0]), [2, 4, 8])
    p = PProcess()
    assert [p.update(v) for v in (0.5, 0.7, 0.2)] == [0.5, 0.5, 0.2]


def _mirrored(us, xs):
    from avseq.symmetry import _mirrored_exp_log
    return np.exp(np.cumsum(_mirrored_exp_log(xs), axis=1))


def test_convex_mixture_e_valid_and_degenerate():
    members = [RademacherShifted(0), SymmetricHeavyTail(0, "student-t", 3.0)]
    rep = convex_mixture_check(_mirrored, members, [0.5, 0.5], "e", horizon=20, n_paths=20000,
                               seed=3)
    assert rep.passed
    one = convex_mixture_check(_mirrored, members, [1, 0], "e", horizon=20, n_paths=5000, seed=3)
    from avseq.model import sample_paths
    us, xs = sample_paths(members[0], 20, 5000, 3, 1)
    assert one.checks[0].estimate == float(_mirrored(us, xs)[:, -1].mean())


def test_convex_mixture_cs_fails():
    from avseq.gaussian import mixture_log_value

    def covers_zero(us, xs):
        inside = mixture_log_value(np.cumsum(xs, axis=1), np.arange(1, xs.shape[1] + 1)) < math.log(20)
        return np.logical_and.accumulate(inside, axis=1)

    rep = convex_mixture_check(covers_zero, [GaussianIID(1), GaussianIID(-1)], [0.5, 0.5], "cs",
                               horizon=50, n_paths=5000, seed=1)
    assert not rep.passed
