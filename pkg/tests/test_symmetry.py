import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from avseq.model import NEVER, RademacherShifted, TwoPointSymmetric, make_rng
from avseq.symmetry import (DyadicPBatch, DyadicPValueState, ExpNSM, FactorEProcess, FactorError,
                            OddIncrementFactor, SignWalkBatch, dyadic_p_batch, dyadic_pvalues,
                            exp_nsm_factor, mirror, mirrored_batch, exp_nsm_batch,
                            mirrored_exp_factor, sign_walk_paths, sign_walk_start,
                            sign_walk_step, sign_walk_test, symmetric_nsm_step,
                            symmetry_center_cs, walk_threshold)


def test_exp_factor_values():
    assert exp_nsm_factor(1.0) == pytest.approx(math.exp(0.5))
    assert exp_nsm_factor(0.0) == 1.0
    assert exp_nsm_factor(-1.0) == pytest.approx(math.exp(-1.5))
    assert exp_nsm_factor(-1.0) == pytest.approx(0.22313, abs=1e-5)


def test_symmetric_nsm_step_pure():
    s = ExpNSM(0.0)
    s2 = symmetric_nsm_step(s, 1.0, 0.0)
    assert s.t == 0 and s2.value == pytest.approx(math.exp(0.5))


def test_mirror_values():
    f = mirror(exp_nsm_factor)
    assert f(1.0) == pytest.approx(math.exp(0.5))
    assert f(-1.0) == pytest.approx(2 - math.exp(0.5))
    assert f(-1.0) == pytest.approx(0.35128, abs=1e-5)
    assert f(1.0) + f(-1.0) == pytest.approx(2)
    assert np.allclose(mirrored_exp_factor(np.array([1.0, -1.0])), [f(1.0), f(-1.0)])


def test_mirror_identity_cases():
    one = mirror(lambda x: np.ones_like(np.asarray(x, dtype=float)))
    assert np.all(one(np.linspace(-3, 3, 7)) == 1)
    at = lambda x: 1 + np.arctan(np.clip(x, -1, 1))
    xs = np.linspace(-4, 4, 101)
    assert np.allclose(mirror(at)(xs), at(xs))


def test_mirror_refuses_non_supermartingale_factor():
    with pytest.raises(FactorError) as exc:
        mirror(lambda x: 1 + 0.1 * np.asarray(x) ** 2)
    assert exc.value.x is not None


@given(st.floats(-6, 6, allow_nan=False))
def test_mirror_dominates_and_balances(x):
    f = mirror(exp_nsm_factor)
    assert f(x) >= exp_nsm_factor(x) - 1e-15
    assert f(x) + f(-x) == pytest.approx(2, abs=1e-12)
    assert f(x) >= 0


def test_arctan_factor_values():
    f = OddIncrementFactor("arctan")
    assert f(1.0) == pytest.approx(1 + math.pi / 4)
    assert f(-1.0) == pytest.approx(1 - math.pi / 4)
    assert f(1.0) * f(-1.0) == pytest.approx(1 - math.pi**2 / 16)
    assert f(1.0) * f(-1.0) == pytest.approx(0.38315, abs=1e-5)
    e = FactorEProcess(f)
    assert e.run([1.0, -1.0])[-1] == pytest.approx(1 - math.pi**2 / 16)


def test_cos_wrapper_is_evaluated_but_refused():
    f = OddIncrementFactor("cos")
    assert f(0.0) == 2.0
    with pytest.raises(FactorError, match="not odd"):
        f.check()


def test_negative_factor_refused_and_clip_fixes_it():
    with pytest.raises(FactorError, match="negative"):
        OddIncrementFactor("arctan", "identity").check()
    OddIncrementFactor("arctan", "clip", clip=1.0).check()
    OddIncrementFactor("sin", "sinh").check(np.linspace(-1, 1, 101))
    OddIncrementFactor("mirrored-exponential", "cube").check()


def test_factor_center_shift():
    f = OddIncrementFactor("arctan", center=2.0)
    assert f(3.0) == pytest.approx(1 + math.pi / 4)


def test_walk_threshold():
    assert walk_threshold(0.05) == 20
    with pytest.raises(ValueError):
        walk_threshold(0.03)


def test_sign_walk_examples():
    assert sign_walk_test([1.0], 0.5) == 1
    assert sign_walk_test([-1.0] + [1.0] * 50, 0.5) == NEVER
    s = sign_walk_step(sign_walk_start(0.05), -1.0)
    assert s.absorbed_zero and not s.rejected
    assert sign_walk_test([0.0, 0.0, 1.0], 0.5) == 3  # zeros do not move the walk
    assert sign_walk_test([], 1.0) == 0


def test_sign_walk_paths_match_stream():
    xs = np.sign(make_rng(7).standard_normal((200, 60)))
    walks = sign_walk_paths(xs, 4)
    for row, w in zip(xs, walks):
        s = sign_walk_start(0.25)
        vals = []
        for x in row:
            if not (s.rejected or s.absorbed_zero):
                s = sign_walk_step(s, x)
            vals.append(s.value)
        assert list(w) == vals


def test_sign_walk_gamblers_ruin_exact():
    # exact law on all 2^T sign paths: P(hit b before 0 from 1) -> 1/b
    from itertools import product
    b, T = 4, 14
    xs = np.array(list(product([-1.0, 1.0], repeat=T)))
    final = sign_walk_paths(xs, b)[:, -1]
    hit = Fraction(int((final >= b).sum()), 2**T)
    open_ = Fraction(int(((final > 0) & (final < b)).sum()), 2**T)
    assert hit <= Fraction(1, b) <= hit + open_


def test_dyadic_examples():
    assert dyadic_pvalues([1, -1, 1]) == [Fraction(1, 2), Fraction(1, 2), Fraction(3, 8)]
    assert dyadic_pvalues([0, 1]) == [1, Fraction(1, 2)]
    assert dyadic_pvalues([-1] * 10) == [1] * 10


def test_dyadic_batch_matches_exact():
    xs = np.sign(make_rng(8).standard_normal((50, 80)))
    xs[:, ::7] = 0.0
    p, q, n = dyadic_p_batch(xs)
    for row, prow in zip(xs, p):
        exact = dyadic_pvalues(row)
        assert [Fraction(float(a)) for a in prow] == [Fraction(float(e)) for e in exact]
    batch = DyadicPBatch()
    st_ = batch.start(np.zeros(50))
    parts = np.hstack([batch.advance(st_, xs[:, :33]), batch.advance(st_, xs[:, 33:])])
    assert np.array_equal(parts, p)


def test_dyadic_saturates_past_64_bits():
    s = DyadicPValueState()
    from avseq.symmetry import dyadic_pvalue_step
    for _ in range(70):
        s = dyadic_pvalue_step(s, 1.0)
    assert s.p == Fraction(1, 2**64)
    p, _, _ = dyadic_p_batch(np.ones((1, 70)))
    assert p[0, -1] == 2.0**-64


def test_mirrored_dominates_pathwise():
    xs = RademacherShifted(0).sample(make_rng(9), 500, 40)
    a = mirrored_batch().advance({"log": np.zeros(500)}, xs)
    b = exp_nsm_batch().advance({"log": np.zeros(500)}, xs)
    assert np.all(a >= b)
    neg = np.logical_or.accumulate(xs < 0, axis=1)
    assert np.array_equal(a > b, neg)


def test_symmetry_cs_examples():
    rng = make_rng(10)
    n, T = 10**4, 100
    xs = RademacherShifted(0).sample(rng, n, T)
    cover = np.mean([symmetry_center_cs(row, 0.05, [0.0]).covers(0.0).all() for row in xs[:2000]])
    assert cover >= 0.95 - 3 * math.sqrt(0.05 * 0.95 / 2000)
    # power at center 2: sign walk and the clipped arctan family
    shifted = TwoPointSymmetric(2.0, 1.0).sample(rng, 200, 200)
    for engine in ("sign_walk", "odd_family"):
        excl = np.mean([symmetry_center_cs(r, 0.05, [0.0, 2.0], engine).exclusion_time(0.0) < NEVER
                        for r in shifted])
        assert excl == 1.0
    # the unit-tuned mirrored factor only gains where 0 < x - m < 2
    small = TwoPointSymmetric(0.5, 0.25).sample(rng, 200, 200)
    excl = np.mean([symmetry_center_cs(r, 0.05, [0.0, 0.5]).exclusion_time(0.0) < NEVER
                    for r in small])
    assert excl == 1.0
    for engine in ("sign_walk", "mirrored_nm", "odd_family"):
        cs = symmetry_center_cs([0.3, -0.2], 1.0, [0.0], engine=engine)
        assert not cs.covers(0.0)[0]


def test_signwalk_batch_done():
    b = SignWalkBatch(0.5)
    st_ = b.start(np.zeros(3))
    b.advance(st_, np.array([[1.0], [-1.0], [0.0]]))
    assert list(b.done(st_)) == [True, True, False]
