import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from avseq import tree as tr
from avseq.model import make_rng
from avseq.symmetry import mirrored_exp_factor

GOLD_E = [F(1), F(8, 5), F(1, 5)]


@pytest.fixture
def t1():
    return tr.uniform_tree(1)


def test_counts_of_stopping_times():
    assert [tr._count_cuts(tr.uniform_tree(d)) for d in range(6)] == [1, 2, 5, 26, 677, 458330]
    assert sum(1 for _ in tr._enumerate_cuts(tr.uniform_tree(3), 0)) == 26


def test_cond_expectation_examples(t1):
    assert tr.cond_expectation(t1, [F(8, 5), F(1, 5)], 0) == {0: F(9, 10)}
    t2 = tr.uniform_tree(2)
    assert tr.cond_expectation(t2, [3] * 4, 1) == {1: 3, 2: 3}
    e1 = tr.cond_expectation(t2, [4, 0, 0, 0], 1)
    assert list(e1.values()) == [2, 0]
    assert tr.cond_expectation(t2, [4, 0, 0, 0], 0) == {0: 1}


def test_cond_supremum_examples(t1):
    assert tr.cond_supremum(t1, [F(8, 5), F(1, 5)], 0) == {0: F(8, 5)}
    null = tr.FiniteTree.from_nodes([None, 0, 0], [1, 0, 1])
    assert tr.cond_supremum(null, [100, 1], 0) == {0: 1}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tower_properties(seed):
    rng = make_rng(seed)
    t = tr.random_tree(rng, 3)
    y = [v if not t.children[i] else None for i, v in enumerate(tr.random_payload(t, rng))]
    for s in (0, 1):
        assert tr.cond_supremum(t, tr.cond_supremum(t, y, 2), s, d=2) == tr.cond_supremum(t, y, s)
        assert tr.cond_expectation(t, tr.cond_expectation(t, y, 2), s, d=2) == \
            tr.cond_expectation(t, y, s)


def test_doob_levy_examples():
    t = tr.uniform_tree(2)
    region = [1, 0, 1, 1]
    alpha = F(1, 20)
    M = tr.doob_levy_martingale(t, [F(r) / alpha for r in region])
    assert M[0] == F(3, 4) / alpha
    assert tr.doob_levy_martingale(t, [7] * 4) == [7] * t.n_nodes
    rt = tr.random_tree(make_rng(1), 3)
    leaf = rt.leaves[3]
    ind = [1 if v == leaf else 0 for v in rt.leaves]
    assert tr.doob_levy_martingale(rt, ind)[0] == rt.abs_prob()[leaf]


def test_snell_golden(t1):
    s = tr.snell_doob(t1, GOLD_E)
    assert s.L == [1, F(8, 5), F(1, 5)]
    assert s.M == [1, F(17, 10), F(3, 10)]
    assert s.A == [0, F(1, 10), F(1, 10)]
    assert F(1, 2) * (s.M[1] + s.M[2]) == 1


def test_snell_of_martingale_and_constant():
    t = tr.uniform_tree(2)
    nm = tr.doob_levy_martingale(t, [2, 0, F(1, 2), F(3, 2)])
    s = tr.snell_doob(t, nm)
    assert s.M == nm and all(a == 0 for a in s.A)
    half = tr.snell_doob(t, [F(1, 2)] * t.n_nodes)
    assert half.M == [F(1, 2)] * t.n_nodes


def test_brute_force_examples(t1):
    t = tr.uniform_tree(3)
    nm = tr.doob_levy_martingale(t, [2, 0, 1, 1, 0, 0, 2, 2])
    assert tr.brute_force_safety(t, nm, mode="enumerate").value == 1
    r = tr.brute_force_safety(t1, GOLD_E, mode="enumerate")
    assert r.value == 1 and r.witness == (0,)
    bad = tr.brute_force_safety(t1, [0, 3, 0])
    assert bad.value == F(3, 2) and not bad.safe


def test_enumeration_cap():
    with pytest.raises(ValueError):
        tr.brute_force_safety(tr.uniform_tree(5), [0] * 63, mode="enumerate")


def test_admissibilize_e_examples(t1):
    assert tr.admissibilize_e(t1, GOLD_E) == [1, F(17, 10), F(3, 10)]
    t = tr.uniform_tree(2)
    nm = tr.doob_levy_martingale(t, [2, 0, F(1, 2), F(3, 2)])
    assert tr.admissibilize_e(t, nm) == nm
    assert tr.admissibilize_e(t, [F(1, 2)] * 7) == [1] * 7
    with pytest.raises(tr.UnsafePayloadError) as exc:
        tr.admissibilize_e(t1, [0, 3, 0])
    assert exc.value.value == F(3, 2)


def test_admissibilize_p_examples():
    t = tr.uniform_tree(2)
    assert tr.admissibilize_p(t, [1] * 7) == [1] * 7
    # uniform dyadic leaf p-values already have F(x) = x: a fixed point
    p = tr.closed_max_martingale(t, [F(1, 4), F(1, 2), F(3, 4), F(1)])
    assert tr.admissibilize_p(t, p) == p
    at, ap = tr.atomic_pvalue_tree(3)
    assert tr.admissibilize_p(at, ap) == ap
    assert tr.is_max_martingale(at, ap)
    with pytest.raises(tr.InvalidPValueError):
        tr.admissibilize_p(t, [F(1, 10)] * 7)


def test_atomic_law():
    at, ap = tr.atomic_pvalue_tree(3)
    law = tr.leaf_law(at, [ap[v] if not at.children[v] else None for v in range(at.n_nodes)])
    atom = min(law)
    assert atom == F(1, 2) + F(1, 16) and law[atom] == atom


def test_implied_alternative_examples(t1):
    P = tr.implied_alternative(t1, [1, F(3, 2), F(1, 2)])
    assert P.prob[1] == F(3, 4) and P.prob[2] == F(1, 4)
    assert tr.implied_alternative(t1, [1, 1, 1]).prob == t1.prob
    st_ = tr.sign_tree(1)
    f = [1.0, mirrored_exp_factor(1.0), mirrored_exp_factor(-1.0)]
    P = tr.implied_alternative(st_, f)
    assert float(P.prob[1]) == pytest.approx(math.exp(0.5) / 2, abs=1e-12)
    assert float(P.prob[1]) == pytest.approx(0.82436, abs=1e-5)
    with pytest.raises(ValueError):
        tr.implied_alternative(t1, [1, 2, 1])


def test_conditional_ville_examples():
    t = tr.uniform_tree(3)
    nm = tr.doob_levy_martingale(t, [4, 0, 0, 0, 2, 2, 0, 0])
    assert tr.conditional_ville_check(t, nm, F(1, 2)).passed
    bad = list(nm)
    bad[t.leaves[0]] = 40
    rep = tr.conditional_ville_check(t, bad, F(1, 2))
    assert not rep.passed
    assert all(c.witness for c in rep.failures())
    assert tr.conditional_ville_check(t, [1] * t.n_nodes, F(1, 2)).passed


def test_error_event_equivalence():
    t = tr.uniform_tree(3)
    ev = [0] * t.n_nodes
    ev[1] = 1
    ev[t.leaves[-1]] = 1
    u, r, s = tr.error_event_equivalence(t, ev)
    assert u == r == s == F(1, 2) + F(1, 8)


def test_overshoot_on_sign_walk_tree():
    # integer walk from 1 with absorbing 0 and 2 has no overshoot
    t = tr.sign_tree(4)
    w = [1] * t.n_nodes
    for v in range(1, t.n_nodes):
        u = t.parent[v]
        w[v] = w[u] if w[u] in (0, 2) else w[u] + t.label[v]
    assert tr.overshoot_check(t, [F(x, 1) for x in w], F(1, 2)).passed


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_random_tree_invariants(seed, depth):
    rng = make_rng(seed)
    t = tr.random_tree(rng, depth)
    e = tr.random_payload(t, rng)
    s = tr.snell_doob(t, e)
    assert tr.brute_force_safety(t, e, mode="enumerate").value == s.L[0]
    assert all(m == l + a for m, l, a in zip(s.M, s.L, s.A))
    val = s.L[0]
    safe = [x / val for x in e] if val > 1 else e
    M = tr.admissibilize_e(t, safe)
    assert M[0] == 1 and tr.is_martingale(t, M) and all(m >= x for m, x in zip(M, safe))
    assert tr.conditional_ville_check(t, M, F(1, 3)).passed


def test_read_write_roundtrip():
    text = "# golden\nid parent prob e\n10 - . 1\n11 10 1/2 8/5\n12 10 1/2 1/5\n"
    t, pl = tr.read_tree(text)
    assert pl["e"] == GOLD_E
    t2, pl2 = tr.read_tree(tr.write_tree(t, pl))
    assert t2 == t and pl2 == pl


def test_read_with_labels_and_missing():
    t, pl = tr.read_tree("id parent prob x y\n0 - . . .\n1 0 1/3 1 2\n2 0 2/3 -1 0.5\n")
    assert t.label[1:] == (1, -1) and pl["y"] == [None, 2, F(1, 2)]


@pytest.mark.parametrize("text,line", [
    ("id parent prob e\n0 - . 1\n1 0 1/2 8/5\n2 0 oops 1/5\n", 4),
    ("id parent prob e\n0 - . 1\n1 0 1/2\n", 3),
    ("id parent prob e\n0 - . 1\n1 7 1/2 1\n", 3),
    ("id parent\n", 1),
    ("id parent prob e\n0 - . 1\n1 0 1/2 1\n2 0 1/3 1\n", 2),
])
def test_format_errors_have_line_numbers(text, line):
    with pytest.raises(tr.TreeFormatError) as exc:
        tr.read_tree(text)
    assert exc.value.line == line
