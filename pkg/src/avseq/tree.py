"""Exact computations on finite probability trees.

A :class:`FiniteTree` is a rooted tree whose leaves all sit at depth ``D``.
Node ``v`` at depth ``t`` stands for an atom of ``F_t``; each non-root node
carries its conditional probability given its parent (a
:class:`~fractions.Fraction`) and optionally an observation label.  Processes
("payloads") are per-node lists indexed by node id.  With rational payloads
every operation here is exact, so martingale identities are checked by
equality.  Float payloads also work; comparisons then use ``tol``.

Text format (one node per line, ``#`` starts a comment)::

    id parent prob [x] [name ...]
    0  -      1    .   1
    1  0      1/2  1   8/5

Values are integers, ``num/den`` or decimals (read exactly); ``.`` marks a
missing label.  Written files use the same layout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .report import Check, Report


class TreeFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnsafePayloadError(ValueError):
    """Raised when a payload's optimal-stopping value exceeds 1."""

    def __init__(self, value):
        super().__init__(f"payload is not safe: sup over stopping times of E[e_tau] = {value}")
        self.value = value


class InvalidPValueError(ValueError):
    pass


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _exact(*vals) -> bool:
    return all(isinstance(v, Rational) for v in vals)


def _eq(a, b, tol) -> bool:
    if _exact(a, b):
        return a == b
    return abs(a - b) <= tol


def _le(a, b, tol) -> bool:
    if _exact(a, b):
        return a <= b
    return a <= b + tol


@dataclass(frozen=True)
class FiniteTree:
    """Immutable probability tree.  Build with :meth:`from_nodes` or the
    constructors below; node 0 is the root."""

    parent: tuple
    prob: tuple
    label: tuple
    depth_of: tuple
    children: tuple

    @classmethod
    def from_nodes(cls, parents: Sequence, probs: Sequence, labels: Sequence | None = None) -> "FiniteTree":
        """Nodes in any order with ``parents[0] is None``; ids are renumbered so
        parents precede children.  Returns the tree; use :meth:`relabel_map`
        semantics via :func:`read_tree` when ids matter."""
        tree, _ = cls._build(list(parents), list(probs), labels)
        return tree

    @classmethod
    def _build(cls, parents, probs, labels=None):
        n = len(parents)
        labels = list(labels) if labels is not None else [None] * n
        roots = [i for i, p in enumerate(parents) if p is None]
        if len(roots) != 1:
            raise ValueError("a tree needs exactly one root")
        kids = [[] for _ in range(n)]
        for i, p in enumerate(parents):
            if p is not None:
                if not 0 <= p < n:
                    raise ValueError(f"node {i} has unknown parent {p}")
                kids[p].append(i)
        order, depth = [], {}
        queue = [roots[0]]
        depth[roots[0]] = 0
        while queue:
            v = queue.pop(0)
            order.append(v)
            for c in kids[v]:
                depth[c] = depth[v] + 1
                queue.append(c)
        if len(order) != n:
            raise ValueError("parent links contain a cycle or disconnected nodes")
        new_id = {old: new for new, old in enumerate(order)}
        parent = tuple(None if parents[o] is None else new_id[parents[o]] for o in order)
        prob = tuple(Fraction(1) if parents[o] is None else _frac(probs[o]) for o in order)
        label = tuple(labels[o] for o in order)
        depth_of = tuple(depth[o] for o in order)
        children = tuple(tuple(new_id[c] for c in kids[o]) for o in order)
        tree = cls(parent, prob, label, depth_of, children)
        tree._validate()
        return tree, new_id

    def _validate(self):
        D = self.depth
        for v, kids in enumerate(self.children):
            if kids:
                if any(self.prob[c] < 0 for c in kids):
                    raise ValueError(f"negative probability below node {v}")
                if sum(self.prob[c] for c in kids) != 1:
                    raise ValueError(f"children of node {v} have probabilities summing to "
                                     f"{sum(self.prob[c] for c in kids)}, not 1")
            elif self.depth_of[v] != D:
                raise ValueError(f"leaf {v} at depth {self.depth_of[v]}; all leaves must be at depth {D}")

    # structure ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def depth(self) -> int:
        return max(self.depth_of)

    def level(self, t: int) -> list[int]:
        return [v for v in range(self.n_nodes) if self.depth_of[v] == t]

    @property
    def leaves(self) -> list[int]:
        return self.level(self.depth)

    def path(self, v: int) -> list[int]:
        """Node ids from the root down to ``v``."""
        out = [v]
        while self.parent[out[-1]] is not None:
            out.append(self.parent[out[-1]])
        return out[::-1]

    def abs_prob(self) -> list[Fraction]:
        """Unconditional probability of every node."""
        out = [Fraction(1)] * self.n_nodes
        for v in range(1, self.n_nodes):
            out[v] = out[self.parent[v]] * self.prob[v]
        return out

    def bottom_up(self) -> range:
        return range(self.n_nodes - 1, -1, -1)

    def descendants_at(self, v: int, t: int) -> list[int]:
        front = [v]
        while front and self.depth_of[front[0]] < t:
            front = [c for u in front for c in self.children[u]]
        return front

    def with_probs(self, probs: Sequence) -> "FiniteTree":
        return FiniteTree(self.parent, tuple(_frac(p) for p in probs), self.label,
                          self.depth_of, self.children)


# ---------------------------------------------------------------------------
# constructors


def uniform_tree(depth: int, branching: int = 2, labels: Sequence | None = None) -> FiniteTree:
    """Full tree with equal conditional probabilities; child ``i`` carries
    ``labels[i]`` (default ``0..branching-1``)."""
    if depth < 0 or branching < 1:
        raise ValueError("need depth >= 0 and branching >= 1")
    labels = list(range(branching)) if labels is None else list(labels)
    parents, probs, labs = [None], [Fraction(1)], [None]
    front = [0]
    for _ in range(depth):
        nxt = []
        for v in front:
            for i in range(branching):
                parents.append(v)
                probs.append(Fraction(1, branching))
                labs.append(labels[i])
                nxt.append(len(parents) - 1)
        front = nxt
    return FiniteTree.from_nodes(parents, probs, labs)


def sign_tree(depth: int) -> FiniteTree:
    """Rademacher observations: children labelled ``+1`` and ``-1``, each 1/2."""
    return uniform_tree(depth, 2, [1, -1])


def random_tree(rng: np.random.Generator, depth: int, branching: int = 2,
                max_weight: int = 6, zero_prob: float = 0.1) -> FiniteTree:
    """Full tree with random rational conditional probabilities.

    Each child gets an integer weight in ``1..max_weight`` (``0`` with
    probability ``zero_prob``, keeping at least one positive child); weights
    are normalised exactly.  Labels are small integers.
    """
    parents, probs, labs = [None], [Fraction(1)], [None]
    front = [0]
    for _ in range(depth):
        nxt = []
        for v in front:
            w = rng.integers(1, max_weight + 1, size=branching)
            w[rng.random(branching) < zero_prob] = 0
            if w.sum() == 0:
                w[rng.integers(branching)] = 1
            total = int(w.sum())
            for i in range(branching):
                parents.append(v)
                probs.append(Fraction(int(w[i]), total))
                labs.append(int(rng.integers(-3, 4)))
                nxt.append(len(parents) - 1)
        front = nxt
    return FiniteTree.from_nodes(parents, probs, labs)


def random_payload(tree: FiniteTree, rng: np.random.Generator, max_num: int = 8,
                   den: int = 4) -> list[Fraction]:
    """Nonnegative rationals ``k/den`` with ``k`` in ``0..max_num``."""
    return [Fraction(int(k), den) for k in rng.integers(0, max_num + 1, size=tree.n_nodes)]


def atomic_pvalue_tree(depth: int = 3) -> tuple[FiniteTree, list[Fraction]]:
    """Tree and payload of an atomic max-martingale p-value under i.i.d. data.

    State ``k`` at time ``t`` has ``p_t = 1/2 + k/2^(t+1)``.  From ``k >= 2`` the
    next state is ``2k-1`` or ``2k`` with probability 1/2 each; from ``k = 1``
    it is ``2`` with probability ``1/(2^(t+1)+2)`` and ``1`` otherwise.  The
    limit has an atom at 1/2, yet the process is its own admissible version.
    Node labels are the states ``k``.
    """
    parents, probs, labs = [None], [Fraction(1)], [1]
    front = [(0, 1)]
    for t in range(depth):
        nxt = []
        for v, k in front:
            if k == 1:
                q = Fraction(1, 2 ** (t + 1) + 2)
                moves = [(1, 1 - q), (2, q)]
            else:
                moves = [(2 * k - 1, Fraction(1, 2)), (2 * k, Fraction(1, 2))]
            for k2, q in moves:
                parents.append(v)
                probs.append(q)
                labs.append(k2)
                nxt.append((len(parents) - 1, k2))
        front = nxt
    tree = FiniteTree.from_nodes(parents, probs, labs)
    p = [Fraction(1, 2) + Fraction(tree.label[v], 2 ** (tree.depth_of[v] + 1))
         for v in range(tree.n_nodes)]
    return tree, p


def leaf_payload(tree: FiniteTree, values: Sequence) -> list:
    """Per-node list holding ``values`` (given in leaf order) at the leaves."""
    leaves = tree.leaves
    if len(values) != len(leaves):
        raise ValueError(f"expected {len(leaves)} leaf values, got {len(values)}")
    out = [None] * tree.n_nodes
    for v, y in zip(leaves, values):
        out[v] = y
    return out


def _payload(tree: FiniteTree, payload) -> list:
    if isinstance(payload, dict):
        out = [None] * tree.n_nodes
        for k, v in payload.items():
            out[k] = v
        return out
    payload = list(payload)
    if len(payload) == tree.n_nodes:
        return payload
    return leaf_payload(tree, payload)


# ---------------------------------------------------------------------------
# conditional expectation / supremum


def _backward(tree: FiniteTree, payload, d: int, sup: bool) -> list:
    y = _payload(tree, payload)
    out = [None] * tree.n_nodes
    for v in tree.bottom_up():
        dv = tree.depth_of[v]
        if dv > d:
            continue
        if dv == d:
            if y[v] is None:
                raise ValueError(f"payload missing at node {v}")
            out[v] = y[v]
        elif sup:
            out[v] = max(out[c] for c in tree.children[v] if tree.prob[c] > 0)
        else:
            out[v] = sum(tree.prob[c] * out[c] for c in tree.children[v])
    return out


def cond_expectation(tree: FiniteTree, payload, s: int, d: int | None = None) -> dict[int, object]:
    """``E[Y_d | F_s]`` at every depth-``s`` node, where ``Y_d`` is the payload
    at depth ``d`` (default: the leaves)."""
    d = tree.depth if d is None else d
    if not 0 <= s <= d <= tree.depth:
        raise ValueError("need 0 <= s <= d <= depth")
    full = _backward(tree, payload, d, sup=False)
    return {v: full[v] for v in tree.level(s)}


def cond_supremum(tree: FiniteTree, payload, s: int, d: int | None = None) -> dict[int, object]:
    """Conditional supremum of ``Y_d`` given ``F_s``: the max over descendants
    reachable with positive probability."""
    d = tree.depth if d is None else d
    if not 0 <= s <= d <= tree.depth:
        raise ValueError("need 0 <= s <= d <= depth")
    full = _backward(tree, payload, d, sup=True)
    return {v: full[v] for v in tree.level(s)}


def doob_levy_martingale(tree: FiniteTree, terminal) -> list:
    """``M_t = E[Y | F_t]`` at every node for a terminal (leaf) payload ``Y``."""
    return _backward(tree, terminal, tree.depth, sup=False)


def closed_max_martingale(tree: FiniteTree, terminal) -> list:
    """``P_t`` = conditional supremum of the terminal payload given ``F_t``."""
    return _backward(tree, terminal, tree.depth, sup=True)


def is_supermartingale(tree: FiniteTree, payload, tol: float = 1e-12, equality: bool = False):
    """Return ``None`` if the property holds, else the first violating node."""
    y = _payload(tree, payload)
    for v in range(tree.n_nodes):
        kids = tree.children[v]
        if not kids:
            continue
        mean = sum(tree.prob[c] * y[c] for c in kids)
        ok = _eq(mean, y[v], tol) if equality else _le(mean, y[v], tol)
        if not ok:
            return v
    return None


def is_martingale(tree: FiniteTree, payload, tol: float = 1e-12) -> bool:
    return is_supermartingale(tree, payload, tol, equality=True) is None


def is_max_martingale(tree: FiniteTree, payload, tol: float = 1e-12) -> bool:
    y = _payload(tree, payload)
    return all(_eq(max(y[c] for c in tree.children[v] if tree.prob[c] > 0), y[v], tol)
               for v in range(tree.n_nodes) if tree.children[v])


# ---------------------------------------------------------------------------
# Snell envelope and optimal stopping


@dataclass(frozen=True)
class SnellResult:
    """Envelope ``L``, Doob martingale ``M``, compensator ``A`` (``M = L + A``,
    ``A`` predictable and nondecreasing, ``A = 0`` at the root) and the
    stopping region ``payload == L``."""

    L: list
    M: list
    A: list
    stop: list

    @property
    def value(self):
        return self.L[0]


def snell_doob(tree: FiniteTree, payload) -> SnellResult:
    e = _payload(tree, payload)
    if any(v is None for v in e):
        raise ValueError("payload must be defined at every node")
    if any(v < 0 for v in e):
        raise ValueError("payload must be nonnegative")
    n = tree.n_nodes
    L = [None] * n
    cont = [None] * n
    for v in tree.bottom_up():
        kids = tree.children[v]
        if kids:
            cont[v] = sum(tree.prob[c] * L[c] for c in kids)
            L[v] = max(e[v], cont[v])
        else:
            L[v] = e[v]
    M, A = [None] * n, [None] * n
    M[0], A[0] = L[0], L[0] - L[0]
    for v in range(1, n):
        u = tree.parent[v]
        A[v] = A[u] + (L[u] - cont[u])
        M[v] = L[v] + A[v]
    stop = [e[v] == L[v] if _exact(e[v], L[v]) else abs(e[v] - L[v]) <= 1e-12 for v in range(n)]
    return SnellResult(L, M, A, stop)


def _count_cuts(tree: FiniteTree, v: int = 0):
    kids = tree.children[v]
    if not kids:
        return 1
    return 1 + math.prod(_count_cuts(tree, c) for c in kids)


def _enumerate_cuts(tree: FiniteTree, v: int):
    """Every stopping time restricted to the subtree at ``v``, as a tuple of
    stop nodes (an antichain meeting every root-to-leaf path)."""
    yield (v,)
    kids = tree.children[v]
    if kids:
        for combo in itertools.product(*(list(_enumerate_cuts(tree, c)) for c in kids)):
            yield tuple(itertools.chain.from_iterable(combo))


def stopping_value(tree: FiniteTree, payload, stop_nodes: Iterable[int]):
    """``E[payload_tau]`` for the stopping time whose stop nodes are given."""
    e = _payload(tree, payload)
    ap = tree.abs_prob()
    return sum(ap[v] * e[v] for v in stop_nodes)


def first_stop_nodes(tree: FiniteTree, region: Sequence[bool]) -> list[int]:
    """Stop nodes of "first time in ``region``" (leaves if never)."""
    out, front = [], [0]
    while front:
        v = front.pop()
        if region[v] or not tree.children[v]:
            out.append(v)
        else:
            front.extend(tree.children[v])
    return sorted(out)


@dataclass(frozen=True)
class SafetyResult:
    value: object
    witness: tuple
    method: str
    snell_value: object
    n_stopping_times: int

    @property
    def safe(self) -> bool:
        return self.value <= 1


def brute_force_safety(tree: FiniteTree, payload, mode: str = "auto",
                       max_enumerate: int = 100_000) -> SafetyResult:
    """Largest ``E[payload_tau]`` over stopping times, with a maximising ``tau``.

    ``mode='enumerate'`` lists every stopping time (refused above
    ``max_enumerate`` of them).  ``mode='certificate'`` uses the Snell
    envelope ``L``: the first entry into ``{payload == L}`` attains ``L_root``
    (recomputed by summing over its stop nodes) and a node-by-node check that
    ``L`` is a supermartingale dominating the payload shows nothing beats it.
    ``'auto'`` enumerates when feasible.  Both modes cross-check the Snell root.
    """
    e = _payload(tree, payload)
    count = _count_cuts(tree)
    snell = snell_doob(tree, e)
    if mode == "auto":
        mode = "enumerate" if count <= max_enumerate else "certificate"
    if mode == "enumerate":
        if count > max_enumerate:
            raise ValueError(f"{count} stopping times exceed the enumeration cap {max_enumerate}; "
                             "use mode='certificate'")
        best, arg = None, None
        for cut in _enumerate_cuts(tree, 0):
            val = stopping_value(tree, e, cut)
            if best is None or val > best:
                best, arg = val, cut
    elif mode == "certificate":
        arg = tuple(first_stop_nodes(tree, snell.stop))
        best = stopping_value(tree, e, arg)
        if is_supermartingale(tree, snell.L) is not None or any(
                not _le(e[v], snell.L[v], 1e-12) for v in range(tree.n_nodes)):
            raise ArithmeticError("Snell envelope failed its own certificate")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not _eq(best, snell.value, 1e-12):
        raise ArithmeticError(f"stopping value {best} disagrees with Snell root {snell.value}")
    return SafetyResult(best, tuple(arg), mode, snell.value, count)


def admissibilize_e(tree: FiniteTree, payload) -> list:
    """Martingale dominating a safe e-payload with root value exactly 1:
    the Doob martingale of the Snell envelope, shifted by ``1 - M_root``."""
    safety = brute_force_safety(tree, payload, mode="certificate")
    if not safety.safe:
        raise UnsafePayloadError(safety.value)
    M = snell_doob(tree, payload).M
    shift = 1 - M[0]
    return [m + shift for m in M]


def terminal_running_inf(tree: FiniteTree, payload) -> list:
    """Per-leaf running infimum of the payload along its path (leaf-indexed
    per-node list)."""
    p = _payload(tree, payload)
    run = [None] * tree.n_nodes
    for v in range(tree.n_nodes):
        u = tree.parent[v]
        run[v] = p[v] if u is None else min(run[u], p[v])
    return [run[v] if not tree.children[v] else None for v in range(tree.n_nodes)]


def leaf_cdf(tree: FiniteTree, leaf_values) -> dict:
    """Exact law ``{x: Q(Y <= x)}`` at the support points of a leaf variable."""
    y = _payload(tree, leaf_values)
    ap = tree.abs_prob()
    mass: dict = {}
    for v in tree.leaves:
        if ap[v] > 0:
            mass[y[v]] = mass.get(y[v], 0) + ap[v]
    out, acc = {}, 0
    for x in sorted(mass):
        acc += mass[x]
        out[x] = acc
    return out


def _cdf_at(cdf: dict, x):
    best = 0
    for s, F in cdf.items():
        if s <= x:
            best = F
    return best


def admissibilize_p(tree: FiniteTree, payload) -> list:
    """Closed max-martingale ``p'_t`` = conditional supremum of ``F(pbar)``
    where ``pbar`` is the terminal running infimum and ``F`` its exact law.

    Requires ``p`` in ``[0, 1]`` and ``F(x) <= x`` (validity); the output is
    below the input everywhere and its own terminal law satisfies ``F(x) = x``
    on its support.
    """
    p = _payload(tree, payload)
    if any(v is None or v < 0 or v > 1 for v in p):
        raise InvalidPValueError("p-values must be defined and lie in [0, 1] at every node")
    pbar = terminal_running_inf(tree, p)
    F = leaf_cdf(tree, pbar)
    for x, Fx in F.items():
        if Fx > x:
            raise InvalidPValueError(f"not a valid p-value: Q(inf p <= {x}) = {Fx} > {x}")
    z = [None if pbar[v] is None else _cdf_at(F, pbar[v]) for v in range(tree.n_nodes)]
    return closed_max_martingale(tree, z)


def implied_alternative(tree: FiniteTree, M, tol: float = 1e-12) -> FiniteTree:
    """Tree with ``P(child | v) = Q(child | v) M_child / M_v`` (``Q`` kept where
    ``M_v = 0``), so that ``dP/dQ = M`` on every ``F_t``."""
    m = _payload(tree, M)
    if any(v is None or v < 0 for v in m):
        raise ValueError("M must be nonnegative at every node")
    bad = is_supermartingale(tree, m, tol, equality=True)
    if bad is not None:
        raise ValueError(f"M is not a martingale (violated at node {bad})")
    if not _eq(m[0], 1, tol):
        raise ValueError(f"M must start at 1, got {m[0]}")
    probs = list(tree.prob)
    for v in range(1, tree.n_nodes):
        u = tree.parent[v]
        if m[u] != 0:
            probs[v] = tree.prob[v] * m[v] / m[u]
    if not _exact(*m):
        # float M: renormalise siblings so the new tree is a valid measure
        for u in range(tree.n_nodes):
            kids = tree.children[u]
            if kids and m[u] != 0:
                fr = [Fraction(probs[c]).limit_denominator(10**15) for c in kids]
                fr[-1] = 1 - sum(fr[:-1])
                for c, f in zip(kids, fr):
                    probs[c] = f
    return tree.with_probs(probs)


def likelihood_ratio(p_tree: FiniteTree, q_tree: FiniteTree) -> list:
    """``P(v)/Q(v)`` per node (``None`` where ``Q(v) = 0``)."""
    ap, aq = p_tree.abs_prob(), q_tree.abs_prob()
    return [None if b == 0 else a / b for a, b in zip(ap, aq)]


# ---------------------------------------------------------------------------
# checks


def _crossing_prob(tree: FiniteTree, m: list, v: int, level):
    if m[v] >= level:
        return Fraction(1) if _exact(m[v], level) else 1.0
    kids = tree.children[v]
    if not kids:
        return Fraction(0)
    return sum(tree.prob[c] * _crossing_prob(tree, m, c, level) for c in kids)


def conditional_ville_check(tree: FiniteTree, payload, alpha, tol: float = 1e-12) -> Report:
    """Exact ``P(exists t > s: M_t >= M_s/alpha | F_s) <= alpha`` at every node
    ``s`` with ``M_s > 0``, after checking that ``M`` is a supermartingale."""
    m = _payload(tree, payload)
    rep = Report("conditional-ville", metadata={"alpha": str(alpha), "nodes": tree.n_nodes})
    bad = is_supermartingale(tree, m, tol)
    rep.add(Check("supermartingale", passed=bad is None,
                  witness=None if bad is None else {"node": bad, "value": str(m[bad])}))
    worst, worst_node = Fraction(0), None
    for s in range(tree.n_nodes):
        if not m[s] > 0 or not tree.children[s]:
            continue
        level = m[s] / alpha
        cp = sum(tree.prob[c] * _crossing_prob(tree, m, c, level) for c in tree.children[s])
        if worst_node is None or cp > worst:
            worst, worst_node = cp, s
    ok = worst_node is None or _le(worst, alpha, tol)
    rep.add(Check("max conditional crossing probability", estimate=float(worst),
                  bound=float(alpha), passed=ok,
                  witness=None if ok else {"node": worst_node, "crossing": str(worst)}))
    return rep


def error_event_equivalence(tree: FiniteTree, events) -> tuple:
    """For a 0/1 event process ``B``: ``(P(union), max over random times,
    max over stopping times)`` of ``E[B_T]``, all exact.

    A random time may look at the whole path, so its best choice stops each
    leaf path where ``B`` is largest; the stopping-time maximum is the Snell
    root (enumerated when small).
    """
    b = [_frac(x) for x in _payload(tree, events)]
    if any(x not in (0, 1) for x in b):
        raise ValueError("events must be 0/1")
    ap = tree.abs_prob()
    union = sum(ap[v] for v in tree.leaves if any(b[u] for u in tree.path(v)))
    random_time = sum(ap[v] * max(b[u] for u in tree.path(v)) for v in tree.leaves)
    stopping = brute_force_safety(tree, b).value
    return union, random_time, stopping


def overshoot_check(tree: FiniteTree, payload, alpha) -> Report:
    """Largest value of ``M`` at its first entry above ``1/alpha``; no
    overshoot means it equals the threshold exactly."""
    m = _payload(tree, payload)
    level = 1 / _frac(alpha) if _exact(alpha) else 1 / alpha
    region = [x >= level for x in m]
    ap = tree.abs_prob()
    hits = [v for v in first_stop_nodes(tree, region) if region[v] and ap[v] > 0]
    worst = max((m[v] for v in hits), default=None)
    rep = Report("overshoot", metadata={"alpha": str(alpha)})
    over = 0 if worst is None else worst - level
    rep.add(Check("overshoot at first crossing", estimate=float(over), bound=0.0,
                  passed=over == 0,
                  witness=None if over == 0 else {"node": max(hits, key=lambda v: m[v])}))
    return rep


# ---------------------------------------------------------------------------
# text format


def _parse_value(tok: str, line: int):
    if tok == ".":
        return None
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise TreeFormatError(line, f"cannot parse value {tok!r}") from None


def read_tree(source) -> tuple[FiniteTree, dict[str, list]]:
    """Parse the text format; ``source`` is the text or an open file.

    Returns the tree and a dict of named payload columns (per-node lists in
    the tree's node order).  Node ids in the file may be any integers.
    """
    text = source.read() if hasattr(source, "read") else str(source)
    rows, header = [], None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if header is None:
            if toks[:3] != ["id", "parent", "prob"]:
                raise TreeFormatError(i, "header must start with 'id parent prob'")
            header = toks
            continue
        if len(toks) != len(header):
            raise TreeFormatError(i, f"expected {len(header)} fields, got {len(toks)}")
        rows.append((i, toks))
    if header is None:
        raise TreeFormatError(1, "missing header")
    if not rows:
        raise TreeFormatError(1, "no nodes")
    ids = {}
    for i, toks in rows:
        try:
            nid = int(toks[0])
        except ValueError:
            raise TreeFormatError(i, f"bad node id {toks[0]!r}") from None
        if nid in ids:
            raise TreeFormatError(i, f"duplicate node id {nid}")
        ids[nid] = len(ids)
    parents, probs, labels, line_of = [], [], [], []
    has_x = len(header) > 3 and header[3] == "x"
    names = header[4:] if has_x else header[3:]
    cols = {n: [] for n in names}
    for i, toks in rows:
        line_of.append(i)
        if toks[1] == "-":
            parents.append(None)
        else:
            try:
                parents.append(ids[int(toks[1])])
            except (ValueError, KeyError):
                raise TreeFormatError(i, f"unknown parent {toks[1]!r}") from None
        pr = _parse_value(toks[2], i)
        if toks[1] != "-" and pr is None:
            raise TreeFormatError(i, "non-root node needs a probability")
        if pr is not None and not 0 <= pr <= 1:
            raise TreeFormatError(i, f"probability {pr} outside [0, 1]")
        probs.append(pr if pr is not None else Fraction(1))
        off = 3
        if has_x:
            labels.append(_parse_value(toks[3], i))
            off = 4
        else:
            labels.append(None)
        for n, tok in zip(names, toks[off:]):
            cols[n].append(_parse_value(tok, i))
    try:
        tree, new_id = FiniteTree._build(parents, probs, labels)
    except ValueError as exc:
        raise TreeFormatError(_blame(str(exc), line_of), str(exc)) from None
    inv = sorted(new_id, key=new_id.get)
    payloads = {n: [c[o] for o in inv] for n, c in cols.items()}
    return tree, payloads


def _blame(msg: str, line_of: list[int]) -> int:
    import re
    m = re.search(r"node (\d+)", msg)
    return line_of[int(m.group(1))] if m and int(m.group(1)) < len(line_of) else line_of[0]


def _fmt(v) -> str:
    if v is None:
        return "."
    if isinstance(v, Rational):
        return str(Fraction(v))
    return repr(float(v))


def write_tree(tree: FiniteTree, payloads: dict[str, Sequence] | None = None) -> str:
    payloads = payloads or {}
    has_x = any(x is not None for x in tree.label)
    head = ["id", "parent", "prob"] + (["x"] if has_x else []) + list(payloads)
    lines = [" ".join(head)]
    for v in range(tree.n_nodes):
        row = [str(v), "-" if tree.parent[v] is None else str(tree.parent[v]), _fmt(tree.prob[v])]
        if has_x:
            row.append(_fmt(tree.label[v]))
        row += [_fmt(payloads[n][v]) for n in payloads]
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def leaf_law(tree: FiniteTree, leaf_values) -> dict:
    """Exact probability mass function of a leaf variable."""
    y = _payload(tree, leaf_values)
    ap = tree.abs_prob()
    out: dict = {}
    for v in tree.leaves:
        if ap[v] > 0:
            out[y[v]] = out.get(y[v], 0) + ap[v]
    return dict(sorted(out.items()))
