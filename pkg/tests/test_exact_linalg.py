import random
from fractions import Fraction
from itertools import combinations
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from sparkforge.exact_linalg import (QQi, QZGroup, QZModule, SparseMatrix, constrained_subgroup,
                                     invariant_factors, mpq, nullspace, realify_vector,
                                     complexify_vector, smith_normal_form, solve)


def _det(rows):
    rows = [[Fraction(x) for x in r] for r in rows]
    n, sign, out = len(rows), 1, Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if rows[r][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            sign = -sign
        out *= rows[c][c]
        for r in range(c + 1, n):
            f = rows[r][c] / rows[c][c]
            rows[r] = [a - f * b for a, b in zip(rows[r], rows[c])]
    return sign * out


def _determinantal_divisors(A):
    """d_k = gcd of all k x k minors; invariant factors are d_k / d_{k-1}."""
    m, n = len(A), len(A[0])
    out, prev = [], 1
    for k in range(1, min(m, n) + 1):
        g = 0
        for rs in combinations(range(m), k):
            for cs in combinations(range(n), k):
                g = gcd(g, int(_det([[A[i][j] for j in cs] for i in rs])))
        if g == 0:
            break
        out.append(g // prev)
        prev = g
    return out


def _dense(M):
    return [[int(x) for x in row] for row in M.to_dense()]


def _matmul(A, B):
    return [[sum(A[i][t] * B[t][j] for t in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def test_snf_small_example():
    A = SparseMatrix.from_dense([[2, 4], [6, 8]])
    U, S, V = smith_normal_form(A)
    assert _dense(S) == [[2, 0], [0, 4]]
    assert abs(_det(_dense(U))) == 1 and abs(_det(_dense(V))) == 1
    assert _matmul(_matmul(_dense(U), _dense(A)), _dense(V)) == _dense(S)


matrices = st.integers(1, 4).flatmap(lambda m: st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=m, max_size=m)))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_snf_matches_determinantal_divisors(A):
    M = SparseMatrix.from_dense(A)
    U, S, V = smith_normal_form(M)
    Sd = _dense(S)
    assert _matmul(_matmul(_dense(U), A), _dense(V)) == Sd
    assert abs(_det(_dense(U))) == 1 and abs(_det(_dense(V))) == 1
    diag = [Sd[i][i] for i in range(min(len(A), len(A[0]))) if Sd[i][i]]
    assert all(d > 0 for d in diag)
    assert all(b % a == 0 for a, b in zip(diag, diag[1:]))
    assert diag == _determinantal_divisors(A)
    assert invariant_factors(M) == diag


def test_solve_over_rings():
    A = SparseMatrix.from_dense([[2]])
    assert solve(A, [4], "ZZ") == {0: 2}
    assert solve(A, [3], "ZZ") is None
    assert solve(A, [3], "QQ") == {0: mpq(3, 2)}
    with pytest.raises(ValueError):
        solve(A, [1, 2])


@settings(max_examples=40, deadline=None)
@given(matrices, st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_solve_and_nullspace(A, x):
    M = SparseMatrix.from_dense(A)
    x = {j: mpq(c) for j, c in enumerate(x[:M.ncols]) if c}
    b = M.apply(x)
    for ring in ("ZZ", "QQ"):
        y = solve(M, b, ring)
        assert y is not None and M.apply(y) == b
    for v in nullspace(M):
        assert not M.apply(v)


@pytest.mark.parametrize("kwargs, text", [
    (dict(q_dim=1, z_rank=0, generators=[], divisible_generators=[[1]], relations=[[1]]), "Q/Z"),
    (dict(q_dim=0, z_rank=2, generators=[[1, 0], [0, 1]], relations=[[2, 0], [0, 3]]), "Z/6"),
    (dict(q_dim=1, z_rank=1, generators=[[0, 1]], divisible_generators=[[1, 0]],
          relations=[[Fraction(1, 2), 3]]), "Q + Z/3"),
    (dict(q_dim=0, z_rank=1, generators=[[1]], relations=[]), "Z"),
    (dict(q_dim=0, z_rank=1, generators=[[1]], relations=[[1]]), "0"),
])
def test_qz_normal_forms(kwargs, text):
    assert str(QZModule.from_presentation(**kwargs).invariants) == text


def test_malformed_presentation_rejected():
    with pytest.raises(ValueError):
        QZModule.from_presentation(0, 1, generators=[[2]], relations=[[1]])


def test_class_membership():
    M = QZModule.from_presentation(1, 0, generators=[], divisible_generators=[[1]], relations=[[1]])
    assert M.is_zero_class({0: mpq(3)})
    assert not M.is_zero_class({0: mpq(1, 2)})
    assert M.equal_classes({0: mpq(1, 3)}, {0: mpq(4, 3)})


def _random_unimodular(rng, n):
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if i == j:
            U[0] = [-x for x in U[0]]
            continue
        c = rng.randint(-2, 2)
        U[i] = [a + c * b for a, b in zip(U[i], U[j])]
    return U


def test_invariants_survive_unimodular_change():
    rng = random.Random(50)
    for _ in range(50):
        q, z = rng.randint(0, 2), rng.randint(1, 3)
        dim = q + z
        gens = [[0] * q + [int(i == j) for j in range(z)] for i in range(z)]
        div = [[int(i == j) for j in range(q)] + [0] * z for i in range(q)]
        rels = [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(q)]
                + [rng.randint(-4, 4) for _ in range(z)] for _ in range(rng.randint(0, 3))]
        base = QZModule.from_presentation(q, z, gens, rels, div).invariants
        U = _random_unimodular(rng, dim)
        # change of basis of the ambient lattice: rational block stays rational
        U = [[U[i][j] if (i < q) == (j < q) else 0 for j in range(dim)] for i in range(dim)]
        U = [row if any(row) else [int(i == j) for j in range(dim)] for i, row in enumerate(U)]
        if _det(U) not in (1, -1):
            continue

        def move(v):
            return [sum(U[i][j] * v[j] for j in range(dim)) for i in range(dim)]
        moved = QZModule.from_presentation(q, z, [move(g) for g in gens], [move(r) for r in rels],
                                           [move(d) for d in div]).invariants
        assert moved == base


def test_constrained_subgroup():
    # rational x0 with integral x1, x2 subject to x0 = x1 and x1 + x2 = 0
    K = SparseMatrix.from_dense([[0, 1, 1]])
    L = SparseMatrix.from_dense([[1, -1, 0]])
    G = constrained_subgroup(L, [], K, 1, 2)
    assert G.contains({0: mpq(2), 1: mpq(2), 2: mpq(-2)})
    assert not G.contains({0: mpq(1, 2), 1: mpq(1, 2), 2: mpq(-1, 2)})
    assert not G.contains({0: mpq(1), 1: mpq(1)})
    # with L x allowed anywhere on the line spanned by e0, x0 is free
    G = constrained_subgroup(L, [{0: mpq(1)}], K, 1, 2)
    assert G.contains({0: mpq(1, 3)})
    assert constrained_subgroup(SparseMatrix.zero(0, 2), [], None, 1, 1).generators() == \
        QZGroup.full([0], [1], 2).generators()
    everything_zero = SparseMatrix.identity(2)
    assert constrained_subgroup(SparseMatrix.zero(0, 2), [], everything_zero, 1, 1).generators() == ([], [])
    with pytest.raises(ValueError):
        constrained_subgroup(SparseMatrix.zero(1, 3), [], None, 1, 1)


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_gaussian_rationals(a, b, c, d):
    x, y = QQi(a, b), QQi(c, d)
    assert (x * y).conj() == x.conj() * y.conj()
    assert x + y - y == x
    if y:
        assert x * y * y.inverse() == x
    v = {0: x, 3: y}
    assert complexify_vector(realify_vector(v)) == {i: w for i, w in v.items() if w}
