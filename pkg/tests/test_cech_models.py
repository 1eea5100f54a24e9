import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from helpers import model, random_cochain, random_spark
from sparkforge.cech_models import (CoefficientSystem, FormAlgebra, ModelError, Nerve, _add,
                                    torus_nerve, triangle_nerve)
from sparkforge.complexes import is_quasi_isomorphism
from sparkforge.exact_linalg import QQi, mpq


def test_nerve_face_closure():
    N = Nerve([(2, 0, 1)])
    assert len(N.simplices) == 7 and N.dim == 2
    assert N.maximal() == [(0, 1, 2)]
    with pytest.raises(ModelError):
        Nerve([(0, 0, 1)])
    T = torus_nerve()
    assert (len(T.of_dim(0)), len(T.of_dim(1)), len(T.of_dim(2))) == (7, 21, 14)


@pytest.mark.parametrize("A", [FormAlgebra(1), FormAlgebra(2), FormAlgebra(1, 2, polynomial=True),
                               FormAlgebra(2, 2, polynomial=True)])
def test_form_algebra_axioms(A):
    assert A.check()
    # graded commutativity with the total-degree sign
    for i in range(len(A)):
        for j in range(len(A)):
            u, v = {i: QQi(1)}, {j: QQi(1)}
            sign = -1 if A.degree(i) * A.degree(j) % 2 else 1
            assert A.wedge(u, v) == {k: x * sign for k, x in A.wedge(v, u).items()}


def test_twisted_coefficients_are_functorial():
    N = triangle_nerve()
    A = FormAlgebra(1, 2, polynomial=True)
    C = CoefficientSystem(N, A, {s: (sum(s) + len(s)) % 4 for s in N.simplices})
    assert C.check()


def test_model_e_inclusion_is_quasi_isomorphism():
    for name in ("torus1", "disk", "triangle-constant", "vertex-constant"):
        M = model(name)
        for p in (1, 2):
            E, incl = M.E(p)
            assert is_quasi_isomorphism(incl), (name, p)


def test_torus_level_one_cohomology():
    # invariant (0,s)-forms (ranks 1,1) tensored with the nerve cohomology (1,2,1); realified
    E, _ = model("torus1").E(1)
    assert [str(E.cohomology(k).invariants) for k in E.window] == ["Q^2", "Q^6", "Q^6", "Q^2"]


def test_contractible_constant_reduces_to_point():
    # coefficients are QQ(i) with lattice ZZ, so the point answer Q/Z picks up the
    # imaginary line: QQ(i)/ZZ = Q/Z + Q
    for name in ("triangle-constant", "vertex-constant"):
        T = model(name).triple()
        assert str(T.spark_group(0).invariants) == "Q + Q/Z"
        assert all(T.spark_group(k).invariants.is_zero() for k in range(1, 3))


def test_huge_level_is_untruncated():
    M = model("torus1")
    assert M.level(50) == M.max_level
    assert M.F(50).degrees == M.F().degrees
    rng = random.Random(0)
    T = M.triple()
    for k in range(0, 2):
        v = random_spark(T, k, rng)
        assert M.project_level(k, v, 50) == v


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_leibniz(seed):
    rng = random.Random(seed)
    M = model("disk" if seed % 2 else "torus1")
    k, l = rng.randint(0, 2), rng.randint(0, 2)
    a, b = random_cochain(M, k, rng, 0.2), random_cochain(M, l, rng, 0.2)
    lhs = M.D(M.cup(a, b))
    rhs = _add(M.cup(M.D(a), b), M.cup(a, M.D(b)), (-1) ** k)
    assert lhs == rhs


def test_cup_units():
    M = model("disk")
    rng = random.Random(1)
    one = {(s, M.A.unit): QQi(1) for s in M.nerve.of_dim(0)}
    two = M.integer_to_forms({s: 2 for s in M.nerve.of_dim(0)})
    for _ in range(10):
        b = random_cochain(M, rng.randint(0, 2), rng, 0.3)
        assert M.cup(one, b) == b and M.cup(b, one) == b
        assert M.cup(two, b) == {x: z * 2 for x, z in b.items()}


def _h2_multiple(Z, N, c):
    """The integer m with c = m [single triangle] in H^2 of the torus nerve."""
    pos = {s: j for j, s in enumerate(N.of_dim(2))}
    v = {pos[s]: mpq(n) for s, n in c.items()}
    B = Z.coboundaries(2)
    for m in range(-4, 5):
        w = dict(v)
        w[0] = w.get(0, 0) - m
        if B.contains({i: x for i, x in w.items() if x}):
            return m
    return None


def test_integer_cup_is_unimodular_on_torus():
    """Independent oracle: the cup pairing on H^1 of the torus is unimodular."""
    M = model("torus1")
    N = M.nerve
    Z = N.integer_cochains()
    H1 = Z.cohomology(1)
    assert str(H1.invariants) == "Z^2"
    edges = N.of_dim(1)
    # lattice generators of the cocycles that survive in cohomology
    basis = [{edges[j]: int(x) for j, x in g.items()} for g in H1.X.lat if not H1.is_zero_class(g)]
    pairing = [[_h2_multiple(Z, N, M.integer_cup(a, b)) for b in basis] for a in basis]
    assert all(x is not None for row in pairing for x in row)
    dets = {abs(pairing[i][i] * pairing[j][j] - pairing[i][j] * pairing[j][i])
            for i, j in combinations(range(len(basis)), 2)}
    assert 1 in dets


def test_spark_unit_and_flat_product():
    M = model("torus1")
    T = M.triple()
    unit = M.spark_vector(-1, {}, {s: 1 for s in M.nerve.of_dim(0)})
    rng = random.Random(2)
    for _ in range(10):
        k = rng.randint(-1, 1)
        u = random_spark(T, k, rng)
        assert T.same_class(k, M.spark_product(k, u, -1, unit), u)
        assert T.same_class(k, M.spark_product(-1, unit, k, u), u)
    zero = M.spark_vector(0, {}, {})
    w = M.spark_product(0, zero, 0, zero)
    assert T.delta1(1, w) == {} and T.delta2(1, w) == {}


def test_product_rejects_non_sparks():
    M = model("torus1")
    with pytest.raises(ValueError):
        M.spark_product(0, {0: mpq(1, 7)}, 0, {})


def test_projection_commutes_with_delta1():
    M = model("torus2")
    T = M.triple()
    rng = random.Random(3)
    for _ in range(50):
        k, p = rng.randint(-1, 2), rng.choice([1, 2])
        v = random_spark(T, k, rng)
        e = M.to_cochain(T.delta1(k, v), k + 1, None)
        w = M.project_level(k, v, p)
        ep = M.to_cochain(M.triple(p).delta1(k, w), k + 1, p)
        assert ep == M.project(e, p)
        assert M.triple(p).delta2(k, w) == T.delta2(k, v)
