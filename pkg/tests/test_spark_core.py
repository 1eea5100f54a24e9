import random

import pytest

from helpers import model, random_boundary, random_spark, triple
from sparkforge.complexes import CochainComplex, ComplexError, ComplexMorphism
from sparkforge.exact_linalg import SparseMatrix, mpq, same_map, vadd
from sparkforge.spark_core import (SparkComplexTriple, SparkMorphism, TierError, grid_3x3,
                                   induced_map, kernel_representatives)

M = SparseMatrix.from_dense


def test_axiom_one_witness_is_w():
    rep = triple("synthetic-T1-e1").validate()
    v = next(v for v in rep.violations if v.axiom == "axiom-1")
    assert v.degree == 1 and v.witness == {0: 1}


def test_torus_model_is_model_tier():
    T = model("torus1").triple()
    assert T.validate().failed_axioms() == ["axiom-1"]
    assert T.tier() == "model"
    with pytest.raises(TierError):
        T.spark_group(0, tier="strict")
    assert T.spark_group(0, tier="model") is not None


def test_spark_groups():
    assert str(triple("point").spark_group(0).invariants) == "Q/Z"
    T = triple("synthetic-T1")
    assert str(T.spark_group(0).invariants) == "Q/Z + Z"
    assert T.spark_group(7).invariants.is_zero()


@pytest.mark.parametrize("n", [-2, 1, 3])
def test_delta2_of_t1_class(n):
    T = triple("synthetic-T1")
    x = mpq(1, 5)
    v = T.join(0, {0: x, 1: mpq(-n)}, {0: mpq(n)})
    assert T.is_spark(0, v)
    assert T.delta1(0, v) == {}
    assert T.delta2(0, v) == ({0: n} if n else {})


def test_non_spark_rejected():
    T = triple("synthetic-T1")
    with pytest.raises(ValueError):
        T.delta1(0, {1: mpq(1)})
    with pytest.raises(ValueError):
        T.make_spark(0, {1: mpq(1)}, {})


@pytest.mark.parametrize("seed, name", list(enumerate(["synthetic-T1", "point", "torus1", "disk"])))
def test_deltas_are_representative_independent(seed, name):
    T = triple(name)
    rng = random.Random(seed)
    for _ in range(100):
        k = rng.randint(-1, 1)
        v = random_spark(T, k, rng)
        w = vadd(v, random_boundary(T, k, rng))
        assert T.delta1(k, v) == T.delta1(k, w)
        diff = vadd(T.delta2(k, v), T.delta2(k, w), -1)
        assert T.I.coboundaries(k + 1).contains(diff)
        assert T.same_class(k, v, w)


def test_grid_examples():
    g = grid_3x3(triple("synthetic-T1"), 0)
    assert g.exact
    inv = g.invariants()
    assert inv["Hhat"] == inv["H_G"] == "Q/Z + Z"
    assert inv["Z_I"] == "0"
    g = grid_3x3(triple("point"), 0)
    assert g.exact and g.invariants()["Hhat_E"] == "Q/Z"
    assert all(x == "0" for k, x in g.invariants().items() if k in ("Ker_I", "H_I", "H_IE"))


def test_acyclic_triple_grid():
    F = CochainComplex("QQ", {0: 1, 1: 1}, {0: M([[1]])})
    I = CochainComplex("ZZ", {})
    T = SparkComplexTriple(F, F, I, ComplexMorphism.identity(F), ComplexMorphism(I, F, {}))
    assert T.validate().passed
    # the cohomological corners vanish, but sparks still see the non-closed E^0:
    # Hhat^0 = E^0 / Z^0(E) = Q, carried isomorphically onto dE^0
    for k in range(-1, 3):
        g = grid_3x3(T, k)
        assert g.exact
        inv = g.invariants()
        for key in ("H_E/H_IE", "H_G", "Ker_I", "H_I", "H_IE"):
            assert inv[key] == "0"
        expected = "Q" if k == 0 else "0"
        assert inv["Hhat"] == inv["Hhat_E"] == inv["dE"] == inv["Z_I"] == expected


def test_identity_induces_identity():
    T = triple("synthetic-T1")
    h = induced_map(SparkMorphism.identity(T), 0)
    assert h.is_isomorphism()
    assert same_map(h, induced_map(SparkMorphism.identity(T), 0))


def test_composition_law():
    M2 = model("torus2")
    full_to_2 = M2.level_projection(2)
    two_to_1 = SparkMorphism(M2.triple(2), M2.triple(1), M2.projection(1, 2), M2.E_map(1, 2),
                             ComplexMorphism.identity(M2.triple(2).I))
    direct = M2.level_projection(1)
    comp = two_to_1.compose(full_to_2)
    for k in range(-1, 4):
        gf = induced_map(comp, k)
        assert same_map(gf, induced_map(two_to_1, k).compose(induced_map(full_to_2, k)))
        assert same_map(gf, induced_map(direct, k))


def test_non_commuting_morphism_rejected():
    T = triple("synthetic-T1")
    with pytest.raises(ComplexError):
        SparkMorphism(T, T, ComplexMorphism(T.F, T.F, {0: M([[2, 0], [0, 1]])}, check=False),
                      ComplexMorphism.identity(T.E), ComplexMorphism.identity(T.I))


def test_kernel_representatives_examples():
    M1 = model("torus1")
    # the top level keeps everything, so the kernel is trivial
    top = M1.level_projection(M1.max_level + 1)
    assert all(not kernel_representatives(top, k) for k in range(-1, 4))
    reps = kernel_representatives(M1.level_projection(1), 1)
    assert reps and all(r.ok for r in reps)
    # the representatives are forms of holomorphic degree at least 1
    T = M1.triple()
    Pi = M1.level_projection(1)
    for r in reps:
        assert not Pi.cone_matrix(1).apply(r.representative)
        assert T.same_class(1, r.representative, r.generator)
    P = SparkMorphism.identity(triple("point"))
    assert not kernel_representatives(P, 0)
