import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from sparkforge.chern_weil import (MatrixForm, PolyForm, Scenario, Truncation, beta_kk, bott_pair,
                                   curvature, general_scenario, graded_commutator,
                                   hermitian_connection, hermitian_pair, nadel, polarized_symmetric,
                                   random_11_curvature, random_hermitian, random_poly, sigma_k,
                                   t_form, telescoping, total_chern_form, trace_power,
                                   transgression, type_vanishing, unipotent_scenario,
                                   verify_dbar_exact_component, verify_low_type_vanishing,
                                   weight_cap, whitney_form_check)
from sparkforge.exact_linalg import QQi, mpq

N2, W6 = 2, Truncation(6)


def rand_form(rng, n=N2, W=W6, deg=None):
    deg = rng.randint(0, 3) if deg is None else deg
    gens = rng.sample(range(2 * n), deg)
    return random_poly(rng, n, W, 2, terms=2, constant=QQi(rng.randint(-2, 2))) * \
        PolyForm.monomial(n, W, forms=gens)


def rand_matrix(rng, size=2, deg=None, n=N2, W=W6):
    deg = rng.randint(0, 2) if deg is None else deg
    return MatrixForm([[rand_form(rng, n, W, deg) for _ in range(size)] for _ in range(size)])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_derivations(seed):
    rng = random.Random(seed)
    f, g = rand_form(rng), rand_form(rng)
    assert f.del_().del_().is_zero() and f.delbar().delbar().is_zero()
    assert (f.del_().delbar() + f.delbar().del_()).is_zero()
    sign = -1 if max(f.degrees() or {0}) % 2 else 1
    for D in (PolyForm.del_, PolyForm.delbar, PolyForm.d):
        assert D(f * g) == D(f) * g + (f * D(g)).scale(sign)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_graded_commutativity_and_conjugation(seed):
    rng = random.Random(seed)
    f, g = rand_form(rng), rand_form(rng)
    a, b = max(f.degrees() or {0}), max(g.degrees() or {0})
    assert f * g == (g * f).scale((-1) ** (a * b))
    assert f.conj().conj() == f
    assert (f * g).conj() == f.conj() * g.conj()
    assert f.del_().conj() == f.conj().delbar()


def test_truncation_is_an_ideal_quotient():
    W = Truncation(3)
    z = PolyForm.monomial(1, W, z=(0,))
    dz = PolyForm.monomial(1, W, forms=(0,))
    assert not (z * z * z).is_zero()
    assert (z * z * z * z).is_zero()
    assert (z * z * dz).terms and (z * z * z * dz).is_zero()
    # derivatives lower polynomial degree but raise form degree, so weight is preserved
    assert (z * z * z).del_() == (z * z * dz).scale(3)
    capped = Truncation(10, per_coordinate=1)
    assert (PolyForm.monomial(2, capped, z=(0,)) * PolyForm.monomial(2, capped, forms=(0,))).is_zero()
    assert not (PolyForm.monomial(2, capped, z=(0,)) * PolyForm.monomial(2, capped, forms=(1,))).is_zero()


def test_polyform_json_round_trip():
    rng = random.Random(1)
    for _ in range(10):
        f = rand_form(rng) * t_form(N2, W6)
        assert PolyForm.from_json(N2, W6, json.loads(json.dumps(f.to_json()))) == f


def test_t_integration():
    t = t_form(1, 4)
    f = t * t * PolyForm.monomial(1, 4, z=(0,), c=3)
    assert f.integrate_t() == PolyForm.monomial(1, 4, z=(0,))
    assert f.at_t(2) == PolyForm.monomial(1, 4, z=(0,), c=12)
    assert beta_kk(1) == 1 and beta_kk(2) == mpq(1, 6) and beta_kk(3) == mpq(1, 30)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_matrix_derivations_and_trace_cyclicity(seed):
    rng = random.Random(seed)
    A, B, C = (rand_matrix(rng) for _ in range(3))
    a, b, c = (max(X.degrees() or {0}) for X in (A, B, C))
    assert A.d().d().is_zero()
    assert ((A @ B).d()) == A.d() @ B + (A @ B.d()).scale((-1) ** a)
    assert (A @ B).trace() == (B @ A).trace().scale((-1) ** (a * b))
    assert (A @ B @ C).trace() == (B @ C @ A).trace().scale((-1) ** (a * (b + c)))
    assert A.conj().conj() == A


def test_inverse_examples():
    n, W = 1, Truncation(4)
    I = MatrixForm.identity(2, n, W)
    assert I.inverse() == I
    z, zero = PolyForm.monomial(n, W, z=(0,)), PolyForm(n, W)
    one = PolyForm.const(n, W, 1)
    g = MatrixForm([[one, z], [zero, one]])
    assert g.inverse() == MatrixForm([[one, -z], [zero, one]])
    rng = random.Random(2)
    sc = unipotent_scenario(rng, 2, 2, m=2, r=1)
    gi = sc.g.inverse()
    lower = sc.g - MatrixForm.identity(3, 2, sc.W)
    assert gi == MatrixForm.identity(3, 2, sc.W) - lower
    sc = general_scenario(rng, 2, 2)
    assert sc.g @ sc.g.inverse() == MatrixForm.identity(2, 2, sc.W)
    with pytest.raises(ValueError):
        MatrixForm([[z, zero], [zero, one]]).inverse()


def test_hermitian_connection_examples():
    n, W = 1, Truncation(8)
    assert hermitian_connection(MatrixForm.identity(2, n, W)).is_zero()
    zz = PolyForm.monomial(n, W, z=(0,), zb=(0,))
    one, zero = PolyForm.const(n, W, 1), PolyForm(n, W)
    H = MatrixForm([[one + zz, zero], [zero, one]])
    theta = hermitian_connection(H)
    # z̄ dz / (1 + z z̄) as a geometric series, cut off at weight 8
    expected, power = PolyForm(n, W), one
    for j in range(4):
        expected = expected + (power * PolyForm.monomial(n, W, zb=(0,), forms=(0,))).scale((-1) ** j)
        power = power * zz
    assert theta.rows[0][0] == expected
    assert theta.rows[1][1].is_zero() and theta.types() == {(1, 0)}
    with pytest.raises(ValueError):
        hermitian_connection(MatrixForm([[one, PolyForm.monomial(n, W, z=(0,))], [zero, one]]))


def test_bianchi():
    rng = random.Random(3)
    for _ in range(5):
        th = rand_matrix(rng, deg=1)
        Om = curvature(th)
        assert Om.d() == th @ Om - Om @ th
    assert curvature(MatrixForm.zeros(2, N2, W6)).is_zero()


def test_curvature_along_general_path():
    # θ_t = θ0 + tη with η^{0,1} = -g^{-1}∂̄g, so Ω_t^{0,2} = (t - t²) a∧a for a = g^{-1}∂̄g
    rng = random.Random(4)
    sc = general_scenario(rng, 2, 2)
    _, data = transgression(sc.theta0(), sc.theta1(), 2)
    a = sc.g.inverse() @ sc.g.delbar()
    assert data["eta"].component(0, 1) == -a
    t = t_form(2, sc.W)
    assert data["Omega_t"].component(0, 2) == (a @ a).scale(t - t * t)


def test_curvature_along_unipotent_path():
    rng = random.Random(5)
    for _ in range(3):
        sc = unipotent_scenario(rng, 2, 2)
        _, data = transgression(sc.theta0(), sc.theta1(), 2)
        assert data["Omega_t"].component(0, 2).is_zero()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_polarization_normalization(k):
    """C_k(X..X) = σ_k(X) via traces against principal minors."""
    rng = random.Random(k)
    for size in (2, 3):
        X = rand_matrix(rng, size, deg=2, n=3, W=Truncation(8))
        assert polarized_symmetric(*[X] * k) == sigma_k(X, k)


def test_trace_power_basics():
    rng = random.Random(6)
    A = rand_matrix(rng, deg=1)
    assert trace_power(A) == A.trace()
    B = rand_matrix(rng, deg=1)
    assert trace_power(A, B) == trace_power(B, A).scale(-1)
    assert graded_commutator(A, B) == A @ B + B @ A


def test_whitney_examples():
    rng = random.Random(7)
    W = Truncation(8)
    O1 = random_11_curvature(rng, 2, 3, W, 1)
    zero = MatrixForm.zeros(2, 3, W)
    assert total_chern_form(MatrixForm.block_diag(O1, zero)) == total_chern_form(O1)
    w = [random_poly(rng, 3, W, 1, terms=1, constant=QQi(1)) * PolyForm.monomial(3, W, forms=(i, 3 + i))
         for i in range(3)]
    D = MatrixForm([[w[i] if i == j else PolyForm(3, W) for j in range(3)] for i in range(3)])
    one = PolyForm.const(3, W, 1)
    assert total_chern_form(D) == (one + w[0]) * (one + w[1]) * (one + w[2])
    assert whitney_form_check(O1, random_11_curvature(rng, 2, 3, W, 1)).ok


def test_transgression_trivial_cases():
    rng = random.Random(8)
    th0, th1 = hermitian_pair(rng, 2, 2)
    for kind in ("trace", "chern"):
        assert transgression(th0, th0, 2, kind)[0].is_zero()
    with pytest.raises(ValueError):
        transgression(th0, th1, 2, "pfaffian")


def test_transgression_differential():
    rng = random.Random(9)
    th0, th1 = hermitian_pair(rng, 2, 2)
    th2, _ = hermitian_pair(rng, 2, 2)
    for kind in ("trace", "chern"):
        assert telescoping(th0, th1, th2, 2, kind).ok


@pytest.mark.parametrize("pair", [hermitian_pair, bott_pair])
def test_type_10_pairs(pair):
    rng = random.Random(10)
    for _ in range(3):
        assert type_vanishing(*pair(rng, 2, 2), 2).ok


def test_zero_block_gives_zero_transgression():
    rng = random.Random(11)
    W = Truncation(weight_cap(2, 2, 2))
    sc = unipotent_scenario(rng, 2, 2, A=[[PolyForm(2, W)]])
    T, _ = transgression(sc.theta0(), sc.theta1(), 2)
    assert T.is_zero()
    S, rep = verify_dbar_exact_component(sc)
    assert S.is_zero() and rep.ok


def test_low_type_vanishing_examples():
    rng = random.Random(12)
    rep = verify_low_type_vanishing(unipotent_scenario(rng, 1, 1))
    assert rep.ok
    _, rep = verify_dbar_exact_component(unipotent_scenario(rng, 1, 1))
    assert rep.ok and rep.checks == {"T[0,1]=0": True}
    rep = verify_low_type_vanishing(unipotent_scenario(rng, 2, 2))
    assert rep.ok and rep.checks["trace_T[0,3]=0"] and rep.checks["eta_matches_closed_form"]


def test_dbar_exact_component_with_identity_metric():
    rng = random.Random(13)
    sc = unipotent_scenario(rng, 2, 2, m=2, identity_metric=True)
    S, rep = verify_dbar_exact_component(sc)
    assert rep.ok, rep.as_dict()
    assert rep.checks["[Ω11,η]=t d(η∧η)"]


@pytest.mark.parametrize("m, r", [(2, 1), (1, 2)])
def test_dbar_exact_component_degree_three(m, r):
    # n = 2 has no 5-forms, so n = 3 is the first case with something to check
    sc = unipotent_scenario(random.Random(2), 3, 3, m=m, r=r, identity_metric=True)
    S, rep = verify_dbar_exact_component(sc)
    assert rep.ok, rep.as_dict()
    assert not transgression(sc.theta0(), sc.theta1(), 3)[0].component(2, 3).is_zero()


def test_nadel_examples():
    rng = random.Random(14)
    sc = general_scenario(rng, 1, 1)
    res = nadel(sc)
    assert res.coefficient == -1 and res.match and not res.vacuous
    a = sc.g.inverse() @ sc.g.delbar()
    assert res.form == a.trace().scale(-1)
    sc = general_scenario(rng, 2, 3, terms=3)
    res = nadel(sc)
    assert res.coefficient == mpq(-1, 3) and res.match and not res.form.is_zero()
    W = Truncation(weight_cap(2, 2, 3))
    ident = Scenario(MatrixForm.identity(2, 3, W), random_hermitian(rng, 2, 3, W, 2), 2, 3, 2)
    res = nadel(ident)
    assert res.match and res.form.is_zero() and res.closed_form.is_zero()


def test_nadel_vacuous_flag():
    res = nadel(general_scenario(random.Random(15), 2, 2))
    assert res.vacuous and res.form.is_zero() and res.match


def test_scenario_json_round_trip():
    rng = random.Random(16)
    for sc in (unipotent_scenario(rng, 2, 2), general_scenario(rng, 2, 2, per_coordinate=2)):
        back = Scenario.from_json(json.loads(json.dumps(sc.to_json())))
        assert back.g == sc.g and back.H == sc.H and back.W == sc.W
        assert (back.k, back.n, back.trunc, back.meta) == (sc.k, sc.n, sc.trunc, sc.meta)
