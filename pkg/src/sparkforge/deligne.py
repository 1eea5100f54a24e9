"""Čech resolution of the Deligne complex ZZ -> Ω^0 -> ... -> Ω^{p-1} on a
finite model, the Beilinson cup product, and the comparison of the two
Deligne product formulas (spark route vs. Beilinson route).

Degree bookkeeping: ZZ sits in sheaf degree 0 and Ω^j in sheaf degree j+1,
so a cochain with values in Ω^j on an i-simplex has total degree i + j + 1.
A Deligne cochain is a pair ``(r, a)``: r is an integer Čech cochain
``{simplex: int}`` and a a form cochain ``{(simplex, basis): QQi}`` with only
holomorphic (j,0) basis elements, j < p.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .cech_models import CechModel, ModelError, _acc, _add
from .complexes import CochainComplex
from .exact_linalg import (QQi, QZHom, QZModule, SparseMatrix, complexify_vector, mpq,
                           nullspace, realify_vector, solve, vadd)


class LiftError(RuntimeError):
    """No untruncated lift with the required shape exists (would falsify surjectivity)."""


@dataclass
class DeligneCochain:
    p: int
    degree: int
    r: dict = field(default_factory=dict)
    a: dict = field(default_factory=dict)

    def __add__(self, other):
        r = dict(self.r)
        for s, n in other.r.items():
            r[s] = r.get(s, 0) + n
            if not r[s]:
                del r[s]
        return DeligneCochain(self.p, self.degree, r, _add(self.a, other.a))

    def scale(self, c: int):
        return DeligneCochain(self.p, self.degree, {s: n * c for s, n in self.r.items() if n * c},
                              {k: z * c for k, z in self.a.items() if z * c})

    def is_zero(self):
        return not self.r and not self.a


class DeligneDoubleComplex:
    """Total complex M_p of C^*(nerve, ZZ_D(p))."""

    def __init__(self, model: CechModel, p: int):
        if p < 0:
            raise ValueError("level must be >= 0")
        self.model, self.p = model, p
        A = model.A
        self.hol = {j: A.holomorphic(j) for j in range(min(p, A.n + 1))}
        self.sheaf_degree = {}
        for j, bs in self.hol.items():
            for b in bs:
                self.sheaf_degree[b] = j + 1
        N = model.nerve
        self.forms: dict = {}
        self.ints: dict = {}
        for si in range(len(N.simplices)):
            i = N.dimension(si)
            self.ints.setdefault(i, []).append(si)
            for j, bs in self.hol.items():
                for b in bs:
                    self.forms.setdefault(i + j + 1, []).append((si, b))
        for k in self.forms:
            self.forms[k].sort(key=lambda sb: (N.dimension(sb[0]), sb[0], sb[1]))
        self.fpos = {k: {sb: t for t, sb in enumerate(lst)} for k, lst in self.forms.items()}
        self.ipos = {k: {s: t for t, s in enumerate(lst)} for k, lst in self.ints.items()}
        self._complex = None

    # -- differential
    def delta(self, x: DeligneCochain) -> DeligneCochain:
        M, p = self.model, self.p
        N = M.nerve
        k = x.degree
        r = M.nerve_integer_delta(x.r)
        a = M.delta(x.a)
        if p >= 1:
            u = M.A.unit
            sign = -1 if k % 2 else 1
            for s, n in x.r.items():
                _acc(a, (s, u), QQi(sign * n))
        for (si, b), z in x.a.items():
            j = self.sheaf_degree[b] - 1
            if j < p - 1:
                i = N.dimension(si)
                for bb, w in M.A.d({b: z}, "del").items():
                    _acc(a, (si, bb), -w if i % 2 else w)
        return DeligneCochain(p, k + 1, r, a)

    # -- coordinates: realified forms first, then integers
    def rank(self, k):
        return 2 * len(self.forms.get(k, [])) + len(self.ints.get(k, []))

    def to_vector(self, x: DeligneCochain) -> dict:
        k = x.degree
        fp = self.fpos.get(k, {})
        cv = {}
        for sb, z in x.a.items():
            if sb not in fp:
                raise ModelError(f"component {sb} is not a level-{self.p} Deligne cochain")
            cv[fp[sb]] = z
        v = realify_vector(cv)
        off = 2 * len(self.forms.get(k, []))
        ip = self.ipos.get(k, {})
        for s, n in x.r.items():
            v[off + ip[s]] = mpq(n)
        return v

    def from_vector(self, k, v: dict) -> DeligneCochain:
        off = 2 * len(self.forms.get(k, []))
        fv = {i: x for i, x in v.items() if i < off}
        lst = self.forms.get(k, [])
        a = {lst[j]: z for j, z in complexify_vector(fv).items()}
        ints = self.ints.get(k, [])
        r = {}
        for i, x in v.items():
            if i >= off and x:
                if x.denominator != 1:
                    raise ValueError("integer part is not integral")
                r[ints[i - off]] = int(x)
        return DeligneCochain(self.p, k, r, a)

    @property
    def complex(self) -> CochainComplex:
        if self._complex is None:
            ks = sorted(set(self.forms) | set(self.ints))
            degs, diff, zidx = {}, {}, {}
            for k in ks:
                degs[k] = self.rank(k)
                off = 2 * len(self.forms.get(k, []))
                zidx[k] = tuple(range(off, off + len(self.ints.get(k, []))))
            for k in ks:
                cols = {}
                for t in range(degs[k]):
                    x = self.from_vector(k, {t: mpq(1)}) if t >= 2 * len(self.forms.get(k, [])) else None
                    if x is None:
                        # realified coordinate: real or imaginary unit on one complex slot
                        sb = self.forms[k][t // 2]
                        x = DeligneCochain(self.p, k, {}, {sb: QQi(0, 1) if t % 2 else QQi(1)})
                    col = self.to_vector(self.delta(x))
                    if col:
                        cols[t] = col
                diff[k] = SparseMatrix(self.rank(k + 1), degs[k], cols)
            self._complex = CochainComplex("mixed", degs, diff, zidx)
        return self._complex

    def cohomology(self, q) -> QZModule:
        return self.complex.cohomology(q)

    # -- random cocycles
    def random_cocycle(self, k, rng: random.Random, size=3) -> DeligneCochain:
        Z = self.complex.cocycles(k)
        v: dict = {}
        for g in Z.lat:
            c = rng.randint(-size, size)
            if c:
                v = vadd(v, g, c)
        for g in Z.div:
            c = mpq(rng.randint(-size, size), rng.randint(1, 3))
            if c:
                v = vadd(v, g, c)
        return self.from_vector(k, v)

    def random_cochain(self, k, rng: random.Random, size=3) -> DeligneCochain:
        v = {}
        off = 2 * len(self.forms.get(k, []))
        for t in range(self.rank(k)):
            if rng.random() < 0.3:
                v[t] = mpq(rng.randint(-size, size)) if t >= off else mpq(rng.randint(-size, size), rng.randint(1, 3))
        return self.from_vector(k, {t: x for t, x in v.items() if x})


def deligne_cohomology(model: CechModel, p: int, q: int) -> QZModule:
    return DeligneDoubleComplex(model, p).cohomology(q)


def beilinson_cup(model: CechModel, x: DeligneCochain, y: DeligneCochain) -> DeligneCochain:
    """x·y if x is integral; x ∧ ∂y if x has positive sheaf degree and y sits
    in the top sheaf degree q (for q = 0 that degree is ZZ itself and the term
    is x·y); 0 otherwise.  Čech sign (-1)^{u·i'} with u the
    sheaf degree of the left factor and i' the Čech degree of the right one."""
    N, A = model.nerve, model.A
    q = y.p
    out_r = model.integer_cup(x.r, y.r)
    out_a = model.cup(model.integer_to_forms(x.r), y.a)
    if q >= 1 and x.a:
        top = {}
        for (sj, b), z in y.a.items():
            if A.bidegree(b)[0] == q - 1:
                for bb, w in A.d({b: z}, "del").items():
                    _acc(top, (sj, bb), w)
        if top:
            # fold the Čech sign (-1)^{i'} into dy so the form cup supplies (-1)^{j i'}
            dy = {}
            for (sj, bb), z in top.items():
                dy[(sj, bb)] = -z if N.dimension(sj) % 2 else z
            out_a = _add(out_a, model.cup(x.a, dy))
    elif q == 0 and x.a and y.r:
        # ZZ(0) = ZZ has no del, so y acts by multiplication
        out_a = _add(out_a, model.cup(x.a, _folded_integral(model, y.r)))
    return DeligneCochain(x.p + q, x.degree + y.degree, out_r, out_a)


# ---------------------------------------------------------------- phi and lifts

def _folded_integral(model: CechModel, r: dict) -> dict:
    """Integer cochain as 0-forms, with the Čech sign (-1)^dim folded in."""
    u = model.A.unit
    return {(s, u): QQi(-n if model.nerve.dimension(s) % 2 else n) for s, n in r.items()}


def phi_vector(model: CechModel, x: DeligneCochain) -> dict:
    """phi_p(r + a) = (a, (-1)^k r) as a G^{k-1} vector of the level-p triple."""
    k, p = x.degree, x.p
    sign = -1 if k % 2 else 1
    R = {s: sign * n for s, n in x.r.items()}
    return model.spark_vector(k - 1, x.a, R, p)


def phi_hom(model: CechModel, p: int, k: int) -> QZHom:
    """phi_p on H^k(M_p) -> ker delta_1 inside the level-p spark group of degree k-1."""
    Dc = DeligneDoubleComplex(model, p)
    C = Dc.complex
    T = model.triple(p)
    cols = {}
    for t in range(C.rank(k)):
        x = Dc.from_vector(k, {t: mpq(1)}) if t >= 2 * len(Dc.forms.get(k, [])) else \
            DeligneCochain(p, k, {}, {Dc.forms[k][t // 2]: QQi(0, 1) if t % 2 else QQi(1)})
        cols[t] = phi_vector(model, x) if (x.a or x.r) else {}
    G = T.G
    mat = SparseMatrix(G.rank(k - 1), C.rank(k), {t: c for t, c in cols.items() if c})
    ker_delta1 = QZModule(G.cocycles(k - 1), T.boundaries(k - 1), G.rank(k - 1) - len(G.integral_coords(k - 1)),
                          len(G.integral_coords(k - 1)))
    return QZHom(C.cohomology(k), ker_delta1, mat)


def _kernel_of_projection(model: CechModel, p, k):
    """Global untruncated forms of degree k killed by pi_p (vectors in F_inf)."""
    E, incl = model.E(None)
    pr = model.projection(p)
    comp = pr.at(k) @ incl.at(k)
    out = []
    for c in nullspace(comp):
        v = incl.at(k).apply(c)
        if v:
            out.append(v)
    return out


def lift(model: CechModel, p: int, k: int, a: dict, R: dict):
    """Untruncated A with pi_p A = a and D A = e - R, pi_p e = 0, e global.

    a is a level-p form cochain of degree k, R an integer cochain of degree k+1.
    Returns (A, e) as form cochains.
    """
    lay, _ = model.layout(None)
    cols = []
    free = []
    for j, (si, b) in enumerate(lay.get(k, [])):
        if model.A.bidegree(b)[0] >= p:
            for part in (0, 1):
                free.append(2 * j + part)
    F = model.F(None)
    for t in free:
        cols.append(F.d(k).col(t))
    ekers = _kernel_of_projection(model, p, k + 1)
    for v in ekers:
        cols.append({i: -x for i, x in v.items()})
    rhs_cochain = _add(model.integer_to_forms(R), model.D(a), 1)
    rhs = {i: -x for i, x in model.to_vector(rhs_cochain, k + 1, None).items()}
    n = F.rank(k + 1)
    Mx = SparseMatrix.from_columns(n, cols) if cols else SparseMatrix(n, 0)
    if not rhs:
        return dict(a), {}
    sol = solve(Mx, rhs, "QQ") if cols else None
    if sol is None:
        raise LiftError(f"no lift in degree {k} at level {p}")
    Avec = model.to_vector(a, k, None)
    for idx, x in sol.items():
        if idx < len(free):
            Avec[free[idx]] = Avec.get(free[idx], 0) + x
    e = {}
    for idx, x in sol.items():
        if idx >= len(free):
            e = vadd(e, ekers[idx - len(free)], x)
    return model.to_cochain(Avec, k, None), model.to_cochain(e, k + 1, None)


# ---------------------------------------------------------------- products

@dataclass
class ProductComparison:
    k: int
    l: int
    p: int
    q: int
    identity_holds: bool
    classes_equal: bool
    residual: dict
    certificate: dict
    beilinson: DeligneCochain
    spark_vector: dict
    level: int

    def as_dict(self):
        return {"k": self.k, "l": self.l, "p": self.p, "q": self.q,
                "identity_holds": self.identity_holds, "classes_equal": self.classes_equal,
                "residual_terms": len(self.residual), "certificate_terms": len(self.certificate)}


def corner(model: CechModel, b: dict, q: int) -> dict:
    """Db - D_q b: for a holomorphic b this is the signed ∂ of its top piece."""
    full = model.D(b)
    return {k: z for k, z in full.items() if model.A.bidegree(k[1])[0] >= q}


def product_via_beilinson(model: CechModel, x: DeligneCochain, y: DeligneCochain) -> DeligneCochain:
    return beilinson_cup(model, x, y)


def product_via_sparks(model: CechModel, x: DeligneCochain, y: DeligneCochain):
    """Lift phi(x), phi(y) to untruncated sparks and multiply; returns
    (level-(p+q) G-vector of degree k+l-1, lifts)."""
    k, l, p, q = x.degree, y.degree, x.p, y.p
    R = {s: (-1) ** k * n for s, n in x.r.items()}
    S = {s: (-1) ** l * n for s, n in y.r.items()}
    A, e = lift(model, p, k - 1, x.a, R)
    B, f = lift(model, q, l - 1, y.a, S)
    u = model.spark_vector(k - 1, A, R, None)
    v = model.spark_vector(l - 1, B, S, None)
    prod = model.spark_product(k - 1, u, l - 1, v)
    level = p + q
    projected = model.project_level(k + l - 1, prod, level)
    return projected, {"A": A, "e": e, "B": B, "f": f}


def compare_products(model: CechModel, x: DeligneCochain, y: DeligneCochain) -> ProductComparison:
    """Check r∪b + a∪corner(b) = π_{p+q}(A∪f + r∪B) + (-1)^k D_{p+q}(a∪(B-b)).

    At q = 0 the left side also carries a∪s, s the sign-folded integral part of y.
    """
    k, l, p, q = x.degree, y.degree, x.p, y.p
    level = p + q
    spark, lifts = product_via_sparks(model, x, y)
    A, B, f = lifts["A"], lifts["B"], lifts["f"]
    r_forms = model.integer_to_forms(x.r)
    lhs = _add(model.cup(r_forms, y.a), model.cup(x.a, corner(model, y.a, q)))
    if q == 0:
        lhs = _add(lhs, model.cup(x.a, _folded_integral(model, y.r)))
    c = model.cup(x.a, _add(B, y.a, -1))
    rhs = model.project(_add(model.cup(A, f), model.cup(r_forms, B)), level)
    sign = -1 if k % 2 else 1
    rhs = _add(rhs, model.D(c, level), sign)
    residual = _add(lhs, rhs, -1)
    bx = beilinson_cup(model, x, y)
    T = model.triple(level)
    bvec = phi_vector(model, bx)
    classes_equal = T.same_class(k + l - 1, bvec, spark)
    return ProductComparison(k, l, p, q, not residual, classes_equal, residual,
                             model.project(c, level), bx, spark, level)


def unit_cocycle(model: CechModel, p: int) -> DeligneCochain:
    """Constant integer 0-cochain 1 (with the matching -1 in Ω^0 on edges absent)."""
    Dc = DeligneDoubleComplex(model, p)
    r = {s: 1 for s in model.nerve.of_dim(0)}
    x = DeligneCochain(p, 0, r, {})
    if not Dc.delta(x).is_zero():
        # ZZ -> Ω^0 is injective, so the unit of Deligne degree 0 only exists at p = 0
        raise ModelError("the constant 1 is a cocycle only at level 0")
    return x
