"""Spark complexes, spark class groups and the 3x3 grid.

A triple (F, E, I) comes with an inclusion E -> F and a map psi: I -> F.
Sparks of degree k live in the cone G^k = F^k + I^{k+1}; a spark is a pair
(a, r) whose cone differential lands in E^{k+1} + 0.  Everything is
represented as vectors in G^k coordinates: F^k first, then I^{k+1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .complexes import CochainComplex, ComplexError, ComplexMorphism, cone, is_quasi_isomorphism
from .exact_linalg import (Echelon, QZGroup, QZHom, QZModule, SparseMatrix, column_reduce,
                           is_exact_at, lattice_solve, mpq, nullspace, preimage, same_map,
                           vadd, vsum)


class TierError(RuntimeError):
    pass


@dataclass
class Violation:
    axiom: str
    degree: int | None
    witness: dict | None
    detail: str = ""

    def as_dict(self):
        from .exact_linalg import qstr
        w = None if self.witness is None else {str(i): qstr(v) for i, v in sorted(self.witness.items())}
        return {"axiom": self.axiom, "degree": self.degree, "witness": w, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def failed_axioms(self):
        return sorted({v.axiom for v in self.violations})

    def as_dict(self):
        return {"passed": self.passed, "violations": [v.as_dict() for v in self.violations]}


@dataclass
class Spark:
    degree: int
    a: dict
    r: dict
    e: dict

    def vector(self, nF):
        v = dict(self.a)
        for i, x in self.r.items():
            v[nF + i] = x
        return v


class SparkComplexTriple:
    def __init__(self, F: CochainComplex, E: CochainComplex, I: CochainComplex,
                 incl: ComplexMorphism, psi: ComplexMorphism, name: str = "triple"):
        self.F, self.E, self.I = F, E, I
        self.incl, self.psi = incl, psi
        self.name = name
        self._cache: dict = {}
        self._report = None

    # ------------------------------------------------------------ basics
    @cached_property
    def G(self) -> CochainComplex:
        return cone(self.psi)

    def nF(self, k):
        return self.F.rank(k)

    @property
    def top(self):
        return max(list(self.F.window) + list(self.I.window) + [0])

    def E_span(self, k) -> list[dict]:
        m = self.incl.at(k)
        return [m.col(j) for j in range(m.ncols)]

    def E_group(self, k) -> QZGroup:
        key = ("Eg", k)
        if key not in self._cache:
            self._cache[key] = QZGroup(self.F.rank(k), self.E_span(k))
        return self._cache[key]

    def D(self, k) -> SparseMatrix:
        return self.G.d(k)

    def split(self, k, v: dict):
        n = self.nF(k)
        a = {i: x for i, x in v.items() if i < n}
        r = {i - n: x for i, x in v.items() if i >= n}
        return a, r

    def join(self, k, a: dict, r: dict) -> dict:
        n = self.nF(k)
        v = dict(a)
        for i, x in r.items():
            v[n + i] = mpq(x)
        return v

    def proj_I(self, k) -> SparseMatrix:
        """G^k -> I^{k+1}."""
        n, m = self.nF(k), self.I.rank(k + 1)
        return SparseMatrix(m, n + m, {n + i: {i: 1} for i in range(m)})

    def embed_F(self, k) -> SparseMatrix:
        """F^k -> G^k."""
        n, m = self.nF(k), self.I.rank(k + 1)
        return SparseMatrix(n + m, n, {i: {i: 1} for i in range(n)})

    def delta1_matrix(self, k) -> SparseMatrix:
        """G^k -> F^{k+1}, (a, r) -> da + psi(r)."""
        cols = {}
        for j, c in self.D(k).cols.items():
            cc = {i: x for i, x in c.items() if i < self.nF(k + 1)}
            if cc:
                cols[j] = cc
        return SparseMatrix(self.nF(k + 1), self.G.rank(k), cols)

    # ------------------------------------------------------------ validation
    def validate(self) -> ValidationReport:
        if self._report is not None:
            return self._report
        rep = ValidationReport()
        for name, m in (("incl", self.incl), ("psi", self.psi)):
            bad = m.commutes()
            for k in bad:
                rep.violations.append(Violation("cochain-map", k, None, f"{name} does not commute with d"))
        # axiom 1: psi(I^k) ∩ E^k = 0 for k > 0
        for k in self.I.window:
            if k <= 0 or not self.I.rank(k):
                continue
            Ik = self.I.full_group(k)
            inside = preimage(Ik, self.psi.at(k), self.E_group(k))
            for g in inside.div + inside.lat:
                w = self.psi.at(k).apply(g)
                if w:
                    rep.violations.append(Violation("axiom-1", k, w, "psi(I^k) meets E^k"))
                    break
        # axiom 2: E -> F quasi-isomorphism
        qi = is_quasi_isomorphism(self.incl)
        for k, r in qi.degrees.items():
            if not (r["well_defined"] and r["injective"] and r["surjective"]):
                w = None
                if not r["surjective"]:
                    h = self.incl.induced(k)
                    for g in h.target.X.div + h.target.X.lat:
                        if not h.image_group().contains(g):
                            w = g
                            break
                elif not r["injective"]:
                    h = self.incl.induced(k)
                    K = h.kernel_group()
                    for g in K.div + K.lat:
                        if not h.source.R.contains(g):
                            w = self.incl.at(k).apply(g) or g
                            break
                rep.violations.append(Violation(
                    "axiom-2", k, w, f"H^{k}(E)={r['source']} -> H^{k}(F)={r['target']}"
                    f" injective={r['injective']} surjective={r['surjective']}"))
        # axiom 3: psi injective on I^0
        ker = [v for v in nullspace(self.psi.at(0)) if v] if self.I.rank(0) else []
        if ker:
            # scale to an integral witness
            from math import lcm
            v = ker[0]
            den = 1
            for x in v.values():
                den = lcm(den, int(x.denominator))
            rep.violations.append(Violation("axiom-3", 0, {i: x * den for i, x in v.items()},
                                             "psi is not injective on I^0"))
        self._report = rep
        return rep

    def tier(self) -> str:
        return "strict" if self.validate().passed else "model"

    def require(self, tier: str):
        if tier == "strict" and not self.validate().passed:
            raise TierError(f"{self.name}: axioms fail {self.validate().failed_axioms()}; use tier=model")

    # ------------------------------------------------------------ groups
    def spark_set(self, k) -> QZGroup:
        key = ("S", k)
        if key not in self._cache:
            tgt = QZGroup(self.G.rank(k + 1), self.E_span(k + 1))
            self._cache[key] = preimage(self.G.full_group(k), self.D(k), tgt)
        return self._cache[key]

    def boundaries(self, k) -> QZGroup:
        return self.G.coboundaries(k)

    def spark_group(self, k, tier: str = "model") -> QZModule:
        self.require(tier)
        key = ("Hhat", k)
        if key not in self._cache:
            n = self.G.rank(k)
            z = len(self.G.integral_coords(k))
            self._cache[key] = QZModule(self.spark_set(k), self.boundaries(k), n - z, z)
        return self._cache[key]

    def is_spark(self, k, v: dict) -> bool:
        return self.spark_set(k).contains(v)

    def make_spark(self, k, a: dict, r: dict) -> Spark:
        v = self.join(k, a, r)
        if not self.is_spark(k, v):
            raise ValueError("representative is not a spark")
        a, r = self.split(k, v)
        return Spark(k, a, r, self.delta1(k, v))

    def delta1(self, k, v: dict) -> dict:
        if not self.is_spark(k, v):
            raise ValueError("representative is not a spark")
        return self.delta1_matrix(k).apply(v)

    def delta2(self, k, v: dict) -> dict:
        if not self.is_spark(k, v):
            raise ValueError("representative is not a spark")
        return self.proj_I(k).apply(v)

    def same_class(self, k, u: dict, v: dict) -> bool:
        return self.boundaries(k).contains(vadd(u, v, -1))

    def Z_I(self, k) -> QZGroup:
        """{e in E^k : e = da + psi(r), dr = 0} inside F^k."""
        key = ("ZI", k)
        if key not in self._cache:
            dF = self.F.full_group(k - 1).image(self.F.d(k - 1))
            psiZ = self.I.cocycles(k).image(self.psi.at(k))
            Y = dF + psiZ
            self._cache[key] = preimage(self.E_group(k), SparseMatrix.identity(self.nF(k)), Y)
        return self._cache[key]

    def dE(self, k) -> QZGroup:
        """d(E^k) inside F^{k+1}."""
        return self.E_group(k).image(self.F.d(k))

    def type_a_representative(self, k, v: dict):
        """For a class with delta2 = 0: some a in E^k with (a, 0) in the same class."""
        E = [self.embed_F(k).apply(e) for e in self.E_span(k)]
        for a in _type_a_candidates(self, k, v, E, self.boundaries(k)):
            return {i: x for i, x in a.items() if i < self.nF(k)}
        return None


def _type_a_candidates(T, k, v, E, B):
    # solve v = sum x_i E_i + w with w in B (div rational, lat integral)
    nE = len(E)
    WE = QZGroup(T.G.rank(k), E + B.div)
    r = WE._ech.reduce(v)
    n = lattice_solve(B.lat, r) if r else [0] * len(B.lat)
    if n is None:
        return
    rest = vadd(v, vsum((mpq(c), g) for c, g in zip(n, B.lat)), -1)
    e, _ = column_reduce(E + B.div)
    if e.reduce(rest):
        return
    coeffs: dict = {}
    for p in rest:
        if p in e.rows:
            for j, c in e.combos[p].items():
                coeffs[j] = coeffs.get(j, 0) + rest[p] * c
    a = vsum((c, E[j]) for j, c in coeffs.items() if j < nE)
    yield a


# ---------------------------------------------------------------- grid

@dataclass
class GridResult:
    degree: int
    groups: dict
    maps: dict
    verdicts: dict

    @property
    def exact(self):
        return all(self.verdicts.values())

    def invariants(self):
        return {k: str(m.invariants) for k, m in self.groups.items()}

    def as_dict(self):
        return {"degree": self.degree, "groups": self.invariants(),
                "verdicts": {k: bool(v) for k, v in self.verdicts.items()}, "exact": self.exact}


GRID_NAMES = [["H_E/H_IE", "Hhat_E", "dE"], ["H_G", "Hhat", "Z_I"], ["Ker_I", "H_I", "H_IE"]]


def section_matrix(T: SparkComplexTriple, k) -> SparseMatrix:
    """Linear map I^k -> F^k sending a basis of Z^k(I) to E-representatives
    of psi_* of the class."""
    nI, nF = T.I.rank(k), T.nF(k)
    basis = T.I.cocycles(k).lat
    E = T.E_span(k)
    dF = T.F.d(k - 1)
    cols = E + [dF.col(j) for j in range(dF.ncols)]
    e, _ = column_reduce(cols)
    imgs = []
    for rj in basis:
        target = T.psi.at(k).apply(rj)
        if e.reduce(target):
            raise ArithmeticError("psi-class not represented in E (axiom 2 fails)")
        coeffs: dict = {}
        for p in target:
            if p in e.rows:
                for j, c in e.combos[p].items():
                    coeffs[j] = coeffs.get(j, 0) + target[p] * c
        imgs.append(vsum((c, E[j]) for j, c in coeffs.items() if j < len(E)))
    # extend the basis of Z^k(I) to a QQ-basis of I^k
    ext = Echelon(track=True)
    for i, b in enumerate(basis):
        ext.add(b, label=i)
    for u in range(nI):
        ext.add({u: mpq(1)}, label=len(basis) + u)
    out = {}
    for u in range(nI):
        # the unit vector is a pivot row's own input, so its coordinates are
        # read off by reducing it against the tracked basis
        cc: dict = {}
        residual_combo = {len(basis) + u: mpq(1)}
        ext.reduce({u: mpq(1)}, residual_combo)
        for j, y in residual_combo.items():
            cc[j] = -y
        cc[len(basis) + u] = cc.get(len(basis) + u, 0) + 1
        col = vsum((y, imgs[j]) for j, y in cc.items() if j < len(basis) and y)
        if col:
            out[u] = col
    return SparseMatrix(nF, nI, out)


def grid_3x3(T: SparkComplexTriple, k: int, tier: str = "model") -> GridResult:
    T.require(tier)
    nFk, nFk1 = T.nF(k), T.nF(k + 1)
    nI1 = T.I.rank(k + 1)
    nG = T.G.rank(k)
    zG = len(T.G.integral_coords(k))
    zero_F1 = QZGroup.zero(nFk1)
    closedE = preimage(T.E_group(k), T.F.d(k), zero_F1)
    ZIk = T.Z_I(k)
    ZIk1 = T.Z_I(k + 1)
    dEk = T.dE(k)
    S = T.spark_set(k)
    B = T.boundaries(k)
    dI = T.I.coboundaries(k + 1)
    SE = preimage(S, T.proj_I(k), dI)
    ZI_I = T.I.cocycles(k + 1)
    dFk = T.F.full_group(k).image(T.F.d(k))
    kerI = preimage(ZI_I, T.psi.at(k + 1), dFk)

    g = {
        "H_E/H_IE": QZModule(closedE, ZIk, nFk, 0),
        "Hhat_E": QZModule(SE, B, nG - zG, zG),
        "dE": QZModule(dEk, None, nFk1, 0),
        "H_G": T.G.cohomology(k),
        "Hhat": T.spark_group(k),
        "Z_I": QZModule(ZIk1, None, nFk1, 0),
        "Ker_I": QZModule(kerI, dI, 0, nI1),
        "H_I": T.I.cohomology(k + 1),
        "H_IE": QZModule(ZIk1, dEk, nFk1, 0),
    }
    idG = SparseMatrix.identity(nG)
    d1 = T.delta1_matrix(k)
    maps = {
        ("H_E/H_IE", "Hhat_E"): T.embed_F(k),
        ("Hhat_E", "dE"): d1,
        ("H_G", "Hhat"): idG,
        ("Hhat", "Z_I"): d1,
        ("Ker_I", "H_I"): SparseMatrix.identity(nI1),
        ("H_I", "H_IE"): section_matrix(T, k + 1),
        ("H_E/H_IE", "H_G"): T.embed_F(k),
        ("H_G", "Ker_I"): T.proj_I(k),
        ("Hhat_E", "Hhat"): idG,
        ("Hhat", "H_I"): T.proj_I(k),
        ("dE", "Z_I"): SparseMatrix.identity(nFk1),
        ("Z_I", "H_IE"): SparseMatrix.identity(nFk1),
    }
    homs = {key: QZHom(g[key[0]], g[key[1]], m) for key, m in maps.items()}
    v = {}
    for key, h in homs.items():
        v[f"well_defined {key[0]}->{key[1]}"] = h.is_well_defined()
    lines = [GRID_NAMES[0], GRID_NAMES[1], GRID_NAMES[2],
             [r[0] for r in GRID_NAMES], [r[1] for r in GRID_NAMES], [r[2] for r in GRID_NAMES]]
    for idx, (a, b, c) in enumerate(lines):
        kind = f"row{idx + 1}" if idx < 3 else f"col{idx - 2}"
        f, gg = homs[(a, b)], homs[(b, c)]
        v[f"{kind} injective"] = f.is_injective()
        v[f"{kind} exact"] = is_exact_at(f, gg)
        v[f"{kind} surjective"] = gg.is_surjective()
    # commuting squares
    sq = [("H_E/H_IE", "Hhat_E", "H_G", "Hhat"), ("Hhat_E", "dE", "Hhat", "Z_I"),
          ("H_G", "Hhat", "Ker_I", "H_I"), ("Hhat", "Z_I", "H_I", "H_IE")]
    for tl, tr, bl, br in sq:
        p1 = homs[(tr, br)].compose(homs[(tl, tr)])
        p2 = homs[(bl, br)].compose(homs[(tl, bl)])
        v[f"square {tl}"] = same_map(p1, p2)
    # Hhat_E ≅ E^k / Z_I^k(E)
    EQ = QZModule(T.E_group(k), ZIk, nFk, 0)
    h = QZHom(EQ, g["Hhat_E"], T.embed_F(k))
    v["E/Z_I iso Hhat_E"] = h.is_well_defined() and h.is_isomorphism()
    return GridResult(k, g, homs, v)


# ---------------------------------------------------------------- morphisms

class SparkMorphism:
    """Componentwise maps (m_F, m_E, m_I) between triples."""

    def __init__(self, source: SparkComplexTriple, target: SparkComplexTriple,
                 mF: ComplexMorphism, mE: ComplexMorphism, mI: ComplexMorphism, check=True):
        self.source, self.target = source, target
        self.mF, self.mE, self.mI = mF, mE, mI
        if check:
            bad = self.noncommuting()
            if bad:
                raise ComplexError(f"non-commuting spark morphism: {bad}")

    def noncommuting(self):
        S, T = self.source, self.target
        bad = []
        ks = set(S.F.window) | set(S.I.window) | set(T.F.window)
        for k in sorted(ks):
            if not (self.mF.at(k) @ S.incl.at(k) - T.incl.at(k) @ self.mE.at(k)).is_zero():
                bad.append(("incl", k))
            if not (self.mF.at(k) @ S.psi.at(k) - T.psi.at(k) @ self.mI.at(k)).is_zero():
                bad.append(("psi", k))
        for name, m in (("F", self.mF), ("E", self.mE), ("I", self.mI)):
            for k in m.commutes():
                bad.append((name, k))
        return bad

    def cone_matrix(self, k) -> SparseMatrix:
        S, T = self.source, self.target
        return SparseMatrix.block({(0, 0): self.mF.at(k), (1, 1): self.mI.at(k + 1)},
                                  [T.nF(k), T.I.rank(k + 1)], [S.nF(k), S.I.rank(k + 1)])

    def compose(self, first: "SparkMorphism") -> "SparkMorphism":
        return SparkMorphism(first.source, self.target, self.mF.compose(first.mF),
                             self.mE.compose(first.mE), self.mI.compose(first.mI), check=False)

    @classmethod
    def identity(cls, T: SparkComplexTriple):
        return cls(T, T, ComplexMorphism.identity(T.F), ComplexMorphism.identity(T.E),
                   ComplexMorphism.identity(T.I), check=False)


def induced_map(m: SparkMorphism, k) -> QZHom:
    return QZHom(m.source.spark_group(k), m.target.spark_group(k), m.cone_matrix(k))


@dataclass
class KernelRep:
    generator: dict
    representative: dict | None
    a: dict | None

    @property
    def ok(self):
        return self.representative is not None


def kernel_representatives(m: SparkMorphism, k) -> list[KernelRep]:
    """For each kernel generator, a representative (a, 0) with a in E^k and m_F(a) = 0."""
    h = induced_map(m, k)
    K = h.kernel_group()
    S = m.source
    B = S.boundaries(k)
    kerF = preimage(S.E_group(k), m.mF.at(k), QZGroup.zero(m.target.nF(k)))
    A = [S.embed_F(k).apply(v) for v in kerF.div]
    out = []
    gens = [g for g in K.div + K.lat if not B.contains(g)]
    for gen in gens:
        a = None
        for cand in _type_a_candidates_span(S, k, gen, A, B):
            a = cand
        rep = S.join(k, a, {}) if a is not None else None
        out.append(KernelRep(gen, rep, a))
    return out


def _type_a_candidates_span(T, k, v, A, B):
    for cand in _type_a_candidates(T, k, v, A, B):
        yield {i: x for i, x in cand.items() if i < T.nF(k)}
