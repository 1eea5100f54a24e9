"""Finite Čech models: nerves, local form algebras, the level-p spark
complexes built from them, cup products and shipped fixtures.

A fiber algebra is spanned by monomials ``z^a zbar^b dz_S dzbar_T``.  The
invariant-form algebra keeps only a = b = 0 (and del = delbar = 0); the
polynomial algebra keeps monomials of weight |a|+|b|+|S|+|T| <= N, with
heavier products set to zero.  Both d-operators preserve weight so the
quotient is again a differential graded algebra.

Cochains are dicts ``{(simplex_index, basis_index): QQi}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .complexes import CochainComplex, ComplexMorphism
from .exact_linalg import (Echelon, QQi, QZGroup, SparseMatrix, column_reduce, complexify_vector,
                           lattice_solve, mpq, nullspace, preimage, realify_matrix, realify_vector)
from .spark_core import SparkComplexTriple, SparkMorphism

INF = 10 ** 6


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- nerves

class Nerve:
    def __init__(self, simplices):
        closed = set()
        for s in simplices:
            s = tuple(sorted(s))
            if len(set(s)) != len(s):
                raise ModelError(f"degenerate simplex {s}")
            for k in range(1, len(s) + 1):
                for f in itertools.combinations(s, k):
                    closed.add(f)
        self.simplices = sorted(closed, key=lambda s: (len(s), s))
        self.index = {s: i for i, s in enumerate(self.simplices)}
        self.vertices = sorted({v for s in self.simplices for v in s})

    @property
    def dim(self):
        return max((len(s) for s in self.simplices), default=0) - 1

    def of_dim(self, r):
        return [i for i, s in enumerate(self.simplices) if len(s) == r + 1]

    def dimension(self, i):
        return len(self.simplices[i]) - 1

    def maximal(self):
        sset = set(self.simplices)
        out = []
        for s in self.simplices:
            if not any(len(t) == len(s) + 1 and set(s) <= set(t) for t in sset):
                out.append(s)
        return out

    def integer_cochains(self) -> CochainComplex:
        """C^*(nerve; ZZ) with the simplicial coboundary."""
        pos = {}
        degs = {}
        for r in range(self.dim + 1):
            for j, i in enumerate(self.of_dim(r)):
                pos[i] = j
            degs[r] = len(self.of_dim(r))
        diff = {}
        for r in range(self.dim):
            cols = {}
            for i in self.of_dim(r + 1):
                s = self.simplices[i]
                for j in range(len(s)):
                    f = s[:j] + s[j + 1:]
                    cols.setdefault(pos[self.index[f]], {})[pos[i]] = (-1) ** j
            diff[r] = SparseMatrix(degs[r + 1], degs[r], cols)
        return CochainComplex("ZZ", degs, diff)

    def spanning_tree(self):
        """BFS spanning tree edges (deterministic)."""
        adj = {v: [] for v in self.vertices}
        for s in self.simplices:
            if len(s) == 2:
                adj[s[0]].append(s[1])
                adj[s[1]].append(s[0])
        seen = {self.vertices[0]}
        queue = [self.vertices[0]]
        tree = []
        while queue:
            v = queue.pop(0)
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
                    tree.append(tuple(sorted((v, w))))
        return tree


def torus_nerve() -> Nerve:
    """Seven-vertex triangulation of the torus."""
    tris = []
    for i in range(7):
        tris.append((i, (i + 1) % 7, (i + 3) % 7))
        tris.append((i, (i + 2) % 7, (i + 3) % 7))
    return Nerve(tris)


def triangle_nerve() -> Nerve:
    return Nerve([(0, 1, 2)])


def circle_nerve() -> Nerve:
    return Nerve([(0, 1), (1, 2), (0, 2)])


def point_nerve() -> Nerve:
    return Nerve([(0,)])


# ---------------------------------------------------------------- fiber algebras

def _merge_sign(A, B):
    """Sign of sorting the concatenation A+B (both sorted), 0 if they overlap."""
    if set(A) & set(B):
        return 0, None
    inv = 0
    for a in A:
        inv += sum(1 for b in B if b < a)
    return (-1) ** inv, tuple(sorted(A + B))


class FormAlgebra:
    """Monomial basis z^a zbar^b dz_S dzbar_T over QQ(i).

    ``polynomial=False`` gives constant-coefficient forms only (del = delbar = 0).
    """

    def __init__(self, n: int, N: int | None = None, polynomial: bool = False, name=None):
        self.n, self.N, self.polynomial = n, N, polynomial
        self.name = name or (f"poly{n}w{N}" if polynomial else f"inv{n}")
        gens = list(range(2 * n))
        keys = []
        for k in range(len(gens) + 1):
            for forms in itertools.combinations(gens, k):
                if polynomial:
                    budget = N - len(forms)
                    if budget < 0:
                        continue
                    for exps in _exponents(2 * n, budget):
                        keys.append((exps, forms))
                else:
                    keys.append(((0,) * (2 * n), forms))
        keys.sort(key=lambda kf: (len(kf[1]), self._holo(kf[1]), sum(kf[0]), kf))
        self.keys = keys
        self.index = {k: i for i, k in enumerate(keys)}

    @staticmethod
    def _count_holo(forms, n):
        return sum(1 for g in forms if g < n)

    def _holo(self, forms):
        return self._count_holo(forms, self.n)

    def __len__(self):
        return len(self.keys)

    def degree(self, i):
        return len(self.keys[i][1])

    def bidegree(self, i):
        f = self.keys[i][1]
        h = self._holo(f)
        return h, len(f) - h

    def weight(self, i):
        e, f = self.keys[i]
        return sum(e) + len(f)

    @property
    def unit(self):
        return self.index[((0,) * (2 * self.n), ())]

    def label(self, i):
        e, f = self.keys[i]
        n = self.n
        parts = []
        for j in range(n):
            if e[j]:
                parts.append(f"z{j+1}^{e[j]}" if e[j] > 1 else f"z{j+1}")
        for j in range(n):
            if e[n + j]:
                parts.append(f"zb{j+1}^{e[n+j]}" if e[n + j] > 1 else f"zb{j+1}")
        for g in f:
            parts.append(f"dz{g+1}" if g < n else f"dzb{g-n+1}")
        return "*".join(parts) or "1"

    # -- structure maps on basis
    def _mul_keys(self, k1, k2):
        (e1, f1), (e2, f2) = k1, k2
        sign, f = _merge_sign(f1, f2)
        if not sign:
            return None
        e = tuple(x + y for x, y in zip(e1, e2))
        if self.polynomial and sum(e) + len(f) > self.N:
            return None
        if not self.polynomial and any(e):
            return None
        return sign, (e, f)

    @cached_property
    def wedge_table(self):
        tab = {}
        for i, k1 in enumerate(self.keys):
            for j, k2 in enumerate(self.keys):
                res = self._mul_keys(k1, k2)
                if res:
                    tab[(i, j)] = (res[0], self.index[res[1]])
        return tab

    def _deriv(self, i, anti: bool):
        if not self.polynomial:
            return {}
        e, f = self.keys[i]
        n = self.n
        out = {}
        for j in range(n):
            var = n + j if anti else j
            if e[var] == 0:
                continue
            g = var  # dz_j has id j, dzbar_j has id n + j
            sign, nf = _merge_sign((g,), f)
            if not sign:
                continue
            ne = list(e)
            ne[var] -= 1
            key = (tuple(ne), nf)
            idx = self.index[key]
            out[idx] = out.get(idx, 0) + sign * e[var]
        return {k: QQi(v) for k, v in out.items() if v}

    @cached_property
    def del_table(self):
        return [self._deriv(i, False) for i in range(len(self))]

    @cached_property
    def delbar_table(self):
        return [self._deriv(i, True) for i in range(len(self))]

    def d(self, v: dict, which="d") -> dict:
        out: dict = {}
        tabs = {"d": (self.del_table, self.delbar_table), "del": (self.del_table,),
                "delbar": (self.delbar_table,)}[which]
        for i, c in v.items():
            for tab in tabs:
                for j, x in tab[i].items():
                    _acc(out, j, c * x)
        return out

    def wedge(self, u: dict, v: dict) -> dict:
        out: dict = {}
        tab = self.wedge_table
        for i, a in u.items():
            for j, b in v.items():
                t = tab.get((i, j))
                if t:
                    _acc(out, t[1], a * b * t[0])
        return out

    def scale_factor(self, i, lam: QQi) -> QQi:
        """Coefficient of the substitution z -> lam z on basis element i."""
        e, f = self.keys[i]
        n = self.n
        hol = sum(e[:n]) + sum(1 for g in f if g < n)
        anti = sum(e[n:]) + sum(1 for g in f if g >= n)
        out = QQi(1)
        lb = lam.conj()
        for _ in range(hol):
            out = out * lam
        for _ in range(anti):
            out = out * lb
        return out

    def holomorphic(self, j):
        """Basis indices spanning holomorphic (j,0)-forms."""
        out = []
        for i in range(len(self)):
            if self.bidegree(i) == (j, 0) and not self.delbar_table[i]:
                out.append(i)
        return out

    def to_json(self):
        return {"n": self.n, "N": self.N, "polynomial": self.polynomial,
                "basis": [self.label(i) for i in range(len(self))],
                "bidegrees": [list(self.bidegree(i)) for i in range(len(self))]}

    def check(self):
        """Exact checks of the DGA axioms on basis elements."""
        for i in range(len(self)):
            v = {i: QQi(1)}
            for a, b in (("del", "del"), ("delbar", "delbar")):
                if self.d(self.d(v, a), b):
                    raise ModelError("d^2 != 0")
            s = _add(self.d(self.d(v, "del"), "delbar"), self.d(self.d(v, "delbar"), "del"))
            if s:
                raise ModelError("del delbar + delbar del != 0")
        return True


def _exponents(m, budget):
    if m == 0:
        yield ()
        return
    for x in range(budget + 1):
        for rest in _exponents(m - 1, budget - x):
            yield (x,) + rest


def _coords_in(e: Echelon, w: dict) -> dict:
    """Coordinates of w (already known to lie in the span) w.r.t. the
    columns fed to ``column_reduce``."""
    out: dict = {}
    for p, x in w.items():
        if p in e.rows:
            for t, c in e.combos[p].items():
                out[t] = out.get(t, 0) + x * c
    return {t: c for t, c in out.items() if c}


def _acc(out, k, v):
    w = out.get(k)
    w = v if w is None else w + v
    if w:
        out[k] = w
    else:
        out.pop(k, None)


def _add(u, v, c=1):
    out = dict(u)
    for k, x in v.items():
        _acc(out, k, x * c if c != 1 else x)
    return out


def _scale(u, c):
    if not c:
        return {}
    return {k: x * c for k, x in u.items() if x * c}


# ---------------------------------------------------------------- coefficient systems

POWERS_OF_I = [QQi(1), QQi(0, 1), QQi(-1), QQi(0, -1)]


class CoefficientSystem:
    """Same algebra on every simplex; restriction along a face inclusion
    tau < sigma is the substitution z -> i^(h(sigma) - h(tau)) z.

    With ``twist=None`` every restriction is the identity.
    """

    def __init__(self, nerve: Nerve, algebra: FormAlgebra, twist: dict | None = None):
        self.nerve = nerve
        self.algebra = algebra
        self.twist = twist

    def lam(self, tau, sigma) -> QQi:
        if not self.twist:
            return QQi(1)
        return POWERS_OF_I[(self.twist[sigma] - self.twist[tau]) % 4]

    def restrict(self, v: dict, tau, sigma) -> dict:
        if not self.twist:
            return v
        lam = self.lam(tau, sigma)
        if lam == 1:
            return v
        A = self.algebra
        return {i: c * A.scale_factor(i, lam) for i, c in v.items()}

    def restriction_matrix(self, tau, sigma):
        A = self.algebra
        lam = self.lam(tau, sigma)
        return {i: A.scale_factor(i, lam) for i in range(len(A))}

    def check(self):
        """Functoriality and compatibility with d and wedge (exact)."""
        A = self.algebra
        N = self.nerve
        for s in N.simplices:
            for t in N.simplices:
                if len(t) < len(s) and set(t) <= set(s):
                    for m in N.simplices:
                        if len(t) < len(m) < len(s) and set(t) <= set(m) <= set(s):
                            for i in range(len(A)):
                                v = {i: QQi(1)}
                                a = self.restrict(self.restrict(v, t, m), m, s)
                                if a != self.restrict(v, t, s):
                                    raise ModelError("restriction is not functorial")
        for s in N.simplices:
            for t in N.simplices:
                if len(t) + 1 == len(s) and set(t) <= set(s):
                    for i in range(len(A)):
                        v = {i: QQi(1)}
                        if self.restrict(A.d(v), t, s) != A.d(self.restrict(v, t, s)):
                            raise ModelError("restriction does not commute with d")
                        for j in range(len(A)):
                            w = {j: QQi(1)}
                            if self.restrict(A.wedge(v, w), t, s) != A.wedge(
                                    self.restrict(v, t, s), self.restrict(w, t, s)):
                                raise ModelError("restriction is not multiplicative")
        return True


# ---------------------------------------------------------------- lattices

@dataclass
class LatticeSpec:
    """Integral subcomplex of the fiber: gens[s] are fiber vectors of degree s."""
    gens: dict

    @classmethod
    def real_coordinates(cls, A: FormAlgebra):
        """ZZ<1, x_j, y_j> in degree 0 and ZZ<dx_j, dy_j> in degree 1 with
        x = (z + zbar)/2 and y = (z - zbar)/(2i).  Only for weight >= 1."""
        n = A.n
        zero = (0,) * (2 * n)
        g0 = [{A.unit: QQi(1)}]
        g1 = []
        half = mpq(1, 2)
        for j in range(n):
            ez = tuple(1 if t == j else 0 for t in range(2 * n))
            ezb = tuple(1 if t == n + j else 0 for t in range(2 * n))
            z, zb = A.index[(ez, ())], A.index[(ezb, ())]
            dz, dzb = A.index[(zero, (j,))], A.index[(zero, (n + j,))]
            g0.append({z: QQi(half), zb: QQi(half)})
            g0.append({z: QQi(0, -half), zb: QQi(0, half)})
            g1.append({dz: QQi(half), dzb: QQi(half)})
            g1.append({dz: QQi(0, -half), dzb: QQi(0, half)})
        return cls({0: g0, 1: g1})

    @classmethod
    def constants(cls, A: FormAlgebra):
        return cls({0: [{A.unit: QQi(1)}]})

    def flat(self):
        out = []
        for s in sorted(self.gens):
            for j, g in enumerate(self.gens[s]):
                out.append((s, j, g))
        return out

    def coords(self, s, v: dict):
        """Integer coordinates of fiber vector v in gens[s] (must exist)."""
        gens = self.gens.get(s, [])
        cols = [realify_vector(g) for g in gens]
        e, _ = column_reduce(cols)
        rv = realify_vector(v)
        if e.reduce(rv):
            raise ModelError("lattice not closed under the structure maps")
        out = _coords_in(e, rv)
        if any(c.denominator != 1 for c in out.values()):
            raise ModelError("lattice map has non-integral matrix")
        return {j: int(c) for j, c in out.items()}


# ---------------------------------------------------------------- models

class CechModel:
    def __init__(self, nerve: Nerve, coeffs: CoefficientSystem, lattice: LatticeSpec | None = None,
                 global_spec="sections", name="model"):
        self.nerve = nerve
        self.coeffs = coeffs
        self.A = coeffs.algebra
        self.lattice = lattice
        self.global_spec = global_spec
        self.name = name
        self._cache: dict = {}

    @property
    def max_level(self):
        return self.A.n + 1

    def level(self, p):
        return min(p, self.max_level) if p is not None else self.max_level

    # -- layout of Tot at level p
    def layout(self, p):
        p = self.level(p)
        key = ("layout", p)
        if key in self._cache:
            return self._cache[key]
        A, N = self.A, self.nerve
        lay: dict = {}
        for si, s in enumerate(N.simplices):
            r = len(s) - 1
            for b in range(len(A)):
                if A.bidegree(b)[0] < p:
                    lay.setdefault(r + A.degree(b), []).append((si, b))
        for k in lay:
            lay[k].sort(key=lambda sb: (N.dimension(sb[0]), sb[0], sb[1]))
        pos = {k: {sb: j for j, sb in enumerate(lst)} for k, lst in lay.items()}
        self._cache[key] = (lay, pos)
        return lay, pos

    def rank(self, k, p):
        lay, _ = self.layout(p)
        return len(lay.get(k, []))

    # -- cochain <-> realified vector
    def to_vector(self, c: dict, k, p) -> dict:
        _, pos = self.layout(p)
        pk = pos.get(k, {})
        out = {}
        for sb, z in c.items():
            j = pk.get(sb)
            if j is None:
                if z:
                    raise ModelError(f"cochain component {sb} outside Tot^{k} at level {p}")
                continue
            out[j] = z
        return realify_vector(out)

    def to_cochain(self, v: dict, k, p) -> dict:
        lay, _ = self.layout(p)
        lk = lay.get(k, [])
        return {lk[j]: z for j, z in complexify_vector(v).items()}

    def cochain_degree(self, c: dict):
        ks = {self.nerve.dimension(s) + self.A.degree(b) for (s, b) in c}
        if len(ks) > 1:
            raise ModelError("inhomogeneous cochain")
        return ks.pop() if ks else None

    # -- operators on cochains
    def delta(self, c: dict) -> dict:
        N, C = self.nerve, self.coeffs
        out: dict = {}
        cofaces = self._cofaces()
        for (si, b), z in c.items():
            tau = N.simplices[si]
            for (sj, j) in cofaces[si]:
                sigma = N.simplices[sj]
                sign = -1 if j % 2 else 1
                for bb, w in C.restrict({b: z}, tau, sigma).items():
                    _acc(out, (sj, bb), w * sign)
        return out

    def _cofaces(self):
        if "cofaces" not in self._cache:
            N = self.nerve
            cf = {i: [] for i in range(len(N.simplices))}
            for sj, s in enumerate(N.simplices):
                for j in range(len(s)):
                    if len(s) > 1:
                        f = s[:j] + s[j + 1:]
                        cf[N.index[f]].append((sj, j))
            self._cache["cofaces"] = cf
        return self._cache["cofaces"]

    def d_fiber(self, c: dict, which="d") -> dict:
        out: dict = {}
        for (si, b), z in c.items():
            for bb, w in self.A.d({b: z}, which).items():
                _acc(out, (si, bb), w)
        return out

    def project(self, c: dict, p) -> dict:
        p = self.level(p)
        return {(s, b): z for (s, b), z in c.items() if self.A.bidegree(b)[0] < p}

    def D(self, c: dict, p=None) -> dict:
        """Total differential delta + (-1)^r d_p."""
        out = self.delta(c)
        for (si, b), z in self.d_fiber(c).items():
            r = self.nerve.dimension(si)
            _acc(out, (si, b), -z if r % 2 else z)
        return self.project(out, p) if p is not None else out

    def cup(self, a: dict, b: dict) -> dict:
        """(a ∪ b)(i0..i_{r+r'}) = (-1)^{s r'} a(i0..ir)| ∧ b(ir..i_{r+r'})|."""
        N, A, C = self.nerve, self.A, self.coeffs
        bya: dict = {}
        for (si, x), z in a.items():
            bya.setdefault(si, {})[x] = z
        byb: dict = {}
        for (si, x), z in b.items():
            byb.setdefault(si, {})[x] = z
        by_first: dict = {}
        for sj, v in byb.items():
            by_first.setdefault(N.simplices[sj][0], []).append((sj, v))
        out: dict = {}
        for si, u in bya.items():
            tau = N.simplices[si]
            # split u by form degree for the sign
            for sj, v in by_first.get(tau[-1], []):
                tau2 = N.simplices[sj]
                sigma = tau + tau2[1:]
                k = N.index.get(sigma)
                if k is None:
                    continue
                rp = len(tau2) - 1
                uu = C.restrict(u, tau, sigma)
                vv = C.restrict(v, tau2, sigma)
                for x, zx in uu.items():
                    sgn = -1 if (A.degree(x) * rp) % 2 else 1
                    for y, zy in vv.items():
                        t = A.wedge_table.get((x, y))
                        if t:
                            _acc(out, (k, t[1]), zx * zy * (sgn * t[0]))
        return out

    def integer_to_forms(self, r: dict) -> dict:
        """ZZ-cochain {simplex: n} -> form cochain n * 1."""
        u = self.A.unit
        return {(s, u): QQi(n) for s, n in r.items() if n}

    def nerve_integer_delta(self, r: dict) -> dict:
        out: dict = {}
        for si, n in r.items():
            for sj, j in self._cofaces()[si]:
                out[sj] = out.get(sj, 0) + (-n if j % 2 else n)
        return {s: n for s, n in out.items() if n}

    def integer_cup(self, r: dict, s: dict) -> dict:
        N = self.nerve
        out: dict = {}
        by_first: dict = {}
        for sj, n in s.items():
            by_first.setdefault(N.simplices[sj][0], []).append((sj, n))
        for si, m in r.items():
            tau = N.simplices[si]
            for sj, n in by_first.get(tau[-1], []):
                sigma = tau + N.simplices[sj][1:]
                k = N.index.get(sigma)
                if k is not None:
                    out[k] = out.get(k, 0) + m * n
                    if out[k] == 0:
                        del out[k]
        return out

    # -- complexes
    def F(self, p=None) -> CochainComplex:
        p = self.level(p)
        key = ("F", p)
        if key not in self._cache:
            lay, pos = self.layout(p)
            degs, diff = {}, {}
            for k, lst in lay.items():
                degs[k] = 2 * len(lst)
                ents = []
                for j, sb in enumerate(lst):
                    img = self.D({sb: QQi(1)}, p)
                    for tb, z in img.items():
                        ents.append((pos[k + 1][tb], j, z))
                diff[k] = realify_matrix(len(lay.get(k + 1, [])), len(lst), ents)
            self._cache[key] = CochainComplex("QQi", degs, diff)
        return self._cache[key]

    def projection(self, p, q=None) -> ComplexMorphism:
        """pi_p: F_q -> F_p (q defaults to the untruncated level)."""
        q = self.level(q)
        p = self.level(p)
        Fq, Fp = self.F(q), self.F(p)
        lq, _ = self.layout(q)
        _, pp = self.layout(p)
        maps = {}
        for k, lst in lq.items():
            cols = {}
            for j, sb in enumerate(lst):
                t = pp.get(k, {}).get(sb)
                if t is not None:
                    cols[2 * j] = {2 * t: 1}
                    cols[2 * j + 1] = {2 * t + 1: 1}
            maps[k] = SparseMatrix(Fp.rank(k), Fq.rank(k), cols)
        return ComplexMorphism(Fq, Fp, maps)

    def global_cochains(self, k) -> list[dict]:
        """QQ(i)-spanning cochains of the untruncated global-form subcomplex E^k."""
        key = ("Eglob", k)
        if key in self._cache:
            return self._cache[key]
        N, A = self.nerve, self.A
        out = []
        if self.global_spec == "sections":
            # ker delta on C^0(A^k)
            verts = N.of_dim(0)
            bs = [b for b in range(len(A)) if A.degree(b) == k]
            lst = [(v, b) for v in verts for b in bs]
            ents = []
            rowpos: dict = {}
            for j, sb in enumerate(lst):
                for tb, z in self.delta({sb: QQi(1)}).items():
                    i = rowpos.setdefault(tb, len(rowpos))
                    ents.append((i, j, z))
            M = realify_matrix(max(len(rowpos), 1), len(lst), ents)
            for v in nullspace(M):
                cv = complexify_vector(v)
                out.append({lst[j]: z for j, z in cv.items()})
        else:
            tree = set(self.global_spec[1])
            H = {}
            H[0] = [{s: 1 for s in N.of_dim(0)}]
            H[1] = [{s: 1} for s in N.of_dim(1) if N.simplices[s] not in tree]
            for r in range(2, N.dim + 1):
                H[r] = [{s: 1} for s in N.of_dim(r)]
            for r, hs in H.items():
                for b in range(len(A)):
                    if A.degree(b) + r != k:
                        continue
                    for h in hs:
                        out.append({(s, b): QQi(c) for s, c in h.items()})
        self._cache[key] = out
        return out

    def E(self, p=None):
        """(E_p complex, inclusion into F_p)."""
        p = self.level(p)
        key = ("E", p)
        if key in self._cache:
            return self._cache[key]
        Fp = self.F(p)
        bases = {}
        for k in Fp.window:
            e = Echelon()
            for c in self.global_cochains(k):
                c = self.project(c, p)
                for z in (QQi(1), QQi(0, 1)):
                    v = self.to_vector({sb: w * z for sb, w in c.items()}, k, p)
                    if v:
                        e.add(v)
            bases[k] = e.basis()
        degs = {k: len(b) for k, b in bases.items()}
        diff = {}
        for k, b in bases.items():
            if k + 1 not in bases:
                continue
            e, _ = column_reduce(bases[k + 1])
            cols = {}
            for j, v in enumerate(b):
                w = Fp.d(k).apply(v)
                if e.reduce(w):
                    raise ModelError("global forms are not a subcomplex")
                cols[j] = _coords_in(e, w)
            diff[k] = SparseMatrix(degs.get(k + 1, 0), degs[k], cols)
        E = CochainComplex("QQi", degs, diff)
        incl = ComplexMorphism(E, Fp, {k: SparseMatrix.from_columns(Fp.rank(k), b) for k, b in bases.items()})
        self._cache[key] = (E, incl)
        return E, incl

    # -- integral complexes
    def I_plain(self):
        key = ("Iplain",)
        if key not in self._cache:
            self._cache[key] = self.nerve.integer_cochains()
        return self._cache[key]

    def plain_position(self, r):
        return {s: j for j, s in enumerate(self.nerve.of_dim(r))}

    def int_vector_to_cochain(self, v: dict, r) -> dict:
        simp = self.nerve.of_dim(r)
        return {simp[j]: int(x) for j, x in v.items() if x}

    def int_cochain_to_vector(self, c: dict, r) -> dict:
        pos = self.plain_position(r)
        return {pos[s]: mpq(x) for s, x in c.items() if x}

    def psi_plain(self, p=None) -> ComplexMorphism:
        p = self.level(p)
        I, Fp = self.I_plain(), self.F(p)
        maps = {}
        for r in I.window:
            cols = {}
            for j, s in enumerate(self.nerve.of_dim(r)):
                cols[j] = self.to_vector({(s, self.A.unit): QQi(1)}, r, p)
            maps[r] = SparseMatrix(Fp.rank(r), I.rank(r), cols)
        return ComplexMorphism(I, Fp, maps)

    def hyper_layout(self):
        if "hlay" in self._cache:
            return self._cache["hlay"]
        L = self.lattice
        if L is None:
            raise ModelError("model has no lattice")
        lay: dict = {}
        for si, s in enumerate(self.nerve.simplices):
            r = len(s) - 1
            for (deg, j, g) in L.flat():
                lay.setdefault(r + deg, []).append((si, deg, j))
        for k in lay:
            lay[k].sort(key=lambda t: (self.nerve.dimension(t[0]), t[0], t[1], t[2]))
        pos = {k: {t: i for i, t in enumerate(lst)} for k, lst in lay.items()}
        self._cache["hlay"] = (lay, pos)
        return lay, pos

    def hyper_to_cochain(self, v: dict, k) -> dict:
        """Integral Tot-cochain -> form cochain (untruncated)."""
        lay, _ = self.hyper_layout()
        out: dict = {}
        for j, x in v.items():
            si, deg, g = lay[k][j]
            for b, z in self.lattice.gens[deg][g].items():
                _acc(out, (si, b), z * x)
        return out

    def I_hyper(self) -> CochainComplex:
        if "Ihyper" in self._cache:
            return self._cache["Ihyper"]
        L = self.lattice
        lay, pos = self.hyper_layout()
        N = self.nerve
        degs = {k: len(lst) for k, lst in lay.items()}
        diff = {}
        for k, lst in lay.items():
            cols = {}
            for j, (si, deg, g) in enumerate(lst):
                col: dict = {}
                r = N.dimension(si)
                gv = L.gens[deg][g]
                # delta part
                tau = N.simplices[si]
                for (sj, face_j) in self._cofaces()[si]:
                    sigma = N.simplices[sj]
                    w = self.coeffs.restrict(gv, tau, sigma)
                    for t, c in L.coords(deg, w).items():
                        i = pos[k + 1][(sj, deg, t)]
                        col[i] = col.get(i, 0) + (-1) ** face_j * c
                # fiber d part
                dg = self.A.d(gv)
                if dg:
                    for t, c in L.coords(deg + 1, dg).items():
                        i = pos[k + 1][(si, deg + 1, t)]
                        col[i] = col.get(i, 0) + (-1) ** r * c
                cols[j] = {i: c for i, c in col.items() if c}
            diff[k] = SparseMatrix(degs.get(k + 1, 0), degs[k], cols)
        I = CochainComplex("ZZ", degs, diff)
        self._cache["Ihyper"] = I
        return I

    def psi_hyper(self, p=None) -> ComplexMorphism:
        p = self.level(p)
        I, Fp = self.I_hyper(), self.F(p)
        maps = {}
        for k in I.window:
            cols = {}
            for j in range(I.rank(k)):
                c = self.project(self.hyper_to_cochain({j: 1}, k), p)
                cols[j] = self.to_vector(c, k, p)
            maps[k] = SparseMatrix(Fp.rank(k), I.rank(k), cols)
        return ComplexMorphism(I, Fp, maps)

    def lattice_inclusion(self) -> ComplexMorphism:
        """C^*(nerve; ZZ) -> Tot C(nerve; lattice), 1 -> unit generator."""
        I0, I1 = self.I_plain(), self.I_hyper()
        _, pos = self.hyper_layout()
        unit = None
        for j, g in enumerate(self.lattice.gens[0]):
            if g == {self.A.unit: QQi(1)}:
                unit = j
        if unit is None:
            raise ModelError("lattice lacks the unit")
        maps = {}
        for r in I0.window:
            cols = {j: {pos[r][(s, 0, unit)]: 1} for j, s in enumerate(self.nerve.of_dim(r))}
            maps[r] = SparseMatrix(I1.rank(r), I0.rank(r), cols)
        return ComplexMorphism(I0, I1, maps)

    # -- triples
    def triple(self, p=None, hyper=False) -> SparkComplexTriple:
        p = self.level(p)
        key = ("T", p, hyper)
        if key not in self._cache:
            E, incl = self.E(p)
            if hyper:
                I, psi = self.I_hyper(), self.psi_hyper(p)
            else:
                I, psi = self.I_plain(), self.psi_plain(p)
            name = f"{self.name}/{'hyperspark' if hyper else 'spark'}/p={p}"
            self._cache[key] = SparkComplexTriple(self.F(p), E, I, incl, psi, name=name)
        return self._cache[key]

    def E_map(self, p, q=None) -> ComplexMorphism:
        """pi_p restricted to global forms: E_q -> E_p in E-coordinates."""
        q = self.level(q)
        Eq, iq = self.E(q)
        Ep, ip = self.E(p)
        pr = self.projection(p, q)
        maps = {}
        for k in Eq.window:
            basis = [ip.at(k).col(j) for j in range(Ep.rank(k))]
            e, _ = column_reduce(basis)
            cols = {}
            for j in range(Eq.rank(k)):
                w = pr.at(k).apply(iq.at(k).col(j))
                if e.reduce(w):
                    raise ModelError("projection does not preserve global forms")
                cols[j] = _coords_in(e, w)
            maps[k] = SparseMatrix(Ep.rank(k), Eq.rank(k), cols)
        return ComplexMorphism(Eq, Ep, maps)

    def level_projection(self, p, hyper=False) -> SparkMorphism:
        """Pi_p = (pi_p, pi_p, id) from the untruncated triple."""
        S, T = self.triple(None, hyper), self.triple(p, hyper)
        return SparkMorphism(S, T, self.projection(p), self.E_map(p), ComplexMorphism.identity(S.I))

    def web_lattice(self, p) -> SparkMorphism:
        """(id, id, i): Čech–Dolbeault spark complex -> hyperspark complex, level p."""
        S, T = self.triple(p, False), self.triple(p, True)
        return SparkMorphism(S, T, ComplexMorphism.identity(S.F), ComplexMorphism.identity(S.E),
                             self.lattice_inclusion())

    def global_triple(self, p) -> SparkComplexTriple:
        """Global model: F = E = global forms, I = global lattice sections."""
        p = self.level(p)
        key = ("Tglob", p)
        if key in self._cache:
            return self._cache[key]
        E, incl = self.E(p)
        Ig, ig = self._global_lattice()
        psi_h = self.psi_hyper(p)
        # psi on global lattice: through Čech, then express in E coordinates
        maps = {}
        for k in Ig.window:
            basis = [incl.at(k).col(j) for j in range(E.rank(k))]
            e, _ = column_reduce(basis)
            cols = {}
            for j in range(Ig.rank(k)):
                w = psi_h.at(k).apply(ig.at(k).col(j))
                if e.reduce(w):
                    raise ModelError("global lattice section is not a global form")
                cols[j] = _coords_in(e, w)
            maps[k] = SparseMatrix(E.rank(k), Ig.rank(k), cols)
        psi = ComplexMorphism(Ig, E, maps)
        T = SparkComplexTriple(E, E, Ig, ComplexMorphism.identity(E), psi, name=f"{self.name}/global/p={p}")
        self._cache[key] = (T, ig)
        return self._cache[key]

    def _global_lattice(self):
        """Global sections of the lattice complex (delta-closed 0-cochains)."""
        if "Iglob" in self._cache:
            return self._cache["Iglob"]
        Ih = self.I_hyper()
        lay, pos = self.hyper_layout()
        N = self.nerve
        gens = {}
        for k in Ih.window:
            idx = [j for j, (si, deg, g) in enumerate(lay[k]) if N.dimension(si) == 0]
            # delta-closed combos: kernel of the Čech part of D restricted to C^0
            sub = SparseMatrix(Ih.rank(k + 1), len(idx),
                               {t: {i: x for i, x in Ih.d(k).col(j).items()
                                    if N.dimension(lay[k + 1][i][0]) == 1}
                                for t, j in enumerate(idx)}) if k + 1 in lay else None
            full = QZGroup.full([], range(len(idx)), len(idx))
            if sub is None:
                K = full
            else:
                K = preimage(full, sub, QZGroup.zero(sub.nrows))
            gens[k] = [{idx[t]: x for t, x in v.items()} for v in K.lat]
        degs = {k: len(g) for k, g in gens.items()}
        incl_maps = {k: SparseMatrix.from_columns(Ih.rank(k), g) for k, g in gens.items()}
        diff = {}
        for k, g in gens.items():
            if k + 1 not in gens:
                continue
            cols = {}
            for j, v in enumerate(g):
                w = Ih.d(k).apply(v)
                y = lattice_solve(gens[k + 1], w) if w else []
                if y is None:
                    raise ModelError("global lattice not a subcomplex")
                cols[j] = {t: c for t, c in enumerate(y) if c}
            diff[k] = SparseMatrix(degs[k + 1], degs[k], cols)
        Ig = CochainComplex("ZZ", degs, diff)
        ig = ComplexMorphism(Ig, Ih, incl_maps)
        self._cache["Iglob"] = (Ig, ig)
        return Ig, ig

    def web_global(self, p) -> SparkMorphism:
        """(i, i, i): global model -> hyperspark complex of level p."""
        G, ig = self.global_triple(p)
        T = self.triple(p, True)
        E, incl = self.E(p)
        return SparkMorphism(G, T, incl, ComplexMorphism.identity(E), ig)

    # -- sparks and products (untruncated, plain integral cochains)
    def spark_parts(self, k, v: dict, p=None):
        """(a cochain, r integer cochain) from a G^k vector of triple(p)."""
        T = self.triple(p)
        a, r = T.split(k, v)
        return self.to_cochain(a, k, p), self.int_vector_to_cochain(r, k + 1)

    def spark_vector(self, k, a: dict, r: dict, p=None):
        T = self.triple(p)
        return T.join(k, self.to_vector(a, k, p), self.int_cochain_to_vector(r, k + 1))

    def spark_product(self, k, u: dict, l, v: dict) -> dict:
        """Product of untruncated sparks (G-vectors of degrees k and l)."""
        T = self.triple(None)
        if not T.is_spark(k, u) or not T.is_spark(l, v):
            raise ValueError("representative is not a spark")
        a, r = self.spark_parts(k, u)
        b, s = self.spark_parts(l, v)
        f = self.to_cochain(T.delta1(l, v), l + 1, None)
        c = _add(self.cup(a, f), self.cup(self.integer_to_forms(r), b), (-1) ** (k + 1))
        rs = self.integer_cup(r, s)
        return self.spark_vector(k + l + 1, c, rs)

    def project_level(self, k, v: dict, p) -> dict:
        """Pi_p on a G^k vector of the untruncated triple."""
        return self.level_projection(p).cone_matrix(k).apply(v)


# ---------------------------------------------------------------- fixtures

def point_triple() -> SparkComplexTriple:
    M = SparseMatrix.from_dense
    F = CochainComplex("QQ", {0: 1})
    E = CochainComplex("QQ", {0: 1})
    I = CochainComplex("ZZ", {0: 1})
    return SparkComplexTriple(F, E, I, ComplexMorphism(E, F, {0: M([[1]])}),
                              ComplexMorphism(I, F, {0: M([[1]])}), name="point")


def t1_triple(variant=None) -> SparkComplexTriple:
    """F^0 = Q<u,v>, F^1 = Q<w>, du = 0, dv = w; E = Q<u>; I^0 = Z alpha -> u,
    I^1 = Z beta -> w.

    Variants break one axiom each: ``"e1"`` adds E^1 = Q<w>; ``"no-e"`` drops
    E; ``"psi0"`` doubles I^0 with both generators mapping to u.
    """
    M = SparseMatrix.from_dense
    F = CochainComplex("QQ", {0: 2, 1: 1}, {0: M([[0, 1]])})
    if variant == "e1":
        E = CochainComplex("QQ", {0: 1, 1: 1})
        incl = {0: M([[1], [0]]), 1: M([[1]])}
    elif variant == "no-e":
        E = CochainComplex("QQ", {})
        incl = {}
    else:
        E = CochainComplex("QQ", {0: 1})
        incl = {0: M([[1], [0]])}
    if variant == "psi0":
        I = CochainComplex("ZZ", {0: 2, 1: 1})
        psi = {0: M([[1, 1], [0, 0]]), 1: M([[1]])}
    else:
        I = CochainComplex("ZZ", {0: 1, 1: 1})
        psi = {0: M([[1], [0]]), 1: M([[1]])}
    name = "synthetic-T1" + (f"-{variant}" if variant else "")
    return SparkComplexTriple(F, E, I, ComplexMorphism(E, F, incl, check=False),
                              ComplexMorphism(I, F, psi, check=False), name=name)


def torus_model(n=1, polynomial=False, N=2) -> CechModel:
    nerve = torus_nerve()
    A = FormAlgebra(n, N, polynomial=polynomial)
    C = CoefficientSystem(nerve, A)
    L = LatticeSpec.real_coordinates(A) if polynomial else LatticeSpec.constants(A)
    name = f"torus{n}" + ("-poly" if polynomial else "")
    return CechModel(nerve, C, L, ("tree-gauge", nerve.spanning_tree()), name=name)


def disk_model(N=2) -> CechModel:
    nerve = triangle_nerve()
    A = FormAlgebra(1, N, polynomial=True)
    twist = {i: (sum(s) + len(s)) % 4 for i, s in enumerate(nerve.simplices)}
    twist = {s: twist[i] for i, s in enumerate(nerve.simplices)}
    C = CoefficientSystem(nerve, A, twist)
    return CechModel(nerve, C, LatticeSpec.real_coordinates(A), "sections", name="disk")


def contractible_constant_model() -> CechModel:
    nerve = triangle_nerve()
    A = FormAlgebra(0)
    return CechModel(nerve, CoefficientSystem(nerve, A), LatticeSpec.constants(A), "sections",
                     name="triangle-constant")


def point_model() -> CechModel:
    nerve = point_nerve()
    A = FormAlgebra(0)
    return CechModel(nerve, CoefficientSystem(nerve, A), LatticeSpec.constants(A), "sections",
                     name="vertex-constant")


TRIPLE_FIXTURES = {
    "point": point_triple,
    "synthetic-T1": t1_triple,
    "synthetic-T1-e1": lambda: t1_triple("e1"),
    "synthetic-T1-no-e": lambda: t1_triple("no-e"),
    "synthetic-T1-psi0": lambda: t1_triple("psi0"),
}

MODEL_FIXTURES = {
    "torus1": lambda: torus_model(1),
    "torus2": lambda: torus_model(2),
    "torus1-poly": lambda: torus_model(1, polynomial=True),
    "disk": lambda: disk_model(),
    "triangle-constant": contractible_constant_model,
    "vertex-constant": point_model,
}
