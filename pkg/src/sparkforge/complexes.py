"""Finitely generated cochain complexes and their cohomology.

Complexes over QQ(i) are stored realified (see ``exact_linalg.realify_matrix``).
A complex may mix rational and integral coordinates in one degree, which is
what mapping cones of ``I -> F`` look like; ``zidx[k]`` lists the integral
coordinates of degree k.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .exact_linalg import (QZGroup, QZHom, QZModule, SparseMatrix, preimage)

RINGS = ("ZZ", "QQ", "QQi", "mixed")


class ComplexError(ValueError):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SPARKFORGE_THREADS", "1")))
    except ValueError:
        return 1


def per_degree(fn, degrees):
    """Map fn over degrees, optionally on a thread pool; order preserved."""
    degrees = list(degrees)
    n = _threads()
    if n > 1 and len(degrees) > 1:
        with ThreadPoolExecutor(n) as ex:
            return list(ex.map(fn, degrees))
    return [fn(k) for k in degrees]


class CochainComplex:
    def __init__(self, ring: str, degrees: dict, diff: dict | None = None,
                 zidx: dict | None = None, check: bool = True, lowest: int = 0):
        if ring not in RINGS:
            raise ComplexError(f"unknown ring {ring}")
        self.ring = ring
        self.degrees = {int(k): int(v) for k, v in degrees.items() if v}
        self.lowest = lowest
        if any(k < lowest for k in self.degrees):
            raise ComplexError("negative degrees must be zero")
        self.diff = {}
        for k, m in (diff or {}).items():
            k = int(k)
            if m.is_zero():
                continue
            if m.ncols != self.rank(k) or m.nrows != self.rank(k + 1):
                raise ComplexError(f"differential d^{k} has wrong shape")
            self.diff[k] = m
        if ring == "ZZ":
            self.zidx = {k: tuple(range(n)) for k, n in self.degrees.items()}
        elif ring in ("QQ", "QQi"):
            self.zidx = {}
        else:
            self.zidx = {int(k): tuple(v) for k, v in (zidx or {}).items() if v}
        self._cache: dict = {}
        if check:
            self.check()

    # -- structure
    def rank(self, k) -> int:
        return self.degrees.get(k, 0)

    @property
    def window(self):
        if not self.degrees:
            return range(0)
        return range(min(self.lowest, min(self.degrees)), max(self.degrees) + 1)

    def d(self, k) -> SparseMatrix:
        m = self.diff.get(k)
        if m is None:
            return SparseMatrix(self.rank(k + 1), self.rank(k))
        return m

    def integral_coords(self, k):
        return self.zidx.get(k, ())

    def full_group(self, k) -> QZGroup:
        n = self.rank(k)
        z = set(self.integral_coords(k))
        return QZGroup.full([i for i in range(n) if i not in z], sorted(z), n)

    def check(self):
        for k in self.diff:
            if not (self.d(k + 1) @ self.d(k)).is_zero():
                raise ComplexError(f"d^{k+1} d^{k} != 0")
        if self.ring in ("ZZ", "mixed"):
            for k, m in self.diff.items():
                zs, zt = set(self.integral_coords(k)), set(self.integral_coords(k + 1))
                for j, c in m.cols.items():
                    for i, v in c.items():
                        if i in zt and (j not in zs or v.denominator != 1):
                            raise ComplexError("differential leaves the integral lattice")

    # -- cohomology
    def cocycles(self, k) -> QZGroup:
        key = ("Z", k)
        if key not in self._cache:
            self._cache[key] = preimage(self.full_group(k), self.d(k), QZGroup.zero(self.rank(k + 1)))
        return self._cache[key]

    def coboundaries(self, k) -> QZGroup:
        key = ("B", k)
        if key not in self._cache:
            self._cache[key] = self.full_group(k - 1).image(self.d(k - 1))
        return self._cache[key]

    def cohomology(self, k, ring: str | None = None) -> QZModule:
        if ring is not None and ring != self.ring:
            if ring == "ZZ" and self.ring != "ZZ":
                raise ComplexError("ring mismatch: integral cohomology of a rational complex")
            if ring in ("QQ", "QQi") and self.ring == "ZZ":
                raise ComplexError("ring mismatch: tensor with QQ explicitly")
        key = ("H", k)
        if key not in self._cache:
            n = self.rank(k)
            self._cache[key] = QZModule(self.cocycles(k), self.coboundaries(k),
                                        n - len(self.integral_coords(k)),
                                        len(self.integral_coords(k)))
        return self._cache[key]

    def cohomology_all(self):
        return dict(zip(self.window, per_degree(lambda k: self.cohomology(k).invariants, self.window)))

    def __repr__(self):
        return f"CochainComplex({self.ring}, {self.degrees})"


def zero_complex(ring="QQ"):
    return CochainComplex(ring, {})


class ComplexMorphism:
    def __init__(self, source: CochainComplex, target: CochainComplex, maps: dict,
                 check: bool = True):
        self.source = source
        self.target = target
        self.maps = {}
        for k, m in maps.items():
            if m.nrows != target.rank(k) or m.ncols != source.rank(k):
                raise ComplexError(f"morphism component {k} has wrong shape")
            if not m.is_zero():
                self.maps[int(k)] = m
        if check:
            self.check()

    def at(self, k) -> SparseMatrix:
        m = self.maps.get(k)
        if m is None:
            return SparseMatrix(self.target.rank(k), self.source.rank(k))
        return m

    def commutes(self) -> list[int]:
        bad = []
        ks = set(self.source.window) | set(self.target.window)
        for k in sorted(ks):
            lhs = self.target.d(k) @ self.at(k)
            rhs = self.at(k + 1) @ self.source.d(k)
            if not (lhs - rhs).is_zero():
                bad.append(k)
        return bad

    def check(self):
        bad = self.commutes()
        if bad:
            raise ComplexError(f"morphism does not commute with differentials in degrees {bad}")

    def compose(self, first: "ComplexMorphism") -> "ComplexMorphism":
        """self ∘ first."""
        ks = set(self.maps) & set(first.maps)
        return ComplexMorphism(first.source, self.target,
                               {k: self.at(k) @ first.at(k) for k in ks}, check=False)

    @classmethod
    def identity(cls, C: CochainComplex):
        return cls(C, C, {k: SparseMatrix.identity(n) for k, n in C.degrees.items()}, check=False)

    def induced(self, k) -> QZHom:
        return QZHom(self.source.cohomology(k), self.target.cohomology(k), self.at(k))


def induced_map(m: ComplexMorphism, k) -> QZHom:
    return m.induced(k)


@dataclass
class QuasiIsoReport:
    ok: bool
    degrees: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def is_quasi_isomorphism(m: ComplexMorphism) -> QuasiIsoReport:
    ks = sorted(set(m.source.window) | set(m.target.window))

    def one(k):
        h = m.induced(k)
        return {"source": str(h.source.invariants), "target": str(h.target.invariants),
                "well_defined": h.is_well_defined(), "injective": h.is_injective(),
                "surjective": h.is_surjective()}

    rep = dict(zip(ks, per_degree(one, ks)))
    ok = all(r["well_defined"] and r["injective"] and r["surjective"] for r in rep.values())
    return QuasiIsoReport(ok, rep)


# ---------------------------------------------------------------- cone

def cone(psi: ComplexMorphism) -> CochainComplex:
    """G^k = F^k + I^{k+1}, D(a, r) = (da + psi(r), -dr).

    The complex starts in degree -1 (G^{-1} = I^0).
    """
    F, I = psi.target, psi.source
    top = max(list(F.window) + [k - 1 for k in I.window] + [0])
    degrees, diff, zidx = {}, {}, {}
    for k in range(-1, top + 1):
        degrees[k] = F.rank(k) + I.rank(k + 1)
        zidx[k] = tuple(F.integral_coords(k)) + tuple(F.rank(k) + i for i in I.integral_coords(k + 1))
    for k in range(-1, top + 1):
        blocks = {(0, 0): F.d(k), (0, 1): psi.at(k + 1), (1, 1): I.d(k + 1).scale(-1)}
        diff[k] = SparseMatrix.block(blocks, [F.rank(k + 1), I.rank(k + 2)], [F.rank(k), I.rank(k + 1)])
    ring = "mixed" if I.degrees else F.ring
    return CochainComplex(ring, degrees, diff, zidx if ring == "mixed" else None, lowest=-1)


# ---------------------------------------------------------------- bigraded / double

class BigradedComplex:
    """Pieces (r, s) with unsigned del: (r,s)->(r+1,s) and delbar: (r,s)->(r,s+1)."""

    def __init__(self, pieces: dict, dell: dict, delbar: dict, ring="QQi", check=True):
        self.pieces = {tuple(k): v for k, v in pieces.items() if v}
        self.dell = {tuple(k): m for k, m in dell.items()}
        self.delbar = {tuple(k): m for k, m in delbar.items()}
        self.ring = ring
        if check:
            self.check()

    def rank(self, rs):
        return self.pieces.get(rs, 0)

    def D(self, rs) -> SparseMatrix:
        r, s = rs
        return self.dell.get(rs) or SparseMatrix(self.rank((r + 1, s)), self.rank(rs))

    def Db(self, rs) -> SparseMatrix:
        r, s = rs
        return self.delbar.get(rs) or SparseMatrix(self.rank((r, s + 1)), self.rank(rs))

    def check(self):
        for (r, s) in self.pieces:
            if not (self.D((r + 1, s)) @ self.D((r, s))).is_zero():
                raise ComplexError("del^2 != 0")
            if not (self.Db((r, s + 1)) @ self.Db((r, s))).is_zero():
                raise ComplexError("delbar^2 != 0")
            if not (self.Db((r + 1, s)) @ self.D((r, s)) + self.D((r, s + 1)) @ self.Db((r, s))).is_zero():
                raise ComplexError("del delbar + delbar del != 0")

    def max_r(self):
        return max((r for r, _ in self.pieces), default=-1)

    def layout(self, p=None):
        """Per total degree, ordered list of kept pieces and offsets."""
        lay: dict = {}
        for (r, s) in sorted(self.pieces):
            if p is not None and r >= p:
                continue
            lay.setdefault(r + s, []).append((r, s))
        offs = {}
        for k, lst in lay.items():
            o = 0
            for rs in lst:
                offs[rs] = o
                o += self.pieces[rs]
        return lay, offs

    def total(self, p=None) -> CochainComplex:
        return truncate_level(self, p)[0] if p is not None else truncate_level(self, None)[0]


def truncate_level(B: BigradedComplex, p):
    """(complex with d_p = pi_p d, projection pi_p from the full complex)."""
    lay_full, off_full = B.layout(None)
    lay, off = B.layout(p)
    degs = {k: sum(B.pieces[rs] for rs in lst) for k, lst in lay.items()}
    degs_full = {k: sum(B.pieces[rs] for rs in lst) for k, lst in lay_full.items()}

    def assemble(layout, offs, dims, keep):
        diff = {}
        for k, lst in layout.items():
            cols: dict = {}
            for (r, s) in lst:
                for tgt, m in (((r + 1, s), B.D((r, s))), ((r, s + 1), B.Db((r, s)))):
                    if tgt not in offs or not keep(tgt):
                        continue
                    for j, c in m.cols.items():
                        col = cols.setdefault(offs[(r, s)] + j, {})
                        for i, v in c.items():
                            col[offs[tgt] + i] = col.get(offs[tgt] + i, 0) + v
            diff[k] = SparseMatrix(dims.get(k + 1, 0), dims.get(k, 0), cols)
        return diff

    ring = B.ring
    full = CochainComplex(ring, degs_full, assemble(lay_full, off_full, degs_full, lambda t: True))
    trunc = CochainComplex(ring, degs, assemble(lay, off, degs, lambda t: p is None or t[0] < p))
    maps = {}
    for k, lst in lay_full.items():
        cols = {}
        for rs in lst:
            if rs in off and (p is None or rs[0] < p):
                for j in range(B.pieces[rs]):
                    cols[off_full[rs] + j] = {off[rs] + j: 1}
        maps[k] = SparseMatrix(degs.get(k, 0), degs_full[k], cols)
    proj = ComplexMorphism(full, trunc, maps)
    return trunc, proj


class DoubleComplex:
    """Pieces (r, s); horizontal delta: (r,s)->(r+1,s), vertical d: (r,s)->(r,s+1).

    delta and d commute; totalization uses D = delta + (-1)^r d.
    ``zpieces`` marks pieces whose coordinates are integral.
    """

    def __init__(self, pieces: dict, delta: dict, dv: dict, ring="QQ", zpieces=(), check=True):
        self.pieces = {tuple(k): v for k, v in pieces.items() if v}
        self.delta = {tuple(k): m for k, m in delta.items()}
        self.dv = {tuple(k): m for k, m in dv.items()}
        self.ring = ring
        self.zpieces = set(tuple(z) for z in zpieces)
        if check:
            self.check()

    def rank(self, rs):
        return self.pieces.get(rs, 0)

    def H(self, rs):
        r, s = rs
        return self.delta.get(rs) or SparseMatrix(self.rank((r + 1, s)), self.rank(rs))

    def V(self, rs):
        r, s = rs
        return self.dv.get(rs) or SparseMatrix(self.rank((r, s + 1)), self.rank(rs))

    def check(self):
        for (r, s) in self.pieces:
            if not (self.H((r + 1, s)) @ self.H((r, s))).is_zero():
                raise ComplexError("delta^2 != 0")
            if not (self.V((r, s + 1)) @ self.V((r, s))).is_zero():
                raise ComplexError("d^2 != 0")
            if not (self.V((r + 1, s)) @ self.H((r, s)) - self.H((r, s + 1)) @ self.V((r, s))).is_zero():
                raise ComplexError("delta and d do not commute")

    def layout(self):
        lay: dict = {}
        for rs in sorted(self.pieces):
            lay.setdefault(rs[0] + rs[1], []).append(rs)
        offs = {}
        for k, lst in lay.items():
            o = 0
            for rs in lst:
                offs[rs] = o
                o += self.pieces[rs]
        return lay, offs


def total_complex(Dc: DoubleComplex) -> CochainComplex:
    lay, offs = Dc.layout()
    degs = {k: sum(Dc.pieces[rs] for rs in lst) for k, lst in lay.items()}
    diff, zidx = {}, {}
    for k, lst in lay.items():
        cols: dict = {}
        z = []
        for (r, s) in lst:
            if (r, s) in Dc.zpieces:
                z.extend(range(offs[(r, s)], offs[(r, s)] + Dc.pieces[(r, s)]))
            sign = -1 if r % 2 else 1
            for tgt, m, c0 in (((r + 1, s), Dc.H((r, s)), 1), ((r, s + 1), Dc.V((r, s)), sign)):
                if tgt not in offs:
                    continue
                for j, c in m.cols.items():
                    col = cols.setdefault(offs[(r, s)] + j, {})
                    for i, v in c.items():
                        col[offs[tgt] + i] = col.get(offs[tgt] + i, 0) + c0 * v
        diff[k] = SparseMatrix(degs.get(k + 1, 0), degs[k], cols)
        zidx[k] = tuple(z)
    ring = Dc.ring
    if Dc.zpieces and len(Dc.zpieces) < len(Dc.pieces):
        ring = "mixed"
    return CochainComplex(ring, degs, diff, zidx if ring == "mixed" else None)
