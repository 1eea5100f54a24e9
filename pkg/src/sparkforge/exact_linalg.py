"""Exact linear algebra over ZZ and QQ.

Sparse vectors are plain dicts ``{index: value}`` with no stored zeros.
Rationals are ``gmpy2.mpq``; integers are Python ints.  Everything in this
module is exact.

The central object is :class:`QZGroup`, a finitely generated subgroup
``W + Z<L>`` of QQ^N where W is a subspace (given by spanning vectors) and
L a finite list of lattice generators.  A :class:`QZModule` is a quotient
X/R of two such groups and classifies as
QQ^a + (QQ/ZZ)^b + ZZ^c + torsion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm
from typing import Iterable, Sequence

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)


def qq(x) -> mpq:
    """Parse an int, mpq, Fraction or a string like '3/4'."""
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            a, b = x.split("/")
            return mpq(int(a), int(b))
        return mpq(int(x))
    return mpq(x)


def qstr(x) -> str:
    x = mpq(x)
    if x.denominator == 1:
        return str(int(x.numerator))
    return f"{int(x.numerator)}/{int(x.denominator)}"


# ---------------------------------------------------------------- vectors

def vec(entries: dict | Sequence) -> dict:
    if isinstance(entries, dict):
        return {int(i): mpq(v) for i, v in entries.items() if v != 0}
    return {i: mpq(v) for i, v in enumerate(entries) if v != 0}


def vadd(a: dict, b: dict, c=1) -> dict:
    """a + c*b, new dict."""
    out = dict(a)
    for i, v in b.items():
        w = out.get(i, ZERO) + c * v
        if w:
            out[i] = w
        else:
            out.pop(i, None)
    return out


def viadd(a: dict, b: dict, c) -> None:
    """In place a += c*b."""
    for i, v in b.items():
        w = a.get(i, ZERO) + c * v
        if w:
            a[i] = w
        else:
            del a[i]


def vscale(a: dict, c) -> dict:
    if c == 0:
        return {}
    return {i: c * v for i, v in a.items()}


def vdense(a: dict, n: int) -> list:
    out = [ZERO] * n
    for i, v in a.items():
        out[i] = v
    return out


def vsum(vs: Iterable[tuple], n=None) -> dict:
    out: dict = {}
    for c, v in vs:
        if c:
            viadd(out, v, c)
    return out


def is_integral(a: dict) -> bool:
    return all(mpq(v).denominator == 1 for v in a.values())


# ---------------------------------------------------------------- matrices

class SparseMatrix:
    """Sparse matrix stored column-wise: ``cols[j] = {i: value}``.

    Used for both integer and rational data; ``is_integer`` reports whether
    all entries are integral.
    """

    __slots__ = ("nrows", "ncols", "cols", "_rows")

    def __init__(self, nrows: int, ncols: int, cols: dict | None = None):
        self.nrows = nrows
        self.ncols = ncols
        self.cols = {}
        self._rows = None
        if cols:
            for j, c in cols.items():
                c = {i: mpq(v) for i, v in c.items() if v != 0}
                if c:
                    if not (0 <= j < ncols) or any(not (0 <= i < nrows) for i in c):
                        raise IndexError("matrix entry out of bounds")
                    self.cols[j] = c

    @classmethod
    def zero(cls, nrows, ncols):
        return cls(nrows, ncols)

    @classmethod
    def identity(cls, n):
        return cls(n, n, {j: {j: 1} for j in range(n)})

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence]):
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        cols: dict = {}
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged matrix")
            for j, v in enumerate(row):
                if v != 0:
                    cols.setdefault(j, {})[i] = v
        return cls(nrows, ncols, cols)

    @classmethod
    def from_triplets(cls, nrows, ncols, triplets):
        cols: dict = {}
        for i, j, v in triplets:
            v = qq(v)
            if v:
                c = cols.setdefault(int(j), {})
                c[int(i)] = c.get(int(i), ZERO) + v
        return cls(nrows, ncols, cols)

    @classmethod
    def from_columns(cls, nrows, columns: Sequence[dict]):
        return cls(nrows, len(columns), {j: c for j, c in enumerate(columns) if c})

    @classmethod
    def block(cls, blocks, row_sizes, col_sizes):
        """Assemble from ``blocks[(bi, bj)] = SparseMatrix``."""
        roff = [0]
        for s in row_sizes:
            roff.append(roff[-1] + s)
        coff = [0]
        for s in col_sizes:
            coff.append(coff[-1] + s)
        cols: dict = {}
        for (bi, bj), m in blocks.items():
            if m is None:
                continue
            if m.nrows != row_sizes[bi] or m.ncols != col_sizes[bj]:
                raise ValueError("block size mismatch")
            for j, c in m.cols.items():
                tgt = cols.setdefault(coff[bj] + j, {})
                for i, v in c.items():
                    tgt[roff[bi] + i] = tgt.get(roff[bi] + i, ZERO) + v
        return cls(roff[-1], coff[-1], cols)

    def triplets(self):
        return sorted((i, j, v) for j, c in self.cols.items() for i, v in c.items())

    def to_dense(self):
        out = [[ZERO] * self.ncols for _ in range(self.nrows)]
        for j, c in self.cols.items():
            for i, v in c.items():
                out[i][j] = v
        return out

    @property
    def rows(self) -> dict:
        if self._rows is None:
            r: dict = {}
            for j, c in self.cols.items():
                for i, v in c.items():
                    r.setdefault(i, {})[j] = v
            self._rows = r
        return self._rows

    def col(self, j) -> dict:
        return self.cols.get(j, {})

    def row(self, i) -> dict:
        return self.rows.get(i, {})

    def apply(self, x: dict) -> dict:
        out: dict = {}
        for j, v in x.items():
            c = self.cols.get(j)
            if c:
                viadd(out, c, v)
        return out

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"dimension mismatch {self.ncols} vs {other.nrows}")
        return SparseMatrix(self.nrows, other.ncols,
                            {j: self.apply(c) for j, c in other.cols.items()})

    def __add__(self, other):
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("dimension mismatch")
        cols = {j: dict(c) for j, c in self.cols.items()}
        for j, c in other.cols.items():
            viadd(cols.setdefault(j, {}), c, 1)
        return SparseMatrix(self.nrows, self.ncols, cols)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return SparseMatrix(self.nrows, self.ncols, {j: vscale(v, c) for j, v in self.cols.items()})

    def transpose(self):
        return SparseMatrix(self.ncols, self.nrows, self.rows)

    def is_zero(self):
        return not self.cols

    def nnz(self):
        return sum(len(c) for c in self.cols.values())

    def is_integer(self):
        return all(is_integral(c) for c in self.cols.values())

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.nrows == other.nrows
                and self.ncols == other.ncols and self.cols == other.cols)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


IntMatrix = SparseMatrix
RatMatrix = SparseMatrix


# ---------------------------------------------------------------- echelon

class Echelon:
    """Incrementally maintained reduced row echelon basis of a QQ-subspace.

    Each stored row has a pivot entry 1 and zeros at all other pivots.
    With ``track=True`` every row also remembers the combination of the
    inserted vectors that produced it.
    """

    def __init__(self, track: bool = False):
        self.rows: dict[int, dict] = {}
        self.combos: dict[int, dict] = {}
        self.track = track
        self._colidx: dict[int, set] = {}
        self._count = 0

    def __len__(self):
        return len(self.rows)

    @property
    def rank(self):
        return len(self.rows)

    def _index(self, p, row):
        for c in row:
            self._colidx.setdefault(c, set()).add(p)

    def _unindex(self, p, row):
        for c in row:
            s = self._colidx.get(c)
            if s is not None:
                s.discard(p)

    def reduce(self, v: dict, combo: dict | None = None):
        """Reduce v modulo the span; returns residual (and updated combo)."""
        v = dict(v)
        piv = [p for p in v if p in self.rows]
        for p in piv:
            c = v.get(p)
            if c:
                viadd(v, self.rows[p], -c)
                if combo is not None:
                    viadd(combo, self.combos[p], -c)
        return v

    def coords(self, v: dict) -> dict | None:
        """Coordinates of v w.r.t. the echelon rows (indexed by pivot)."""
        out = {p: v[p] for p in v if p in self.rows}
        r = self.reduce(v)
        return out if not r else None

    def contains(self, v: dict) -> bool:
        return not self.reduce(v)

    def add(self, v: dict, label=None) -> tuple[bool, dict]:
        """Insert v.  Returns (independent, info) where info is the residual
        combination when v is dependent (a relation among inserted vectors)."""
        idx = self._count if label is None else label
        self._count += 1
        combo = {idx: ONE} if self.track else None
        r = self.reduce(v, combo)
        if not r:
            return False, (combo or {})
        p = min(r)
        inv = 1 / r[p]
        r = {i: x * inv for i, x in r.items()}
        if self.track:
            combo = {i: x * inv for i, x in combo.items()}
        for q in list(self._colidx.get(p, ())):
            row = self.rows[q]
            c = row.get(p)
            if not c:
                continue
            old = set(row)
            viadd(row, r, -c)
            if self.track:
                viadd(self.combos[q], combo, -c)
            for col in old - set(row):
                self._colidx[col].discard(q)
            for col in set(row) - old:
                self._colidx.setdefault(col, set()).add(q)
        self.rows[p] = r
        if self.track:
            self.combos[p] = combo
        self._index(p, r)
        return True, {}

    def basis(self) -> list[dict]:
        return [self.rows[p] for p in sorted(self.rows)]

    def pivots(self) -> list[int]:
        return sorted(self.rows)

    def copy(self):
        e = Echelon(self.track)
        e.rows = {p: dict(r) for p, r in self.rows.items()}
        e.combos = {p: dict(r) for p, r in self.combos.items()}
        e._colidx = {c: set(s) for c, s in self._colidx.items()}
        e._count = self._count
        return e


def span_echelon(vectors: Iterable[dict]) -> Echelon:
    e = Echelon()
    for v in vectors:
        e.add(v)
    return e


def rank(vectors: Iterable[dict]) -> int:
    return span_echelon(vectors).rank


def column_reduce(cols: Sequence[dict]):
    """Returns (tracked echelon of the column span, kernel vectors)."""
    e = Echelon(track=True)
    kernel = []
    for j, c in enumerate(cols):
        ok, rel = e.add(c, label=j)
        if not ok:
            kernel.append(rel)
    return e, kernel


def nullspace(M: SparseMatrix) -> list[dict]:
    """Basis of {x : Mx = 0} over QQ."""
    cols = [M.col(j) for j in range(M.ncols)]
    return column_reduce(cols)[1]


def image_basis(M: SparseMatrix) -> list[dict]:
    return span_echelon(M.col(j) for j in range(M.ncols)).basis()


def _solve_q(cols: Sequence[dict], b: dict):
    e, _ = column_reduce(cols)
    if e.reduce(b):
        return None
    x: dict = {}
    for p, c in b_coords(e, b).items():
        viadd(x, e.combos[p], c)
    return x


def b_coords(e: Echelon, b: dict) -> dict:
    return {p: b[p] for p in b if p in e.rows}


# ---------------------------------------------------------------- Smith form

def _swap_rows(A, i, j):
    A[i], A[j] = A[j], A[i]


def _swap_cols(A, i, j):
    for row in A:
        row[i], row[j] = row[j], row[i]


def smith_dense(A: list[list[int]], want_transforms=True):
    """Smith normal form of a dense integer matrix.

    Returns (U, S, V, Vinv) with U*A*V = S.  U, V unimodular.  Pivot choice:
    among rows with fewest nonzeros, the entry of least absolute value.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    S = [list(map(int, row)) for row in A]
    if want_transforms:
        U = [[int(i == j) for j in range(m)] for i in range(m)]
        V = [[int(i == j) for j in range(n)] for i in range(n)]
        Vi = [[int(i == j) for j in range(n)] for i in range(n)]
    else:
        U = V = Vi = None

    def row_op(i, j, q):  # row_i -= q row_j
        if q == 0:
            return
        Si, Sj = S[i], S[j]
        for c in range(n):
            if Sj[c]:
                Si[c] -= q * Sj[c]
        if U is not None:
            Ui, Uj = U[i], U[j]
            for c in range(m):
                if Uj[c]:
                    Ui[c] -= q * Uj[c]

    def col_op(i, j, q):  # col_i -= q col_j
        if q == 0:
            return
        for row in S:
            if row[j]:
                row[i] -= q * row[j]
        if V is not None:
            for row in V:
                if row[j]:
                    row[i] -= q * row[j]
            # inverse: row_j += q row_i
            Vj, Vii = Vi[j], Vi[i]
            for c in range(n):
                if Vii[c]:
                    Vj[c] += q * Vii[c]

    def swap_r(i, j):
        if i != j:
            _swap_rows(S, i, j)
            if U is not None:
                _swap_rows(U, i, j)

    def swap_c(i, j):
        if i != j:
            _swap_cols(S, i, j)
            if V is not None:
                _swap_cols(V, i, j)
                _swap_rows(Vi, i, j)

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = S[i]
            nz = [j for j in range(t, n) if row[j]]
            if not nz:
                continue
            j0 = min(nz, key=lambda j: abs(row[j]))
            key = (len(nz), abs(row[j0]))
            if best is None or key < best[0]:
                best = (key, i, j0)
        if best is None:
            break
        _, i0, j0 = best
        swap_r(t, i0)
        swap_c(t, j0)
        while True:
            changed = False
            # clear column t
            for i in range(t + 1, m):
                if S[i][t]:
                    row_op(i, t, S[i][t] // S[t][t])
                    if S[i][t]:
                        changed = True
            # clear row t
            for j in range(t + 1, n):
                if S[t][j]:
                    col_op(j, t, S[t][j] // S[t][t])
                    if S[t][j]:
                        changed = True
            if changed:
                # move smallest remaining entry of row/col t into the pivot
                cands = [(abs(S[i][t]), 0, i) for i in range(t, m) if S[i][t]]
                cands += [(abs(S[t][j]), 1, j) for j in range(t, n) if S[t][j]]
                _, kind, idx = min(cands)
                if kind == 0:
                    swap_r(t, idx)
                else:
                    swap_c(t, idx)
                continue
            # divisibility of the remaining block
            piv = S[t][t]
            bad = None
            for i in range(t + 1, m):
                row = S[i]
                for j in range(t + 1, n):
                    if row[j] % piv:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_op(t, bad, -1)
        if S[t][t] < 0:
            S[t] = [-x for x in S[t]]
            if U is not None:
                U[t] = [-x for x in U[t]]
        t += 1
    return U, S, V, Vi


def _to_dense_int(M: SparseMatrix) -> list[list[int]]:
    out = [[0] * M.ncols for _ in range(M.nrows)]
    for j, c in M.cols.items():
        for i, v in c.items():
            if v.denominator != 1:
                raise ValueError("non-integer entry in integer matrix")
            out[i][j] = int(v)
    return out


def smith_normal_form(M: SparseMatrix):
    """(U, S, V) with U*M*V = S, as SparseMatrix values."""
    U, S, V, _ = smith_dense(_to_dense_int(M))
    if not U:
        U = []
    f = SparseMatrix.from_dense
    Um = f(U) if M.nrows else SparseMatrix(0, 0)
    Vm = f(V) if M.ncols else SparseMatrix(0, 0)
    Sm = f(S) if M.nrows and M.ncols else SparseMatrix(M.nrows, M.ncols)
    return Um, Sm, Vm


def invariant_factors(M: SparseMatrix) -> list[int]:
    _, S, _, _ = smith_dense(_to_dense_int(M), want_transforms=False)
    return [S[i][i] for i in range(min(M.nrows, M.ncols)) if S[i][i]]


def det_int(A: list[list[int]]) -> int:
    """Fraction-free Bareiss determinant."""
    n = len(A)
    if n == 0:
        return 1
    M = [list(map(int, r)) for r in A]
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k]:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


# ---------------------------------------------------------------- solving

def _int_solve_rows(C: list[list], c: list):
    """Integer y with y*C = c for a rational matrix C (rows = generators).

    Returns list of ints or None.
    """
    s = len(C)
    rho = len(c)
    if s == 0:
        return [] if all(x == 0 for x in c) else None
    den = 1
    for row in C:
        for x in row:
            den = lcm(den, int(mpq(x).denominator))
    for x in c:
        den = lcm(den, int(mpq(x).denominator))
    Ci = [[int(mpq(x) * den) for x in row] for row in C]
    ci = [int(mpq(x) * den) for x in c]
    # y C = c  <=>  C^T y^T = c^T ; SNF of C: U C V = S
    U, S, V, _ = smith_dense(Ci)
    cv = [sum(ci[i] * V[i][j] for i in range(rho)) for j in range(rho)]
    # y C V = c V ; y = z U, z S = c V
    z = [0] * s
    for j in range(rho):
        d = S[j][j] if j < s else 0
        if d == 0:
            if cv[j] != 0:
                return None
        else:
            if cv[j] % d:
                return None
            z[j] = cv[j] // d
    return [sum(z[i] * U[i][col] for i in range(s)) for col in range(s)]


def lattice_solve(gens: Sequence[dict], v: dict):
    """Integer coefficients y with sum y_i gens_i = v, or None."""
    e = Echelon()
    for g in gens:
        e.add(g)
    if not e.contains(v):
        return None
    piv = e.pivots()
    C = [[g.get(p, ZERO) for p in piv] for g in gens]
    c = [v.get(p, ZERO) for p in piv]
    # coordinates w.r.t. a RREF basis are the pivot entries
    return _int_solve_rows(C, c)


def solve(A: SparseMatrix, b: dict | Sequence, ring: str = "QQ"):
    """Some x with A x = b over ``ring`` ('ZZ' or 'QQ'), or None."""
    if not isinstance(b, dict):
        if len(b) != A.nrows:
            raise ValueError("dimension mismatch")
        b = vec(b)
    elif b and max(b) >= A.nrows:
        raise ValueError("dimension mismatch")
    cols = [A.col(j) for j in range(A.ncols)]
    if ring == "QQ":
        return _solve_q(cols, b)
    if ring != "ZZ":
        raise ValueError(f"unknown ring {ring}")
    y = lattice_solve(cols, b)
    if y is None:
        return None
    return {j: mpq(x) for j, x in enumerate(y) if x}


def int_left_kernel(rows: Sequence[dict]) -> list[list[int]]:
    """Z-basis of {y in Z^s : sum y_i rows_i = 0}."""
    s = len(rows)
    if s == 0:
        return []
    e = Echelon()
    for r in rows:
        e.add(r)
    piv = e.pivots()
    if not piv:
        return [[int(i == j) for j in range(s)] for i in range(s)]
    den = 1
    for r in rows:
        for p in piv:
            x = r.get(p)
            if x:
                den = lcm(den, int(x.denominator))
    C = [[int(r.get(p, ZERO) * den) for p in piv] for r in rows]
    U, S, _, _ = smith_dense(C)
    rk = sum(1 for i in range(min(s, len(piv))) if S[i][i])
    return [U[i] for i in range(rk, s)]


def lattice_basis(gens: Sequence[dict]) -> list[dict]:
    """A Z-basis of the subgroup of QQ^N generated by gens."""
    gens = [g for g in gens if g]
    if not gens:
        return []
    e = Echelon()
    for g in gens:
        e.add(g)
    piv = e.pivots()
    den = 1
    for g in gens:
        for x in g.values():
            den = lcm(den, int(x.denominator))
    C = [[int(g.get(p, ZERO) * den) for p in piv] for g in gens]
    U, S, V, Vi = smith_dense(C)
    rk = sum(1 for i in range(min(len(gens), len(piv))) if S[i][i])
    # rows of U*C = S*Vinv : basis vectors are rows of U*C (first rk)
    out = []
    for i in range(rk):
        out.append(vsum((mpq(U[i][j]), gens[j]) for j in range(len(gens)) if U[i][j]))
    return out


# ---------------------------------------------------------------- QZ groups

def _std(v: dict) -> dict:
    return {i: mpq(x) for i, x in v.items() if x}


class QZGroup:
    """The subgroup ``span_QQ(div) + span_ZZ(lat)`` of QQ^dim."""

    def __init__(self, dim: int, div: Iterable[dict] = (), lat: Iterable[dict] = ()):
        self.dim = dim
        self._ech = span_echelon(_std(v) for v in div)
        self.div = self._ech.basis()
        lat = [self._ech.reduce(_std(v)) for v in lat]
        self._lat_raw = [v for v in lat if v]
        self._lat = None

    @property
    def lat(self) -> list[dict]:
        """Z-basis of the lattice part, reduced modulo the divisible part."""
        if self._lat is None:
            self._lat = lattice_basis(self._lat_raw)
        return self._lat

    @classmethod
    def full(cls, q_coords: Iterable[int], z_coords: Iterable[int], dim: int):
        return cls(dim, [{i: ONE} for i in q_coords], [{i: ONE} for i in z_coords])

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    def is_zero(self):
        return not self.div and not self.lat

    def generators(self):
        return list(self.div), list(self.lat)

    def express(self, v: dict):
        """Write v = sum q_i div_i + sum n_j lat_j; returns (q, n) or None."""
        v = _std(v)
        r = self._ech.reduce(v)
        n = lattice_solve(self.lat, r) if r else [0] * len(self.lat)
        if n is None:
            return None
        w = vadd(v, vsum((mpq(c), g) for c, g in zip(n, self.lat)), -1)
        piv = self._ech.pivots()
        q = [w.get(p, ZERO) for p in piv]
        return q, n

    def contains(self, v: dict) -> bool:
        r = self._ech.reduce(_std(v))
        if not r:
            return True
        return lattice_solve(self.lat, r) is not None

    def contains_group(self, other: "QZGroup") -> bool:
        for v in other.div:
            if self._ech.reduce(v):
                return False
        return all(self.contains(v) for v in other._lat_raw)

    def __eq__(self, other):
        return self.contains_group(other) and other.contains_group(self)

    def __add__(self, other: "QZGroup") -> "QZGroup":
        return QZGroup(self.dim, self.div + other.div, self._lat_raw + other._lat_raw)

    def image(self, M: SparseMatrix) -> "QZGroup":
        return QZGroup(M.nrows, [M.apply(v) for v in self.div], [M.apply(v) for v in self._lat_raw])

    def preimage(self, M: SparseMatrix, target: "QZGroup") -> "QZGroup":
        """{x in self : M x in target}."""
        return preimage(self, M, target)

    def intersect_subspace(self, basis: Sequence[dict]) -> "QZGroup":
        """self ∩ span(basis)."""
        X = QZGroup(self.dim, basis)
        return preimage(X, SparseMatrix.identity(self.dim), self)

    def __repr__(self):
        return f"QZGroup(dim={self.dim}, div={len(self.div)}, lat={len(self.lat)})"


def preimage(X: QZGroup, M: SparseMatrix, R: QZGroup) -> QZGroup:
    """{x in X : M x in R} as a QZGroup in the source space of M."""
    # work modulo the divisible part of R
    V = R._ech
    gW = [V.reduce(M.apply(w)) for w in X.div]
    # U = g'(W); the kernel of g' on W is divisible in the answer
    eU, kerW = column_reduce(gW)
    div_out = [vsum((c, X.div[i]) for i, c in rel.items()) for rel in kerW]
    Xl = X.lat
    gl = [V.reduce(M.apply(l)) for l in Xl]
    Rl = [V.reduce(m) for m in R.lat]
    gl2 = [eU.reduce(v) for v in gl]
    Rl2 = [eU.reduce(v) for v in Rl]
    rows = gl2 + [vscale(v, -1) for v in Rl2]
    lat_out = []
    s = len(Xl)
    for y in int_left_kernel(rows):
        ycoef = y[:s]
        ccoef = y[s:]
        xl = vsum((mpq(c), Xl[i]) for i, c in enumerate(ycoef) if c)
        # find w in W with g'(w) = sum c_j m'_j - g'(xl)
        target = vadd(vsum((mpq(c), Rl[j]) for j, c in enumerate(ccoef) if c),
                      vsum((mpq(c), gl[i]) for i, c in enumerate(ycoef) if c), -1)
        coeffs = _express_tracked(eU, target)
        if coeffs is None:
            raise ArithmeticError("preimage: inconsistent lift")
        w = vsum((c, X.div[i]) for i, c in coeffs.items())
        x = vadd(xl, w)
        if x:
            lat_out.append(x)
    return QZGroup(X.dim, div_out, lat_out)


def _express_tracked(e: Echelon, v: dict):
    if e.reduce(v):
        return None
    out: dict = {}
    for p, c in b_coords(e, v).items():
        viadd(out, e.combos[p], c)
    return out


def constrained_subgroup(L: SparseMatrix, V: Sequence[dict], K: SparseMatrix | None,
                         q_dim: int, z_rank: int) -> QZGroup:
    """{x in QQ^m + ZZ^n : K x = 0 and L x in span V}.

    A flat list cannot tell rational directions from lattice ones, so the
    result is the group itself: ``.div`` spans the rational part and ``.lat``
    the lattice part.
    """
    dim = q_dim + z_rank
    if L.ncols != dim or (K is not None and K.ncols != dim):
        raise ValueError("dimension mismatch")
    X = QZGroup.full(range(q_dim), range(q_dim, dim), dim)
    if K is not None:
        X = preimage(X, K, QZGroup.zero(K.nrows))
    return preimage(X, L, QZGroup(L.nrows, V))


# ---------------------------------------------------------------- invariants

@dataclass(frozen=True)
class AbelianInvariants:
    divisible_rank: int = 0
    qz_rank: int = 0
    free_rank: int = 0
    torsion: tuple = ()

    def is_zero(self):
        return not (self.divisible_rank or self.qz_rank or self.free_rank or self.torsion)

    def __str__(self):
        parts = []

        def pw(sym, k):
            if k == 1:
                parts.append(sym)
            elif k > 1:
                parts.append(f"{sym}^{k}")

        pw("Q", self.divisible_rank)
        pw("Q/Z", self.qz_rank)
        pw("Z", self.free_rank)
        parts += [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"

    def as_dict(self):
        return {"divisible_rank": self.divisible_rank, "qz_rank": self.qz_rank,
                "free_rank": self.free_rank, "torsion": list(self.torsion),
                "text": str(self)}


def classify(X: QZGroup, R: QZGroup) -> AbelianInvariants:
    """Isomorphism type of X/R (R must be contained in X)."""
    if not X.contains_group(R):
        raise ValueError("malformed presentation: relation outside generated subgroup")
    eV = R._ech
    # reduce modulo the divisible part of R
    W1 = span_echelon(eV.reduce(w) for w in X.div)
    L1 = [eV.reduce(l) for l in X.lat]
    M1 = [eV.reduce(m) for m in R.lat]
    a = W1.rank
    L2 = [W1.reduce(l) for l in L1]
    M2 = [W1.reduce(m) for m in M1]
    b = rank(M1) - rank(M2)
    # lattice part Z<L2>/Z<M2>
    basis = lattice_basis(L2)
    if not basis:
        return AbelianInvariants(a - b, b, 0, ())
    e = Echelon()
    for v in basis:
        e.add(v)
    C = []
    for m in M2:
        y = lattice_solve(basis, m)
        if y is None:
            raise ValueError("malformed presentation: relation outside generated subgroup")
        C.append(y)
    nb = len(basis)
    if C:
        _, S, _, _ = smith_dense(C, want_transforms=False)
        diag = [S[i][i] for i in range(min(len(C), nb)) if S[i][i]]
    else:
        diag = []
    free = nb - len(diag)
    tors = tuple(d for d in diag if d > 1)
    return AbelianInvariants(a - b, b, free, tors)


class QZModule:
    """Quotient X/R of subgroups of QQ^m + ZZ^n (coordinates 0..m-1 rational,
    m..m+n-1 integral)."""

    def __init__(self, X: QZGroup, R: QZGroup | None = None, q_dim: int | None = None,
                 z_rank: int = 0, check: bool = True):
        self.X = X
        self.R = R if R is not None else QZGroup.zero(X.dim)
        self.ambient_q_dim = X.dim - z_rank if q_dim is None else q_dim
        self.ambient_z_rank = z_rank
        self._inv = None
        if check and not X.contains_group(self.R):
            raise ValueError("malformed presentation: relation outside generated subgroup")

    @classmethod
    def from_presentation(cls, q_dim, z_rank, generators, relations=(), divisible_generators=(),
                          divisible_relations=()):
        dim = q_dim + z_rank
        X = QZGroup(dim, [vec(v) for v in divisible_generators], [vec(v) for v in generators])
        R = QZGroup(dim, [vec(v) for v in divisible_relations], [vec(v) for v in relations])
        return cls(X, R, q_dim, z_rank)

    @property
    def dim(self):
        return self.X.dim

    @property
    def generators(self):
        return self.X.div + self.X.lat

    @property
    def relations(self):
        return self.R.div + self.R.lat

    @property
    def invariants(self) -> AbelianInvariants:
        if self._inv is None:
            self._inv = classify(self.X, self.R)
        return self._inv

    def normal_form(self) -> AbelianInvariants:
        return self.invariants

    def is_zero(self):
        return self.R.contains_group(self.X)

    def contains(self, v: dict) -> bool:
        return self.X.contains(v)

    def equal_classes(self, u: dict, v: dict) -> bool:
        return self.R.contains(vadd(u, v, -1))

    def is_zero_class(self, v: dict) -> bool:
        return self.R.contains(v)

    def __repr__(self):
        return f"QZModule({self.invariants})"


def qz_normal_form(M: QZModule) -> AbelianInvariants:
    return M.invariants


@dataclass
class QZHom:
    """Homomorphism X/R -> X'/R' induced by a matrix on ambients."""
    source: QZModule
    target: QZModule
    matrix: SparseMatrix
    _checked: bool = field(default=False, repr=False)

    def is_well_defined(self) -> bool:
        M = self.matrix
        return (self.target.X.contains_group(self.source.X.image(M))
                and self.target.R.contains_group(self.source.R.image(M)))

    def kernel_group(self) -> QZGroup:
        return preimage(self.source.X, self.matrix, self.target.R)

    def kernel(self) -> QZModule:
        return QZModule(self.kernel_group(), self.source.R, self.source.ambient_q_dim,
                        self.source.ambient_z_rank)

    def image_group(self) -> QZGroup:
        return self.source.X.image(self.matrix) + self.target.R

    def is_injective(self) -> bool:
        return self.source.R.contains_group(self.kernel_group())

    def is_surjective(self) -> bool:
        return self.image_group().contains_group(self.target.X)

    def is_isomorphism(self) -> bool:
        return self.is_injective() and self.is_surjective()

    def __call__(self, v: dict) -> dict:
        return self.matrix.apply(v)

    def compose(self, first: "QZHom") -> "QZHom":
        """self ∘ first."""
        return QZHom(first.source, self.target, self.matrix @ first.matrix)


def is_exact_at(f: QZHom, g: QZHom) -> bool:
    """Exactness of A -f-> B -g-> C at B."""
    if not g.target.R.contains_group(f.source.X.image(g.matrix @ f.matrix)):
        return False
    K = preimage(f.target.X, g.matrix, g.target.R)
    return f.image_group().contains_group(K)


def same_map(f: QZHom, g: QZHom) -> bool:
    """f and g agree as maps of quotients."""
    D = f.matrix - g.matrix
    return f.target.R.contains_group(f.source.X.image(D))


# ---------------------------------------------------------------- QQ(i)

class QQi:
    """Gaussian rational a + b i."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = mpq(re)
        self.im = mpq(im)

    @classmethod
    def parse(cls, s) -> "QQi":
        if isinstance(s, QQi):
            return s
        if not isinstance(s, str):
            return cls(s)
        t = s.replace(" ", "")
        if not t.endswith("i"):
            return cls(qq(t))
        body = t[:-1]
        k = max(body.rfind("+"), body.rfind("-"))
        if k <= 0:
            im = body if body not in ("", "+", "-") else body + "1"
            return cls(0, qq(im))
        re, im = body[:k], body[k:]
        if im in ("+", "-"):
            im += "1"
        return cls(qq(re), qq(im.lstrip("+")))

    def __str__(self):
        if not self.im:
            return qstr(self.re)
        im = qstr(self.im)
        if not self.re:
            return f"{im}i"
        sign = "" if self.im < 0 else "+"
        return f"{qstr(self.re)}{sign}{im}i"

    __repr__ = __str__

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, QQi):
            return self.re == other.re and self.im == other.im
        return self.im == 0 and self.re == other

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, o):
        if isinstance(o, QQi):
            return QQi(self.re + o.re, self.im + o.im)
        return QQi(self.re + o, self.im)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, QQi):
            return QQi(self.re - o.re, self.im - o.im)
        return QQi(self.re - o, self.im)

    def __rsub__(self, o):
        return QQi(o - self.re, -self.im)

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __mul__(self, o):
        if isinstance(o, QQi):
            return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
        return QQi(self.re * o, self.im * o)

    __rmul__ = __mul__

    def conj(self):
        return QQi(self.re, -self.im)

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("QQi zero")
        return QQi(self.re / n, -self.im / n)

    def __truediv__(self, o):
        if isinstance(o, QQi):
            return self * o.inverse()
        return QQi(self.re / o, self.im / o)


I = QQi(0, 1)


def realify_vector(v: dict) -> dict:
    """{j: a+bi} -> {2j: a, 2j+1: b}."""
    out = {}
    for j, z in v.items():
        z = z if isinstance(z, QQi) else QQi(z)
        if z.re:
            out[2 * j] = z.re
        if z.im:
            out[2 * j + 1] = z.im
    return out


def complexify_vector(v: dict) -> dict:
    out: dict = {}
    for k, x in v.items():
        j, part = divmod(k, 2)
        z = out.get(j, QQi())
        z = z + (QQi(0, x) if part else QQi(x))
        if z:
            out[j] = z
        else:
            out.pop(j, None)
    return out


def realify_matrix(nrows: int, ncols: int, entries) -> SparseMatrix:
    """entries: iterable of (i, j, QQi) describing a QQ(i)-linear map."""
    cols: dict = {}
    for i, j, z in entries:
        z = z if isinstance(z, QQi) else QQi(z)
        # (a+bi)(x+iy) = (ax - by) + i(bx + ay)
        for (ri, cj, v) in ((2 * i, 2 * j, z.re), (2 * i + 1, 2 * j + 1, z.re),
                            (2 * i, 2 * j + 1, -z.im), (2 * i + 1, 2 * j, z.im)):
            if v:
                c = cols.setdefault(cj, {})
                c[ri] = c.get(ri, ZERO) + v
    return SparseMatrix(2 * nrows, 2 * ncols, cols)
