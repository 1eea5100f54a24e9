"""Matrix-valued differential forms with truncated polynomial coefficients
and polynomial dependence on a path parameter t; Chern–Weil transgression
and the type identities built on it.

Coefficients live in QQ(i)[z, zbar, t] ⊗ Λ(dz, dzbar) modulo the ideal of
monomials of weight > W, where weight = polynomial degree in z, zbar plus
form degree (t is weightless).  The ideal is stable under ∂, ∂̄ and wedge,
so the quotient is a differential graded algebra and every algebraic
identity holds exactly.  Choosing W = N + (largest form degree used)
keeps every coefficient of polynomial degree <= N.

An optional per-coordinate cap additionally kills monomials in which some
coordinate j carries weight above the cap (counting z_j, zbar_j, dz_j,
dzbar_j).  That ideal is also stable under ∂, ∂̄, wedge and conjugation;
with cap 1 it keeps the constant-coefficient top forms while staying small.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from math import factorial

from .exact_linalg import QQi, mpq


def _popcount(x):
    return x.bit_count()


@dataclass(frozen=True)
class Truncation:
    total: int
    per_coordinate: int | None = None

    def admits(self, n, e, m) -> bool:
        if sum(e) + m.bit_count() > self.total:
            return False
        c = self.per_coordinate
        if c is None:
            return True
        return all(_coord_weight(n, e, m, j) <= c for j in range(n))

    def to_json(self):
        return {"total": self.total, "per_coordinate": self.per_coordinate}

    @classmethod
    def of(cls, W):
        if isinstance(W, Truncation):
            return W
        if isinstance(W, dict):
            return cls(W["total"], W.get("per_coordinate"))
        return cls(int(W))


def _coord_weight(n, e, m, j):
    return e[j] + e[n + j] + (m >> j & 1) + (m >> (n + j) & 1)


def _coord_weights(n, e, m):
    return tuple(_coord_weight(n, e, m, j) for j in range(n))


def _support(n, e, m):
    lo = (1 << n) - 1
    out = (m & lo) | (m >> n)
    for j in range(n):
        if e[j] or e[n + j]:
            out |= 1 << j
    return out


def _acc_term(out, e1, m1, t1, c1, e2, m2, t2, c2):
    key = (tuple(a + b for a, b in zip(e1, e2)), m1 | m2, t1 + t2)
    v = c1 * c2
    if _merge_sign(m1, m2) < 0:
        v = -v
    w = out.get(key)
    w = v if w is None else w + v
    if w:
        out[key] = w
    else:
        out.pop(key, None)


def _merge_sign(a: int, b: int) -> int:
    """Sign of reordering gens(a) followed by gens(b) into ascending order."""
    inv = 0
    bb = b
    while bb:
        low = bb & -bb
        j = low.bit_length() - 1
        inv += _popcount(a >> (j + 1))
        bb ^= low
    return -1 if inv & 1 else 1


class PolyForm:
    """Sparse form: {(exponents, form_mask, t_power): QQi}.

    Form generators: bit i is dz_{i+1} for i < n, dzbar_{i-n+1} for n <= i < 2n.
    Exponents: first n entries for z, last n for zbar.
    """

    __slots__ = ("n", "W", "terms")

    def __init__(self, n: int, W, terms: dict | None = None):
        self.n, self.W = n, Truncation.of(W)
        self.terms = {}
        for key, c in (terms or {}).items():
            c = c if isinstance(c, QQi) else QQi(c)
            if c and self.W.admits(n, key[0], key[1]):
                self.terms[key] = c

    @staticmethod
    def _weight(key):
        e, m, _ = key
        return sum(e) + _popcount(m)

    def _new(self, terms):
        out = PolyForm(self.n, self.W)
        out.terms = terms
        return out

    # -- constructors
    @classmethod
    def const(cls, n, W, c=1):
        return cls(n, W, {((0,) * (2 * n), 0, 0): QQi.parse(c) if isinstance(c, str) else c})

    @classmethod
    def monomial(cls, n, W, z=(), zb=(), forms=(), t=0, c=1):
        e = [0] * (2 * n)
        for i in z:
            e[i] += 1
        for i in zb:
            e[n + i] += 1
        sign, mask = 1, 0
        for g in forms:
            if mask >> g & 1:
                return cls(n, W)
            sign *= _merge_sign(mask, 1 << g)
            mask |= 1 << g
        c = c if isinstance(c, QQi) else QQi(c)
        return cls(n, W, {(tuple(e), mask, t): c * sign})

    @classmethod
    def zero(cls, n, W):
        return cls(n, W)

    # -- basic arithmetic
    def _check(self, other):
        if (self.n, self.W) != (other.n, other.W):
            raise ValueError("forms over different coordinate systems")

    def __add__(self, other):
        if not isinstance(other, PolyForm):
            other = PolyForm.const(self.n, self.W, other)
        self._check(other)
        t = dict(self.terms)
        for k, c in other.terms.items():
            v = t.get(k)
            v = c if v is None else v + c
            if v:
                t[k] = v
            else:
                t.pop(k, None)
        return self._new(t)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, PolyForm):
            return self + (-other)
        return self + (-QQi.parse(other))

    def scale(self, c):
        c = c if isinstance(c, QQi) else QQi(c)
        if not c:
            return PolyForm(self.n, self.W)
        return self._new({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        """Wedge product (or scaling by a number)."""
        if not isinstance(other, PolyForm):
            return self.scale(other)
        self._check(other)
        W, n = self.W.total, self.n
        cap = self.W.per_coordinate
        if cap == 1:
            return self._new(self._mul_disjoint(other))
        right = sorted(((sum(e) + m.bit_count(), e, m, t, c,
                         _coord_weights(n, e, m) if cap is not None else None)
                        for (e, m, t), c in other.terms.items()), key=lambda x: x[0])
        out: dict = {}
        for (e1, m1, t1), c1 in self.terms.items():
            budget = W - sum(e1) - m1.bit_count()
            cw1 = _coord_weights(n, e1, m1) if cap is not None else None
            for w2, e2, m2, t2, c2, cw2 in right:
                if w2 > budget:
                    break
                if m1 & m2:
                    continue
                if cap is not None and any(a + b > cap for a, b in zip(cw1, cw2)):
                    continue
                _acc_term(out, e1, m1, t1, c1, e2, m2, t2, c2)
        return self._new(out)

    def _mul_disjoint(self, other):
        """Wedge under per-coordinate cap 1: factors must use disjoint coordinates."""
        n, W = self.n, self.W.total
        groups: dict = {}
        for (e, m, t), c in other.terms.items():
            groups.setdefault(_support(n, e, m), []).append((sum(e) + m.bit_count(), e, m, t, c))
        out: dict = {}
        for (e1, m1, t1), c1 in self.terms.items():
            s1 = _support(n, e1, m1)
            budget = W - sum(e1) - m1.bit_count()
            for s2, lst in groups.items():
                if s1 & s2:
                    continue
                for w2, e2, m2, t2, c2 in lst:
                    if w2 <= budget:
                        _acc_term(out, e1, m1, t1, c1, e2, m2, t2, c2)
        return out

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if isinstance(other, PolyForm):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    # -- structure
    def degrees(self):
        return {_popcount(m) for (_, m, _) in self.terms}

    def types(self):
        n = self.n
        lo = (1 << n) - 1
        return {(_popcount(m & lo), _popcount(m >> n)) for (_, m, _) in self.terms}

    def component(self, p, q):
        n = self.n
        lo = (1 << n) - 1
        return self._new({k: c for k, c in self.terms.items()
                          if _popcount(k[1] & lo) == p and _popcount(k[1] >> n) == q})

    def weight_part(self, w):
        return self._new({k: c for k, c in self.terms.items() if self._weight(k) == w})

    def t_degree(self):
        return max((k[2] for k in self.terms), default=0)

    # -- derivatives
    def _deriv(self, anti):
        n = self.n
        out: dict = {}
        for (e, m, tp), c in self.terms.items():
            for j in range(n):
                var = n + j if anti else j
                if not e[var]:
                    continue
                g = var
                if m >> g & 1:
                    continue
                sign = _merge_sign(1 << g, m)
                ne = list(e)
                ne[var] -= 1
                key = (tuple(ne), m | (1 << g), tp)
                v = c * (e[var] * sign)
                w = out.get(key)
                w = v if w is None else w + v
                if w:
                    out[key] = w
                else:
                    out.pop(key, None)
        return self._new(out)

    def del_(self):
        return self._deriv(False)

    def delbar(self):
        return self._deriv(True)

    def d(self):
        return self.del_() + self.delbar()

    def conj(self):
        """z <-> zbar, dz <-> dzbar, complex conjugate coefficients."""
        n = self.n
        out = {}
        for (e, m, tp), c in self.terms.items():
            ne = tuple(e[n:]) + tuple(e[:n])
            gens = [g for g in range(2 * n) if m >> g & 1]
            mapped = [g + n if g < n else g - n for g in gens]
            inv = sum(1 for i in range(len(mapped)) for j in range(i + 1, len(mapped)) if mapped[i] > mapped[j])
            nm = 0
            for g in mapped:
                nm |= 1 << g
            v = c.conj()
            out[(ne, nm, tp)] = -v if inv & 1 else v
        return self._new(out)

    # -- t
    def integrate_t(self):
        """∫_0^1 ... dt, exact."""
        out: dict = {}
        for (e, m, tp), c in self.terms.items():
            key = (e, m, 0)
            v = c * mpq(1, tp + 1)
            w = out.get(key)
            w = v if w is None else w + v
            if w:
                out[key] = w
            else:
                out.pop(key, None)
        return self._new(out)

    def at_t(self, value):
        out: dict = {}
        for (e, m, tp), c in self.terms.items():
            key = (e, m, 0)
            v = c * (mpq(value) ** tp)
            w = out.get(key)
            w = v if w is None else w + v
            if w:
                out[key] = w
            else:
                out.pop(key, None)
        return self._new(out)

    def constant_term(self) -> QQi:
        return self.terms.get(((0,) * (2 * self.n), 0, 0), QQi(0))

    def __repr__(self):
        return f"PolyForm({len(self.terms)} terms)"

    def to_json(self):
        return [[list(e), m, tp, str(c)] for (e, m, tp), c in sorted(self.terms.items(), key=lambda kv: kv[0])]

    @classmethod
    def from_json(cls, n, W, data):
        return cls(n, W, {(tuple(e), m, tp): QQi.parse(c) for e, m, tp, c in data})


class MatrixForm:
    def __init__(self, rows):
        self.rows = [list(r) for r in rows]
        self.size = len(self.rows)
        if any(len(r) != self.size for r in self.rows):
            raise ValueError("matrix forms must be square")
        f = self.rows[0][0]
        self.n, self.W = f.n, f.W

    @classmethod
    def zeros(cls, size, n, W):
        return cls([[PolyForm(n, W) for _ in range(size)] for _ in range(size)])

    @classmethod
    def identity(cls, size, n, W):
        return cls([[PolyForm.const(n, W, 1 if i == j else 0) for j in range(size)] for i in range(size)])

    @classmethod
    def from_constants(cls, M, n, W):
        return cls([[PolyForm.const(n, W, c if isinstance(c, QQi) else QQi(c)) for c in row] for row in M])

    @classmethod
    def blocks(cls, A, B, C, D):
        """[[A, B], [C, D]]."""
        rows = []
        for i in range(A.size):
            rows.append(A.rows[i] + B.rows[i])
        for i in range(C.size):
            rows.append(C.rows[i] + D.rows[i])
        return cls(rows)

    @classmethod
    def block_diag(cls, A, B):
        Z1 = cls._rect_zero(A.size, B.size, A.n, A.W)
        Z2 = cls._rect_zero(B.size, A.size, A.n, A.W)
        rows = [A.rows[i] + Z1[i] for i in range(A.size)] + [Z2[i] + B.rows[i] for i in range(B.size)]
        return cls(rows)

    @staticmethod
    def _rect_zero(r, c, n, W):
        return [[PolyForm(n, W) for _ in range(c)] for _ in range(r)]

    def map(self, fn):
        return MatrixForm([[fn(x) for x in r] for r in self.rows])

    def __add__(self, o):
        return MatrixForm([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, o.rows)])

    def __sub__(self, o):
        return MatrixForm([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, o.rows)])

    def __neg__(self):
        return self.map(lambda x: -x)

    def scale(self, c):
        if isinstance(c, PolyForm):
            return self.map(lambda x: c * x)
        return self.map(lambda x: x.scale(c))

    def __matmul__(self, o):
        s = self.size
        out = []
        for i in range(s):
            row = []
            for j in range(s):
                acc = PolyForm(self.n, self.W)
                for k in range(s):
                    a, b = self.rows[i][k], o.rows[k][j]
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return MatrixForm(out)

    def trace(self) -> PolyForm:
        acc = PolyForm(self.n, self.W)
        for i in range(self.size):
            acc = acc + self.rows[i][i]
        return acc

    def del_(self):
        return self.map(PolyForm.del_)

    def delbar(self):
        return self.map(PolyForm.delbar)

    def d(self):
        return self.map(PolyForm.d)

    def conj_transpose(self):
        s = self.size
        return MatrixForm([[self.rows[j][i].conj() for j in range(s)] for i in range(s)])

    def conj(self):
        return self.map(PolyForm.conj)

    def component(self, p, q):
        return self.map(lambda x: x.component(p, q))

    def integrate_t(self):
        return self.map(PolyForm.integrate_t)

    def is_zero(self):
        return all(not x for r in self.rows for x in r)

    def __eq__(self, o):
        return isinstance(o, MatrixForm) and all(a == b for r, s in zip(self.rows, o.rows) for a, b in zip(r, s))

    def types(self):
        out = set()
        for r in self.rows:
            for x in r:
                out |= x.types()
        return out

    def degrees(self):
        out = set()
        for r in self.rows:
            for x in r:
                out |= x.degrees()
        return out

    def constant_matrix(self):
        return [[x.constant_term() for x in r] for r in self.rows]

    def power(self, m):
        out = MatrixForm.identity(self.size, self.n, self.W)
        for _ in range(m):
            out = out @ self
        return out

    def inverse(self):
        """Neumann series around the invertible constant term."""
        s, n, W = self.size, self.n, self.W
        C0 = self.constant_matrix()
        Cinv = _invert_qqi(C0)
        G0 = MatrixForm.from_constants(C0, n, W)
        R = self - G0
        for r in R.rows:
            for x in r:
                for (e, m, tp) in x.terms:
                    if not sum(e) and not m:
                        raise ValueError("weight-0 part depends on t; Neumann series would not terminate")
        Ginv = MatrixForm.from_constants(Cinv, n, W)
        X = -(Ginv @ R)
        term = MatrixForm.identity(s, n, W)
        acc = MatrixForm.identity(s, n, W)
        for _ in range(W.total + 1):
            term = term @ X
            if term.is_zero():
                break
            acc = acc + term
        return acc @ Ginv

    def __repr__(self):
        return f"MatrixForm({self.size}x{self.size})"

    def to_json(self):
        return [[x.to_json() for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, n, W, data):
        return cls([[PolyForm.from_json(n, W, x) for x in r] for r in data])


def _invert_qqi(M):
    s = len(M)
    A = [list(r) + [QQi(1 if i == j else 0) for j in range(s)] for i, r in enumerate(M)]
    for c in range(s):
        piv = next((r for r in range(c, s) if A[r][c]), None)
        if piv is None:
            raise ValueError("singular constant term")
        A[c], A[piv] = A[piv], A[c]
        inv = A[c][c].inverse()
        A[c] = [x * inv for x in A[c]]
        for r in range(s):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [r[s:] for r in A]


def graded_commutator(A: MatrixForm, B: MatrixForm) -> MatrixForm:
    """[A, B] = AB - (-1)^{|A||B|} BA for homogeneous A, B."""
    da, db = A.degrees() or {0}, B.degrees() or {0}
    if len(da) > 1 or len(db) > 1:
        raise ValueError("graded commutator needs homogeneous arguments")
    sign = (-1) ** (da.pop() * db.pop())
    return (A @ B) - (B @ A).scale(sign)


# ---------------------------------------------------------------- connections

def is_hermitian(H: MatrixForm) -> bool:
    return H == H.conj_transpose()


def hermitian_connection(H: MatrixForm) -> MatrixForm:
    if not is_hermitian(H):
        raise ValueError("metric is not hermitian")
    return H.del_() @ H.inverse()


def curvature(theta: MatrixForm) -> MatrixForm:
    return theta.d() - theta @ theta


# ---------------------------------------------------------------- invariant polynomials

def trace_power(*args: MatrixForm) -> PolyForm:
    P = args[0]
    for A in args[1:-1]:
        P = P @ A
    if len(args) == 1:
        return P.trace()
    last = args[-1]
    acc = PolyForm(P.n, P.W)
    for i in range(P.size):
        for j in range(P.size):
            a, b = P.rows[i][j], last.rows[j][i]
            if a and b:
                acc = acc + a * b
    return acc


def _cycles(perm):
    seen, out = set(), []
    for i in range(len(perm)):
        if i in seen:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = perm[j]
        out.append(cyc)
    return out


def _perm_sign(perm):
    return (-1) ** sum(len(c) - 1 for c in _cycles(perm))


def polarized_symmetric(*args: MatrixForm) -> PolyForm:
    """C_k(X_1..X_k) = (1/k!) Σ_π sgn(π) Π_cycles tr(X_{i1} ... X_{im}).

    At most one argument may have odd degree (traces then commute).
    """
    k = len(args)
    n, W = args[0].n, args[0].W
    acc = PolyForm(n, W)
    for perm in itertools.permutations(range(k)):
        term = PolyForm.const(n, W, _perm_sign(perm))
        odd_first = []
        for cyc in _cycles(perm):
            tr = trace_power(*[args[i] for i in cyc])
            odd_first.append(tr)
        # put the odd trace (if any) first, so ordering never introduces a sign
        odd_first.sort(key=lambda f: -(max(f.degrees() or {0}) % 2))
        for tr in odd_first:
            term = term * tr
        acc = acc + term
    return acc.scale(mpq(1, factorial(k)))


def sigma_k(X: MatrixForm, k: int) -> PolyForm:
    """k-th elementary symmetric function as the sum of principal k-minors (even-degree entries)."""
    s = X.size
    acc = PolyForm(X.n, X.W)
    if k == 0:
        return PolyForm.const(X.n, X.W, 1)
    for idx in itertools.combinations(range(s), k):
        for perm in itertools.permutations(range(k)):
            term = PolyForm.const(X.n, X.W, _perm_sign(perm))
            for a in range(k):
                term = term * X.rows[idx[a]][idx[perm[a]]]
                if not term:
                    break
            acc = acc + term
    return acc


def total_chern_form(Omega: MatrixForm) -> PolyForm:
    acc = PolyForm.const(Omega.n, Omega.W, 1)
    for k in range(1, Omega.size + 1):
        acc = acc + sigma_k(Omega, k)
    return acc


def chern_character_form(Omega: MatrixForm, k: int) -> PolyForm:
    return Omega.power(k).trace().scale(mpq(1, factorial(k)))


def beta_kk(k: int) -> mpq:
    """∫_0^1 t^{k-1}(1-t)^{k-1} dt."""
    return mpq(factorial(k - 1) ** 2, factorial(2 * k - 1))


# ---------------------------------------------------------------- transgression

def t_form(n, W):
    return PolyForm.monomial(n, W, t=1)


def transgression(theta0: MatrixForm, theta1: MatrixForm, k: int, kind: str = "trace"):
    """T = k ∫_0^1 Φ(η, Ω_t, ..., Ω_t) dt with θ_t = θ_0 + tη.

    Returns (T, data) where data holds η, θ_t and Ω_t.
    """
    n, W = theta0.n, theta0.W
    eta = theta1 - theta0
    theta_t = theta0 + eta.scale(t_form(n, W))
    Omega_t = curvature(theta_t)
    args = [eta] + [Omega_t] * (k - 1)
    if kind == "trace":
        integrand = trace_power(*args)
    elif kind == "chern":
        integrand = polarized_symmetric(*args)
    else:
        raise ValueError(f"unknown invariant polynomial {kind}")
    T = integrand.integrate_t().scale(k)
    return T, {"eta": eta, "theta_t": theta_t, "Omega_t": Omega_t}


# ---------------------------------------------------------------- scenarios

def random_poly(rng: random.Random, n, W, N, terms=2, holomorphic=False, constant=None, min_degree=1):
    f = PolyForm.const(n, W, constant) if constant is not None else PolyForm(n, W)
    for _ in range(terms):
        deg = rng.randint(min_degree, max(N, min_degree))
        z, zb = [], []
        for _ in range(deg):
            if holomorphic or rng.random() < 0.5:
                z.append(rng.randrange(n))
            else:
                zb.append(rng.randrange(n))
        c = QQi(rng.randint(-2, 2), rng.randint(-2, 2))
        f = f + PolyForm.monomial(n, W, z, zb, c=c)
    return f


def random_hermitian(rng, size, n, W, N, identity=False):
    if identity:
        return MatrixForm.identity(size, n, W)
    rows = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            if i == j:
                # diagonal dominance keeps the constant term positive definite
                f = random_poly(rng, n, W, N, terms=2, constant=QQi(2 * size + rng.randint(0, 2)))
                rows[i][i] = (f + f.conj()).scale(mpq(1, 2))
            else:
                f = random_poly(rng, n, W, N, terms=1, constant=QQi(rng.randint(-1, 1), rng.randint(-1, 1)))
                rows[i][j] = f
                rows[j][i] = f.conj()
    H = MatrixForm(rows)
    assert is_hermitian(H)
    return H


def gauge_connection(theta_tilde: MatrixForm, g: MatrixForm) -> MatrixForm:
    """Rewrite a connection matrix in the frame related by g: -g^{-1}dg + g^{-1}θ̃g."""
    gi = g.inverse()
    return -(gi @ g.d()) + gi @ theta_tilde @ g


@dataclass
class Scenario:
    """Local data: transition matrix g, metric H, dims; connections computed lazily."""
    g: MatrixForm
    H: MatrixForm
    k: int
    n: int
    trunc: int
    meta: dict = field(default_factory=dict)

    @property
    def W(self):
        return self.g.W

    def theta0(self):
        return hermitian_connection(self.H)

    def theta1(self):
        """Hermitian connection of gHg*, moved back to the original frame."""
        Ht = self.g @ self.H @ self.g.conj_transpose()
        return gauge_connection(hermitian_connection(Ht), self.g)

    def eta_closed_form(self):
        """H ∂g* (g*)^{-1} H^{-1} - g^{-1} ∂̄g."""
        gs = self.g.conj_transpose()
        Hi = self.H.inverse()
        return self.H @ gs.del_() @ gs.inverse() @ Hi - self.g.inverse() @ self.g.delbar()

    def to_json(self):
        return {"kind": "matrix-form-scenario", "g": self.g.to_json(), "H": self.H.to_json(),
                "k": self.k, "n": self.n, "trunc": self.trunc, "W": self.W.to_json(), "meta": self.meta}

    @classmethod
    def from_json(cls, d):
        n, W = d["n"], d["W"]
        return cls(MatrixForm.from_json(n, W, d["g"]), MatrixForm.from_json(n, W, d["H"]),
                   d["k"], n, d["trunc"], d.get("meta", {}))


def weight_cap(trunc: int, k: int, n: int) -> int:
    return trunc + min(2 * k, 2 * n)


def unipotent_scenario(rng: random.Random, k: int, n: int, trunc: int = 2, m: int = 1, r: int = 1,
                       identity_metric=False, A=None, per_coordinate=None) -> Scenario:
    """g = [[I_m, 0], [A, I_r]] with random non-holomorphic A; H = diag(H1, H2)."""
    W = Truncation(weight_cap(trunc, k, n), per_coordinate)
    if A is None:
        A = [[random_poly(rng, n, W, trunc, terms=2) for _ in range(m)] for _ in range(r)]
    rows = [[PolyForm.const(n, W, 1 if i == j else 0) for j in range(m)] + [PolyForm(n, W)] * r for i in range(m)]
    rows += [list(A[i]) + [PolyForm.const(n, W, 1 if i == j else 0) for j in range(r)] for i in range(r)]
    g = MatrixForm(rows)
    H1 = random_hermitian(rng, m, n, W, trunc, identity_metric)
    H2 = random_hermitian(rng, r, n, W, trunc, identity_metric)
    H = MatrixForm.block_diag(H1, H2)
    return Scenario(g, H, k, n, trunc, {"shape": "unipotent", "m": m, "r": r})


def general_scenario(rng: random.Random, k: int, n: int, trunc: int = 2, size: int = 2,
                     identity_metric=False, per_coordinate=None, terms=1) -> Scenario:
    """Random smooth isomorphism g with invertible constant term."""
    W = Truncation(weight_cap(trunc, k, n), per_coordinate)
    while True:
        C = [[QQi(rng.randint(-2, 2), rng.randint(-1, 1)) for _ in range(size)] for _ in range(size)]
        try:
            _invert_qqi(C)
            break
        except ValueError:
            continue
    g = MatrixForm([[random_poly(rng, n, W, trunc, terms=terms, constant=C[i][j]) for j in range(size)]
                    for i in range(size)])
    H = random_hermitian(rng, size, n, W, trunc, identity_metric)
    return Scenario(g, H, k, n, trunc, {"shape": "general", "size": size})


# ---------------------------------------------------------------- verifications

@dataclass
class Report:
    name: str
    ok: bool
    checks: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "ok": self.ok, "checks": self.checks,
                "residual_terms": {k: len(v.terms) if isinstance(v, PolyForm) else v
                                   for k, v in self.residuals.items()}}


def verify_low_type_vanishing(sc: Scenario, k: int | None = None) -> Report:
    """Components T^{i,2k-1-i} vanish for i < k-1 (both trace and polarized Chern Φ)."""
    k = k or sc.k
    th0, th1 = sc.theta0(), sc.theta1()
    checks, res = {}, {}
    eta = th1 - th0
    checks["eta_matches_closed_form"] = eta == sc.eta_closed_form()
    _, data = transgression(th0, th1, 1)
    theta_t = data["theta_t"]
    Om = curvature(theta_t)
    checks["Omega_t_02_zero"] = Om.component(0, 2).is_zero()
    for kind in ("trace", "chern"):
        T, _ = transgression(th0, th1, k, kind)
        for i in range(0, k - 1):
            c = T.component(i, 2 * k - 1 - i)
            checks[f"{kind}_T[{i},{2*k-1-i}]=0"] = c.is_zero()
            if c:
                res[f"{kind}_T[{i},{2*k-1-i}]"] = c
    return Report("low-type-vanishing", all(checks.values()), checks, res)


def verify_dbar_exact_component(sc: Scenario, k: int | None = None):
    """T^{k-1,k} = ∂̄S with S = k∫ -tr(η^{0,1} η^{1,0} (Ω_t^{1,1})^{k-2}) t dt (metric normalized to I)."""
    k = k or sc.k
    n, W = sc.n, sc.W
    th0, th1 = sc.theta0(), sc.theta1()
    T, data = transgression(th0, th1, k, "trace")
    eta = data["eta"]
    e10, e01 = eta.component(1, 0), eta.component(0, 1)
    Om11 = data["Omega_t"].component(1, 1)
    t = t_form(n, W)
    checks, res = {}, {}
    if k == 1:
        c = T.component(0, 1)
        checks["T[0,1]=0"] = c.is_zero()
        return PolyForm(n, W), Report("dbar-exact-component", c.is_zero(), checks, {"T[0,1]": c} if c else {})
    # intermediate identities
    ee = eta @ eta
    checks["[Ω11,η]=t d(η∧η)"] = graded_commutator(Om11, eta) == ee.d().scale(t)
    P = MatrixForm.identity(sc.g.size, n, W)
    for m in range(1, k):
        P = P @ Om11
        lhs = P.delbar()
        rhs = graded_commutator(P, e01).scale(-1).scale(t)
        checks[f"∂̄(Ω11^{m})=-t[Ω11^{m},η01]"] = lhs == rhs
        if lhs != rhs:
            res[f"bianchi_{m}"] = (lhs - rhs).trace()
    integrand = trace_power(e01, e10, Om11.power(k - 2)) * t
    S = integrand.integrate_t().scale(-k)
    lhs = T.component(k - 1, k)
    rhs = S.delbar()
    checks["T[k-1,k]=∂̄S"] = lhs == rhs
    alt = trace_power(e01, Om11.power(k - 1)).integrate_t().scale(k)
    checks["T[k-1,k]=k∫tr(η01 Ω11^{k-1})"] = lhs == alt
    if lhs != rhs:
        res["T-∂̄S"] = lhs - rhs
    return S, Report("dbar-exact-component", all(checks.values()), checks, res)


def type_vanishing(theta0: MatrixForm, theta1: MatrixForm, k: int) -> Report:
    """T^{p,q} = 0 for p < q when both connections are of type (1,0)."""
    checks, res = {}, {}
    for kind in ("chern", "trace"):
        T, data = transgression(theta0, theta1, k, kind)
        bad = sorted((p, q) for (p, q) in T.types() if p < q)
        checks[f"{kind}: no (p,q) with p<q"] = not bad
        checks[f"{kind}: Ω_t types ⊂ {{(1,1),(2,0)}}"] = data["Omega_t"].types() <= {(1, 1), (2, 0)}
        for (p, q) in bad:
            res[f"{kind}_T[{p},{q}]"] = T.component(p, q)
    return Report("type-vanishing", all(checks.values()), checks, res)


def random_type_10(rng, size, n, W, N) -> MatrixForm:
    """Random (1,0) connection matrix (a stand-in for a Bott connection)."""
    rows = []
    for _ in range(size):
        row = []
        for _ in range(size):
            f = PolyForm(n, W)
            for j in range(n):
                f = f + random_poly(rng, n, W, N, terms=1, constant=QQi(rng.randint(-1, 1)), min_degree=1) * \
                    PolyForm.monomial(n, W, forms=(j,))
            row.append(f)
        rows.append(row)
    return MatrixForm(rows)


@dataclass
class NadelResult:
    k: int
    form: PolyForm
    closed_form: PolyForm
    match: bool
    coefficient: mpq
    vacuous: bool

    def as_dict(self):
        return {"k": self.k, "match": self.match, "coefficient": str(self.coefficient),
                "vacuous": self.vacuous, "form_terms": len(self.form.terms),
                "closed_form_terms": len(self.closed_form.terms)}


def nadel(sc: Scenario, k: int | None = None) -> NadelResult:
    """(0,2k-1) part of T_{Ψ_k} against -k B(k,k) tr((g^{-1}∂̄g)^{2k-1})."""
    k = k or sc.k
    th0, th1 = sc.theta0(), sc.theta1()
    T, _ = transgression(th0, th1, k, "trace")
    comp = T.component(0, 2 * k - 1)
    a = sc.g.inverse() @ sc.g.delbar()
    coeff = -k * beta_kk(k)
    closed = a.power(2 * k - 1).trace().scale(coeff)
    return NadelResult(k, comp, closed, comp == closed, coeff, 2 * k - 1 > sc.n)


def whitney_form_check(O1: MatrixForm, O2: MatrixForm) -> Report:
    lhs = total_chern_form(MatrixForm.block_diag(O1, O2))
    rhs = total_chern_form(O1) * total_chern_form(O2)
    checks = {"c(Ω1⊕Ω2)=c(Ω1)∧c(Ω2)": lhs == rhs}
    for k in range(1, O1.size + O2.size + 1):
        a = sigma_k(MatrixForm.block_diag(O1, O2), k)
        b = PolyForm(O1.n, O1.W)
        for i in range(0, k + 1):
            if i <= O1.size and k - i <= O2.size:
                b = b + sigma_k(O1, i) * sigma_k(O2, k - i)
        checks[f"c_{k}"] = a == b
    return Report("whitney", all(checks.values()), checks, {} if lhs == rhs else {"diff": lhs - rhs})


def random_11_curvature(rng, size, n, W, N) -> MatrixForm:
    """Random matrix of (1,1)-forms."""
    rows = []
    for _ in range(size):
        row = []
        for _ in range(size):
            f = PolyForm(n, W)
            for _ in range(2):
                i, j = rng.randrange(n), rng.randrange(n)
                f = f + random_poly(rng, n, W, N, terms=1, constant=QQi(rng.randint(-2, 2), rng.randint(-1, 1))) * \
                    PolyForm.monomial(n, W, forms=(i, n + j))
            row.append(f)
        rows.append(row)
    return MatrixForm(rows)


def hermitian_pair(rng, k, n, trunc=2, size=2, per_coordinate=None):
    """Connections of two random hermitian metrics on the same frame."""
    W = Truncation(weight_cap(trunc, k, n), per_coordinate)
    H0 = random_hermitian(rng, size, n, W, trunc)
    H1 = random_hermitian(rng, size, n, W, trunc)
    return hermitian_connection(H0), hermitian_connection(H1)


def bott_pair(rng, k, n, trunc=2, size=2, per_coordinate=None):
    """An arbitrary (1,0) connection against a hermitian one."""
    W = Truncation(weight_cap(trunc, k, n), per_coordinate)
    return random_type_10(rng, size, n, W, trunc), hermitian_connection(random_hermitian(rng, size, n, W, trunc))


def chern_weil_form(Omega: MatrixForm, k: int, kind: str = "trace") -> PolyForm:
    if kind == "trace":
        return Omega.power(k).trace()
    return polarized_symmetric(*([Omega] * k))


def telescoping(theta0, theta1, theta2, k, kind="trace") -> Report:
    """dT(θ0,θ1) = Φ(Ω1) - Φ(Ω0), and the three transgressions agree modulo exact forms."""
    T01, _ = transgression(theta0, theta1, k, kind)
    T12, _ = transgression(theta1, theta2, k, kind)
    T02, _ = transgression(theta0, theta2, k, kind)
    P = [chern_weil_form(curvature(th), k, kind) for th in (theta0, theta1, theta2)]
    checks = {"dT01=Φ1-Φ0": T01.d() == P[1] - P[0],
              "dT12=Φ2-Φ1": T12.d() == P[2] - P[1],
              "d(T01+T12-T02)=0": (T01 + T12 - T02).d().is_zero()}
    return Report("telescoping", all(checks.values()), checks)
