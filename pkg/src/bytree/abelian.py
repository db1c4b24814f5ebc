"""Finitely generated abelian groups given by integer presentations.

A group is ``Z^n`` modulo the row span of an integer relation matrix.
Elements are integer column vectors of length ``n``; an endomorphism is an
``n x n`` integer matrix acting on column vectors that maps the relation
lattice into itself.  All arithmetic is exact Python integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence

from sympy import Poly, cyclotomic_poly, divisors, symbols

from .errors import ComputationError, SNotDivisorClosed

Vector = tuple[int, ...]
Matrix = list[list[int]]

ORDER_CAP = 10**6


# ---------------------------------------------------------------------------
# matrix helpers


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def zeros(m: int, n: int) -> Matrix:
    return [[0] * n for _ in range(m)]


def transpose(M: Sequence[Sequence[int]], ncols: int | None = None) -> Matrix:
    if not M:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*M)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    n = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [0] * n
        for a, brow in zip(row, B):
            if a:
                for j, b in enumerate(brow):
                    if b:
                        acc[j] += a * b
        out.append(acc)
    return out


def matvec(A: Sequence[Sequence[int]], x: Sequence[int]) -> Vector:
    return tuple(sum(a * b for a, b in zip(row, x)) for row in A)


def matpow(A: Sequence[Sequence[int]], k: int) -> Matrix:
    result = identity(len(A))
    base = [list(r) for r in A]
    while k:
        if k & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        k >>= 1
    return result


def matadd(A, B, scale: int = 1) -> Matrix:
    return [[a + scale * b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def determinant(M: Sequence[Sequence[int]]) -> int:
    """Fraction-free (Bareiss) determinant."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(r) for r in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k]), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def smith_normal_form(
    M: Sequence[Sequence[int]],
    ncols: int | None = None,
    track_U: bool = True,
    track_V: bool = True,
    inverse: list | None = None,
) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(U, D, V)`` with ``U*M*V = D`` diagonal and ``U``, ``V`` unimodular.

    The diagonal of ``D`` is non-negative and forms a divisibility chain,
    with zeros last. An untracked transform is returned as ``None``. If
    ``inverse`` is a list, the inverse of ``V`` is appended to it.
    """
    D = [[int(x) for x in row] for row in M]
    m = len(D)
    n = len(D[0]) if m else (ncols or 0)
    U = identity(m) if track_U else None
    V = identity(n) if track_V else None
    W = identity(n) if inverse is not None else None
    t = 0

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        if U is not None:
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        # rows above t are already zero outside the diagonal
        for row in D[t:]:
            row[i], row[j] = row[j], row[i]
        if V is not None:
            for row in V:
                row[i], row[j] = row[j], row[i]
        if W is not None:
            W[i], W[j] = W[j], W[i]

    def add_row(dst, src, k):
        D[dst] = [a + k * b for a, b in zip(D[dst], D[src])]
        if U is not None:
            U[dst] = [a + k * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, k):
        for row in D[t:]:
            if row[src]:
                row[dst] += k * row[src]
        if V is not None:
            for row in V:
                row[dst] += k * row[src]
        if W is not None:
            W[src] = [a - k * b for a, b in zip(W[src], W[dst])]

    done = False
    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                row = D[i]
                for j in range(t, n):
                    x = row[j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
                        if best[0] == 1:
                            break
                if best is not None and best[0] == 1:
                    break
            if best is None:
                done = True
                break
            _, i, j = best
            swap_rows(t, i)
            swap_cols(t, j)
            p = D[t][t]
            clean = True
            for i in range(t + 1, m):
                if D[i][t]:
                    add_row(i, t, -(D[i][t] // p))
                    clean = clean and D[i][t] == 0
            for j in range(t + 1, n):
                if D[t][j]:
                    add_col(j, t, -(D[t][j] // p))
                    clean = clean and D[t][j] == 0
            if not clean:
                continue
            if p in (1, -1):
                break
            bad = next((i for i in range(t + 1, m) if any(D[i][j] % p for j in range(t + 1, n))), None)
            if bad is None:
                break
            add_row(t, bad, 1)
        if D[t][t] < 0:
            D[t] = [-x for x in D[t]]
            if U is not None:
                U[t] = [-x for x in U[t]]
        if done:
            break
    if inverse is not None:
        inverse.append(W)
    return U, D, V


def integer_kernel(M: Sequence[Sequence[int]], ncols: int) -> list[Vector]:
    """A basis of ``{x in Z^ncols : M x = 0}``."""
    if not M:
        return [tuple(int(i == j) for i in range(ncols)) for j in range(ncols)]
    _, D, V = smith_normal_form(M, ncols, track_U=False)
    r = sum(1 for i in range(min(len(D), ncols)) if D[i][i])
    return [tuple(V[i][j] for i in range(ncols)) for j in range(r, ncols)]


def lattice_basis(vectors: Iterable[Sequence[int]], n: int) -> list[Vector]:
    """An echelon basis of the Z-span of ``vectors`` in ``Z^n``."""
    rows = [list(v) for v in vectors if any(v)]
    out: list[Vector] = []
    for col in range(n):
        live = [r for r in rows if r[col]]
        rest = [r for r in rows if not r[col]]
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            p = live[0]
            nxt = [p]
            for r in live[1:]:
                k = r[col] // p[col]
                r = [a - k * b for a, b in zip(r, p)]
                if r[col]:
                    nxt.append(r)
                elif any(r):
                    rest.append(r)
            live = nxt
        if live:
            out.append(tuple(live[0]))
        rows = rest
    return out


def integer_solve(M: Sequence[Sequence[int]], b: Sequence[int], ncols: int) -> Vector | None:
    """Some integer ``x`` with ``M x = b``, or ``None``."""
    m = len(M)
    if m == 0:
        return tuple([0] * ncols)
    U, D, V = smith_normal_form(M, ncols)
    z = matvec(U, b)
    y = [0] * ncols
    for i in range(m):
        d = D[i][i] if i < ncols else 0
        if d == 0:
            if z[i]:
                return None
        else:
            if z[i] % d:
                return None
            y[i] = z[i] // d
    return matvec(V, y)


# ---------------------------------------------------------------------------
# groups


@dataclass(frozen=True)
class FinGenAbGroup:
    """``Z^rank`` modulo the row span of ``relations``."""

    rank: int
    relations: tuple[Vector, ...] = ()

    def __post_init__(self):
        rels = tuple(tuple(int(x) for x in r) for r in self.relations)
        for r in rels:
            if len(r) != self.rank:
                raise ValueError(f"relation {r} has length {len(r)}, expected {self.rank}")
        object.__setattr__(self, "relations", tuple(r for r in rels if any(r)))

    @classmethod
    def cyclic(cls, n: int) -> "FinGenAbGroup":
        return cls(1, ((n,),))

    @classmethod
    def from_invariants(cls, factors: Iterable[int]) -> "FinGenAbGroup":
        factors = list(factors)
        k = len(factors)
        return cls(k, tuple(tuple(d if i == j else 0 for j in range(k)) for i, d in enumerate(factors)))

    @cached_property
    def _snf(self):
        return smith_normal_form(self.relations, self.rank)

    @cached_property
    def _diag(self) -> tuple[int, ...]:
        if "_snf" in self.__dict__:
            D = self._snf[1]
        else:
            D = smith_normal_form(self.relations, self.rank, track_U=False, track_V=False)[1]
        return tuple(D[i][i] if i < len(D) else 0 for i in range(self.rank))

    def invariant_factors(self) -> list[int]:
        """Invariant factors ``d1 | d2 | ...`` with 1s dropped and 0 for free summands."""
        diag = self._diag
        return [d for d in diag if d != 1 and d != 0] + [0] * sum(1 for d in diag if d == 0)

    def free_rank(self) -> int:
        return sum(1 for d in self._diag if d == 0)

    def is_finite(self) -> bool:
        return self.free_rank() == 0

    def order(self) -> int:
        if not self.is_finite():
            raise ComputationError("order of an infinite group")
        out = 1
        for d in self._diag:
            out *= d
        return out

    def exponent(self) -> int:
        """Least ``e > 0`` killing the group (0 if infinite)."""
        if not self.is_finite():
            return 0
        out = 1
        for d in self._diag:
            out = out * d // gcd(out, d)
        return out

    def coords(self, x: Sequence[int]) -> tuple[int, ...]:
        """Normal-form coordinates of ``x`` in the cyclic decomposition."""
        _, _, V = self._snf
        y = matvec(transpose(V, self.rank), x) if self.rank else ()
        return tuple(yi % d if d else yi for yi, d in zip(y, self._diag))

    def is_zero(self, x: Sequence[int]) -> bool:
        return not any(self.coords(x))

    def equal(self, x: Sequence[int], y: Sequence[int]) -> bool:
        return self.is_zero(tuple(a - b for a, b in zip(x, y)))

    def element_order(self, x: Sequence[int]) -> int:
        """Order of ``x``; 0 when ``x`` has infinite order."""
        out = 1
        for c, d in zip(self.coords(x), self._diag):
            if c == 0:
                continue
            if d == 0:
                return 0
            k = d // gcd(d, c)
            out = out * k // gcd(out, k)
        return out

    def isomorphic(self, other: "FinGenAbGroup") -> bool:
        return self.invariant_factors() == other.invariant_factors()

    def zero(self) -> Vector:
        return tuple([0] * self.rank)

    def basis_vector(self, i: int) -> Vector:
        return tuple(int(j == i) for j in range(self.rank))

    # constructions -------------------------------------------------------

    def quotient(self, elements: Iterable[Sequence[int]]) -> "FinGenAbGroup":
        return FinGenAbGroup(self.rank, self.relations + tuple(tuple(e) for e in elements))

    def _stacked(self, *blocks: Sequence[Sequence[int]]) -> Matrix:
        """Columns of every block, then the relation vectors, as one ``rank x *`` matrix."""
        cols = [list(v) for block in blocks for v in block] + [list(r) for r in self.relations]
        return transpose(cols, self.rank) if cols else [[] for _ in range(self.rank)]

    def contains(self, gens: Sequence[Sequence[int]], x: Sequence[int]) -> bool:
        """Whether ``x`` lies in the subgroup generated by ``gens``."""
        M = self._stacked(gens)
        ncols = len(gens) + len(self.relations)
        if ncols == 0:
            return not any(x)
        return integer_solve(M, x, ncols) is not None

    def subquotient(self, num: Sequence[Sequence[int]], den: Sequence[Sequence[int]] = ()) -> "FinGenAbGroup":
        """``<num> / (<den> + relations)`` presented on the generators ``num``.

        ``den`` need not lie inside ``<num>``; the result is the image of
        ``<num>`` in ``G / <den>``.
        """
        k = len(num)
        ncols = k + len(den) + len(self.relations)
        if k == 0:
            return FinGenAbGroup(0)
        M = self._stacked(num, den)
        rels = [v[:k] for v in integer_kernel(M, ncols)] if self.rank else [
            tuple(int(i == j) for i in range(k)) for j in range(k)
        ]
        return FinGenAbGroup(k, tuple(rels))

    def kernel_gens(self, M: Sequence[Sequence[int]]) -> list[Vector]:
        """Generators of ``{x : M x = 0 in G}`` for an endomorphism matrix ``M``."""
        n = self.rank
        if n == 0:
            return []
        cols = transpose(M, n) + [list(r) for r in self.relations]
        stacked = transpose(cols, n)
        return lattice_basis((v[:n] for v in integer_kernel(stacked, len(cols))), n)


def direct_sum(*groups: FinGenAbGroup) -> FinGenAbGroup:
    n = sum(g.rank for g in groups)
    rels = []
    offset = 0
    for g in groups:
        for r in g.relations:
            rels.append(tuple([0] * offset) + r + tuple([0] * (n - offset - g.rank)))
        offset += g.rank
    return FinGenAbGroup(n, tuple(rels))


def concat(*vectors: Sequence[int]) -> Vector:
    out: list[int] = []
    for v in vectors:
        out.extend(v)
    return tuple(out)


def block_diag(*mats: Sequence[Sequence[int]], sizes: Sequence[int] | None = None) -> Matrix:
    sizes = list(sizes) if sizes is not None else [len(m) for m in mats]
    n = sum(sizes)
    out = zeros(n, n)
    off = 0
    for M, k in zip(mats, sizes):
        for i in range(k):
            for j in range(k):
                out[off + i][off + j] = M[i][j]
        off += k
    return out


def quotient_by_element(G: FinGenAbGroup, g: Sequence[int]) -> FinGenAbGroup:
    return G.quotient([g])


def invariant_factors(G: FinGenAbGroup) -> list[int]:
    return G.invariant_factors()


# ---------------------------------------------------------------------------
# endomorphisms


def is_endomorphism(G: FinGenAbGroup, A: Sequence[Sequence[int]]) -> bool:
    relations = list(G.relations)
    return all(G.contains(relations, matvec(A, r)) for r in relations)


@dataclass(frozen=True)
class GroupEndo:
    """An endomorphism of ``group`` given by an integer matrix on column vectors."""

    group: FinGenAbGroup
    matrix: tuple[Vector, ...]

    def __post_init__(self):
        mat = tuple(tuple(int(x) for x in row) for row in self.matrix)
        n = self.group.rank
        if len(mat) != n or any(len(row) != n for row in mat):
            raise ValueError("action matrix has the wrong shape")
        object.__setattr__(self, "matrix", mat)
        if not is_endomorphism(self.group, mat):
            raise ComputationError("matrix does not preserve the relation lattice")

    def __call__(self, x: Sequence[int]) -> Vector:
        return matvec(self.matrix, x)

    def power(self, k: int) -> "GroupEndo":
        return GroupEndo(self.group, tuple(map(tuple, matpow(self.matrix, k))))

    def to_dict(self) -> dict:
        return {
            "rank": self.group.rank,
            "relations": [list(r) for r in self.group.relations],
            "action": [list(r) for r in self.matrix],
        }


def endo_order(G: FinGenAbGroup, A: Sequence[Sequence[int]], cap: int = ORDER_CAP) -> int:
    """Multiplicative order of ``A`` acting on ``G``."""
    n = G.rank
    rels = list(G.relations)
    e = G.exponent()
    power = identity(n)
    for k in range(1, cap + 1):
        power = matmul(A, power)
        if e:
            power = [[x % e for x in row] for row in power]
        if all(G.contains(rels, tuple(power[i][j] - (i == j) for i in range(n))) for j in range(n)):
            return k
    raise ComputationError(f"endomorphism order exceeds {cap}")


def _act_power(G: FinGenAbGroup, A, k: int, order: int | None) -> Matrix:
    if order:
        k %= order
    P = matpow(A, k)
    e = G.exponent()
    if e:
        P = [[x % e for x in row] for row in P]
    return P


def fixed_gens(G: FinGenAbGroup, A: Sequence[Sequence[int]]) -> list[Vector]:
    """Generators of ``G^A`` as vectors of the ambient ``Z^n``."""
    n = G.rank
    return G.kernel_gens([[A[i][j] - (i == j) for j in range(n)] for i in range(n)])


def simplify(G: FinGenAbGroup, A: Sequence[Sequence[int]]) -> tuple[FinGenAbGroup, Matrix]:
    """``G`` presented as the sum of its nontrivial cyclic factors, with ``A`` carried across."""
    n = G.rank
    inv: list = []
    _, D, V = smith_normal_form(G.relations, n, track_U=False, inverse=inv)
    W = inv[0]
    diag = [D[i][i] if i < len(D) else 0 for i in range(n)]
    keep = [i for i in range(n) if diag[i] != 1]
    # row vectors x map to x V, so column coordinates map by V^T and back by W^T
    out = []
    for i in keep:
        img = matvec(A, W[i])
        y = [sum(V[k][j] * img[k] for k in range(n)) for j in keep]
        out.append([v % diag[j] if diag[j] else v for v, j in zip(y, keep)])
    H = FinGenAbGroup.from_invariants(diag[i] for i in keep)
    return H, transpose(out, len(keep)) if out else []


def fixed_subgroup(G: FinGenAbGroup, A: Sequence[Sequence[int]]) -> tuple[FinGenAbGroup, Matrix]:
    """The subgroup fixed by ``A``, with its inclusion matrix (columns are generators)."""
    gens = fixed_gens(G, A)
    H = G.subquotient(gens)
    return H, transpose(gens, G.rank) if gens else [[] for _ in range(G.rank)]


def adjoin_fraction(G: FinGenAbGroup, a: Sequence[int], q: int) -> tuple[FinGenAbGroup, Vector]:
    """``(G + Z z)/(a - q z)``, returning the group and the new element ``z = a/q``."""
    n = G.rank
    rels = tuple(r + (0,) for r in G.relations) + (tuple(a) + (-q,),)
    H = FinGenAbGroup(n + 1, rels)
    return H, tuple([0] * n) + (1,)


def embed(x: Sequence[int], extra: int = 1) -> Vector:
    """Image of ``x`` after appending ``extra`` generators."""
    return tuple(x) + (0,) * extra


def induce(G: FinGenAbGroup, A: Sequence[Sequence[int]], q: int) -> tuple[FinGenAbGroup, Matrix]:
    """Induction from ``<sigma^q>`` to ``<sigma>``: ``q`` copies with ``sigma`` cycling them.

    ``sigma`` sends copy ``i`` to copy ``i+1`` and copy ``q-1`` back to copy 0
    through ``A``, so that ``sigma^q`` acts by ``A`` on every copy.
    """
    n = G.rank
    H = direct_sum(*([G] * q))
    M = zeros(n * q, n * q)
    for i in range(1, q):
        for k in range(n):
            M[i * n + k][(i - 1) * n + k] = 1
    for r in range(n):
        for c in range(n):
            M[r][(q - 1) * n + c] = A[r][c]
    return H, M


def in_copy(x: Sequence[int], i: int, q: int) -> Vector:
    n = len(x)
    return tuple([0] * (n * i)) + tuple(x) + tuple([0] * (n * (q - 1 - i)))


# ---------------------------------------------------------------------------
# fixpoint filtrations


@dataclass(frozen=True)
class Subgroup:
    """A subgroup of ``ambient`` given by generators in ``Z^n``."""

    ambient: FinGenAbGroup
    gens: tuple[Vector, ...]

    def group(self) -> FinGenAbGroup:
        return self.ambient.subquotient(self.gens)

    def order(self) -> int:
        return self.group().order()

    def __le__(self, other: "Subgroup") -> bool:
        return all(self.ambient.contains(other.gens, g) for g in self.gens)

    def same_as(self, other: "Subgroup") -> bool:
        return self <= other and other <= self

    def __add__(self, other: "Subgroup") -> "Subgroup":
        return Subgroup(self.ambient, self.gens + other.gens)

    def __and__(self, other: "Subgroup") -> "Subgroup":
        G = self.ambient
        k, l = len(self.gens), len(other.gens)
        if k == 0 or l == 0:
            return Subgroup(G, ())
        neg = [tuple(-x for x in h) for h in other.gens]
        M = G._stacked(self.gens, neg)
        out = []
        for v in integer_kernel(M, k + l + len(G.relations)):
            x = tuple(sum(c * g[i] for c, g in zip(v[:k], self.gens)) for i in range(G.rank))
            out.append(x)
        return Subgroup(G, tuple(out))


def fixed_points(G: FinGenAbGroup, A, d: int, order: int | None = None) -> Subgroup:
    """``G^{A^d}`` as a subgroup."""
    return Subgroup(G, tuple(fixed_gens(G, _act_power(G, A, d, order))))


def partial_quotient_parts(G: FinGenAbGroup, A, f: int, order: int | None = None) -> tuple[Subgroup, Subgroup]:
    """Numerator ``G^{A^f}`` and denominator ``sum_{d|f, d<f} G^{A^d}``."""
    if order is None:
        order = endo_order(G, A)
    num = fixed_points(G, A, f, order)
    den: tuple[Vector, ...] = ()
    for d in divisors(f):
        if d != f:
            den += fixed_points(G, A, d, order).gens
    return num, Subgroup(G, den)


def partial_quotient(G: FinGenAbGroup, A, f: int, order: int | None = None) -> FinGenAbGroup:
    """``Gr_f = G^{A^f} / sum_{d|f, d != f} G^{A^d}``."""
    num, den = partial_quotient_parts(G, A, f, order)
    return G.subquotient(num.gens, den.gens)


def cyclotomic_coefficients(d: int) -> list[int]:
    """Coefficients of the ``d``-th cyclotomic polynomial, constant term first."""
    x = symbols("x")
    return [int(c) for c in reversed(Poly(cyclotomic_poly(d, x), x).all_coeffs())]


def poly_of_matrix(coeffs: Sequence[int], A: Sequence[Sequence[int]], modulus: int = 0) -> Matrix:
    n = len(A)
    out = zeros(n, n)
    power = identity(n)
    for c in coeffs:
        out = matadd(out, power, c)
        power = matmul(power, A)
        if modulus:
            power = [[x % modulus for x in row] for row in power]
    if modulus:
        out = [[x % modulus for x in row] for row in out]
    return out


def cyclotomic_product(S: Iterable[int]) -> list[int]:
    out = [1]
    for d in sorted(S):
        c = cyclotomic_coefficients(d)
        prod = [0] * (len(out) + len(c) - 1)
        for i, a in enumerate(out):
            for j, b in enumerate(c):
                prod[i + j] += a * b
        out = prod
    return out


def check_divisor_closed(S: Iterable[int]) -> frozenset[int]:
    S = frozenset(S)
    for d in S:
        if d < 1:
            raise SNotDivisorClosed(f"{d} is not a positive integer")
        missing = [e for e in divisors(d) if e not in S]
        if missing:
            raise SNotDivisorClosed(f"{sorted(S)} contains {d} but not its divisor {missing[0]}")
    return S


def cyclotomic_kernel(G: FinGenAbGroup, A, S: Iterable[int]) -> Subgroup:
    """The kernel of ``prod_{d in S} Phi_d(A)`` on ``G``; ``S`` must be divisor closed."""
    S = check_divisor_closed(S)
    P = poly_of_matrix(cyclotomic_product(S), A, G.exponent())
    return Subgroup(G, tuple(G.kernel_gens(P)))


def annihilates(G: FinGenAbGroup, M, num: Subgroup, den: Subgroup) -> bool:
    """Whether ``M`` maps ``num`` into ``den`` inside ``G``."""
    return all(G.contains(den.gens, matvec(M, g)) for g in num.gens)
