"""Tamagawa numbers along base change towers.

Over an extension of ramification degree ``e`` and residue degree ``f`` a BY
forest ``(T, S, eps F)`` becomes ``(eT, eS, (eps F)^f)``.  The Tamagawa
numbers ``c(e, f)`` then factor as

    c(e, f) = prod_{d | f} (a_d * e^r_d * hcf(e, 2)^s_d)^phi(d)

with ``(a_d, r_d, s_d) = (1, 0, 0)`` unless ``d`` divides the order ``N`` of
``eps F``.  This module fits those constants, checks the predictions, and
certifies the order-level consequences of fixpoint regularity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Sequence

from sympy import divisors, factorint, mobius, totient

from .abelian import (
    FinGenAbGroup,
    Matrix,
    annihilates,
    cyclotomic_coefficients,
    endo_order,
    partial_quotient_parts,
    poly_of_matrix,
)
from .core import BYForest, HyperellipticGraph, order_of, require_parity, scale_and_power
from .errors import FitMismatch, NotPerfectPower
from .oracle import geometric_component_group, graph_tamagawa, lattice_of, lattice_of_graph, tamagawa_oracle

FIT_E = (1, 2, 3, 4)
CHECK_E = (5, 6)

Source = Callable[[int, int], int]


# ---------------------------------------------------------------------------
# exact roots


def integer_root(n: int, k: int) -> int | None:
    """The non-negative integer ``r`` with ``r^k = n``, if there is one."""
    if n < 0:
        return None
    if n in (0, 1) or k == 1:
        return n
    lo, hi = 0, 1
    while hi**k <= n:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == n else None


def rational_root(x: Fraction, k: int) -> Fraction | None:
    x = Fraction(x)
    if x <= 0:
        return None
    p, q = integer_root(x.numerator, k), integer_root(x.denominator, k)
    return None if p is None or q is None else Fraction(p, q)


def exact_log(x: Fraction, base: int) -> int | None:
    """``k`` with ``base^k = x`` (``k`` may be negative)."""
    x = Fraction(x)
    if x <= 0:
        return None
    k = 0
    while x.denominator % base == 0 and x.numerator % base != 0:
        x *= base
        k -= 1
    while x.numerator % base == 0:
        x /= base
        k += 1
    return k if x == 1 else None


def valuation(n: int, p: int) -> int:
    return factorint(n).get(p, 0)


# ---------------------------------------------------------------------------
# c(e, f)


def forest_source(P: BYForest) -> Source:
    def c(e: int, f: int) -> int:
        return tamagawa_oracle(scale_and_power(P, e, f))

    return c


def graph_source(G: HyperellipticGraph) -> Source:
    def c(e: int, f: int) -> int:
        return graph_tamagawa(G.scaled(e).frob_power(f))

    return c


def graph_order(G: HyperellipticGraph, cap: int = 720) -> int:
    """Order of Frobenius on the lattice of the graph."""
    L = lattice_of_graph(G)
    A = L.action
    n = L.rank
    power = [list(r) for r in A]
    for k in range(1, cap + 1):
        if all(power[i][j] == (i == j) for i in range(n) for j in range(n)):
            return k
        power = [[sum(power[i][t] * A[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
    raise FitMismatch(f"Frobenius order exceeds {cap}")


# ---------------------------------------------------------------------------
# growth constants


@dataclass(frozen=True)
class GrowthConstants:
    N: int
    constants: dict[int, tuple[int, int, int]]
    observed: dict[tuple[int, int], int] = field(default_factory=dict, compare=False)

    def of(self, d: int) -> tuple[int, int, int]:
        return self.constants.get(d, (1, 0, 0))

    def factor(self, d: int, e: int) -> Fraction:
        a, r, s = self.of(d)
        return Fraction(a) * Fraction(e) ** r * Fraction(gcd(e, 2)) ** s

    def predict(self, e: int, f: int) -> int:
        out = Fraction(1)
        for d in divisors(f):
            out *= self.factor(d, e) ** int(totient(d))
        if out.denominator != 1:
            raise FitMismatch(f"prediction {out} at (e, f) = ({e}, {f}) is not an integer")
        return int(out)

    def to_json(self) -> dict:
        return {"N": self.N, "constants": {str(d): list(v) for d, v in sorted(self.constants.items())}}


def per_divisor(c: dict[int, int] | Callable[[int], int], d: int) -> Fraction:
    """``prod_{k | d} c(k)^mu(d/k)``, i.e. ``A_d^phi(d)``."""
    get = c.__getitem__ if isinstance(c, dict) else c
    out = Fraction(1)
    for k in divisors(d):
        mu = int(mobius(d // k))
        if mu:
            out *= Fraction(get(k)) ** mu
    return out


def _A(source: Source, d: int, e: int, cache: dict) -> Fraction:
    def c(k: int) -> int:
        if (e, k) not in cache:
            cache[(e, k)] = source(e, k)
        return cache[(e, k)]

    phi = int(totient(d))
    val = per_divisor(c, d)
    root = rational_root(val, phi)
    if root is None:
        raise NotPerfectPower(f"A_{d}({e})^{phi} = {val} is not a perfect {phi}-th power")
    return root


def fit_constants(source: Source, N: int, check_e: Sequence[int] = CHECK_E) -> GrowthConstants:
    cache: dict[tuple[int, int], int] = {}
    constants = {}
    for d in divisors(N):
        A = {e: _A(source, d, e, cache) for e in FIT_E}
        a = A[1]
        if a.denominator != 1 or a < 1:
            raise FitMismatch(f"a_{d} = {a} is not a positive integer")
        r = exact_log(A[3] / a, 3)
        if r is None or r < 0:
            raise FitMismatch(f"A_{d}(3)/a_{d} = {A[3] / a} is not a power of 3")
        s = exact_log(A[2] / (a * 2**r), 2)
        if s is None:
            raise FitMismatch(f"A_{d}(2) = {A[2]} does not fit a*2^r*2^s")
        if A[4] != a * 4**r * Fraction(2) ** s:
            raise FitMismatch(f"A_{d}(4) = {A[4]} disagrees with the fit ({a}, {r}, {s})")
        constants[int(d)] = (int(a), int(r), int(s))
    out = GrowthConstants(N, constants, cache)
    for e in check_e:
        for f in divisors(N):
            if (e, f) not in cache:
                cache[(e, f)] = source(e, f)
            if out.predict(e, f) != cache[(e, f)]:
                raise FitMismatch(f"c({e}, {f}) = {cache[(e, f)]} but the fit predicts {out.predict(e, f)}")
    return out


def growth_constants(P: BYForest, max_e: int = 6) -> GrowthConstants:
    P.require_concrete()
    require_parity(P)
    return fit_constants(forest_source(P), order_of(P), tuple(range(5, max_e + 1)))


def f_dependence_check(source: Source, N: int, es: Iterable[int] = (1, 2), f_max: int | None = None) -> list[tuple[int, int]]:
    """``(e, f)`` pairs up to ``f_max`` (default ``2N``) where ``c(e, f) != c(e, gcd(f, N))``."""
    f_max = f_max or 2 * N
    bad = []
    for e in es:
        for f in range(1, f_max + 1):
            if source(e, f) != source(e, gcd(f, N)):
                bad.append((e, f))
    return bad


# ---------------------------------------------------------------------------
# (q-1)-th powers


@dataclass(frozen=True)
class QPowerReport:
    q: int
    f0: int
    exponent: int
    ok: bool
    ratios: tuple[tuple[int, Fraction, bool], ...]

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "f0": self.f0,
            "exponent": self.exponent,
            "ok": self.ok,
            "ratios": [{"e": e, "ratio": str(r), "perfect": p} for e, r, p in self.ratios],
        }


def qpower_check_source(source: Source, q: int, f0: int = 1, es: Iterable[int] = FIT_E) -> QPowerReport:
    k = q ** valuation(f0, q) * (q - 1)
    rows = []
    for e in es:
        ratio = Fraction(source(e, q * f0), source(e, f0))
        rows.append((e, ratio, rational_root(ratio, k) is not None))
    return QPowerReport(q, f0, k, all(p for _, _, p in rows), tuple(rows))


def qpower_check(P: BYForest, q: int, f0: int = 1, es: Iterable[int] = FIT_E) -> QPowerReport:
    """``c(e, q f0) / c(e, f0)`` should be a perfect ``q^v_q(f0) (q-1)``-th power."""
    require_parity(P)
    return qpower_check_source(forest_source(P), q, f0, es)


# ---------------------------------------------------------------------------
# fixpoint regularity


@dataclass(frozen=True)
class RegularityReport:
    N: int
    orders: dict[int, int]
    perfect_power: dict[int, bool]
    annihilated: dict[int, bool]

    @property
    def ok(self) -> bool:
        return all(self.perfect_power.values()) and all(self.annihilated.values())

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "ok": self.ok,
            "graded": {
                str(d): {"order": self.orders[d], "perfect_power": self.perfect_power[d], "annihilated": self.annihilated[d]}
                for d in sorted(self.orders)
            },
        }


def regularity_report(G: FinGenAbGroup, A: Matrix, N: int | None = None) -> RegularityReport:
    """Order-level fixpoint-regularity tests on a finite group with an automorphism."""
    order = endo_order(G, A)
    N = N or order
    orders, perfect, killed = {}, {}, {}
    for d in divisors(N):
        num, den = partial_quotient_parts(G, A, d, order)
        n = G.subquotient(num.gens, den.gens).order()
        orders[d] = n
        perfect[d] = integer_root(n, int(totient(d))) is not None
        M = poly_of_matrix(cyclotomic_coefficients(d), A, G.exponent())
        killed[d] = annihilates(G, M, num, den)
    return RegularityReport(N, orders, perfect, killed)


def fixpoint_regularity_check(P: BYForest) -> RegularityReport:
    P.require_concrete()
    require_parity(P, A=False, B=True)
    G, A = geometric_component_group(lattice_of(P))
    return regularity_report(G, A, order_of(P))


__all__ = [
    "GrowthConstants",
    "QPowerReport",
    "RegularityReport",
    "exact_log",
    "f_dependence_check",
    "fit_constants",
    "fixpoint_regularity_check",
    "forest_source",
    "graph_order",
    "graph_source",
    "growth_constants",
    "integer_root",
    "order_of",
    "per_divisor",
    "qpower_check",
    "qpower_check_source",
    "rational_root",
    "regularity_report",
]
