"""Acceptance criteria 1-9.

Each test records one ``criterion N: PASS|FAIL`` line; the lines are printed
in the terminal summary (see ``conftest.py``) and also when this file is run
as a script.
"""

import random
import time
from math import gcd

import pytest
import sympy
from sympy import divisors, totient

from bytree import fixtures as fx
from bytree.abelian import (
    FinGenAbGroup,
    Subgroup,
    annihilates,
    cyclotomic_coefficients,
    cyclotomic_kernel,
    endo_order,
    fixed_points,
    induce,
    partial_quotient,
    partial_quotient_parts,
    poly_of_matrix,
)
from bytree.core import from_hyperelliptic_graph, to_double_cover
from bytree.neron import neron_group
from bytree.oracle import check_cover_isometry, graph_tamagawa, neron_oracle, oracle_report, tamagawa_oracle
from bytree.sampling import forests, random_group_with_automorphism
from bytree.tamagawa import check_symbolic, hcf2, parse_formula, sample_points, symbol, tamagawa
from bytree.towers import forest_source, growth_constants, qpower_check, regularity_report

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture
def clock():
    start = time.perf_counter()
    return lambda: time.perf_counter() - start


def test_criterion_1_worked_example(clock):
    a, b, c = symbol("a"), symbol("b"), symbol("c")
    sym = tamagawa(fx.quad(), mode="symbolic")
    exact = sympy.expand(sym.expr - (a * (b + c) + 2 * b * c)) == 0
    value = tamagawa(fx.quad(1, 2, 3))
    t = clock()
    record(1, exact and value == 17 and t < 1, f"c_T = {sym}, value at (1,2,3) = {value}, {t:.2f}s")


def test_criterion_2_comprehensive_example(clock):
    a, b, c, y, z = (symbol(s) for s in "abcyz")
    P = fx.comprehensive()
    sym = tamagawa(P, mode="symbolic")
    exact = sympy.expand(sym.expr - y * (a * (b + c) + 2 * b * c) * hcf2(z)) == 0
    points = check_symbolic(P, sym, grid=(1, 2, 3, 4))
    t = clock()
    record(2, exact and points > 0 and t < 10, f"c_T = {sym}, {points} oracle points agree, {t:.2f}s")


def test_criterion_3_genus2_table(clock):
    failures, points = [], 0
    for name, build, formula in fx.GENUS2:
        P = build()
        sym = tamagawa(P, mode="symbolic")
        expect = parse_formula(formula, list(P.variables()))
        for env in sample_points(P.variables(), (1, 2, 3, 4)):
            want = int(expect.subs({s: env[s.name] for s in expect.free_symbols}))
            points += 1
            if sym.evaluate(env) != want or tamagawa_oracle(P.substitute(env)) != want:
                failures.append((name, env))
                break
    t = clock()
    record(3, not failures and t < 60, f"{len(fx.GENUS2)} rows, {points} points, failures {failures}, {t:.2f}s")


def _negative_quad_expectation(a, b, c):
    if b % 2 == 0 and c % 2 == 0:
        return [a, 2]
    if b % 2 == 0 or c % 2 == 0:
        return [a]
    return [2 * a]


def test_criterion_4_neron_examples():
    rng = random.Random(404)
    bad = []
    for _ in range(10):
        a, b, c = (rng.randint(1, 9) for _ in range(3))
        h = gcd(a, gcd(b, c))
        want = FinGenAbGroup.from_invariants([h, (a * (b + c) + 2 * b * c) // h]).invariant_factors()
        if neron_group(fx.quad(a, b, c)) != want:
            bad.append(("+", a, b, c))
    cases = 0
    for a in (1, 2, 3, 4, 5):
        for b in (1, 2, 3, 4):
            for c in (1, 2, 3, 4):
                want = FinGenAbGroup.from_invariants(_negative_quad_expectation(a, b, c)).invariant_factors()
                got = neron_group(fx.quad(a, b, c, -1))
                cases += 1
                if got != want or got != neron_oracle(fx.quad(a, b, c, -1)):
                    bad.append(("-", a, b, c))
    record(4, not bad, f"10 positive triples and {cases} negative samples, failures {bad}")


def test_criterion_5_wheel():
    W = fx.wheel()
    c1, c5 = graph_tamagawa(W), graph_tamagawa(W.frob_power(5))
    record(5, (c1, c5) == (1, 121), f"Tamagawa {c1} under Frobenius, {c5} under its fifth power")


def test_criterion_6_oracle_equivalence(clock):
    n, bad = 0, []
    for P in forests(600, 500, max_vertices=10, max_length=4):
        n += 1
        if tamagawa(P, oracle_check=False) != tamagawa_oracle(P) or neron_group(P) != neron_oracle(P):
            bad.append(P.to_json())
    t = clock()
    record(6, n >= 500 and not bad and t < 300, f"{n} forests, {len(bad)} mismatches, {t:.1f}s")


def test_criterion_7_double_cover():
    n, bad = 0, 0
    for P in forests(700, 100):
        n += 1
        G = to_double_cover(P)
        if not check_cover_isometry(P)["ok"] or oracle_report(from_hyperelliptic_graph(G)) != oracle_report(P):
            bad += 1
    record(7, n >= 100 and bad == 0, f"{n} forests, {bad} failures")


def test_criterion_8_towers():
    n, bad = 0, []
    for P in forests(800, 100, max_vertices=8):
        n += 1
        try:
            # fitted on e in 1..4 only; e = 5, 6 are held out
            g = growth_constants(P, max_e=4)
            source = forest_source(P)
            for e in (5, 6):
                for f in divisors(g.N):
                    assert g.predict(e, f) == source(e, f)
            for q in (3, 5):
                for f0 in (1, 2):
                    assert qpower_check(P, q, f0).ok
        except Exception as exc:  # recorded as a failure with the forest attached
            bad.append((type(exc).__name__, P.to_json()))
    control = regularity_report(FinGenAbGroup.cyclic(5), [[2]])
    control_fails = not control.perfect_power[4] and not control.ok
    record(8, n >= 100 and not bad and control_fails, f"{n} forests fitted, {len(bad)} failures, Z/5 control rejected: {control_fails}")


def _divisor_closed(rng, N):
    picked = {d for d in divisors(N) if rng.random() < 0.5} | {1}
    return {e for d in picked for e in divisors(d)}


def test_criterion_9_fixpoint_filtrations():
    rng = random.Random(900)
    counts = {"product": 0, "annihilation": 0, "cap": 0, "cup": 0, "induction": 0}
    bad = []
    for i in range(200):
        G, A = random_group_with_automorphism(rng)
        N = endo_order(G, A)
        for f in divisors(N):
            prod = 1
            for d in divisors(f):
                prod *= partial_quotient(G, A, d, N).order()
            counts["product"] += 1
            if fixed_points(G, A, f, N).order() != prod:
                bad.append(("product", i, f))
            num, den = partial_quotient_parts(G, A, f, N)
            counts["annihilation"] += 1
            if not annihilates(G, poly_of_matrix(cyclotomic_coefficients(f), A, G.exponent()), num, den):
                bad.append(("annihilation", i, f))
        S, T = _divisor_closed(rng, N), _divisor_closed(rng, N)
        KS, KT = cyclotomic_kernel(G, A, S), cyclotomic_kernel(G, A, T)
        counts["cap"] += 1
        if not cyclotomic_kernel(G, A, S & T).same_as(KS & KT):
            bad.append(("cap", i))
        counts["cup"] += 1
        if not cyclotomic_kernel(G, A, S | T).same_as(KS + KT):
            bad.append(("cup", i))
        fixed = Subgroup(G, ())
        for d in S:
            fixed = fixed + fixed_points(G, A, d, N)
        if not KS.same_as(fixed):
            bad.append(("fixed sum", i))
        q = rng.randint(2, 3)
        H, M = induce(G, A, q)
        NH = endo_order(H, M)
        for f in divisors(NH):
            g = f // gcd(f, q)
            expect = partial_quotient(G, A, g, N).order() ** (int(totient(f)) // int(totient(g)))
            counts["induction"] += 1
            if partial_quotient(H, M, f, NH).order() != expect:
                bad.append(("induction", i, q, f))
    record(9, not bad, f"200 groups, checks {counts}, failures {bad[:5]}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
