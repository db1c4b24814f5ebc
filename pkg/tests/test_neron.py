import random
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import divisors

from bytree import fixtures as fx
from bytree.abelian import FinGenAbGroup, endo_order, fixed_subgroup, partial_quotient
from bytree.core import BYForest
from bytree.errors import MalformedTree
from bytree.neron import (
    Base,
    Graft,
    IndWedge,
    MarkedBYTree,
    Wedge,
    action_order,
    classify_type,
    decompose,
    direct_groups,
    direct_pipe,
    direct_type,
    mark_tree,
    negative_triple,
    neron_group,
    pipe,
    positive_triple,
    recursive_groups,
    recursive_pipe,
    show,
)
from bytree.oracle import neron_oracle
from bytree.sampling import forests, random_forest
from bytree.tamagawa import reduce


def arm(length):
    """``*`` joined to a single S leaf."""
    return MarkedBYTree(BYForest.build(["s", "x"], [("e", "s", "x", length)], ["x"], (), {}, {"e": 1}), "s")


def marked_quad(a, b, c):
    m, side = mark_tree(reduce(fx.quad(a, b, c))[0])
    assert side == "eta"
    return m


def random_marked(seed, count, **kw):
    for P in forests(seed, count, parity_A=False, **kw):
        for t in reduce(P):
            if len(t.forest.s_vertices) >= 2:
                yield mark_tree(t)[0]


def invariants(p):
    return (
        p.group.invariant_factors(),
        p.over_y().invariant_factors(),
        p.over_eta().invariant_factors(),
        action_order(p),
    )


# --- marking and decomposition ----------------------------------------------------


def test_quad_is_marked_at_centre():
    m = marked_quad(1, 2, 3)
    assert m.star == "o"
    assert show(decompose(m)) == "Wedge[IndWedge(Base(1), 2), Base(2), Base(3)]"


def test_single_edge_marks_a_midpoint():
    E = BYForest.build(["u", "v"], [("e", "u", "v", 5)], ["u", "v"], (), {}, {"e": 1})
    m, side = mark_tree(E)
    assert (m.star, side) == ("mid:e", "eta")
    assert show(decompose(m)) == "Wedge[Base(2), Base(3)]"
    assert recursive_groups(m)["eta"].invariant_factors() == [5]


def test_unit_edge_reads_the_y_side():
    E = BYForest.build(["u", "v"], [("e", "u", "v", 1)], ["u", "v"], (), {}, {"e": 1})
    m, side = mark_tree(E)
    assert (m.star, side) == ("u", "y")
    assert show(decompose(m)) == "Base(1)"
    assert recursive_groups(m)["y"].order() == 1


def test_inverted_edge_marks_its_midpoint():
    T = BYForest.build(
        ["u", "v", "a", "b"],
        [("uv", "u", "v", 4), ("ua", "u", "a", 1), ("vb", "v", "b", 1)],
        ["a", "b"],
        (),
        {"u": "v", "v": "u", "a": "b", "b": "a"},
        {"uv": 1},
    )
    m, _ = mark_tree(T)
    assert m.star == "mid:uv"
    assert show(decompose(m)) == "IndWedge(Graft(Base(1), 2), 2)"


def test_simple_constructors():
    assert show(decompose(arm(4))) == "Base(4)"
    C = BYForest.build(["s", "v", "l"], [("e1", "s", "v", 2), ("e2", "v", "l", 3)], ["l"], (), {}, {"e1": 1})
    assert decompose(MarkedBYTree(C, "s")) == Graft(Base(3), 2)


def test_marked_tree_checks():
    with pytest.raises(MalformedTree):
        MarkedBYTree(fx.quad(1, 2, 3), "sw")
    with pytest.raises(MalformedTree):
        MarkedBYTree(fx.quad(1, 2, 3), "ne")


# --- pipes ----------------------------------------------------------------------


def test_base_pipe():
    p = recursive_pipe(Base(7))
    assert p.group.invariant_factors() == [0]
    assert (p.y, p.eta) == ((7,), (1,))


def test_wedge_of_unit_bases():
    p = recursive_pipe(Wedge((Base(1), Base(1))))
    assert p.group.invariant_factors() == [0]
    assert p.over_y().order() == 1
    assert p.over_eta().invariant_factors() == [2]


def test_quad_pipe():
    m = marked_quad(3, 1, 1)
    assert invariants(pipe(m)) == invariants(direct_pipe(m))
    assert pipe(m).group.invariant_factors() == [3, 0]


@pytest.mark.parametrize("a,b,c", [(1, 2, 3), (2, 2, 2), (3, 1, 1), (4, 6, 2), (5, 3, 7)])
def test_quad_fixed_part_matches_explicit_presentation(a, b, c):
    m = marked_quad(a, b, c)
    explicit = FinGenAbGroup(4, ((a, -2, 0, 0), (0, 1, -b, 0), (0, 1, 0, -c)))
    t = positive_triple(m)
    assert t.group.invariant_factors() == explicit.invariant_factors()
    assert t.over_eta().invariant_factors() == explicit.quotient([(1, 0, 1, 1)]).invariant_factors()


def test_direct_and_recursive_pipes_agree():
    n = 0
    for m in random_marked(5, 150):
        assert invariants(pipe(m, "direct")) == invariants(pipe(m, "recursive"))
        n += 1
    assert n >= 100


# --- triples --------------------------------------------------------------------


def test_positive_base_triple():
    t = positive_triple(Base(5))
    assert (t.group.invariant_factors(), t.y, t.eta) == ([0], (5,), (1,))


def test_negative_base_triples():
    assert negative_triple(Base(3)).tau == 2
    assert negative_triple(Base(4)).tau == 0
    assert negative_triple(Base(3)).group.order() == 1


def test_induced_base_negative_triple():
    t = negative_triple(IndWedge(Base(3), 2))
    assert t.group.invariant_factors() == [3]
    assert t.tau == 1
    assert t.with_half_alpha().invariant_factors() == [6]


@pytest.mark.parametrize("length,tau", [(2, 0), (4, 0), (1, 2), (3, 2)])
def test_type_of_an_arm(length, tau):
    assert classify_type(arm(length)) == tau


def test_type_of_induced_arm():
    T = BYForest.build(["s", "x", "y"], [("e", "s", "x", 3), ("f", "s", "y", 3)], ["x", "y"], (), {"x": "y", "y": "x"}, {"e": 1})
    m = MarkedBYTree(T, "s")
    assert show(decompose(m)) == "IndWedge(Base(3), 2)"
    assert classify_type(m) == 1


def test_type_trichotomy_on_random_trees():
    for m in random_marked(6, 120):
        tau = classify_type(m)
        assert tau in (0, 1, 2)
        assert direct_type(direct_pipe(m))[0] == tau


def test_fixed_ranks():
    for m in random_marked(7, 80):
        p = direct_pipe(m)
        plus, _ = fixed_subgroup(p.group, p.action)
        minus, _ = fixed_subgroup(p.group, [[-x for x in row] for row in p.action])
        assert plus.free_rank() == 1
        assert minus.is_finite()


# --- groups ---------------------------------------------------------------------


def test_positive_quad_groups():
    rng = random.Random(8)
    for _ in range(10):
        a, b, c = (rng.randint(1, 6) for _ in range(3))
        h = gcd(a, gcd(b, c))
        expect = FinGenAbGroup.from_invariants([h, (a * (b + c) + 2 * b * c) // h]).invariant_factors()
        assert neron_group(fx.quad(a, b, c)) == expect


@pytest.mark.parametrize(
    "a,b,c,expect",
    [
        (3, 2, 4, [2, 3]),
        (2, 2, 4, [2, 2]),
        (3, 1, 2, [3]),
        (4, 2, 3, [4]),
        (3, 1, 1, [6]),
        (2, 3, 5, [4]),
    ],
)
def test_negative_quad_cases(a, b, c, expect):
    # C_a x C_2 with b, c even; C_a with one even; C_2a with both odd
    assert neron_group(fx.quad(a, b, c, -1)) == FinGenAbGroup.from_invariants(expect).invariant_factors()


def test_named_groups():
    assert neron_group(fx.quad(2, 2, 2)) == [2, 8]
    assert neron_group(fx.quad(3, 2, 4, -1)) == [6]
    assert neron_group(BYForest.build(["a", "b"], [("e", "a", "b", 2)], ["a", "b"], ["e"])) == []


def test_direct_and_recursive_groups_agree():
    for m in random_marked(9, 100):
        for sign in (1, -1):
            sm = MarkedBYTree(m.tree, m.star, sign)
            d, r = direct_groups(sm), recursive_groups(sm)
            assert d["eta"].invariant_factors() == r["eta"].invariant_factors()
            assert d["y"].invariant_factors() == r["y"].invariant_factors()


def test_graded_pieces_survive_the_quotients():
    checked = 0
    for m in random_marked(10, 120):
        p = direct_pipe(m)
        for sign in (1, -1):
            A = p.action if sign == 1 else [[-x for x in row] for row in p.action]
            N = endo_order(p.group, A)
            for f in divisors(N):
                if f == 1 or (sign == -1 and f <= 2):
                    continue
                orders = {partial_quotient(G, A, f, N).order() for G in (p.group, p.over_y(), p.over_eta())}
                assert len(orders) == 1
                checked += 1
    assert checked >= 20


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_neron_matches_oracle(seed):
    P = random_forest(random.Random(seed), parity_A=False)
    assert neron_group(P) == neron_oracle(P)
