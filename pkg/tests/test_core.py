import random
from fractions import Fraction

import pytest

from bytree import fixtures as fx
from bytree.core import (
    BYForest,
    HyperellipticGraph,
    LengthForm,
    check_parity_A,
    check_parity_B,
    check_parity_B_prime,
    components_minus_S,
    convex_hull_of_S,
    from_hyperelliptic_graph,
    normalize_signs,
    order_of,
    require_parity,
    scale_and_power,
    subdivide,
    to_double_cover,
    validate,
    validate_graph,
)
from bytree.errors import ParityViolation, SymbolicLength, UndeterminedParity
from bytree.oracle import check_cover_isometry, graph_report, oracle_report, tamagawa_oracle
from bytree.sampling import forests


def edge_tree(length, sign=1, swap=False, S=("u", "v")):
    fmap = {"u": "v", "v": "u"} if swap else {}
    return BYForest.build(["u", "v"], [("e", "u", "v", length)], S, (), fmap, {"e": sign})


def three_orbit(signs):
    vs = [f"{c}{i}" for i in range(3) for c in "uv"]
    fmap = {f"{c}{i}": f"{c}{(i + 1) % 3}" for i in range(3) for c in "uv"}
    edges = [(f"e{i}", f"u{i}", f"v{i}", 2) for i in range(3)]
    return BYForest.build(vs, edges, vs, (), fmap, {f"e{i}": s for i, s in enumerate(signs)})


# --- lengths -----------------------------------------------------------------


def test_length_form_arithmetic_and_parity():
    a = LengthForm.var("a", "even")
    b = LengthForm.var("b", "odd")
    s = a + b + LengthForm(3)
    assert s.parity() == 0
    assert str(s) == "a+b+3"
    assert s.substitute({"a": 2, "b": 1}).int_value() == 6
    with pytest.raises(UndeterminedParity):
        (LengthForm.var("c") + b).parity()


def test_length_form_json():
    assert LengthForm(4).to_json() == 4
    assert LengthForm.var("n", "odd").to_json() == {"constant": 0, "terms": {"n": 1}, "parity": {"n": "odd"}}


def test_length_form_rejects_negative():
    with pytest.raises(ValueError):
        LengthForm(-1)
    with pytest.raises(ValueError):
        LengthForm(0, (("a", -2),))


# --- validation ----------------------------------------------------------------


def test_quad_is_valid():
    assert validate(fx.quad()) == []
    assert validate(fx.comprehensive()) == []


def test_s_edge_outside_s_vertices():
    P = BYForest.build(["a", "b"], [("e", "a", "b", 2)], ["a"], ["e"])
    diags = validate(P)
    assert [d.code for d in diags] == ["S-not-subgraph"]
    assert diags[0].witness == "e"


def test_non_isometric_map():
    P = BYForest.build(["o", "x", "y"], [("e1", "o", "x", 2), ("e2", "o", "y", 3)], ["x", "y"], (), {"x": "y", "y": "x"}, {"e1": 1})
    assert {d.code for d in validate(P)} == {"F-not-isometry"}


def test_missing_sign_names_representative():
    P = BYForest.build(["a", "b"], [("e", "a", "b", 2)], ["a", "b"])
    diags = validate(P)
    assert [d.code for d in diags] == ["missing-sign"]
    assert diags[0].witness == "e"


def test_components():
    assert [len(c.edges) for c in components_minus_S(fx.quad())] == [4]
    assert len(components_minus_S(fx.comprehensive())) == 3
    assert components_minus_S(BYForest.build(["a", "b"], [("e", "a", "b", 2)], ["a", "b"], ["e"])) == []


# --- parity conditions -----------------------------------------------------------


def test_parity_on_star_with_unknown_lengths():
    assert check_parity_A(fx.quad()).holds
    assert check_parity_B(fx.quad()).holds


def test_parity_A_comprehensive():
    assert check_parity_A(fx.comprehensive()).holds


def test_parity_A_odd_path_between_branch_points():
    P = BYForest.build(
        list("uvabcd"),
        [("uv", "u", "v", 3), ("ua", "u", "a", 1), ("ub", "u", "b", 1), ("vc", "v", "c", 1), ("vd", "v", "d", 1)],
        list("abcd"),
        (),
        {},
        {"uv": 1},
    )
    rep = check_parity_A(P)
    assert not rep.holds
    assert rep.witness == ("u", "v")


def test_parity_B_inverted_odd_edge():
    rep = check_parity_B(edge_tree(fx.L("n", "odd"), swap=True))
    assert not rep.holds
    assert rep.witness == ("e", 1)
    assert check_parity_B(edge_tree(fx.L("n", "even"), swap=True)).holds
    with pytest.raises(ParityViolation):
        require_parity(edge_tree(3, swap=True))


def test_parity_B_prime():
    assert check_parity_B_prime(fx.quad(3, 1, 1, -1)).holds
    assert check_parity_B_prime(edge_tree(2, swap=True)).holds
    assert not check_parity_B_prime(edge_tree(3, swap=True)).holds


def test_parity_B_matches_B_prime():
    for P in forests(3, 60, parity_A=False, parity_B=False):
        assert check_parity_B(P).holds == check_parity_B_prime(P).holds


# --- maps and orders --------------------------------------------------------------


def test_order_of():
    assert order_of(edge_tree(3)) == 1
    assert order_of(edge_tree(3, sign=-1)) == 2
    assert order_of(three_orbit([1, 1, -1])) == 6


def test_normalize_signs():
    assert normalize_signs(three_orbit([1, 1, -1])).signs == [-1, 1, 1]
    assert normalize_signs(three_orbit([-1, -1, -1])).signs == [-1, 1, 1]
    assert normalize_signs(edge_tree(2, sign=-1)).signs == [-1]


def test_scale_and_power():
    P = fx.quad(1, 2, 3)
    assert scale_and_power(P, 1, 1).to_json() == P.to_json()
    N = edge_tree(3, sign=-1)
    assert scale_and_power(N, 1, 2).signs == [1]
    assert scale_and_power(N, 3, 1).edges[0].length.int_value() == 9


# --- metric operations -----------------------------------------------------------


def test_subdivide_preserves_tamagawa():
    P = fx.quad(1, 2, 3)
    U = subdivide(P)
    assert all(e.length.int_value() == 1 for e in U.edges)
    assert len(U.edges) == 7
    assert tamagawa_oracle(U) == 17
    assert len(subdivide(U).edges) == 7


def test_convex_hull_drops_pendant():
    P = BYForest.build(
        ["o", "sw", "nw", "ne", "se", "p"],
        [("e_sw", "o", "sw", 3), ("e_nw", "o", "nw", 2), ("e_ne", "o", "ne", 1), ("e_se", "o", "se", 1), ("e_p", "o", "p", 2)],
        ["sw", "nw", "ne", "se"],
        (),
        {"ne": "se", "se": "ne"},
        {"e_sw": 1},
    )
    H = convex_hull_of_S(P)
    assert "p" not in H.vertices
    assert tamagawa_oracle(H) == tamagawa_oracle(P) == 17
    Q = fx.quad(3, 1, 1, -1)
    assert convex_hull_of_S(Q).to_json() == Q.to_json()


def test_symbolic_lengths_refused_by_oracle():
    with pytest.raises(SymbolicLength):
        tamagawa_oracle(fx.quad())


# --- double covers ---------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5])
def test_cover_of_single_edge_is_a_cycle(n):
    G = to_double_cover(edge_tree(n))
    assert len(G.vertices) == 2
    assert sum(e.length for e in G.edges) == n
    assert graph_report(G)["tamagawa"] == n
    back = from_hyperelliptic_graph(G)
    assert [e.length.int_value() for e in back.edges] == [n]
    assert sorted(back.s_vertices) == ["u", "v"]


def test_cover_when_S_is_everything():
    P = BYForest.build(["a", "b"], [("e", "a", "b", 2)], ["a", "b"], ["e"])
    G = to_double_cover(P)
    assert validate_graph(G) == []
    back = from_hyperelliptic_graph(G)
    assert back.s_edges == frozenset({"e"})
    assert oracle_report(back) == oracle_report(P)


def test_cover_of_star():
    P = fx.quad(1, 2, 3)
    G = to_double_cover(P)
    assert graph_report(G) == {"tamagawa": 17, "neron": [17], "geometric": [17]}
    assert tamagawa_oracle(from_hyperelliptic_graph(G)) == 17
    rep = check_cover_isometry(P)
    assert rep["ok"]


def test_negative_quad_cover_gram():
    rep = check_cover_isometry(fx.quad(3, 1, 1, -1))
    assert rep["ok"]
    assert rep["gram_tree"] == [[4, 3, 3], [3, 6, 3], [3, 3, 4]]


def test_graph_json_uses_fractions():
    G = to_double_cover(fx.quad(3, 1, 1, -1))
    doc = G.to_json()
    assert {e["length"] for e in doc["edges"]} == {"3/2", "1/2"}


def test_graph_scaling_and_frobenius_power():
    W = fx.wheel()
    assert all(e.length == Fraction(2) for e in W.scaled(2).edges)
    fifth = W.frob_power(5)
    assert all(fifth.frob[v] == v for v in W.vertices)


def test_cover_round_trip_on_random_forests():
    for P in forests(11, 25, max_vertices=8):
        G = to_double_cover(P)
        assert validate_graph(G) == []
        assert check_cover_isometry(P)["ok"]
        assert oracle_report(from_hyperelliptic_graph(G)) == oracle_report(P)


def test_forest_json_round_trip():
    rng = random.Random(5)
    for P in forests(rng.randrange(10**6), 20):
        doc = P.to_json()
        Q = BYForest.build(
            doc["vertices"],
            [(e["id"], *e["ends"], e["length"]) for e in doc["edges"]],
            doc["S"]["vertices"],
            doc["S"]["edges"],
            doc["F"]["vertex_map"],
            {s["component_rep_edge"]: s["sign"] for s in doc["signs"]},
        )
        assert Q.to_json() == doc


def test_hyperelliptic_graph_validation():
    G = HyperellipticGraph.build(["a", "b"], [("x", "a", "b", Fraction(1)), ("y", "a", "b", Fraction(2))], iota={"a": "a", "b": "b"}, frob_edges={"x": "x", "y": "y"}, iota_edges={"x": "y", "y": "x"})
    assert validate_graph(G)
