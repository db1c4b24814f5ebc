import random

from bytree.abelian import endo_order, is_endomorphism
from bytree.core import check_parity_A, check_parity_B, validate
from bytree.sampling import forests, random_forest, random_group_with_automorphism


def test_forests_are_valid_and_satisfy_parity():
    for P in forests(1, 100):
        assert validate(P) == []
        assert P.s_vertices
        assert len(P.vertices) <= 10
        assert all(1 <= e.length.int_value() <= 4 for e in P.edges)
        assert check_parity_A(P).holds and check_parity_B(P).holds


def test_forests_are_reproducible():
    a = [P.to_json() for P in forests(2, 10)]
    b = [P.to_json() for P in forests(2, 10)]
    assert a == b


def test_forests_cover_the_interesting_shapes():
    seen = {"negative": 0, "nontrivial F": 0, "several components": 0, "S edges": 0}
    for P in forests(3, 200):
        seen["negative"] += -1 in P.signs
        seen["nontrivial F"] += any(P.F(v) != v for v in P.vertices)
        seen["several components"] += len(P.components) > 1
        seen["S edges"] += bool(P.s_edges)
    assert all(n >= 10 for n in seen.values()), seen


def test_parity_can_be_switched_off():
    rng = random.Random(4)
    failures = 0
    for _ in range(200):
        P = random_forest(rng, parity_A=False, parity_B=False)
        failures += not check_parity_B(P).holds
    assert failures > 0


def test_random_groups():
    rng = random.Random(5)
    for _ in range(100):
        G, A = random_group_with_automorphism(rng)
        assert G.is_finite()
        assert is_endomorphism(G, A)
        assert endo_order(G, A) >= 1
