"""Seeded random BY forests and random groups with automorphisms.

Forests are grown with their symmetry built in: a fixed core tree, plus
orbits of identical branches (``F`` cycles the copies) and, sometimes, two
copies joined by an edge that ``F`` inverts.  Whole trees may also be
repeated as an orbit of components.  Samples failing validation or the
requested parity conditions are rejected and redrawn.
"""

from __future__ import annotations

import random
from math import gcd
from typing import Iterator

from .abelian import FinGenAbGroup, Matrix, identity, matmul, matvec
from .core import BYForest, check_parity_A, check_parity_B, validate


def _random_rooted(rng: random.Random, size: int, max_length: int) -> tuple[list[int], list[tuple[int, int, int]]]:
    """A random tree on ``0..size-1`` rooted at 0, as (vertices, edges)."""
    edges = [(rng.randrange(i), i, rng.randint(1, max_length)) for i in range(1, size)]
    return list(range(size)), edges


class _Builder:
    def __init__(self):
        self.vertices: list[str] = []
        self.edges: list[tuple[str, str, str, int]] = []
        self.fmap: dict[str, str] = {}

    def vertex(self) -> str:
        v = f"v{len(self.vertices)}"
        self.vertices.append(v)
        self.fmap[v] = v
        return v

    def edge(self, u: str, v: str, length: int) -> None:
        self.edges.append((f"e{len(self.edges)}", u, v, length))

    def branch_orbit(self, rng, anchors: list[str], size: int, copies: int, max_length: int) -> list[list[str]]:
        """``copies`` copies of one rooted branch, copy ``i`` hung from ``anchors[i]``."""
        _, shape = _random_rooted(rng, size, max_length)
        top_len = rng.randint(1, max_length)
        out = []
        for i in range(copies):
            vs = [self.vertex() for _ in range(size)]
            for a, b, l in shape:
                self.edge(vs[a], vs[b], l)
            self.edge(anchors[i], vs[0], top_len)
            out.append(vs)
        for i in range(copies):
            for a, b in zip(out[i], out[(i + 1) % copies]):
                self.fmap[a] = b
        return out


def _random_tree(rng: random.Random, budget: int, max_length: int) -> _Builder:
    B = _Builder()
    if budget >= 2 and rng.random() < 0.2:
        # two halves swapped across an inverted edge; odd lengths break parity (B)
        half = rng.randint(1, budget // 2)
        _, shape = _random_rooted(rng, half, max_length)
        sides = []
        for _ in range(2):
            vs = [B.vertex() for _ in range(half)]
            for a, b, l in shape:
                B.edge(vs[a], vs[b], l)
            sides.append(vs)
        B.edge(sides[0][0], sides[1][0], rng.randint(1, max_length))
        for a, b in zip(*sides):
            B.fmap[a], B.fmap[b] = b, a
        return B
    core_size = rng.randint(1, max(1, budget - 2))
    _, shape = _random_rooted(rng, core_size, max_length)
    core = [B.vertex() for _ in range(core_size)]
    for a, b, l in shape:
        B.edge(core[a], core[b], l)
    left = budget - core_size
    while left >= 2 and rng.random() < 0.8:
        copies = rng.randint(2, min(4, left))
        size = rng.randint(1, max(1, left // copies))
        anchor = rng.choice(core)
        orbit = B.branch_orbit(rng, [anchor] * copies, size, copies, max_length)
        left -= copies * size
        # occasionally hang a smaller orbit off each copy, to get nested orbits
        if left >= copies and rng.random() < 0.3:
            B.branch_orbit(rng, [vs[-1] for vs in orbit], 1, copies, max_length)
            left -= copies
    if left >= 1 and rng.random() < 0.5:
        v = B.vertex()
        B.edge(rng.choice(core), v, rng.randint(1, max_length))
    return B


def _orbits(fmap: dict[str, str]) -> list[list[str]]:
    seen, out = set(), []
    for v in fmap:
        if v in seen:
            continue
        orb = [v]
        w = fmap[v]
        while w != v:
            orb.append(w)
            w = fmap[w]
        seen.update(orb)
        out.append(orb)
    return out


def _draw(rng: random.Random, max_vertices: int, max_length: int) -> BYForest:
    B = _Builder()
    trees = 1 if max_vertices < 4 or rng.random() < 0.7 else 2
    if trees == 2 and rng.random() < 0.5:
        # one tree repeated as an orbit of components
        copies = 2
        T = _random_tree(rng, max_vertices // copies, max_length)
        names = []
        for c in range(copies):
            names.append({v: f"t{c}{v}" for v in T.vertices})
            for v in T.vertices:
                B.vertices.append(names[c][v])
            for eid, u, v, l in T.edges:
                B.edges.append((f"t{c}{eid}", names[c][u], names[c][v], l))
        for c in range(copies):
            nxt = names[(c + 1) % copies]
            for v in T.vertices:
                # F moves copy c to copy c+1; on the way back it applies T's own map
                B.fmap[names[c][v]] = nxt[T.fmap[v]] if c == copies - 1 else nxt[v]
    else:
        budgets = [max_vertices] if trees == 1 else [max_vertices // 2, max_vertices - max_vertices // 2]
        for t, budget in enumerate(budgets):
            T = _random_tree(rng, budget, max_length)
            for v in T.vertices:
                B.vertices.append(f"t{t}{v}")
                B.fmap[f"t{t}{v}"] = f"t{t}{T.fmap[v]}"
            for eid, u, v, l in T.edges:
                B.edges.append((f"t{t}{eid}", f"t{t}{u}", f"t{t}{v}", l))
    s_vertices: set[str] = set()
    for orb in _orbits(B.fmap):
        if rng.random() < 0.45:
            s_vertices.update(orb)
    emap = {}
    ends = {e[0]: frozenset(e[1:3]) for e in B.edges}
    by_ends = {v: k for k, v in ends.items()}
    for eid, u, v, _ in B.edges:
        emap[eid] = by_ends[frozenset((B.fmap[u], B.fmap[v]))]
    s_edges: set[str] = set()
    for orb in _orbits(emap):
        u, v = ends[orb[0]]
        if u in s_vertices and v in s_vertices and rng.random() < 0.4:
            s_edges.update(orb)
    P = BYForest.build(B.vertices, B.edges, s_vertices, s_edges, B.fmap)
    return P.with_signs([rng.choice((1, -1)) for _ in P.components])


def random_forest(
    rng: random.Random,
    max_vertices: int = 10,
    max_length: int = 4,
    parity_A: bool = True,
    parity_B: bool = True,
    nonempty_S: bool = True,
    attempts: int = 10_000,
) -> BYForest:
    """A valid BY forest with at most ``max_vertices`` vertices satisfying the requested parities."""
    for _ in range(attempts):
        P = _draw(rng, rng.randint(1, max_vertices), max_length)
        if validate(P):
            continue
        if nonempty_S and not P.s_vertices:
            continue
        if parity_B and not check_parity_B(P).holds:
            continue
        if parity_A and not check_parity_A(P).holds:
            continue
        return P
    raise RuntimeError("no acceptable forest drawn")


def forests(seed: int, count: int, **kw) -> Iterator[BYForest]:
    rng = random.Random(seed)
    for _ in range(count):
        yield random_forest(rng, **kw)


# ---------------------------------------------------------------------------
# groups


def random_group_with_automorphism(rng: random.Random, max_rank: int = 3, max_factor: int = 12, scramble: bool = True) -> tuple[FinGenAbGroup, Matrix]:
    """A finite group ``Z^n / D`` (diagonal ``D``) with a finite-order automorphism.

    The automorphism permutes isomorphic cyclic factors, scaling each by a
    unit.  With ``scramble`` the presentation is then rewritten in a random
    unimodular basis, so relations and action are no longer monomial.
    """
    n = rng.randint(1, max_rank)
    base = rng.randint(2, max_factor)
    factors = [base if rng.random() < 0.6 else rng.randint(2, max_factor) for _ in range(n)]
    factors.sort()
    blocks: dict[int, list[int]] = {}
    for i, d in enumerate(factors):
        blocks.setdefault(d, []).append(i)
    A = [[0] * n for _ in range(n)]
    for d, idx in blocks.items():
        perm = idx[:]
        rng.shuffle(perm)
        for src, dst in zip(idx, perm):
            unit = rng.choice([u for u in range(1, d) if gcd(u, d) == 1] or [1])
            A[dst][src] = unit
    G = FinGenAbGroup.from_invariants(factors)
    if scramble and n > 1:
        U, V = _unimodular(rng, n)
        G = FinGenAbGroup(n, tuple(tuple(matvec(U, r)) for r in G.relations))
        A = matmul(matmul(U, A), V)
    return G, A


def _unimodular(rng: random.Random, n: int, steps: int = 4) -> tuple[Matrix, Matrix]:
    """A random ``U`` in GL_n(Z) and its inverse, from elementary row operations."""
    U, V = identity(n), identity(n)
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        k = rng.choice((-2, -1, 1, 2))
        for c in range(n):
            U[i][c] += k * U[j][c]
        # the inverse gets the opposite column operation
        for r in range(n):
            V[r][j] -= k * V[r][i]
    return U, V
