"""Néron component groups through pipes.

A simple tree is marked at an ``F``-fixed open vertex ``*``, decomposed into
the constructors ``Base``/``Graft``/``Wedge``/``IndWedge``/``Enlarge``, and
the pipe ``(Pi, y, eta)`` is folded up along the decomposition.  Positive
trees carry the triple ``(Pi^F, y, eta)`` and negative trees the triple
``(Pi^-F, alpha, tau)``; the component group is read off from the triple.

Every recursive quantity also has a direct route (straight from the lattice
``H_1(T, S + *)``) and the two are compared by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .abelian import (
    FinGenAbGroup,
    Matrix,
    Vector,
    adjoin_fraction,
    block_diag,
    concat,
    direct_sum,
    endo_order,
    fixed_gens,
    in_copy,
    induce,
    integer_solve,
    matvec,
    transpose,
    zeros,
)
from .core import BYForest, idkey, require_parity, sort_ids
from .errors import ComputationError, MalformedTree, NoFixedVertex, TrichotomyViolation
from .tamagawa import SimpleBYTree, reduce


# ---------------------------------------------------------------------------
# marked trees


@dataclass(frozen=True, eq=False)
class MarkedBYTree:
    """``(T, S, F, *)`` with ``S`` a set of leaves and ``*`` an ``F``-fixed open vertex."""

    tree: BYForest
    star: str
    sign: int = 1

    def __post_init__(self):
        T, star = self.tree, self.star
        if star not in T.vertices:
            raise MalformedTree(f"marked vertex {star!r} is not a vertex")
        if star in T.s_vertices:
            raise MalformedTree("the marked vertex lies in S")
        if T.F(star) != star:
            raise MalformedTree("the marked vertex is not F-fixed")
        if not T.s_vertices:
            raise MalformedTree("S is empty")
        if T.s_edges:
            raise MalformedTree("marked trees have no S edges")
        if len(T.tree_components) != 1:
            raise MalformedTree("marked trees are connected")
        bad = [v for v in sort_ids(T.s_vertices) if T.degree(v) != 1]
        if bad:
            raise MalformedTree(f"S vertex {bad[0]} is not a leaf")

    @property
    def s_list(self) -> list[str]:
        return sort_ids(self.tree.s_vertices)


def _split_edge(T: BYForest, eid: str, first: int, fmap: dict[str, str]) -> tuple[BYForest, str]:
    """Insert ``mid:eid`` at distance ``first`` from ``e.u``."""
    e = T.edge[eid]
    l = e.length.int_value()
    mid = f"mid:{eid}"
    edges = [(x.id, x.u, x.v, x.length) for x in T.edges if x.id != eid]
    edges += [(f"{eid}|{e.u}", e.u, mid, first), (f"{eid}|{e.v}", mid, e.v, l - first)]
    fm = dict(fmap)
    fm[mid] = mid
    return BYForest.build(list(T.vertices) + [mid], edges, T.s_vertices, (), fm), mid


def mark_tree(t: SimpleBYTree | BYForest, sign: int | None = None) -> tuple[MarkedBYTree, str]:
    """Choose ``*``; returns the marked tree and the side (``"eta"`` or ``"y"``) carrying the group.

    On the ``"eta"`` side the marked tree has the same ``S`` as the input.  The
    only exception is a unit edge joining two fixed points of ``S``: it cannot
    be subdivided integrally, so one end becomes ``*`` and the group is read
    from the ``"y"`` side.
    """
    if isinstance(t, SimpleBYTree):
        T, sign = t.forest, t.sign if sign is None else sign
    else:
        T, sign = t, 1 if sign is None else sign
    T.require_concrete()
    if len(T.s_vertices) < 2:
        raise MalformedTree("marking needs at least two points of S")
    fmap = {v: T.F(v) for v in T.vertices}
    fixed = [v for v in T.vertices if fmap[v] == v and v not in T.s_vertices]
    if fixed:
        return MarkedBYTree(T, fixed[0], sign), "eta"
    for e in T.edges:
        if fmap[e.u] == e.v and fmap[e.v] == e.u:
            l = e.length.int_value()
            if l % 2:
                raise ComputationError(f"edge {e.id} of odd length is inverted")
            M, mid = _split_edge(T, e.id, l // 2, fmap)
            return MarkedBYTree(M, mid, sign), "eta"
    if len(T.edges) != 1:
        raise NoFixedVertex("F fixes no open vertex and inverts no edge")
    e = T.edges[0]
    l = e.length.int_value()
    if l >= 2:
        M, mid = _split_edge(T, e.id, l // 2, fmap)
        return MarkedBYTree(M, mid, sign), "eta"
    star = sort_ids((e.u, e.v))[0]
    M = T.replace(s_vertices=frozenset(T.s_vertices - {star}))
    return MarkedBYTree(M, star, sign), "y"


# ---------------------------------------------------------------------------
# constructors


@dataclass(frozen=True)
class Base:
    length: int


@dataclass(frozen=True)
class Graft:
    sub: "Constructor"
    length: int


@dataclass(frozen=True)
class Wedge:
    parts: tuple["Constructor", ...]


@dataclass(frozen=True)
class IndWedge:
    sub: "Constructor"
    q: int


@dataclass(frozen=True)
class Enlarge:
    sub: "Constructor"


Constructor = Union[Base, Graft, Wedge, IndWedge, Enlarge]


def show(c: Constructor) -> str:
    if isinstance(c, Base):
        return f"Base({c.length})"
    if isinstance(c, Graft):
        return f"Graft({show(c.sub)}, {c.length})"
    if isinstance(c, Wedge):
        return "Wedge[" + ", ".join(show(p) for p in c.parts) + "]"
    if isinstance(c, IndWedge):
        return f"IndWedge({show(c.sub)}, {c.q})"
    return f"Enlarge({show(c.sub)})"


def _compose(f: dict[str, str], k: int) -> dict[str, str]:
    out = {}
    for v in f:
        w = v
        for _ in range(k):
            w = f[w]
        out[v] = w
    return out


def _pruned(m: MarkedBYTree) -> tuple[BYForest, bool]:
    """Drop open leaves other than ``*`` (repeatedly)."""
    T = m.tree
    alive = set(T.vertices)
    deg = {v: T.degree(v) for v in T.vertices}
    keep = T.s_vertices | {m.star}
    stack = [v for v in T.vertices if v not in keep and deg[v] <= 1]
    while stack:
        v = stack.pop()
        if v not in alive:
            continue
        alive.discard(v)
        for _, x in T.adjacency.get(v, ()):
            if x in alive:
                deg[x] -= 1
                if x not in keep and deg[x] <= 1:
                    stack.append(x)
    if alive == set(T.vertices):
        return T, False
    edges = [(e.id, e.u, e.v, e.length) for e in T.edges if e.u in alive and e.v in alive]
    return BYForest.build(alive, edges, T.s_vertices, (), {v: T.F(v) for v in alive}), True


def decompose(m: MarkedBYTree) -> Constructor:
    """Structural decomposition at ``*``; branches are ordered by their far vertex."""
    T, pruned = _pruned(m)
    f = {v: T.F(v) for v in T.vertices}
    c = _branches(T, m.star, None, f)
    return Enlarge(c) if pruned else c


def _branches(T: BYForest, star: str, parent: str | None, f: dict[str, str]) -> Constructor:
    arms = {w: eid for eid, w in T.adjacency[star] if w != parent}
    if not arms:
        raise MalformedTree(f"vertex {star!r} has no branch away from the root")
    seen: set[str] = set()
    parts: list[Constructor] = []
    for w in sorted(arms, key=idkey):
        if w in seen:
            continue
        orbit = [w]
        x = f[w]
        while x != w:
            if x not in arms:
                raise MalformedTree(f"F does not permute the branches at {star!r}")
            orbit.append(x)
            x = f[x]
        seen.update(orbit)
        q = len(orbit)
        fq = _compose(f, q) if q > 1 else f
        part = _arm(T, star, w, arms[w], fq)
        parts.append(IndWedge(part, q) if q > 1 else part)
    return parts[0] if len(parts) == 1 else Wedge(tuple(parts))


def _arm(T: BYForest, star: str, w: str, eid: str, f: dict[str, str]) -> Constructor:
    l = T.edge[eid].length.int_value()
    if w in T.s_vertices:
        if T.degree(w) != 1:
            raise MalformedTree(f"S vertex {w!r} is not a leaf")
        return Base(l)
    return Graft(_branches(T, w, star, f), l)


# ---------------------------------------------------------------------------
# pipes


@dataclass(frozen=True)
class Pipe:
    """``(Pi, F, y, eta)`` with ``F`` acting on column vectors of ``Z^rank``."""

    group: FinGenAbGroup
    action: Matrix
    y: Vector
    eta: Vector

    def over_y(self) -> FinGenAbGroup:
        return self.group.quotient([self.y])

    def over_eta(self) -> FinGenAbGroup:
        return self.group.quotient([self.eta])

    def to_dict(self) -> dict:
        return {
            "rank": self.group.rank,
            "relations": [list(r) for r in self.group.relations],
            "action": [list(r) for r in self.action],
            "y": list(self.y),
            "eta": list(self.eta),
        }


def pipe(m: MarkedBYTree, method: str = "recursive") -> Pipe:
    if method == "direct":
        return direct_pipe(m)
    if method == "recursive":
        return recursive_pipe(decompose(m))
    raise ValueError(f"unknown method {method!r}")


def _paths_from_star(m: MarkedBYTree) -> dict[str, dict[str, int]]:
    """For each point of S, the edges (with lengths) on its path from ``*``."""
    T = m.tree
    out = {}
    for x in m.s_list:
        path = T.path(m.star, x)
        out[x] = {eid: T.edge[eid].length.int_value() for eid, _ in path}
    return out


def direct_pipe(m: MarkedBYTree) -> Pipe:
    """``Lambda^dual / Sigma`` for ``Lambda = H_1(T, S + *)`` with the path basis."""
    S = m.s_list
    paths = _paths_from_star(m)
    n = len(S)
    G = [[sum(l for eid, l in paths[x].items() if eid in paths[z]) for z in S] for x in S]
    cols = transpose(G, n)
    rels = [tuple(a - b for a, b in zip(cols[j], cols[0])) for j in range(1, n)]
    pos = {x: i for i, x in enumerate(S)}
    P = zeros(n, n)
    for x in S:
        P[pos[m.tree.F(x)]][pos[x]] = 1
    return Pipe(FinGenAbGroup(n, tuple(rels)), P, tuple(cols[0]), tuple([1] * n))


def recursive_pipe(c: Constructor) -> Pipe:
    if isinstance(c, Base):
        return Pipe(FinGenAbGroup(1), [[1]], (c.length,), (1,))
    if isinstance(c, Graft):
        p = recursive_pipe(c.sub)
        y = tuple(a + c.length * b for a, b in zip(p.y, p.eta))
        return Pipe(p.group, p.action, y, p.eta)
    if isinstance(c, Enlarge):
        return recursive_pipe(c.sub)
    if isinstance(c, Wedge):
        acc = recursive_pipe(c.parts[0])
        for part in c.parts[1:]:
            acc = _wedge_pipes(acc, recursive_pipe(part))
        return acc
    if isinstance(c, IndWedge):
        p = recursive_pipe(c.sub)
        q = c.q
        H, M = induce(p.group, p.action, q)
        u = in_copy(p.y, 0, q)
        # the F-submodule generated by (1 - F) y0 is J_q y0, spanned by F^i y0 - F^(i+1) y0
        orbit = [u]
        for _ in range(q - 1):
            orbit.append(tuple(matvec(M, orbit[-1])))
        rels = [tuple(a - b for a, b in zip(orbit[i], orbit[i + 1])) for i in range(q - 1)]
        eta = [0] * (H.rank)
        for i in range(q):
            eta = [a + b for a, b in zip(eta, in_copy(p.eta, i, q))]
        return Pipe(H.quotient(rels), M, u, tuple(eta))
    raise TypeError(f"not a constructor: {c!r}")


def _wedge_pipes(a: Pipe, b: Pipe) -> Pipe:
    n0, n1 = a.group.rank, b.group.rank
    G = direct_sum(a.group, b.group).quotient([concat(a.y, tuple(-x for x in b.y))])
    A = block_diag(a.action, b.action, sizes=[n0, n1])
    return Pipe(G, A, concat(a.y, (0,) * n1), concat(a.eta, b.eta))


def fixed_part(p: Pipe, sign: int = 1) -> list[Vector]:
    """Generators of ``Pi^{sign F}``."""
    A = p.action if sign == 1 else [[-x for x in row] for row in p.action]
    return fixed_gens(p.group, A)


def action_order(p: Pipe) -> int:
    return endo_order(p.group, p.action)


# ---------------------------------------------------------------------------
# triples


@dataclass(frozen=True)
class PosTriple:
    group: FinGenAbGroup
    y: Vector
    eta: Vector

    def over_eta(self) -> FinGenAbGroup:
        return self.group.quotient([self.eta])

    def over_y(self) -> FinGenAbGroup:
        return self.group.quotient([self.y])


@dataclass(frozen=True)
class NegTriple:
    """``alpha`` is a representative in ``group``; only its class mod 2 matters."""

    group: FinGenAbGroup
    alpha: Vector
    tau: int

    def with_half_alpha(self) -> FinGenAbGroup:
        return adjoin_fraction(self.group, self.alpha, 2)[0]

    def over_eta(self) -> FinGenAbGroup:
        return self.with_half_alpha() if self.tau == 1 else self.group

    def over_y(self) -> FinGenAbGroup:
        return self.with_half_alpha() if self.tau == 0 else self.group


def positive_triple(c: Constructor | MarkedBYTree) -> PosTriple:
    if isinstance(c, MarkedBYTree):
        c = decompose(c)
    if isinstance(c, Base):
        return PosTriple(FinGenAbGroup(1), (c.length,), (1,))
    if isinstance(c, Graft):
        t = positive_triple(c.sub)
        return PosTriple(t.group, tuple(a + c.length * b for a, b in zip(t.y, t.eta)), t.eta)
    if isinstance(c, Enlarge):
        return positive_triple(c.sub)
    if isinstance(c, Wedge):
        acc = positive_triple(c.parts[0])
        for part in c.parts[1:]:
            t = positive_triple(part)
            n1 = t.group.rank
            G = direct_sum(acc.group, t.group).quotient([concat(acc.y, tuple(-x for x in t.y))])
            acc = PosTriple(G, concat(acc.y, (0,) * n1), concat(acc.eta, t.eta))
        return acc
    if isinstance(c, IndWedge):
        t = positive_triple(c.sub)
        H, z = adjoin_fraction(t.group, t.y, c.q)
        return PosTriple(H, z, t.eta + (0,))
    raise TypeError(f"not a constructor: {c!r}")


def negative_triple(c: Constructor | MarkedBYTree) -> NegTriple:
    if isinstance(c, MarkedBYTree):
        c = decompose(c)
    if isinstance(c, Base):
        return NegTriple(FinGenAbGroup(0), (), 2 if c.length % 2 else 0)
    if isinstance(c, Graft):
        t = negative_triple(c.sub)
        return NegTriple(t.group, t.alpha, 2 - t.tau if c.length % 2 else t.tau)
    if isinstance(c, Enlarge):
        return negative_triple(c.sub)
    if isinstance(c, Wedge):
        acc = negative_triple(c.parts[0])
        for part in c.parts[1:]:
            acc = _wedge_negative(acc, negative_triple(part))
        return acc
    if isinstance(c, IndWedge):
        if c.q % 2:
            return negative_triple(c.sub)
        t = positive_triple(c.sub)
        return NegTriple(t.group.quotient([t.y]), t.eta, 1)
    raise TypeError(f"not a constructor: {c!r}")


def _wedge_negative(a: NegTriple, b: NegTriple) -> NegTriple:
    n0, n1 = a.group.rank, b.group.rank
    K = direct_sum(a.group, b.group)
    a0 = concat(a.alpha, (0,) * n1)
    a1 = concat((0,) * n0, b.alpha)
    extra = 0
    if a.tau == 0 and b.tau == 0:
        K, _ = adjoin_fraction(K, tuple(x - z for x, z in zip(a0, a1)), 2)
        extra = 1
    if a.tau == 0:
        alpha = a0
    elif b.tau == 0:
        alpha = a1
    else:
        alpha = tuple(x + z for x, z in zip(a0, a1))
    return NegTriple(K, alpha + (0,) * extra, (a.tau * b.tau) % 3)


# ---------------------------------------------------------------------------
# types


def _norm_preimage(p: Pipe, gamma: Vector) -> Vector | None:
    """Some ``beta`` with ``(1 + F) beta = gamma`` in ``Pi``, or ``None``."""
    n = p.group.rank
    N = [[p.action[i][j] + (i == j) for j in range(n)] for i in range(n)]
    cols = transpose(N, n) + [list(r) for r in p.group.relations]
    sol = integer_solve(transpose(cols, n), gamma, len(cols))
    return None if sol is None else tuple(sol[:n])


def direct_type(p: Pipe) -> tuple[int, Vector]:
    """``(tau, beta)`` found by solving ``(1 + F) beta = gamma`` for ``gamma = y, eta, y + eta``."""
    gammas = (p.y, p.eta, tuple(a + b for a, b in zip(p.y, p.eta)))
    found = [(tau, b) for tau, g in enumerate(gammas) if (b := _norm_preimage(p, g)) is not None]
    if len(found) != 1:
        raise TrichotomyViolation(f"{len(found)} of y, eta, y + eta are norms")
    return found[0]


def classify_type(m: MarkedBYTree) -> int:
    """The type of ``m``, computed both ways; they must agree."""
    c = decompose(m)
    rec = negative_triple(c).tau
    direct, _ = direct_type(direct_pipe(m))
    if rec != direct:
        raise TrichotomyViolation(f"recursive type {rec} differs from direct type {direct}")
    return rec


# ---------------------------------------------------------------------------
# groups


def direct_groups(m: MarkedBYTree) -> dict[str, FinGenAbGroup]:
    """Component groups of ``(T, S, sign F)`` and ``(T, S + *, sign F)`` straight from the pipe."""
    p = direct_pipe(m)
    n = p.group.rank
    A = p.action if m.sign == 1 else [[-x for x in row] for row in p.action]
    out = {}
    for side, gamma in (("eta", p.eta), ("y", p.y)):
        Q = p.group.quotient([gamma])
        out[side] = Q.subquotient(fixed_gens(Q, A)) if n else Q
    return out


def recursive_groups(m: MarkedBYTree) -> dict[str, FinGenAbGroup]:
    c = decompose(m)
    t = positive_triple(c) if m.sign == 1 else negative_triple(c)
    return {"eta": t.over_eta(), "y": t.over_y()}


def piece_group(t: SimpleBYTree) -> FinGenAbGroup:
    """Component group of one simple tree (trivial when ``#S = 1``)."""
    if len(t.forest.s_vertices) < 2:
        return FinGenAbGroup(0)
    m, side = mark_tree(t)
    return recursive_groups(m)[side]


def neron_group(P: BYForest, oracle_check: bool = False) -> list[int]:
    """Invariant factors of the Néron component group of ``P``."""
    P.require_concrete()
    require_parity(P, A=False, B=True)
    G = direct_sum(*[piece_group(t) for t in reduce(P)])
    out = G.invariant_factors()
    if oracle_check:
        from .oracle import neron_oracle

        expected = neron_oracle(P)
        if out != expected:
            raise ComputationError(f"neron_group gives {out} but the oracle gives {expected}")
    return out


__all__ = [
    "Base",
    "Constructor",
    "Enlarge",
    "Graft",
    "IndWedge",
    "MarkedBYTree",
    "NegTriple",
    "Pipe",
    "PosTriple",
    "Wedge",
    "action_order",
    "classify_type",
    "decompose",
    "direct_groups",
    "direct_pipe",
    "direct_type",
    "fixed_part",
    "mark_tree",
    "negative_triple",
    "neron_group",
    "piece_group",
    "pipe",
    "positive_triple",
    "recursive_groups",
    "recursive_pipe",
    "show",
]
