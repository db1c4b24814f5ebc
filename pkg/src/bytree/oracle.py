"""Ground-truth invariants straight from homology lattices.

Nothing here uses the reduction or recursion machinery: the geometric
component group is the cokernel of the length pairing on relative
homology (or on graph homology), and the arithmetic group is its
fixed subgroup under the induced action.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .abelian import FinGenAbGroup, Matrix, determinant, fixed_subgroup, matmul, simplify, transpose
from .core import BYForest, HyperellipticGraph, idkey, to_double_cover
from .errors import ComputationError, NonIntegralGram


@dataclass(frozen=True)
class RelHomLattice:
    """A lattice with basis ``basis`` (vectors over ``edges``), Gram matrix and action.

    ``action`` acts on coordinate column vectors: the image of basis vector
    ``j`` is ``sum_i action[i][j] * basis[i]``.
    """

    edges: tuple[str, ...]
    basis: tuple[tuple[int, ...], ...]
    gram: tuple[tuple[int, ...], ...]
    action: tuple[tuple[int, ...], ...]
    coordinate_edges: tuple[str, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.basis)

    def is_isometry(self) -> bool:
        A, G = [list(r) for r in self.action], [list(r) for r in self.gram]
        return matmul(matmul(transpose(A, self.rank), G), A) == G if self.rank else True


# ---------------------------------------------------------------------------
# building lattices


def lattice_of(P: BYForest) -> RelHomLattice:
    """``H_1(T, S)`` with the length pairing and the ``eps F`` action."""
    P.require_concrete()
    # contract S components; classes keyed by their smallest vertex
    parent = {v: v for v in P.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in P.s_edges:
        e = P.edge[eid]
        a, b = find(e.u), find(e.v)
        if a != b:
            parent[a] = b
    cls: dict[str, str] = {}
    members: dict[str, list[str]] = {}
    for v in P.vertices:
        members.setdefault(find(v), []).append(v)
    for root, vs in members.items():
        name = min(vs, key=idkey)
        for v in vs:
            cls[v] = name
    marked = {cls[v] for v in P.s_vertices}
    yellow = [e for e in P.edges if e.id not in P.s_edges]
    edges = tuple(e.id for e in yellow)
    index = {eid: i for i, eid in enumerate(edges)}
    adj: dict[str, list[tuple[str, str, int]]] = {}
    for e in yellow:
        a, b = cls[e.u], cls[e.v]
        adj.setdefault(a, []).append((e.id, b, 1))
        adj.setdefault(b, []).append((e.id, a, -1))
    basis: list[tuple[int, ...]] = []
    marks: list[str] = []
    seen: set[str] = set()
    for m in sorted(marked, key=idkey):
        if m in seen:
            continue
        # walk the contracted component containing m, recording signed paths
        path: dict[str, list[int]] = {m: [0] * len(edges)}
        stack = [m]
        while stack:
            w = stack.pop()
            for eid, x, o in adj.get(w, ()):
                if x not in path:
                    vec = list(path[w])
                    vec[index[eid]] += o
                    path[x] = vec
                    stack.append(x)
        seen |= set(path)
        for x in sorted((x for x in path if x in marked and x != m), key=idkey):
            basis.append(tuple(path[x]))
            marks.append(x)
    lengths = [P.edge[eid].length.int_value() for eid in edges]
    gram = _gram(basis, lengths)
    images = []
    for vec in basis:
        img = [0] * len(edges)
        for eid, c in zip(edges, vec):
            if c:
                target, o = P.edge_map[eid]
                img[index[target]] += c * o * P.sign_of(eid)
        images.append(img)
    # coordinates: the boundary of a relative cycle at each non-base mark
    mark_pos = {x: i for i, x in enumerate(marks)}
    cols = []
    for img in images:
        coord = [0] * len(basis)
        for eid, c in zip(edges, img):
            if not c:
                continue
            e = P.edge[eid]
            for end, s in ((cls[e.v], 1), (cls[e.u], -1)):
                if end in mark_pos:
                    coord[mark_pos[end]] += s * c
        _check_reconstruct(basis, coord, img)
        cols.append(coord)
    action = transpose(cols, len(basis)) if cols else []
    return RelHomLattice(edges, tuple(basis), gram, tuple(tuple(r) for r in action))


def _gram(basis: Sequence[Sequence], lengths: Sequence) -> tuple[tuple[int, ...], ...]:
    support = [[(i, a) for i, a in enumerate(x) if a] for x in basis]
    weighted = [{i: lengths[i] * a for i, a in sx} for sx in support]
    n = len(basis)
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        wx = weighted[i]
        for j in range(i, n):
            s = sum(wx[k] * b for k, b in support[j] if k in wx)
            if isinstance(s, Fraction):
                if s.denominator != 1:
                    raise NonIntegralGram(f"pairing value {s} is not an integer")
            out[i][j] = out[j][i] = int(s)
    return tuple(tuple(row) for row in out)


def _check_reconstruct(basis, coord, target) -> None:
    recon = [0] * len(target)
    for c, b in zip(coord, basis):
        if c:
            for i, x in enumerate(b):
                if x:
                    recon[i] += c * x
    if recon != list(target):
        raise ComputationError("image of a cycle is not in the span of the basis")


def lattice_of_graph(G: HyperellipticGraph) -> RelHomLattice:
    """``H_1(G)`` with the length pairing and the Frobenius action; fundamental-cycle basis."""
    edges = tuple(e.id for e in G.edges)
    index = {eid: i for i, eid in enumerate(edges)}
    adj: dict[str, list[tuple[str, str, int]]] = {v: [] for v in G.vertices}
    for e in G.edges:
        adj[e.u].append((e.id, e.v, 1))
        adj[e.v].append((e.id, e.u, -1))
    # spanning forest, remembering the signed path from the root
    path: dict[str, list[int]] = {}
    tree_edges: set[str] = set()
    for root in G.vertices:
        if root in path:
            continue
        path[root] = [0] * len(edges)
        queue = [root]
        while queue:
            w = queue.pop(0)
            for eid, x, o in adj[w]:
                if x not in path:
                    vec = list(path[w])
                    vec[index[eid]] += o
                    path[x] = vec
                    tree_edges.add(eid)
                    queue.append(x)
    chords = [e for e in G.edges if e.id not in tree_edges]
    basis = []
    for e in chords:
        vec = [a - b for a, b in zip(path[e.u], path[e.v])]
        vec[index[e.id]] += 1
        basis.append(tuple(vec))
    lengths = [e.length for e in G.edges]
    gram = _gram(basis, lengths)
    chord_pos = {e.id: i for i, e in enumerate(chords)}
    cols = []
    for vec in basis:
        img = _push(G, vec, edges, index)
        coord = [0] * len(basis)
        for eid, c in zip(edges, img):
            if eid in chord_pos:
                coord[chord_pos[eid]] = c
        _check_reconstruct(basis, coord, img)
        cols.append(coord)
    action = transpose(cols, len(basis)) if cols else []
    return RelHomLattice(
        edges, tuple(basis), gram, tuple(tuple(r) for r in action), tuple(e.id for e in chords)
    )


def _push(G: HyperellipticGraph, vec, edges, index, emap=None, vmap=None) -> list[int]:
    emap = G.frob_edges if emap is None else emap
    vmap = G.frob if vmap is None else vmap
    img = [0] * len(edges)
    for eid, c in zip(edges, vec):
        if c:
            target, o = G.orient(emap, vmap, eid)
            img[index[target]] += c * o
    return img


# ---------------------------------------------------------------------------
# component groups


def _inverse(M: Sequence[Sequence[int]]) -> list[list[Fraction]]:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[p] = A[p], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                k = A[r][c]
                A[r] = [x - k * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def dual_action(L: RelHomLattice) -> Matrix:
    """``gram * action * gram^-1``: the action on ``coker(gram)``, asserted integral.

    For an isometry this is the inverse transpose of ``action``; when the
    action has small finite order that inverse is a power of it, which keeps
    the arithmetic in integers.  The defining identity ``D gram = gram A``
    is checked either way.
    """
    n = L.rank
    if n == 0:
        return []
    gram = [list(r) for r in L.gram]
    A = [list(r) for r in L.action]
    D = _finite_order_inverse_transpose(A)
    if D is None:
        prod = matmul(matmul(gram, A), _inverse(gram))
        if any(Fraction(x).denominator != 1 for row in prod for x in row):
            raise ComputationError("induced action on the discriminant group is not integral")
        D = [[int(x) for x in row] for row in prod]
    if matmul(D, gram) != matmul(gram, A):
        raise ComputationError("induced action does not satisfy D*gram = gram*A")
    return D


def _finite_order_inverse_transpose(A: Matrix, cap: int = 720) -> Matrix | None:
    n = len(A)
    ident = [[int(i == j) for j in range(n)] for i in range(n)]
    prev, power = ident, A
    for _ in range(cap):
        if power == ident:
            return transpose(prev, n)
        prev, power = power, matmul(power, A)
    return None


def geometric_component_group(L: RelHomLattice) -> tuple[FinGenAbGroup, Matrix]:
    """``coker(gram)`` with the action induced by ``action``."""
    G = FinGenAbGroup(L.rank, L.gram)
    if L.rank and determinant([list(r) for r in L.gram]) == 0:
        raise ComputationError("pairing is degenerate")
    return G, dual_action(L)


def component_groups(L: RelHomLattice) -> tuple[FinGenAbGroup, FinGenAbGroup]:
    """(geometric group, fixed subgroup)."""
    G, A = geometric_component_group(L)
    H, _ = fixed_subgroup(*simplify(G, A))
    return G, H


def tamagawa_oracle(P: BYForest) -> int:
    return component_groups(lattice_of(P))[1].order()


def neron_oracle(P: BYForest) -> list[int]:
    return component_groups(lattice_of(P))[1].invariant_factors()


def graph_tamagawa(G: HyperellipticGraph) -> int:
    return component_groups(lattice_of_graph(G))[1].order()


def oracle_report(P: BYForest) -> dict:
    G, H = component_groups(lattice_of(P))
    return {"tamagawa": H.order(), "neron": H.invariant_factors(), "geometric": G.invariant_factors()}


def graph_report(G: HyperellipticGraph) -> dict:
    geo, H = component_groups(lattice_of_graph(G))
    return {"tamagawa": H.order(), "neron": H.invariant_factors(), "geometric": geo.invariant_factors()}


# ---------------------------------------------------------------------------
# covers


def check_cover_isometry(P: BYForest) -> dict:
    """Compare ``H_1(T, S)`` with the anti-invariant cycles ``g - iota g`` on the double cover."""
    cover = to_double_cover(P)
    LT = lattice_of(P)
    LG = lattice_of_graph(cover)
    g_edges = LG.edges
    g_index = {eid: i for i, eid in enumerate(g_edges)}
    lifts = []
    for vec in LT.basis:
        lift = [0] * len(g_edges)
        for eid, c in zip(LT.edges, vec):
            if c:
                lift[g_index[f"{eid}+"]] += c
                lift[g_index[f"{eid}-"]] -= c
        lifts.append(lift)
    lengths = [cover.edge[eid].length for eid in g_edges]
    gram_ok = _gram(lifts, lengths) == LT.gram
    action_ok = True
    for j, lift in enumerate(lifts):
        img = _push(cover, lift, g_edges, g_index)
        expect = [sum(LT.action[i][j] * lifts[i][k] for i in range(LT.rank)) for k in range(len(g_edges))]
        action_ok &= img == expect
    # the lifts must span H_1 of the cover; chord coefficients are coordinates
    coords = [[lift[g_index[eid]] for eid in LG.coordinate_edges] for lift in lifts]
    if LT.rank != LG.rank:
        unimodular = False
    elif LT.rank == 0:
        unimodular = True
    else:
        unimodular = abs(determinant(coords)) == 1
    iota_ok = all(
        _push(cover, lift, g_edges, g_index, cover.iota_edges, cover.iota) == [-x for x in lift] for lift in lifts
    )
    ok = gram_ok and action_ok and unimodular and iota_ok
    return {
        "ok": ok,
        "gram_match": gram_ok,
        "action_match": action_ok,
        "unimodular": unimodular,
        "anti_invariant": iota_ok,
        "rank_tree": LT.rank,
        "rank_graph": LG.rank,
        "gram_tree": [list(r) for r in LT.gram],
        "gram_graph": [list(r) for r in LG.gram],
    }


__all__ = [
    "RelHomLattice",
    "lattice_of",
    "lattice_of_graph",
    "geometric_component_group",
    "dual_action",
    "component_groups",
    "tamagawa_oracle",
    "neron_oracle",
    "graph_tamagawa",
    "oracle_report",
    "graph_report",
    "check_cover_isometry",
]
