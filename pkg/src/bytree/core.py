"""BY forests: metric forests with a subgraph S and a signed automorphism.

Also home to the structural transformations used everywhere else:
components of the complement of S, parity conditions, subdivision, convex
hulls, sign normalisation, base change, and the double-cover dictionary
with hyperelliptic graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    EmptyS,
    ParityViolation,
    QuotientNotForest,
    SymbolicLength,
    UndeterminedParity,
    ValidationError,
)

PARITIES = ("even", "odd", "unknown")


def idkey(x: str) -> tuple:
    """Sort key putting numeric ids in numeric order before other strings."""
    s = str(x)
    return (0, int(s), "") if s.lstrip("-").isdigit() else (1, 0, s)


def sort_ids(xs: Iterable[str]) -> list[str]:
    return sorted(xs, key=idkey)


# ---------------------------------------------------------------------------
# lengths


@dataclass(frozen=True)
class LengthForm:
    """``constant + sum coeff*var`` with non-negative integer coefficients.

    Every variable carries a declared parity ("even", "odd" or "unknown").
    """

    constant: int = 0
    terms: tuple[tuple[str, int], ...] = ()
    parities: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        terms = {}
        for v, c in self.terms:
            if c < 0:
                raise ValueError(f"negative coefficient for {v}")
            if c:
                terms[v] = terms.get(v, 0) + c
        par = dict(self.parities)
        for v in terms:
            par.setdefault(v, "unknown")
        for v, p in par.items():
            if p not in PARITIES:
                raise ValueError(f"bad parity {p!r} for {v}")
        if self.constant < 0:
            raise ValueError("negative constant")
        object.__setattr__(self, "terms", tuple(sorted(terms.items())))
        object.__setattr__(self, "parities", tuple(sorted((v, par[v]) for v in terms)))

    @classmethod
    def const(cls, n: int) -> "LengthForm":
        return cls(int(n))

    @classmethod
    def var(cls, name: str, parity: str = "unknown", coeff: int = 1) -> "LengthForm":
        return cls(0, ((name, coeff),), ((name, parity),))

    @property
    def coeffs(self) -> dict[str, int]:
        return dict(self.terms)

    @property
    def parity_of(self) -> dict[str, str]:
        return dict(self.parities)

    def is_constant(self) -> bool:
        return not self.terms

    def is_positive(self) -> bool:
        return self.constant > 0 or any(c > 0 for _, c in self.terms)

    def variables(self) -> list[str]:
        return [v for v, _ in self.terms]

    def __add__(self, other: "LengthForm | int") -> "LengthForm":
        if isinstance(other, int):
            other = LengthForm(other)
        return LengthForm(self.constant + other.constant, self.terms + other.terms, self.parities + other.parities)

    __radd__ = __add__

    def scale(self, k: int) -> "LengthForm":
        return LengthForm(self.constant * k, tuple((v, c * k) for v, c in self.terms), self.parities)

    def parity(self) -> int:
        """0 or 1, raising ``UndeterminedParity`` if it depends on an unknown variable."""
        total = self.constant
        par = self.parity_of
        for v, c in self.terms:
            if c % 2 == 0:
                continue
            p = par[v]
            if p == "unknown":
                raise UndeterminedParity(v, f"length {self}")
            total += p == "odd"
        return total % 2

    def value(self, env: Mapping[str, int] | None = None) -> int:
        if self.is_constant():
            return self.constant
        if env is None:
            raise SymbolicLength(f"length {self} is not constant")
        return self.constant + sum(c * int(env[v]) for v, c in self.terms)

    def int_value(self) -> int:
        if not self.is_constant():
            raise SymbolicLength(f"length {self} is not constant")
        return self.constant

    def substitute(self, env: Mapping[str, int]) -> "LengthForm":
        keep = [(v, c) for v, c in self.terms if v not in env]
        const = self.constant + sum(c * int(env[v]) for v, c in self.terms if v in env)
        return LengthForm(const, tuple(keep), tuple(p for p in self.parities if p[0] not in env))

    def with_parity(self, var: str, parity: str) -> "LengthForm":
        if var not in self.coeffs:
            return self
        return LengthForm(self.constant, self.terms, tuple((v, parity if v == var else p) for v, p in self.parities))

    def to_sympy(self):
        from sympy import Integer, Symbol

        out = Integer(self.constant)
        for v, c in self.terms:
            out += c * Symbol(v, positive=True, integer=True)
        return out

    def __str__(self) -> str:
        parts = [(f"{c}*{v}" if c != 1 else v) for v, c in self.terms]
        if self.constant or not parts:
            parts.append(str(self.constant))
        return "+".join(parts)

    def to_json(self):
        if self.is_constant():
            return self.constant
        return {
            "constant": self.constant,
            "terms": {v: c for v, c in self.terms},
            "parity": {v: p for v, p in self.parities},
        }


def as_length(x) -> LengthForm:
    if isinstance(x, LengthForm):
        return x
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError(f"not a length: {x!r}")
    return LengthForm(x)


# ---------------------------------------------------------------------------
# forests


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: LengthForm

    def ends(self) -> tuple[str, str]:
        return (self.u, self.v)

    def other(self, w: str) -> str:
        return self.v if w == self.u else self.u


@dataclass(frozen=True)
class YellowComponent:
    """A connected component of the complement of S, as a set of edge ids."""

    edges: frozenset[str]

    @property
    def rep(self) -> str:
        return min(self.edges, key=idkey)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    witness: object = None

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "witness": _jsonable(self.witness)}


def _jsonable(x):
    if isinstance(x, (list, tuple, set, frozenset)):
        return [_jsonable(y) for y in (sort_ids(x) if isinstance(x, (set, frozenset)) else x)]
    return x


@dataclass(frozen=True, eq=False)
class BYForest:
    """``(T, S, eps F)``.

    ``fmap`` is the vertex permutation ``F``.  ``sign_pairs`` maps an edge id
    to the sign of the component of the complement of ``S`` containing it;
    any edge of the component may serve as its representative.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    s_vertices: frozenset[str] = frozenset()
    s_edges: frozenset[str] = frozenset()
    fmap: Mapping[str, str] = field(default_factory=dict)
    sign_pairs: Mapping[str, int] = field(default_factory=dict)

    # --- construction -----------------------------------------------------

    @classmethod
    def build(
        cls,
        vertices: Iterable,
        edges: Iterable[tuple],
        s_vertices: Iterable = (),
        s_edges: Iterable = (),
        fmap: Mapping | None = None,
        signs: Mapping | None = None,
    ) -> "BYForest":
        """Convenience constructor; ``edges`` are ``(id, u, v, length)`` tuples."""
        verts = tuple(sort_ids(str(v) for v in vertices))
        es = tuple(
            sorted((Edge(str(e[0]), str(e[1]), str(e[2]), as_length(e[3])) for e in edges), key=lambda e: idkey(e.id))
        )
        fm = {str(k): str(v) for k, v in (fmap or {}).items()}
        for v in verts:
            fm.setdefault(v, v)
        return cls(
            verts,
            es,
            frozenset(str(v) for v in s_vertices),
            frozenset(str(e) for e in s_edges),
            fm,
            {str(k): int(s) for k, s in (signs or {}).items()},
        )

    def replace(self, **kw) -> "BYForest":
        data = dict(
            vertices=self.vertices,
            edges=self.edges,
            s_vertices=self.s_vertices,
            s_edges=self.s_edges,
            fmap=self.fmap,
            sign_pairs=self.sign_pairs,
        )
        data.update(kw)
        if "edges" in kw:
            data["edges"] = tuple(sorted(data["edges"], key=lambda e: idkey(e.id)))
        if "vertices" in kw:
            data["vertices"] = tuple(sort_ids(data["vertices"]))
        return BYForest(**data)

    # --- basic structure --------------------------------------------------

    @cached_property
    def edge(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, str]]]:
        """vertex -> list of (edge id, neighbour)."""
        adj: dict[str, list[tuple[str, str]]] = {v: [] for v in self.vertices}
        for e in self.edges:
            adj.setdefault(e.u, []).append((e.id, e.v))
            adj.setdefault(e.v, []).append((e.id, e.u))
        return adj

    def degree(self, v: str) -> int:
        return len(self.adjacency.get(v, ()))

    @cached_property
    def edge_between(self) -> dict[frozenset, str]:
        return {frozenset((e.u, e.v)): e.id for e in self.edges}

    def is_concrete(self) -> bool:
        return all(e.length.is_constant() for e in self.edges)

    def require_concrete(self) -> None:
        for e in self.edges:
            if not e.length.is_constant():
                raise SymbolicLength(f"edge {e.id} has symbolic length {e.length}")

    def variables(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for e in self.edges:
            out.update(e.length.parity_of)
        return dict(sorted(out.items()))

    @cached_property
    def tree_components(self) -> list[frozenset[str]]:
        """Vertex sets of the connected components of T."""
        seen: set[str] = set()
        out = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            while stack:
                w = stack.pop()
                for _, x in self.adjacency.get(w, ()):
                    if x not in comp:
                        comp.add(x)
                        stack.append(x)
            seen |= comp
            out.append(frozenset(comp))
        return out

    def path(self, a: str, b: str) -> list[tuple[str, int]] | None:
        """Edges from ``a`` to ``b`` as ``(edge id, orientation)``; ``None`` if disconnected."""
        prev: dict[str, tuple[str, str] | None] = {a: None}
        stack = [a]
        while stack:
            w = stack.pop()
            if w == b:
                break
            for eid, x in self.adjacency.get(w, ()):
                if x not in prev:
                    prev[x] = (eid, w)
                    stack.append(x)
        if b not in prev:
            return None
        out = []
        w = b
        while prev[w] is not None:
            eid, p = prev[w]
            out.append((eid, 1 if self.edge[eid].u == p else -1))
            w = p
        return out[::-1]

    def distance(self, a: str, b: str) -> LengthForm | None:
        p = self.path(a, b)
        if p is None:
            return None
        total = LengthForm(0)
        for eid, _ in p:
            total = total + self.edge[eid].length
        return total

    # --- automorphism -----------------------------------------------------

    def F(self, v: str) -> str:
        return self.fmap.get(v, v)

    @cached_property
    def edge_map(self) -> dict[str, tuple[str, int]]:
        """edge id -> (image edge id, orientation sign)."""
        out = {}
        for e in self.edges:
            fu, fv = self.F(e.u), self.F(e.v)
            img = self.edge_between.get(frozenset((fu, fv)))
            if img is None:
                continue
            out[e.id] = (img, 1 if self.edge[img].u == fu else -1)
        return out

    def Fe(self, eid: str) -> str:
        return self.edge_map[eid][0]

    @cached_property
    def permutation_order(self) -> int:
        from math import lcm

        out = 1
        seen: set[str] = set()
        for v in self.vertices:
            if v in seen:
                continue
            k, w = 0, v
            while True:
                seen.add(w)
                w = self.F(w)
                k += 1
                if w == v:
                    break
            out = lcm(out, k)
        return out

    def vertex_orbits(self, vs: Iterable[str] | None = None) -> list[list[str]]:
        return _orbits(sort_ids(self.vertices if vs is None else vs), self.F)

    def edge_orbits(self, es: Iterable[str] | None = None) -> list[list[str]]:
        ids = [e.id for e in self.edges] if es is None else sort_ids(es)
        return _orbits(ids, self.Fe)

    # --- S and its complement ---------------------------------------------

    @cached_property
    def components(self) -> list[YellowComponent]:
        """Components of the complement of S, ordered by smallest edge id."""
        parent: dict[str, str] = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        yellow = [e for e in self.edges if e.id not in self.s_edges]
        for e in yellow:
            parent[e.id] = e.id
        at_vertex: dict[str, list[str]] = {}
        for e in yellow:
            for w in e.ends():
                if w not in self.s_vertices:
                    at_vertex.setdefault(w, []).append(e.id)
        for es in at_vertex.values():
            for other in es[1:]:
                ra, rb = find(es[0]), find(other)
                if ra != rb:
                    parent[rb] = ra
        groups: dict[str, set[str]] = {}
        for e in yellow:
            groups.setdefault(find(e.id), set()).add(e.id)
        comps = [YellowComponent(frozenset(g)) for g in groups.values()]
        return sorted(comps, key=lambda c: idkey(c.rep))

    @cached_property
    def component_index(self) -> dict[str, int]:
        return {eid: i for i, c in enumerate(self.components) for eid in c.edges}

    def component_of(self, eid: str) -> int:
        return self.component_index[eid]

    @cached_property
    def signs(self) -> list[int]:
        """Sign of each component (index-aligned with ``components``); +1 if unspecified."""
        out = [1] * len(self.components)
        for eid, s in self.sign_pairs.items():
            if eid in self.component_index:
                out[self.component_index[eid]] = s
        return out

    def sign_of(self, eid: str) -> int:
        return self.signs[self.component_of(eid)]

    def F_component(self, i: int) -> int:
        return self.component_of(self.Fe(self.components[i].rep))

    def component_orbits(self) -> list[list[int]]:
        return _orbits(list(range(len(self.components))), self.F_component)

    def canonical_signs(self) -> dict[str, int]:
        return {c.rep: s for c, s in zip(self.components, self.signs)}

    def with_signs(self, signs: Sequence[int]) -> "BYForest":
        return self.replace(sign_pairs={c.rep: int(s) for c, s in zip(self.components, signs)})

    def with_parity(self, var: str, parity: str) -> "BYForest":
        edges = tuple(Edge(e.id, e.u, e.v, e.length.with_parity(var, parity)) for e in self.edges)
        return self.replace(edges=edges)

    def substitute(self, env: Mapping[str, int]) -> "BYForest":
        edges = tuple(Edge(e.id, e.u, e.v, e.length.substitute(env)) for e in self.edges)
        return self.replace(edges=edges)

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"id": e.id, "ends": [e.u, e.v], "length": e.length.to_json()} for e in self.edges],
            "S": {"vertices": sort_ids(self.s_vertices), "edges": sort_ids(self.s_edges)},
            "F": {"vertex_map": {v: self.F(v) for v in self.vertices}},
            "signs": [{"component_rep_edge": c.rep, "sign": s} for c, s in zip(self.components, self.signs)],
        }


def _orbits(items: Sequence, f) -> list[list]:
    seen = set()
    out = []
    for x in items:
        if x in seen:
            continue
        orbit = [x]
        seen.add(x)
        y = f(x)
        while y != x:
            orbit.append(y)
            seen.add(y)
            y = f(y)
        out.append(orbit)
    return out


# ---------------------------------------------------------------------------
# validation


def validate(P: BYForest) -> list[Diagnostic]:
    """Every violated invariant of ``P``, each with a witness."""
    out: list[Diagnostic] = []
    vset = set(P.vertices)
    ids = [e.id for e in P.edges]
    if len(set(ids)) != len(ids):
        out.append(Diagnostic("duplicate-edge-id", "edge ids are not unique"))
    pairs: dict[frozenset, str] = {}
    for e in P.edges:
        for w in e.ends():
            if w not in vset:
                out.append(Diagnostic("unknown-vertex", f"edge {e.id} uses unknown vertex {w}", e.id))
        if e.u == e.v:
            out.append(Diagnostic("self-loop", f"edge {e.id} is a loop", e.id))
        key = frozenset(e.ends())
        if key in pairs and e.u != e.v:
            out.append(Diagnostic("parallel-edges", f"edges {pairs[key]} and {e.id} are parallel", (pairs[key], e.id)))
        pairs.setdefault(key, e.id)
        if not e.length.is_positive():
            out.append(Diagnostic("non-positive-length", f"edge {e.id} has non-positive length", e.id))
    if out:
        return out
    # acyclicity via union-find
    parent = {v: v for v in P.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in P.edges:
        a, b = find(e.u), find(e.v)
        if a == b:
            out.append(Diagnostic("cycle", f"edge {e.id} closes a cycle", e.id))
        else:
            parent[a] = b
    declared: dict[str, str] = {}
    for e in P.edges:
        for var, p in e.length.parities:
            if declared.setdefault(var, p) != p:
                out.append(Diagnostic("parity-conflict", f"variable {var} has conflicting parities", var))
    for v in sort_ids(P.s_vertices - vset):
        out.append(Diagnostic("unknown-S-vertex", f"S vertex {v} is not a vertex", v))
    for eid in sort_ids(P.s_edges):
        if eid not in P.edge:
            out.append(Diagnostic("unknown-S-edge", f"S edge {eid} is not an edge", eid))
            continue
        e = P.edge[eid]
        for w in e.ends():
            if w not in P.s_vertices:
                out.append(Diagnostic("S-not-subgraph", f"S edge {eid} has endpoint {w} outside S", eid))
    # automorphism
    fm = P.fmap
    extra = set(fm) - vset
    if extra:
        out.append(Diagnostic("F-domain", "F is defined on unknown vertices", sort_ids(extra)))
    images = [P.F(v) for v in P.vertices]
    if set(images) != vset or len(set(images)) != len(images):
        out.append(Diagnostic("F-not-permutation", "F is not a permutation of the vertices"))
        return out
    for e in P.edges:
        img = P.edge_between.get(frozenset((P.F(e.u), P.F(e.v))))
        if img is None:
            out.append(Diagnostic("F-not-graph-map", f"F does not map edge {e.id} to an edge", e.id))
            continue
        if P.edge[img].length != e.length:
            out.append(
                Diagnostic("F-not-isometry", f"F maps edge {e.id} ({e.length}) to {img} ({P.edge[img].length})", (e.id, img))
            )
        if (e.id in P.s_edges) != (img in P.s_edges):
            out.append(Diagnostic("F-moves-S", f"F does not preserve S on edge {e.id}", e.id))
    for v in P.vertices:
        if (v in P.s_vertices) != (P.F(v) in P.s_vertices):
            out.append(Diagnostic("F-moves-S", f"F does not preserve S at vertex {v}", v))
    if out:
        return out
    # signs
    seen: dict[int, tuple[str, int]] = {}
    for eid, s in P.sign_pairs.items():
        if s not in (1, -1):
            out.append(Diagnostic("bad-sign", f"sign {s} for component of {eid} is not +-1", eid))
        if eid not in P.component_index:
            out.append(Diagnostic("sign-not-component", f"{eid} is not an edge outside S", eid))
            continue
        i = P.component_index[eid]
        if i in seen and seen[i][1] != s:
            out.append(Diagnostic("sign-conflict", f"edges {seen[i][0]} and {eid} give different signs", (seen[i][0], eid)))
        seen.setdefault(i, (eid, s))
    for i, c in enumerate(P.components):
        if i not in seen:
            out.append(Diagnostic("missing-sign", f"component with representative edge {c.rep} has no sign", c.rep))
    return out


def require_valid(P: BYForest) -> BYForest:
    diags = validate(P)
    if diags:
        raise ValidationError("; ".join(d.message for d in diags), diags)
    return P


def components_minus_S(P: BYForest) -> list[YellowComponent]:
    return list(P.components)


# ---------------------------------------------------------------------------
# signed automorphisms


def compose_signs(P: BYForest, first: Sequence[int], F1, second: Sequence[int]) -> list[int]:
    """Signs of ``(eps2 F2) o (eps1 F1)``: ``C -> eps1(C) * eps2(F1 C)``."""
    return [first[i] * second[F1(i)] for i in range(len(first))]


def power_signs(P: BYForest, f: int) -> list[int]:
    signs = list(P.signs)
    out = [1] * len(signs)
    for i in range(len(signs)):
        j = i
        for _ in range(f):
            out[i] *= signs[j]
            j = P.F_component(j)
    return out


def power_map(P: BYForest, f: int) -> dict[str, str]:
    out = {}
    for v in P.vertices:
        w = v
        for _ in range(f % P.permutation_order if P.permutation_order else f):
            w = P.F(w)
        out[v] = w
    return out


def scale_and_power(P: BYForest, e: int, f: int) -> BYForest:
    """``(eT, eS, (eps F)^f)``."""
    signs = power_signs(P, f)
    fm = power_map(P, f)
    edges = tuple(Edge(x.id, x.u, x.v, x.length.scale(e)) for x in P.edges)
    return P.replace(edges=edges, fmap=fm, sign_pairs={c.rep: s for c, s in zip(P.components, signs)})


def normalize_signs(P: BYForest) -> BYForest:
    """Signed-isomorphic forest with at most one -1 per orbit of components."""
    signs = list(P.signs)
    new = [1] * len(signs)
    for orbit in P.component_orbits():
        prod = 1
        for i in orbit:
            prod *= signs[i]
        new[orbit[0]] = prod
    return P.with_signs(new)


def order_of(P: BYForest) -> int:
    """Least ``f >= 1`` with ``(eps F)^f`` the identity with all signs +."""
    base = P.permutation_order
    f = base
    while any(s != 1 for s in power_signs(P, f)):
        f += base
    return f


# ---------------------------------------------------------------------------
# parity conditions


@dataclass(frozen=True)
class ParityReport:
    holds: bool
    witness: object = None


def qualifies_for_A(P: BYForest, v: str) -> bool:
    deg = P.degree(v)
    inc = [eid for eid, _ in P.adjacency.get(v, ())]
    if deg == 1 and v in P.s_vertices and inc[0] not in P.s_edges:
        return True
    if deg == 2 and v not in P.s_vertices:
        return True
    if deg == 2 and v in P.s_vertices and all(e in P.s_edges for e in inc):
        return True
    return False


def check_parity_A(P: BYForest) -> ParityReport:
    """Odd-distance condition: raises ``UndeterminedParity`` when a needed parity is unknown."""
    bad = [v for v in P.vertices if not qualifies_for_A(P, v)]
    for comp in P.tree_components:
        members = [v for v in bad if v in comp]
        if len(members) < 2:
            continue
        root = members[0]
        dist = _distances_from(P, root)
        # parity of d(v, w) is parity of d(root, v) + d(root, w)
        classes: dict[int, list[str]] = {0: [root], 1: []}
        for v in members[1:]:
            classes[dist[v].parity()].append(v)
        if classes[1]:
            return ParityReport(False, (root, classes[1][0]))
    return ParityReport(True)


def _distances_from(P: BYForest, root: str) -> dict[str, LengthForm]:
    dist = {root: LengthForm(0)}
    stack = [root]
    while stack:
        w = stack.pop()
        for eid, x in P.adjacency.get(w, ()):
            if x not in dist:
                dist[x] = dist[w] + P.edge[eid].length
                stack.append(x)
    return dist


def check_parity_B(P: BYForest) -> ParityReport:
    """No iterate of F inverts an edge of odd length."""
    for k in range(1, P.permutation_order):
        fk = power_map(P, k)
        for e in P.edges:
            if fk[e.u] == e.v and fk[e.v] == e.u:
                if e.length.parity() == 1:
                    return ParityReport(False, (e.id, k))
    return ParityReport(True)


def check_parity_B_prime(P: BYForest) -> ParityReport:
    """After subdividing, every iterate stabilising a tree component fixes a vertex of it."""
    Q = subdivide(P)
    for k in range(1, Q.permutation_order + 1):
        fk = power_map(Q, k)
        for comp in Q.tree_components:
            some = next(iter(comp))
            if fk[some] not in comp:
                continue
            if not any(fk[v] == v for v in comp):
                return ParityReport(False, (sort_ids(comp)[0], k))
    return ParityReport(True)


def require_parity(P: BYForest, A: bool = True, B: bool = True) -> None:
    if A:
        rep = check_parity_A(P)
        if not rep.holds:
            raise ParityViolation(f"parity condition (A) fails at {rep.witness}", rep.witness)
    if B:
        rep = check_parity_B(P)
        if not rep.holds:
            raise ParityViolation(f"parity condition (B) fails at {rep.witness}", rep.witness)


# ---------------------------------------------------------------------------
# metric equivalences and pruning


def subdivide(P: BYForest) -> BYForest:
    """Replace every edge of length ``n`` by a chain of ``n`` unit edges."""
    P.require_concrete()
    verts = list(P.vertices)
    edges: list[Edge] = []
    s_v = set(P.s_vertices)
    s_e = set()
    origin: dict[str, str] = {}
    chain: dict[str, list[str]] = {}
    one = LengthForm(1)
    for e in P.edges:
        n = e.length.int_value()
        if n == 1:
            edges.append(Edge(e.id, e.u, e.v, one))
            chain[e.id] = [e.u, e.v]
            origin[e.id] = e.id
            if e.id in P.s_edges:
                s_e.add(e.id)
            continue
        pts = [e.u] + [f"{e.id}:{i}" for i in range(1, n)] + [e.v]
        chain[e.id] = pts
        verts.extend(pts[1:-1])
        for i in range(n):
            nid = f"{e.id}:{i}"
            edges.append(Edge(nid, pts[i], pts[i + 1], one))
            origin[nid] = e.id
            if e.id in P.s_edges:
                s_e.add(nid)
        if e.id in P.s_edges:
            s_v.update(pts[1:-1])
    fm = {v: P.F(v) for v in P.vertices}
    for e in P.edges:
        img, o = P.edge_map[e.id]
        src, dst = chain[e.id], chain[img]
        n = len(src) - 1
        for i in range(1, n):
            fm[src[i]] = dst[i] if o == 1 else dst[n - i]
    Q = BYForest.build(verts, [(x.id, x.u, x.v, x.length) for x in edges], s_v, s_e, fm)
    return Q.with_signs([P.sign_of(origin[c.rep]) for c in Q.components])


def restrict(P: BYForest, keep_vertices: Iterable[str]) -> BYForest:
    """Induced sub-forest on an F-stable vertex set, inheriting S and signs."""
    keep = set(keep_vertices)
    edges = [e for e in P.edges if e.u in keep and e.v in keep]
    Q = P.replace(
        vertices=tuple(v for v in P.vertices if v in keep),
        edges=tuple(edges),
        s_vertices=frozenset(P.s_vertices & keep),
        s_edges=frozenset(e for e in P.s_edges if e in {x.id for x in edges}),
        fmap={v: P.F(v) for v in keep},
        sign_pairs={},
    )
    return Q.with_signs([P.sign_of(c.rep) for c in Q.components])


def convex_hull_of_S(P: BYForest) -> BYForest:
    """Union of all paths between points of S."""
    if not P.s_vertices:
        raise EmptyS("S is empty; its convex hull is undefined")
    alive = set(P.vertices)
    deg = {v: P.degree(v) for v in P.vertices}
    stack = [v for v in P.vertices if v not in P.s_vertices and deg[v] <= 1]
    while stack:
        v = stack.pop()
        if v not in alive:
            continue
        alive.discard(v)
        for _, x in P.adjacency.get(v, ()):
            if x in alive:
                deg[x] -= 1
                if x not in P.s_vertices and deg[x] <= 1:
                    stack.append(x)
    return restrict(P, alive)


# ---------------------------------------------------------------------------
# hyperelliptic graphs and double covers


@dataclass(frozen=True)
class GraphEdge:
    id: str
    u: str
    v: str
    length: Fraction


@dataclass(frozen=True, eq=False)
class HyperellipticGraph:
    """A finite metric multigraph with optional involution and an automorphism.

    Vertex maps are mandatory; edge maps are needed only where parallel
    edges make them ambiguous and are otherwise derived.
    """

    vertices: tuple[str, ...]
    edges: tuple[GraphEdge, ...]
    frob: Mapping[str, str]
    iota: Mapping[str, str] | None = None
    frob_edges: Mapping[str, str] | None = None
    iota_edges: Mapping[str, str] | None = None

    @classmethod
    def build(cls, vertices, edges, frob=None, iota=None, frob_edges=None, iota_edges=None) -> "HyperellipticGraph":
        verts = tuple(sort_ids(str(v) for v in vertices))
        es = tuple(sorted((GraphEdge(str(e[0]), str(e[1]), str(e[2]), Fraction(e[3])) for e in edges), key=lambda e: idkey(e.id)))
        fr = {v: v for v in verts}
        fr.update({str(k): str(v) for k, v in (frob or {}).items()})
        io = None
        if iota is not None:
            io = {v: v for v in verts}
            io.update({str(k): str(v) for k, v in iota.items()})
        G = cls(verts, es, fr, io, None, None)
        fe = _derive_edge_map(G, fr, frob_edges)
        ie = _derive_edge_map(G, io, iota_edges) if io is not None else None
        return cls(verts, es, fr, io, fe, ie)

    @cached_property
    def edge(self) -> dict[str, GraphEdge]:
        return {e.id: e for e in self.edges}

    def orient(self, emap: Mapping[str, str], vmap: Mapping[str, str], eid: str) -> tuple[str, int]:
        img = emap[eid]
        e = self.edge[eid]
        return img, (1 if self.edge[img].u == vmap[e.u] else -1)

    def scaled(self, e: int) -> "HyperellipticGraph":
        edges = tuple(GraphEdge(x.id, x.u, x.v, x.length * e) for x in self.edges)
        return HyperellipticGraph(self.vertices, edges, self.frob, self.iota, self.frob_edges, self.iota_edges)

    def frob_power(self, f: int) -> "HyperellipticGraph":
        vm = {v: v for v in self.vertices}
        em = {e.id: e.id for e in self.edges}
        for _ in range(f):
            vm = {v: self.frob[w] for v, w in vm.items()}
            em = {k: self.frob_edges[w] for k, w in em.items()}
        return HyperellipticGraph(self.vertices, self.edges, vm, self.iota, em, self.iota_edges)

    def to_json(self) -> dict:
        def frac(x: Fraction):
            return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

        doc = {
            "vertices": list(self.vertices),
            "edges": [{"id": e.id, "ends": [e.u, e.v], "length": frac(e.length)} for e in self.edges],
            "frob": dict(self.frob),
            "frob_edges": dict(self.frob_edges),
        }
        if self.iota is not None:
            doc["iota"] = dict(self.iota)
            doc["iota_edges"] = dict(self.iota_edges)
        return doc


def _derive_edge_map(G: HyperellipticGraph, vmap, given) -> dict[str, str]:
    if given is not None:
        return {str(k): str(v) for k, v in given.items()}
    by_ends: dict[frozenset, list[str]] = {}
    for e in G.edges:
        by_ends.setdefault(frozenset((e.u, e.v)), []).append(e.id)
    out = {}
    for e in G.edges:
        cands = by_ends.get(frozenset((vmap.get(e.u), vmap.get(e.v))), [])
        if len(cands) != 1:
            raise ValidationError(
                f"edge map for {e.id} is ambiguous or undefined; give it explicitly",
                [Diagnostic("edge-map", "ambiguous edge image", e.id)],
            )
        out[e.id] = cands[0]
    return out


def validate_graph(G: HyperellipticGraph) -> list[Diagnostic]:
    out = []
    vset = set(G.vertices)
    for e in G.edges:
        if e.u not in vset or e.v not in vset:
            out.append(Diagnostic("unknown-vertex", f"edge {e.id} uses an unknown vertex", e.id))
        if e.u == e.v:
            out.append(Diagnostic("self-loop", f"edge {e.id} is a loop", e.id))
        if e.length <= 0:
            out.append(Diagnostic("non-positive-length", f"edge {e.id} has non-positive length", e.id))
    if out:
        return out
    maps = [("frob", G.frob, G.frob_edges)]
    if G.iota is not None:
        maps.append(("iota", G.iota, G.iota_edges))
    for name, vm, em in maps:
        if sorted(vm.values()) != sorted(vm.keys()) or set(vm) != vset:
            out.append(Diagnostic(f"{name}-not-permutation", f"{name} is not a vertex permutation"))
            continue
        if set(em) != set(G.edge) or sorted(em.values()) != sorted(em.keys()):
            out.append(Diagnostic(f"{name}-not-permutation", f"{name} is not an edge permutation"))
            continue
        for e in G.edges:
            img = G.edge[em[e.id]]
            if {img.u, img.v} != {vm[e.u], vm[e.v]} or (vm[e.u] == vm[e.v]):
                out.append(Diagnostic(f"{name}-not-graph-map", f"{name} does not map edge {e.id} onto its image", e.id))
            elif img.length != e.length:
                out.append(Diagnostic(f"{name}-not-isometry", f"{name} changes the length of {e.id}", e.id))
    if out or G.iota is None:
        return out
    for v in G.vertices:
        if G.iota[G.iota[v]] != v:
            out.append(Diagnostic("iota-not-involution", f"iota^2 moves {v}", v))
        if G.iota[G.frob[v]] != G.frob[G.iota[v]]:
            out.append(Diagnostic("not-commuting", f"iota and frob do not commute at {v}", v))
    for e in G.edges:
        if G.iota_edges[G.iota_edges[e.id]] != e.id:
            out.append(Diagnostic("iota-not-involution", f"iota^2 moves edge {e.id}", e.id))
        if G.iota_edges[G.frob_edges[e.id]] != G.frob_edges[G.iota_edges[e.id]]:
            out.append(Diagnostic("not-commuting", f"iota and frob do not commute on edge {e.id}", e.id))
    return out


def _sheet(v: str, s: int) -> str:
    return f"{v}{'+' if s == 0 else '-'}"


def to_double_cover(P: BYForest) -> HyperellipticGraph:
    """``T`` glued to a second copy of itself along ``S``.

    Each edge outside S lifts to one edge on each sheet, of half the length.
    Frobenius acts as ``F`` and exchanges the sheets over components of
    sign -1.
    """
    P.require_concrete()
    require_parity(P)
    verts: list[str] = []
    edges: list[tuple] = []
    iota: dict[str, str] = {}
    frob: dict[str, str] = {}
    iota_e: dict[str, str] = {}
    frob_e: dict[str, str] = {}
    comp_of_vertex: dict[str, int] = {}
    for e in P.edges:
        if e.id in P.s_edges:
            continue
        for w in e.ends():
            if w not in P.s_vertices:
                comp_of_vertex[w] = P.component_of(e.id)

    def flip_at(v: str) -> int:
        if v not in comp_of_vertex:
            return 0
        return 1 if P.signs[comp_of_vertex[v]] == -1 else 0

    def lift(v: str, s: int) -> str:
        return v if v in P.s_vertices else _sheet(v, s)

    for v in P.vertices:
        if v in P.s_vertices:
            verts.append(v)
            iota[v] = v
            frob[v] = P.F(v)
        else:
            flip = flip_at(v)
            for s in (0, 1):
                verts.append(_sheet(v, s))
                iota[_sheet(v, s)] = _sheet(v, 1 - s)
                frob[_sheet(v, s)] = _sheet(P.F(v), s ^ flip)
    for e in P.edges:
        img = P.Fe(e.id)
        if e.id in P.s_edges:
            edges.append((e.id, e.u, e.v, Fraction(e.length.int_value())))
            iota_e[e.id] = e.id
            frob_e[e.id] = img
            continue
        flip = 1 if P.sign_of(e.id) == -1 else 0
        half = Fraction(e.length.int_value(), 2)
        for s in (0, 1):
            edges.append((_sheet(e.id, s), lift(e.u, s), lift(e.v, s), half))
            iota_e[_sheet(e.id, s)] = _sheet(e.id, 1 - s)
            frob_e[_sheet(e.id, s)] = _sheet(img, s ^ flip)
    return HyperellipticGraph.build(verts, edges, frob, iota, frob_e, iota_e)


def from_hyperelliptic_graph(G: HyperellipticGraph) -> BYForest:
    """The BY forest of ``(G, iota, frob)``: quotient forest, ramification locus and signs.

    Edges outside the ramification locus get twice their quotient length.
    """
    if G.iota is None:
        raise ValidationError("graph has no involution", [Diagnostic("no-iota", "iota is required")])
    diags = validate_graph(G)
    if diags:
        raise ValidationError("; ".join(d.message for d in diags), diags)
    io, ie = G.iota, G.iota_edges

    def vclass(v: str) -> str:
        return min(v, io[v], key=idkey)

    verts: set[str] = {vclass(v) for v in G.vertices}
    s_v = {v for v in G.vertices if io[v] == v}
    t_edges: list[tuple] = []
    s_e: set[str] = set()
    kind: dict[str, str] = {}
    for e in G.edges:
        j = ie[e.id]
        if j == e.id and io[e.u] == e.u:
            kind[e.id] = "fixed"
            t_edges.append((e.id, e.u, e.v, _integral(e.length, e.id)))
            s_e.add(e.id)
        elif j == e.id:
            kind[e.id] = "inverted"
            mid = f"mid:{e.id}"
            verts.add(mid)
            s_v.add(mid)
            t_edges.append((e.id, vclass(e.u), mid, _integral(e.length, e.id)))
        elif idkey(e.id) < idkey(j):
            kind[e.id] = "pair"
            t_edges.append((e.id, vclass(e.u), vclass(e.v), _integral(2 * e.length, e.id)))
    # forest check
    parent = {v: v for v in verts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid, a, b, _ in t_edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            raise QuotientNotForest(f"quotient edge {eid} closes a cycle", _witness_cycle(t_edges, eid))
        parent[ra] = rb
    edge_class = {}
    for e in G.edges:
        edge_class[e.id] = e.id if kind.get(e.id) in ("fixed", "inverted", "pair") else ie[e.id]
    fmap = {}
    for v in G.vertices:
        fmap[vclass(v)] = vclass(G.frob[v])
    for e in G.edges:
        if kind.get(e.id) == "inverted":
            fmap[f"mid:{e.id}"] = f"mid:{G.frob_edges[e.id]}"
    T = BYForest.build(verts, t_edges, s_v, s_e, fmap)
    T = T.with_signs(_section_signs(G, T, vclass, edge_class))
    return normalize_signs(T)


def _integral(x: Fraction, eid: str) -> int:
    x = Fraction(x)
    if x.denominator != 1:
        raise ValidationError(
            f"quotient edge {eid} would have non-integral length {x}",
            [Diagnostic("non-integral-length", "non-integral quotient length", eid)],
        )
    return int(x)


def _witness_cycle(t_edges, closing: str) -> list[str]:
    adj: dict[str, list[tuple[str, str]]] = {}
    a = b = None
    for eid, u, v, _ in t_edges:
        if eid == closing:
            a, b = u, v
            break
        adj.setdefault(u, []).append((eid, v))
        adj.setdefault(v, []).append((eid, u))
    if a == b:
        return [closing]
    prev = {a: None}
    stack = [a]
    while stack:
        w = stack.pop()
        for eid, x in adj.get(w, ()):
            if x not in prev:
                prev[x] = (eid, w)
                stack.append(x)
    out = [closing]
    w = b
    while w in prev and prev[w] is not None:
        out.append(prev[w][0])
        w = prev[w][1]
    return out


def _section_signs(G: HyperellipticGraph, T: BYForest, vclass, edge_class) -> list[int]:
    """Signs from a section of the cover over the complement of S."""
    io, ie = G.iota, G.iota_edges
    graph_edges_at: dict[str, list[str]] = {}
    for e in G.edges:
        graph_edges_at.setdefault(e.u, []).append(e.id)
        graph_edges_at.setdefault(e.v, []).append(e.id)
    lift_v: dict[str, str] = {}
    lift_e: dict[str, str] = {}
    for comp in T.components:
        nons = sort_ids(
            {w for eid in comp.edges for w in T.edge[eid].ends() if w not in T.s_vertices}
        )
        if not nons:
            eid = comp.rep
            lift_e[eid] = min(eid, ie[eid], key=idkey)
            continue
        start = nons[0]
        lift_v[start] = start
        stack = [start]
        while stack:
            w = stack.pop()
            gw = lift_v[w]
            for eid, x in T.adjacency[w]:
                if eid in T.s_edges:
                    continue
                g = next(c for c in (eid, ie[eid]) if gw in (G.edge[c].u, G.edge[c].v))
                lift_e.setdefault(eid, g)
                if x in T.s_vertices or x in lift_v:
                    continue
                ge = G.edge[g]
                lift_v[x] = ge.v if ge.u == gw else ge.u
                stack.append(x)
    signs = []
    for comp in T.components:
        nons = sort_ids(
            {w for eid in comp.edges for w in T.edge[eid].ends() if w not in T.s_vertices}
        )
        if nons:
            w = nons[0]
            signs.append(1 if G.frob[lift_v[w]] == lift_v[T.F(w)] else -1)
        else:
            eid = comp.rep
            signs.append(1 if G.frob_edges[lift_e[eid]] == lift_e[T.Fe(eid)] else -1)
    return signs
