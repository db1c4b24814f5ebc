"""Named BY trees and graphs used by the tests, the CLI table and the docs.

Lengths may be integers or ``LengthForm`` values; builders take them as
arguments so the same shape serves numeric and symbolic work.
"""

from __future__ import annotations

from .core import BYForest, HyperellipticGraph, LengthForm


def L(name: str, parity: str = "unknown") -> LengthForm:
    return LengthForm.var(name, parity)


def quad(a=L("a"), b=L("b"), c=L("c"), sign: int = 1) -> BYForest:
    """Star with centre ``o`` and leaves ``sw`` (c), ``nw`` (b), ``ne``/``se`` (a, swapped)."""
    return BYForest.build(
        ["o", "sw", "nw", "ne", "se"],
        [("e_sw", "o", "sw", c), ("e_nw", "o", "nw", b), ("e_ne", "o", "ne", a), ("e_se", "o", "se", a)],
        ["sw", "nw", "ne", "se"],
        (),
        {"ne": "se", "se": "ne"},
        {"e_sw": sign},
    )


def comprehensive(a=L("a"), b=L("b"), c=L("c", "even"), w=L("w", "even"), x=L("x", "even"), y=L("y"), z=L("z")) -> BYForest:
    """Three negative components: a 6-leaf star and two swapped quads joined through an S edge."""
    verts = ["l", "lw", "lnw", "lne", "le", "lse", "lsw", "ur", "dr", "m", "urw", "urn", "ure", "drw", "dre", "drs"]
    edges = [
        ("l_le", "l", "le", x),
        ("l_lnw", "l", "lnw", y),
        ("l_lne", "l", "lne", y),
        ("l_lw", "l", "lw", z),
        ("l_lsw", "l", "lsw", z),
        ("l_lse", "l", "lse", z),
        ("le_m", "le", "m", w),
        ("ur_urw", "ur", "urw", b),
        ("ur_urn", "ur", "urn", a),
        ("ur_ure", "ur", "ure", a),
        ("ur_m", "ur", "m", c),
        ("dr_m", "dr", "m", c),
        ("dr_dre", "dr", "dre", a),
        ("dr_drs", "dr", "drs", a),
        ("dr_drw", "dr", "drw", b),
    ]
    S = ["lw", "lnw", "lne", "le", "lse", "lsw", "m", "urw", "urn", "ure", "drw", "dre", "drs"]
    F = {
        "lnw": "lne",
        "lne": "lnw",
        "lw": "lsw",
        "lsw": "lse",
        "lse": "lw",
        "ur": "dr",
        "dr": "ur",
        "urw": "drw",
        "drw": "urw",
        "urn": "dre",
        "dre": "ure",
        "ure": "drs",
        "drs": "urn",
    }
    return BYForest.build(verts, edges, S, ["le_m"], F, {"l_le": -1, "ur_urw": -1, "dr_drw": -1})


def wheel(spokes: int = 5) -> HyperellipticGraph:
    """Hub joined to a rim cycle, unit lengths, Frobenius rotating the rim."""
    rim = [f"r{i}" for i in range(spokes)]
    edges = [(f"s{i}", "h", rim[i], 1) for i in range(spokes)]
    edges += [(f"t{i}", rim[i], rim[(i + 1) % spokes], 1) for i in range(spokes)]
    frob = {rim[i]: rim[(i + 1) % spokes] for i in range(spokes)}
    return HyperellipticGraph.build(["h"] + rim, edges, frob)


# ---------------------------------------------------------------------------
# genus 2 reduction types

n, m, k, r, s = (L(x) for x in "nmkrs")


def _edge(u, v, prefix="e"):
    return f"{prefix}{u}{v}"


def good() -> BYForest:
    return BYForest.build(["1"], [], ["1"])


def one_x_one() -> BYForest:
    return BYForest.build(["1", "2"], [("b12", "1", "2", r + s)], ["1", "2"], ["b12"])


def one_frob_x_one() -> BYForest:
    return BYForest.build(["1", "2"], [("b12", "1", "2", r.scale(2))], ["1", "2"], ["b12"], {"1": "2", "2": "1"})


def one_n(sign: int) -> BYForest:
    return BYForest.build(["1", "2"], [("e12", "1", "2", n)], ["1", "2"], (), None, {"e12": sign})


def one_x_I(sign: int) -> BYForest:
    return BYForest.build(
        ["1", "2", "3"], [("b12", "1", "2", r + s), ("e23", "2", "3", n)], ["1", "2", "3"], ["b12"], None, {"e23": sign}
    )


def I_nm(s1: int, s2: int) -> BYForest:
    return BYForest.build(
        ["1", "2", "3"], [("e13", "1", "3", n), ("e12", "1", "2", m)], ["1", "2", "3"], (), None, {"e13": s1, "e12": s2}
    )


def I_n_swap(s1: int, s2: int) -> BYForest:
    return BYForest.build(
        ["1", "2", "3"],
        [("e13", "1", "3", n), ("e12", "1", "2", n)],
        ["1", "2", "3"],
        (),
        {"2": "3", "3": "2"},
        {"e13": s1, "e12": s2},
    )


def U(sign: int, lengths=(n, m, k), fmap=None) -> BYForest:
    a, b, c = lengths
    return BYForest.build(
        ["1", "2", "3", "4"],
        [("e12", "1", "2", a), ("e13", "1", "3", b), ("e14", "1", "4", c)],
        ["2", "3", "4"],
        (),
        fmap,
        {"e12": sign},
    )


def I_x_I(s1: int, s2: int) -> BYForest:
    return BYForest.build(
        ["1", "2", "3", "4"],
        [("b12", "1", "2", r + s), ("e24", "2", "4", n), ("e13", "1", "3", m)],
        ["1", "2", "3", "4"],
        ["b12"],
        None,
        {"e24": s1, "e13": s2},
    )


def I_frob_x_I(s1: int, s2: int) -> BYForest:
    return BYForest.build(
        ["1", "2", "3", "4"],
        [("b12", "1", "2", r.scale(2)), ("e24", "2", "4", n), ("e13", "1", "3", n)],
        ["1", "2", "3", "4"],
        ["b12"],
        {"1": "2", "2": "1", "3": "4", "4": "3"},
        {"e24": s1, "e13": s2},
    )


NT = "hcf(n, 2)"
MT = "hcf(m, 2)"
KT = "hcf(k, 2)"

GENUS2 = [
    ("2", good, "1"),
    ("1x1", one_x_one, "1"),
    ("1Fx1", one_frob_x_one, "1"),
    ("1_n^+", lambda: one_n(1), "n"),
    ("1_n^-", lambda: one_n(-1), NT),
    ("1xI_n^+", lambda: one_x_I(1), "n"),
    ("1xI_n^-", lambda: one_x_I(-1), NT),
    ("I_nm^++", lambda: I_nm(1, 1), "n*m"),
    ("I_nm^+-", lambda: I_nm(1, -1), f"n*{MT}"),
    ("I_nm^--", lambda: I_nm(-1, -1), f"{NT}*{MT}"),
    ("I_n~n^+", lambda: I_n_swap(1, 1), "n"),
    ("I_n~n^-", lambda: I_n_swap(1, -1), NT),
    ("U_nmk^+", lambda: U(1), "n*m + m*k + k*n"),
    ("U_nmk^-", lambda: U(-1), f"max(1, {NT}*{MT}*{KT}/2)"),
    ("U_n~n,k^+", lambda: U(1, (n, n, k), {"2": "3", "3": "2"}), "n + 2*k"),
    ("U_n~n,k^-", lambda: U(-1, (n, n, k), {"2": "3", "3": "2"}), "n"),
    ("U_n~n~n^+", lambda: U(1, (n, n, n), {"2": "3", "3": "4", "4": "2"}), "3"),
    ("U_n~n~n^-", lambda: U(-1, (n, n, n), {"2": "3", "3": "4", "4": "2"}), "1"),
    ("I_n^+xI_m^+", lambda: I_x_I(1, 1), "n*m"),
    ("I_n^+xI_m^-", lambda: I_x_I(1, -1), f"n*{MT}"),
    ("I_n^-xI_m^-", lambda: I_x_I(-1, -1), f"{NT}*{MT}"),
    ("I_n^+FxI_n", lambda: I_frob_x_I(1, 1), "n"),
    ("I_n^-FxI_n", lambda: I_frob_x_I(1, -1), NT),
]
