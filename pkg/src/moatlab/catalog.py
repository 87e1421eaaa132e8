"""Small named instances used by the tests, experiments and the CLI."""

from __future__ import annotations

from fractions import Fraction

from .instance import Instance


def _build(terminals, edges, root=None) -> Instance:
    verts = []
    for u, v, _ in edges:
        for x in (u, v):
            if x not in verts:
                verts.append(x)
    for t in terminals:
        if t not in verts:
            verts.append(t)
    return Instance(verts, terminals, [(u, v, Fraction(c)) for u, v, c in edges], root)


def zigzag_instance() -> Instance:
    """``s1`` reaches ``v`` at 21 only after zigzagging through ``s2``'s moat."""
    E = [("s2", "A1", 17), ("s2", "A2", 18), ("s2", "A3", 19), ("A1", "m", 1),
         ("A1", "B2", 2), ("A2", "B2", 1), ("A2", "B3", 2), ("A3", "B3", 1),
         ("A3", "v", 2), ("m", "s1", 18)]
    return _build(["s1", "s2"], E)


def shared_edge_instance() -> Instance:
    """Two terminals at distance 6 from ``m``; both load the edge ``(m, v)``."""
    return _build(["s1", "s2"], [("s1", "m", 6), ("s2", "m", 6), ("m", "v", 2)])


def star_instance(k: int = 3) -> Instance:
    """Star with ``k`` unit spokes; terminal pairs also joined directly at 12/7."""
    E = [(f"s{i}", "m", 1) for i in range(1, k + 1)]
    E += [(f"s{i}", f"s{j}", Fraction(12, 7)) for i in range(1, k + 1) for j in range(i + 1, k + 1)]
    return _build([f"s{i}" for i in range(1, k + 1)], E)


def detour_instance() -> Instance:
    """Discrete growth on this instance changes under subdivision of ``{v, x}``."""
    E = [("s1", "v", 18), ("s2", "x", 18), ("s2", "z", 18), ("v", "x", 2), ("x", "z", 4)]
    return _build(["s1", "s2"], E)


def meeting_point_instance() -> Instance:
    """Two terminals whose active paths towards ``A2`` meet at ``M1`` and ``M2``."""
    E = [("S1", "A0", 10), ("A0", "M1", 2), ("M1", "A1", 1), ("S2", "A4", 10),
         ("A4", "A1", 1), ("A1", "M2", 2), ("M2", "A2", 2)]
    return _build(["S1", "S2"], E)


def four_terminal_instance() -> Instance:
    """Two pairs of terminals joined through Steiner vertices ``b`` and ``c``."""
    E = [("a", "b", 4), ("e", "b", 4), ("a", "e", 6), ("b", "c", 5),
         ("d", "c", 4), ("f", "c", 4), ("d", "f", 6)]
    return _build(["a", "d", "e", "f"], E)


NAMED = {
    "zigzag": zigzag_instance,
    "shared-edge": shared_edge_instance,
    "star": star_instance,
    "detour": detour_instance,
    "meeting-point": meeting_point_instance,
    "four-terminal": four_terminal_instance,
}


def named_instance(name: str) -> Instance:
    try:
        return NAMED[name]()
    except KeyError:
        raise KeyError(f"unknown instance {name!r}; known: {', '.join(sorted(NAMED))}") from None
