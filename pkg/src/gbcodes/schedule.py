"""Addressing schedules for measuring the generators of two-block codes.

A schedule assigns every monomial of ``a`` and ``b`` a time step, separately
for X and Z generators.  Monomials are labelled ``("a", i)`` / ``("b", i)``
with ``i`` indexing the terms in increasing exponent order.  X generator
``i`` touches qubit ``i + a_j`` of the left block and ``i + b_j`` of the
right block; Z generator ``i`` touches ``i - b_j`` on the left and
``i - a_j`` on the right.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .codes import CssCode, group_matrix
from .gf2 import BinPoly


@dataclass(frozen=True)
class Schedule:
    depth: int
    x_slots: dict
    z_slots: dict

    def __post_init__(self):
        for name, slots in (("x", self.x_slots), ("z", self.z_slots)):
            if set(slots) != set(self.x_slots):
                raise ValueError("X and Z schedules must cover the same monomials")
            for key, step in slots.items():
                if not 1 <= step <= self.depth:
                    raise ValueError(f"{name} slot {key} at step {step} outside [1, {self.depth}]")

    @property
    def wa(self) -> int:
        return sum(1 for k in self.x_slots if k[0] == "a")

    @property
    def wb(self) -> int:
        return sum(1 for k in self.x_slots if k[0] == "b")

    def steps(self, kind: str, poly: str) -> tuple[int, ...]:
        slots = self.x_slots if kind == "x" else self.z_slots
        w = self.wa if poly == "a" else self.wb
        return tuple(slots[(poly, i)] for i in range(w))

    def addr_rows(self) -> str:
        """Two lines in the layout ``a-steps | b-steps`` for X and Z generators."""
        lines = []
        for kind in ("x", "z"):
            a = " ".join(map(str, self.steps(kind, "a")))
            b = " ".join(map(str, self.steps(kind, "b")))
            lines.append(f"{kind.upper()}: a {a} | b {b}")
        return "\n".join(lines)


# Addressing steps (X a, X b, Z a, Z b) for the three preset codes
PRESETS: dict[str, tuple[tuple[int, ...], ...]] = {
    "GB15": ((6, 2, 1), (3, 5, 4), (2, 6, 7), (3, 4, 5)),
    "GB31": ((1, 2, 6), (3, 5, 4), (6, 7, 2), (3, 4, 5)),
    "GB63": ((2, 6, 1), (5, 4, 3), (7, 2, 6), (4, 5, 3)),
}
DEFAULT_PRESET = "GB31"


def _from_rows(xa, xb, za, zb, depth: int) -> Schedule:
    x = {("a", i): s for i, s in enumerate(xa)} | {("b", i): s for i, s in enumerate(xb)}
    z = {("a", i): s for i, s in enumerate(za)} | {("b", i): s for i, s in enumerate(zb)}
    return Schedule(depth, x, z)


def make_schedule(w_a: int, w_b: int, assignment: dict | None = None, preset: str | None = None) -> Schedule:
    """Build a schedule for weights ``(w_a, w_b)``.

    ``assignment`` may give the full slot map as ``{"depth", "x", "z"}`` (each
    of ``x``/``z`` mapping every monomial label to a step) or as four step
    tuples ``{"x_a", "x_b", "z_a", "z_b"}``.  Without it, ``w_a = 2`` uses the
    end-placement pattern of depth ``w_b + 2`` and ``w_a = w_b = 3`` the
    depth-7 pattern named by ``preset``.
    """
    if w_a not in (2, 3) or w_b < 1:
        raise ValueError(f"unsupported weights (w_a={w_a}, w_b={w_b})")
    if w_a == 3 and w_b != 3:
        raise ValueError("the depth-7 scheme needs w_b = 3")
    depth = w_b + 2 if w_a == 2 else 7
    if assignment is not None:
        return _explicit(w_a, w_b, assignment, depth)
    if w_a == 2:
        b = tuple(range(2, w_b + 2))
        return _from_rows((1, depth), b, (depth, 1), b, depth)
    rows = PRESETS[preset or DEFAULT_PRESET]
    return _from_rows(*rows, depth)


def _explicit(w_a: int, w_b: int, assignment: dict, depth: int) -> Schedule:
    labels = {("a", i) for i in range(w_a)} | {("b", i) for i in range(w_b)}
    if {"x", "z"} <= set(assignment):
        x, z = dict(assignment["x"]), dict(assignment["z"])
        if set(x) != labels or set(z) != labels:
            raise ValueError("explicit assignment must give a step for every monomial")
        return Schedule(int(assignment.get("depth", depth)), x, z)
    keys = ("x_a", "x_b", "z_a", "z_b")
    if not set(keys) <= set(assignment):
        raise ValueError(f"explicit assignment needs keys {keys}")
    xa, xb, za, zb = (tuple(assignment[k]) for k in keys)
    if len(xa) != w_a or len(za) != w_a or len(xb) != w_b or len(zb) != w_b:
        raise ValueError("explicit assignment must give a step for every monomial")
    return _from_rows(xa, xb, za, zb, int(assignment.get("depth", depth)))


def schedule_for(code: CssCode) -> Schedule:
    """Preset schedule when the code has a known name, else the weight default."""
    preset = code.name if code.name in PRESETS and code.wa == 3 and code.wb == 3 else None
    return make_schedule(code.wa, code.wb, preset=preset)


# --------------------------------------------------------------------------
# validation


def _touch_times(code: CssCode, s: Schedule) -> tuple[np.ndarray, np.ndarray]:
    """``(tx, tz)``: time each generator addresses each qubit, 0 where it does not."""
    ell = code.group.order
    tx = np.zeros((ell, 2 * ell), dtype=np.int64)
    tz = np.zeros((ell, 2 * ell), dtype=np.int64)
    rows = np.arange(ell)
    for poly, block_x, block_z in (("a", 0, 1), ("b", 1, 0)):
        p = code.a if poly == "a" else code.b
        for i, term in enumerate(p.terms):
            perm = group_matrix(BinPoly((term,)), code.group).dense()
            tx[rows, block_x * ell + perm.argmax(axis=1)] = s.x_slots[(poly, i)]
            tz[rows, block_z * ell + perm.T.argmax(axis=1)] = s.z_slots[(poly, i)]
    return tx, tz


def validate_schedule(code: CssCode, s: Schedule) -> dict:
    """Structural checks of ``s`` on ``code``.

    ``collision_free``: no qubit is addressed twice in one step.
    ``ordering_rule_ok``: the ``a`` monomials follow the end-placement rule
    with opposite X/Z order.
    ``commutation_ok``: every overlapping X/Z generator pair shares an even
    number of qubits that X addresses first, so the ancillas do not end up
    entangled.
    """
    if s.wa != code.wa or s.wb != code.wb:
        raise ValueError(
            f"schedule covers (w_a, w_b)=({s.wa}, {s.wb}) but the code has ({code.wa}, {code.wb})"
        )
    tx, tz = _touch_times(code, s)
    collision_free = True
    for step in range(1, s.depth + 1):
        hits = (tx == step).sum(axis=0) + (tz == step).sum(axis=0)
        if hits.max(initial=0) > 1:
            collision_free = False
            break
    shared = (tx > 0)[:, None, :] & (tz > 0)[None, :, :]
    x_first = shared & (tx[:, None, :] < tz[None, :, :])
    commutation_ok = bool(np.all(x_first.sum(axis=2) % 2 == 0))
    return {
        "collision_free": collision_free,
        "ordering_rule_ok": ordering_rule_ok(s),
        "commutation_ok": commutation_ok,
    }


def ordering_rule_ok(s: Schedule) -> bool:
    xa, za = s.steps("x", "a"), s.steps("z", "a")
    xb, zb = s.steps("x", "b"), s.steps("z", "b")
    if s.wa == 2:
        ends = {1, s.depth}
        inner = set(range(2, s.depth))
        return (
            set(xa) == ends and set(za) == ends and xa[0] != za[0]
            and set(xb) <= inner and set(zb) <= inner
        )
    if s.wa == 3:
        if s.depth != 7 or set(xa) != {1, 2, 6} or set(za) != {2, 6, 7}:
            return False
        late = xa.index(6)
        if za[late] != 2:
            return False
        return set(xb) == {3, 4, 5} and set(zb) == {3, 4, 5}
    return False


def all_default_schedules() -> list[tuple[str, Schedule]]:
    return [(name, make_schedule(3, 3, preset=name)) for name in PRESETS]


def enumerate_depth7(w_b: int = 3) -> list[Schedule]:
    """Every schedule allowed by the depth-7 rule (for exhaustive checks)."""
    from itertools import permutations

    out = []
    for xa, xb, zb in product(permutations((1, 2, 6)), permutations((3, 4, 5)), permutations((3, 4, 5))):
        late = xa.index(6)
        for early in permutations((6, 7)):
            za = [0, 0, 0]
            za[late] = 2
            others = [i for i in range(3) if i != late]
            za[others[0]], za[others[1]] = early
            out.append(_from_rows(xa, xb, tuple(za), zb, 7))
    return out
