"""Point spaces and group actions for design scenarios.

A scenario fixes a point space (a union of labeled orbits, optionally with
a fixed point) and materializes the action of each group element as a
permutation of all points.  Points are indexed globally by orbit offset;
in text they print as bare integers (first orbit), primed integers (later
orbits), and the infinity sign for the fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import Cyclic, GroupTable, SemidirectCyclic, build_group

REGULAR = "regular"
REGULAR_PLUS_FIXED = "regular-plus-fixed"
TWO_ORBIT = "two-orbit"
TWO_ORBIT_PLUS_FIXED = "two-orbit-plus-fixed"
FOUR_ORBIT_96 = "four-orbit-96"

SCENARIO_KINDS = (REGULAR, REGULAR_PLUS_FIXED, TWO_ORBIT, TWO_ORBIT_PLUS_FIXED, FOUR_ORBIT_96)

INFINITY_LABEL = "∞"


class ScenarioError(ValueError):
    """Scenario kind and group do not fit together."""


@dataclass(frozen=True)
class Orbit:
    """One orbit of the point space: 'regular', 'cyclic', 'quotient', or 'fixed'."""

    kind: str
    size: int


@dataclass(frozen=True)
class PointSpace:
    """Ordered orbits with global indexing by cumulative offset."""

    orbits: tuple[Orbit, ...]

    @property
    def v(self) -> int:
        return sum(o.size for o in self.orbits)

    @property
    def offsets(self) -> tuple[int, ...]:
        offs, acc = [], 0
        for o in self.orbits:
            offs.append(acc)
            acc += o.size
        return tuple(offs)

    @property
    def labeled_orbits(self) -> tuple[Orbit, ...]:
        return tuple(o for o in self.orbits if o.kind != "fixed")

    @property
    def has_fixed_point(self) -> bool:
        return any(o.kind == "fixed" for o in self.orbits)

    @property
    def fixed_point(self) -> int:
        for off, o in zip(self.offsets, self.orbits):
            if o.kind == "fixed":
                return off
        raise ValueError("space has no fixed point")

    @classmethod
    def trivial(cls, v: int) -> PointSpace:
        return cls(orbits=(Orbit("regular", v),))

    def orbit_of(self, point: int) -> int:
        if not 0 <= point < self.v:
            raise IndexError(f"point {point} out of range 0..{self.v - 1}")
        for i in range(len(self.orbits) - 1, -1, -1):
            if point >= self.offsets[i]:
                return i
        raise AssertionError

    def label(self, point: int) -> str:
        i = self.orbit_of(point)
        if self.orbits[i].kind == "fixed":
            return INFINITY_LABEL
        local = point - self.offsets[i]
        primes = sum(1 for o in self.orbits[:i] if o.kind != "fixed")
        return f"{local}" + "'" * primes

    def point(self, label: str) -> int:
        """Resolve a text label (e.g. "14'", "inf") to a global point index."""
        s = label.strip()
        if s in (INFINITY_LABEL, "inf"):
            if not self.has_fixed_point:
                raise ValueError(f"label {label!r}: space has no fixed point")
            return self.fixed_point
        primes = len(s) - len(s.rstrip("'"))
        digits = s[: len(s) - primes]
        if not digits.isdigit():
            raise ValueError(f"unknown point label {label!r}")
        labeled_pos = [i for i, o in enumerate(self.orbits) if o.kind != "fixed"]
        if primes >= len(labeled_pos):
            raise ValueError(f"label {label!r}: prime depth {primes} exceeds orbit count {len(labeled_pos)}")
        local = int(digits)
        pos = labeled_pos[primes]
        if local >= self.orbits[pos].size:
            raise ValueError(f"label {label!r}: index {local} outside orbit of size {self.orbits[pos].size}")
        return self.offsets[pos] + local


@dataclass(frozen=True)
class PairClasses:
    """Partition of all unordered point pairs into orbits of the action.

    Classes are indexed by ascending (size, representative pair); the
    search engine targets them in that order, rarest first.
    """

    count: int
    class_of: np.ndarray  # (v, v) int16, -1 on the diagonal
    sizes: np.ndarray  # (count,) int64
    reps: np.ndarray  # (count, 2) int32


@dataclass(frozen=True)
class ActionScenario:
    """A group acting on a point space, with every permutation materialized."""

    kind: str
    group: GroupTable
    space: PointSpace
    perms: np.ndarray  # (|G|, v) int32
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def v(self) -> int:
        return self.space.v

    def apply(self, g: int, p: int) -> int:
        if not 0 <= g < self.group.order:
            raise IndexError(f"group element {g} out of range 0..{self.group.order - 1}")
        if not 0 <= p < self.v:
            raise IndexError(f"point {p} out of range 0..{self.v - 1}")
        return int(self.perms[g, p])

    def block_orbit(self, block) -> list[tuple[int, ...]]:
        """All distinct images of a block under the group, sorted."""
        pts = _as_block(block, self.v)
        images = self.perms[:, pts]
        images.sort(axis=1)
        return sorted(set(map(tuple, images.tolist())))

    def stabilizer_order(self, block) -> int:
        pts = _as_block(block, self.v)
        ref = tuple(sorted(pts))
        images = self.perms[:, pts]
        images.sort(axis=1)
        return sum(1 for row in images.tolist() if tuple(row) == ref)

    def orbit_rep(self, block) -> tuple[int, ...]:
        """Lexicographically minimal member of the block's orbit."""
        return self.block_orbit(block)[0]

    def pair_classes(self) -> PairClasses:
        if "pair_classes" not in self._cache:
            self._cache["pair_classes"] = _compute_pair_classes(self.perms, self.v)
        return self._cache["pair_classes"]


def _as_block(block, v: int) -> list[int]:
    pts = [int(p) for p in block]
    if len(set(pts)) != len(pts):
        raise ValueError(f"block {pts} has repeated points")
    for p in pts:
        if not 0 <= p < v:
            raise IndexError(f"point {p} out of range 0..{v - 1}")
    return pts


def _compute_pair_classes(perms: np.ndarray, v: int) -> PairClasses:
    class_of = np.full((v, v), -1, dtype=np.int16)
    reps: list[tuple[int, int]] = []
    sizes: list[int] = []
    for p in range(v):
        row_p = perms[:, p]
        for q in range(p + 1, v):
            if class_of[p, q] >= 0:
                continue
            row_q = perms[:, q]
            lo = np.minimum(row_p, row_q)
            hi = np.maximum(row_p, row_q)
            codes = np.unique(lo.astype(np.int64) * v + hi)
            cid = len(reps)
            lo2, hi2 = codes // v, codes % v
            class_of[lo2, hi2] = cid
            class_of[hi2, lo2] = cid
            reps.append((int(lo2[0]), int(hi2[0])))
            sizes.append(len(codes))
    # reorder rarest-first, ties by representative pair
    order = sorted(range(len(reps)), key=lambda i: (sizes[i], reps[i]))
    remap = np.empty(len(reps), dtype=np.int16)
    for new, old in enumerate(order):
        remap[old] = new
    relabeled = np.where(class_of >= 0, remap[class_of], -1).astype(np.int16)
    return PairClasses(
        count=len(reps),
        class_of=relabeled,
        sizes=np.array([sizes[i] for i in order], dtype=np.int64),
        reps=np.array([reps[i] for i in order], dtype=np.int32),
    )


# ---------------------------------------------------------------------------
# Scenario builders


def _require_cyclic(kind: str, group: GroupTable) -> int:
    n = group.order
    if not np.array_equal(group.table, (np.arange(n)[:, None] + np.arange(n)[None, :]) % n):
        raise ScenarioError(f"scenario {kind!r} requires a cyclic group in natural numbering")
    return n


def build_scenario(kind: str, group: GroupTable) -> ActionScenario:
    """Realize one of the supported scenario kinds over a group."""
    n = group.order
    if kind == REGULAR:
        space = PointSpace((Orbit("regular", n),))
        perms = group.table.astype(np.int32)
    elif kind == REGULAR_PLUS_FIXED:
        space = PointSpace((Orbit("regular", n), Orbit("fixed", 1)))
        perms = np.empty((n, n + 1), dtype=np.int32)
        perms[:, :n] = group.table
        perms[:, n] = n
    elif kind in (TWO_ORBIT, TWO_ORBIT_PLUS_FIXED):
        _require_cyclic(kind, group)
        fixed = kind == TWO_ORBIT_PLUS_FIXED
        v = 2 * n + (1 if fixed else 0)
        orbits = [Orbit("cyclic", n), Orbit("cyclic", n)]
        if fixed:
            orbits.append(Orbit("fixed", 1))
        space = PointSpace(tuple(orbits))
        shift = (np.arange(n)[None, :] + np.arange(n)[:, None]) % n
        perms = np.empty((n, v), dtype=np.int32)
        perms[:, :n] = shift
        perms[:, n : 2 * n] = shift + n
        if fixed:
            perms[:, 2 * n] = 2 * n
    elif kind == FOUR_ORBIT_96:
        expected = build_group(SemidirectCyclic(19, 3, 7))
        if not np.array_equal(group.table, expected.table):
            raise ScenarioError(f"scenario {kind!r} requires SD(19,3,7) in its normative numbering")
        space = PointSpace((Orbit("regular", 57), Orbit("quotient", 19), Orbit("quotient", 19), Orbit("fixed", 1)))
        perms = _four_orbit_96_perms()
    else:
        raise ScenarioError(f"unknown scenario kind {kind!r}")
    return ActionScenario(kind=kind, group=group, space=space, perms=_read_only(perms))


def _four_orbit_96_perms() -> np.ndarray:
    # Group elements are CRT-indexed pairs (g mod 19, g mod 3) with product
    # (a,b)(x,y) = (a + 7^b x mod 19, b + y mod 3).  Points of the 57-orbit
    # carry row-major pair labels (p // 3, p % 3): the printed catalogs use
    # that numbering, and only under it do their short block orbits appear.
    perms = np.empty((57, 96), dtype=np.int32)
    for g in range(57):
        a, b = g % 19, g % 3
        tb = pow(7, b, 19)
        for p in range(57):
            x, y = divmod(p, 3)
            perms[g, p] = 3 * ((a + tb * x) % 19) + (b + y) % 3
        for x in range(19):
            img = (a + tb * x) % 19
            perms[g, 57 + x] = 57 + img
            perms[g, 76 + x] = 76 + img
        perms[g, 95] = 95
    return perms


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.int32)
    arr.setflags(write=False)
    return arr


def scenario_for_spec(kind: str, spec_or_group) -> ActionScenario:
    """Convenience: accept either a GroupSpec or a built GroupTable."""
    group = spec_or_group if isinstance(spec_or_group, GroupTable) else build_group(spec_or_group)
    return build_scenario(kind, group)


def two_orbit_scenario(n: int, fixed: bool = False) -> ActionScenario:
    kind = TWO_ORBIT_PLUS_FIXED if fixed else TWO_ORBIT
    return build_scenario(kind, build_group(Cyclic(n)))
