"""Expansion of base-block systems into explicit designs, and verification.

The central check is the Steiner property: every unordered pair of points
lies on exactly one block.  Verification counts pair coverage exactly and
reports witnesses, so a failing expansion is diagnosable rather than just
false.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import blocktext
from .actions import ActionScenario, PointSpace, build_scenario
from .groups import GroupSpec, GroupTable, build_group, parse_group_spec


class DesignError(ValueError):
    """Structurally invalid design data."""


class OrbitCollisionError(DesignError):
    """Two distinct base blocks generate overlapping orbits."""

    def __init__(self, first, second):
        super().__init__(f"base blocks {tuple(first)} and {tuple(second)} generate colliding orbits")
        self.first = tuple(first)
        self.second = tuple(second)


@dataclass(frozen=True)
class Design:
    """An explicit (v, k) incidence structure: sorted k-subsets, sorted list."""

    v: int
    k: int
    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_blocks(cls, v: int, k: int, blocks) -> Design:
        norm = []
        for b in blocks:
            pts = tuple(sorted(int(p) for p in b))
            if len(pts) != k:
                raise DesignError(f"block {pts} has {len(pts)} points, expected k={k}")
            if len(set(pts)) != k:
                raise DesignError(f"block {pts} has repeated points")
            if pts[0] < 0 or pts[-1] >= v:
                raise DesignError(f"block {pts} has points outside 0..{v - 1}")
            norm.append(pts)
        norm.sort()
        for a, b in zip(norm, norm[1:]):
            if a == b:
                raise DesignError(f"duplicate block {a}")
        return cls(v=v, k=k, blocks=tuple(norm))

    @property
    def b(self) -> int:
        return len(self.blocks)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.blocks, dtype=np.int32)

    def relabel(self, perm) -> Design:
        """Apply a point permutation (perm[old] = new) to every block."""
        p = list(perm)
        if sorted(p) != list(range(self.v)):
            raise DesignError("relabeling is not a permutation of the point set")
        return Design.from_blocks(self.v, self.k, [[p[x] for x in blk] for blk in self.blocks])


@dataclass(frozen=True)
class BaseBlockSystem:
    """A scenario plus base blocks: the compressed form of a design."""

    scenario: ActionScenario
    base_blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_blocks(cls, scenario: ActionScenario, blocks) -> BaseBlockSystem:
        v = scenario.v
        norm = []
        for b in blocks:
            pts = tuple(sorted(int(p) for p in b))
            if any(p < 0 or p >= v for p in pts):
                raise DesignError(f"base block {pts} outside the point space 0..{v - 1}")
            if len(set(pts)) != len(pts):
                raise DesignError(f"base block {pts} has repeated points")
            norm.append(pts)
        return cls(scenario=scenario, base_blocks=tuple(norm))

    def normalized(self) -> BaseBlockSystem:
        """Replace each base block by its orbit's lexicographic minimum, sorted."""
        reps = sorted(self.scenario.orbit_rep(b) for b in self.base_blocks)
        return BaseBlockSystem(scenario=self.scenario, base_blocks=tuple(reps))

    def blocks_text(self) -> str:
        return blocktext.emit_blocks(self.base_blocks, self.scenario.space)


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    v: int
    k: int
    b: int
    r: int | None
    uncovered: tuple[tuple[int, int], ...]
    multiple: tuple[tuple[tuple[int, int], int], ...]

    def summary(self) -> str:
        if self.ok:
            return f"pass: S(2,{self.k},{self.v}) with b={self.b}, r={self.r}"
        return (
            f"fail: {len(self.uncovered)} uncovered pair(s), "
            f"{len(self.multiple)} multiply covered pair(s) (b={self.b})"
        )


def expand(system: BaseBlockSystem) -> Design:
    """Union of the base blocks' orbits; collisions between orbits are errors."""
    scenario = system.scenario
    seen: dict[tuple[int, ...], tuple[int, ...]] = {}
    k = None
    for base in system.base_blocks:
        if k is None:
            k = len(base)
        elif len(base) != k:
            raise DesignError(f"base blocks of mixed sizes: {len(base)} vs {k}")
        for blk in scenario.block_orbit(base):
            if blk in seen and seen[blk] != base:
                raise OrbitCollisionError(seen[blk], base)
            seen[blk] = base
    if k is None:
        raise DesignError("no base blocks to expand")
    return Design.from_blocks(scenario.v, k, seen.keys())


def verify_steiner(design: Design) -> VerificationReport:
    """Exact pair-coverage check with witnesses."""
    v = design.v
    mat = design.matrix
    codes = []
    for i in range(design.k):
        for j in range(i + 1, design.k):
            codes.append(mat[:, i].astype(np.int64) * v + mat[:, j])
    counts = np.bincount(np.concatenate(codes) if codes else np.array([], dtype=np.int64), minlength=v * v)
    grid = counts.reshape(v, v)
    iu = np.triu_indices(v, 1)
    vals = grid[iu]
    uncovered = [(int(p), int(q)) for p, q in zip(iu[0][vals == 0], iu[1][vals == 0])]
    multi = [
        ((int(p), int(q)), int(c))
        for p, q, c in zip(iu[0][vals > 1], iu[1][vals > 1], vals[vals > 1])
    ]
    r_exact, rem = divmod(v - 1, design.k - 1)
    replication = np.bincount(mat.ravel(), minlength=v)
    uniform = rem == 0 and bool((replication == r_exact).all())
    ok = not uncovered and not multi and uniform
    return VerificationReport(
        ok=ok,
        v=v,
        k=design.k,
        b=design.b,
        r=r_exact if rem == 0 else None,
        uncovered=tuple(uncovered),
        multiple=tuple(multi),
    )


def admissible(v: int, k: int) -> tuple[bool, str]:
    """Necessary divisibility conditions for an S(2,k,v) to exist."""
    if not v > k >= 2:
        return False, f"need v > k >= 2, got v={v}, k={k}"
    if (v - 1) % (k - 1) != 0:
        return False, f"v-1 = {v - 1} not divisible by k-1 = {k - 1}"
    if (v * (v - 1)) % (k * (k - 1)) != 0:
        return False, f"v(v-1) = {v * (v - 1)} not divisible by k(k-1) = {k * (k - 1)}"
    return True, f"b = {v * (v - 1) // (k * (k - 1))}, r = {(v - 1) // (k - 1)}"


# ---------------------------------------------------------------------------
# Numbering resolution


@dataclass(frozen=True)
class NumberingResolution:
    spec: GroupSpec
    scenario: ActionScenario
    design: Design
    failures: tuple[tuple[GroupSpec, str], ...]


class NumberingUnresolvedError(DesignError):
    """No candidate numbering convention made the printed blocks verify."""

    def __init__(self, attempts):
        lines = ", ".join(f"{spec.label}: {reason}" for spec, reason in attempts)
        super().__init__(f"no candidate numbering verifies ({lines})")
        self.attempts = tuple(attempts)


def resolve_numbering(candidates, kind: str, blocks_text: str) -> NumberingResolution:
    """Try candidate group numberings until the printed blocks verify.

    Candidates must share one group order; the first whose expansion passes
    verify_steiner wins.
    """
    candidates = list(candidates)
    if not candidates:
        raise DesignError("resolve_numbering needs at least one candidate")
    failures: list[tuple[GroupSpec, str]] = []
    for spec in candidates:
        try:
            scenario = build_scenario(kind, build_group(spec))
            blocks = blocktext.parse_blocks(blocks_text, scenario.space)
            system = BaseBlockSystem.from_blocks(scenario, blocks)
            design = expand(system)
            report = verify_steiner(design)
        except (DesignError, ValueError) as exc:
            failures.append((spec, str(exc)))
            continue
        if report.ok:
            return NumberingResolution(
                spec=spec, scenario=scenario, design=design, failures=tuple(failures)
            )
        failures.append((spec, report.summary()))
    raise NumberingUnresolvedError(failures)


# ---------------------------------------------------------------------------
# Design files


def save_design(design: Design, path: str | Path, scenario: ActionScenario | None = None) -> None:
    space = scenario.space if scenario is not None else PointSpace.trivial(design.v)
    lines = [f"v {design.v}", f"k {design.k}"]
    if scenario is not None and scenario.group.spec is not None:
        lines.append(f"scenario {scenario.kind} {scenario.group.spec.label}")
    lines.append("blocks")
    for blk in design.blocks:
        lines.append(blocktext.emit_block(blk, space))
    Path(path).write_text("\n".join(lines) + "\n")


def load_design(path: str | Path) -> tuple[Design, ActionScenario | None]:
    text = Path(path).read_text()
    v = k = None
    scenario = None
    block_lines: list[str] = []
    in_blocks = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_blocks:
            block_lines.append(line)
            continue
        key, _, rest = line.partition(" ")
        if key == "v":
            v = int(rest)
        elif key == "k":
            k = int(rest)
        elif key == "scenario":
            kind, _, spec_text = rest.strip().partition(" ")
            scenario = build_scenario(kind, build_group(parse_group_spec(spec_text)))
        elif key == "blocks":
            in_blocks = True
        else:
            raise DesignError(f"{path}: unknown header line {line!r}")
    if v is None or k is None:
        raise DesignError(f"{path}: missing v/k headers")
    space = scenario.space if scenario is not None else PointSpace.trivial(v)
    if scenario is not None and scenario.v != v:
        raise DesignError(f"{path}: scenario has v={scenario.v}, header says v={v}")
    body = "[" + ", ".join(block_lines) + "]" if block_lines and not block_lines[0].startswith("[[") else " ".join(block_lines)
    blocks = blocktext.parse_blocks(body, space, expected_k=k, strict=True)
    return Design.from_blocks(v, k, blocks), scenario


def block_orbit_profile(system: BaseBlockSystem) -> list[int]:
    """Orbit lengths of the base blocks, in base-block order."""
    return [len(system.scenario.block_orbit(b)) for b in system.base_blocks]


def pairs_of(block) -> list[tuple[int, int]]:
    return [tuple(sorted(p)) for p in itertools.combinations(block, 2)]
