"""Isomorphism invariants: fingerprint census, canonical form, automorphisms.

The fingerprint is a fast relabeling-invariant histogram used to separate
non-isomorphic designs cheaply; designs with different fingerprints are
certainly non-isomorphic.  Equal fingerprints prove nothing, so all exact
decisions go through the canonical certificate, computed by partition
refinement with individualization backtracking on the point/block
incidence structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ._kernels import census_kernel
from .designs import Design, verify_steiner


class InvariantError(ValueError):
    pass


def _require_verified(design: Design) -> None:
    report = verify_steiner(design)
    if not report.ok:
        raise InvariantError(f"design is not a Steiner system: {report.summary()}")


# ---------------------------------------------------------------------------
# Fingerprint


@dataclass(frozen=True)
class Fingerprint:
    """Histogram over census keys 0..k-2; zero-count keys are omitted."""

    counts: tuple[tuple[int, int], ...]

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)

    def as_dict(self) -> dict[int, int]:
        return dict(self.counts)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{key}={cnt}" for key, cnt in self.counts) + "}"

    @classmethod
    def from_dict(cls, mapping) -> Fingerprint:
        items = tuple(sorted((int(key), int(cnt)) for key, cnt in mapping.items() if int(cnt) != 0))
        return cls(counts=items)

    @classmethod
    def parse(cls, text: str) -> Fingerprint:
        body = text.strip()
        if not (body.startswith("{") and body.endswith("}")):
            raise InvariantError(f"fingerprint text must be brace-delimited, got {text!r}")
        pairs = re.findall(r"(\d+)\s*=\s*(\d+)", body)
        if not pairs and body != "{}":
            raise InvariantError(f"cannot parse fingerprint {text!r}")
        return cls.from_dict({int(a): int(b) for a, b in pairs})


@dataclass(frozen=True)
class PairBlockIndex:
    """v x v lookup from an unordered pair to the unique block containing it."""

    v: int
    table: np.ndarray  # (v, v) int32, -1 on the diagonal

    @classmethod
    def build(cls, design: Design) -> PairBlockIndex:
        v = design.v
        table = np.full((v, v), -1, dtype=np.int32)
        mat = design.matrix
        for i in range(design.k):
            for j in range(i + 1, design.k):
                table[mat[:, i], mat[:, j]] = np.arange(design.b)
                table[mat[:, j], mat[:, i]] = np.arange(design.b)
        return cls(v=v, table=table)

    def block_through(self, p: int, q: int) -> int:
        if p == q:
            raise InvariantError("a pair needs two distinct points")
        return int(self.table[p, q])


def expected_census_total(design: Design) -> int:
    v, k, b = design.v, design.k, design.b
    return b * k * (k - 1) * (k - 2) * (v - k)


def _census(design: Design) -> tuple[np.ndarray, np.ndarray]:
    """Run the configuration census; returns (histogram, per-pair histograms)."""
    mat = design.matrix
    index = PairBlockIndex.build(design)
    member = np.zeros((design.b, design.v), dtype=bool)
    member[np.arange(design.b)[:, None], mat] = True
    disjoint = ~(member @ member.T)
    pair_hist = np.zeros((design.v, design.v, design.k - 1), dtype=np.int64)
    hist = census_kernel(mat, index.table, disjoint, design.v, design.k, pair_hist)
    assert hist.sum() == expected_census_total(design)
    return hist, pair_hist


def fingerprint(design: Design) -> Fingerprint:
    """Census histogram of the design; rejects non-Steiner input."""
    _require_verified(design)
    hist, _ = _census(design)
    return Fingerprint.from_dict({i: int(c) for i, c in enumerate(hist)})


def _pair_colors(design: Design) -> np.ndarray:
    """Relabeling-invariant coloring of ordered point pairs.

    Colors are ranks of the per-pair census histograms in lexicographic
    order, so isomorphic designs induce identical color multisets.
    """
    _, pair_hist = _census(design)
    flat = pair_hist.reshape(design.v * design.v, design.k - 1)
    _, inverse = np.unique(flat, axis=0, return_inverse=True)
    return inverse.reshape(design.v, design.v).astype(np.int64)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; fixed weights for multiset hashing."""
    z = (x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)) * np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


# ---------------------------------------------------------------------------
# Canonical labeling by individualization-refinement


@dataclass(frozen=True)
class CanonicalCertificate:
    """Canonical block list plus the point relabeling that produced it."""

    blocks: tuple[tuple[int, ...], ...]
    labeling: tuple[int, ...]  # labeling[original point] = canonical label

    @property
    def key(self) -> bytes:
        return np.array(self.blocks, dtype=">u2").tobytes()


class _Partition:
    """Ordered partition of the bipartite point/block vertex set.

    Vertices 0..v-1 are points, v..v+b-1 are blocks.  Point vertices always
    occupy positions 0..v-1.  Cells are spans of the position order and are
    identified by their start position.
    """

    __slots__ = ("v", "n", "order", "pos", "cstart", "csize")

    def __init__(self, v: int, n: int):
        self.v = v
        self.n = n
        self.order = np.arange(n, dtype=np.int32)
        self.pos = np.arange(n, dtype=np.int32)
        self.cstart = np.zeros(n, dtype=np.int32)
        self.csize = np.zeros(n, dtype=np.int32)
        self.cstart[v:] = v
        self.csize[0] = v
        self.csize[v] = n - v

    def copy(self) -> _Partition:
        dup = object.__new__(_Partition)
        dup.v = self.v
        dup.n = self.n
        dup.order = self.order.copy()
        dup.pos = self.pos.copy()
        dup.cstart = self.cstart.copy()
        dup.csize = self.csize.copy()
        return dup

    def cell_span(self, vertex: int) -> tuple[int, int]:
        s = int(self.cstart[self.pos[vertex]])
        return s, int(self.csize[s])

    def point_cells_discrete(self) -> bool:
        p = 0
        while p < self.v:
            if self.csize[p] != 1:
                return False
            p += int(self.csize[p])
        return True

    def target_cell(self) -> tuple[int, int] | None:
        """First largest non-singleton point cell (start, size)."""
        best = None
        p = 0
        while p < self.v:
            size = int(self.csize[p])
            if size > 1 and (best is None or size > best[1]):
                best = (p, size)
            p += size
        return best

    def individualize(self, vertex: int) -> None:
        s, size = self.cell_span(vertex)
        vp = int(self.pos[vertex])
        # stable move of `vertex` to the front of its span
        span = self.order[s : s + size].copy()
        idx = vp - s
        span[1 : idx + 1] = span[:idx]
        span[0] = vertex
        self.order[s : s + size] = span
        self.pos[span] = np.arange(s, s + size, dtype=np.int32)
        self.cstart[s] = s
        self.csize[s] = 1
        self.cstart[s + 1 : s + size] = s + 1
        self.csize[s + 1] = size - 1

    def split_by_counts(self, start: int, size: int, counts: np.ndarray) -> list[int]:
        """Reorder one cell by ascending count; returns new subcell starts."""
        span = self.order[start : start + size]
        vals = counts[span]
        if vals.min() == vals.max():
            return []
        idx = np.argsort(vals, kind="stable")
        span = span[idx]
        vals = vals[idx]
        self.order[start : start + size] = span
        self.pos[span] = np.arange(start, start + size, dtype=np.int32)
        boundaries = [0] + list(np.nonzero(np.diff(vals))[0] + 1) + [size]
        new_starts = []
        for a, b in zip(boundaries, boundaries[1:]):
            self.cstart[start + a : start + b] = start + a
            self.csize[start + a] = b - a
            new_starts.append(start + a)
        return new_starts


class _Canonizer:
    def __init__(self, design: Design):
        self.v = design.v
        self.b = design.b
        self.k = design.k
        self.mat = design.matrix  # (b, k) point ids
        # blocks through each point, dense because replication is uniform
        r = (design.v - 1) // (design.k - 1)
        rows = [[] for _ in range(design.v)]
        for j, blk in enumerate(design.blocks):
            for p in blk:
                rows[p].append(j)
        if any(len(row) != r for row in rows):
            raise InvariantError("canonical labeling requires a verified design")
        self.point_rows = np.array(rows, dtype=np.int32)  # (v, r)
        self.n = design.v + design.b
        # pair-invariant channel: Steiner regularity defeats plain degree
        # refinement, so point cells are additionally split by multiset
        # hashes of census-based pair colors
        self.pair_weight = _mix64(_pair_colors(design))  # (v, v) uint64
        self.best_key: bytes | None = None
        self.best_labeling: np.ndarray | None = None
        self.first_key: bytes | None = None
        self.first_inverse: np.ndarray | None = None
        self.automorphisms: list[tuple[int, ...]] = []
        self._aut_seen: set[tuple[int, ...]] = set()

    # -- refinement ---------------------------------------------------------

    def refine(self, part: _Partition, queue: list[int]) -> None:
        v = self.v
        while queue:
            start = queue.pop()
            size = int(part.csize[start])
            members = part.order[start : start + size]
            if members[0] < v:
                # point splitter: incidence counts on blocks, pair hashes on points
                counts = np.bincount(self.point_rows[members].ravel(), minlength=self.b)
                touched = np.nonzero(counts)[0] + v
                full = np.zeros(self.n, dtype=np.int64)
                full[v:] = counts
                self._split_touched(part, touched, full, queue)
                hashes = np.zeros(self.n, dtype=np.uint64)
                hashes[:v] = self.pair_weight[:, members].sum(axis=1, dtype=np.uint64)
                self._split_point_cells(part, hashes, queue)
            else:
                counts = np.bincount(self.mat[members - v].ravel(), minlength=v)
                touched = np.nonzero(counts)[0]
                full = np.zeros(self.n, dtype=np.int64)
                full[:v] = counts
                self._split_touched(part, touched, full, queue)

    def _split_touched(self, part: _Partition, touched: np.ndarray, values: np.ndarray, queue: list[int]) -> None:
        for cell in np.unique(part.cstart[part.pos[touched]]):
            csize = int(part.csize[cell])
            if csize == 1:
                continue
            for sub in part.split_by_counts(int(cell), csize, values):
                queue.append(sub)

    def _split_point_cells(self, part: _Partition, values: np.ndarray, queue: list[int]) -> None:
        p = 0
        while p < self.v:
            csize = int(part.csize[p])
            if csize > 1:
                for sub in part.split_by_counts(p, csize, values):
                    queue.append(sub)
            p += int(part.csize[p])

    # -- search -------------------------------------------------------------

    def run(self) -> None:
        part = _Partition(self.v, self.n)
        self.refine(part, [0, self.v])
        self._explore(part, [])

    def _explore(self, part: _Partition, prefix: list[int]) -> None:
        target = part.target_cell()
        if target is None:
            self._leaf(part)
            return
        start, size = target
        candidates = sorted(int(x) for x in part.order[start : start + size])
        tried: list[int] = []
        for cand in candidates:
            if self._orbit_pruned(cand, tried, prefix):
                continue
            tried.append(cand)
            child = part.copy()
            child.individualize(cand)
            self.refine(child, [start, start + 1])
            prefix.append(cand)
            self._explore(child, prefix)
            prefix.pop()

    def _orbit_pruned(self, cand: int, tried: list[int], prefix: list[int]) -> bool:
        if not tried or not self.automorphisms:
            return False
        fixing = [g for g in self.automorphisms if all(g[x] == x for x in prefix)]
        if not fixing:
            return False
        parent = list(range(self.v))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in fixing:
            for x in range(self.v):
                rx, ry = find(x), find(g[x])
                if rx != ry:
                    parent[rx] = ry
        root = find(cand)
        return any(find(t) == root for t in tried)

    def _leaf(self, part: _Partition) -> None:
        labeling = np.empty(self.v, dtype=np.int32)
        labeling[part.order[: self.v]] = np.arange(self.v, dtype=np.int32)
        relabeled = labeling[self.mat]
        relabeled.sort(axis=1)
        order = np.lexsort(tuple(relabeled[:, i] for i in range(self.k - 1, -1, -1)))
        form = np.ascontiguousarray(relabeled[order])
        key = form.astype(">u2").tobytes()

        if self.first_key is None:
            self.first_key = key
            inv = np.empty(self.v, dtype=np.int32)
            inv[labeling] = np.arange(self.v, dtype=np.int32)
            self.first_inverse = inv
        elif key == self.first_key:
            self._record_automorphism(self.first_inverse[labeling])
        if self.best_key is None or key < self.best_key:
            self.best_key = key
            self.best_labeling = labeling.copy()
        elif key == self.best_key and self.best_labeling is not None:
            inv = np.empty(self.v, dtype=np.int32)
            inv[self.best_labeling] = np.arange(self.v, dtype=np.int32)
            self._record_automorphism(inv[labeling])

    def _record_automorphism(self, sigma: np.ndarray) -> None:
        tup = tuple(int(x) for x in sigma)
        if tup == tuple(range(self.v)) or tup in self._aut_seen:
            return
        self._aut_seen.add(tup)
        self.automorphisms.append(tup)


def _canonize(design: Design) -> _Canonizer:
    _require_verified(design)
    canon = _Canonizer(design)
    canon.run()
    return canon


def canonical_certificate(design: Design) -> CanonicalCertificate:
    """Deterministic, relabeling-invariant canonical form of a design."""
    canon = _canonize(design)
    labeling = canon.best_labeling
    assert labeling is not None
    relabeled = design.relabel([int(x) for x in labeling])
    return CanonicalCertificate(blocks=relabeled.blocks, labeling=tuple(int(x) for x in labeling))


@dataclass(frozen=True)
class IsoResult:
    isomorphic: bool
    bijection: tuple[int, ...] | None
    reason: str


def are_isomorphic(d1: Design, d2: Design) -> IsoResult:
    """Exact isomorphism decision via canonical certificates.

    A positive answer carries a point bijection mapping blocks of d1 onto
    blocks of d2.
    """
    if (d1.v, d1.k) != (d2.v, d2.k):
        return IsoResult(False, None, f"parameter mismatch: ({d1.v},{d1.k}) vs ({d2.v},{d2.k})")
    c1 = canonical_certificate(d1)
    c2 = canonical_certificate(d2)
    if c1.key != c2.key:
        return IsoResult(False, None, "canonical certificates differ")
    inv2 = [0] * d2.v
    for point, lab in enumerate(c2.labeling):
        inv2[lab] = point
    bijection = tuple(inv2[c1.labeling[x]] for x in range(d1.v))
    return IsoResult(True, bijection, "canonical certificates equal")


def automorphism_generators(design: Design) -> list[tuple[int, ...]]:
    return list(_canonize(design).automorphisms)


def automorphism_count(design: Design) -> int:
    """Exact order of the design's automorphism group."""
    if design.v > 160:
        raise InvariantError(f"automorphism counting is supported for v <= 160, got v={design.v}")
    return _permutation_group_order(automorphism_generators(design), design.v)


def _permutation_group_order(generators, n: int) -> int:
    identity = tuple(range(n))
    gens = {tuple(g) for g in generators} - {identity}
    if not gens:
        return 1
    beta = next(i for i in range(n) if any(g[i] != i for g in gens))
    transversal: dict[int, tuple[int, ...]] = {beta: identity}
    frontier = [beta]
    while frontier:
        pt = frontier.pop()
        t = transversal[pt]
        for g in gens:
            img = g[pt]
            if img not in transversal:
                transversal[img] = tuple(g[t[i]] for i in range(n))
                frontier.append(img)
    stab: set[tuple[int, ...]] = set()
    inverses = {pt: _perm_inverse(t) for pt, t in transversal.items()}
    for pt, t in transversal.items():
        for g in gens:
            w = tuple(g[t[i]] for i in range(n))
            u_inv = inverses[g[pt]]
            s = tuple(u_inv[w[i]] for i in range(n))
            if s != identity:
                stab.add(s)
    return len(transversal) * _permutation_group_order(stab, n)


def _perm_inverse(perm: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, x in enumerate(perm):
        inv[x] = i
    return tuple(inv)
