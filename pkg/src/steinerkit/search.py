"""Exhaustive enumeration of base-block systems by exact cover of pair classes.

The searcher walks a DFS in which every node targets the lowest-index
uncovered pair class and candidate blocks are grown point by point from
that class's representative pair.  A completed block is kept only when its
orbit covers each touched class exactly once, which makes short (stabilized)
blocks first-class citizens rather than special cases.  Emitted systems are
normalized to lexicographically minimal orbit representatives and verified
before they are yielded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from ._kernels import SEARCH_DEPTH_OVERFLOW, SEARCH_OUT_OVERFLOW, search_kernel
from .actions import ActionScenario
from .designs import BaseBlockSystem, DesignError, admissible, expand, verify_steiner
from .invariants import canonical_certificate, fingerprint


class SearchError(ValueError):
    pass


class InadmissibleParameters(SearchError):
    pass


class InconsistentForcedBlocks(SearchError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    scenario: ActionScenario
    k: int
    forced_blocks: tuple[tuple[int, ...], ...] = ()
    branch: tuple[int, int] = (0, 1)  # (index, total): top-level branch selector
    checkpoint: str | None = None
    jobs: int = 1
    limit: int | None = None


@dataclass
class _Instance:
    """Flat arrays shared by kernel invocations."""

    scenario: ActionScenario
    k: int
    perms: np.ndarray
    class_of: np.ndarray
    sizes: np.ndarray
    rep_p: np.ndarray
    rep_q: np.ndarray
    cov0: np.ndarray
    covered0: int
    forced: tuple[tuple[int, ...], ...] = ()
    max_blocks: int = field(default=0)


def _prepare(config: SearchConfig) -> _Instance:
    scenario = config.scenario
    v, k = scenario.v, config.k
    ok, reason = admissible(v, k)
    if not ok:
        raise InadmissibleParameters(f"S(2,{k},{v}) is inadmissible: {reason}")
    pc = scenario.pair_classes()
    cov = np.zeros(pc.count, dtype=np.uint8)
    forced = tuple(tuple(sorted(int(p) for p in blk)) for blk in config.forced_blocks)
    for blk in forced:
        if len(blk) != k:
            raise InconsistentForcedBlocks(f"forced block {blk} has size {len(blk)}, expected {k}")
        _apply_block_coverage(scenario, pc, cov, blk)
    inst = _Instance(
        scenario=scenario,
        k=k,
        perms=scenario.perms,
        class_of=pc.class_of,
        sizes=pc.sizes.astype(np.int32),
        rep_p=pc.reps[:, 0].astype(np.int32),
        rep_q=pc.reps[:, 1].astype(np.int32),
        cov0=cov,
        covered0=int(cov.sum()),
        forced=forced,
    )
    inst.max_blocks = min(pc.count + 1, 96)
    return inst


def _apply_block_coverage(scenario, pc, cov, block) -> None:
    """Mark the classes covered by one block orbit, enforcing exact cover."""
    orbit_len = len(scenario.block_orbit(block))
    mult: dict[int, int] = {}
    for p, q in itertools.combinations(block, 2):
        c = int(pc.class_of[p, q])
        mult[c] = mult.get(c, 0) + 1
    for c, m in mult.items():
        if m * orbit_len != int(pc.sizes[c]):
            raise InconsistentForcedBlocks(
                f"block {tuple(block)} covers class {c} with multiplicity "
                f"{m * orbit_len / pc.sizes[c]:g}, expected exactly 1"
            )
        if cov[c]:
            raise InconsistentForcedBlocks(f"pair class {c} covered twice by forced blocks")
        cov[c] = 1


def _run_kernel(inst: _Instance, preset, branch_idx, branch_mod, stop_blocks, limit):
    """One kernel invocation; handles output buffer growth."""
    cov = inst.cov0.copy()
    covered = inst.covered0
    pc = inst.scenario.pair_classes()
    for blk in preset:
        _apply_block_coverage(inst.scenario, pc, cov, blk)
    covered = int(cov.sum())
    cap = 1 << 10
    k = inst.k
    while True:
        out = np.zeros((cap, inst.max_blocks * k), dtype=np.int32)
        out_len = np.zeros(cap, dtype=np.int32)
        n_out, status, first_count, nodes = search_kernel(
            k,
            inst.scenario.v,
            inst.perms,
            inst.class_of,
            inst.sizes,
            inst.rep_p,
            inst.rep_q,
            cov,
            covered,
            stop_blocks,
            branch_idx,
            branch_mod,
            0 if limit is None else limit,
            out,
            out_len,
        )
        if status == SEARCH_DEPTH_OVERFLOW:
            raise SearchError("search exceeded the base-block depth bound")
        if status == SEARCH_OUT_OVERFLOW and (limit is None or cap < limit):
            cap *= 4
            continue
        rows = [
            tuple(tuple(int(x) for x in out[i, j * k : (j + 1) * k]) for j in range(out_len[i]))
            for i in range(n_out)
        ]
        return rows, nodes


def _normalize(inst: _Instance, found_blocks) -> BaseBlockSystem:
    system = BaseBlockSystem.from_blocks(inst.scenario, tuple(inst.forced) + tuple(found_blocks))
    return system.normalized()


def _solve_branch(inst: _Instance, branch_idx: int, branch_mod: int, limit) -> list[tuple]:
    rows, _ = _run_kernel(inst, (), branch_idx, branch_mod, 0, limit)
    return [tuple(_normalize(inst, row).base_blocks) for row in rows]


_WORKER_INST: _Instance | None = None


def _worker_init(config: SearchConfig):
    global _WORKER_INST
    _WORKER_INST = _prepare(config)


def _worker_run(args):
    branch_idx, branch_mod, limit = args
    assert _WORKER_INST is not None
    return _solve_branch(_WORKER_INST, branch_idx, branch_mod, limit)


def enumerate_designs(config: SearchConfig):
    """Yield every base-block system for the configuration, in canonical order.

    The result set is exhaustive within the selected branch range and
    deterministic: independent of worker count, and stable across resumed
    runs.  Every emission is expanded and verified before being yielded.
    """
    inst = _prepare(config)
    bi, bn = config.branch
    if not (bn >= 1 and 0 <= bi < bn):
        raise SearchError(f"invalid branch selector {bi}/{bn}")

    if config.checkpoint is not None:
        results = _enumerate_checkpointed(inst, config)
    elif config.jobs > 1:
        results = _enumerate_parallel(inst, config)
    else:
        results = _solve_branch(inst, bi, bn, config.limit)

    ordered = sorted(set(results))
    if config.limit is not None:
        ordered = ordered[: config.limit]
    for base_blocks in ordered:
        system = BaseBlockSystem.from_blocks(inst.scenario, base_blocks)
        design = expand(system)
        report = verify_steiner(design)
        if not report.ok:
            raise SearchError(f"emitted system fails verification: {report.summary()}")
        yield system


def _enumerate_parallel(inst: _Instance, config: SearchConfig) -> list[tuple]:
    bi, bn = config.branch
    jobs = config.jobs
    tasks = [(bi + bn * j, bn * jobs, config.limit) for j in range(jobs)]
    ctx = get_context("fork")
    with ctx.Pool(processes=jobs, initializer=_worker_init, initargs=(config,)) as pool:
        chunks = pool.map(_worker_run, tasks)
    return [row for chunk in chunks for row in chunk]


def _enumerate_checkpointed(inst: _Instance, config: SearchConfig) -> list[tuple]:
    """Two-level prefix walk with a resumable completed-prefix log."""
    bi, bn = config.branch
    path = Path(config.checkpoint)
    done: set[tuple[int, ...]] = set()
    if path.exists():
        for line in path.read_text().splitlines():
            nums = tuple(int(x) for x in line.split())
            if nums:
                done.add(nums)
    results: list[tuple] = []
    firsts, _ = _run_kernel(inst, (), bi, bn, 1, None)
    with path.open("a") as log:
        for head in firsts:
            if not head:  # forced blocks already complete the system
                results.append(tuple(_normalize(inst, ()).base_blocks))
                continue
            (first,) = head
            seconds, _ = _run_kernel(inst, (first,), 0, 1, 1, None)
            for row in seconds:
                if not row:  # the first block already completes the system
                    results.append(tuple(_normalize(inst, (first,)).base_blocks))
                    continue
                (second,) = row
                prefix = tuple(sorted(first)) + tuple(sorted(second))
                if prefix in done:
                    continue
                tails, _ = _run_kernel(inst, (first, second), 0, 1, 0, config.limit)
                for tail in tails:
                    results.append(tuple(_normalize(inst, (first, second) + tail).base_blocks))
                log.write(" ".join(str(x) for x in prefix) + "\n")
                log.flush()
                done.add(prefix)
    return results


# ---------------------------------------------------------------------------
# Independent oracle: no pruning, no symmetry reduction beyond orbit dedup.

ORACLE_CAP = 100_000


def brute_force_oracle(scenario: ActionScenario, k: int) -> list[BaseBlockSystem]:
    """Exhaustive reference enumeration by naive recursion over block orbits.

    Only valid below a hard instance cap; used to cross-check the engine.
    """
    v = scenario.v
    ok, reason = admissible(v, k)
    if not ok:
        raise InadmissibleParameters(f"S(2,{k},{v}) is inadmissible: {reason}")
    total = 1
    for i in range(k):
        total = total * (v - i) // (i + 1)
    if total > ORACLE_CAP:
        raise SearchError(f"oracle cap exceeded: C({v},{k}) = {total} > {ORACLE_CAP}")

    pc = scenario.pair_classes()
    orbits: dict[tuple, np.ndarray] = {}
    for cand in itertools.combinations(range(v), k):
        rep = scenario.orbit_rep(cand)
        if rep in orbits:
            continue
        orbit_len = len(scenario.block_orbit(rep))
        delta = np.zeros(pc.count, dtype=np.int64)
        for p, q in itertools.combinations(rep, 2):
            delta[pc.class_of[p, q]] += 1
        delta *= orbit_len
        if (delta % pc.sizes != 0).any() or (delta // pc.sizes > 1).any():
            continue
        orbits[rep] = (delta // pc.sizes).astype(np.uint8)

    reps = sorted(orbits)
    deltas = [orbits[r] for r in reps]
    by_class: list[list[int]] = [[] for _ in range(pc.count)]
    for i, delta in enumerate(deltas):
        for c in np.nonzero(delta)[0]:
            by_class[c].append(i)
    found: list[BaseBlockSystem] = []

    # each exact cover is reached along exactly one path: the lowest
    # uncovered class determines which of its orbits must come next
    def recurse(cov: np.ndarray, chosen: list[int]) -> None:
        c = 0
        while c < pc.count and cov[c]:
            c += 1
        if c == pc.count:
            found.append(BaseBlockSystem.from_blocks(scenario, sorted(reps[i] for i in chosen)))
            return
        for i in by_class[c]:
            if ((cov + deltas[i]) > 1).any():
                continue
            chosen.append(i)
            recurse(cov + deltas[i], chosen)
            chosen.pop()

    recurse(np.zeros(pc.count, dtype=np.uint8), [])
    return sorted(found, key=lambda s: s.base_blocks)


# ---------------------------------------------------------------------------
# Isomorphism classes with fingerprint prefilter


@dataclass(frozen=True)
class IsoClass:
    representative: int  # index into the input list
    members: tuple[int, ...]
    certificate_key: bytes


def isomorphism_classes(designs) -> list[IsoClass]:
    """Partition designs into isomorphism classes.

    Fingerprints only route the work: designs with different fingerprints
    are never compared exactly, while equal-fingerprint groups are decided
    by canonical certificates.
    """
    designs = list(designs)
    if not designs:
        return []
    params = {(d.v, d.k) for d in designs}
    if len(params) > 1:
        raise SearchError(f"mixed parameters in isomorphism classification: {sorted(params)}")
    by_fingerprint: dict[tuple, list[int]] = {}
    for i, d in enumerate(designs):
        by_fingerprint.setdefault(fingerprint(d).counts, []).append(i)
    classes: dict[bytes, list[int]] = {}
    for group in by_fingerprint.values():
        for i in group:
            key = canonical_certificate(designs[i]).key
            classes.setdefault(key, []).append(i)
    return sorted(
        (IsoClass(representative=members[0], members=tuple(members), certificate_key=key)
         for key, members in classes.items()),
        key=lambda c: c.representative,
    )
