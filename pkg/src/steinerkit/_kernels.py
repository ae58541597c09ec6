"""Numba-compiled inner loops for the fingerprint census and the search.

Everything here works on flat numpy arrays so it can run under numba's
nopython mode.  If numba is unavailable the same functions run as plain
Python: identical results, drastically slower, and only exercised by the
small test instances.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def census_kernel(blockmat, pair_block, disjoint, v, k, pair_hist):
    """Local configuration census over a verified S(2,k,v).

    For every block l, ordered triple (y, z, w) of distinct points of l,
    and point x off l: with m the block through (x, y) and t the block
    through (x, w), the key counts u in m minus {x, y} whose block through
    (u, z) is disjoint from t.  Returns the histogram over keys 0..k-2 and
    fills pair_hist[y, z, key] with the census restricted to each ordered
    anchor pair (a relabeling-invariant pair coloring for the canonizer).
    """
    b = blockmat.shape[0]
    hist = np.zeros(k - 1, dtype=np.int64)
    on_l = np.zeros(v, dtype=np.uint8)
    for l in range(b):
        for idx in range(k):
            on_l[blockmat[l, idx]] = 1
        for iy in range(k):
            y = blockmat[l, iy]
            for iz in range(k):
                if iz == iy:
                    continue
                z = blockmat[l, iz]
                for iw in range(k):
                    if iw == iy or iw == iz:
                        continue
                    w = blockmat[l, iw]
                    for x in range(v):
                        if on_l[x]:
                            continue
                        m = pair_block[x, y]
                        t = pair_block[x, w]
                        key = 0
                        for iu in range(k):
                            u = blockmat[m, iu]
                            if u == x or u == y:
                                continue
                            if disjoint[pair_block[u, z], t]:
                                key += 1
                        hist[key] += 1
                        pair_hist[y, z, key] += 1
        for idx in range(k):
            on_l[blockmat[l, idx]] = 0
    return hist


# ---------------------------------------------------------------------------
# Exact-cover search over pair classes.
#
# The DFS always targets the lowest-index uncovered pair class and extends
# candidate blocks point by point from that class's representative pair.
# A completed candidate is accepted only if its orbit covers every touched
# class exactly once (multiplicity * orbit_length == class_size).

SEARCH_OK = 0
SEARCH_OUT_OVERFLOW = 1
SEARCH_DEPTH_OVERFLOW = 2


@njit(cache=True)
def search_kernel(
    k,
    v,
    perms,  # (ng, v) int32
    pair_class,  # (v, v) int16
    class_size,  # (nc,) int32
    rep_p,  # (nc,) int32
    rep_q,  # (nc,) int32
    cov,  # (nc,) uint8, modified in place and restored before return
    covered_init,  # number of ones in cov
    stop_blocks,  # emit prefixes once this many blocks are chosen (0 = run to completion)
    branch_idx,
    branch_mod,  # first-block candidate filter: keep counter % branch_mod == branch_idx
    limit,  # stop after this many emissions (0 = no limit)
    out,  # (cap, MB * k) int32 output rows
    out_len,  # (cap,) int32 number of blocks per emission
):
    ng = perms.shape[0]
    nc = class_size.shape[0]
    mb = out.shape[1] // k
    cap = out.shape[0]

    blk = np.zeros((mb, k), dtype=np.int32)
    slot_cls = np.zeros((mb, k, k), dtype=np.int16)
    slot_ncls = np.zeros((mb, k), dtype=np.int32)
    cursor = np.zeros((mb, k), dtype=np.int32)
    applied = np.zeros((mb, 32), dtype=np.int16)
    applied_n = np.zeros(mb, dtype=np.int32)
    mult = np.zeros(nc, dtype=np.int16)
    in_blk = np.zeros(v, dtype=np.uint8)
    # classes of full orbit size: a block whose pair classes are all distinct
    # and all full-size forces a trivial stabilizer, so its exact-coverage
    # test needs no stabilizer scan
    is_full = np.zeros(nc, dtype=np.uint8)
    for c in range(nc):
        if class_size[c] == ng:
            is_full[c] = 1
    special = 0  # touched classes that are short or repeated, current block

    n_out = 0
    nodes = 0
    first_count = 0
    status = SEARCH_OK

    covered = covered_init
    bi = 0
    si = 0
    entering = True  # True: start block bi (pick target class); False: resume slot si

    while True:
        if entering:
            # emit when everything is covered, or at the prefix horizon
            if covered == nc or (stop_blocks > 0 and bi >= stop_blocks):
                if n_out >= cap:
                    status = SEARCH_OUT_OVERFLOW
                    break
                for i in range(bi):
                    for j in range(k):
                        out[n_out, i * k + j] = blk[i, j]
                out_len[n_out] = bi
                n_out += 1
                if limit > 0 and n_out >= limit:
                    break
                entering = False
                bi -= 1
                if bi < 0:
                    break
                covered -= _unapply(cov, applied, applied_n, bi)
                si = k - 1
                special -= _undo_slot(mult, slot_cls, slot_ncls, is_full, bi, si)
                cursor[bi, si] = blk[bi, si] + 1
                continue
            if bi >= mb:
                status = SEARCH_DEPTH_OVERFLOW
                break
            target = -1
            for c in range(nc):
                if cov[c] == 0:
                    target = c
                    break
            p0 = rep_p[target]
            q0 = rep_q[target]
            blk[bi, 0] = p0
            blk[bi, 1] = q0
            c0 = pair_class[p0, q0]
            slot_cls[bi, 1, 0] = c0
            slot_ncls[bi, 1] = 1
            mult[c0] += 1
            if is_full[c0] == 0:
                special += 1
            si = 2
            cursor[bi, si] = 0
            entering = False
            continue

        # scan candidates for slot si of block bi
        p = cursor[bi, si]
        lo = blk[bi, si - 1] + 1 if si > 2 else 0
        if p < lo:
            p = lo
        hi = v - (k - 1 - si)  # leave room for the remaining slots
        advanced = False
        while p < hi:
            if p == blk[bi, 0] or p == blk[bi, 1]:
                p += 1
                continue
            nodes += 1
            ok = True
            nadd = 0
            for s in range(si):
                c = pair_class[p, blk[bi, s]]
                if cov[c] != 0:
                    ok = False
                    break
                slot_cls[bi, si, nadd] = c
                nadd += 1
            if ok:
                blk[bi, si] = p
                slot_ncls[bi, si] = nadd
                for i in range(nadd):
                    c = slot_cls[bi, si, i]
                    mult[c] += 1
                    if mult[c] >= 2 or is_full[c] == 0:
                        special += 1
                cursor[bi, si] = p + 1
                advanced = True
                break
            p += 1
        if not advanced:
            # slot exhausted: backtrack
            si -= 1
            if si >= 2:
                special -= _undo_slot(mult, slot_cls, slot_ncls, is_full, bi, si)
                cursor[bi, si] = blk[bi, si] + 1
                continue
            # pop the whole block frame
            special -= _undo_slot(mult, slot_cls, slot_ncls, is_full, bi, 1)
            bi -= 1
            if bi < 0:
                break
            covered -= _unapply(cov, applied, applied_n, bi)
            si = k - 1
            special -= _undo_slot(mult, slot_cls, slot_ncls, is_full, bi, si)
            cursor[bi, si] = blk[bi, si] + 1
            continue

        if si < k - 1:
            si += 1
            cursor[bi, si] = 0
            continue

        # block complete: exact-coverage test.  All-distinct full-size
        # classes force a trivial stabilizer, so only blocks touching a
        # short or repeated class need the stabilizer scan.
        feasible = True
        if special > 0:
            for j in range(k):
                in_blk[blk[bi, j]] = 1
            stab = 0
            for g in range(ng):
                inside = True
                for j in range(k):
                    if in_blk[perms[g, blk[bi, j]]] == 0:
                        inside = False
                        break
                if inside:
                    stab += 1
            for j in range(k):
                in_blk[blk[bi, j]] = 0
            orbit_len = ng // stab
            for s in range(1, k):
                for i in range(slot_ncls[bi, s]):
                    c = slot_cls[bi, s, i]
                    if mult[c] * orbit_len != class_size[c]:
                        feasible = False
                        break
                if not feasible:
                    break

        if feasible and bi == 0 and branch_mod > 1:
            if first_count % branch_mod != branch_idx:
                feasible = False
            first_count += 1

        if not feasible:
            special -= _undo_slot(mult, slot_cls, slot_ncls, is_full, bi, si)
            cursor[bi, si] = blk[bi, si] + 1
            continue

        # apply coverage (each touched class becomes exactly 1) and descend
        na = 0
        for s in range(1, k):
            for i in range(slot_ncls[bi, s]):
                c = slot_cls[bi, s, i]
                if cov[c] == 0:
                    cov[c] = 1
                    applied[bi, na] = c
                    na += 1
        applied_n[bi] = na
        covered += na
        bi += 1
        entering = True

    # restore coverage for any blocks still applied
    for i in range(bi):
        _unapply(cov, applied, applied_n, i)
    return n_out, status, first_count, nodes


@njit(cache=True)
def _undo_slot(mult, slot_cls, slot_ncls, is_full, bi, si):
    special = 0
    for i in range(slot_ncls[bi, si]):
        c = slot_cls[bi, si, i]
        if mult[c] >= 2 or is_full[c] == 0:
            special += 1
        mult[c] -= 1
    slot_ncls[bi, si] = 0
    return special


@njit(cache=True)
def _unapply(cov, applied, applied_n, bi):
    n = applied_n[bi]
    for i in range(n):
        cov[applied[bi, i]] = 0
    applied_n[bi] = 0
    return n
