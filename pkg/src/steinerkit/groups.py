"""Finite groups as 0-based Cayley tables.

Every group used by the toolkit is materialized as an order-n Cayley table
with the identity at index 0.  Construction is fully validated: Latin
property, two-sided identity, two-sided inverses, and associativity over
all n^3 triples (n is capped at 256, so the cubic check is cheap).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_ORDER = 256


class GroupError(ValueError):
    """Invalid group specification or parameters."""


class GroupValidationError(GroupError):
    """A raw table failed a group axiom.

    Attributes:
        axiom: name of the first failing axiom.
        witness: a tuple of element indices witnessing the failure.
    """

    def __init__(self, axiom: str, witness: tuple[int, ...], message: str):
        super().__init__(message)
        self.axiom = axiom
        self.witness = witness


# ---------------------------------------------------------------------------
# Specifications


@dataclass(frozen=True)
class Cyclic:
    """Z_n with element i = residue i and addition mod n."""

    n: int

    @property
    def label(self) -> str:
        return f"C{self.n}"


@dataclass(frozen=True)
class DirectProduct:
    """A x B with element index iA * |B| + iB."""

    left: GroupSpec
    right: GroupSpec

    @property
    def label(self) -> str:
        return f"{self.left.label}x{self.right.label}"


@dataclass(frozen=True)
class SemidirectCyclic:
    """Z_m x| Z_c with twist t, requiring t^c = 1 (mod m).

    Pairs (a, b) multiply as (a, b)(x, y) = (a + t^b x mod m, b + y mod c).
    When gcd(m, c) = 1 the element index of (a, b) is the unique
    n in 0..mc-1 with n = a (mod m) and n = b (mod c); otherwise the
    index is a*c + b.
    """

    m: int
    c: int
    t: int

    @property
    def label(self) -> str:
        return f"SD({self.m},{self.c},{self.t})"


@dataclass(frozen=True)
class Heisenberg:
    """Upper unitriangular 3x3 matrices over Z_p, p prime.

    Triples (a, b, c) with index a*p^2 + b*p + c and product
    (a, b, c)(a', b', c') = (a+a', b+b', c+c'+a*b') mod p.
    """

    p: int

    @property
    def label(self) -> str:
        return f"H{self.p}"


@dataclass(frozen=True)
class SpecialLinear25:
    """SL(2,5): 2x2 matrices over Z_5 with determinant 1.

    The identity matrix is element 0; the remaining 119 matrices follow in
    lexicographic order of the flattened matrix (a, b, c, d).  This is the
    toolkit's own canonical order, not tied to any external system.
    """

    @property
    def label(self) -> str:
        return "SL25"


@dataclass(frozen=True)
class Imported:
    """A Cayley table loaded from a table file."""

    path: str

    @property
    def label(self) -> str:
        return f"file:{self.path}"


GroupSpec = Cyclic | DirectProduct | SemidirectCyclic | Heisenberg | SpecialLinear25 | Imported


# ---------------------------------------------------------------------------
# Tables


@dataclass(frozen=True)
class GroupTable:
    """A validated finite group: n x n Cayley table, identity 0, inverses."""

    table: np.ndarray
    inverses: np.ndarray
    spec: GroupSpec | None = None

    @property
    def order(self) -> int:
        return self.table.shape[0]

    @property
    def identity(self) -> int:
        return 0

    def mul(self, g: int, h: int) -> int:
        return int(self.table[g, h])

    def inv(self, g: int) -> int:
        return int(self.inverses[g])

    @property
    def label(self) -> str:
        return self.spec.label if self.spec is not None else f"table({self.order})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupTable):
            return NotImplemented
        return np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash(self.table.tobytes())


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.int32)
    arr.setflags(write=False)
    return arr


def validate_group(table, spec: GroupSpec | None = None) -> GroupTable:
    """Check every group axiom on a raw n x n table.

    Returns a GroupTable, or raises GroupValidationError naming the first
    failing axiom together with a witness tuple.
    """
    arr = np.asarray(table)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise GroupValidationError("shape", (), f"table must be square and non-empty, got shape {arr.shape}")
    n = arr.shape[0]
    if n > MAX_ORDER:
        raise GroupValidationError("order", (n,), f"order {n} exceeds supported maximum {MAX_ORDER}")
    if not np.issubdtype(arr.dtype, np.integer):
        arr = arr.astype(np.int64)
        if not np.array_equal(arr, np.asarray(table)):
            raise GroupValidationError("range", (), "table entries must be integers")
    if arr.min() < 0 or arr.max() >= n:
        g, h = np.argwhere((arr < 0) | (arr >= n))[0]
        raise GroupValidationError(
            "range", (int(g), int(h)), f"entry table[{g}][{h}] = {arr[g, h]} out of range 0..{n - 1}"
        )

    ident = np.arange(n)
    if not np.array_equal(arr[0], ident):
        h = int(np.argwhere(arr[0] != ident)[0][0])
        raise GroupValidationError("identity", (0, h), f"row 0 is not the identity: table[0][{h}] = {arr[0, h]}")
    if not np.array_equal(arr[:, 0], ident):
        g = int(np.argwhere(arr[:, 0] != ident)[0][0])
        raise GroupValidationError("identity", (g, 0), f"column 0 is not the identity: table[{g}][0] = {arr[g, 0]}")

    sorted_rows = np.sort(arr, axis=1)
    if not (sorted_rows == ident).all():
        g = int(np.argwhere((sorted_rows != ident).any(axis=1))[0][0])
        raise GroupValidationError("latin-row", (g,), f"row {g} is not a permutation of 0..{n - 1}")
    sorted_cols = np.sort(arr, axis=0)
    if not (sorted_cols == ident[:, None]).all():
        h = int(np.argwhere((sorted_cols != ident[:, None]).any(axis=0))[0][0])
        raise GroupValidationError("latin-column", (h,), f"column {h} is not a permutation of 0..{n - 1}")

    # (x y) z == x (y z) for all triples; cubic but n <= 256 keeps it cheap.
    small = arr.astype(np.int32)
    lhs = small[small, :]  # lhs[x, y, z] = t[t[x, y], z]
    rhs = small[:, small]  # rhs[x, y, z] = t[x, t[y, z]]
    if not np.array_equal(lhs, rhs):
        x, y, z = np.argwhere(lhs != rhs)[0]
        raise GroupValidationError(
            "associativity",
            (int(x), int(y), int(z)),
            f"({x} {y}) {z} = {lhs[x, y, z]} but {x} ({y} {z}) = {rhs[x, y, z]}",
        )

    inverses = np.empty(n, dtype=np.int64)
    for g in range(n):
        hits = np.nonzero(arr[g] == 0)[0]
        inv = int(hits[0])
        if arr[inv, g] != 0:
            raise GroupValidationError("inverses", (g, inv), f"{inv} is a right but not a left inverse of {g}")
        inverses[g] = inv

    return GroupTable(table=_freeze(arr), inverses=_freeze(inverses), spec=spec)


# ---------------------------------------------------------------------------
# Constructions


def _cyclic_table(n: int) -> np.ndarray:
    i = np.arange(n)
    return (i[:, None] + i[None, :]) % n


def _build_cyclic(spec: Cyclic) -> np.ndarray:
    if spec.n < 1:
        raise GroupError(f"cyclic order must be positive, got {spec.n}")
    return _cyclic_table(spec.n)


def _build_product(spec: DirectProduct) -> np.ndarray:
    ta = build_group(spec.left).table
    tb = build_group(spec.right).table
    na, nb = len(ta), len(tb)
    if na * nb > MAX_ORDER:
        raise GroupError(f"product order {na * nb} exceeds supported maximum {MAX_ORDER}")
    # index = iA * |B| + iB
    big = ta.astype(np.int64)[:, None, :, None] * nb + tb.astype(np.int64)[None, :, None, :]
    return big.reshape(na * nb, na * nb)


def _build_semidirect(spec: SemidirectCyclic) -> np.ndarray:
    m, c, t = spec.m, spec.c, spec.t
    if m < 1 or c < 1:
        raise GroupError(f"semidirect orders must be positive, got m={m}, c={c}")
    if not (1 <= t < m) and not (m == 1 and t == 1):
        raise GroupError(f"twist must satisfy 1 <= t < m, got t={t}, m={m}")
    if pow(t, c, m) != 1 % m:
        raise GroupError(f"invalid twist: {t}^{c} = {pow(t, c, m)} (mod {m}), expected 1")
    n = m * c
    if n > MAX_ORDER:
        raise GroupError(f"order {n} exceeds supported maximum {MAX_ORDER}")
    coprime = np.gcd(m, c) == 1
    if coprime:
        index = {(x % m, x % c): x for x in range(n)}
    else:
        index = {(a, b): a * c + b for a in range(m) for b in range(c)}
    pair = {v: key for key, v in index.items()}
    tpow = [pow(t, b, m) for b in range(c)]
    tab = np.empty((n, n), dtype=np.int64)
    for g in range(n):
        a, b = pair[g]
        tb = tpow[b]
        for h in range(n):
            x, y = pair[h]
            tab[g, h] = index[((a + tb * x) % m, (b + y) % c)]
    return tab


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p**0.5) + 1))


def _build_heisenberg(spec: Heisenberg) -> np.ndarray:
    p = spec.p
    if not _is_prime(p):
        raise GroupError(f"Heisenberg parameter must be prime, got {p}")
    n = p**3
    if n > MAX_ORDER:
        raise GroupError(f"order {n} exceeds supported maximum {MAX_ORDER}")
    tab = np.empty((n, n), dtype=np.int64)
    for g in range(n):
        a, rem = divmod(g, p * p)
        b, cc = divmod(rem, p)
        for h in range(n):
            a2, rem2 = divmod(h, p * p)
            b2, c2 = divmod(rem2, p)
            tab[g, h] = ((a + a2) % p) * p * p + ((b + b2) % p) * p + (cc + c2 + a * b2) % p
    return tab


def _build_sl25() -> np.ndarray:
    mats = [(1, 0, 0, 1)]
    for a in range(5):
        for b in range(5):
            for c in range(5):
                for d in range(5):
                    if (a * d - b * c) % 5 == 1 and (a, b, c, d) != (1, 0, 0, 1):
                        mats.append((a, b, c, d))
    index = {mat: i for i, mat in enumerate(mats)}
    n = len(mats)
    tab = np.empty((n, n), dtype=np.int64)
    for i, (a, b, c, d) in enumerate(mats):
        for j, (e, f, g, h) in enumerate(mats):
            prod = ((a * e + b * g) % 5, (a * f + b * h) % 5, (c * e + d * g) % 5, (c * f + d * h) % 5)
            tab[i, j] = index[prod]
    return tab


def build_group(spec: GroupSpec) -> GroupTable:
    """Realize a specification as a validated Cayley table."""
    if isinstance(spec, Cyclic):
        raw = _build_cyclic(spec)
    elif isinstance(spec, DirectProduct):
        raw = _build_product(spec)
    elif isinstance(spec, SemidirectCyclic):
        raw = _build_semidirect(spec)
    elif isinstance(spec, Heisenberg):
        raw = _build_heisenberg(spec)
    elif isinstance(spec, SpecialLinear25):
        raw = _build_sl25()
    elif isinstance(spec, Imported):
        raw = load_table_file(spec.path)
    else:
        raise GroupError(f"unknown group spec {spec!r}")
    return validate_group(raw, spec=spec)


# ---------------------------------------------------------------------------
# Table files: line 1 holds n, then n rows of n space-separated entries.


def load_table_file(path: str | Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise GroupError(f"{path}: empty table file")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise GroupError(f"{path}: first line must be the group order, got {lines[0]!r}") from None
    if len(lines) != n + 1:
        raise GroupError(f"{path}: expected {n} table rows, found {len(lines) - 1}")
    rows = []
    for i, ln in enumerate(lines[1:]):
        row = [int(x) for x in ln.split()]
        if len(row) != n:
            raise GroupError(f"{path}: row {i} has {len(row)} entries, expected {n}")
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def save_table_file(group: GroupTable, path: str | Path) -> None:
    n = group.order
    out = [str(n)]
    for g in range(n):
        out.append(" ".join(str(int(x)) for x in group.table[g]))
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Spec string grammar: C48, SD(19,3,7), H3, SL25, file:PATH, and x-products.

_CYCLIC_RE = re.compile(r"[CZ](\d+)$", re.IGNORECASE)
_SD_RE = re.compile(r"SD\((\d+),(\d+),(\d+)\)$", re.IGNORECASE)
_HEIS_RE = re.compile(r"H(\d+)$", re.IGNORECASE)


def _split_product(s: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "xX" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return parts


def parse_group_spec(text: str) -> GroupSpec:
    """Parse a group spec string such as 'C48', 'SD(19,3,7)', or 'C5xC31'."""
    s = text.strip().replace(" ", "")
    if not s:
        raise GroupError("empty group spec")
    if s.startswith("file:"):
        return Imported(s[5:])
    parts = _split_product(s)
    if len(parts) > 1:
        spec = parse_group_spec(parts[0])
        for part in parts[1:]:
            spec = DirectProduct(spec, parse_group_spec(part))
        return spec
    if s.upper() == "SL25":
        return SpecialLinear25()
    m = _CYCLIC_RE.fullmatch(s)
    if m:
        return Cyclic(int(m.group(1)))
    m = _SD_RE.fullmatch(s)
    if m:
        return SemidirectCyclic(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = _HEIS_RE.fullmatch(s)
    if m:
        return Heisenberg(int(m.group(1)))
    raise GroupError(f"unrecognized group spec {text!r}")
