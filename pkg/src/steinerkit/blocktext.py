"""Parsing and printing of block lists in orbit-label notation.

Grammar:  LIST  := '[' BLOCK (',' BLOCK)* ']'
          BLOCK := '[' ITEM (',' ITEM)* ']'
          ITEM  := INT PRIME{0..2} | 'inf' | the infinity sign
Whitespace and math-dollar decorations are ignored everywhere.  Lenient
mode (the default) additionally strips stray TeX artifacts such as
backslash commands and braces, and downgrades wrong block sizes to a
warning; strict mode rejects both.
"""

from __future__ import annotations

import re
import warnings

from .actions import INFINITY_LABEL, PointSpace


class BlockTextError(ValueError):
    """Block-list text violates the grammar or names an invalid point."""


_TEX_ARTIFACTS = re.compile(r"\\[a-zA-Z]+|[{}]")
_TOKEN = re.compile(r"\[|\]|,|\d+'{0,3}|inf|∞")


def _tokens(text: str, strict: bool) -> list[str]:
    s = text.replace("$", "")
    if not strict:
        s = _TEX_ARTIFACTS.sub(" ", s)
    stripped = re.sub(r"\s+", "", s)
    toks = _TOKEN.findall(stripped)
    if "".join(toks) != stripped:
        junk = _TOKEN.sub("", stripped)
        raise BlockTextError(f"unrecognized characters in block list: {junk[:40]!r}")
    return toks


def parse_blocks(
    text: str,
    space: PointSpace,
    expected_k: int | None = None,
    strict: bool = False,
) -> list[tuple[int, ...]]:
    """Parse a block-list text into sorted tuples of global point indices."""
    toks = _tokens(text, strict)
    if not toks or toks[0] != "[":
        raise BlockTextError("block list must start with '['")
    pos = 0
    depth = 0
    blocks: list[tuple[int, ...]] = []
    current: list[int] | None = None
    expect_item = False
    while pos < len(toks):
        t = toks[pos]
        pos += 1
        if t == "[":
            depth += 1
            if depth > 2:
                raise BlockTextError("nesting deeper than blocks-in-list")
            if depth == 2:
                current = []
            expect_item = depth == 2
        elif t == "]":
            if depth == 2:
                assert current is not None
                blocks.append(_finish_block(current, expected_k, strict))
                current = None
            depth -= 1
            if depth < 0:
                raise BlockTextError("unbalanced ']'")
        elif t == ",":
            expect_item = depth == 2
        else:
            if depth != 2 or current is None:
                if depth == 1:
                    raise BlockTextError(f"item {t!r} outside a block")
                raise BlockTextError(f"unexpected item {t!r}")
            try:
                current.append(space.point(_normalize_item(t)))
            except ValueError as exc:
                raise BlockTextError(str(exc)) from None
            expect_item = False
    if depth != 0:
        raise BlockTextError("unbalanced '['")
    return blocks


def _normalize_item(tok: str) -> str:
    if tok in ("inf", INFINITY_LABEL):
        return INFINITY_LABEL
    return tok


def _finish_block(points: list[int], expected_k: int | None, strict: bool) -> tuple[int, ...]:
    if not points:
        raise BlockTextError("empty block")
    if len(set(points)) != len(points):
        raise BlockTextError(f"duplicate point within block {sorted(points)}")
    if expected_k is not None and len(points) != expected_k:
        msg = f"block has {len(points)} points, expected {expected_k}"
        if strict:
            raise BlockTextError(msg)
        warnings.warn(msg, stacklevel=3)
    return tuple(sorted(points))


def parse_point(label: str, space: PointSpace) -> int:
    try:
        return space.point(label)
    except ValueError as exc:
        raise BlockTextError(str(exc)) from None


def emit_block(block, space: PointSpace) -> str:
    pts = sorted(int(p) for p in block)
    return "[" + ", ".join(space.label(p) for p in pts) + "]"


def emit_blocks(blocks, space: PointSpace) -> str:
    """Canonical text: points sorted within each block, single spaces."""
    return "[" + ", ".join(emit_block(b, space) for b in blocks) + "]"
