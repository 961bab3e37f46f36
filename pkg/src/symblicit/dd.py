"""Multi-terminal decision diagrams over fixed-width state codes.

A diagram maps every ``nbits``-wide state code to a non-negative integer
(a predecessor count) or to the distinguished ``UNSEEN`` terminal.  Nodes
live in a flat arena owned by :class:`MtbddManager`; a node reference is an
``int`` index into it.  Level 0 tests the most significant bit of the code,
so the root of a diagram tests "bit 0".

Only point operations are provided: looking up one code and rebuilding the
single path of one code.  Updates are persistent, old roots keep denoting
the old function until the arena is compacted.
"""

from __future__ import annotations

from typing import Iterable, Iterator

__all__ = ["UNSEEN", "DDError", "MtbddManager"]


class _Unseen:
    __slots__ = ()

    def __repr__(self) -> str:
        return "UNSEEN"

    def __reduce__(self):
        return "UNSEEN"


UNSEEN = _Unseen()


class DDError(RuntimeError):
    pass


class MtbddManager:
    """Arena, unique table and terminal table for diagrams of one bit width.

    ``node_budget`` is the arena size above which :meth:`maybe_collect`
    compacts the arena; ``None`` disables automatic collection.
    """

    def __init__(self, nbits: int, node_budget: int | None = 4_000_000):
        if nbits < 0:
            raise DDError("bit width must be non-negative")
        self.nbits = nbits
        self.node_budget = node_budget
        self.collections = 0
        self.peak_arena = 0
        self._reset()

    def _reset(self) -> None:
        # Terminals have level == nbits; their value sits in _value.
        self._level: list[int] = []
        self._low: list[int] = []
        self._high: list[int] = []
        self._value: list[object] = []
        self._unique: list[dict[int, int]] = [dict() for _ in range(self.nbits)]
        self._terminals: dict[object, int] = {}
        self.unseen = self.terminal(UNSEEN)

    # -- construction -----------------------------------------------------

    def terminal(self, value: object) -> int:
        if value is not UNSEEN and (not isinstance(value, int) or value < 0):
            raise DDError(f"terminal values are non-negative integers, got {value!r}")
        ref = self._terminals.get(value)
        if ref is None:
            ref = len(self._level)
            self._level.append(self.nbits)
            self._low.append(-1)
            self._high.append(-1)
            self._value.append(value)
            self._terminals[value] = ref
        return ref

    def mk(self, level: int, low: int, high: int) -> int:
        """Canonical node testing bit ``level`` (reduction and hash-consing)."""
        if low == high:
            return low
        table = self._unique[level]
        key = (low << 32) | high
        ref = table.get(key)
        if ref is None:
            ref = len(self._level)
            self._level.append(level)
            self._low.append(low)
            self._high.append(high)
            self._value.append(None)
            table[key] = ref
        return ref

    # -- queries ----------------------------------------------------------

    def is_terminal(self, ref: int) -> bool:
        return self._level[ref] == self.nbits

    def value(self, ref: int) -> object:
        if not self.is_terminal(ref):
            raise DDError(f"node {ref} is not a terminal")
        return self._value[ref]

    def node(self, ref: int) -> tuple[int, int, int]:
        """``(level, low, high)`` of an internal node."""
        return self._level[ref], self._low[ref], self._high[ref]

    def lookup(self, root: int, code: int) -> object:
        """Count stored for ``code``, or ``UNSEEN``."""
        level, low, high = self._level, self._low, self._high
        n = self.nbits
        top = n - 1
        ref = root
        lv = level[ref]
        while lv != n:
            ref = high[ref] if (code >> (top - lv)) & 1 else low[ref]
            lv = level[ref]
        return self._value[ref]

    # -- point updates ----------------------------------------------------

    def set_count(self, root: int, code: int, count: object) -> int:
        """Root of the diagram equal to ``root`` except that ``code`` maps to ``count``."""
        n = self.nbits
        if code < 0 or code >> n:
            raise DDError(f"state code {code} does not fit in {n} bits")
        level, low, high = self._level, self._low, self._high
        top = n - 1
        # Sibling subtrees along the path of `code`, one per level.
        others = [0] * n
        ref = root
        for lv in range(n):
            if level[ref] == lv:
                if (code >> (top - lv)) & 1:
                    others[lv] = low[ref]
                    ref = high[ref]
                else:
                    others[lv] = high[ref]
                    ref = low[ref]
            else:
                others[lv] = ref
        old = self._value[ref]
        if old is count or old == count:
            return root
        cur = self.terminal(count)
        unique = self._unique
        for lv in range(top, -1, -1):
            other = others[lv]
            if (code >> (top - lv)) & 1:
                lo, hi = other, cur
            else:
                lo, hi = cur, other
            if lo == hi:
                cur = lo
                continue
            table = unique[lv]
            key = (lo << 32) | hi
            r = table.get(key)
            if r is None:
                r = len(level)
                level.append(lv)
                low.append(lo)
                high.append(hi)
                self._value.append(None)
                table[key] = r
            cur = r
        return cur

    def update_many(self, root: int, updates: dict[int, object]) -> int:
        """Apply several point updates at once.

        Equivalent to calling :meth:`set_count` for each entry, but every
        shared path prefix is rebuilt only once, which keeps garbage low.
        """
        if not updates:
            return root
        n = self.nbits
        top = n - 1
        items = sorted(updates.items())
        if items[0][0] < 0 or items[-1][0] >> n:
            raise DDError(f"state codes must fit in {n} bits")
        codes = [c for c, _ in items]
        level, low, high = self._level, self._low, self._high
        mk, terminal = self.mk, self.terminal

        def rec(ref: int, lv: int, i: int, j: int) -> int:
            if lv == n:
                return terminal(items[i][1])
            bit = top - lv
            # first index in [i, j) whose bit `lv` is set
            a, b = i, j
            while a < b:
                m = (a + b) >> 1
                if (codes[m] >> bit) & 1:
                    b = m
                else:
                    a = m + 1
            if level[ref] == lv:
                lo, hi = low[ref], high[ref]
            else:
                lo = hi = ref
            if a > i:
                lo = rec(lo, lv + 1, i, a)
            if j > a:
                hi = rec(hi, lv + 1, a, j)
            return mk(lv, lo, hi)

        return rec(root, 0, 0, len(items))

    def increment(self, root: int, code: int) -> int:
        count = self.lookup(root, code)
        if count is UNSEEN:
            raise DDError(f"cannot increment unseen state {code}")
        return self.set_count(root, code, count + 1)

    # -- statistics and maintenance ----------------------------------------

    def _reachable(self, roots: Iterable[int]) -> Iterator[int]:
        n = self.nbits
        level, low, high = self._level, self._low, self._high
        seen: set[int] = set()
        stack = list(roots)
        while stack:
            ref = stack.pop()
            if ref in seen:
                continue
            seen.add(ref)
            yield ref
            if level[ref] != n:
                stack.append(low[ref])
                stack.append(high[ref])

    def node_count(self, root: int) -> int:
        """Number of internal (non-terminal) nodes reachable from ``root``."""
        n = self.nbits
        return sum(1 for r in self._reachable([root]) if self._level[r] != n)

    def arena_size(self) -> int:
        return len(self._level)

    def maybe_collect(self, roots: list[int]) -> list[int]:
        """Compact the arena if it exceeds the node budget; returns the new roots."""
        size = len(self._level)
        if size > self.peak_arena:
            self.peak_arena = size
        if self.node_budget is None or size <= self.node_budget:
            return roots
        return self.collect(roots)

    def collect(self, roots: list[int]) -> list[int]:
        """Mark-and-compact: keep only nodes reachable from ``roots``.

        Every other reference handed out before becomes invalid.
        """
        live = set(self._reachable(roots))
        live.add(self.unseen)
        old = (self._level, self._low, self._high, self._value)
        n = self.nbits
        # Children before parents: sort by decreasing level.
        order = sorted(live, key=lambda r: -old[0][r])
        self._reset()
        remap: dict[int, int] = {}
        for r in order:
            lv = old[0][r]
            if lv == n:
                remap[r] = self.terminal(old[3][r])
            else:
                remap[r] = self.mk(lv, remap[old[1][r]], remap[old[2][r]])
        self.collections += 1
        return [remap[r] for r in roots]

    def check_canonical(self) -> None:
        """Raise ``DDError`` if the arena holds a redundant or duplicated node."""
        n = self.nbits
        seen: set[tuple[int, int, int]] = set()
        for ref in range(len(self._level)):
            lv = self._level[ref]
            if lv == n:
                continue
            lo, hi = self._low[ref], self._high[ref]
            if lo == hi:
                raise DDError(f"node {ref} has identical children")
            if self._level[lo] <= lv or self._level[hi] <= lv:
                raise DDError(f"node {ref} violates the variable order")
            key = (lv, lo, hi)
            if key in seen:
                raise DDError(f"duplicate node {key}")
            seen.add(key)

    def items(self, root: int) -> Iterator[tuple[int, object]]:
        """All ``(code, value)`` pairs with a value other than ``UNSEEN``."""
        n = self.nbits
        level, low, high = self._level, self._low, self._high

        def walk(ref: int, lv: int, prefix: int) -> Iterator[tuple[int, object]]:
            if ref == self.unseen:
                return
            if lv == n:
                yield prefix, self._value[ref]
                return
            if level[ref] == lv:
                yield from walk(low[ref], lv + 1, prefix << 1)
                yield from walk(high[ref], lv + 1, (prefix << 1) | 1)
            else:
                yield from walk(ref, lv + 1, prefix << 1)
                yield from walk(ref, lv + 1, (prefix << 1) | 1)

        yield from walk(root, 0, 0)

    def to_dot(self, root: int, name: str = "mtbdd") -> str:
        """Graphviz source; solid edges lead to the high child, dotted ones to the low child."""
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for ref in sorted(self._reachable([root])):
            if self.is_terminal(ref):
                val = self._value[ref]
                label = "⊥" if val is UNSEEN else str(val)
                lines.append(f'  n{ref} [shape=box, label="{label}"];')
            else:
                lv, lo, hi = self.node(ref)
                lines.append(f'  n{ref} [shape=box, label="bit {lv}"];')
                lines.append(f"  n{ref} -> n{hi};")
                lines.append(f"  n{ref} -> n{lo} [style=dotted];")
        lines.append("}")
        return "\n".join(lines)
