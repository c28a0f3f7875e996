"""Online suffix automaton over token sequences.

Every state stands for a class of substrings sharing one set of end positions.
Besides the usual transitions and suffix links, each state records whether it is a
clone, which is enough to recover end positions: a non-clone state created while
appending token i ends exactly at i + 1, which is also its length.
"""

from collections.abc import Iterable, Sequence

from revstream_core.models import Token


class SuffixAutomaton:
    def __init__(self, tokens: Iterable[Token] = ()) -> None:
        self.length: list[int] = [0]
        self.link: list[int] = [-1]
        self.next: list[dict[Token, int]] = [{}]
        self.is_clone: list[bool] = [False]
        self.last = 0
        self.size = 0
        self._rightmost: list[int] | None = None
        self._children: list[list[int]] | None = None
        for token in tokens:
            self.extend(token)

    def extend(self, token: Token) -> None:
        current = len(self.length)
        self.length.append(self.length[self.last] + 1)
        self.link.append(0)
        self.next.append({})
        self.is_clone.append(False)

        p = self.last
        while p != -1 and token not in self.next[p]:
            self.next[p][token] = current
            p = self.link[p]

        if p != -1:
            q = self.next[p][token]
            if self.length[p] + 1 == self.length[q]:
                self.link[current] = q
            else:
                clone = len(self.length)
                self.length.append(self.length[p] + 1)
                self.link.append(self.link[q])
                self.next.append(dict(self.next[q]))
                self.is_clone.append(True)
                while p != -1 and self.next[p].get(token) == q:
                    self.next[p][token] = clone
                    p = self.link[p]
                self.link[q] = clone
                self.link[current] = clone

        self.last = current
        self.size += 1
        self._rightmost = None
        self._children = None

    def walk(self, tokens: Sequence[Token], state: int = 0) -> int | None:
        for token in tokens:
            nxt = self.next[state].get(token)
            if nxt is None:
                return None
            state = nxt
        return state

    def is_substring(self, tokens: Sequence[Token]) -> bool:
        return self.walk(tokens) is not None

    def rightmost_end(self, state: int) -> int:
        """Largest end position of the substrings represented by `state`."""
        if self._rightmost is None:
            self._rightmost = self._propagate_rightmost()
        return self._rightmost[state]

    def end_positions(self, state: int) -> tuple[int, ...]:
        """All end positions of `state`, sorted; walks the suffix-link subtree."""
        if self._children is None:
            children: list[list[int]] = [[] for _ in self.length]
            for v, parent in enumerate(self.link):
                if parent >= 0:
                    children[parent].append(v)
            self._children = children

        ends = []
        stack = [state]
        while stack:
            v = stack.pop()
            if v != 0 and not self.is_clone[v]:
                ends.append(self.length[v])
            stack.extend(self._children[v])
        return tuple(sorted(ends))

    def _propagate_rightmost(self) -> list[int]:
        # Counting sort by length, then push maxima up the suffix-link tree.
        buckets: list[list[int]] = [[] for _ in range(self.size + 1)]
        for v, length in enumerate(self.length):
            buckets[length].append(v)

        rightmost = [0 if clone else length for clone, length in zip(self.is_clone, self.length, strict=True)]
        for bucket in reversed(buckets):
            for v in bucket:
                parent = self.link[v]
                if parent >= 0 and rightmost[v] > rightmost[parent]:
                    rightmost[parent] = rightmost[v]
        return rightmost
