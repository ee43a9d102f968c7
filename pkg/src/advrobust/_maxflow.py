"""Deterministic Dinic max-flow on exact capacities.

Capacities may be Python ints or ``fractions.Fraction``; all arithmetic is
exact, so flow values carry no rounding error.  Arc order is the insertion
order and the search is plain BFS/DFS, which makes min cuts, residual
reachability and therefore the extreme solutions reproducible across runs.
"""

from __future__ import annotations

from collections import deque

__all__ = ["MaxFlow"]


class MaxFlow:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.cap: list = []

    def add_edge(self, u: int, v: int, capacity) -> int:
        """Directed arc u -> v; returns the arc id (reverse arc is id ^ 1)."""
        arc = len(self.to)
        self.to.append(v)
        self.cap.append(capacity)
        self.adj[u].append(arc)
        self.to.append(u)
        self.cap.append(capacity * 0)  # zero of the capacity type
        self.adj[v].append(arc ^ 1)
        return arc

    def _bfs_levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for arc in self.adj[u]:
                v = self.to[arc]
                if self.cap[arc] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def _dfs_push(self, u, t, pushed, level, it):
        if u == t:
            return pushed
        while it[u] < len(self.adj[u]):
            arc = self.adj[u][it[u]]
            v = self.to[arc]
            if self.cap[arc] > 0 and level[v] == level[u] + 1:
                amount = pushed if pushed < self.cap[arc] else self.cap[arc]
                got = self._dfs_push(v, t, amount, level, it)
                if got > 0:
                    self.cap[arc] -= got
                    self.cap[arc ^ 1] += got
                    return got
            it[u] += 1
        return pushed * 0

    def max_flow(self, s: int, t: int):
        """Total s-t flow; the residual capacities are left in place for
        reachability queries."""
        inf = _infinite_for(self.cap[arc] for arc in self.adj[s])
        total = None
        while True:
            level = self._bfs_levels(s, t)
            if level is None:
                break
            it = [0] * self.n
            while True:
                pushed = self._dfs_push(s, t, inf, level, it)
                if pushed == 0:
                    break
                total = pushed if total is None else total + pushed
        if total is None:
            total = 0
        return total

    def reachable_from(self, s: int) -> list[bool]:
        """Nodes reachable from s through positive residual arcs."""
        seen = [False] * self.n
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for arc in self.adj[u]:
                v = self.to[arc]
                if self.cap[arc] > 0 and not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen

    def reaching(self, t: int) -> list[bool]:
        """Nodes from which t is reachable through positive residual arcs."""
        incoming: list[list[int]] = [[] for _ in range(self.n)]
        for arc in range(len(self.to)):
            if self.cap[arc] > 0:
                incoming[self.to[arc]].append(arc ^ 1)  # tail node arc
        seen = [False] * self.n
        seen[t] = True
        queue = deque([t])
        while queue:
            v = queue.popleft()
            for rev in incoming[v]:
                u = self.to[rev]
                if not seen[u]:
                    seen[u] = True
                    queue.append(u)
        return seen


def _infinite_for(caps) -> object:
    """An upper bound exceeding any augmenting amount: total capacity + 1."""
    total = None
    for c in caps:
        if c > 0:
            total = c if total is None else total + c
    if total is None:
        return 1
    return total + 1
