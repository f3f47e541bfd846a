"""Communication topology: static or scheduled directed edge sets.

An edge (j, k) means agent j sends information to agent k.  Schedules are
piecewise constant: breakpoints t_0 = 0 < t_1 < ... with one edge set per
segment; an optional period makes the schedule repeat.  Graphs are immutable
after construction.
"""

from __future__ import annotations

import itertools

import numpy as np


class GraphError(ValueError):
    pass


def _validate_edges(n, edges):
    out = []
    for e in edges:
        j, k = int(e[0]), int(e[1])
        if j == k:
            raise GraphError(f"self-loop {j}->{k} not allowed")
        if not (0 <= j < n and 0 <= k < n):
            raise GraphError(f"edge {j}->{k} out of range for {n} agents")
        out.append((j, k))
    return frozenset(out)


class CommGraph:
    """Directed communication graph with a piecewise-constant edge schedule."""

    def __init__(self, n, segments, period=None):
        """segments: list of (start_time, edges); first start time must be 0."""
        if n < 1:
            raise GraphError("need at least one agent")
        if not segments:
            raise GraphError("schedule needs at least one segment")
        self.n = int(n)
        times = [float(t) for t, _ in segments]
        if times[0] != 0.0:
            raise GraphError("first schedule segment must start at t=0")
        if any(t1 - t0 <= 0.0 for t0, t1 in zip(times, times[1:])):
            raise GraphError("schedule breakpoints must be strictly increasing")
        self.breakpoints = tuple(times)
        self.edge_sets = tuple(_validate_edges(n, e) for _, e in segments)
        self.period = None if period is None else float(period)
        if self.period is not None and self.period <= times[-1]:
            raise GraphError("period must exceed the last breakpoint")
        self._matrices = [self._build_matrix(es) for es in self.edge_sets]
        self._degrees = [A.sum(axis=1) for A in self._matrices]

    # -- constructors ---------------------------------------------------------

    @classmethod
    def static(cls, n, edges, undirected=False):
        edges = list(edges)
        if undirected:
            edges = edges + [(k, j) for j, k in edges]
        return cls(n, [(0.0, set(edges))])

    @classmethod
    def complete(cls, n):
        return cls.static(n, [(j, k) for j in range(n) for k in range(n) if j != k])

    @classmethod
    def ring(cls, n):
        return cls.static(n, [(k, (k + 1) % n) for k in range(n)], undirected=True)

    @classmethod
    def path(cls, n):
        return cls.static(n, [(k, k + 1) for k in range(n - 1)], undirected=True)

    @classmethod
    def empty(cls, n):
        return cls(n, [(0.0, set())])

    # -- queries --------------------------------------------------------------

    def _segment_index(self, t):
        if len(self.breakpoints) == 1:
            return 0
        t = float(t)
        if self.period is not None:
            t = np.mod(t, self.period)
        idx = int(np.searchsorted(self.breakpoints, t, side="right") - 1)
        return max(idx, 0)

    def edges_at(self, t):
        return self.edge_sets[self._segment_index(t)]

    def _build_matrix(self, edges):
        A = np.zeros((self.n, self.n))
        for j, k in edges:
            A[k, j] = 1.0
        return A

    def in_matrix(self, t=0.0):
        """Matrix A with A[k, j] = 1 iff j sends to k at time t."""
        return self._matrices[self._segment_index(t)]

    def in_terms(self, t=0.0):
        """Neighbor matrix and in-degree vector at time t."""
        i = self._segment_index(t)
        return self._matrices[i], self._degrees[i]

    def in_neighbors(self, k, t=0.0):
        """Sorted ids of agents sending to k at time t."""
        if not (0 <= k < self.n):
            raise GraphError(f"agent id {k} out of range for {self.n} agents")
        return sorted(j for j, kk in self.edges_at(t) if kk == k)

    @property
    def is_static(self):
        return len(self.edge_sets) == 1

    @property
    def is_undirected(self):
        return all(
            all((k, j) in es for j, k in es) for es in self.edge_sets
        )

    def laplacian(self, t=0.0):
        """In-degree Laplacian L with consensus dynamics dx/dt = -L x."""
        A = self.in_matrix(t)
        return np.diag(A.sum(axis=1)) - A

    def algebraic_connectivity(self):
        """Second-smallest Laplacian eigenvalue of a static undirected graph."""
        if not (self.is_static and self.is_undirected):
            raise GraphError("algebraic connectivity needs a static undirected graph")
        vals = np.sort(np.linalg.eigvalsh(self.laplacian()))
        return float(vals[1]) if self.n > 1 else 0.0

    def is_connected_undirected(self):
        """Standard connectivity; valid only for static undirected graphs."""
        if not self.is_static:
            raise GraphError("is_connected_undirected needs a static graph")
        if not self.is_undirected:
            raise GraphError("is_connected_undirected needs an undirected graph")
        return _reaches_all(self.n, self.edge_sets[0], 0)

    # -- uniform connectivity ---------------------------------------------------

    def _unrolled(self, horizon):
        """Breakpoints and edge sets covering [0, horizon]."""
        if self.period is None:
            return list(self.breakpoints), list(self.edge_sets)
        times, sets = [], []
        base = 0.0
        while base <= horizon:
            for t, es in zip(self.breakpoints, self.edge_sets):
                if base + t > horizon:
                    break
                times.append(base + t)
                sets.append(es)
            base += self.period
        return times, sets

    def _active_intervals(self, horizon):
        """Per-edge maximal activity intervals over [0, horizon]."""
        times, sets = self._unrolled(horizon)
        bounds = times + [max(horizon, times[-1])]
        spans = {}
        for i, es in enumerate(sets):
            lo, hi = bounds[i], bounds[i + 1]
            for e in es:
                iv = spans.setdefault(e, [])
                if iv and abs(iv[-1][1] - lo) < 1e-12:
                    iv[-1] = (iv[-1][0], hi)
                else:
                    iv.append((lo, hi))
        return spans, times

    def is_uniformly_connected(self, delta, T, horizon, tol=1e-12):
        """Check the rooted delta-dwell connectivity over every [t, t+T] window.

        True iff some agent k can reach every other agent through the union of
        edges that stay active for a contiguous span of at least delta inside
        each window.  Windows are evaluated at schedule breakpoints and at
        points where a breakpoint enters the window, which is sufficient for
        piecewise-constant schedules.
        """
        if not (0.0 < delta <= T <= horizon):
            raise GraphError("need 0 < delta <= T <= horizon")
        if self.n == 1:
            return True
        spans, times = self._active_intervals(horizon)
        starts = {0.0}
        for t in times:
            if 0.0 <= t <= horizon - T:
                starts.add(t)
            if 0.0 <= t - T <= horizon - T:
                starts.add(t - T)
        windows = []
        for t0 in sorted(starts):
            active = set()
            for e, ivs in spans.items():
                for lo, hi in ivs:
                    if min(hi, t0 + T) - max(lo, t0) >= delta - tol:
                        active.add(e)
                        break
            windows.append(active)
        for k in range(self.n):
            if all(_reaches_all(self.n, w, k) for w in windows):
                return True
        return False

    def __repr__(self):
        kind = "static" if self.is_static else f"{len(self.edge_sets)}-segment"
        return f"<CommGraph n={self.n} {kind}>"


def _reaches_all(n, edges, root):
    succ = {i: [] for i in range(n)}
    for j, k in edges:
        succ[j].append(k)
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for y in succ[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == n


def all_pairs(n):
    """Unordered agent pairs (j, k), j < k."""
    return list(itertools.combinations(range(n), 2))
