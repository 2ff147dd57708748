"""Strongly connected components, the Morse graph, and chain recurrence on box graphs.

A component is recurrent when it has at least two nodes or a single node
with a self-loop; on the combinatorial model these are the chain
transitive components and their union is the chain recurrent set.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .transition import TransitionGraph


def tarjan_scc(n: int, succ) -> list:
    """Iterative Tarjan; ``succ(v)`` yields successors. Components come out sinks first."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comps = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


@dataclass(frozen=True)
class MorseGraph:
    """Condensation DAG of a transition graph.

    Components are numbered in a deterministic topological order: among the
    components whose predecessors are all placed, the one with the smallest
    member id goes first.
    """

    component_of: np.ndarray
    members: tuple
    recurrent: np.ndarray
    dag: tuple  # sorted successor component ids per component
    layer: np.ndarray  # longest path (in DAG edges) to a sink
    exiting: np.ndarray  # per component: some member box is exiting

    @property
    def n_components(self) -> int:
        return len(self.members)

    def dag_edges(self):
        return [(a, b) for a, succ in enumerate(self.dag) for b in succ]

    def recurrent_ids(self) -> list:
        return [int(c) for c in np.nonzero(self.recurrent)[0]]


def strongly_connected_components(g: TransitionGraph) -> MorseGraph:
    adj = g.adjacency_lists()
    raw = tarjan_scc(g.n_nodes, adj.__getitem__)
    raw_of = np.empty(g.n_nodes, dtype=np.int64)
    for i, comp in enumerate(raw):
        raw_of[comp] = i

    n_comp = len(raw)
    edges = g.edges()
    src_c, dst_c = raw_of[edges[:, 0]], raw_of[edges[:, 1]]
    self_loop = np.zeros(n_comp, dtype=bool)
    self_loop[src_c[src_c == dst_c]] = True
    cross = np.unique(src_c[src_c != dst_c] * n_comp + dst_c[src_c != dst_c])
    raw_succ = [[] for _ in range(n_comp)]
    indeg = [0] * n_comp
    for key in cross.tolist():
        a, b = divmod(key, n_comp)
        raw_succ[a].append(b)
        indeg[b] += 1

    min_member = [min(c) for c in raw]
    heap = [(min_member[c], c) for c in range(n_comp) if indeg[c] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, c = heapq.heappop(heap)
        order.append(c)
        for d in raw_succ[c]:
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(heap, (min_member[d], d))
    assert len(order) == n_comp, "condensation is not acyclic"

    new_id = np.empty(n_comp, dtype=np.int64)
    new_id[order] = np.arange(n_comp)
    members = tuple(np.array(sorted(raw[c]), dtype=np.int64) for c in order)
    dag = tuple(tuple(sorted(int(new_id[d]) for d in raw_succ[c])) for c in order)
    recurrent = np.array(
        [len(raw[c]) > 1 or self_loop[c] for c in order], dtype=bool
    )
    layer = np.zeros(n_comp, dtype=np.int64)
    for c in range(n_comp - 1, -1, -1):
        if dag[c]:
            layer[c] = 1 + max(layer[d] for d in dag[c])
    exiting = np.array([bool(g.exiting[m].any()) for m in members], dtype=bool)
    return MorseGraph(new_id[raw_of], members, recurrent, dag, layer, exiting)


def chain_recurrent_boxes(m: MorseGraph) -> set:
    out = set()
    for c in m.recurrent_ids():
        out.update(m.members[c].tolist())
    return out


def chain_transitive_components(m: MorseGraph) -> list:
    """Member sets of the recurrent components, in topological order."""
    return [set(m.members[c].tolist()) for c in m.recurrent_ids()]


def epsilon_chain_oracle(g: TransitionGraph, b: int) -> bool:
    """True iff some chain of edges leads from b back to b (breadth-first search)."""
    seen = np.zeros(g.n_nodes, dtype=bool)
    queue = deque()
    for w in g.successors(b).tolist():
        if w == b:
            return True
        if not seen[w]:
            seen[w] = True
            queue.append(w)
    while queue:
        v = queue.popleft()
        for w in g.successors(v).tolist():
            if w == b:
                return True
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return False


def morse_graph_dot(m: MorseGraph) -> str:
    lines = ["digraph morse {"]
    for c, mem in enumerate(m.members):
        rec = "recurrent" if m.recurrent[c] else "transient"
        style = ', style=filled, fillcolor="lightblue"' if m.recurrent[c] else ""
        lines.append(f'  C{c} [label="C{c} ({len(mem)}, {rec})"{style}];')
    for a, b in m.dag_edges():
        lines.append(f"  C{a} -> C{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
