"""
Factor graphs of signed 3-CNFs, rooted neighborhoods and their canonical codes.

Radius counts variable layers: the root is layer 0, and the clauses joining
layer d-1 to layer d are included wholesale together with all their variables
whenever d <= r. Variables on the last layer are leaves.

Canonical codes are AHU-style strings: children are sorted by their own code,
so two tree patterns get equal codes iff they are rooted isomorphic (with or
without edge signs, depending on `signed`). Patterns containing a cycle get a
distinct prefix, their node and clause counts, and the code of the depth-r
unfolding from the root. That code is still invariant under relabeling but
is not complete for cyclic patterns.
"""

import struct
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .ensemble import SignedCnf
from .exceptions import IndexOutOfRangeError

TREE_PREFIX = b"T"
CYCLIC_PREFIX = b"G"


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Bipartite variable/clause incidence with literal signs."""

    m: int
    M: int
    edge_variables: np.ndarray
    edge_clauses: np.ndarray
    edge_signs: np.ndarray
    variable_edges: Tuple[Tuple[int, ...], ...]

    @property
    def edge_count(self) -> int:
        return int(self.edge_variables.shape[0])

    def degree(self, i: int) -> int:
        return len(self.variable_edges[i])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edge_variables, minlength=self.m)

    def clause_edges(self, c: int) -> range:
        return range(3 * c, 3 * c + 3)


def build_factor_graph(F: SignedCnf) -> FactorGraph:
    """Edge 3c + j joins clause c to its j-th literal's variable."""
    edge_variables = F.variables.reshape(-1).copy()
    edge_clauses = np.repeat(np.arange(F.M, dtype=np.int64), 3)
    edge_signs = F.negations.reshape(-1).copy()
    incident: List[List[int]] = [[] for _ in range(F.m)]
    for e, v in enumerate(edge_variables):
        incident[int(v)].append(e)
    for array in (edge_variables, edge_clauses, edge_signs):
        array.setflags(write=False)
    return FactorGraph(
        m=F.m,
        M=F.M,
        edge_variables=edge_variables,
        edge_clauses=edge_clauses,
        edge_signs=edge_signs,
        variable_edges=tuple(tuple(edges) for edges in incident),
    )


@dataclass(frozen=True)
class SignedRootedPattern:
    """Radius-r neighborhood of a root variable, in BFS order.

    `variables` and `clauses` hold original indices (root first); `edges` are
    (variable position, clause position, sign) in local positions.
    """

    root: int
    radius: int
    variables: Tuple[int, ...]
    variable_depths: Tuple[int, ...]
    clauses: Tuple[int, ...]
    edges: Tuple[Tuple[int, int, int], ...]

    @property
    def is_tree(self) -> bool:
        return len(self.variables) + len(self.clauses) - 1 == len(self.edges)

    @property
    def node_count(self) -> int:
        return len(self.variables) + len(self.clauses)

    def adjacency(self) -> Tuple[Dict[int, List[Tuple[int, int]]], Dict[int, List[Tuple[int, int]]]]:
        """(variable position -> [(clause position, sign)], clause position -> [(variable position, sign)])."""
        var_adj: Dict[int, List[Tuple[int, int]]] = {p: [] for p in range(len(self.variables))}
        clause_adj: Dict[int, List[Tuple[int, int]]] = {q: [] for q in range(len(self.clauses))}
        for v, c, s in self.edges:
            var_adj[v].append((c, s))
            clause_adj[c].append((v, s))
        return var_adj, clause_adj


def extract_neighborhood(G: FactorGraph, i: int, r: int) -> SignedRootedPattern:
    """Breadth-first neighborhood of variable i truncated at r variable layers."""
    if not 0 <= i < G.m:
        raise IndexOutOfRangeError(i, G.m)
    if r < 0:
        raise ValueError(f"Radius must be non-negative, got {r}")
    var_pos = {i: 0}
    variables = [i]
    depths = [0]
    clause_pos: Dict[int, int] = {}
    clauses: List[int] = []
    edges: List[Tuple[int, int, int]] = []
    frontier = [i]
    for depth in range(1, r + 1):
        next_frontier = []
        for v in frontier:
            for e in G.variable_edges[v]:
                c = int(G.edge_clauses[e])
                if c in clause_pos:
                    continue
                clause_pos[c] = len(clauses)
                clauses.append(c)
                for ce in G.clause_edges(c):
                    u = int(G.edge_variables[ce])
                    if u not in var_pos:
                        var_pos[u] = len(variables)
                        variables.append(u)
                        depths.append(depth)
                        next_frontier.append(u)
                    edges.append((var_pos[u], clause_pos[c], int(G.edge_signs[ce])))
        frontier = next_frontier
        if not frontier:
            break
    return SignedRootedPattern(
        root=i,
        radius=r,
        variables=tuple(variables),
        variable_depths=tuple(depths),
        clauses=tuple(clauses),
        edges=tuple(edges),
    )


def _unfold_code(pattern: SignedRootedPattern, var_adj, clause_adj, signed: bool) -> bytes:
    r = pattern.radius

    def variable_code(v: int, parent_clause, depth: int) -> bytes:
        if depth >= r:
            return b"v()"
        children = [
            clause_code(c, v, s, depth)
            for c, s in var_adj[v]
            if c != parent_clause
        ]
        return b"v(" + b"".join(sorted(children)) + b")"

    def clause_code(c: int, parent: int, parent_sign: int, depth: int) -> bytes:
        children = []
        for v, s in clause_adj[c]:
            if v == parent:
                continue
            sign = (b"-" if s else b"+") if signed else b""
            children.append(sign + variable_code(v, c, depth + 1))
        head = (b"c-" if parent_sign else b"c+") if signed else b"c"
        return head + b"(" + b"".join(sorted(children)) + b")"

    return variable_code(0, None, 0)


def canonical_code(p: SignedRootedPattern, signed: bool = True) -> bytes:
    """Canonical byte code of a rooted pattern.

    Args:
        p: the pattern
        signed: include literal signs; unsigned codes identify the shape only

    Returns:
        b"T" + AHU code for tree patterns. Cyclic patterns get b"G", the
        variable and clause counts, and the code of the depth-r unfolding.
    """
    var_adj, clause_adj = p.adjacency()
    body = _unfold_code(p, var_adj, clause_adj, signed)
    if p.is_tree:
        return TREE_PREFIX + body
    return CYCLIC_PREFIX + struct.pack("<II", len(p.variables), len(p.clauses)) + body


def relabel_pattern(p: SignedRootedPattern, variable_order: List[int], clause_order: List[int]) -> SignedRootedPattern:
    """Same pattern with non-root positions renumbered (root stays at 0)."""
    if variable_order[0] != 0:
        raise ValueError("Relabeling must keep the root at position 0")
    var_map = {old: new for new, old in enumerate(variable_order)}
    clause_map = {old: new for new, old in enumerate(clause_order)}
    edges = tuple(sorted((var_map[v], clause_map[c], s) for v, c, s in p.edges))
    return SignedRootedPattern(
        root=p.root,
        radius=p.radius,
        variables=tuple(p.variables[old] for old in variable_order),
        variable_depths=tuple(p.variable_depths[old] for old in variable_order),
        clauses=tuple(p.clauses[old] for old in clause_order),
        edges=edges,
    )


def dump_pattern(p: SignedRootedPattern) -> str:
    """Indented tree dump of a pattern, following BFS order from the root."""
    var_adj, clause_adj = p.adjacency()
    lines = [f"x{p.variables[0]} (root, r={p.radius}, {'tree' if p.is_tree else 'cyclic'})"]
    seen_clauses = set()

    def walk(v: int, depth: int, indent: str) -> None:
        if depth >= p.radius:
            return
        for c, _ in var_adj[v]:
            if c in seen_clauses:
                continue
            seen_clauses.add(c)
            lines.append(f"{indent}C{p.clauses[c]}")
            for u, s in clause_adj[c]:
                if u == v:
                    continue
                lines.append(f"{indent}  {'-' if s else '+'}x{p.variables[u]}")
                if p.variable_depths[u] == depth + 1:
                    walk(u, depth + 1, indent + "    ")

    walk(0, 0, "  ")
    return "\n".join(lines)
