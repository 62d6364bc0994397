"""Brute-force references shared by the graph and acceptance tests."""

import itertools

import numpy as np


def all_dags(n):
    """Every labelled DAG on ``n`` nodes as a frozenset of (parent, child) arcs."""
    pairs = list(itertools.combinations(range(n), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        arcs = set()
        for (a, b), s in zip(pairs, states):
            if s == 1:
                arcs.add((a, b))
            elif s == 2:
                arcs.add((b, a))
        if _acyclic(n, arcs):
            yield frozenset(arcs)


def _acyclic(n, arcs):
    indeg = [0] * n
    for _, b in arcs:
        indeg[b] += 1
    ready = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for a, b in arcs:
            if a == v:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
    return seen == n


def skeleton(arcs):
    return frozenset(frozenset(a) for a in arcs)


def vstructs(arcs):
    skel = skeleton(arcs)
    out = set()
    for (a, c), (b, c2) in itertools.permutations(arcs, 2):
        if c == c2 and a < b and frozenset((a, b)) not in skel:
            out.add((a, c, b))
    return frozenset(out)


def equivalence_classes(n):
    """Map (skeleton, v-structures) -> list of member DAGs."""
    classes = {}
    for arcs in all_dags(n):
        classes.setdefault((skeleton(arcs), vstructs(arcs)), []).append(arcs)
    return classes


def class_union_matrix(n, members):
    """Adjacency matrix: directed where every member agrees, undirected otherwise."""
    m = np.zeros((n, n), dtype=np.int8)
    for a, b in members[0]:
        if all((a, b) in arcs for arcs in members):
            m[a, b], m[b, a] = -1, 0
        else:
            m[a, b] = m[b, a] = 1
    return m
