import io
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partbn.bnio import load_network
from partbn.graph import (
    DIRECTED,
    UNDIRECTED,
    Edge,
    Pdag,
    StructureError,
    dag_to_cpdag,
    iter_dags,
    meek_rules,
    read_adjacency_csv,
    read_edge_list,
    v_structures,
    write_adjacency_csv,
    write_edge_list,
)

from oracles import class_union_matrix, equivalence_classes


def test_add_undirected_if_new():
    g = Pdag(3)
    g.add_undirected_if_new(0, 1)
    assert g.is_undirected(0, 1)
    g.orient(1, 2).add_undirected_if_new(1, 2)
    assert g.has_directed(1, 2)
    h = g.copy().add_undirected_if_new(0, 1)
    assert h == g


def test_orient_overwrites_and_logs_conflicts():
    g = Pdag(3)
    g.orient(0, 2)
    assert g.has_directed(0, 2) and g.conflicts == []
    g.add_undirected_if_new(0, 1).orient(0, 1)
    assert g.has_directed(0, 1) and g.conflicts == []
    g.orient(1, 0)
    assert g.has_directed(1, 0) and g.conflicts == [(1, 0)]


def test_self_loops_rejected():
    with pytest.raises(ValueError):
        Pdag(2).orient(1, 1)
    with pytest.raises(ValueError):
        Edge(0, 0)


def test_validate_rejects_bad_pairs():
    with pytest.raises(StructureError):
        Pdag.from_matrix([[0, 1], [0, 0]])
    with pytest.raises(StructureError):
        Pdag.from_matrix([[0, -1], [-1, 0]])


def test_meek_r1():
    g = Pdag(3).orient(0, 1).add_undirected_if_new(1, 2)
    out = meek_rules(g)
    assert out.has_directed(1, 2)
    assert g.is_undirected(1, 2)  # input untouched


def test_meek_r2():
    g = Pdag(3).orient(0, 1).orient(1, 2).add_undirected_if_new(0, 2)
    assert meek_rules(g).has_directed(0, 2)


def test_meek_r3():
    # x -- z -> y, x -- w -> y, x -- y, z and w non-adjacent
    x, y, z, w = range(4)
    g = Pdag(4)
    for a, b in ((x, z), (x, w), (x, y)):
        g.add_undirected_if_new(a, b)
    g.orient(z, y).orient(w, y)
    assert meek_rules(g).has_directed(x, y)


def test_fully_directed_unchanged():
    g = Pdag.from_edges(4, [(0, 1), (1, 2), (0, 3)])
    assert meek_rules(g) == g


def test_cpdag_examples(chain6):
    chain = Pdag.from_edges(3, [(0, 1), (1, 2)])
    assert dag_to_cpdag(chain).n_undirected() == 2
    collider = Pdag.from_edges(3, [(0, 2), (1, 2)])
    assert dag_to_cpdag(collider) == collider
    cp = dag_to_cpdag(chain6.dag)
    assert cp.n_directed() == 5 and cp.n_undirected() == 0


def test_cpdag_errors():
    with pytest.raises(StructureError):
        dag_to_cpdag(Pdag(2).add_undirected_if_new(0, 1))
    with pytest.raises(StructureError):
        dag_to_cpdag(Pdag.from_edges(3, [(0, 1), (1, 2), (2, 0)]))


def test_v_structures():
    assert v_structures(Pdag.from_edges(3, [(0, 2), (1, 2)])) == {(0, 2, 1)}
    assert v_structures(Pdag.from_edges(3, [(0, 2), (1, 2), (0, 1)])) == set()


def test_alarm_collider_at_12():
    bn = load_network("alarm")
    assert (10, 11, 34) in v_structures(bn.dag)  # 1-based 11 -> 12 <- 35


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cpdag_matches_equivalence_class(n):
    classes = equivalence_classes(n)
    for members in classes.values():
        want = class_union_matrix(n, members)
        for arcs in members:
            got = dag_to_cpdag(Pdag.from_edges(n, sorted(arcs)))
            assert np.array_equal(got.m, want)


def test_iter_dags_counts():
    # labelled DAG counts: 1, 3, 25, 543
    assert [sum(1 for _ in iter_dags(n)) for n in (1, 2, 3, 4)] == [1, 3, 25, 543]


@st.composite
def random_dag(draw, max_n=7):
    n = draw(st.integers(2, max_n))
    order = draw(st.permutations(range(n)))
    arcs = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n) if draw(st.booleans())]
    return Pdag.from_edges(n, arcs)


@settings(max_examples=100, deadline=None)
@given(random_dag(), st.randoms(use_true_random=False))
def test_meek_order_independent_idempotent_monotone(dag, rnd):
    # skeleton + v-structures as the starting pattern
    g = Pdag(dag.n)
    for e in dag.edges():
        g.add_undirected_if_new(e.a, e.b)
    for a, c, b in v_structures(dag):
        g.orient(a, c).orient(b, c)
    out = meek_rules(g)
    pairs = [(e.a, e.b) for e in g.edges()]
    rnd.shuffle(pairs)
    assert meek_rules(g, order=pairs) == out
    assert meek_rules(out) == out
    assert out.n_directed() >= g.n_directed()
    assert not out.has_directed_cycle()
    out.validate()
    # directed input edges never flip
    for e in g.edges():
        if e.directed:
            assert out.has_directed(e.a, e.b)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.lists(st.tuples(st.integers(0, 2), st.integers(0, 5), st.integers(0, 5)), max_size=25))
def test_encoding_valid_after_random_operations(n, ops):
    g = Pdag(n)
    for op, a, b in ops:
        a, b = a % n, b % n
        if a == b:
            continue
        if op == 0:
            g.add_undirected_if_new(a, b)
        elif op == 1:
            g.orient(a, b)
        else:
            g.remove(a, b)
        g.validate()


def test_edge_list_round_trip():
    names = ["A", "B", "C", "D"]
    g = Pdag(4, names).orient(0, 1).add_undirected_if_new(2, 3).orient(2, 1)
    buf = io.StringIO()
    write_edge_list(g, buf)
    assert buf.getvalue().splitlines() == ["A -> B", "C -> B", "C -- D"]
    assert read_edge_list(buf.getvalue(), names) == g
    assert read_edge_list("B <- A\n", names).has_directed(0, 1)
    with pytest.raises(KeyError, match="Z"):
        read_edge_list("A -> Z\n", names)


def test_adjacency_round_trip():
    g = Pdag(3, ["x", "y", "z"]).orient(0, 1).add_undirected_if_new(1, 2)
    buf = io.StringIO()
    write_adjacency_csv(g, buf)
    back = read_adjacency_csv(buf.getvalue())
    assert back == g and back.names == g.names


def test_edge_normalisation():
    assert Edge(3, 1, UNDIRECTED) == Edge(1, 3, UNDIRECTED)
    assert Edge(3, 1, DIRECTED).a == 3
