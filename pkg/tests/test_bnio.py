import io
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partbn.bnio import (
    BUNDLED,
    BifParseError,
    GroundTruthBn,
    NeighborhoodSpec,
    bif_text,
    forward_sample,
    largest_pc_nodes,
    load_network,
    neighborhood_core,
    parse_bif,
    true_neighborhood,
)
from partbn.dataset import count
from partbn.graph import DIRECTED, Edge

UNIFORM = """
network tiny { }
variable X {
  type discrete [ 2 ] { a, b };
  property "ignored";
}
probability ( X ) {
  table 0.5, 0.5;
}
"""


def test_parse_uniform_binary():
    bn = parse_bif(UNIFORM)
    assert bn.cardinalities == (2,)
    assert bn.cpts[0].tolist() == [[0.5, 0.5]]
    assert bn.states == (("a", "b"),)


def test_child_and_alarm_statistics():
    child = load_network("child").stats()
    assert (child["vars"], child["edges"]) == (20, 25)
    assert (child["min_pc"], child["max_pc"]) == (1, 8)
    alarm = load_network("alarm").stats()
    assert (alarm["max_in"], alarm["max_out"]) == (4, 5)
    assert (alarm["vars"], alarm["edges"]) == (37, 46)
    ins = load_network("insurance").stats()
    assert (ins["vars"], ins["edges"]) == (27, 52)


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip_fixpoint(name):
    text = bif_text(load_network(name))
    again = parse_bif(text)
    assert bif_text(again) == text
    bn = load_network(name)
    assert again.parents == bn.parents
    for a, b in zip(again.cpts, bn.cpts):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("name", BUNDLED)
def test_cpt_invariants(name):
    bn = load_network(name)
    for v in range(bn.n_vars):
        rows = int(np.prod([bn.cardinalities[p] for p in bn.parents[v]]))
        assert bn.cpts[v].shape == (rows, bn.cardinalities[v])
        assert np.allclose(bn.cpts[v].sum(axis=1), 1.0, atol=1e-9, rtol=0)
    assert not bn.dag.has_directed_cycle()


BAD_CASES = [
    ("probability ( X | Y ) {\n  (a) 0.5, 0.5;\n}\n", "unknown variable 'Y'", 6),
    ("probability ( X ) {\n  table 0.5, 0.2, 0.3;\n}\n", "3 entries", 7),
    ("probability ( X ) {\n  table 0.5, 0.6;\n}\n", "sums to", 6),
]


@pytest.mark.parametrize("body,msg,line", BAD_CASES)
def test_parse_errors_carry_line_numbers(body, msg, line):
    head = "variable X {\n  type discrete [ 2 ] { a, b };\n}\n\n\n"
    with pytest.raises(BifParseError, match=msg) as info:
        parse_bif(head + body)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_row_within_tolerance_is_renormalised():
    text = UNIFORM.replace("0.5, 0.5", "0.5, 0.5000004")
    bn = parse_bif(text)
    assert abs(bn.cpts[0].sum() - 1.0) < 1e-12


def test_row_arity_mismatch():
    text = """variable X { type discrete [ 2 ] { a, b }; }
variable Y { type discrete [ 2 ] { c, d }; }
probability ( X ) { table 0.5, 0.5; }
probability ( Y | X ) {
  (a) 0.1, 0.9;
  (b) 0.2, 0.3, 0.5;
}
"""
    with pytest.raises(BifParseError, match="row of 'Y' has 3 entries") as info:
        parse_bif(text)
    assert info.value.line == 6


def test_conditional_table_layout():
    text = """variable X { type discrete [ 2 ] { a, b }; }
variable Y { type discrete [ 2 ] { c, d }; }
probability ( X ) { table 0.5, 0.5; }
probability ( Y | X ) { table 0.1, 0.2, 0.9, 0.8; }
"""
    bn = parse_bif(text)
    assert bn.cpts[1].tolist() == [[0.1, 0.9], [0.2, 0.8]]


def one_hot_chain():
    text = """variable A { type discrete [ 2 ] { a0, a1 }; }
variable B { type discrete [ 3 ] { b0, b1, b2 }; }
probability ( A ) { table 0.0, 1.0; }
probability ( B | A ) {
  (a0) 1.0, 0.0, 0.0;
  (a1) 0.0, 0.0, 1.0;
}
"""
    return parse_bif(text)


def test_deterministic_cpts_force_one_configuration():
    d = forward_sample(one_hot_chain(), 500, seed=4)
    assert set(d.columns[0].tolist()) == {1}
    assert set(d.columns[1].tolist()) == {2}


def test_sampling_is_deterministic(mb6):
    a = forward_sample(mb6, 1000, seed=9)
    b = forward_sample(mb6, 1000, seed=9)
    c = forward_sample(mb6, 1000, seed=10)
    assert np.array_equal(a.columns, b.columns)
    assert not np.array_equal(a.columns, c.columns)
    assert a.names == mb6.names and a.labels == mb6.states


def test_root_frequency():
    text = "variable R { type discrete [ 2 ] { r0, r1 }; }\nprobability ( R ) { table 0.25, 0.75; }\n"
    d = forward_sample(parse_bif(text), 100000, seed=1)
    freq = float(np.mean(d.columns[0] == 0))
    assert 0.24 <= freq <= 0.26


def test_chain_joint_matches_cpt_product():
    text = """variable A { type discrete [ 2 ] { a0, a1 }; }
variable B { type discrete [ 3 ] { b0, b1, b2 }; }
variable C { type discrete [ 2 ] { c0, c1 }; }
probability ( A ) { table 0.3, 0.7; }
probability ( B | A ) { (a0) 0.2, 0.5, 0.3; (a1) 0.6, 0.1, 0.3; }
probability ( C | B ) { (b0) 0.9, 0.1; (b1) 0.4, 0.6; (b2) 0.25, 0.75; }
"""
    bn = parse_bif(text)
    d = forward_sample(bn, 100000, seed=2)
    emp = count(d, [0, 1, 2]).counts / d.n_rows
    exact = np.einsum("a,ab,bc->abc", bn.cpts[0][0], bn.cpts[1], bn.cpts[2])
    assert np.abs(emp - exact).sum() < 0.01


def test_forward_sample_rejects_empty(chain6):
    with pytest.raises(ValueError):
        forward_sample(chain6, 0, seed=0)


def bfs(bn, t):
    dist, q = {t: 0}, deque([t])
    while q:
        v = q.popleft()
        for w in bn.pc(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def region_reference(bn, t, k):
    dist = bfs(bn, t)
    inf = float("inf")
    return {e for e in bn.edges() if min(dist.get(e.a, inf), dist.get(e.b, inf)) <= k - 1}


def named(bn, *pairs):
    return {Edge(bn.index(a), bn.index(b), DIRECTED) for a, b in pairs}


def test_true_neighborhood_mb6(mb6):
    got = true_neighborhood(mb6, NeighborhoodSpec(mb6.index("T"), 1))
    assert got == named(mb6, ("A", "T"), ("B", "T"), ("T", "D"), ("T", "F"))


def test_true_neighborhood_chain6_depth2(chain6):
    t = chain6.index("T")
    got = true_neighborhood(chain6, NeighborhoodSpec(t, 2))
    assert got == region_reference(chain6, t, 2) == named(chain6, ("F", "T"), ("D", "F"))
    assert neighborhood_core(chain6, NeighborhoodSpec(t, 2)) == {t, chain6.index("F")}


def test_true_neighborhood_max(chain6):
    assert true_neighborhood(chain6, NeighborhoodSpec(0, None)) == chain6.edges()
    with pytest.raises(ValueError):
        NeighborhoodSpec(0, 0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["child", "insurance", "alarm"]), st.data())
def test_true_neighborhood_monotone_and_matches_reference(name, data):
    bn = load_network(name)
    t = data.draw(st.integers(0, bn.n_vars - 1))
    prev = set()
    for k in range(1, 6):
        cur = true_neighborhood(bn, NeighborhoodSpec(t, k))
        assert cur == region_reference(bn, t, k)
        assert prev <= cur
        prev = cur


def test_largest_pc_nodes_insurance_file_order():
    bn = load_network("insurance")
    assert [v + 1 for v in largest_pc_nodes(bn)] == [2, 3, 4, 5, 8]


def test_largest_pc_nodes_child_topological_order():
    order = (
        "BirthAsphyxia Disease Age LVH DuctFlow CardiacMixing LungParench LungFlow Sick HypDistrib "
        "HypoxiaInO2 CO2 ChestXray Grunting LVHreport LowerBodyO2 RUQO2 CO2Report XrayReport GruntingReport"
    ).split()
    bn = load_network("child").reorder(order)
    assert [v + 1 for v in largest_pc_nodes(bn)] == [2, 6, 7, 9, 11]


def test_invalid_network_rejected():
    with pytest.raises(ValueError):
        GroundTruthBn("x", ("A",), (("a", "b"),), ((),), (np.array([[0.5, 0.6]]),))


def test_load_network_from_path(tmp_path):
    p = tmp_path / "tiny.bif"
    p.write_text(UNIFORM)
    assert load_network(p).names == ("X",)
