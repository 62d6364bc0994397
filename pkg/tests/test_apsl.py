import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partbn.apsl import ApslConfig, apsl, apsl_fs, learn_part
from partbn.citest import DSeparationOracle, TestConfig
from partbn.graph import Pdag, dag_to_cpdag

from conftest import make_data


def test_config_validation():
    assert ApslConfig(depth="max").depth is None
    assert ApslConfig(depth="MAX").depth is None
    with pytest.raises(ValueError):
        ApslConfig(depth=0)
    with pytest.raises(ValueError):
        ApslConfig(depth="deep")
    with pytest.raises(ValueError):
        ApslConfig(backend="mmpc")


@pytest.mark.parametrize("learner", [apsl, apsl_fs])
def test_chain6_exact_recovery(learner, chain6, chain6_data):
    g = learner(chain6_data, chain6.index("T"), ApslConfig(depth=None))
    assert g == chain6.dag
    assert g.has_directed(chain6.index("F"), chain6.index("T"))


def test_chain6_backends_agree(chain6, chain6_data):
    t = chain6.index("T")
    for k in (1, 2, None):
        assert apsl(chain6_data, t, ApslConfig(depth=k)) == apsl_fs(chain6_data, t, ApslConfig(depth=k))


def test_chain6_depth1_needs_deep_expansion(chain6, chain6_data):
    # F -- T can only be oriented once the collider at C is found
    res = learn_part(chain6_data, chain6.index("T"), ApslConfig(depth=1))
    assert res.graph.has_directed(chain6.index("F"), chain6.index("T"))
    assert res.stopped_early
    # expansion runs past layer K + 1 until the collider at C is reached
    assert [chain6.names[v] for v in res.state.visited] == ["T", "F", "D", "C"]
    assert res.state.layer_num == 5


def test_empty_pc_target():
    rng = np.random.default_rng(0)
    d = make_data(rng.integers(0, 2, (4, 500)))
    for backend in ("hiton", "fcbf"):
        res = learn_part(d, 0, ApslConfig(depth=1, backend=backend))
        assert res.graph.edges() == []
        assert res.state.visited == [0]


def test_deterministic(mb6, mb6_data):
    a = learn_part(mb6_data, 3, ApslConfig(depth=2))
    b = learn_part(mb6_data, 3, ApslConfig(depth=2))
    assert a.graph == b.graph and a.state.visited == b.state.visited
    assert a.tester.counts == b.tester.counts


def test_fcbf_backend_needs_data(mb6):
    with pytest.raises(ValueError):
        learn_part(None, 0, ApslConfig(backend="fcbf"), tester=DSeparationOracle(mb6.parents))


def test_target_range(chain6_data):
    with pytest.raises(IndexError):
        learn_part(chain6_data, 99)


def test_monotone_visitation(mb6_data):
    seen = []
    learn_part(mb6_data, 0, ApslConfig(depth=None), on_iteration=lambda a, st, g: seen.append(len(st.visited)))
    assert seen == list(range(1, len(seen) + 1))


@pytest.mark.parametrize("net", ["chain6", "mb6"])
def test_oracle_fixtures_full_depth(net, request):
    bn = request.getfixturevalue(net)
    cp = dag_to_cpdag(bn.dag)
    for t in range(bn.n_vars):
        g = apsl(None, t, ApslConfig(depth=None), tester=DSeparationOracle(bn.parents))
        assert g == cp


@st.composite
def dags(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    order = draw(st.permutations(range(n)))
    parents = [set() for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        if draw(st.integers(0, 3)) == 0:
            parents[order[j]].add(order[i])
    return parents


def component(parents, t):
    n = len(parents)
    nbrs = [set(parents[v]) | {c for c in range(n) if v in parents[c]} for v in range(n)]
    seen, stack = {t}, [t]
    while stack:
        for w in nbrs[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return sorted(seen)


@settings(max_examples=80, deadline=None)
@given(dags(), st.data())
def test_oracle_full_depth_equals_cpdag(parents, data):
    n = len(parents)
    t = data.draw(st.integers(0, n - 1))
    g = apsl(None, t, ApslConfig(depth=None, test=TestConfig(max_cond_size=None)), tester=DSeparationOracle(parents))
    cp = dag_to_cpdag(Pdag.from_parents(parents))
    comp = component(parents, t)
    assert np.array_equal(g.m[np.ix_(comp, comp)], cp.m[np.ix_(comp, comp)])
    assert g.m.sum() == g.m[np.ix_(comp, comp)].sum() and np.abs(g.m).sum() == np.abs(g.m[np.ix_(comp, comp)]).sum()


@settings(max_examples=80, deadline=None)
@given(dags(), st.data(), st.integers(1, 3))
def test_oracle_any_depth_is_sound(parents, data, k):
    n = len(parents)
    t = data.draw(st.integers(0, n - 1))
    res = learn_part(None, t, ApslConfig(depth=k, test=TestConfig(max_cond_size=None)), tester=DSeparationOracle(parents))
    g = res.graph
    cp = dag_to_cpdag(Pdag.from_parents(parents))
    for e in g.edges():
        assert cp.adjacent(e.a, e.b)
        if e.directed:
            assert cp.has_directed(e.a, e.b)
    assert g.conflicts == []
    # every expanded node was reached through the layer bookkeeping
    layered = set().union(*res.state.layer_nodes.values())
    assert set(res.state.visited) <= layered
    if res.stopped_early:
        assert res.state.layer_num > k
        assert not any(g.undirected_neighbors(x) for x in res.state.layer_nodes[k])
