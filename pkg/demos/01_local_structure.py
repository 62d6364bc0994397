"""
Learning the structure around one variable
==========================================

Sample the ALARM network, then learn its structure around ``HR`` with a
growing depth and watch the learned part spread outwards.
"""

from partbn import ApslConfig, forward_sample, learn_part, load_network, score_part

bn = load_network("alarm")
data = forward_sample(bn, 20000, seed=0)
t = bn.index("HR")
print("true neighbours of HR:", sorted(bn.names[v] for v in bn.pc(t)))

# depth 1 learns HR's neighbours; deeper runs keep expanding outwards
for depth in (1, 2, 3, None):
    res = learn_part(data, t, ApslConfig(depth=depth))
    g = res.graph
    m = score_part(g, bn, t, depth)
    label = "max" if depth is None else depth
    print(f"depth {label}: {len(g.edges())} edges ({g.n_directed()} directed), "
          f"{len(res.state.visited)} nodes expanded, {res.n_ci_tests} CI tests, "
          f"Ar_Distance {m.ar_distance:.2f}")

res = learn_part(data, t, ApslConfig(depth=1))
print("depth-1 edges:", sorted(res.graph.edge_str(e) for e in res.graph.edges()))

# the FCBF backend swaps most conditional tests for a filter
fs = learn_part(data, t, ApslConfig(depth=1, backend="fcbf"))
print("fcbf backend:", sorted(fs.graph.edge_str(e) for e in fs.graph.edges()),
      f"({fs.n_ci_tests} CI tests)")
