"""
Exact answers versus finite samples
===================================

With a d-separation oracle the learner returns exactly the part of the
equivalence class around the target. With sampled data the G-squared test
makes mistakes, and they shrink as the sample grows.
"""

from partbn import (
    ApslConfig,
    DSeparationOracle,
    dag_to_cpdag,
    forward_sample,
    learn_part,
    load_network,
    score_part,
)

bn = load_network("insurance")
t = bn.index("Accident")
cfg = ApslConfig(depth=2)

oracle = DSeparationOracle(bn.parents)
exact = learn_part(None, t, cfg, tester=oracle).graph
print("oracle:", score_part(exact, bn, t, 2))

cpdag = dag_to_cpdag(bn.dag)
for n in (500, 2000, 10000, 50000):
    data = forward_sample(bn, n, seed=1)
    m = score_part(learn_part(data, t, cfg).graph, bn, t, 2, truth_cpdag=cpdag)
    print(f"n={n:>6}: Ar_Distance {m.ar_distance:.3f}"
          f"  (precision {m.ar_precision:.2f}, recall {m.ar_recall:.2f})")
