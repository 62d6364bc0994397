"""
A miniature benchmark sweep
===========================

``bench`` samples fresh datasets per run and scores both learners on every
target. The CLI's ``partbn bench`` wraps the same function.
"""

from partbn import bench

report = bench(["child"], [500, 2000], ("apsl", "apsl-fs"), runs=3, seed=0, depths=(1,))
print(report.table())

# per-target rows are available for closer inspection
worst = max(report.rows, key=lambda r: r.ar_distance)
print("hardest cell:", worst.algorithm, worst.size, worst.target_name, round(worst.ar_distance, 3))
