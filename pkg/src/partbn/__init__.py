"""Learn any part of a discrete Bayesian network structure around a target node."""

__version__ = "0.1.0"

from .apsl import ApslConfig, ApslResult, apsl, apsl_fs, learn_part
from .bnio import (
    GroundTruthBn,
    NeighborhoodSpec,
    forward_sample,
    load_network,
    parse_bif,
    true_neighborhood,
    write_bif,
)
from .citest import DSeparationOracle, G2Tester, TestConfig, g2_test, symmetric_uncertainty
from .dataset import Dataset, load_csv, write_csv
from .evaluation import ArMetrics, BenchReport, ar_metrics, bench, score_part
from .graph import Edge, Pdag, dag_to_cpdag, meek_rules
from .localdiscovery import fcbf, get_mb, hiton_pc, mb_fs

__all__ = [
    "ApslConfig", "ApslResult", "ArMetrics", "BenchReport", "DSeparationOracle", "Dataset",
    "Edge", "G2Tester", "GroundTruthBn", "NeighborhoodSpec", "Pdag", "TestConfig",
    "apsl", "apsl_fs", "ar_metrics", "bench", "dag_to_cpdag", "fcbf", "forward_sample",
    "g2_test", "get_mb", "hiton_pc", "learn_part", "load_csv", "load_network", "mb_fs",
    "meek_rules", "parse_bif", "score_part", "symmetric_uncertainty", "true_neighborhood",
    "write_bif", "write_csv",
]
