"""Ranking-and-selection laboratory.

Sequential sample-allocation procedures for selecting the design with the
largest mean from a finite set under normal observation noise: the myopic
APCS-B / AEOC-B / APCS-S procedures and their true-parameter oracle
variants, OCBA and Equal Allocation baselines, a solver for the asymptotic
optimal-allocation conditions, benchmark problems, and a seeded Monte Carlo
experiment harness with CSV output.
"""

from rslab.state import AllocationState, DesignStats, PairwiseParams
from rslab.acquisition import Measure
from rslab.policies import Policy, RunConfig, Trajectory
from rslab.problems import Problem, ProblemSpec
from rslab.optimality import OptimalAllocation, Residuals

__all__ = [
    "AllocationState",
    "DesignStats",
    "PairwiseParams",
    "Measure",
    "Policy",
    "RunConfig",
    "Trajectory",
    "Problem",
    "ProblemSpec",
    "OptimalAllocation",
    "Residuals",
]

__version__ = "0.1.0"
