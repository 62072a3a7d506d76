"""Robust case-control association tests for genome-wide scans under
incomplete linkage disequilibrium, plus a Monte Carlo scan simulator."""

from robust_scan.errors import DegenerateTableError, ZeroVarianceError
from robust_scan.ldmodel import (
    AlleleFreqs,
    GeneticModel,
    GrrPair,
    HaplotypeTable,
    HwdPair,
    PenetranceTriple,
    TransitionMatrix,
    allele_correlation,
    baseline_penetrance,
    case_control_dists,
    grr_from_model,
    haplotype_table,
    hwd_coefficients,
    marker_grr,
    marker_penetrances,
    transition_matrix,
)
from robust_scan.stats import (
    GenotypeCounts,
    GmsResult,
    Method,
    SelectedModel,
    TestResult,
    catt,
    gms,
    hwdtt,
    max3,
    min2,
    orient_risk_allele,
    pearson,
)
from robust_scan.nulldist import (
    BootstrapConfig,
    bootstrap_pvalue,
    min2_joint_cdf,
    min2_pvalue,
)

__version__ = "0.1.0"

__all__ = [
    "AlleleFreqs",
    "BootstrapConfig",
    "DegenerateTableError",
    "GeneticModel",
    "GenotypeCounts",
    "GmsResult",
    "GrrPair",
    "HaplotypeTable",
    "HwdPair",
    "Method",
    "PenetranceTriple",
    "SelectedModel",
    "TestResult",
    "TransitionMatrix",
    "ZeroVarianceError",
    "allele_correlation",
    "baseline_penetrance",
    "bootstrap_pvalue",
    "case_control_dists",
    "catt",
    "gms",
    "grr_from_model",
    "haplotype_table",
    "hwd_coefficients",
    "hwdtt",
    "marker_grr",
    "marker_penetrances",
    "max3",
    "min2",
    "min2_joint_cdf",
    "min2_pvalue",
    "orient_risk_allele",
    "pearson",
    "transition_matrix",
]
