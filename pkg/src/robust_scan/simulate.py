"""Monte Carlo studies: GMS model-selection frequencies and genome-wide
ranking of true SNPs among null SNPs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from robust_scan import stats as st
from robust_scan.ldmodel import (
    AlleleFreqs,
    GeneticModel,
    case_control_dists,
    hwe_genotype_probs,
    marker_model,
)
from robust_scan.parallel import ordered_map, substream
from robust_scan.stats import GenotypeCounts

# Ranking methods, in report order.
RANK_METHODS = ("CATT", "GMS", "MAX3", "MIN2", "PEARSON")

TRUE_SNP_MAFS = (0.1821, 0.2943, 0.1078, 0.4459, 0.1620, 0.1825)

PRESET_MIXES = {
    "recdom": ("REC", "REC", "ADD", "MUL", "DOM", "DOM"),
    "addmul": ("REC", "ADD", "ADD", "MUL", "MUL", "DOM"),
}

# functional-locus MAF used for the imperfect-LD scans
DEFAULT_FUNCTIONAL_MAF = 0.2

NULL_BLOCK = 50_000


def true_snp_maf_defaults() -> list[float]:
    return list(TRUE_SNP_MAFS)


@dataclass(frozen=True)
class TrueSnpSpec:
    model: GeneticModel
    maf_marker: float
    maf_functional: float
    grr_lambda2_star: float
    d_prime: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", GeneticModel.parse(self.model))
        if self.grr_lambda2_star < 1:
            raise ValueError("grr_lambda2_star must be >= 1")
        AlleleFreqs(self.maf_marker, self.maf_functional)
        if not (-1 <= self.d_prime <= 1):
            raise ValueError("d_prime must lie in [-1, 1]")

    def genotype_dists(self, k: float) -> tuple[np.ndarray, np.ndarray]:
        f = marker_model(
            self.model,
            self.grr_lambda2_star,
            AlleleFreqs(self.maf_marker, self.maf_functional),
            self.d_prime,
            k,
        )
        return case_control_dists(f, self.maf_marker, k)


def preset_true_snps(
    mix: str = "recdom",
    grr: float = 1.5,
    d_prime: float = 1.0,
    functional_maf: float | None = None,
) -> list[TrueSnpSpec]:
    """The six true SNPs of a preset mix, MAFs assigned in list order.

    With ``d_prime == 1`` the functional locus shares the marker MAF; otherwise
    it defaults to 0.2.
    """
    try:
        models = PRESET_MIXES[mix.lower()]
    except KeyError:
        raise ValueError(f"unknown preset {mix!r}; choose from {sorted(PRESET_MIXES)}") from None
    specs = []
    for model, maf in zip(models, TRUE_SNP_MAFS):
        if functional_maf is not None:
            q = functional_maf
        elif d_prime == 1.0:
            q = maf
        else:
            q = DEFAULT_FUNCTIONAL_MAF
        specs.append(TrueSnpSpec(GeneticModel(model), maf, q, grr, d_prime))
    return specs


@dataclass(frozen=True)
class ScanConfig:
    total_snps: int
    true_snps: tuple[TrueSnpSpec, ...]
    null_maf_range: tuple[float, float] = (0.1, 0.5)
    cases: int = 500
    controls: int = 500
    prevalence: float = 0.1
    replicates: int = 200
    top_l: int = 5000
    seed: int = 0
    threshold: float = st.DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        object.__setattr__(self, "true_snps", tuple(self.true_snps))
        object.__setattr__(self, "null_maf_range", tuple(self.null_maf_range))
        if self.total_snps <= 0:
            raise ValueError("total_snps must be positive")
        if len(self.true_snps) > self.total_snps:
            raise ValueError("more true SNPs than total_snps")
        if not (1 <= self.top_l <= self.total_snps):
            raise ValueError("top_l must lie in [1, total_snps]")
        lo, hi = self.null_maf_range
        if not (0 < lo <= hi < 1):
            raise ValueError("null_maf_range must lie within (0, 1)")
        if self.cases <= 0 or self.controls <= 0:
            raise ValueError("cases and controls must be positive")
        if not (0 < self.prevalence < 1):
            raise ValueError("prevalence must lie in (0, 1)")
        if self.replicates <= 0:
            raise ValueError("replicates must be positive")

    @property
    def n_null(self) -> int:
        return self.total_snps - len(self.true_snps)


@dataclass(frozen=True)
class MethodCriteria:
    prob_at_least_one: float
    avg_true_in_top: float
    mean_min_rank: float  # NaN when no replicate had a true SNP in the top
    replicates_with_hit: int


@dataclass(frozen=True)
class CriteriaReport:
    methods: dict[str, MethodCriteria]
    replicates: int
    n_true: int
    top_l: int


# ---------------------------------------------------------------------------
# genotype simulation


def simulate_true_snp_counts(
    spec: TrueSnpSpec, k: float, r: int, s: int, rng: np.random.Generator
) -> GenotypeCounts:
    case_dist, control_dist = spec.genotype_dists(k)
    return GenotypeCounts.from_rows(rng.multinomial(r, case_dist), rng.multinomial(s, control_dist))


def simulate_null_snp_counts(
    maf: float, r: int, s: int, rng: np.random.Generator
) -> GenotypeCounts:
    g = hwe_genotype_probs(maf)
    return GenotypeCounts.from_rows(rng.multinomial(r, g), rng.multinomial(s, g))


def _null_block(mafs: np.ndarray, r: int, s: int, rng: np.random.Generator):
    c = 1.0 - mafs
    g = np.stack([c * c, 2 * mafs * c, mafs * mafs], axis=-1)
    return rng.multinomial(r, g), rng.multinomial(s, g)


# ---------------------------------------------------------------------------
# ranking


def rank_keys(arrays: st.TableArrays, method: str) -> np.ndarray:
    """Scalar per table, larger = more significant; undefined tables get -inf."""
    method = method.upper()
    if method in ("CATT", "CATT_HALF"):
        key = np.abs(arrays.zh)
    elif method == "PEARSON":
        key = arrays.pearson
    elif method == "MAX3":
        key = arrays.max3
    elif method == "MIN2":
        key = -arrays.min2
    elif method == "GMS":
        key = np.abs(arrays.gms.statistic)
    else:
        raise ValueError(f"unknown ranking method {method!r}")
    return np.where(np.isnan(key), -np.inf, key)


def rank_key(c: GenotypeCounts, method: str) -> float:
    arrays = st.compute_all(np.array([c.cases]), np.array([c.controls]))
    return float(rank_keys(arrays, method)[0])


def rank_order(keys: np.ndarray) -> np.ndarray:
    """Indices sorted best first; ties keep input order."""
    return np.argsort(-keys, kind="stable")


def ranks_from_keys(keys: np.ndarray) -> np.ndarray:
    """1-based rank of every entry (a permutation of 1..len(keys))."""
    order = rank_order(keys)
    ranks = np.empty(len(keys), dtype=np.int64)
    ranks[order] = np.arange(1, len(keys) + 1)
    return ranks


def _replicate_true_ranks(config: ScanConfig, rep: int) -> dict[str, np.ndarray]:
    """Simulate one scan and return each method's ranks of the true SNPs.

    Null SNPs occupy indices 0..n_null-1 and the true SNPs come last, so ties
    are broken against them.
    """
    rng = substream(config.seed, rep)
    r, s = config.cases, config.controls
    lo, hi = config.null_maf_range
    case_blocks, control_blocks = [], []
    for start in range(0, config.n_null, NULL_BLOCK):
        size = min(NULL_BLOCK, config.n_null - start)
        mafs = rng.uniform(lo, hi, size)
        a, b = _null_block(mafs, r, s, rng)
        case_blocks.append(a)
        control_blocks.append(b)
    for spec in config.true_snps:
        cd, qd = spec.genotype_dists(config.prevalence)
        case_blocks.append(rng.multinomial(r, cd)[None, :])
        control_blocks.append(rng.multinomial(s, qd)[None, :])
    cases = np.concatenate(case_blocks)
    controls = np.concatenate(control_blocks)
    arrays = st.compute_all(cases, controls, config.threshold)
    n_true = len(config.true_snps)
    out = {}
    for method in RANK_METHODS:
        ranks = ranks_from_keys(rank_keys(arrays, method))
        out[method] = ranks[config.n_null:] if n_true else ranks[:0]
    return out


def summarize_ranks(
    true_ranks: list[dict[str, np.ndarray]], n_true: int, top_l: int
) -> CriteriaReport:
    methods = {}
    for method in RANK_METHODS:
        hits, min_ranks = [], []
        for rep in true_ranks:
            ranks = rep[method]
            in_top = ranks[ranks <= top_l]
            hits.append(len(in_top))
            if len(in_top):
                min_ranks.append(int(in_top.min()))
        hits_arr = np.array(hits, dtype=float)
        methods[method] = MethodCriteria(
            prob_at_least_one=float(np.mean(hits_arr > 0)),
            avg_true_in_top=float(np.mean(hits_arr)),
            mean_min_rank=float(np.mean(min_ranks)) if min_ranks else math.nan,
            replicates_with_hit=len(min_ranks),
        )
    return CriteriaReport(methods, replicates=len(true_ranks), n_true=n_true, top_l=top_l)


def run_scan_ranks(config: ScanConfig, workers: int | None = None) -> list[dict[str, np.ndarray]]:
    """Per-replicate true-SNP ranks, in replicate order."""
    return ordered_map(
        partial(_replicate_true_ranks, config), range(config.replicates), workers, processes=True
    )


def run_scan(config: ScanConfig, workers: int | None = None) -> CriteriaReport:
    ranks = run_scan_ranks(config, workers)
    return summarize_ranks(ranks, len(config.true_snps), config.top_l)


# ---------------------------------------------------------------------------
# model-selection study


@dataclass(frozen=True)
class SelectionCell:
    maf: float
    model: GeneticModel
    d_prime: float
    counts: tuple[int, int, int]  # REC, ADDMUL, DOM

    @property
    def replicates(self) -> int:
        return sum(self.counts)

    @property
    def frequencies(self) -> tuple[float, float, float]:
        n = self.replicates
        return tuple(c / n for c in self.counts)


@dataclass(frozen=True)
class ModelSelectionReport:
    cells: list[SelectionCell] = field(default_factory=list)

    def cell(self, maf: float, model: GeneticModel | str, d_prime: float) -> SelectionCell:
        model = GeneticModel.parse(model)
        for c in self.cells:
            if c.maf == maf and c.model is model and c.d_prime == d_prime:
                return c
        raise KeyError((maf, model, d_prime))


def _selection_counts(
    case_dist, control_dist, r, s, replicates, threshold, rng
) -> tuple[int, int, int]:
    counts = np.zeros(3, dtype=np.int64)
    needed, drawn = replicates, 0
    while needed:
        drawn += needed
        if drawn > 10 * replicates:
            raise RuntimeError("too many degenerate tables in model-selection study")
        cases = rng.multinomial(r, case_dist, size=needed)
        controls = rng.multinomial(s, control_dist, size=needed)
        model = st.gms_array(cases, controls, threshold).model
        ok = model >= 0
        counts += np.bincount(model[ok], minlength=3)
        needed -= int(np.count_nonzero(ok))
    return tuple(int(c) for c in counts)


def _selection_cell(task, *, k, lambda2_star, r, s, replicates, threshold, seed) -> SelectionCell:
    index, (maf, model, d_prime) = task
    spec = TrueSnpSpec(model, maf, maf, lambda2_star, d_prime)
    case_dist, control_dist = spec.genotype_dists(k)
    counts = _selection_counts(
        case_dist, control_dist, r, s, replicates, threshold, substream(seed, index)
    )
    return SelectionCell(maf, spec.model, d_prime, counts)


def run_model_selection_study(
    maf_grid,
    model_grid,
    d_prime_grid,
    k: float = 0.1,
    lambda2_star: float = 2.0,
    r: int = 250,
    s: int = 250,
    replicates: int = 10_000,
    seed: int = 0,
    threshold: float = st.DEFAULT_THRESHOLD,
    workers: int | None = None,
) -> ModelSelectionReport:
    """GMS selection frequencies for every (maf, model, D') cell, p = q."""
    grid = list(itertools.product(maf_grid, [GeneticModel.parse(m) for m in model_grid], d_prime_grid))
    if not grid:
        raise ValueError("grids must be nonempty")
    fn = partial(
        _selection_cell,
        k=k,
        lambda2_star=lambda2_star,
        r=r,
        s=s,
        replicates=replicates,
        threshold=threshold,
        seed=seed,
    )
    return ModelSelectionReport(ordered_map(fn, list(enumerate(grid)), workers))
