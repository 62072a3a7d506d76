"""Null distributions: the closed-form MIN2 joint CDF and p-value, and
parametric-bootstrap p-values for MAX3 and GMS."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import integrate
from scipy import stats as sps

from robust_scan import stats as st
from robust_scan.errors import DegenerateTableError
from robust_scan.parallel import ordered_map, substream

QUAD_TOL = 1e-12
BOOTSTRAP_CHUNK = 1000
RESAMPLE_CAP = 10


def _check_thresholds(t1: float, t2: float) -> None:
    if t1 < 0 or t2 < 0 or math.isnan(t1) or math.isnan(t2):
        raise ValueError(f"thresholds must be nonnegative, got ({t1}, {t2})")


def _arcsin_integral(t1: float, t2: float) -> float:
    """Integral over [t1, t2] of exp(-v/2) * arcsin(2 t1 / v - 1)."""
    if t2 <= t1:
        return 0.0
    if t1 == 0.0:
        # arcsin(-1) throughout
        return -math.pi / 2 * 2 * (1 - math.exp(-t2 / 2))

    # v = t1 + u^2 removes the square-root behaviour at v = t1
    def integrand(u: float) -> float:
        v = t1 + u * u
        # clip guards against 1 + 1e-16 near u = 0
        return 2 * u * math.exp(-v / 2) * math.asin(min(1.0, max(-1.0, 2 * t1 / v - 1)))

    val, _ = integrate.quad(
        integrand, 0.0, math.sqrt(t2 - t1), epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200
    )
    return val


def min2_joint_cdf(t1: float, t2: float) -> float:
    """Asymptotic null Pr(Z_{1/2}^2 < t1, T_chi2 < t2)."""
    _check_thresholds(t1, t2)
    if t1 >= t2:
        val = 1 - math.exp(-t2 / 2)
    else:
        val = (
            1
            - 0.5 * math.exp(-t1 / 2)
            - 0.5 * math.exp(-t2 / 2)
            + _arcsin_integral(t1, t2) / (2 * math.pi)
        )
    return min(1.0, max(0.0, val))


def min2_joint_sf(t1: float, t2: float) -> float:
    """``1 - min2_joint_cdf(t1, t2)`` evaluated without cancellation in the tail."""
    _check_thresholds(t1, t2)
    if t1 >= t2:
        val = math.exp(-t2 / 2)
    else:
        val = (
            0.5 * math.exp(-t1 / 2)
            + 0.5 * math.exp(-t2 / 2)
            - _arcsin_integral(t1, t2) / (2 * math.pi)
        )
    return min(1.0, max(0.0, val))


def chi2_upper_quantile(prob: float, df: int) -> float:
    """``t`` with Pr(chi2_df > t) = prob."""
    return float(sps.chi2.isf(prob, df))


def min2_pvalue(min2: float) -> float:
    """p-value of an observed MIN2 value under the asymptotic null."""
    if not (0.0 < min2 <= 1.0):
        raise ValueError(f"MIN2 must lie in (0, 1], got {min2!r}")
    if min2 == 1.0:
        return 1.0
    t1 = chi2_upper_quantile(min2, 1)
    t2 = chi2_upper_quantile(min2, 2)
    return min2_joint_sf(t1, t2)


# ---------------------------------------------------------------------------
# bootstrap


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.replicates < 100:
            raise ValueError("bootstrap needs at least 100 replicates")


BOOTSTRAP_METHODS = (st.Method.MAX3, st.Method.GMS)


def _bootstrap_statistic(method: st.Method, cases, controls, threshold: float) -> np.ndarray:
    if method is st.Method.MAX3:
        z = [st.trend_array(cases, controls, x) for x in (0.0, 0.5, 1.0)]
        return st.max3_array(*z)
    return np.abs(st.gms_array(cases, controls, threshold).statistic)


def _bootstrap_chunk(
    chunk: int,
    *,
    size: int,
    r: int,
    s: int,
    probs: np.ndarray,
    method: st.Method,
    observed: float,
    threshold: float,
    seed: int,
) -> int:
    rng = substream(seed, chunk)
    needed, hits, draws = size, 0, 0
    while needed:
        draws += needed
        if draws > RESAMPLE_CAP * size:
            raise DegenerateTableError("too many degenerate bootstrap tables")
        cases = rng.multinomial(r, probs, size=needed)
        controls = rng.multinomial(s, probs, size=needed)
        stat = _bootstrap_statistic(method, cases, controls, threshold)
        ok = ~np.isnan(stat)
        hits += int(np.count_nonzero(stat[ok] >= observed))
        needed -= int(np.count_nonzero(ok))
    return hits


def bootstrap_pvalue(
    c: st.GenotypeCounts,
    method: st.Method | str,
    cfg: BootstrapConfig = BootstrapConfig(),
    threshold: float = st.DEFAULT_THRESHOLD,
    workers: int | None = None,
) -> float:
    """Parametric-bootstrap p-value for MAX3 or |GMS|.

    Both groups are resampled from the pooled genotype proportions.  The
    replicates are split into fixed chunks, each with its own seed substream,
    so the result does not depend on ``workers``.
    """
    method = st.Method(method)
    if method not in BOOTSTRAP_METHODS:
        raise ValueError(f"bootstrap supports MAX3 and GMS, not {method.value}")
    if method is st.Method.MAX3:
        observed = st.max3(c).statistic
    else:
        observed = abs(st.gms(c, threshold).statistic)
    probs = np.array(c.column_totals, dtype=float) / c.n
    n_chunks = -(-cfg.replicates // BOOTSTRAP_CHUNK)
    sizes = [BOOTSTRAP_CHUNK] * (n_chunks - 1) + [cfg.replicates - BOOTSTRAP_CHUNK * (n_chunks - 1)]
    # tiny relative slack so ties with the observed value count as exceedances
    obs = observed * (1 - 1e-12)
    tasks = [
        partial(
            _bootstrap_chunk,
            i,
            size=sizes[i],
            r=c.r,
            s=c.s,
            probs=probs,
            method=method,
            observed=obs,
            threshold=threshold,
            seed=cfg.seed,
        )
        for i in range(n_chunks)
    ]
    hits = sum(ordered_map(lambda task: task(), tasks, workers))
    return (1 + hits) / (cfg.replicates + 1)
