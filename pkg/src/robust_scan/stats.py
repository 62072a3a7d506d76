"""Association statistics for 2x3 case-control genotype tables.

The ``*_array`` functions take case and control counts as arrays of shape
``(..., 3)`` and return NaN wherever a statistic is undefined; they back both
the scan simulator and the scalar API at the bottom of the module, which
raises :class:`DegenerateTableError` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import stats as sps

from robust_scan.errors import DegenerateTableError, ZeroVarianceError

DEFAULT_THRESHOLD = 1.645


class Method(str, Enum):
    CATT0 = "CATT0"
    CATT_HALF = "CATT_HALF"
    CATT1 = "CATT1"
    PEARSON = "PEARSON"
    MAX3 = "MAX3"
    MIN2 = "MIN2"
    GMS = "GMS"
    HWDTT = "HWDTT"


class SelectedModel(str, Enum):
    REC = "REC"
    ADDMUL = "ADDMUL"
    DOM = "DOM"


# integer codes used by the array path
SELECTED_CODES = (SelectedModel.REC, SelectedModel.ADDMUL, SelectedModel.DOM)
_SCORE_FOR_CODE = (0.0, 0.5, 1.0)


def _split(cases, controls):
    cases = np.asarray(cases, dtype=float)
    controls = np.asarray(controls, dtype=float)
    r = cases.sum(axis=-1)
    s = controls.sum(axis=-1)
    return cases, controls, r, s, cases + controls, r + s


def trend_array(cases, controls, x: float) -> np.ndarray:
    """Cochran-Armitage trend statistic with genotype scores (0, x, 1)."""
    cases, _, r, s, nj, n = _split(cases, controls)
    w = np.array([0.0, x, 1.0])
    num = n * (cases @ w) - r * (nj @ w)
    var = n * (nj @ (w * w)) - (nj @ w) ** 2
    # var is exact for dyadic scores; the relative cut only matters otherwise
    ok = var > 1e-12 * n * n
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.sqrt(n) * num / np.sqrt(r * s * np.where(ok, var, 1.0))
    return np.where(ok, z, np.nan)


def pearson_array(cases, controls) -> tuple[np.ndarray, np.ndarray]:
    """Pearson chi-square and its degrees of freedom.

    Empty genotype columns contribute nothing and cost one degree of
    freedom each; fewer than two nonempty columns gives NaN.
    """
    cases, controls, r, s, nj, n = _split(cases, controls)
    nonempty = nj > 0
    safe = np.where(nonempty, nj, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        er = safe * (r / n)[..., None]
        es = safe * (s / n)[..., None]
        cells = (cases - er) ** 2 / er + (controls - es) ** 2 / es
    stat = np.where(nonempty, cells, 0.0).sum(axis=-1)
    df = nonempty.sum(axis=-1) - 1
    return np.where(df >= 1, stat, np.nan), df


def hwdtt_array(cases, controls) -> np.ndarray:
    """HWD trend statistic: normalised difference of case and control HWD."""
    cases, controls, r, s, nj, n = _split(cases, controls)
    with np.errstate(divide="ignore", invalid="ignore"):
        pc = cases / r[..., None]
        qc = controls / s[..., None]
        d1 = pc[..., 2] - (pc[..., 2] + pc[..., 1] / 2) ** 2
        d0 = qc[..., 2] - (qc[..., 2] + qc[..., 1] / 2) ** 2
        a = (nj[..., 2] + nj[..., 1] / 2) / n
        denom = (1 - a) * a
        z = np.sqrt(r * s / n) * (d1 - d0) / denom
    return np.where(denom > 0, z, np.nan)


def normal_pvalue(z) -> np.ndarray:
    return 2.0 * sps.norm.sf(np.abs(z))


def chi2_pvalue(stat, df) -> np.ndarray:
    df = np.asarray(df)
    with np.errstate(invalid="ignore"):
        return np.where(df >= 1, sps.chi2.sf(stat, np.maximum(df, 1)), np.nan)


def max3_array(z0, zh, z1) -> np.ndarray:
    m = np.stack([np.abs(z0), np.abs(zh), np.abs(z1)])
    allnan = np.isnan(m).all(axis=0)
    filled = np.where(np.isnan(m), -np.inf, m).max(axis=0)
    return np.where(allnan, np.nan, filled)


def reverse_columns(cases, controls, mask):
    """Swap G0 and G2 columns where ``mask`` is true."""
    cases = np.asarray(cases)
    controls = np.asarray(controls)
    m = np.asarray(mask)[..., None]
    return (
        np.where(m, cases[..., ::-1], cases),
        np.where(m, controls[..., ::-1], controls),
    )


class GmsArrays(NamedTuple):
    statistic: np.ndarray
    model: np.ndarray  # 0 = REC, 1 = ADDMUL, 2 = DOM, -1 = undefined
    z_hwdtt: np.ndarray
    swapped: np.ndarray


def gms_array(cases, controls, threshold: float = DEFAULT_THRESHOLD, zh=None) -> GmsArrays:
    """Two-phase genetic model selection statistic on risk-oriented tables."""
    if zh is None:
        zh = trend_array(cases, controls, 0.5)
    swapped = zh < 0
    oc, ok_ = reverse_columns(cases, controls, swapped)
    zw = hwdtt_array(oc, ok_)
    code = np.where(zw > threshold, 0, np.where(zw < -threshold, 2, 1))
    z0 = trend_array(oc, ok_, 0.0)
    z1 = trend_array(oc, ok_, 1.0)
    zho = np.abs(zh)
    stat = np.choose(code, [z0, zho, z1])
    undefined = np.isnan(zh) | np.isnan(zw) | np.isnan(stat)
    return GmsArrays(
        statistic=np.where(undefined, np.nan, stat),
        model=np.where(undefined, -1, code),
        z_hwdtt=zw,
        swapped=swapped,
    )


@dataclass
class TableArrays:
    """All statistics for a batch of tables (one entry per table)."""

    z0: np.ndarray
    zh: np.ndarray
    z1: np.ndarray
    pearson: np.ndarray
    pearson_df: np.ndarray
    hwdtt: np.ndarray
    max3: np.ndarray
    min2: np.ndarray
    gms: GmsArrays

    @property
    def catt_p(self) -> np.ndarray:
        return normal_pvalue(self.zh)

    @property
    def pearson_p(self) -> np.ndarray:
        return chi2_pvalue(self.pearson, self.pearson_df)


def compute_all(cases, controls, threshold: float = DEFAULT_THRESHOLD) -> TableArrays:
    z0 = trend_array(cases, controls, 0.0)
    zh = trend_array(cases, controls, 0.5)
    z1 = trend_array(cases, controls, 1.0)
    t, df = pearson_array(cases, controls)
    p_t = chi2_pvalue(t, df)
    p_z = normal_pvalue(zh)
    return TableArrays(
        z0=z0,
        zh=zh,
        z1=z1,
        pearson=t,
        pearson_df=df,
        hwdtt=hwdtt_array(cases, controls),
        max3=max3_array(z0, zh, z1),
        min2=np.minimum(p_t, p_z),
        gms=gms_array(cases, controls, threshold, zh=zh),
    )


# ---------------------------------------------------------------------------
# scalar API


@dataclass(frozen=True)
class GenotypeCounts:
    """Case genotype counts (r0, r1, r2) and control counts (s0, s1, s2),
    columns ordered by the number of B alleles."""

    r0: int
    r1: int
    r2: int
    s0: int
    s1: int
    s2: int

    def __post_init__(self) -> None:
        for name in ("r0", "r1", "r2", "s0", "s1", "s2"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.r == 0 or self.s == 0:
            raise ValueError("need at least one case and one control")

    @classmethod
    def from_rows(cls, cases, controls) -> GenotypeCounts:
        return cls(*cases, *controls)

    @property
    def cases(self) -> tuple[int, int, int]:
        return (self.r0, self.r1, self.r2)

    @property
    def controls(self) -> tuple[int, int, int]:
        return (self.s0, self.s1, self.s2)

    @property
    def r(self) -> int:
        return self.r0 + self.r1 + self.r2

    @property
    def s(self) -> int:
        return self.s0 + self.s1 + self.s2

    @property
    def n(self) -> int:
        return self.r + self.s

    @property
    def column_totals(self) -> tuple[int, int, int]:
        return (self.r0 + self.s0, self.r1 + self.s1, self.r2 + self.s2)

    def reversed(self) -> GenotypeCounts:
        return GenotypeCounts(self.r2, self.r1, self.r0, self.s2, self.s1, self.s0)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float | None
    method: Method

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class GmsResult:
    selected_model: SelectedModel
    z_hwdtt: float
    statistic: float
    oriented: bool


def _rows(c: GenotypeCounts):
    return np.array(c.cases, dtype=float), np.array(c.controls, dtype=float)


def _method_for_score(x: float) -> Method:
    return {0.0: Method.CATT0, 0.5: Method.CATT_HALF, 1.0: Method.CATT1}.get(
        float(x), Method.CATT_HALF
    )


def catt(c: GenotypeCounts, x: float) -> TestResult:
    """Trend test with scores (0, x, 1) and its two-sided normal p-value.

    ``method`` is tagged CATT0/CATT_HALF/CATT1 for the three standard scores
    and CATT_HALF otherwise.
    """
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"score x must lie in [0, 1], got {x!r}")
    z = float(trend_array(*_rows(c), x))
    if np.isnan(z):
        raise ZeroVarianceError(f"trend variance is zero for score {x} on {c}")
    return TestResult(z, float(normal_pvalue(z)), _method_for_score(x))


def pearson(c: GenotypeCounts) -> TestResult:
    t, df = pearson_array(*_rows(c))
    t = float(t)
    if np.isnan(t):
        raise DegenerateTableError(f"fewer than two nonempty genotype columns in {c}")
    return TestResult(t, float(chi2_pvalue(t, df)), Method.PEARSON)


def max3(c: GenotypeCounts) -> TestResult:
    cases, controls = _rows(c)
    z = [trend_array(cases, controls, x) for x in (0.0, 0.5, 1.0)]
    m = float(max3_array(*z))
    if np.isnan(m):
        raise DegenerateTableError(f"no trend component computable on {c}")
    return TestResult(m, None, Method.MAX3)


def min2(c: GenotypeCounts) -> TestResult:
    """Smaller of the Pearson and CATT(1/2) p-values.

    The value is a ranking statistic, not a p-value; see
    :func:`robust_scan.nulldist.min2_pvalue`.
    """
    p_t = pearson(c).p_value
    p_z = catt(c, 0.5).p_value
    return TestResult(min(p_t, p_z), None, Method.MIN2)


def hwdtt(c: GenotypeCounts) -> TestResult:
    z = float(hwdtt_array(*_rows(c)))
    if np.isnan(z):
        raise DegenerateTableError(f"HWDTT denominator is zero for {c}")
    return TestResult(z, float(normal_pvalue(z)), Method.HWDTT)


def orient_risk_allele(c: GenotypeCounts) -> tuple[GenotypeCounts, bool]:
    """Make B the risk allele: reverse the columns when Z_{1/2} < 0."""
    z = catt(c, 0.5).statistic
    if z < 0:
        return c.reversed(), True
    return c, False


def gms(c: GenotypeCounts, threshold: float = DEFAULT_THRESHOLD) -> GmsResult:
    oriented, swapped = orient_risk_allele(c)
    z_w = hwdtt(oriented).statistic
    if z_w > threshold:
        model = SelectedModel.REC
    elif z_w < -threshold:
        model = SelectedModel.DOM
    else:
        model = SelectedModel.ADDMUL
    x = _SCORE_FOR_CODE[SELECTED_CODES.index(model)]
    return GmsResult(model, z_w, catt(oriented, x).statistic, swapped)
