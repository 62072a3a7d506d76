import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as hst
from scipy import stats as sps

from robust_scan.errors import DegenerateTableError, ZeroVarianceError
from robust_scan.stats import (
    GenotypeCounts,
    Method,
    SelectedModel,
    catt,
    compute_all,
    gms,
    hwdtt,
    max3,
    min2,
    orient_risk_allele,
    pearson,
)

from oracles import catt_displayed, catt_generic, hwdtt_by_hand, null_tables, pearson_by_cells

EXAMPLE = GenotypeCounts(50, 100, 50, 60, 90, 50)
ENRICHED = GenotypeCounts(10, 20, 30, 30, 20, 10)


@hst.composite
def full_tables(draw):
    vals = [draw(hst.integers(0, 200)) for _ in range(6)]
    assume(sum(vals[:3]) > 0 and sum(vals[3:]) > 0)
    c = GenotypeCounts(*vals)
    assume(min(c.column_totals) > 0)
    return c


class TestGenotypeCounts:
    def test_derived(self):
        assert EXAMPLE.r == 200 and EXAMPLE.s == 200 and EXAMPLE.n == 400
        assert EXAMPLE.column_totals == (110, 190, 100)

    @pytest.mark.parametrize("vals", [(0, 0, 0, 1, 1, 1), (1, 1, 1, 0, 0, 0), (-1, 2, 3, 4, 5, 6), (1.5, 2, 3, 4, 5, 6)])
    def test_rejects(self, vals):
        with pytest.raises(ValueError):
            GenotypeCounts(*vals)

    def test_reversed(self):
        assert ENRICHED.reversed() == GenotypeCounts(30, 20, 10, 10, 20, 30)


class TestCatt:
    @pytest.mark.parametrize("x", [0.0, 0.25, 0.5, 1.0])
    def test_null_configuration(self, x):
        res = catt(GenotypeCounts(10, 20, 10, 20, 40, 20), x)
        assert res.statistic == pytest.approx(0, abs=1e-12)
        assert res.p_value == pytest.approx(1.0)

    def test_sign(self):
        assert catt(ENRICHED, 0.5).statistic > 0
        assert catt(ENRICHED.reversed(), 0.5).statistic < 0

    def test_method_tags(self):
        assert catt(EXAMPLE, 0.0).method is Method.CATT0
        assert catt(EXAMPLE, 0.5).method is Method.CATT_HALF
        assert catt(EXAMPLE, 1.0).method is Method.CATT1

    def test_displayed_denominator_regression(self):
        # displayed form with 0/1/2 scores: n=400, T=2000, V=83900
        oracle = catt_displayed(EXAMPLE.cases, EXAMPLE.controls)
        assert oracle == pytest.approx(math.sqrt(400) * 2000 / math.sqrt(200 * 200 * 83900), rel=1e-14)
        assert catt(EXAMPLE, 0.5).statistic == pytest.approx(oracle, rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 0.3])
    def test_matches_generic_oracle(self, x):
        assert catt(EXAMPLE, x).statistic == pytest.approx(catt_generic(EXAMPLE.cases, EXAMPLE.controls, x), rel=1e-12)

    def test_p_value_two_sided(self):
        res = catt(EXAMPLE, 0.5)
        assert res.p_value == pytest.approx(2 * sps.norm.sf(abs(res.statistic)))

    def test_zero_variance(self):
        # everyone in G1: variance of any score vanishes
        with pytest.raises(ZeroVarianceError):
            catt(GenotypeCounts(0, 10, 0, 0, 7, 0), 0.5)
        # with x=0 and G2 empty every subject scores 0
        with pytest.raises(ZeroVarianceError):
            catt(GenotypeCounts(4, 6, 0, 5, 5, 0), 0.0)

    def test_rejects_bad_score(self):
        with pytest.raises(ValueError):
            catt(EXAMPLE, 1.5)

    @settings(max_examples=200)
    @given(full_tables(), hst.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]))
    def test_reversal_covariance(self, c, x):
        a = catt(c.reversed(), x).statistic
        b = catt(c, 1 - x).statistic
        assert a == pytest.approx(-b, abs=1e-9)

    @settings(max_examples=200)
    @given(full_tables(), hst.sampled_from([0.0, 0.5, 1.0]))
    def test_generic_oracle_property(self, c, x):
        assert catt(c, x).statistic == pytest.approx(catt_generic(c.cases, c.controls, x), rel=1e-9, abs=1e-9)


class TestPearson:
    def test_proportional_rows(self):
        assert pearson(GenotypeCounts(10, 20, 10, 20, 40, 20)).statistic == pytest.approx(0, abs=1e-12)

    def test_hand_example(self):
        res = pearson(ENRICHED)
        assert res.statistic == pytest.approx(20.0, abs=1e-12)
        assert res.p_value == pytest.approx(math.exp(-10), rel=1e-10)

    def test_empty_column_reduces_df(self):
        c = GenotypeCounts(10, 30, 0, 20, 20, 0)
        res = pearson(c)
        assert res.statistic == pytest.approx(pearson_by_cells(c.cases, c.controls))
        assert res.p_value == pytest.approx(sps.chi2.sf(res.statistic, 1))

    def test_degenerate(self):
        with pytest.raises(DegenerateTableError):
            pearson(GenotypeCounts(0, 10, 0, 0, 7, 0))

    @settings(max_examples=200)
    @given(full_tables())
    def test_reversal_and_oracle(self, c):
        t = pearson(c).statistic
        assert t >= 0
        assert pearson(c.reversed()).statistic == pytest.approx(t, rel=1e-12, abs=1e-12)
        assert t == pytest.approx(pearson_by_cells(c.cases, c.controls), rel=1e-10, abs=1e-10)


class TestMax3:
    def test_null(self):
        assert max3(GenotypeCounts(10, 20, 10, 20, 40, 20)).statistic == pytest.approx(0, abs=1e-12)

    def test_example(self):
        expected = max(abs(catt_generic(EXAMPLE.cases, EXAMPLE.controls, x)) for x in (0, 0.5, 1))
        res = max3(EXAMPLE)
        assert res.statistic == pytest.approx(expected, rel=1e-12)
        assert res.p_value is None

    def test_skips_undefined_component(self):
        c = GenotypeCounts(4, 6, 0, 5, 5, 0)  # Z_0 undefined
        assert max3(c).statistic == pytest.approx(abs(catt(c, 1.0).statistic))

    def test_degenerate(self):
        with pytest.raises(DegenerateTableError):
            max3(GenotypeCounts(0, 10, 0, 0, 7, 0))

    @settings(max_examples=200)
    @given(full_tables())
    def test_dominates_components(self, c):
        m = max3(c).statistic
        for x in (0.0, 0.5, 1.0):
            assert m >= abs(catt(c, x).statistic) - 1e-12
        assert max3(c.reversed()).statistic == pytest.approx(m, rel=1e-12, abs=1e-12)


class TestMin2:
    def test_null(self):
        assert min2(GenotypeCounts(10, 20, 10, 20, 40, 20)).statistic == pytest.approx(1.0)

    def test_dominance_pattern_picks_pearson(self):
        c = GenotypeCounts(10, 80, 10, 40, 20, 40)
        res = min2(c)
        assert res.method is Method.MIN2
        assert res.p_value is None
        assert res.statistic == pearson(c).p_value
        assert pearson(c).p_value < catt(c, 0.5).p_value

    @settings(max_examples=200)
    @given(full_tables())
    def test_bounded_by_components(self, c):
        m = min2(c).statistic
        assert m <= catt(c, 0.5).p_value
        assert m <= pearson(c).p_value
        assert min2(c.reversed()).statistic == pytest.approx(m, rel=1e-9, abs=1e-15)


class TestHwdtt:
    def test_identical_proportions(self):
        assert hwdtt(GenotypeCounts(10, 20, 10, 20, 40, 20)).statistic == pytest.approx(0, abs=1e-12)

    def test_both_at_hwe(self):
        assert hwdtt(GenotypeCounts(49, 42, 9, 98, 84, 18)).statistic == pytest.approx(0, abs=1e-12)

    def test_example(self):
        delta1 = 0.25 - 0.5**2
        delta0 = 0.25 - (0.25 + 0.225) ** 2
        a = (100 + 190 / 2) / 400
        expected = math.sqrt(200 * 200 / 400) * (delta1 - delta0) / ((1 - a) * a)
        assert expected == pytest.approx(-0.975609756097561, rel=1e-12)
        assert hwdtt(EXAMPLE).statistic == pytest.approx(expected, rel=1e-12)
        assert hwdtt(EXAMPLE).statistic == pytest.approx(hwdtt_by_hand(EXAMPLE.cases, EXAMPLE.controls), rel=1e-12)

    @pytest.mark.parametrize("c", [GenotypeCounts(5, 0, 0, 7, 0, 0), GenotypeCounts(0, 0, 5, 0, 0, 7)])
    def test_degenerate(self, c):
        with pytest.raises(DegenerateTableError):
            hwdtt(c)

    @settings(max_examples=200)
    @given(full_tables())
    def test_reversal_invariant(self, c):
        z = hwdtt(c).statistic
        assert hwdtt(c.reversed()).statistic == pytest.approx(z, rel=1e-9, abs=1e-9)


class TestOrientation:
    def test_negative_trend_swaps(self):
        c = GenotypeCounts(30, 20, 10, 10, 20, 30)
        out, swapped = orient_risk_allele(c)
        assert swapped and out == GenotypeCounts(10, 20, 30, 30, 20, 10)

    def test_positive_trend_unchanged(self):
        assert orient_risk_allele(ENRICHED) == (ENRICHED, False)

    def test_tie_unchanged(self):
        c = GenotypeCounts(10, 20, 10, 20, 40, 20)
        assert orient_risk_allele(c) == (c, False)


class TestGms:
    def test_rec_selected(self):
        # excess homozygotes among cases
        c = GenotypeCounts(40, 20, 40, 25, 50, 25)
        res = gms(c)
        assert res.z_hwdtt > 1.645
        assert res.selected_model is SelectedModel.REC
        oriented, _ = orient_risk_allele(c)
        assert res.statistic == pytest.approx(catt(oriented, 0.0).statistic)

    def test_dom_selected(self):
        c = GenotypeCounts(10, 80, 10, 40, 20, 40)
        res = gms(c)
        assert res.selected_model is SelectedModel.DOM
        oriented, _ = orient_risk_allele(c)
        assert res.statistic == pytest.approx(catt(oriented, 1.0).statistic)

    def test_addmul_selected(self):
        c = GenotypeCounts(10, 20, 10, 20, 40, 20)
        res = gms(c)
        assert res.z_hwdtt == pytest.approx(0, abs=1e-12)
        assert res.selected_model is SelectedModel.ADDMUL
        assert res.statistic == pytest.approx(0, abs=1e-12)

    def test_threshold_rule(self):
        c = GenotypeCounts(40, 20, 40, 25, 50, 25)
        z = gms(c).z_hwdtt
        assert gms(c, threshold=z + 0.01).selected_model is SelectedModel.ADDMUL

    @settings(max_examples=200)
    @given(full_tables())
    def test_selection_invariant_and_reversal(self, c):
        res = gms(c)
        if res.z_hwdtt > 1.645:
            assert res.selected_model is SelectedModel.REC
        elif res.z_hwdtt < -1.645:
            assert res.selected_model is SelectedModel.DOM
        else:
            assert res.selected_model is SelectedModel.ADDMUL
        rev = gms(c.reversed())
        if abs(catt(c, 0.5).statistic) > 1e-9:
            assert abs(rev.statistic) == pytest.approx(abs(res.statistic), rel=1e-9, abs=1e-9)


class TestArrayPath:
    def test_matches_scalar_api(self):
        rng = np.random.default_rng(7)
        cases, controls = null_tables(rng, 300, 60, 80, 0.3)
        arr = compute_all(cases, controls)
        for i in range(300):
            c = GenotypeCounts.from_rows(cases[i], controls[i])
            if min(c.column_totals) == 0:
                continue
            assert arr.zh[i] == pytest.approx(catt(c, 0.5).statistic, abs=1e-12)
            assert arr.z0[i] == pytest.approx(catt(c, 0.0).statistic, abs=1e-12)
            assert arr.pearson[i] == pytest.approx(pearson(c).statistic, abs=1e-12)
            assert arr.max3[i] == pytest.approx(max3(c).statistic, abs=1e-12)
            assert arr.min2[i] == pytest.approx(min2(c).statistic, rel=1e-12)
            assert arr.hwdtt[i] == pytest.approx(hwdtt(c).statistic, abs=1e-12)
            g = gms(c)
            assert arr.gms.statistic[i] == pytest.approx(g.statistic, abs=1e-12)
            assert ("REC", "ADDMUL", "DOM")[arr.gms.model[i]] == g.selected_model.value

    def test_undefined_is_nan(self):
        arr = compute_all(np.array([[0, 10, 0]]), np.array([[0, 7, 0]]))
        assert np.isnan(arr.zh[0]) and np.isnan(arr.pearson[0]) and np.isnan(arr.max3[0])
        assert arr.gms.model[0] == -1


@pytest.fixture(scope="module")
def null_arrays():
    """Statistics on 100,000 tables with both groups from one multinomial."""
    rng = np.random.default_rng(2024)
    cases, controls = null_tables(rng, 100_000, 500, 500, 0.3)
    return compute_all(cases, controls)


@pytest.mark.slow
class TestNullBehaviour:
    @pytest.fixture
    def arrays(self, null_arrays):
        return null_arrays

    def test_catt_size(self, arrays):
        rate = np.mean(np.abs(arrays.zh) > 1.96)
        assert abs(rate - 0.05) <= 0.003

    def test_hwdtt_normal(self, arrays):
        assert sps.kstest(arrays.hwdtt, "norm").pvalue > 0.01

    def test_gms_selection_frequencies(self, arrays):
        freqs = np.bincount(arrays.gms.model, minlength=3) / len(arrays.gms.model)
        assert freqs == pytest.approx([0.05, 0.90, 0.05], abs=0.01)
