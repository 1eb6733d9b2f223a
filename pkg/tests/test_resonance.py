"""Counting, margin and witness tests against independent slow oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest

from helpers_oracle import (
    float_margin_scan,
    float_near_threshold_mask,
    float_resonance_mask,
    float_wave_margin,
    rational_count,
    rational_margin_to_threshold,
)
from torusres.experiments import sample_params
from torusres.fixedpoint import HALF, MODULUS, FixedFraction
from torusres.resonance import (
    MAX_INDEX,
    CountingReport,
    DenominatorParams,
    ModeIndex,
    _ScanTables,
    count_resonances,
    denominator_value,
    dyadic_block_counts,
    margin_scan,
    mode_distance,
    predicted_count,
    resonance_counts_by_max,
    resonance_threshold_raw,
    wave_margin_scan,
)


def params_from(x: Fraction, y: Fraction) -> DenominatorParams:
    return DenominatorParams.from_fractions(x, y)


class TestDenominatorParams:
    def test_from_floats_splits_exactly(self):
        p = DenominatorParams.from_floats(2.75, -0.25)
        assert (p.x_int, p.x_frac.to_float()) == (2, 0.75)
        assert (p.y_int, p.y_frac.to_float()) == (-1, 0.75)
        assert p.x_float == 2.75 and p.y_float == -0.25

    def test_from_strings_sqrt(self):
        p = DenominatorParams.from_strings("sqrt:2", "sqrt:3")
        assert (p.x_int, p.y_int) == (1, 1)
        assert abs(p.x_float - math.sqrt(2)) < 1e-15
        assert abs(p.y_float - math.sqrt(3)) < 1e-15

    def test_json_round_trip(self):
        p = DenominatorParams.from_strings("sqrt:2", "-3/7")
        q = DenominatorParams.from_json_dict(p.to_json_dict())
        assert p == q

    def test_validation(self):
        f = FixedFraction(0)
        with pytest.raises(TypeError):
            DenominatorParams(0.5, f, 0, f)
        with pytest.raises(OverflowError):
            DenominatorParams(1 << 63, f, 0, f)
        with pytest.raises(ValueError):
            DenominatorParams.from_json_dict(
                {"x_int": 0, "x_frac": "3/2", "y_int": 0, "y_frac": "0"}
            )


class TestModeDistance:
    def test_rational_examples(self):
        p = params_from(Fraction(1, 4), Fraction(1, 8))
        # 1/4 + 4 * 1/8 = 3/4: distance 1/4 to nearest integer 1
        assert mode_distance(p, 1, 2) == (0.25, -1)
        # 4 * 1/4 + 4 * 1/8 = 3/2: exact half rounds away from the floor
        assert mode_distance(p, 2, 2) == (0.5, -2)

    def test_negative_parameter(self):
        p = DenominatorParams.from_floats(-0.25, 0.0)
        assert mode_distance(p, 1, 1) == (0.25, 0)

    def test_matches_exact_rational(self):
        x, y = Fraction(5, 9), Fraction(3, 11)
        p = params_from(x, y)
        for a in range(1, 12):
            for b in range(1, 12):
                t = (a * a * x + b * b * y) % 1
                exact = min(t, 1 - t)
                dist, c = mode_distance(p, a, b)
                assert dist == pytest.approx(float(exact), abs=1e-18)
                assert abs(a * a * x + b * b * y + c) == exact

    def test_index_overflow(self):
        p = DenominatorParams.from_floats(0.0, 0.0)
        with pytest.raises(OverflowError):
            mode_distance(p, MAX_INDEX + 1, 0)


class TestDenominatorValue:
    def test_exact_for_rationals(self):
        p = params_from(Fraction(1, 4), Fraction(1, 8))
        assert denominator_value(p, ModeIndex(1, 2, -1)) == -0.25
        assert denominator_value(p, ModeIndex(2, 0, 3)) == 4.0
        assert denominator_value(p, ModeIndex(0, 0, 5)) == 5.0

    def test_zero_mode_rejected(self):
        p = params_from(Fraction(1, 4), Fraction(1, 8))
        with pytest.raises(ValueError):
            denominator_value(p, ModeIndex(0, 0, 0))

    def test_c_overflow(self):
        p = params_from(Fraction(1, 4), Fraction(1, 8))
        with pytest.raises(OverflowError):
            denominator_value(p, ModeIndex(0, 1, 1 << 63))


class TestThresholdQuantization:
    def test_exact_powers_of_two(self):
        assert resonance_threshold_raw(4, 1.0) == 1 << 126
        assert resonance_threshold_raw(4, 2.0) == 1 << 124
        assert resonance_threshold_raw(4, 0.5) == HALF

    def test_cap_means_always_resonant(self):
        # m = 1 has threshold 1, above every possible distance (<= 1/2)
        assert resonance_threshold_raw(1, 7.0) == HALF + 1
        for seed in range(5):
            p = sample_params(11, seed)
            assert count_resonances(p, 3.0, 1).count == 1

    def test_floor_clamps_to_one(self):
        # thresholds below the grid keep only exact grid zeros
        assert resonance_threshold_raw(4, 200.0) == 1
        p = params_from(Fraction(1, 4), Fraction(1, 4))
        # m = 1 is always resonant; among m in {2, 3} only (2, 2) hits an
        # integer exactly on the grid ((4 + 4)/4 = 2), and its distance 0
        # stays strictly below the clamped threshold
        rep = count_resonances(p, 200.0, 3, retain_witnesses=True)
        assert [(w.a, w.b) for w in rep.witnesses] == [(1, 1), (2, 2)]

    def test_huge_exponent_small_grid(self):
        p = params_from(Fraction(1, 2), Fraction(1, 2))
        rep = count_resonances(p, 50.0, 2, retain_witnesses=True)
        assert [(w.a, w.b) for w in rep.witnesses] == [(1, 1), (2, 2)]


class TestCountAgainstRationalOracle:
    # window_gap is the exact min |dist - threshold| over the grid; the
    # nonzero gaps are astronomically larger than any rounding in the
    # quantized threshold, and the zero gap (second case) is an exact
    # threshold hit excluded by the strict inequality on both sides
    CASES = [
        (Fraction(1, 3), Fraction(2, 7), 1.0, 30, 43),
        (Fraction(1, 4), Fraction(1, 8), 0.5, 24, 87),
        (Fraction(5, 9), Fraction(3, 11), 2.0, 40, 41),
        (Fraction(7, 13), Fraction(1, 6), 1.0, 35, 18),
    ]

    @pytest.mark.parametrize("x,y,v,k,expected", CASES)
    def test_counts_match(self, x, y, v, k, expected):
        assert rational_count(x, y, Fraction(v), k) == expected
        assert count_resonances(params_from(x, y), v, k).count == expected

    def test_window_safety_certificates(self):
        gaps = [
            rational_margin_to_threshold(x, y, Fraction(v), k)
            for x, y, v, k, _ in self.CASES
        ]
        assert gaps[1] == 0  # exact threshold hit, see comment above
        assert min(g for g in gaps if g != 0) > Fraction(1, 10**8)


class TestCountAgainstFloatOracle:
    @pytest.mark.parametrize("seed,expected", [(60, 15), (61, 12), (62, 13)])
    def test_random_params_match(self, seed, expected):
        p = sample_params(seed, 0)
        x, y = p.x_float, p.y_float
        # certificate: no pair within 1e-9 of its threshold, so the naive
        # double oracle decides every pair correctly
        assert not float_near_threshold_mask(x, y, 1.0, 80, 1e-9).any()
        assert int(float_resonance_mask(x, y, 1.0, 80).sum()) == expected
        assert count_resonances(p, 1.0, 80).count == expected


class TestCountInvariants:
    def test_integer_parts_are_irrelevant(self):
        p = sample_params(3, 1)
        q = DenominatorParams(p.x_int + 5, p.x_frac, p.y_int - 3, p.y_frac)
        assert count_resonances(p, 1.0, 40).count == count_resonances(q, 1.0, 40).count

    def test_swap_symmetry(self):
        p = sample_params(3, 2)
        q = DenominatorParams(p.y_int, p.y_frac, p.x_int, p.x_frac)
        assert count_resonances(p, 0.7, 50).count == count_resonances(q, 0.7, 50).count

    def test_monotone_in_v_and_k(self):
        p = sample_params(3, 3)
        counts_v = [count_resonances(p, v, 60).count for v in (0.5, 1.0, 2.0)]
        assert counts_v == sorted(counts_v, reverse=True)
        counts_k = [count_resonances(p, 0.5, k).count for k in (10, 20, 40, 60)]
        assert counts_k == sorted(counts_k)

    def test_degenerate_params_hit_everything(self):
        p = DenominatorParams.from_floats(0.0, 0.0)
        rep = count_resonances(p, 2.0, 37)
        assert rep.count == 37 * 37
        by_max = resonance_counts_by_max(p, 2.0, 37)
        assert by_max.tolist() == [0] + [2 * m - 1 for m in range(1, 38)]

    def test_report_json(self):
        p = sample_params(3, 4)
        rep = count_resonances(p, 1.0, 10)
        assert rep.to_json_dict()["witness_count"] is None
        rep = count_resonances(p, 1.0, 10, retain_witnesses=True)
        assert rep.to_json_dict()["witness_count"] == len(rep.witnesses)


class TestWitnesses:
    def test_frozen_quadratic_irrational_pair(self):
        p = DenominatorParams.from_strings("sqrt:2", "sqrt:3")
        rep = count_resonances(p, 2.0, 200, retain_witnesses=True)
        assert rep.count == 2
        first, second = rep.witnesses
        assert (first.a, first.b, first.nearest_c) == (1, 1, -3)
        assert first.dist == pytest.approx(0.14626436994197234, abs=1e-15)
        assert first.threshold == 1.0
        assert (second.a, second.b, second.nearest_c) == (1, 3, -17)
        assert second.dist == pytest.approx(0.0026708304929906907, abs=1e-15)
        assert second.threshold == pytest.approx(1.0 / 81.0, rel=1e-15)

    def test_fields_are_consistent(self):
        p = sample_params(8, 0)
        rep = count_resonances(p, 0.8, 50, retain_witnesses=True)
        assert rep.count == len(rep.witnesses)
        pairs = [(w.a, w.b) for w in rep.witnesses]
        assert pairs == sorted(pairs)
        for w in rep.witnesses:
            dist, c = mode_distance(p, w.a, w.b)
            assert (w.dist, w.nearest_c) == (dist, c)
            assert w.threshold == math.pow(max(w.a**2, w.b**2), -0.8)
            assert w.dist < w.threshold or math.isclose(w.dist, w.threshold)

    def test_strictness_on_exact_grid(self):
        # dist == threshold exactly: the pair must not be counted
        p = params_from(Fraction(1, 4), Fraction(0))
        # (1, 1): dist 1/4, threshold at v=1 is 1/1; (2, b): dist 0
        rep = count_resonances(p, 1.0, 2, retain_witnesses=True)
        got = {(w.a, w.b) for w in rep.witnesses}
        # (1, 2) has dist 1/4 == threshold 1/4: excluded by strictness
        assert (1, 2) not in got
        assert got == {(1, 1), (2, 1), (2, 2)}


class TestScanKernels:
    def test_row_matches_tile(self):
        for i in range(3):
            p = sample_params(9, i)
            t = _ScanTables(p, 0.8, 60)
            res, m_max = t.tile_resonant(1, 61)
            for a in range(1, 61):
                assert np.array_equal(res[a - 1], t.row_resonant(a))
            idx = np.arange(1, 61)
            assert np.array_equal(m_max, np.maximum(idx[:, None], idx[None, :]))

    def test_thread_count_does_not_change_results(self):
        p = sample_params(9, 3)
        base = count_resonances(p, 0.6, 600, retain_witnesses=True)
        by_max = resonance_counts_by_max(p, 0.6, 600)
        for threads in (3, 8):
            rep = count_resonances(p, 0.6, 600, retain_witnesses=True, threads=threads)
            assert rep.count == base.count
            assert rep.witnesses == base.witnesses
            assert np.array_equal(resonance_counts_by_max(p, 0.6, 600, threads=threads), by_max)

    def test_counts_by_max_cumsum_equals_direct_counts(self):
        p = sample_params(9, 4)
        by_max = resonance_counts_by_max(p, 1.0, 64)
        cum = np.cumsum(by_max)
        for k in (1, 2, 7, 33, 64):
            assert int(cum[k]) == count_resonances(p, 1.0, k).count


class TestDyadicBlocks:
    def test_partition_and_totals(self):
        p = sample_params(12, 0)
        blocks = dyadic_block_counts(p, 0.5, 100)
        assert [b.j for b in blocks] == list(range(7))
        assert blocks[0].lo == 1 and blocks[-1].hi == 101
        for prev, cur in zip(blocks, blocks[1:]):
            assert prev.hi == cur.lo
        assert sum(b.count for b in blocks) == count_resonances(p, 0.5, 100).count

    def test_block_json(self):
        p = sample_params(12, 1)
        block = dyadic_block_counts(p, 1.0, 4)[1]
        assert block.to_json_dict() == {"j": 1, "lo": 2, "hi": 4, "count": block.count}

    def test_rejects_tiny_range(self):
        with pytest.raises(ValueError):
            dyadic_block_counts(sample_params(12, 2), 1.0, 1)


class TestMarginScan:
    def test_zero_params_vanish(self):
        p = DenominatorParams.from_floats(0.0, 0.0)
        result = margin_scan(p, 1.0, 5)
        assert result.min_margin == 0.0
        assert result.mode == ModeIndex(0, 1, 0)

    def test_half_integer_params(self):
        # first vanishing denominator in lexicographic order is (0, 2)
        p = DenominatorParams.from_floats(0.5, 0.5)
        result = margin_scan(p, 1.0, 8)
        assert result.min_margin == 0.0
        assert result.mode == ModeIndex(0, 2, -2)

    def test_agrees_with_float_oracle(self):
        p = DenominatorParams.from_strings("sqrt:2", "sqrt:3")
        result = margin_scan(p, 1.0, 50)
        oracle_margin, oracle_arg = float_margin_scan(p.x_float, p.y_float, 1.0, 50)
        assert result.min_margin == pytest.approx(oracle_margin, rel=1e-9)
        assert (result.mode.a, result.mode.b) == oracle_arg
        assert result.mode == ModeIndex(1, 3, -17)
        assert result.min_margin == pytest.approx(0.024037474436916215, rel=1e-12)

    def test_threads_invariance(self):
        p = sample_params(14, 0)
        base = margin_scan(p, 1.5, 120)
        for threads in (2, 5):
            assert margin_scan(p, 1.5, 120, threads=threads) == base

    def test_json(self):
        p = DenominatorParams.from_floats(0.5, 0.5)
        obj = margin_scan(p, 1.0, 4).to_json_dict()
        assert obj == {"min_margin": 0.0, "argmin": [0, 2, -2]}


class TestWaveMarginScan:
    def test_integer_params_vanish(self):
        p = DenominatorParams.from_floats(1.0, 0.0)
        for form in ("quadratic", "factored"):
            result = wave_margin_scan(p, 1.0, 6, form)
            assert result.min_margin == 0.0
            assert result.mode == ModeIndex(1, 1, 1)

    def test_agrees_with_float_oracle(self):
        p = DenominatorParams.from_strings("sqrt:2", "sqrt:3")
        quad = wave_margin_scan(p, 1.0, 30, "quadratic")
        o_margin, o_arg = float_wave_margin(p.x_float, p.y_float, 1.0, 30, factored=False)
        assert quad.min_margin == pytest.approx(o_margin, rel=1e-9)
        assert tuple(quad.mode) == o_arg == (1, 1, 2)
        fact = wave_margin_scan(p, 1.0, 30, "factored")
        o_margin, o_arg = float_wave_margin(p.x_float, p.y_float, 1.0, 30, factored=True)
        assert fact.min_margin == pytest.approx(o_margin, rel=1e-9)
        assert tuple(fact.mode) == o_arg == (28, 23, 45)

    def test_threads_invariance(self):
        p = sample_params(14, 1)
        base = wave_margin_scan(p, 1.0, 90, "quadratic")
        assert wave_margin_scan(p, 1.0, 90, "quadratic", threads=4) == base

    def test_factored_rejects_negative_params(self):
        p = DenominatorParams.from_floats(-0.5, 0.25)
        with pytest.raises(ValueError):
            wave_margin_scan(p, 1.0, 5, "factored")

    def test_rejects_unknown_form(self):
        p = DenominatorParams.from_floats(0.25, 0.25)
        with pytest.raises(ValueError):
            wave_margin_scan(p, 1.0, 5, "cubic")

    def test_integer_budget_guard(self):
        p = DenominatorParams(1 << 40, FixedFraction(0), 0, FixedFraction(0))
        with pytest.raises(OverflowError):
            wave_margin_scan(p, 1.0, 1 << 12, "quadratic")


class TestPredictedCount:
    def test_small_cases(self):
        assert predicted_count(1, 2.0) == 1.0
        assert predicted_count(3, 1.0) == pytest.approx(121 / 36, rel=1e-15)
        assert predicted_count(100, 2.0) == pytest.approx(2.6731723538638037, rel=1e-15)

    def test_monotone_in_k(self):
        values = [predicted_count(k, 1.0) for k in (1, 5, 25, 125)]
        assert values == sorted(values)


class TestArgumentValidation:
    def test_bad_exponent(self):
        p = sample_params(1, 0)
        for v in (0.0, -1.0, math.nan, math.inf):
            with pytest.raises(ValueError):
                count_resonances(p, v, 5)

    def test_bad_k(self):
        p = sample_params(1, 0)
        with pytest.raises(ValueError):
            count_resonances(p, 1.0, 0)
        with pytest.raises(OverflowError):
            count_resonances(p, 1.0, MAX_INDEX + 1)

    def test_bad_threads(self):
        p = sample_params(1, 0)
        with pytest.raises(ValueError):
            count_resonances(p, 1.0, 5, threads=0)
        with pytest.raises(ValueError):
            margin_scan(p, 1.0, 5, threads=-2)
