import math
from fractions import Fraction

import numpy as np
import pytest

from otoclab import permutations as sg
from otoclab import weingarten as wg
from otoclab.linalg import make_rng


class TestGramMatrix:
    def test_k1_is_scalar_d(self):
        assert wg.gram_matrix(1, 7).entries == ((7,),)

    def test_k2_hand_counts(self):
        """#(e) = 2 and #(transposition) = 1 give [[d^2, d], [d, d^2]]."""
        assert wg.gram_matrix(2, 3).entries == ((9, 3), (3, 9))
        assert wg.gram_matrix(2, 2).entries == ((4, 2), (2, 4))

    def test_symmetric_with_dk_diagonal(self):
        g = wg.gram_matrix(3, 4)
        n = len(g.perms)
        for i in range(n):
            assert g.entries[i][i] == 4**3
            for j in range(n):
                assert g.entries[i][j] == g.entries[j][i]

    def test_guards(self):
        with pytest.raises(ValueError):
            wg.gram_matrix(0, 3)
        with pytest.raises(ValueError):
            wg.gram_matrix(9, 3)
        with pytest.raises(ValueError):
            wg.gram_matrix(2, 0)


class TestWeingartenTable:
    def test_k1(self):
        for d in (1, 2, 5, 16):
            assert wg.weingarten_table(1, d).values == {(1,): Fraction(1, d)}

    def test_k2_d2_hand_inverse(self):
        """Inverting [[4, 2], [2, 4]] by hand gives 1/3 and -1/6."""
        table = wg.weingarten_table(2, 2)
        assert table.values[(1, 1)] == Fraction(1, 3)
        assert table.values[(2,)] == Fraction(-1, 6)

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_k2_closed_forms(self, d):
        """Wg(e) = 1/(d^2-1) and Wg(swap) = -1/(d(d^2-1)) from the 2x2 inverse."""
        table = wg.weingarten_table(2, d)
        assert table.values[(1, 1)] == Fraction(1, d * d - 1)
        assert table.values[(2,)] == Fraction(-1, d * (d * d - 1))

    @pytest.mark.parametrize("d", [3, 4, 8])
    def test_k3_closed_forms(self, d):
        """Order-3 values match the standard rational closed forms in d."""
        table = wg.weingarten_table(3, d)
        denom = d * (d * d - 1) * (d * d - 4)
        assert table.values[(1, 1, 1)] == Fraction(d * d - 2, denom)
        assert table.values[(2, 1)] == Fraction(-1, (d * d - 1) * (d * d - 4))
        assert table.values[(3,)] == Fraction(2, denom)

    def test_rank_deficient_dimension_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            wg.weingarten_table(3, 2)

    @pytest.mark.parametrize("k,d", [(2, 2), (3, 3), (3, 7), (4, 4)])
    def test_orthogonality_exact(self, k, d):
        assert wg.orthogonality_holds(k, d)

    def test_class_function_on_conjugates(self):
        """Wg(r s r^-1) == Wg(s) for every conjugating r, k = 4."""
        table = wg.weingarten_table(4, 5)
        group = sg.enumerate_group(4)
        sigma = (1, 2, 0, 3)
        for rho in group[::5]:
            conj = sg.compose(sg.compose(rho, sigma), sg.inverse(rho))
            assert table.value(conj) == table.value(sigma)

    def test_json_export_round_trip(self):
        payload = wg.weingarten_table(2, 3).to_json()
        assert payload["k"] == 2 and payload["d"] == 3
        entries = {tuple(e["cycle_type"]): e for e in payload["entries"]}
        assert entries[(1, 1)]["numerator"] == "1"
        assert entries[(1, 1)]["denominator"] == "8"
        assert entries[(2,)]["numerator"] == "-1"
        assert entries[(2,)]["denominator"] == "24"


class TestLemma6:
    @pytest.mark.parametrize("d", [1, 2, 7])
    def test_k1_single_term(self, d):
        assert wg.lemma6_sum(1, d) == Fraction(1, d)

    def test_k2_d2(self):
        """1/3 + 1/6 = 1/2 = 0!/2!."""
        assert wg.lemma6_sum(2, 2) == Fraction(1, 2)

    def test_k2_d3(self):
        """1/8 + 1/24 = 1/6 = 1!/3!."""
        assert wg.lemma6_sum(2, 3) == Fraction(1, 6)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_factorial_identity(self, k):
        for d in range(k, 11):
            expected = Fraction(math.factorial(d - k), math.factorial(d))
            assert wg.lemma6_sum(k, d) == expected

    def test_d_below_k_rejected(self):
        with pytest.raises(ValueError):
            wg.lemma6_sum(3, 2)


class TestWeingartenMoment:
    def test_k1_diagonal(self):
        """E|U_00|^2 = 1/d: only the identity pair contributes."""
        for d in (2, 4, 7):
            assert wg.weingarten_moment(1, d, (0,), (0,), (0,), (0,)) == Fraction(1, d)

    def test_k1_mismatch_vanishes(self):
        assert wg.weingarten_moment(1, 3, (0,), (0,), (1,), (0,)) == 0

    def test_k2_distinct_diagonal(self):
        """E[U_00 U_11 conj(U_00 U_11)] = 1/(d^2 - 1); 1/3 at d = 2."""
        for d in (2, 3, 5):
            got = wg.weingarten_moment(2, d, (0, 1), (0, 1), (0, 1), (0, 1))
            assert got == Fraction(1, d * d - 1)
        assert wg.weingarten_moment(2, 2, (0, 1), (0, 1), (0, 1), (0, 1)) == Fraction(1, 3)

    def test_k2_repeated_index(self):
        """E|U_00|^4 = 2/(d(d+1)): all four permutation pairs survive."""
        for d in (2, 3, 6):
            got = wg.weingarten_moment(2, d, (0, 0), (0, 0), (0, 0), (0, 0))
            assert got == Fraction(2, d * (d + 1))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="length"):
            wg.weingarten_moment(2, 3, (0,), (0, 1), (0, 1), (0, 1))

    def test_out_of_range_index_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            wg.weingarten_moment(1, 2, (2,), (0,), (0,), (0,))


class TestMonteCarloMoment:
    def test_k1_diagonal_matches_exact(self):
        est, se = wg.monte_carlo_moment(1, 4, (0,), (0,), (0,), (0,), 4000, make_rng(3))
        assert abs(est - 0.25) <= 4 * se

    def test_mismatched_moment_is_noise(self):
        est, se = wg.monte_carlo_moment(1, 4, (0,), (0,), (1,), (1,), 2000, make_rng(4))
        assert abs(est) <= 4 * se

    def test_same_seed_bitwise_identical(self):
        a = wg.monte_carlo_moment(2, 3, (0, 1), (0, 1), (0, 1), (0, 1), 500, make_rng(9))
        b = wg.monte_carlo_moment(2, 3, (0, 1), (0, 1), (0, 1), (0, 1), 500, make_rng(9))
        assert a == b

    def test_sample_floor(self):
        with pytest.raises(ValueError, match="100"):
            wg.monte_carlo_moment(1, 2, (0,), (0,), (0,), (0,), 50, make_rng(1))

    @pytest.mark.parametrize(
        "k,d,pattern",
        [
            (1, 2, ((0,), (1,), (0,), (1,))),
            (2, 4, ((0, 1), (2, 3), (0, 1), (2, 3))),
            (2, 4, ((0, 0), (1, 1), (0, 0), (1, 1))),
            (3, 8, ((0, 1, 2), (0, 1, 2), (0, 1, 2), (0, 1, 2))),
            (3, 4, ((0, 0, 1), (0, 1, 2), (0, 0, 1), (0, 1, 2))),
        ],
    )
    def test_exact_agrees_with_monte_carlo(self, k, d, pattern):
        """The double permutation sum matches Haar sampling on a small grid."""
        row, col, row_p, col_p = pattern
        exact = float(wg.weingarten_moment(k, d, row, col, row_p, col_p))
        est, se = wg.monte_carlo_moment(
            k, d, row, col, row_p, col_p, 4000, make_rng(1000 + 10 * k + d)
        )
        assert abs(est.real - exact) <= 4 * se
        assert abs(est.imag) <= 4 * se


class TestAsymptoticReport:
    def test_k1_ratio_is_one(self):
        for d in (1, 2, 9, 30):
            report = wg.wg_asymptotic_report(1, d)
            assert len(report.rows) == 1
            assert report.rows[0].ratio == Fraction(1)

    def test_k2_d16_identity_ratio(self):
        report = wg.wg_asymptotic_report(2, 16)
        by_type = {row.cycle_type: row for row in report.rows}
        assert by_type[(1, 1)].ratio == Fraction(256, 255)

    @pytest.mark.parametrize("d", [2, 4, 16, 63])
    def test_k2_corollary_quantity_below_one(self, d):
        """(d^2/(d^2-1)) / 2^(7/2) <= 1 for every d >= 2."""
        report = wg.wg_asymptotic_report(2, d)
        expected = (d * d / (d * d - 1)) / 2**3.5
        assert report.corollary1_quantity == pytest.approx(expected, rel=1e-12)
        assert report.corollary1_quantity <= 1.0

    def test_reports_both_sides_without_asserting(self):
        """The claimed sandwich sides are recorded as flags, not enforced."""
        report = wg.wg_asymptotic_report(2, 16)
        for row in report.rows:
            assert isinstance(row.lower_holds, bool)
            assert row.upper_bound is None or isinstance(row.upper_holds, bool)
        # The claimed lower orientation actually fails here: 256/255 < 16/15.
        assert not report.rows[0].lower_holds

    def test_upper_side_none_when_denominator_nonpositive(self):
        report = wg.wg_asymptotic_report(3, 3)
        assert report.rows[0].upper_bound is None
        assert not report.bounds_applicable
