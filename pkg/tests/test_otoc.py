from fractions import Fraction

import numpy as np
import pytest

from otoclab import otoc
from otoclab.linalg import make_rng, sample_haar_unitary, tensor_product
from otoclab.weingarten import weingarten_moment


def brute_force_expected_otoc(n: int) -> Fraction:
    """Haar average of the correlator by raw multi-index summation.

    Expands tr(P W rho W) with W = U^dag X U over the nonzero entries of
    the fixed tensors and evaluates each fourth-order entry expectation
    with weingarten_moment. Independent of the contracted derivation in
    expected_otoc_weingarten.
    """
    d = 2**n
    x1 = np.rint(otoc.sigma_x_first_qubit(n).real).astype(int)
    proj = np.rint(otoc.second_block_zero_projector(n).real).astype(int)
    x_support = [(e, f) for e in range(d) for f in range(d) if x1[e, f] != 0]
    total = Fraction(0)
    for a in range(d):
        if proj[a, a] == 0:
            continue
        for e, f in x_support:
            for g, h in x_support:
                total += weingarten_moment(2, d, (f, h), (0, a), (e, g), (a, 0))
    return total


class TestOtocValue:
    def test_identity_unitary(self):
        """V = I leaves the second block in the all-zero state."""
        assert otoc.otoc_value(np.eye(4), 2) == pytest.approx(1.0, abs=1e-12)

    def test_swap_sends_flip_to_second_block(self):
        """SWAP moves the qubit-1 flip onto qubit 2, so the overlap is zero."""
        swap = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
        )
        assert otoc.otoc_value(swap, 2) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_product_unitaries_give_one(self, n):
        """The second-block factor cancels for any U1 (x) U2."""
        rng = make_rng(100 + n)
        half = 2 ** (n // 2)
        for _ in range(10):
            v = tensor_product(
                sample_haar_unitary(half, rng), sample_haar_unitary(half, rng)
            )
            assert abs(otoc.otoc_value(v, n) - 1.0) < 1e-10

    def test_range_for_global_samples(self):
        rng = make_rng(200)
        for _ in range(50):
            value = otoc.otoc_value(sample_haar_unitary(16, rng), 4)
            assert -1e-10 <= value <= 1.0 + 1e-10

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError, match="even"):
            otoc.otoc_value(np.eye(8), 3)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            otoc.otoc_value(np.eye(8), 2)


class TestExpectedOtoc:
    def test_paper_values(self):
        assert otoc.expected_otoc_exact(2) == Fraction(7, 15)
        assert otoc.expected_otoc_exact(4) == Fraction(63, 255)
        assert otoc.expected_otoc_exact(6) == Fraction(511, 4095)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_weingarten_rederivation_matches_exactly(self, n):
        assert otoc.expected_otoc_weingarten(n) == otoc.expected_otoc_exact(n)

    def test_weingarten_rederivation_in_unit_interval(self):
        value = otoc.expected_otoc_weingarten(4)
        assert 0 < value < 1

    def test_brute_force_index_sum_oracle(self):
        """The raw multi-index Haar sum reproduces 7/15 at n = 2."""
        assert brute_force_expected_otoc(2) == Fraction(7, 15)

    def test_guards(self):
        with pytest.raises(ValueError):
            otoc.expected_otoc_exact(3)
        with pytest.raises(ValueError):
            otoc.expected_otoc_weingarten(8)


class TestMonteCarloExpectedOtoc:
    def test_matches_closed_form_n2(self):
        est, se = otoc.monte_carlo_expected_otoc(2, 3000, make_rng(5))
        assert abs(est - 7 / 15) <= 4 * se

    def test_same_seed_identical(self):
        a = otoc.monte_carlo_expected_otoc(2, 300, make_rng(6))
        b = otoc.monte_carlo_expected_otoc(2, 300, make_rng(6))
        assert a == b

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            otoc.monte_carlo_expected_otoc(2, 50, make_rng(1))


class TestEnsembleSampling:
    def test_global_dimension(self):
        u = otoc.sample_ensemble_unitary(otoc.EnsembleKind.GLOBAL_HAAR, 4, make_rng(1))
        assert u.shape == (16, 16)

    def test_product_is_block_kron(self):
        """A product draw has OTOC exactly one, a global draw almost never."""
        u = otoc.sample_ensemble_unitary(otoc.EnsembleKind.PRODUCT_HAAR, 4, make_rng(2))
        assert abs(otoc.otoc_value(u, 4) - 1.0) < 1e-10


class TestTheorem1:
    def test_product_always_declared_product(self):
        """Eq-(5)-style certainty: the all-zero outcome has probability one."""
        rng = make_rng(31)
        for _ in range(50):
            declared, correct = otoc.theorem1_trial(otoc.EnsembleKind.PRODUCT_HAAR, 4, rng)
            assert declared is otoc.EnsembleKind.PRODUCT_HAAR
            assert correct

    def test_global_error_rate_near_mean_otoc(self):
        """Global draws are misdeclared with probability E[OTOC] on average."""
        rng = make_rng(32)
        n, trials = 4, 800
        wrong = 0
        for _ in range(trials):
            _, correct = otoc.theorem1_trial(otoc.EnsembleKind.GLOBAL_HAAR, n, rng)
            wrong += int(not correct)
        rate = wrong / trials
        target = float(otoc.expected_otoc_exact(n))
        stderr = np.sqrt(target * (1 - target) / trials)
        assert abs(rate - target) <= 4 * stderr

    def test_success_probability_n2_window(self):
        """Balanced success sits near (1 + (1 - 7/15)) / 2 = 23/30."""
        rate, ci = otoc.success_probability(2, 2000, make_rng(33))
        assert 0.70 <= rate <= 0.83
        assert ci > 0

    def test_success_probability_deterministic(self):
        a = otoc.success_probability(2, 200, make_rng(34))
        b = otoc.success_probability(2, 200, make_rng(34))
        assert a == b

    def test_trial_floor(self):
        with pytest.raises(ValueError):
            otoc.success_probability(2, 50, make_rng(1))


class TestMarkovBound:
    @pytest.mark.parametrize("n,samples", [(4, 1200), (6, 400)])
    def test_tail_fraction_bounded(self, n, samples):
        """Prob[OTOC > eps] <= E[OTOC]/eps, checked empirically to 4 sigma."""
        rng = make_rng(40 + n)
        values = np.array(
            [otoc.otoc_value(sample_haar_unitary(2**n, rng), n) for _ in range(samples)]
        )
        mean = float(otoc.expected_otoc_exact(n))
        for eps in (0.3, 0.5):
            fraction = float(np.mean(values > eps))
            stderr = np.sqrt(max(fraction * (1 - fraction), 1e-12) / samples)
            assert fraction <= mean / eps + 4 * stderr
