import numpy as np
import pytest

from apfun import (
    ApfunError,
    CircleSet,
    ClassificationError,
    SamplingError,
    SerializationError,
    TrigPolynomial,
    bohr_mean_quadrature,
    bohr_spectrum,
    circle_image,
    detected_frequencies,
    epsilon_period_check,
    evaluate,
    fourier_coeff,
    quadrature_grid,
    split_by_circle_sets,
)

SQRT2 = np.sqrt(2.0)


def _samples(f: TrigPolynomial, T: float, top: float = 1.0):
    times = quadrature_grid(T, top)
    return times, f.evaluate(times)


class TestTrigPolynomial:
    def test_canonical_form_sorts_and_merges(self):
        f = TrigPolynomial.from_terms([(2.0, 1.0), (-1.0, 2.0), (2.0 + 1e-12, 0.5)], 1)
        assert f.frequencies.tolist() == [-1.0, 2.0]
        assert f.coefficients[1, 0] == pytest.approx(1.5)

    def test_cancellation_leaves_zero(self):
        f = TrigPolynomial.single(1.0, [1.0]) - TrigPolynomial.single(1.0, [1.0])
        assert f.is_zero()
        assert bohr_spectrum(f) == []

    def test_evaluate_scalar_and_array(self):
        f = TrigPolynomial.from_terms([(1.0, [1.0]), (SQRT2, [0.4])], 1)
        t = 0.7
        expected = np.exp(1j * t) + 0.4 * np.exp(1j * SQRT2 * t)
        assert evaluate(f, t)[0] == pytest.approx(expected, abs=1e-15)
        values = evaluate(f, np.array([0.0, t]))
        assert values.shape == (2, 1)
        assert values[1, 0] == pytest.approx(expected, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ApfunError):
            TrigPolynomial.single(1.0, [1.0, 2.0], 2) + TrigPolynomial.single(1.0, [1.0])

    def test_shift_keeps_spectrum_and_translates(self):
        f = TrigPolynomial.from_terms([(2.0, [3.0]), (-SQRT2, [1.0])], 1)
        tau = 1.234
        g = f.shift(tau)
        assert bohr_spectrum(g) == bohr_spectrum(f)
        times = np.linspace(-3, 3, 17)
        np.testing.assert_allclose(g.evaluate(times), f.evaluate(times + tau), atol=1e-13)

    def test_real_cosines_are_real(self):
        f = TrigPolynomial.from_real_cosines([(1.0, [2.0]), (3.0, [0.5])])
        values = f.evaluate(np.linspace(0, 10, 41))
        assert np.max(np.abs(values.imag)) < 1e-14
        assert values[0, 0].real == pytest.approx(2.5)

    def test_malformed_document(self):
        with pytest.raises(SerializationError):
            TrigPolynomial.from_dict({"dimension": 1, "terms": [{"frequency": 1.0, "re": [1.0], "im": []}]})
        with pytest.raises(SerializationError):
            TrigPolynomial.from_dict({"terms": []})

    def test_sup_norm_bound(self):
        f = TrigPolynomial.from_terms([(1.0, [1.0]), (SQRT2, [0.4])], 1)
        assert f.sup_norm_bound() == pytest.approx(1.4)


class TestFourierCoefficients:
    def test_stored_terms_are_exact(self):
        f = TrigPolynomial.from_terms([(2.0, [3.0]), (-SQRT2, [1.0j])], 1)
        assert fourier_coeff(f, 2.0)[0] == 3.0
        assert fourier_coeff(f, -SQRT2)[0] == 1.0j
        assert fourier_coeff(f, 2.0 + 1e-6)[0] == 0.0

    def test_bohr_mean_on_spectrum(self):
        f = TrigPolynomial.single(1.0, [1.0])
        times, values = _samples(f, 200.0)
        mean = bohr_mean_quadrature(times, values, 1.0, 200.0)
        assert abs(mean[0] - 1.0) <= 0.01

    def test_bohr_mean_off_spectrum(self):
        f = TrigPolynomial.single(1.0, [1.0])
        times, values = _samples(f, 200.0, 2.0)
        assert abs(bohr_mean_quadrature(times, values, 2.0, 200.0)[0]) <= 0.01

    def test_bohr_mean_of_zero(self):
        times = quadrature_grid(200.0, 1.0)
        mean = bohr_mean_quadrature(times, np.zeros_like(times), 0.3, 200.0)
        assert mean[0] == 0.0

    def test_bohr_mean_matches_coefficients(self):
        f = TrigPolynomial.from_terms([(2.0, [3.0]), (-SQRT2, [1.0])], 1)
        T = 200.0
        times, values = _samples(f, T, 2.0)
        for lam in (2.0, -SQRT2, 0.5):
            mean = bohr_mean_quadrature(times, values, lam, T)
            assert abs(mean[0] - fourier_coeff(f, lam)[0]) <= 10.0 / T

    def test_hann_window_suppresses_leakage(self):
        f = TrigPolynomial.single(1.0, [1.0])
        T = 200.0
        times, values = _samples(f, T, np.sqrt(3.0))
        rect = abs(bohr_mean_quadrature(times, values, np.sqrt(3.0), T, window="rect")[0])
        hann = abs(bohr_mean_quadrature(times, values, np.sqrt(3.0), T, window="hann")[0])
        assert hann < 1e-4
        assert hann < rect

    def test_sampling_errors(self):
        times = quadrature_grid(50.0, 1.0)
        with pytest.raises(SamplingError):
            bohr_mean_quadrature(times, np.ones_like(times), 1.0, 50.0)
        coarse = np.linspace(-200.0, 200.0, 101)
        with pytest.raises(SamplingError):
            bohr_mean_quadrature(coarse, np.ones_like(coarse), 1.0, 200.0)
        with pytest.raises(SamplingError):
            grid = quadrature_grid(100.0, 1.0)
            bohr_mean_quadrature(grid, np.ones_like(grid), 1.0, 200.0)

    def test_unknown_window(self):
        times = quadrature_grid(200.0, 1.0)
        with pytest.raises(ApfunError):
            bohr_mean_quadrature(times, np.ones_like(times), 1.0, 200.0, window="blackman")

    def test_detected_frequencies(self):
        f = TrigPolynomial.from_terms([(1.0, [1.0]), (SQRT2, [0.4])], 1)
        found = detected_frequencies(f.evaluate, [1.0, SQRT2, np.sqrt(3.0)], 200.0, 1e-3)
        assert found == pytest.approx([1.0, SQRT2])


class TestSpectra:
    def test_bohr_spectrum_reads_terms(self):
        f = TrigPolynomial.from_terms([(2.0, [3.0]), (-SQRT2, [1.0])], 1)
        assert bohr_spectrum(f) == pytest.approx([-SQRT2, 2.0])
        assert bohr_spectrum(TrigPolynomial.zero()) == []

    @pytest.mark.parametrize("freqs, expected", [
        ([2 * np.pi], [0.0]),
        ([0.0], [0.0]),
        ([1.0, 1.0 + 2 * np.pi], [1.0]),
        ([-np.pi / 2], [3 * np.pi / 2]),
    ])
    def test_circle_image(self, freqs, expected):
        assert circle_image(freqs).to_list() == pytest.approx(expected, abs=1e-12)

    def test_circle_image_wraps_near_two_pi(self):
        image = circle_image([0.0, 2 * np.pi - 1e-12])
        assert len(image) == 1

    def test_circle_image_invariant_under_full_turns(self, rng):
        freqs = rng.uniform(-20, 20, size=6)
        shifted = freqs + 2 * np.pi * rng.integers(-3, 4, size=6)
        assert circle_image(shifted).to_list() == pytest.approx(circle_image(freqs).to_list(), abs=1e-9)

    def test_circle_set_distances(self):
        S = CircleSet.from_angles([0.1, 6.2])
        assert S.distance_to(0.0) == pytest.approx(2 * np.pi - 6.2)
        assert S.separation(CircleSet.from_angles([3.0])) == pytest.approx(2.9)
        assert CircleSet.empty().separation(S) == float("inf")
        assert S.minus(CircleSet.from_angles([0.1005]), 1e-3).to_list() == pytest.approx([6.2])


class TestEpsilonPeriods:
    def test_exact_period(self):
        ok, bound = epsilon_period_check(TrigPolynomial.single(1.0, [1.0]), 2 * np.pi, 1e-12)
        assert ok
        assert bound < 1e-12

    def test_antipodal_shift(self):
        ok, bound = epsilon_period_check(TrigPolynomial.single(1.0, [1.0]), np.pi, 0.1)
        assert not ok
        assert bound == pytest.approx(2.0)

    def test_two_frequency_grid_search(self):
        f = TrigPolynomial.from_terms([(1.0, [1.0]), (SQRT2, [1.0])], 1)
        taus = np.arange(1.0, 1e4, 0.005)
        bounds = np.abs(np.exp(1j * taus) - 1) + np.abs(np.exp(1j * SQRT2 * taus) - 1)
        best = float(taus[np.argmin(bounds)])
        ok, bound = epsilon_period_check(f, best, 0.05)
        assert ok
        assert bound <= 0.05

    def test_zero_function_and_bad_eps(self):
        assert epsilon_period_check(TrigPolynomial.zero(), 0.3, 1e-3) == (True, 0.0)
        with pytest.raises(ApfunError):
            epsilon_period_check(TrigPolynomial.zero(), 0.3, 0.0)


class TestSplitting:
    def test_partition_by_frequency(self):
        f = TrigPolynomial.from_terms([(1.0, [1.0]), (np.pi / 2, [1.0])], 1)
        first, second = split_by_circle_sets(f, CircleSet.from_angles([1.0]),
                                             CircleSet.from_angles([np.pi / 2]), 0.1)
        assert bohr_spectrum(first) == [1.0]
        assert bohr_spectrum(second) == pytest.approx([np.pi / 2])
        summed = first + second
        np.testing.assert_array_equal(summed.frequencies, f.frequencies)
        np.testing.assert_array_equal(summed.coefficients, f.coefficients)

    def test_all_terms_in_first_set(self):
        f = TrigPolynomial.from_terms([(1.0, [1.0]), (1.0 + 2 * np.pi, [0.5])], 1)
        first, second = split_by_circle_sets(f, CircleSet.from_angles([1.0]),
                                             CircleSet.from_angles([3.0]), 0.1)
        assert len(first) == 2
        assert second.is_zero()

    def test_term_near_neither_set(self):
        f = TrigPolynomial.single(1.05, [1.0])
        with pytest.raises(ClassificationError) as excinfo:
            split_by_circle_sets(f, CircleSet.from_angles([1.0]), CircleSet.from_angles([2.0]), 0.01)
        assert excinfo.value.frequency == pytest.approx(1.05)

    def test_sets_too_close(self):
        f = TrigPolynomial.single(1.0, [1.0])
        with pytest.raises(ApfunError):
            split_by_circle_sets(f, CircleSet.from_angles([1.0]), CircleSet.from_angles([1.01]), 0.01)
