import math

import numpy as np
import pytest

from phasespace import DomainError, FDEModel, PeriodicMatrix, Segment
from propagator import (
    PropagationConfigError,
    SegmentPath,
    StepperConfig,
    evolution_apply,
    evolution_matrix,
    evolution_semigroup_apply,
    forced_response_zero_ic,
    gamma_embed,
    growth_bound,
    propagate,
    trajectory_residual,
    vcf_gamma_oracle,
)

M = 32
H = 1.0 / 256.0


def _scalar(value):
    return PeriodicMatrix.from_constant([[value]])


def _ode(a: float, forcing=None) -> FDEModel:
    return FDEModel.build(1, 1.0, _scalar(a), forcing=forcing, name=f"ode_{a}")


def _grid_times(rng, count: int, top: float = 3.0) -> np.ndarray:
    """Sorted random times on the integrator's step grid"""
    return np.sort(rng.integers(0, int(top / H) + 1, size=count)) * H


def _smooth_segment(rng, horizon: float = 1.0) -> Segment:
    a, b, c = rng.normal(size=3)
    return Segment.from_function(lambda th: a + b * np.sin(2 * th) + c * th ** 2, horizon, M)


class TestStepper:
    def test_rejects_few_substeps(self):
        with pytest.raises(PropagationConfigError):
            StepperConfig(substeps=8)

    def test_rejects_step_longer_than_delay(self):
        model = FDEModel.build(1, 1.0, _scalar(0.0), delays=[(0.001, _scalar(-1.0))])
        phi = Segment.constant([1.0], 1.0, 8)
        with pytest.raises(PropagationConfigError):
            propagate(model, phi, 0.0, 1.0)

    def test_rejects_coarse_output_grid(self, unit_delay_model):
        phi = Segment.constant([1.0], 1.0, 8)
        with pytest.raises(PropagationConfigError):
            propagate(unit_delay_model, phi, 0.0, 1.0, cfg=StepperConfig(output_step=0.5))

    def test_rejects_backward_time(self, decay_model):
        phi = Segment.constant([1.0], 1.0, 8)
        with pytest.raises(PropagationConfigError):
            propagate(decay_model, phi, 1.0, 0.5)


class TestPropagate:
    def test_exponential_decay(self, decay_model):
        trajectory = propagate(decay_model, Segment.constant([1.0], 1.0, M), 0.0, 1.0)
        assert abs(trajectory.head()[0] - np.exp(-1.0)) <= 1e-10

    def test_unit_delay_by_hand(self, unit_delay_model):
        trajectory = propagate(unit_delay_model, Segment.constant([1.0], 1.0, M), 0.0, 1.0)
        assert abs(trajectory.head()[0]) <= 1e-10
        times = np.linspace(0.0, 1.0, 33)
        np.testing.assert_allclose(trajectory.sample(times)[:, 0], 1.0 - times, atol=1e-10)

    def test_history_is_reproduced_before_start(self, unit_delay_model, rng):
        phi = _smooth_segment(rng)
        trajectory = propagate(unit_delay_model, phi, 2.0, 3.0)
        np.testing.assert_allclose(trajectory.sample(2.0 + phi.grid), phi.values, atol=1e-14)

    def test_matrix_exponential_against_series(self):
        A = np.array([[-0.3, 0.2], [0.1, -0.4]])
        model = FDEModel.build(2, 1.0, PeriodicMatrix.from_constant(A))
        v = np.array([1.0, -2.0])
        trajectory = propagate(model, Segment.constant(v, 1.0, 8), 0.0, 1.0)
        series = sum(np.linalg.matrix_power(A, k) / math.factorial(k) for k in range(30)) @ v
        np.testing.assert_allclose(trajectory.head(), series, atol=1e-12)

    def test_sample_outside_range(self, decay_model):
        trajectory = propagate(decay_model, Segment.constant([1.0], 1.0, 8), 0.0, 1.0)
        with pytest.raises(DomainError):
            trajectory.sample([1.5])
        with pytest.raises(DomainError):
            trajectory.sample([-1.5])

    def test_superposition(self, forced_delay_model, rng):
        phi = _smooth_segment(rng)
        psi = _smooth_segment(rng)
        both = propagate(forced_delay_model, phi + psi, 0.0, 2.0)
        forced = propagate(forced_delay_model, phi, 0.0, 2.0)
        free = propagate(forced_delay_model, psi, 0.0, 2.0, forcing_on=False)
        np.testing.assert_allclose(both.values, forced.values + free.values, atol=1e-10)

    def test_residual_of_trajectory(self, forced_delay_model):
        trajectory = propagate(forced_delay_model, Segment.zeros(1, 1.0, M), 0.0, 2.0)
        assert trajectory_residual(trajectory, stride=16) <= 1e-8

    def test_csv_export(self, forced_decay_model, tmp_path):
        trajectory = propagate(forced_decay_model, Segment.zeros(1, 1.0, 8), 0.0, 0.5)
        path = trajectory.to_csv(tmp_path / "u.csv")
        lines = path.read_text().splitlines()
        assert lines[0].startswith(f"# model_sha256={forced_decay_model.fingerprint()} substeps=256")
        assert lines[1] == "t,re_u1,im_u1"
        assert len(lines) == 2 + 769
        assert float(lines[-1].split(",")[0]) == 0.5


class TestEvolution:
    def test_identity_at_equal_times(self, unit_delay_model, rng):
        phi = _smooth_segment(rng)
        assert evolution_apply(unit_delay_model, phi, 0.7, 0.7) is phi

    def test_periodic_coefficient_closed_form(self, periodic_decay_model):
        segment = evolution_apply(periodic_decay_model, Segment.constant([1.0], 1.0, M), 0.0, 1.0)
        assert abs(segment.head()[0] - np.exp(-1.0)) <= 1e-8

    def test_composition(self, unit_delay_model, rng):
        phi = _smooth_segment(rng)
        direct = evolution_apply(unit_delay_model, phi, 0.0, 1.25)
        middle = evolution_apply(unit_delay_model, phi, 0.0, 0.5)
        composed = evolution_apply(unit_delay_model, middle, 0.5, 1.25)
        np.testing.assert_allclose(composed.values, direct.values, atol=1e-8)

    @pytest.mark.parametrize("name", ["unit_delay_model", "periodic_decay_model", "forced_delay_model"])
    def test_process_axiom_randomized(self, name, request, rng):
        model = request.getfixturevalue(name)
        for _ in range(3):
            rho, s, t = _grid_times(rng, 3)
            phi = _smooth_segment(rng)
            direct = evolution_apply(model, phi, rho, t)
            composed = evolution_apply(model, evolution_apply(model, phi, rho, s), s, t)
            np.testing.assert_allclose(composed.values, direct.values, atol=1e-8)

    def test_one_periodicity(self, periodic_decay_model, rng):
        for _ in range(3):
            s, t = _grid_times(rng, 2, top=2.0)
            phi = _smooth_segment(rng)
            base = evolution_apply(periodic_decay_model, phi, s, t)
            shifted = evolution_apply(periodic_decay_model, phi, s + 1.0, t + 1.0)
            assert np.max(np.abs(shifted.values - base.values)) <= 1e-8

    def test_matrix_matches_columnwise_application(self, unit_delay_model, rng):
        m = 8
        matrix = evolution_matrix(unit_delay_model, 0.0, 1.0, m)
        phi = Segment(1.0, rng.normal(size=(m + 1, 1)))
        applied = evolution_apply(unit_delay_model, phi, 0.0, 1.0)
        np.testing.assert_allclose(matrix @ phi.coordinates(), applied.coordinates(), atol=1e-12)

    def test_growth_bound_is_finite(self, unit_delay_model, periodic_decay_model):
        for model in (unit_delay_model, periodic_decay_model):
            bound = growth_bound(model, 12)
            assert np.isfinite(bound.N) and bound.N >= 1.0
            assert np.isfinite(bound.omega)


class TestForcedResponse:
    def test_zero_coefficient(self, decay_model):
        G = forced_response_zero_ic(decay_model, 1.0, [0.0], 1.0)
        assert np.all(G.values == 0)

    def test_constant_drive_integrates_linearly(self):
        G = forced_response_zero_ic(_ode(0.0), 0.0, [1.0], 1.0, m=M)
        assert abs(G.head()[0] - 1.0) <= 1e-12
        np.testing.assert_allclose(G.values[:, 0], 1.0 + G.grid, atol=1e-12)

    def test_decay_convolution(self):
        G = forced_response_zero_ic(_ode(-1.0), 1.0, [1.0], 1.0, m=M)
        expected = (np.exp(1j) - np.exp(-1.0)) / (1 + 1j)
        assert abs(G.head()[0] - expected) <= 1e-8


class TestGammaEmbedding:
    def test_tent_values(self):
        x = np.array([2.0 + 1j])
        tent = gamma_embed(2, x, 1.0, 16)
        assert tent.sample([-0.25])[0] == pytest.approx(0.5 * x)
        assert np.all(tent.sample([-0.9])[0] == 0)
        assert tent.head() == pytest.approx(x)

    def test_steepness_outside_horizon(self):
        with pytest.raises(DomainError):
            gamma_embed(1, [1.0], 0.5, 8)
        with pytest.raises(DomainError):
            gamma_embed(0, [1.0], 1.0, 8)

    def test_oracle_with_zero_coefficient(self, decay_model):
        assert np.all(vcf_gamma_oracle(decay_model, 1.0, [0.0], 1.0, 8).values == 0)

    def test_oracle_improves_when_doubling(self):
        model = _ode(0.0)
        target = forced_response_zero_ic(model, 0.0, [1.0], 1.0, m=16)
        coarse = vcf_gamma_oracle(model, 0.0, [1.0], 1.0, 4, m=16)
        fine = vcf_gamma_oracle(model, 0.0, [1.0], 1.0, 8, m=16)
        assert (fine - target).norm() < (coarse - target).norm()

    @pytest.mark.slow
    def test_oracle_converges_monotonically(self):
        model = _ode(-1.0)
        target = forced_response_zero_ic(model, 1.0, [1.0], 1.0, m=M)
        errors = [(vcf_gamma_oracle(model, 1.0, [1.0], 1.0, n, m=M) - target).norm()
                  for n in (4, 8, 16, 32, 64)]
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 0.05
        closed_form = (np.exp(1j) - np.exp(-1.0)) / (1 + 1j)
        head = vcf_gamma_oracle(model, 1.0, [1.0], 1.0, 64, m=M).head()[0]
        assert abs(head - closed_form) < 0.05


class TestSemigroup:
    @staticmethod
    def _path(times, rng):
        segments = [_smooth_segment(rng) for _ in times]
        return SegmentPath(times, tuple(segments))

    def test_zero_shift_is_identity(self, unit_delay_model, rng):
        times = np.arange(0, 9) * 0.25
        g = self._path(times, rng)
        image = evolution_semigroup_apply(unit_delay_model, g, 0.0)
        np.testing.assert_array_equal(image.times, g.times)
        np.testing.assert_array_equal(image.node_values(), g.node_values())

    def test_composition_of_shifts(self, unit_delay_model, rng):
        times = np.arange(0, 9) * 0.25
        g = self._path(times, rng)
        twice = evolution_semigroup_apply(
            unit_delay_model, evolution_semigroup_apply(unit_delay_model, g, 0.25), 0.5)
        once = evolution_semigroup_apply(unit_delay_model, g, 0.75)
        np.testing.assert_allclose(twice.times, once.times)
        np.testing.assert_allclose(twice.node_values(), once.node_values(), atol=1e-8)

    def test_autonomous_model_constant_path(self, unit_delay_model, rng):
        phi = _smooth_segment(rng)
        times = np.arange(0, 9) * 0.25
        g = SegmentPath(times, tuple(phi for _ in times))
        image = evolution_semigroup_apply(unit_delay_model, g, 0.5)
        reference = evolution_apply(unit_delay_model, phi, 0.0, 0.5)
        for segment in image.segments:
            np.testing.assert_allclose(segment.values, reference.values, atol=1e-8)

    def test_shift_longer_than_grid(self, unit_delay_model, rng):
        g = self._path(np.array([0.0, 0.25]), rng)
        with pytest.raises(DomainError):
            evolution_semigroup_apply(unit_delay_model, g, 1.0)
        with pytest.raises(DomainError):
            evolution_semigroup_apply(unit_delay_model, g, -0.1)
