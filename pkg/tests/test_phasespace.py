import json

import numpy as np
import pytest

from apfun import TrigPolynomial, bohr_spectrum
from phasespace import (
    DistributedKernel,
    DomainError,
    FDEModel,
    ModelError,
    PeriodicMatrix,
    Segment,
    apply_F,
    apply_matrix,
    clenshaw_curtis_weights,
    head,
    interpolate,
    load_model,
    lobatto_grid,
)


def _scalar(value):
    return PeriodicMatrix.from_constant([[value]])


class TestGrid:
    def test_lobatto_endpoints(self):
        grid = lobatto_grid(2.0, 8)
        assert grid[0] == -2.0
        assert grid[-1] == 0.0
        assert np.all(np.diff(grid) > 0)

    def test_clenshaw_curtis_integrates_polynomials(self):
        for m in (8, 9):
            grid = lobatto_grid(1.0, m)
            weights = clenshaw_curtis_weights(1.0, m)
            assert np.sum(weights) == pytest.approx(1.0, abs=1e-14)
            assert np.dot(weights, grid ** 2) == pytest.approx(1.0 / 3.0, abs=1e-14)


class TestSegment:
    def test_constant_is_reproduced(self):
        phi = Segment.constant([2.0 - 1.0j], 1.5, 12)
        assert interpolate(phi, -0.5)[0] == pytest.approx(2.0 - 1.0j, abs=1e-14)
        assert head(phi)[0] == 2.0 - 1.0j

    def test_head_of_linear_segment(self):
        phi = Segment.from_function(lambda th: th, 1.0, 16)
        assert head(phi)[0] == 0.0
        assert head(phi)[0] == interpolate(phi, 0.0)[0]

    def test_quadratic_reproduced_exactly(self):
        phi = Segment.from_function(lambda th: th ** 2, 1.0, 2)
        assert interpolate(phi, -0.5)[0] == pytest.approx(0.25, abs=1e-14)

    def test_exponential_spectral_accuracy(self):
        phi = Segment.from_function(np.exp, 1.0, 16)
        assert interpolate(phi, -0.3)[0] == pytest.approx(np.exp(-0.3), abs=1e-12)

    def test_error_decays_geometrically(self):
        probe = np.linspace(-1.0, 0.0, 101)

        def error(m):
            phi = Segment.from_function(np.exp, 1.0, m)
            return np.max(np.abs(phi.sample(probe)[:, 0] - np.exp(probe)))

        assert error(16) < 1e-10 * error(4)

    def test_interpolate_outside_domain(self):
        phi = Segment.constant([1.0], 1.0, 4)
        with pytest.raises(DomainError):
            interpolate(phi, -1.5)
        with pytest.raises(DomainError):
            interpolate(phi, 0.1)

    def test_coordinates_round_trip_through_basis(self):
        basis = Segment.basis(2, 1.0, 3)
        assert basis.batch_shape == (8,)
        column = basis.column(5)
        coords = column.coordinates()
        assert coords[5] == 1.0
        assert np.sum(np.abs(coords)) == 1.0
        again = Segment.from_coordinates(coords, 2, 1.0)
        np.testing.assert_array_equal(again.values, column.values)

    def test_too_few_nodes(self):
        with pytest.raises(DomainError):
            Segment(1.0, np.zeros((1, 1)))


class TestDelayFunctional:
    def test_single_delay_on_constant(self):
        model = FDEModel.build(1, 1.0, _scalar(0.0), delays=[(1.0, _scalar(-1.0))])
        phi = Segment.constant([1.0], 1.0, 16)
        assert apply_F(model, 0.3, phi)[0] == pytest.approx(-1.0)

    def test_empty_functional(self):
        model = FDEModel.build(1, 1.0, _scalar(-1.0))
        phi = Segment.from_function(np.exp, 1.0, 8)
        assert apply_F(model, 0.0, phi)[0] == 0.0

    def test_unit_kernel_integrates_constant(self):
        kernel = DistributedKernel.exponential([[1.0]], decay=0.0, order=16)
        model = FDEModel.build(1, 1.0, _scalar(0.0), kernel=kernel)
        phi = Segment.constant([3.0], 1.0, 16)
        assert apply_F(model, 0.0, phi)[0] == pytest.approx(3.0, abs=1e-13)

    def test_matrix_kernel_on_constant(self):
        M = np.array([[-1.0, 0.5], [0.25, 2.0j]])
        kernel = DistributedKernel.exponential(M, decay=0.0, order=16)
        model = FDEModel.build(2, 1.0, PeriodicMatrix.from_constant(np.zeros((2, 2))), kernel=kernel)
        phi = Segment.constant([1.0, -2.0], 1.0, 16)
        np.testing.assert_allclose(apply_F(model, 0.0, phi), M @ np.array([1.0, -2.0]), atol=1e-13)

    def test_apply_matrix_matches_product(self, rng):
        M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        y = rng.normal(size=(3, 5, 2)) + 1j * rng.normal(size=(3, 5, 2))
        np.testing.assert_allclose(apply_matrix(M, y), np.tensordot(M, y, axes=1), atol=1e-13)
        np.testing.assert_allclose(apply_matrix(M, y[:, 0, 0]), M @ y[:, 0, 0], atol=1e-13)

    def test_apply_matrix_ignores_alignment(self, rng):
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        y = rng.normal(size=(2, 33)) + 1j * rng.normal(size=(2, 33))
        shifted = np.frombuffer(bytearray(y.nbytes + 8), dtype=complex, count=y.size, offset=8).reshape(y.shape)
        shifted[...] = y
        assert np.array_equal(apply_matrix(M, y), apply_matrix(M, shifted))
        assert np.array_equal(apply_matrix(M, y[:, 1:]), apply_matrix(M, y[:, 1:].copy()))

    def test_linearity(self, rng):
        B = PeriodicMatrix.from_fourier({0: [[-0.5, 0.1], [0.0, 0.3]], 1: [[0.2, 0.0], [0.1, 0.0]]})
        model = FDEModel.build(2, 1.0, PeriodicMatrix.from_constant(np.eye(2)),
                               delays=[(0.5, B), (1.0, PeriodicMatrix.from_constant(np.eye(2)))])
        phi = Segment(1.0, rng.normal(size=(17, 2)))
        psi = Segment(1.0, rng.normal(size=(17, 2)))
        a, b = 1.5 - 0.5j, -0.25
        t = 0.37
        combined = apply_F(model, t, phi.scale(a) + psi.scale(b))
        expected = a * apply_F(model, t, phi) + b * apply_F(model, t, psi)
        np.testing.assert_allclose(combined, expected, atol=1e-13)
        np.testing.assert_allclose(apply_F(model, t + 1.0, phi), apply_F(model, t, phi), atol=1e-13)


class TestModel:
    def test_delay_outside_horizon(self):
        with pytest.raises(ModelError):
            FDEModel.build(1, 1.0, _scalar(0.0), delays=[(1.5, _scalar(-1.0))])

    def test_non_periodic_callable(self):
        with pytest.raises(ModelError):
            PeriodicMatrix.from_callable(lambda t: [[t]], 1)

    def test_period_normalization(self):
        A = PeriodicMatrix.from_fourier({0: [[-1.0]], 1: [[0.5]], -1: [[0.5]]}, period=2.0)
        model = FDEModel.build(1, 2.0, A, delays=[(2.0, _scalar(-1.0))],
                               forcing=TrigPolynomial.single(0.5, [1.0]), period=2.0)
        assert model.horizon == 1.0
        assert model.min_delay() == 1.0
        assert model.forcing.frequencies[0] == pytest.approx(1.0)
        assert model.forcing.coefficients[0, 0] == pytest.approx(2.0)
        # A(t) = 2 * A_original(2 t)
        assert model.A(0.0)[0, 0] == pytest.approx(0.0)
        assert model.A(0.5)[0, 0] == pytest.approx(-4.0)

    def test_autonomy(self, periodic_decay_model, unit_delay_model):
        assert unit_delay_model.is_autonomous
        assert not periodic_decay_model.is_autonomous

    def test_model_files_load(self, models_dir):
        model = load_model(models_dir / "forced_delay.json")
        assert model.name == "forced_delay"
        assert model.min_delay() == 1.0
        assert bohr_spectrum(model.forcing) == pytest.approx([1.0, np.sqrt(2.0)])
        periodic = load_model(models_dir / "periodic_decay.json")
        assert periodic.A(0.0)[0, 0] == pytest.approx(0.0)
        assert periodic.A(0.5)[0, 0] == pytest.approx(-2.0)

    def test_document_fingerprint_is_stable(self, models_dir):
        document = json.loads((models_dir / "quarter_turn.json").read_text())
        first = FDEModel.from_dict(document)
        second = FDEModel.from_dict(json.loads(json.dumps(first.to_dict())))
        assert first.fingerprint() == second.fingerprint()

    @pytest.mark.parametrize("document", [
        [],
        {"dimension": 1, "horizon_r": 1.0},
        {"dimension": 1, "horizon_r": 1.0, "A": {"constant": [[[1.0, 0.0], [0.0, 0.0]]]}},
        {"dimension": 1, "horizon_r": 1.0, "A": {"diagonal": [1.0]}},
        {"dimension": 1, "horizon_r": 1.0, "A": {"constant": [[[0.0, 0.0]]]},
         "forcing": {"dimension": 1, "terms": [{"frequency": "x", "re": [1.0]}]}},
    ])
    def test_malformed_documents(self, document):
        with pytest.raises(ModelError):
            FDEModel.from_dict(document)

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ModelError):
            load_model(path)
