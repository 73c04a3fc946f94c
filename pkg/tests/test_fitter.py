import json
import math

import numpy as np
import pytest

from conftest import make_circuit
from exceptions import DegenerateBasisError, SchemaError
from export_utils import dumps
from fitter import (FitProblem, assign_fluxes, circuit_from_fit, compute_metrics,
                    design_matrix, fit_coefficients, fit_result_from_dict, fit_result_to_dict,
                    parse_branch_set, reconstruct_potential, reconstruction_table, reduce_phase)
from potentials import PotentialSamples, QuartonParams, TabulatedPotential, sample_potential


def _samples(func, lo, hi, count=1001):
    phi = np.linspace(lo, hi, count)
    return PotentialSamples(phi=phi, u=func(phi))


def _ssr(problem, coefficients, offset):
    fit = reconstruct_potential(coefficients, offset, problem.samples.phi)
    return float(np.sum((fit - problem.samples.u) ** 2))


class TestParseBranchSet:
    def test_string(self):
        assert parse_branch_set("1,2,4") == (1, 2, 4)

    def test_unsorted_input_is_sorted(self):
        assert parse_branch_set([4, 1, 2]) == (1, 2, 4)

    @pytest.mark.parametrize("value", ["2,2", "", "0,1", "1,a", [1.5]])
    def test_invalid(self, value):
        with pytest.raises(SchemaError):
            parse_branch_set(value)


class TestFitCoefficients:
    def test_single_cosine_in_span(self):
        problem = FitProblem(samples=_samples(lambda p: -np.cos(p), -math.pi, math.pi),
                             branch_set=(1,), include_offset=False)
        result = fit_coefficients(problem)
        assert result.coefficients[1] == pytest.approx(1.0, abs=1e-12)
        assert result.metrics.rmse < 1e-12

    def test_half_cosine_selects_branch_two(self):
        problem = FitProblem(samples=_samples(lambda p: -2 * np.cos(p / 2), -math.pi, math.pi),
                             branch_set=(1, 2), include_offset=False)
        result = fit_coefficients(problem)
        assert result.coefficients[2] == pytest.approx(1.0, abs=1e-9)
        assert abs(result.coefficients[1]) < 1e-9
        assert 1 in result.pruned

    def test_normal_equations_agree(self):
        samples = _samples(lambda p: np.cos(p) ** 3, -math.pi, math.pi)
        problem = FitProblem(samples=samples, branch_set=(1, 2), include_offset=False)
        result = fit_coefficients(problem)
        a, _ = design_matrix(samples.phi, (1, 2), include_offset=False)
        expected = np.linalg.solve(a.T @ a, a.T @ samples.u)
        assert result.coefficients[1] == pytest.approx(expected[0], rel=1e-9)
        assert result.coefficients[2] == pytest.approx(expected[1], rel=1e-9)

    def test_round_trip_signed_coefficients(self):
        coefficients = {1: 0.7, 2: -0.3, 4: 1.1}
        circuit = make_circuit(1.0, coefficients)
        raw = sample_potential(circuit, -4 * math.pi, 4 * math.pi, 1001)
        problem = FitProblem(samples=PotentialSamples(phi=raw.phi, u=raw.u + 0.5),
                             branch_set=(1, 2, 4))
        result = fit_coefficients(problem)
        for n, c in coefficients.items():
            assert result.coefficients[n] == pytest.approx(c, rel=1e-9)
        assert result.offset == pytest.approx(0.5, rel=1e-9)
        assert result.assignment.branch_phases == pytest.approx({1: 0.0, 2: 2 * math.pi, 4: 0.0})

    def test_quartic_quarton_reconstruction(self):
        target = QuartonParams(gamma=3, n_array=3, e_j=1.0, phi_e=math.pi)
        problem = FitProblem(samples=sample_potential(target, -math.pi, math.pi, 1001),
                             branch_set=(1, 2, 4))
        result = fit_coefficients(problem)
        assert result.metrics.max_rel_error <= 5e-4

    def test_least_squares_local_optimality(self):
        target = QuartonParams(gamma=3, n_array=3, e_j=1.0, phi_e=math.pi)
        problem = FitProblem(samples=sample_potential(target, -math.pi, math.pi, 1001),
                             branch_set=(1, 2, 4))
        result = fit_coefficients(problem, drop_tolerance=0.0)
        best = _ssr(problem, result.coefficients, result.offset)
        for n in problem.branch_set:
            for delta in (1e-6, -1e-6):
                moved = dict(result.coefficients)
                moved[n] += delta
                assert _ssr(problem, moved, result.offset) >= best
        for delta in (1e-6, -1e-6):
            assert _ssr(problem, result.coefficients, result.offset + delta) >= best

    def test_sign_extraction_identity(self, random_circuits):
        for source in random_circuits:
            problem = FitProblem(samples=sample_potential(source, -4 * math.pi, 4 * math.pi, 801),
                                 branch_set=(1, 2, 4), include_offset=False)
            result = fit_coefficients(problem)
            circuit = circuit_from_fit(result, e_c=source.e_c)
            phi = problem.samples.phi
            signed = reconstruct_potential(result.coefficients, 0.0, phi)
            np.testing.assert_allclose(circuit.evaluate(phi), signed, atol=1e-12)
            assert result.assignment.check_fluxoid()

    def test_degenerate_basis_names_columns(self):
        samples = PotentialSamples(phi=np.zeros(50), u=np.ones(50))
        problem = FitProblem(samples=samples, branch_set=(1, 2))
        with pytest.raises(DegenerateBasisError) as info:
            fit_coefficients(problem)
        assert len(info.value.columns) == 2
        assert set(info.value.columns) <= {"n=1", "n=2", "offset"}

    def test_too_few_samples(self):
        with pytest.raises(SchemaError):
            FitProblem(samples=_samples(np.cos, 0, 1, count=3), branch_set=(1, 2, 4))

    def test_reconstruction_table(self):
        samples = _samples(lambda p: -np.cos(p), -math.pi, math.pi, 11)
        result = fit_coefficients(FitProblem(samples=samples, branch_set=(1,)))
        table = reconstruction_table(result, samples)
        assert list(table.columns) == ["phi", "u_target", "u_fit", "delta_u"]
        assert len(table) == 11
        assert np.max(np.abs(table["delta_u"])) < 1e-12


class TestAssignFluxes:
    def test_all_positive(self):
        a = assign_fluxes({1: 1.0, 2: 0.5, 4: 0.25})
        assert a.branch_phases == {1: 0.0, 2: 0.0, 4: 0.0}
        assert a.loop_fluxes == (0.0, 0.0)

    def test_plus_minus_minus(self):
        a = assign_fluxes({1: 1.0, 2: -0.5, 4: -0.25})
        assert a.branch_phases == pytest.approx({1: 0.0, 2: 2 * math.pi, 4: 4 * math.pi})
        assert a.loop_fluxes == pytest.approx((2 * math.pi, 2 * math.pi))
        assert a.loop_fluxes_phi0 == (1.0, 1.0)
        # representante não canônico (Φ_0, −2Φ_0) é congruente módulo 2π
        for ours, other in zip(a.loop_fluxes, (2 * math.pi, -4 * math.pi)):
            assert reduce_phase(ours) == pytest.approx(reduce_phase(other), abs=1e-12)

    def test_minus_plus_plus(self):
        a = assign_fluxes({1: -1.0, 2: 0.5, 4: 0.25})
        assert a.branch_phases == pytest.approx({1: math.pi, 2: 0.0, 4: 0.0})
        assert a.loop_fluxes == pytest.approx((-math.pi, 0.0))
        phi = np.linspace(-4 * math.pi, 4 * math.pi, 201)
        np.testing.assert_allclose(np.cos(phi + math.pi), -np.cos(phi), atol=1e-12)

    def test_single_negative_branch(self):
        a = assign_fluxes({1: -2.0})
        assert a.branch_phases == {1: math.pi}
        assert a.loop_fluxes == ()

    def test_fluxoid_holds_in_integers(self):
        a = assign_fluxes({1: -1.0, 2: 1.0, 3: -1.0, 6: -1.0})
        assert a.check_fluxoid()
        assert a.fluxoid_ints == (0, 0, 0)

    def test_zero_coefficient_rejected(self):
        with pytest.raises(SchemaError):
            assign_fluxes({1: 0.0, 2: 1.0})


class TestMetrics:
    def test_identical(self):
        u = np.sin(np.linspace(0, 3, 50))
        m = compute_metrics(u, u)
        assert m.max_rel_error == 0.0
        assert m.correlation == pytest.approx(1.0)

    def test_constant_shift(self):
        u = np.sin(np.linspace(0, 3, 50))
        m = compute_metrics(u, u + 0.25)
        assert m.rmse == pytest.approx(0.25)
        assert m.correlation == pytest.approx(1.0)

    def test_negated(self):
        u = np.sin(np.linspace(0, 3, 50))
        assert compute_metrics(u, -u).correlation == pytest.approx(-1.0)

    def test_constant_target_not_applicable(self):
        m = compute_metrics(np.ones(10), np.ones(10))
        assert m.max_rel_error is None
        assert m.correlation is None

    def test_correlation_on_wider_window(self):
        target = TabulatedPotential(samples=tuple((p, p ** 2) for p in np.linspace(-5, 5, 11)))
        narrow = sample_potential(target, -1, 1, 21)
        wide = sample_potential(target, -4, 4, 21)
        m = compute_metrics(narrow.u, narrow.u, wide.u, -wide.u, correlation_window=(-4, 4))
        assert m.max_rel_error == 0.0
        assert m.correlation == pytest.approx(-1.0)
        assert m.correlation_window == (-4, 4)


def test_reduce_phase():
    assert reduce_phase(3 * math.pi) == pytest.approx(math.pi)
    assert reduce_phase(-math.pi) == pytest.approx(math.pi)
    assert reduce_phase(2 * math.pi) == pytest.approx(0.0)
    assert reduce_phase(-0.5) == -0.5


def test_fit_result_json_round_trip():
    target = QuartonParams(gamma=3, n_array=3, e_j=1.0, phi_e=math.pi)
    problem = FitProblem(samples=sample_potential(target, -math.pi, math.pi, 201),
                         branch_set=(1, 2, 4),
                         correlation_samples=sample_potential(target, -3 * math.pi,
                                                              3 * math.pi, 201))
    result = fit_coefficients(problem)
    assert fit_result_from_dict(json.loads(dumps(fit_result_to_dict(result)))) == result
