import math

import numpy as np
import pytest

from conftest import make_circuit
from exceptions import PotentialDomainError, SchemaError
from potentials import (Branch, FluxoniumParams, QuartonParams, TabulatedPotential,
                        TrainmonCircuit, circuit_from_dict, eval_fluxonium, eval_quarton,
                        eval_trainmon, potential_from_dict, potential_to_dict, sample_potential)


class TestQuarton:
    def test_all_cosines_at_zero(self):
        assert eval_quarton(QuartonParams(gamma=1, n_array=3, e_j=1), 0.0) == pytest.approx(-4.0)

    def test_external_phase_flips_single_junction(self):
        p = QuartonParams(gamma=0, n_array=3, e_j=2, phi_e=math.pi)
        assert eval_quarton(p, 0.0) == pytest.approx(2.0, abs=1e-12)

    def test_quartic_regime_has_zero_curvature(self):
        p = QuartonParams(gamma=3, n_array=3, e_j=1, phi_e=math.pi)
        h = 1e-4
        curvature = (p.evaluate(h) - 2 * p.evaluate(0.0) + p.evaluate(-h)) / h ** 2
        assert abs(curvature) < 1e-5

    @pytest.mark.parametrize("kwargs", [
        {"gamma": 1, "n_array": 0, "e_j": 1},
        {"gamma": 1, "n_array": 2, "e_j": 0},
        {"gamma": -1, "n_array": 2, "e_j": 1},
    ])
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(SchemaError):
            QuartonParams(**kwargs)


class TestFluxonium:
    def test_half_flux_flips_cosine(self):
        p = FluxoniumParams(e_j=1, e_c=1, e_l=0, phi_ext=math.pi)
        assert eval_fluxonium(p, 0.0) == pytest.approx(1.0)

    def test_inductive_term(self):
        p = FluxoniumParams(e_j=0, e_c=1, e_l=2)
        assert eval_fluxonium(p, math.pi) == pytest.approx(math.pi ** 2)

    def test_half_flux_gives_symmetric_double_well(self):
        p = FluxoniumParams(e_j=4.0, e_c=1.0, e_l=0.5, phi_ext=math.pi)
        phi = np.linspace(-3 * math.pi, 3 * math.pi, 2001)
        u = p.evaluate(phi)
        np.testing.assert_allclose(u, u[::-1], atol=1e-10)
        # máximo local em 0 entre dois poços
        assert u[1000] > u[999] and u[1000] > u[1001]
        assert u[:1000].min() < u[1000] and u[1001:].min() < u[1000]

    def test_negative_inductance_rejected(self):
        with pytest.raises(SchemaError):
            FluxoniumParams(e_j=1, e_c=1, e_l=-1)


class TestTrainmonPotential:
    def test_single_branch(self):
        assert eval_trainmon(make_circuit(1.0, {1: 1.0}), 0.0) == pytest.approx(-1.0)

    def test_unit_124_at_zero(self, unit_circuit):
        assert eval_trainmon(unit_circuit, 0.0) == pytest.approx(-7.0)

    def test_branch_phase_flips_sign(self):
        c = TrainmonCircuit(e_c=1.0, branches=(Branch(n=2, e_j=1.0, phi_branch=2 * math.pi),))
        assert eval_trainmon(c, 0.0) == pytest.approx(2.0)

    def test_period_is_lcm(self, random_circuits):
        rng = np.random.default_rng(1)
        phi = rng.uniform(-10, 10, 50)
        for c in random_circuits:
            assert c.period == pytest.approx(8 * math.pi)
            np.testing.assert_allclose(c.evaluate(phi), c.evaluate(phi + c.period), atol=1e-12)

    def test_even_with_zero_phases(self, circuit_124):
        phi = np.linspace(0, 8 * math.pi, 101)
        np.testing.assert_allclose(circuit_124.evaluate(phi), circuit_124.evaluate(-phi),
                                   atol=1e-12)

    def test_branch_phase_shift_by_2pi_n(self, circuit_124):
        phi = np.linspace(-4 * math.pi, 4 * math.pi, 101)
        shifted = TrainmonCircuit(
            e_c=circuit_124.e_c,
            branches=tuple(Branch(b.n, b.e_j, b.phi_branch + 2 * math.pi * b.n)
                           for b in circuit_124.branches))
        np.testing.assert_allclose(shifted.evaluate(phi), circuit_124.evaluate(phi), atol=1e-12)

    def test_loop_fluxes_derived_from_phases(self):
        c = make_circuit(1.0, {1: 1.0, 2: -1.0, 4: -1.0})
        assert c.loop_fluxes == pytest.approx((2 * math.pi, 2 * math.pi))
        assert c.fluxoid_ints == (0, 0)

    def test_inconsistent_fluxoid_rejected(self):
        with pytest.raises(SchemaError):
            TrainmonCircuit(e_c=1.0, branches=(Branch(1, 1.0), Branch(2, 1.0)),
                            loop_fluxes=(0.5,), fluxoid_ints=(0,))

    def test_branches_must_ascend(self):
        with pytest.raises(SchemaError):
            TrainmonCircuit(e_c=1.0, branches=(Branch(2, 1.0), Branch(1, 1.0)))

    def test_with_loop_fluxes_translates_potential(self, circuit_124):
        moved = circuit_124.with_loop_fluxes((0.3, -0.7))
        assert moved.loop_fluxes == (0.3, -0.7)
        assert moved.branches[0].phi_branch == 0.0
        assert moved.branches[2].phi_branch == pytest.approx(-0.4)


class TestTabulated:
    def test_linear_interpolation(self):
        t = TabulatedPotential(samples=((0.0, 0.0), (1.0, 2.0)))
        assert t.evaluate(0.25) == pytest.approx(0.5)

    def test_outside_domain_is_error(self):
        t = TabulatedPotential(samples=((0.0, 0.0), (1.0, 2.0)))
        with pytest.raises(PotentialDomainError):
            t.evaluate(1.5)

    def test_requires_increasing_phi(self):
        with pytest.raises(SchemaError):
            TabulatedPotential(samples=((1.0, 0.0), (0.0, 2.0)))


class TestSampling:
    def test_constant_tabulated(self):
        t = TabulatedPotential(samples=((-math.pi, 0.0), (math.pi, 0.0)))
        s = sample_potential(t, -math.pi, math.pi, 3)
        assert s.pairs() == [(-math.pi, 0.0), (0.0, 0.0), (math.pi, 0.0)]

    def test_quarton_endpoints_and_midpoint(self):
        s = sample_potential(QuartonParams(gamma=1, n_array=2, e_j=1), -math.pi, math.pi, 3)
        assert s.u[0] == pytest.approx(1.0, abs=1e-12)
        assert s.u[2] == pytest.approx(1.0, abs=1e-12)
        assert s.u[1] == pytest.approx(-3.0)

    def test_matches_pointwise_evaluation(self, circuit_124):
        s = sample_potential(circuit_124, -3 * math.pi, 3 * math.pi, 1001)
        assert len(s) == 1001
        assert s.phi[0] == -3 * math.pi and s.phi[-1] == 3 * math.pi
        for phi, u in s.pairs()[::97]:
            assert u == pytest.approx(circuit_124.evaluate(phi), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("lo, hi, count", [(0.0, 1.0, 1), (1.0, 0.0, 10)])
    def test_invalid_window(self, lo, hi, count):
        with pytest.raises(SchemaError):
            sample_potential(QuartonParams(gamma=1, n_array=2, e_j=1), lo, hi, count)


class TestSerialization:
    @pytest.mark.parametrize("p", [
        QuartonParams(gamma=3, n_array=3, e_j=1, phi_e=math.pi),
        FluxoniumParams(e_j=4, e_c=1, e_l=0.5, phi_ext=math.pi),
        TabulatedPotential(samples=((0.0, 1.0), (1.0, 0.5), (2.0, 0.0))),
        make_circuit(0.3, {1: 1.0, 2: -0.5, 4: 2.0}),
    ])
    def test_round_trip(self, p):
        assert potential_from_dict(potential_to_dict(p)) == p

    def test_unknown_kind(self):
        with pytest.raises(SchemaError):
            potential_from_dict({"kind": "transmon"})

    def test_missing_field(self):
        with pytest.raises(SchemaError):
            potential_from_dict({"kind": "quarton", "gamma": 1})

    def test_circuit_defaults(self):
        c = circuit_from_dict({"e_c": 1.0, "branches": [{"n": 1, "e_j": 1.0}]})
        assert c.n_g == 0.0 and c.loop_fluxes == ()

    def test_circuit_phases_from_loop_fluxes(self):
        branches = [{"n": 1, "e_j": 8.0}, {"n": 2, "e_j": 4.0}, {"n": 4, "e_j": 2.0}]
        c = circuit_from_dict({"e_c": 0.5, "branches": branches, "loop_fluxes": [0.3, -0.7]})
        assert [b.phi_branch for b in c.branches] == pytest.approx([0.0, 0.3, -0.4])
        assert c.fluxoid_ints == (0, 0)

    def test_circuit_phases_respect_fluxoid_ints(self):
        branches = [{"n": 1, "e_j": 8.0}, {"n": 2, "e_j": 4.0}, {"n": 4, "e_j": 2.0}]
        c = circuit_from_dict({"e_c": 0.5, "branches": branches,
                               "loop_fluxes": [2 * math.pi, 2 * math.pi], "fluxoid_ints": [1, 1]})
        assert [b.phi_branch for b in c.branches] == [0.0, 0.0, 0.0]
        assert c.loop_fluxes == (2 * math.pi, 2 * math.pi)

    def test_with_loop_fluxes_keeps_fluxoid_ints(self):
        c = TrainmonCircuit(e_c=0.5, branches=(Branch(1, 1.0), Branch(2, 1.0)),
                            loop_fluxes=(2 * math.pi,))
        moved = c.with_loop_fluxes((2 * math.pi + 0.25,))
        assert moved.fluxoid_ints == (1,)
        assert moved.branches[1].phi_branch == pytest.approx(0.25)
        assert c.with_loop_fluxes(c.loop_fluxes) is c
