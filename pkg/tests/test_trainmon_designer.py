import json
import math

import numpy as np
import pandas as pd
import pytest

from charge_solver import hamiltonian_to_frame, solved_hamiltonian
from data_handler import FitRequest, NoiseRequest, ScanRequest
from exceptions import SchemaError
from noise import NoiseModel
from potentials import FluxoniumParams, QuartonParams, TabulatedPotential, circuit_from_dict
from trainmon_designer import TrainmonDesigner
from conftest import make_circuit


@pytest.fixture
def designer(tmp_path):
    return TrainmonDesigner(config_path=None,
                            overrides={"results_dir": str(tmp_path / "results"), "n_workers": 2})


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


class TestFit:
    def test_quarton_outputs(self, designer, configs_dir):
        request = designer.data_handler.load_fit_request(configs_dir / "quarton_fit.json")
        result = designer.fit(request)
        assert result.metrics.max_rel_error <= 5e-4
        names = sorted(p.name for p in designer.results_dir.iterdir())
        assert names == ["circuit.json", "fit_reconstruction.csv", "fit_result.json"]
        circuit = circuit_from_dict(_read_json(designer.results_dir / "circuit.json"))
        assert circuit.e_c == 0.1
        assert circuit.branch_set == tuple(sorted(result.kept_coefficients))
        table = pd.read_csv(designer.results_dir / "fit_reconstruction.csv")
        assert len(table) == 1001

    def test_without_charging_energy_no_circuit(self, designer):
        target = QuartonParams(gamma=3, n_array=3, e_j=1.0, phi_e=math.pi)
        designer.fit(FitRequest(target=target, window=(-math.pi, math.pi), sample_count=201))
        assert not (designer.results_dir / "circuit.json").exists()

    def test_tabulated_correlation_window_clipped(self, designer):
        phis = np.linspace(-2.0, 2.0, 81)
        target = TabulatedPotential(samples=tuple((p, -math.cos(p)) for p in phis))
        result = designer.fit(FitRequest(target=target, branch_set="1", window=(-1.0, 1.0),
                                         sample_count=101))
        assert result.metrics.correlation_window == (-2.0, 2.0)

    def test_window_required(self, designer):
        target = QuartonParams(gamma=3, n_array=3, e_j=1.0)
        with pytest.raises(SchemaError):
            designer.fit(FitRequest(target=target))


class TestSpectrum:
    def test_golden_matrix_dump(self, designer, unit_circuit, golden_matrix_path):
        s = designer.spectrum(unit_circuit, k_max=1, dump_matrix=True)
        assert s.dimension == 9 and s.k_max_used == 1
        dumped = (designer.results_dir / "hamiltonian.csv").read_bytes()
        assert dumped == golden_matrix_path.read_bytes()
        eigen = pd.read_csv(designer.results_dir / "eigenvalues.csv")
        assert list(eigen.columns) == ["level", "energy_GHz"]
        assert len(eigen) == 4

    def test_matrix_dump_is_solved_sublattice(self, tmp_path, circuit_124):
        refined = TrainmonDesigner(config_path=None,
                                   overrides={"results_dir": str(tmp_path / "refined"),
                                              "resolution": 2})
        s = refined.spectrum(circuit_124, levels=3, k_max=2, dump_matrix=True)
        assert s.dimension == 17
        dumped = pd.read_csv(refined.results_dir / "hamiltonian.csv")
        assert dumped["row"].max() + 1 == s.dimension
        assert dumped["col"].max() + 1 == s.dimension
        plain = hamiltonian_to_frame(solved_hamiltonian(circuit_124, 2))
        np.testing.assert_allclose(dumped[["row", "col", "re", "im"]].to_numpy(),
                                   plain[["row", "col", "re", "im"]].to_numpy(), atol=1e-12)

    def test_levels_validated(self, designer, circuit_124):
        with pytest.raises(SchemaError):
            designer.spectrum(circuit_124, levels=0)


def test_dispersion_outputs(designer, circuit_124):
    scan = ScanRequest(loop1_range=(-math.pi, math.pi), loop2_range=(-math.pi, math.pi),
                       grid=(3, 3))
    g = designer.dispersion(circuit_124, scan)
    frame = pd.read_csv(designer.results_dir / "dispersion.csv")
    assert len(frame) == 9
    assert frame["e01_GHz"].tolist() == pytest.approx(g.e01.ravel().tolist(), rel=1e-15)
    extrema = pd.read_csv(designer.results_dir / "extrema.csv")
    assert list(extrema.columns) == ["surface", "i1", "i2", "kind", "phi1", "phi2", "value_GHz"]


def test_dephasing_flat_circuit(designer):
    flat = make_circuit(1.0, {1: 0.0, 2: 0.0})
    report = designer.dephasing(flat, NoiseRequest(model=NoiseModel(), sweep_points=3))
    assert report.total == math.inf
    doc = _read_json(designer.results_dir / "dephasing.json")
    assert doc["total"] == "INF"
    sweep = pd.read_csv(designer.results_dir / "bias_sweep.csv")
    assert len(sweep) == 3
    assert all(math.isinf(t) for t in sweep["t_combined"])


def test_fluxonium_dephasing_outputs(designer):
    designer.config_manager.update({"phase_points": 511})
    target = FluxoniumParams(e_j=4.0, e_c=1.0, e_l=0.5, phi_ext=0.5)
    r = designer.fluxonium_dephasing(target, NoiseRequest(model=NoiseModel(), sweep_points=3))
    assert r.points == 511
    doc = _read_json(designer.results_dir / "target_dephasing.json")
    assert doc["d1"] == r.d1
    assert doc["points"] == 511
    sweep = pd.read_csv(designer.results_dir / "target_bias_sweep.csv")
    assert len(sweep) == 3
    assert sweep["d1"][1] == pytest.approx(r.d1, rel=1e-12)


def test_compare_small_domain_warns(designer, circuit_124):
    designer.config_manager.update({"phase_domain": [-2.0, 2.0]})
    request = FitRequest(target=FluxoniumParams(e_j=4.0, e_c=1.0, e_l=0.5, phi_ext=math.pi),
                         phase_points=399)
    report = designer.compare(request, circuit_124)
    domain_warnings = [w for w in report.warnings if w.startswith("Domínio")]
    assert len(domain_warnings) == 1
    doc = _read_json(designer.results_dir / "comparison.json")
    assert doc["warnings"] == list(report.warnings)
    table = (designer.results_dir / "comparison.txt").read_text(encoding="utf-8")
    assert table.splitlines()[2].startswith("E01")
    assert f"Aviso: {domain_warnings[0]}" in table


@pytest.mark.slow
def test_compare_double_well(designer, configs_dir):
    request = designer.data_handler.load_fit_request(configs_dir / "double_well_fit.json")
    report = designer.compare(request)
    assert report.metrics is not None
    assert abs(report.rel_e01) < 1e-4
    assert abs(report.rel_e12) < 1e-4
    doc = _read_json(designer.results_dir / "comparison.json")
    assert doc["reference"]["method"] == "phase"
    assert doc["trainmon"]["method"] == "charge"
