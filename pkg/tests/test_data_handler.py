import json
import math

import pytest

from config_manager import default_configuration
from data_handler import DataHandler, parse_phase, resolve_phases, validate_document
from exceptions import SchemaError
from noise import NoiseModel
from potentials import QuartonParams, TabulatedPotential, TrainmonCircuit


@pytest.fixture
def handler():
    return DataHandler()


def _write_json(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestParsePhase:
    @pytest.mark.parametrize("text, expected", [
        ("pi", math.pi),
        ("-pi", -math.pi),
        ("4pi", 4 * math.pi),
        ("-3*pi/2", -1.5 * math.pi),
        ("π/2", math.pi / 2),
        ("0.25", 0.25),
        (2, 2.0),
        (-0.5, -0.5),
    ])
    def test_valid(self, text, expected):
        assert parse_phase(text) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["abc", "", "pi/0", True, "2*tau"])
    def test_invalid(self, text):
        with pytest.raises(SchemaError):
            parse_phase(text)

    def test_resolve_nested(self):
        doc = {"target": {"phi_e": "pi", "gamma": 3}, "window": ["-pi", 1],
               "branches": [{"n": 2, "phi_branch": "2*pi"}], "name": "pi"}
        resolved = resolve_phases(doc)
        assert resolved["target"]["phi_e"] == pytest.approx(math.pi)
        assert resolved["window"] == pytest.approx([-math.pi, 1.0])
        assert resolved["branches"][0]["phi_branch"] == pytest.approx(2 * math.pi)
        assert resolved["name"] == "pi"


class TestValidation:
    def test_unknown_schema(self):
        with pytest.raises(SchemaError):
            validate_document({}, "nonexistent")

    def test_error_names_path(self):
        doc = {"e_c": 1.0, "branches": [{"n": 0, "e_j": 1.0}]}
        with pytest.raises(SchemaError, match="branches/0/n"):
            validate_document(doc, "circuit")

    def test_cross_schema_reference(self):
        doc = {"target": {"kind": "quarton", "gamma": 1.0, "n_array": 2, "e_j": 1.0,
                          "phi_e": "half"}}
        with pytest.raises(SchemaError):
            validate_document(doc, "fit_request")

    def test_tabulated_needs_samples_or_path(self):
        with pytest.raises(SchemaError):
            validate_document({"kind": "tabulated"}, "potential")

    def test_phase_grid_rejects_unknown_keys(self):
        doc = {"target": {"kind": "fluxonium", "e_j": 4, "e_c": 1, "e_l": 0.5},
               "phase_grid": {"points": 64, "spacing": 0.1}}
        with pytest.raises(SchemaError):
            validate_document(doc, "fit_request")


class TestLoaders:
    def test_quarton_fit_request(self, handler, configs_dir):
        request = handler.load_fit_request(configs_dir / "quarton_fit.json")
        assert isinstance(request.target, QuartonParams)
        assert request.target.phi_e == pytest.approx(math.pi)
        assert request.window == pytest.approx((-math.pi, math.pi))
        assert request.branch_set == "1,2,4"
        assert request.e_c == 0.1
        assert request.include_offset is None

    def test_double_well_request(self, handler, configs_dir):
        request = handler.load_fit_request(configs_dir / "double_well_fit.json")
        assert isinstance(request.target, TrainmonCircuit)
        assert request.target.branch_set == (1, 2)
        assert request.phase_points == 4096
        assert request.phase_boundary is None

    def test_potential_document(self, handler, tmp_path):
        path = _write_json(tmp_path / "q.json", {"kind": "quarton", "gamma": 3.0, "n_array": 3,
                                                 "e_j": 1.0, "phi_e": "pi"})
        target = handler.load_potential(path)
        assert isinstance(target, QuartonParams)
        assert target.phi_e == pytest.approx(math.pi)

    def test_circuit(self, handler, configs_dir):
        c = handler.load_circuit(configs_dir / "trainmon_124.json")
        assert c.branch_set == (1, 2, 4)
        assert c.e_c == 0.5
        assert c.loop_fluxes == (0.0, 0.0)

    def test_scan(self, handler, configs_dir):
        scan = handler.load_scan(configs_dir / "scan.json")
        assert scan.grid == (3, 3)
        assert scan.loop1_range == pytest.approx((-math.pi, math.pi))
        assert scan.loops == (0, 1)

    def test_noise_file(self, handler, configs_dir):
        noise = handler.load_noise(configs_dir / "noise.json", default_configuration())
        assert noise.model.a_phi == 1e-6
        assert noise.model.omega_uv == pytest.approx(NoiseModel().omega_uv, rel=1e-15)
        assert noise.flux_step == 1e-4
        assert (noise.sweep_loop, noise.sweep_half_width, noise.sweep_points) == (0, 0.05, 5)

    def test_noise_defaults_only(self, handler):
        defaults = default_configuration()
        defaults["a_phi"] = 2e-6
        noise = handler.load_noise(None, defaults)
        assert noise.model.a_phi == 2e-6
        assert noise.loops is None and noise.sweep_points is None

    def test_duplicate_branches_rejected(self, handler, tmp_path):
        path = _write_json(tmp_path / "c.json", {
            "e_c": 1.0, "branches": [{"n": 2, "e_j": 1.0}, {"n": 2, "e_j": 1.0}]})
        with pytest.raises(SchemaError):
            handler.load_circuit(path)

    def test_malformed_json(self, handler, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"e_c": 1.0, "branches": [', encoding="utf-8")
        with pytest.raises(SchemaError, match="JSON malformado"):
            handler.load_circuit(path)

    def test_missing_file(self, handler, tmp_path):
        with pytest.raises(SchemaError):
            handler.load_circuit(tmp_path / "absent.json")

    def test_tabulated_target_from_relative_csv(self, handler, tmp_path):
        (tmp_path / "well.csv").write_text("phi,u\n-1,1\n0,0\n1,1\n", encoding="utf-8")
        path = _write_json(tmp_path / "fit.json", {
            "target": {"kind": "tabulated", "path": "well.csv"}, "window": [-1, 1]})
        request = handler.load_fit_request(path)
        assert isinstance(request.target, TabulatedPotential)
        assert request.target.evaluate(0.5) == pytest.approx(0.5)


class TestTabulatedCsv:
    def test_aliases_sorting_and_invalid_rows(self, handler, tmp_path):
        path = tmp_path / "pot.csv"
        path.write_text("Phi,U_GHz\n1.0,2.0\n-1.0,0.5\nx,3.0\n0.0,1.0\n", encoding="utf-8")
        t = handler.load_tabulated_csv(path)
        assert t.samples == ((-1.0, 0.5), (0.0, 1.0), (1.0, 2.0))

    def test_latin1_fallback(self, handler, tmp_path):
        path = tmp_path / "pot.csv"
        path.write_bytes("phi,u,nota\n0,1,ação\n1,2,média\n".encode("latin-1"))
        t = handler.load_tabulated_csv(path)
        assert t.samples == ((0.0, 1.0), (1.0, 2.0))

    def test_missing_columns(self, handler, tmp_path):
        path = tmp_path / "pot.csv"
        path.write_text("x,y\n0,1\n1,2\n", encoding="utf-8")
        with pytest.raises(SchemaError):
            handler.load_tabulated_csv(path)

    def test_missing_file(self, handler, tmp_path):
        with pytest.raises(SchemaError):
            handler.load_tabulated_csv(tmp_path / "absent.csv")
