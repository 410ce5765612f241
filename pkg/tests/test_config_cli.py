import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from fasttransport.cli import main
from fasttransport.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return path


def run(tmp_path, command, cfg, out="out", *extra):
    path = cfg if isinstance(cfg, Path) else write(tmp_path, cfg)
    return main([command, "--config", str(path), "--out", str(tmp_path / out), *extra])


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_shipped_configs_validate():
    for path in sorted(CONFIGS.glob("*.json")):
        load_config(path)


def test_oscillator_unit_shorthands():
    cfg = parse_config({"params": {"omega0": 2.0},
                        "spec": {"distance_over_sigma0": 10, "duration_over_period": 0.5, "a": 0.8}})
    assert cfg.spec.distance == pytest.approx(10 * math.sqrt(0.25))
    assert cfg.spec.duration == pytest.approx(math.pi / 2)
    assert cfg.spec.a == pytest.approx(0.8)
    assert parse_config({"spec": {"distance": 1, "b": 3.0}}).spec.duration == 3.0


def test_schema_error_names_the_line(tmp_path):
    text = '{\n  "params": {"mass": 1.0},\n  "numerics": {\n    "grid_points": "many"\n  }\n}\n'
    with pytest.raises(ConfigError, match="line 4"):
        load_config(write(tmp_path, text))
    assert run(tmp_path, "bounds", text) == 2


def test_bad_json_reports_position(tmp_path):
    with pytest.raises(ConfigError, match="line 2 column"):
        load_config(write(tmp_path, '{\n  "params": ,\n}'))


def test_unknown_key_and_kind_rejected():
    with pytest.raises(ConfigError):
        parse_config({"spec": {"distance": 1, "duration": 1}, "colour": "blue"})
    with pytest.raises(ConfigError):
        parse_config({"spec": {"distance": 1, "duration": 1}, "protocol": {"kind": "teleport"}})


def test_empty_outputs_rejected(tmp_path):
    cfg = {"spec": {"distance": 1.0, "duration": 1.0}, "outputs": []}
    with pytest.raises(ConfigError):
        parse_config(cfg)
    assert run(tmp_path, "bounds", cfg) == 2


def test_duplicate_output_paths_rejected():
    outputs = [{"observable": "energy", "path": "a.csv", "format": "csv"},
               {"observable": "energy_averages", "path": "a.csv", "format": "json"}]
    with pytest.raises(ConfigError, match="duplicate output path"):
        parse_config({"spec": {"distance": 1.0, "duration": 1.0}, "outputs": outputs})


def test_conflicting_duration_keys():
    with pytest.raises(ConfigError, match="only one of"):
        parse_config({"spec": {"distance": 1.0, "duration": 1.0, "b": 2.0}})


def test_missing_beam_is_config_error(tmp_path):
    cfg = {"spec": {"distance": 1.0, "duration": 4 * math.pi}}
    assert run(tmp_path, "perturb", cfg) == 2


def test_numerical_failure_exit_code(tmp_path):
    cfg = json.loads((CONFIGS / "simulate_quintic.json").read_text())
    cfg["numerics"]["padding"] = 1.0
    assert run(tmp_path, "simulate", cfg) == 3


def test_bounds_output(tmp_path):
    cfg = {"spec": {"distance": 1.0, "duration": 1.0}}
    assert run(tmp_path, "bounds", cfg) == 0
    rep = json.loads((tmp_path / "out" / "bounds.json").read_text())
    assert rep["euler_lagrange_bound"] == pytest.approx(6.0)


def test_design_outputs(tmp_path):
    assert run(tmp_path, "design", CONFIGS / "design_rest_to_rest.json") == 0
    out = tmp_path / "out"
    names = sorted(p.name for p in out.iterdir())
    assert names == ["design_b12.57.csv", "design_b2.505.csv", "design_b2.csv", "design_qc.csv"]
    rows = read_csv(out / "design_b2.csv")
    assert rows[0] == ["s", "qc_over_d", "q0_over_d"]
    assert float(rows[1][0]) == 0.0 and float(rows[-1][1]) == pytest.approx(1.0)


def test_csv_headers(tmp_path):
    cfg = {"spec": {"distance": 2.0, "duration": 3.0}, "numerics": {"samples": 11}}
    assert run(tmp_path, "energy", cfg) == 0
    assert read_csv(tmp_path / "out" / "energy.csv")[0] == ["t", "EH", "EP", "Ekin_c", "dH"]
    sim = dict(cfg, numerics={"grid_points": 512, "samples": 5})
    assert run(tmp_path, "simulate", sim, "sim") == 0
    assert read_csv(tmp_path / "sim" / "series.csv")[0] == ["t", "q_mean", "p_mean", "E", "I_mean", "fidelity"]
    result = json.loads((tmp_path / "sim" / "result.json").read_text())
    assert result["fidelity"] > 1 - 1e-6


def test_reruns_are_byte_identical(tmp_path):
    cfg = CONFIGS / "perturbation_sweep.json"
    assert run(tmp_path, "sweep", cfg, "a") == 0
    assert run(tmp_path, "sweep", cfg, "b", "--threads", "3") == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert a.splitlines()[0] == b"N,n,F_bb,F_inv,F_numeric_bb,F_numeric_inv"
    sim = json.loads((CONFIGS / "simulate_quintic.json").read_text())
    sim["numerics"].update(grid_points=512, samples=5)
    for out in ("s1", "s2"):
        assert run(tmp_path, "simulate", sim, out) == 0
    for name in ("series.csv", "result.json"):
        assert (tmp_path / "s1" / name).read_bytes() == (tmp_path / "s2" / name).read_bytes()


def test_single_point_energy_sweep_matches_commands(tmp_path):
    tf = 0.9
    base = {"spec": {"distance": 1.5, "duration": tf}}
    assert run(tmp_path, "sweep", dict(base, sweep={"kind": "energy", "durations": [tf]})) == 0
    assert run(tmp_path, "energy", base, "e") == 0
    assert run(tmp_path, "bounds", base, "b") == 0
    row = read_csv(tmp_path / "out" / "sweep.csv")[1]
    avg = json.loads((tmp_path / "e" / "energy_averages.json").read_text())
    bounds = json.loads((tmp_path / "b" / "bounds.json").read_text())
    assert float(row[1]) == avg["EP_avg"]
    assert float(row[3]) == avg["dH_avg"]
    assert float(row[2]) == bounds["euler_lagrange_bound"]
    assert float(row[4]) == bounds["aa_bound_on_avg_dH"]


def test_single_point_perturbation_sweep_matches_command(tmp_path):
    base = {"spec": {"distance": 1.0, "duration": 8 * math.pi}, "beam": {"x_R": 10.0},
            "protocol": {"kind": "bang_bang", "options": {"n": 1}}}
    assert run(tmp_path, "sweep", dict(base, sweep={"kind": "perturbation", "N": [2], "n": [1]})) == 0
    assert run(tmp_path, "perturb", base, "p") == 0
    row = read_csv(tmp_path / "out" / "sweep.csv")[1]
    rep = json.loads((tmp_path / "p" / "perturbation.json").read_text())
    assert float(row[2]) == rep["F_closed"]
    assert float(row[4]) == rep["F_numeric"]


def test_single_point_region_sweep_matches_scan(tmp_path):
    block = {"kind": "region_map", "a_range": [0.8, 0.8], "b_over_2pi_range": [0.3, 0.3], "resolution": 1}
    assert run(tmp_path, "sweep", {"sweep": block}) == 0
    assert run(tmp_path, "scan", {"sweep": block}, "s") == 0
    assert read_csv(tmp_path / "out" / "sweep.csv") == read_csv(tmp_path / "s" / "region_map.csv")


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {"spec": {"distance": 1.0, "duration": 2.0}})
    proc = subprocess.run([sys.executable, "-m", "fasttransport.cli", "bounds", "--config", str(cfg),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("bounds.json")
    bad = subprocess.run([sys.executable, "-m", "fasttransport.cli", "bounds", "--config",
                          str(tmp_path / "missing.json")], capture_output=True, text=True)
    assert bad.returncode == 2 and "config error" in bad.stderr
