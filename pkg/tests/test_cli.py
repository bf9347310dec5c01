import json
from pathlib import Path

import numpy as np
import pytest

from fmlmc import cli, experiments
from fmlmc.diffusion import SolverError
from fmlmc.experiments import ConfigError, parse_config, read_csv, render_plots

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMOKE = """\
experiment: 1d-linear
seed: 7
grid: {finest: 32, depths: [0, 1]}
physics: {D: 0.06}
pilot: 50
ensemble: 4
"""


def _run(tmp_path, text, name="cfg.yaml", *extra):
    p = tmp_path / name
    p.write_text(text)
    return cli.main(["-q", "run", str(p), *extra])


def test_smoke_run_emits_declared_files(tmp_path):
    out = tmp_path / "out"
    assert _run(tmp_path, SMOKE, "cfg.yaml", "--out", str(out)) == 0
    names = {p.name for p in out.iterdir()}
    for tag in ("MC_L0", "MLMC_L1", "F-MLMC_L1"):
        assert f"spectral_{tag}.csv" in names and f"cumulative_{tag}.csv" in names
    for f in ("totals.csv", "allocations.json", "summary.json", "spectral.svg", "cumulative.svg", "total_variance.svg"):
        assert f in names
    meta, cols, rows = read_csv(out / "spectral_MLMC_L1.csv")
    assert meta["columns"] == cols == ["mode", "nu"] and len(rows) == 32
    alloc = json.loads((out / "allocations.json").read_text())
    assert [a["kind"] for a in alloc] == ["MC", "MLMC", "F-MLMC"]
    assert alloc[0]["M"] == [100]


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(tmp_path, SMOKE, "cfg.yaml", "--out", str(a))
    _run(tmp_path, SMOKE, "cfg.yaml", "--out", str(b))
    for p in sorted(a.iterdir()):
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_plots_rebuild_from_csv(tmp_path):
    out = tmp_path / "o"
    _run(tmp_path, SMOKE, "cfg.yaml", "--out", str(out))
    before = {p.name: p.read_bytes() for p in out.glob("*.svg")}
    for p in out.glob("*.svg"):
        p.unlink()
    assert cli.main(["-q", "plot", str(out)]) == 0
    assert {p.name: p.read_bytes() for p in out.glob("*.svg")} == before


def test_seed_override_changes_results(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(tmp_path, SMOKE, "cfg.yaml", "--out", str(a))
    _run(tmp_path, SMOKE, "cfg.yaml", "--out", str(b), "--seed", "8")
    assert (a / "totals.csv").read_bytes() != (b / "totals.csv").read_bytes()


def test_output_precedence(tmp_path, monkeypatch):
    cfg = parse_config(SMOKE + "output: from_config\n", "x.yaml")
    assert experiments.resolve_output(cfg) == Path("from_config")
    monkeypatch.setenv("FMLMC_OUT", str(tmp_path / "env"))
    assert experiments.resolve_output(cfg) == tmp_path / "env"
    assert experiments.resolve_output(cfg, "cli") == Path("cli")


@pytest.mark.parametrize(
    "text,line,needle",
    [
        ("experiment: 1d-linear\nphysics: {D: 0.06}\nbudgt: 100\n", 3, "unknown key"),
        ("experiment: 1d-linear\nphysics:\n  D: -1\n", 3, "physics.D"),
        ("experiment: 1d-linear\nphysics: {D: 0.06}\nensemble: 1\n", 3, "ensemble"),
        ("experiment: 1d-linear\nphysics: {D: 0.06}\nestimators: [MC, QMC]\n", 3, "QMC"),
        ("experiment: 1d-linear\nphysics: {D: 0.06}\nbudget: lots\n", 3, "budget"),
        ("experiment: 3d\n", 1, "experiment"),
        ("experiment: 1d-linear\n", 1, "physics.D"),
        ("experiment: 2d-theta\ngrid: {finest: [16, 8]}\n", 1, "grf"),
        ("experiment: [unclosed\n", 2, "invalid YAML"),
    ],
)
def test_config_errors_name_the_line(text, line, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "c.yaml")
    msg = str(exc.value)
    assert msg.startswith(f"c.yaml:{line}:"), msg
    assert needle in msg


def test_config_error_exit_code(tmp_path, capsys):
    assert _run(tmp_path, "experiment: 1d-linear\nphysics: {D: 0.06, foo: 1}\n") == 2
    assert "cfg.yaml:2" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_solver_error_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverError("CG stopped with relative residual 1e-3")

    monkeypatch.setattr(experiments, "run_experiment", boom)
    assert _run(tmp_path, SMOKE) == 3


def test_full_overrides():
    text = "experiment: 2d-theta\ngrid: {finest: [32, 16]}\nphysics: {grf: {mu: 0.12, lengthscale: 0.2}}\n" \
           "full:\n  grid: {finest: [64, 32]}\n  ensemble: 9\n"
    assert parse_config(text).finest == (32, 16)
    cfg = parse_config(text, full=True)
    assert cfg.finest == (64, 32) and cfg.ensemble == 9 and cfg.depths == [0, 1]


def test_shipped_configs_validate():
    paths = sorted(CONFIGS.glob("*.yaml"))
    assert len(paths) >= 7
    for p in paths:
        experiments.load_config(p)
        experiments.load_config(p, full=True)


def test_cost_table_csv_matches_printed_tables(tmp_path):
    out = tmp_path / "ct"
    assert cli.main(["-q", "run", str(CONFIGS / "cost_tables.yaml"), "--out", str(out)]) == 0
    _, cols, rows = read_csv(out / "cost_table_1d.csv")
    got = np.array([r[1:] for r in rows], dtype=float)
    printed = np.array([
        [1, 1.98675496689, 1, 1.94805194805],
        [0.50333333333, 1.97385620915, 0.51333333333, 1.9012345679],
        [0.255, 1.94904458599, 0.27, 1.8202247191],
        [0.13083333333, 1.90303030303, 0.14833333333, 1.69523809524],
        [0.06875, 1.82320441989, 0.0875, 1.53284671533],
        [0.03770833333, np.nan, 0.05708333333, np.nan],
    ])
    np.testing.assert_allclose(np.round(got, 4), np.round(printed, 4), equal_nan=True)
    assert [r[0] for r in rows] == ["L", "L-1", "L-2", "L-3", "L-4", "L-5"]
    _, _, rows2 = read_csv(out / "cost_table_2d.csv")
    assert len(rows2) == 4 and np.isclose(rows2[3][3], 0.034)


def test_cost_table_command(capsys):
    assert cli.main(["cost-table", "--dim", "1", "--filtered", "no", "--depth", "6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "level,cost_over_finest,cost_over_next_coarser"
    assert lines[3].startswith("L-1,0.50333")
    assert cli.main(["cost-table", "--dim", "2", "--filtered", "yes"]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("L-3,0.034")


def test_damping_outputs(tmp_path, capsys):
    out = tmp_path / "d"
    assert cli.main(["-q", "run", str(CONFIGS / "damping_curves.yaml"), "--out", str(out)]) == 0
    _, cols, rows = read_csv(out / "damping.csv")
    cons = [r[cols.index("consistent")] for r in rows]
    assert len(rows) == 32 and cons[0] == 1.0 and cons[16] == 0.0
    assert (out / "damping.svg").exists() and (out / "damping_filtered.svg").exists()
    assert cli.main(["damping", "--n", "8"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("0,1,0,")
    assert cli.main(["damping", "--n", "7"]) == 2


def test_ablation_run(tmp_path):
    text = SMOKE.replace("1d-linear", "1d-ablation")
    out = tmp_path / "ab"
    assert _run(tmp_path, text, "cfg.yaml", "--out", str(out)) == 0
    _, cols, rows = read_csv(out / "ablation.csv")
    assert [r[1] for r in rows] == ["MC", "MLMC", "F-MLMC-pre-only", "F-MLMC-post-only", "F-MLMC"]
    alloc = {a["kind"]: a for a in json.loads((out / "allocations.json").read_text())}
    # pair costs of the two-level run encode gamma = beta * s / (s - 1) / 300
    for name, beta in (("F-MLMC-pre-only", 4), ("F-MLMC-post-only", 1), ("MLMC", 1), ("F-MLMC", 4)):
        g = beta * 2 / 300
        np.testing.assert_allclose(alloc[name]["costs"], [0.5 * (1 + g), 1.0])


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_2d_smoke(tmp_path, fmt):
    text = (
        "experiment: 2d-theta\nseed: 3\ngrid: {finest: [16, 8], depths: [0, 1]}\n"
        "physics: {grf: {mu: 0.12, lengthscale: 0.2}}\npilot: 20\nensemble: 3\n"
        f"outputs: {{field_format: {fmt}}}\n"
    )
    out = tmp_path / "2d"
    assert _run(tmp_path, text, "cfg.yaml", "--out", str(out)) == 0
    ext = "csv" if fmt == "csv" else "bin"
    assert (out / f"lengthscale.{ext}").exists()
    meta, cols, rows = read_csv(out / "theta_exact.csv")
    assert len(rows) == 128 and all(r[1] > 0 for r in rows)
    _, cols, rows = read_csv(out / "spectral_F-MLMC_L1.csv")
    assert cols == ["mode", "ky", "kx", "nu"] and len(rows) == 128
    assert (out / "mean_MC_L0.svg").exists() and (out / "variance_MLMC_L1.svg").exists()
    _, cols, rows = read_csv(out / "totals.csv")
    assert "mse" in cols and len(rows) == 3
    assert render_plots(out)
