"""Experiment harness: config parsing, sweeps, CSV contract, CLI behavior."""

import os

import numpy as np
import pytest
import scipy.special

from helmlab.cli import main as cli_main
from helmlab.grid import Rect, build_grid, MeshRule
from helmlab.harness import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    SourceSpec,
    RESULT_COLUMNS,
    N_TIMING_COLUMNS,
    default_config,
    designated_iteration,
    export_matrix,
    hankel_reference,
    load_config,
    parse_config,
    pml_accuracy_test,
    read_rows_csv,
    resolve_kappa,
    resolve_sigma,
    resolve_strength,
    run_rate,
    run_table,
    write_rows_csv,
)
from helmlab.linalg import read_coo

SMALL = """
run.k = 20
run.method = RAS,RMS
layout.n = 1x2
layout.overlap = layers:2
"""


def test_defaults_parse():
    cfg = default_config()
    assert cfg.ks == (20.0, 30.0, 40.0)
    assert cfg.methods == ("RAS", "RMS")
    assert cfg.tol == 1e-6
    assert cfg.p == 2
    assert cfg.pml_kind == "cubic"
    assert cfg.layouts == ((1, 2),)
    assert cfg.omega_int == Rect(0.0, 1.0, 0.0, 1.0)


def test_parse_rejects_unknown_key_by_name():
    with pytest.raises(ConfigError, match="run.kk"):
        parse_config("run.kk = 5")


def test_parse_value_errors_name_the_key():
    bad = {
        "run.k = zero": "run.k",
        "run.tol = 2.0": "run.tol",
        "mesh.rule = random": "mesh.rule",
        "pml.kappa = megaparsec": "pml.kappa",
        "pml.strength = -3": "fixed",
        "layout.n = 2y2": "layout.n",
        "layout.overlap = wide": "layout.overlap",
        "source.sigma = narrow": "source.sigma",
        "run.method = CG": "run.method",
    }
    for text, frag in bad.items():
        with pytest.raises(ConfigError, match=frag):
            parse_config(text)


def test_parse_comments_duplicates_and_echo():
    cfg = parse_config("# leading comment\nrun.k = 10\n\nrun.k = 15,25\n")
    assert cfg.ks == (15.0, 25.0)
    assert cfg.raw_lines == ("run.k = 10", "run.k = 15,25")


def test_rule_resolution():
    assert resolve_kappa(("lambda", 0.0), 20.0, 0.01) == pytest.approx(2 * np.pi / 20.0)
    assert resolve_kappa(("fixed", 0.3), 20.0, 0.01) == 0.3
    assert resolve_kappa(("layers", 4.0), 20.0, 0.01) == pytest.approx(0.04)
    assert resolve_strength(("30k", 0.0), 20.0) == 600.0
    assert resolve_strength(("k2.5", 0.0), 4.0) == pytest.approx(32.0)
    assert resolve_strength(("fixed", 7.0), 20.0) == 7.0
    assert resolve_sigma(("lambda", 8.0), 20.0) == pytest.approx((2 * np.pi / 20.0) / 8.0)
    assert resolve_sigma(("fixed", 0.01), 20.0) == 0.01


def test_source_gaussian_unit_mass_and_support_check():
    grid = build_grid(Rect(0.0, 1.0, 0.0, 1.0), 0.3, 20.0, MeshRule.h(0.02))
    src = SourceSpec(kind="gaussian", sigma_rule=("fixed", 0.03))
    load = src.load_for(grid, 20.0)
    mids = (np.arange(640) + 0.5) / 640.0
    total = load.f(*np.meshgrid(mids, mids)).mean()  # midpoint rule, unit area
    assert total == pytest.approx(1.0, rel=1e-8)
    # a source too close to the physical edge is rejected
    near_edge = SourceSpec(kind="gaussian", sigma_rule=("fixed", 0.03), center=(0.05, 0.5))
    with pytest.raises(ConfigError, match="support"):
        near_edge.load_for(grid, 20.0)


def test_source_element_bump():
    grid = build_grid(Rect(0.0, 1.0, 0.0, 1.0), 0.3, 20.0, MeshRule.h(0.05))
    src = SourceSpec(kind="element_bump", center=(0.52, 0.48))
    load = src.load_for(grid, 20.0)
    box = load.support
    assert box.width == pytest.approx(grid.hx) and box.height == pytest.approx(grid.hy)
    assert float(load.f(np.array([0.52]), np.array([0.48]))[0]) == pytest.approx(
        1.0 / (grid.hx * grid.hy)
    )
    assert float(load.f(np.array([0.9]), np.array([0.9]))[0]) == 0.0
    with pytest.raises(ConfigError):
        SourceSpec(kind="ring")


def test_designated_iterations():
    assert designated_iteration("RAS", 1, 2) == 2
    assert designated_iteration("RAS", 2, 2) == 3
    assert designated_iteration("RAS", 1, 8) == 8
    assert designated_iteration("RMS", 1, 8) == 2
    assert designated_iteration("RMS", 2, 2) == 4


def test_result_row_formatting():
    row = ResultRow(method="RAS", k=20.0, n1=1, n2=2, delta_rule="layers:2",
                    status="error: bad, worse\nline")
    fields = row.as_csv_fields()
    assert len(fields) == len(RESULT_COLUMNS)
    assert fields[0] == "RAS"
    assert fields[5] == ""  # unset delta_value stays empty
    assert "," not in fields[14] and "\n" not in fields[14]


def test_csv_write_read_roundtrip(tmp_path):
    cfg = parse_config(SMALL)
    rows = [ResultRow(method="RAS", k=20.0, n1=1, n2=2, delta_rule="layers:2",
                      delta_value=0.05, kappa=0.31, a=600.0, p=2, h=0.023,
                      dofs=20449, iters=3, final_rel_res=4.1e-8, rho=1.5e-4,
                      status="ok", t_assembly=0.5, t_factorize=0.7, t_iterate=0.04)]
    path = tmp_path / "deep" / "results.csv"
    write_rows_csv(str(path), rows, cfg)
    comments, records = read_rows_csv(str(path))
    assert comments == list(cfg.raw_lines)
    assert len(records) == 1
    rec = records[0]
    assert rec["method"] == "RAS"
    assert float(rec["final_rel_res"]) == 4.1e-8
    assert int(rec["dofs"]) == 20449


def test_run_table_small_sweep(tmp_path):
    cfg = parse_config(SMALL)
    out = tmp_path / "results.csv"
    rows = run_table(cfg, out_csv=str(out))
    assert len(rows) == 2  # one k, one layout, one overlap, two methods
    by_method = {r.method: r for r in rows}
    assert by_method["RAS"].status == "ok"
    assert by_method["RMS"].iters <= 3
    assert by_method["RAS"].iters <= 8
    assert by_method["RAS"].rho is not None
    # layout report lands next to the CSV
    layouts = os.listdir(tmp_path / "layouts")
    assert len(layouts) == 1 and layouts[0].endswith(".json")


def test_run_table_reproducible_modulo_timings(tmp_path):
    cfg = parse_config(SMALL)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_table(cfg, out_csv=str(p1), report_dir=str(tmp_path / "l1"))
    run_table(cfg, out_csv=str(p2), report_dir=str(tmp_path / "l2"))
    _, recs1 = read_rows_csv(str(p1))
    _, recs2 = read_rows_csv(str(p2))
    stable = RESULT_COLUMNS[:-N_TIMING_COLUMNS]
    for r1, r2 in zip(recs1, recs2):
        for col in stable:
            assert r1[col] == r2[col], col


def test_run_table_records_cell_errors(tmp_path):
    cfg = parse_config("""
run.k = 20
run.method = RAS
layout.n = 1x2,1x50
layout.overlap = layers:2
""")
    rows = run_table(cfg)
    ok = [r for r in rows if r.status == "ok"]
    bad = [r for r in rows if r.status.startswith("error")]
    assert len(ok) == 1 and len(bad) == 1
    assert bad[0].n2 == 50
    assert bad[0].iters is None


def test_run_table_bundle_failure_marks_all_cells():
    cfg = parse_config("run.k = 500\nrun.method = RAS\n")
    rows = run_table(cfg)  # pollution mesh at k = 500 exceeds the dof guard
    assert len(rows) == 1
    assert rows[0].status.startswith("error")


def test_accuracy_report_and_control():
    cfg = parse_config("run.k = 20")
    rep = pml_accuracy_test(cfg)
    assert rep.k == 20.0
    assert rep.rel_err <= 0.05
    assert rep.passed
    ctrl = pml_accuracy_test(cfg, strength_override=0.0)
    assert ctrl.rel_err >= 10.0 * rep.rel_err
    assert not ctrl.passed


def test_accuracy_needs_room_for_the_annulus():
    cfg = parse_config("run.k = 20\ndomain.l = 0.3\ndomain.d = 0.3\n")
    with pytest.raises(ConfigError, match="annulus|support"):
        pml_accuracy_test(cfg)


def test_hankel_reference_value():
    k = 14.0
    val = hankel_reference(k, (0.2, 0.3), (0.7, 0.9))
    r = np.hypot(0.5, 0.6)
    ref = k**2 * 0.25j * scipy.special.hankel1(0, k * r)
    assert val == pytest.approx(complex(ref), rel=1e-10)


def test_run_rate_records_and_csv(tmp_path):
    cfg = parse_config("""
run.k = 20,25
run.method = RAS,RMS
layout.n = 1x2
layout.overlap = layers:2
""")
    out = tmp_path / "rate.csv"
    records = run_rate(cfg, out_csv=str(out))
    assert [r["k"] for r in records] == [20.0, 25.0]
    for rec in records:
        assert 0.0 <= rec["rho_RAS"] < 1.0
        assert 0.0 <= rec["rho_RMS"] < 1.0
    text = out.read_text()
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header == "k,rho_RAS,rho_RMS"


def test_export_matrix_roundtrip(tmp_path):
    cfg = parse_config("run.k = 10\nmesh.rule = h_target\nmesh.value = 0.05\n")
    info = export_matrix(cfg, str(tmp_path))
    A = read_coo(os.path.join(tmp_path, info["matrix"]))
    assert A.shape == (info["n"], info["n"])
    assert A.nnz == info["nnz"]
    b = read_coo(os.path.join(tmp_path, info["load"]))
    assert b.shape == (info["n"], 1)


def test_iteration_count_regression():
    """Frozen desk numbers: two strips at k = 20 with a 2h overlap."""
    cfg = parse_config(SMALL)
    rows = run_table(cfg)
    by_method = {r.method: r for r in rows}
    assert 2 <= by_method["RAS"].iters <= 6
    assert by_method["RMS"].iters == 2


# -- command line -------------------------------------------------------------


def test_cli_missing_config_names_path(tmp_path, capsys):
    rc = cli_main(["table", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert rc == 2
    assert str(tmp_path / "nope.cfg") in capsys.readouterr().err


def test_cli_unknown_key_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("run.quux = 1\n")
    rc = cli_main(["table", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2
    assert "run.quux" in capsys.readouterr().err


def test_cli_table_runs_and_writes(tmp_path, capsys):
    cfg = tmp_path / "ok.cfg"
    cfg.write_text(SMALL)
    rc = cli_main(["table", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "results.csv").exists()
    out = capsys.readouterr().out
    assert "RAS" in out and "RMS" in out


def test_cli_strict_gate_blocks_table(tmp_path, capsys):
    cfg = tmp_path / "strict.cfg"
    cfg.write_text(SMALL + "accuracy.threshold = 0.0001\n")
    rc = cli_main(["table", "--config", str(cfg), "--out", str(tmp_path), "--strict"])
    assert rc == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "accuracy gate" in captured.err
    assert not (tmp_path / "results.csv").exists()


def test_cli_accuracy_subcommand(tmp_path, capsys):
    cfg = tmp_path / "acc.cfg"
    cfg.write_text("run.k = 20\n")
    rc = cli_main(["accuracy", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    assert "PASS" in capsys.readouterr().out
