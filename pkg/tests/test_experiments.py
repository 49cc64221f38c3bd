import json

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from lagmaxwell import cli
from lagmaxwell.assembly import assemble_operators
from lagmaxwell.krylov import read_residual_csv
from lagmaxwell.mesh import build_mesh
from lagmaxwell.experiments import (
    RunManifest,
    ScenarioConfig,
    alpha_token,
    compare_with_direct,
    load_config,
    parse_config,
    read_field_pgm,
    run_scenario,
    save_config,
    scenario_id,
    serialize_config,
    write_field_pgm,
    _expand_full,
    _source_vector,
)


def quick_config(out_dir, **kw):
    """A sweep small enough to run in about a second."""
    base = dict(nx=24, ny=24, alphas=(2 * np.pi, 0.05 * np.pi), eta=0.3,
                m_max=200, max_iterations=300, inner_method="direct",
                mode="both", output_dir=str(out_dir))
    base.update(kw)
    return ScenarioConfig(**base)


def test_config_defaults_match_frozen_fixture():
    """Defaults pinned to the published setup; a drift here is an API break."""
    cfg = ScenarioConfig()
    assert cfg.omega == 2 * np.pi / 100
    assert cfg.eta == 75.0
    assert cfg.tau == 200.0
    assert cfg.tau == pytest.approx(4 * np.pi / cfg.omega, rel=1e-12)
    assert cfg.eps_lag == 1e-5
    assert cfg.restart_k == 100
    assert cfg.mu1 == 30.0 and cfg.mu2 == 5.0
    assert cfg.eps_r == 1.0 and cfg.sigma == 0.0
    assert cfg.lam == 1.0 / np.sqrt(30.0)
    assert cfg.m_max == 512
    assert cfg.nx == 128 and cfg.ny == 128
    assert cfg.width == 24.0 and cfg.height == 24.0
    assert cfg.radius == 6.0 and cfg.circle_x == 12.0 and cfg.circle_y == 12.0
    assert cfg.alphas == (2 * np.pi, np.pi, 0.5 * np.pi, 0.1 * np.pi,
                          0.05 * np.pi, 0.0)
    assert cfg.tol_unpreconditioned == 1e-4
    assert cfg.tol_laguerre == 1e-8
    assert cfg.max_iterations == 1000
    assert cfg.model == 1 and cfg.mode == "both"


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(mode="bogus")
    with pytest.raises(ValueError):
        ScenarioConfig(model=3)
    with pytest.raises(ValueError):
        ScenarioConfig(nx=1)
    with pytest.raises(ValueError):
        ScenarioConfig(alphas=(7.0,))  # outside [0, 2pi]


def test_config_roundtrip_is_bit_exact(tmp_path):
    cfg = ScenarioConfig(nx=24, ny=24, eta=0.3, alphas=(2 * np.pi, 0.05 * np.pi),
                         mu1=31.7, inner_method="direct", output_dir="elsewhere")
    text = serialize_config(cfg)
    assert serialize_config(parse_config(text)) == text
    path = tmp_path / "case.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert serialize_config(load_config(path)) == text


def test_config_rejects_unknown_names():
    with pytest.raises(ValueError, match="unknown config section"):
        parse_config("[wavelets]\nfoo = 1\n")
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("[geometry]\nnx = 32\nnz = 9\n")


def test_config_missing_keys_fall_back_to_defaults():
    cfg = parse_config("[geometry]\nnx = 32\n")
    assert cfg.nx == 32
    assert cfg.ny == 128
    assert cfg.eta == 75.0


def test_manifest_json_roundtrip():
    m = RunManifest(scenario_id="deadbeef0123", version="0.1",
                    config={"nx": 24, "alphas": [1.0, 0.5]},
                    entries=[{"alpha": 1.0, "mode": "laguerre",
                              "iterations": 7, "error": None}],
                    total_wall_time=2.5)
    assert RunManifest.from_json(m.to_json()) == m


def test_alpha_token_format():
    assert alpha_token(2 * np.pi) == "2.0000pi"
    assert alpha_token(0.05 * np.pi) == "0.0500pi"
    assert alpha_token(0.0) == "0.0000pi"


def test_scenario_id_tracks_physics_only():
    base = ScenarioConfig()
    sid = scenario_id(base)
    assert len(sid) == 12 and all(c in "0123456789abcdef" for c in sid)
    # run bookkeeping does not change the id
    assert scenario_id(ScenarioConfig(mode="laguerre")) == sid
    assert scenario_id(ScenarioConfig(output_dir="x")) == sid
    # physics does
    assert scenario_id(ScenarioConfig(mu1=31.0)) != sid
    assert scenario_id(ScenarioConfig(alphas=(np.pi,))) != sid


def test_run_scenario_artifacts(tmp_path):
    """Full sweep on a coarse grid: both modes converge, every artifact
    lands on disk, and the manifest describes all of it."""
    cfg = quick_config(tmp_path / "out")
    man = run_scenario(cfg)
    assert man.scenario_id == scenario_id(cfg)
    seen = {(e["alpha_token"], e["mode"]) for e in man.entries}
    assert seen == {("2.0000pi", "unpreconditioned"),
                    ("2.0000pi", "laguerre"),
                    ("0.0500pi", "unpreconditioned"),
                    ("0.0500pi", "laguerre")}
    out = tmp_path / "out"
    for e in man.entries:
        assert e["error"] is None
        assert e["converged"]
        hist = read_residual_csv(out / e["residual_csv"])
        assert hist[0] == 1.0
        assert len(hist) == e["iterations"] + 1
        assert hist[-1] == e["final_residual"]
        if e["mode"] == "laguerre":
            assert e["final_residual"] <= cfg.tol_laguerre
            assert e["iterations"] <= 40
            assert e["m_star"] and all(m >= 1 for m in e["m_star"])
            assert (out / e["diagnostics_csv"]).exists()
        else:
            assert e["final_residual"] <= cfg.tol_unpreconditioned
            assert 50 <= e["iterations"] <= 300
        pixels = read_field_pgm(out / e["field_pgm"])
        assert pixels.shape == (24, 24)
        assert pixels.max() == 255 and pixels.min() >= 0
    stored = json.loads((out / "manifest.json").read_text())
    assert stored["scenario_id"] == man.scenario_id
    assert stored["entries"] == man.entries
    assert stored["config"]["alphas"] == list(cfg.alphas)


def test_run_scenario_is_deterministic(tmp_path):
    """Identical config -> identical artifact bytes (modulo wall times,
    which only live in the manifest)."""
    cfg_a = quick_config(tmp_path / "a", alphas=(2 * np.pi,))
    cfg_b = quick_config(tmp_path / "b", alphas=(2 * np.pi,))
    run_scenario(cfg_a)
    run_scenario(cfg_b)
    names = ["residual_unpreconditioned_2.0000pi.csv",
             "residual_laguerre_2.0000pi.csv",
             "diagnostics_laguerre_2.0000pi.csv",
             "field_magnitude_2.0000pi.pgm"]
    for name in names:
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes()), name


def test_run_scenario_records_errors_per_alpha(tmp_path):
    # a one-iteration inner cap starves the preconditioner; the sweep must
    # log that per entry and keep going rather than raise
    cfg = quick_config(tmp_path / "out", inner_method="sgs_pcg",
                       inner_max_it=1)
    man = run_scenario(cfg)
    by_mode = {}
    for e in man.entries:
        by_mode.setdefault(e["mode"], []).append(e)
    assert len(by_mode["laguerre"]) == 2
    for e in by_mode["laguerre"]:
        assert "inner solve failed" in e["error"]
    for e in by_mode["unpreconditioned"]:
        assert e["error"] is None and e["converged"]
    assert (tmp_path / "out" / "manifest.json").exists()
    # the unpreconditioned solution still yields a raster
    assert (tmp_path / "out" / "field_magnitude_2.0000pi.pgm").exists()


def test_pgm_roundtrip_and_scaling(tmp_path):
    rng = np.random.default_rng(5)
    mag = rng.random((7, 9))
    path = tmp_path / "f.pgm"
    write_field_pgm(path, mag)
    scale = np.percentile(mag, 99.5)
    expected = np.minimum(np.round(255 * mag / scale), 255).astype(int)
    assert np.array_equal(read_field_pgm(path), expected)

    write_field_pgm(path, np.zeros((4, 6)))
    assert np.array_equal(read_field_pgm(path), np.zeros((4, 6), dtype=int))

    # a lone spike is clipped instead of flattening the rest of the image
    two_level = np.ones((40, 25))
    two_level[:, 12:] = 2.0
    two_level[0, 0] = 1e6
    write_field_pgm(path, two_level)
    pixels = read_field_pgm(path)
    assert pixels[0, 0] == 255
    assert set(pixels[:, :12].ravel()) <= {128, 255}
    assert np.all(pixels[1:, 12:] == 255)

    with pytest.raises(ValueError):
        write_field_pgm(path, -np.ones((3, 3)))
    with pytest.raises(ValueError):
        write_field_pgm(path, np.ones(9))
    path.write_text("P5\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(ValueError, match="not an ASCII PGM"):
        read_field_pgm(path)
    path.write_text("P2\n2 2\n255\n0 0 0\n")
    with pytest.raises(ValueError, match="pixel count"):
        read_field_pgm(path)


def test_oracle_matches_dense_direct(tmp_path):
    cfg = quick_config(tmp_path / "out")
    err = compare_with_direct(cfg, 16, workdir=str(tmp_path / "oracle"))
    assert err < 1e-6
    assert (tmp_path / "oracle" / "oracle_matrix.txt").exists()


def test_oracle_rejects_large_grids(tmp_path):
    cfg = quick_config(tmp_path / "out")
    with pytest.raises(ValueError, match="> 5000"):
        compare_with_direct(cfg, 64, workdir=str(tmp_path / "oracle"))


def test_oracle_flags_singular_matrix(tmp_path, monkeypatch):
    cfg = quick_config(tmp_path / "out")

    def refuse(a, b):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(np.linalg, "solve", refuse)
    with pytest.raises(ValueError, match="singular system matrix"):
        compare_with_direct(cfg, 12, workdir=str(tmp_path / "oracle"))


def test_direct_solve_zero_rhs_is_zero():
    cfg = quick_config("unused")
    mesh = build_mesh(12, 12, 2.0, 2.0, cfg.geometry(cfg.alphas[0]))
    ops = assemble_operators(mesh, cfg.medium(), cfg.laguerre_config())
    x = np.linalg.solve(ops.A.toarray(), np.zeros(ops.A.shape[0], complex))
    assert np.all(x == 0)


def _magnitude_raster(n):
    cfg = ScenarioConfig(nx=n, ny=n)
    mesh = build_mesh(n, n, cfg.width / n, cfg.height / n,
                      cfg.geometry(cfg.alphas[0]))
    ops = assemble_operators(mesh, cfg.medium(), cfg.laguerre_config())
    b, _ = _source_vector(mesh, cfg)
    x = spla.splu(ops.A.tocsc()).solve(b)
    from lagmaxwell.experiments import field_magnitude_cells
    return field_magnitude_cells(mesh, _expand_full(mesh, x))


def test_direct_solutions_converge_under_refinement():
    """Normalized |E| rasters at n and 2n move closer as n doubles (the
    point-source amplitude is mesh-dependent, so shapes are compared)."""
    rasters = {n: _magnitude_raster(n) for n in (12, 24, 48)}

    def coarsen(m):
        return 0.25 * (m[0::2, 0::2] + m[1::2, 0::2]
                       + m[0::2, 1::2] + m[1::2, 1::2])

    def dist(coarse, fine):
        a = coarse / np.linalg.norm(coarse)
        b = coarsen(fine)
        return np.linalg.norm(a - b / np.linalg.norm(b))

    d_coarse = dist(rasters[12], rasters[24])
    d_fine = dist(rasters[24], rasters[48])
    # measured 0.556 vs 0.169
    assert d_fine < 0.6 * d_coarse


def _write_cfg(tmp_path, **kw):
    path = tmp_path / "scenario.cfg"
    save_config(quick_config(tmp_path / "cfg_out", **kw), path)
    return str(path)


def test_cli_solve_runs_sweep(tmp_path, capsys):
    path = _write_cfg(tmp_path, alphas=(0.05 * np.pi,))
    out = tmp_path / "runs"
    assert cli.main(["solve", "--config", path, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "converged" in printed
    assert (out / "manifest.json").exists()


def test_cli_solve_overrides_alpha_and_mode(tmp_path):
    path = _write_cfg(tmp_path)
    out = tmp_path / "runs"
    rc = cli.main(["solve", "--config", path, "--alpha", str(np.pi),
                   "--mode", "laguerre", "--out", str(out)])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert [e["mode"] for e in man["entries"]] == ["laguerre"]
    assert man["entries"][0]["alpha_token"] == "1.0000pi"


def test_cli_exit_codes_on_bad_input(tmp_path, capsys):
    assert cli.main(["solve", "--config", "/no/such/file.cfg"]) == 1
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.cfg"
    bad.write_text("[geometry]\nnz = 9\n")
    assert cli.main(["solve", "--config", str(bad)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_cli_oracle_reports_error_norm(tmp_path, capsys):
    path = _write_cfg(tmp_path)
    rc = cli.main(["oracle", "--config", path, "--grid", "16",
                   "--out", str(tmp_path / "oracle")])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "relative error" in printed
    assert float(printed.rsplit("=", 1)[1]) < 1e-6


def test_cli_testbed_subcommand(tmp_path, capsys):
    path = _write_cfg(tmp_path, nx=16, ny=16, m_max=150)
    out = tmp_path / "tb"
    rc = cli.main(["testbed", "--config", path, "--out", str(out)])
    assert rc == 0
    assert "relative error" in capsys.readouterr().out
    assert (out / "testbed_march.csv").exists()
    assert (out / "testbed_direct.csv").exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["entries"][0]["mode"] == "scalar_testbed"
