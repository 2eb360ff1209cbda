import os

import numpy as np
import pytest

from randhelm import (
    DGFunction,
    DGSpace,
    NoiseSpec,
    PenaltySet,
    RunConfig,
    SourceSpec,
    StudySpec,
    build_uniform_mesh,
    export_cross_section,
    export_field,
    run_full,
    run_m_scaling,
    run_manufactured_convergence,
    solve_deterministic,
)
from randhelm.studies import config_from_dict, config_to_dict, parse_config, write_config


def test_config_round_trip(tmp_path):
    cfg = RunConfig(
        k=7.25, epsilon=1.0 / 3.0, num_modes=4, num_samples=33, mesh_n=12,
        penalties=PenaltySet(gamma0=9.5, gamma_higher=(0.2,), beta1=0.05),
        noise=NoiseSpec(low=-0.75, high=0.5, seed=99),
        source=SourceSpec(kind="radial_wave"),
        c0_hint=2.0,
    )
    path = os.path.join(tmp_path, "config.txt")
    write_config(config_to_dict(cfg), path)
    back = config_from_dict(parse_config(path))
    # 17 significant digits round-trip doubles exactly.
    assert back == cfg


def test_parse_config_comments_and_errors(tmp_path):
    path = os.path.join(tmp_path, "c.txt")
    with open(path, "w") as fh:
        fh.write("# a comment\nk=5.0  # trailing\n\nM=10\n")
    d = parse_config(path)
    assert d == {"k": "5.0", "M": "10"}
    with open(path, "w") as fh:
        fh.write("not a key value line\n")
    with pytest.raises(ValueError):
        parse_config(path)


def test_study_spec_validation():
    base = RunConfig()
    with pytest.raises(ValueError):
        StudySpec(kind="unknown", base=base)
    with pytest.raises(ValueError):
        StudySpec(kind="m_scaling", base=base, m_values=(100, 25))


def test_study_spec_from_dict():
    d = {"study": "compare", "k": "5", "eps_values": "0.1,0.5", "N_values": "1,3"}
    spec = StudySpec.from_dict(d)
    assert spec.kind == "compare"
    assert spec.eps_values == (0.1, 0.5)
    assert spec.n_values == (1, 3)


def test_solve_deterministic_finite():
    u = solve_deterministic(RunConfig(k=5.0, mesh_n=10))
    assert np.all(np.isfinite(u.coefficients))
    assert np.abs(u.coefficients).max() > 0.0


def test_manufactured_convergence_rates():
    spec = StudySpec(
        kind="manufactured_convergence",
        base=RunConfig(k=2.0, mesh_n=4),
        mesh_sizes=(4, 8, 16),
    )
    rows = run_manufactured_convergence(spec)
    assert np.isnan(rows[0]["rate_l2"])
    assert 1.5 < rows[-1]["rate_l2"] < 2.5
    assert 0.5 < rows[-1]["rate_h1"] < 1.5
    errs = [r["err_l2"] for r in rows]
    assert errs[0] > errs[1] > errs[2]


def test_m_scaling_requires_larger_reference():
    base = RunConfig(k=5.0, mesh_n=4, source=SourceSpec(kind="radial_wave"))
    with pytest.raises(ValueError):
        run_m_scaling(StudySpec(kind="m_scaling", base=base, m_values=(16, 64), m_ref=32))
    out = run_m_scaling(StudySpec(kind="m_scaling", base=base, m_values=(8, 32), m_ref=256))
    assert len(out["rows"]) == 2
    assert out["rows"][0]["err_l2"] > out["rows"][1]["err_l2"]


def test_export_cross_section(tmp_path):
    space = DGSpace(build_uniform_mesh(4), 1)
    f = DGFunction(space, np.full(space.ndof, 1.0 + 2.0j))
    path = os.path.join(tmp_path, "diag.csv")
    rows = export_cross_section(f, samples=11, path=path)
    assert len(rows) == 11
    assert rows[0][1:3] == (-0.5, -0.5)
    assert rows[-1][1:3] == (0.5, 0.5)
    for row in rows:
        assert row[3] == pytest.approx(1.0, abs=1e-12)
        assert row[4] == pytest.approx(2.0, abs=1e-12)
    with open(path) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "t,x,y,re,im,abs"
    assert len(lines) == 12
    with pytest.raises(ValueError):
        export_cross_section(f, samples=1)


def test_export_field(tmp_path):
    mesh = build_uniform_mesh(3)
    space = DGSpace(mesh, 1)
    f = DGFunction(space, np.ones(space.ndof))
    path = os.path.join(tmp_path, "field.csv")
    export_field(f, path)
    with open(path) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "x,y,element,re,im,abs"
    assert len(lines) == 1 + 3 * mesh.n_elements


def test_run_full_plain_config(tmp_path):
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=2, num_samples=4, mesh_n=6)
    out = os.path.join(tmp_path, "run")
    written = run_full(cfg, out)
    for rel in (
        "config.txt",
        "report.txt",
        os.path.join("fields", "psi.csv"),
        os.path.join("fields", "sample.csv"),
        os.path.join("sections", "psi_diagonal.csv"),
        os.path.join("tables", "modes.csv"),
    ):
        assert os.path.exists(os.path.join(out, rel))
    assert all(os.path.exists(p) for p in written)


def test_run_full_tables_thread_invariant(tmp_path):
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=2, num_samples=40, mesh_n=6)
    out1 = os.path.join(tmp_path, "t1")
    out2 = os.path.join(tmp_path, "t2")
    run_full(cfg, out1, threads=1)
    run_full(cfg, out2, threads=2)
    for rel in (
        "config.txt",
        os.path.join("tables", "modes.csv"),
        os.path.join("fields", "psi.csv"),
        os.path.join("sections", "psi_diagonal.csv"),
    ):
        with open(os.path.join(out1, rel), "rb") as fh:
            a = fh.read()
        with open(os.path.join(out2, rel), "rb") as fh:
            b = fh.read()
        assert a == b, f"{rel} differs between thread counts"


def test_run_full_study_kinds(tmp_path):
    base = RunConfig(k=3.0, epsilon=0.1, num_modes=2, num_samples=4, mesh_n=4)
    conv = StudySpec(kind="manufactured_convergence", base=base, mesh_sizes=(4, 8))
    run_full(conv, os.path.join(tmp_path, "conv"))
    assert os.path.exists(os.path.join(tmp_path, "conv", "tables", "convergence.csv"))

    sweep = StudySpec(kind="modes_sweep", base=base, n_values=(1, 2))
    run_full(sweep, os.path.join(tmp_path, "sweep"))
    with open(os.path.join(tmp_path, "sweep", "tables", "modes_sweep.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "N,abs_l2,rel_l2"
    assert len(lines) == 3

    comp = StudySpec(kind="compare", base=base, eps_values=(0.05, 0.1))
    run_full(comp, os.path.join(tmp_path, "comp"))
    with open(os.path.join(tmp_path, "comp", "tables", "compare.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "epsilon,N,abs_l2,rel_l2"
    assert len(lines) == 3
