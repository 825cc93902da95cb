import csv
import math

import pytest

from framepot import analysis, estimator
from framepot.circuit import EnsembleSpec, Family, from_text
from framepot.cli import EXIT_IO, EXIT_MEMORY, EXIT_OK, main
from framepot.estimator import save_store


def run(*argv):
    return main(list(argv))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sample_args(out, n=2, l=1, seed=3, count=400):
    return [
        "sample", "--family", "parallel", "--n", str(n), "--l", str(l),
        "--seed", str(seed), "--min-samples", str(count),
        "--max-samples", str(count), "--out-dir", str(out),
    ]


def test_sample_writes_store_and_manifest(tmp_path):
    assert run(*sample_args(tmp_path)) == EXIT_OK
    store_path = tmp_path / "traces_parallel_n2_l1.csv"
    assert store_path.exists()
    store = estimator.load_store(store_path)
    assert len(store) == 400
    manifest = (tmp_path / "traces_parallel_n2_l1.csv.manifest").read_text()
    assert "seed=3" in manifest and "subcommand=sample" in manifest
    assert "framepot_version=" in manifest and "numpy_version=" in manifest


def test_sample_requires_seed(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run("sample", "--family", "parallel", "--n", "2", "--l", "1",
            "--out-dir", str(tmp_path))


def test_sample_reproducible_from_manifest_as_config(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert run(*sample_args(out_a)) == EXIT_OK
    manifest = out_a / "traces_parallel_n2_l1.csv.manifest"
    assert run("sample", "--config", str(manifest), "--out-dir", str(out_b)) == EXIT_OK
    assert (out_a / "traces_parallel_n2_l1.csv").read_bytes() == \
           (out_b / "traces_parallel_n2_l1.csv").read_bytes()


def test_sample_worker_counts_agree(tmp_path):
    outs = []
    for i, workers in enumerate((1, 2)):
        out = tmp_path / str(i)
        args = sample_args(out, n=3, l=2, count=60)
        assert run(*args, "--workers", str(workers)) == EXIT_OK
        outs.append((out / "traces_parallel_n3_l2.csv").read_bytes())
    assert outs[0] == outs[1]


def test_dump_circuit_round_trips(tmp_path):
    assert run(*sample_args(tmp_path, count=50), "--dump-circuit") == EXIT_OK
    text = (tmp_path / "trace_circuit_sample0.txt").read_text()
    tc = from_text(text)
    assert tc.n == 4  # 2 ancillas + 2 targets


def test_width_cap_exit_code(tmp_path):
    code = run("sample", "--family", "parallel", "--n", "6", "--l", "6",
               "--seed", "1", "--min-samples", "10", "--max-samples", "10",
               "--width-cap", "3", "--out-dir", str(tmp_path))
    assert code == EXIT_MEMORY


def test_estimate_reads_store_and_writes_rows(tmp_path):
    assert run(*sample_args(tmp_path)) == EXIT_OK
    store = str(tmp_path / "traces_parallel_n2_l1.csv")
    assert run("estimate", "--store", store, "--k", "1,2", "--seed", "8",
               "--out-dir", str(tmp_path)) == EXIT_OK
    rows = read_csv(tmp_path / "frame_potential.csv")
    assert [int(r["k"]) for r in rows] == [1, 2]
    est = estimator.frame_potential(estimator.load_store(store), 2)
    assert float(rows[1]["value"]) == est.value


def test_estimate_identical_after_reload(tmp_path):
    assert run(*sample_args(tmp_path)) == EXIT_OK
    store = str(tmp_path / "traces_parallel_n2_l1.csv")
    for sub in ("x", "y"):
        (tmp_path / sub).mkdir()
        assert run("estimate", "--store", store, "--k", "2", "--seed", "8",
                   "--out-dir", str(tmp_path / sub)) == EXIT_OK
    assert (tmp_path / "x" / "frame_potential.csv").read_bytes() == \
           (tmp_path / "y" / "frame_potential.csv").read_bytes()


def test_malformed_store_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# ensemble=parallel n=2 l=1 q=2 entangler=- haar=ginibre_qr "
                   "master_seed=1 version=1\nindex,seed,re,im\n0,1,zap,0\n")
    code = run("estimate", "--store", str(bad), "--seed", "1",
               "--out-dir", str(tmp_path))
    assert code == EXIT_IO
    assert ":3:" in capsys.readouterr().err


def _synthetic_store(tmp_path, l, deviation, k=2, n=2, count=60):
    spec = EnsembleSpec(Family.PARALLEL, n=n, l=l)
    store = estimator.TraceSampleStore(spec=spec, master_seed=0)
    magnitude = (math.factorial(k) + deviation) ** (1.0 / (2 * k))
    for i in range(count):
        store.append(estimator.TraceSample(i, estimator.sample_seed(0, i), magnitude))
    path = tmp_path / f"synth_l{l}.csv"
    save_store(store, path)
    return str(path)


def test_fit_and_scaling_pipeline(tmp_path):
    stores = [_synthetic_store(tmp_path, l, math.exp(-l)) for l in range(1, 6)]
    args = ["fit", "--k", "2", "--epsilon", "0.1", "--seed", "4",
            "--replicates", "40", "--out-dir", str(tmp_path)]
    for s in stores:
        args += ["--store", s]
    assert run(*args) == EXIT_OK
    rows = read_csv(tmp_path / "layers.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    expected = 2.0 * (2 * 2 * math.log(2) + math.log(10.0))
    assert float(rows[0]["layers_median"]) == pytest.approx(expected, abs=1e-9)

    # hand-written layers table exercises the scaling fit
    layers_csv = tmp_path / "layers_multi.csv"
    with layers_csv.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=analysis.LAYERS_FIELDS)
        writer.writeheader()
        for n in (4, 6, 8, 10):
            writer.writerow({
                "ensemble": "parallel", "n": n, "k": 2, "epsilon": 0.1,
                "layers_median": 4.0 * n + 1.0, "p05": 0, "p95": 0, "status": "ok",
            })
        writer.writerow({
            "ensemble": "parallel", "n": 12, "k": 2, "epsilon": 0.1,
            "layers_median": float("nan"), "p05": 0, "p95": 0, "status": "missing",
        })
    assert run("scaling", "--layers", str(layers_csv), "--out-dir", str(tmp_path)) == EXIT_OK
    rows = read_csv(tmp_path / "slopes.csv")
    assert len(rows) == 1
    assert float(rows[0]["slope"]) == pytest.approx(4.0, abs=1e-9)
    assert float(rows[0]["r2"]) == pytest.approx(1.0, abs=1e-12)


def test_scaling_uses_layers_per_qubit_for_local(tmp_path):
    layers_csv = tmp_path / "layers_local.csv"
    with layers_csv.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=analysis.LAYERS_FIELDS)
        writer.writeheader()
        for n in (4, 6, 8):
            writer.writerow({
                "ensemble": "local", "n": n, "k": 2, "epsilon": 0.1,
                "layers_median": n * (3.0 * n + 2.0),  # layers/n = 3n + 2
                "p05": 0, "p95": 0, "status": "ok",
            })
    assert run("scaling", "--layers", str(layers_csv), "--out-dir", str(tmp_path)) == EXIT_OK
    rows = read_csv(tmp_path / "slopes.csv")
    assert float(rows[0]["slope"]) == pytest.approx(3.0, abs=1e-9)


def test_theory_single_value(tmp_path, capsys):
    assert run("theory", "--k2", "--n", "4", "--l", "2") == EXIT_OK
    assert capsys.readouterr().out.strip() == "3.28"


def test_theory_range_csv(tmp_path):
    assert run("theory", "--k2", "--n-range", "4:6", "--l-range", "1:3",
               "--out-dir", str(tmp_path)) == EXIT_OK
    rows = read_csv(tmp_path / "theory.csv")
    assert len(rows) == 9
    got = {(int(r["n"]), int(r["l"])): float(r["bound"]) for r in rows}
    assert got[(4, 2)] == pytest.approx(3.28, abs=1e-12)
    assert got[(4, 1)] == pytest.approx(analysis.theory_bound_k2(4, 1))


def test_diagnose(tmp_path):
    path = _synthetic_store(tmp_path, 2, 1.0, count=9)
    assert run("diagnose", "--store", path, "--k", "2", "--parts", "3",
               "--out-dir", str(tmp_path)) == EXIT_OK
    rows = read_csv(tmp_path / "partitions.csv")
    assert len(rows) == 3
    assert {int(r["samples"]) for r in rows} == {3}
    values = {float(r["value"]) for r in rows}
    assert len(values) == 1  # constant store: all partitions identical


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "family=parallel\nn=2\nl=1\nseed=3\nmin_samples=100\nmax_samples=100\n"
    )
    out = tmp_path / "out"
    assert run("sample", "--config", str(cfg), "--out-dir", str(out),
               "--max-samples", "150", "--min-samples", "150") == EXIT_OK
    store = estimator.load_store(out / "traces_parallel_n2_l1.csv")
    assert len(store) == 150  # flags beat config


def test_out_dir_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("FRAMEPOT_OUT_DIR", str(tmp_path / "envout"))
    assert run(*sample_args(tmp_path, count=50)[:-2]) == EXIT_OK  # drop --out-dir
    assert (tmp_path / "envout" / "traces_parallel_n2_l1.csv").exists()


def test_validate_passes_on_fresh_checkout(tmp_path, capsys):
    code = run("validate", "--seed", "0", "--samples", "20000",
               "--out-dir", str(tmp_path))
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    assert "FAIL" not in out
    assert "PASS oracle-amplitude" in out
    assert "PASS trace-identity" in out
    assert "INFO phase-mode-report" in out
    assert (tmp_path / "manifest_validate.txt").exists()
