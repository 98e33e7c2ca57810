import json

import numpy as np
import pytest

from bid.bitdata import distance_histogram, pack_bits
from bid.cli import main
from bid.io import read_bidb, read_histogram, sha256_file, write_bidb, write_bidf
from bid.manifest import read_manifest


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(0)
    x = (rng.random((300, 120)) < 0.3).astype(np.uint8)
    path = tmp_path / "data.bidb"
    write_bidb(path, pack_bits(x))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_histogram_and_fit(tmp_path, dataset, capsys):
    hist = tmp_path / "h.json"
    assert run("histogram", dataset, "--out", hist) == 0
    h = read_histogram(hist)
    assert h == distance_histogram(read_bidb(dataset))
    out = tmp_path / "fit.json"
    assert run("fit", hist, "--out", out) == 0
    fit = json.loads(out.read_text())
    assert fit["n_bits"] == 120 and fit["n_samples"] == 300
    assert fit["manifest"] == "fit.json.manifest.json"
    m = read_manifest(tmp_path / "fit.json.manifest.json")
    assert m["outputs"][str(out)] == sha256_file(out)
    assert str(hist) in m["inputs"]
    assert "d0=" in capsys.readouterr().out


def test_fit_is_byte_identical_on_rerun(tmp_path, dataset):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("fit", dataset, "--out", a) == 0
    assert run("fit", dataset, "--out", b) == 0
    ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
    ja.pop("manifest"), jb.pop("manifest")
    assert ja == jb
    before = a.read_bytes()
    assert run("fit", dataset, "--out", a) == 0
    assert a.read_bytes() == before


def test_fit_with_mcmc(tmp_path, dataset):
    out, chain = tmp_path / "fit.json", tmp_path / "chain.csv"
    assert run("fit", dataset, "--out", out, "--mcmc", "--steps", 3000, "--burn-in", 500,
               "--seed", 4, "--chain-csv", chain, "--thin", 10) == 0
    post = json.loads(out.read_text())["posterior"]
    assert post["n"] == 2500 and post["hastings"] is True
    assert len(chain.read_text().splitlines()) == 251
    assert run("fit", dataset, "--out", tmp_path / "p.json", "--mcmc", "--steps", 3000,
               "--burn-in", 500, "--seed", 4, "--paper-exact") == 0
    assert json.loads((tmp_path / "p.json").read_text())["posterior"]["hastings"] is False


def test_fit_r_star_options(tmp_path, dataset):
    for spec in ("45", "median", "q0.3"):
        out = tmp_path / f"fit_{spec}.json"
        assert run("fit", dataset, "--out", out, "--r-star", spec) == 0
    assert json.loads((tmp_path / "fit_45.json").read_text())["r_star"] == 45
    # a domain below every observed distance holds no information
    assert run("fit", dataset, "--out", tmp_path / "empty.json", "--r-star", "3") == 3


def test_bad_magic_exit_2_no_output(tmp_path, capsys):
    bad = tmp_path / "bad.bidb"
    bad.write_bytes(b"NOPE" + bytes(40))
    out = tmp_path / "h.json"
    assert run("histogram", bad, "--out", out) == 2
    assert not out.exists()
    assert not (tmp_path / "h.json.manifest.json").exists()
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("bid: error: format:")


def test_truncated_file_exit_2(tmp_path, dataset):
    cut = tmp_path / "cut.bidb"
    cut.write_bytes(dataset.read_bytes()[:-3])
    assert run("histogram", cut, "--out", tmp_path / "h.json") == 2
    assert run("fit", cut, "--out", tmp_path / "f.json") == 2
    assert not (tmp_path / "f.json").exists()


def test_missing_file_exit_2(tmp_path):
    assert run("fit", tmp_path / "nope.json", "--out", tmp_path / "f.json") == 2


def test_degenerate_input_exit_3(tmp_path, capsys):
    same = tmp_path / "same.bidb"
    write_bidb(same, pack_bits(np.ones((5, 10), dtype=np.uint8)))
    out = tmp_path / "f.json"
    assert run("fit", same, "--out", out) == 3
    assert not out.exists()
    assert "underdetermined" in capsys.readouterr().err


def test_sample_manifest_reproduces_output(tmp_path):
    out = tmp_path / "s.bidb"
    argv = ["sample", "ising-square", "--L", "8", "--T", "2.5", "--n-samples", "30",
            "--seed", "3", "--burn-in", "50", "--out", str(out)]
    assert main(argv) == 0
    m = read_manifest(f"{out}.manifest.json")
    assert m["seed"] == 3 and m["config"]["resolved_burn_in"] == 50
    digest = m["outputs"][str(out)]
    out.unlink()
    assert main(m["command"][1:]) == 0
    assert sha256_file(out) == digest


def test_sample_requires_seed(tmp_path):
    with pytest.raises(SystemExit):
        main(["sample", "ising-square", "--L", "4", "--T", "2", "--out", str(tmp_path / "x")])


def test_sample_energy_trace(tmp_path):
    out, trace = tmp_path / "s.bidb", tmp_path / "e.csv"
    assert run("sample", "potts", "--L", 6, "--T", 0.9, "--q", 4, "--n-samples", 3, "--seed", 1,
               "--burn-in", 20, "--trace-every", 5, "--energy-trace", trace, "--out", out) == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "block,chain,sweep,energy"
    assert len(lines) == 1 + 3 * 4
    assert read_bidb(out).n_bits == 6 * 6 * 2


def test_sample_histogram_fit_equals_sweep_cell(tmp_path):
    common = ["--seed", "5", "--n-samples", "60", "--burn-in", "30"]
    data, hist, fit = tmp_path / "d.bidb", tmp_path / "h.json", tmp_path / "f.json"
    assert main(["sample", "chain-blocks", "--L", "300", "--T", "2", "--blocks", "2",
                 *common, "--out", str(data)]) == 0
    assert main(["histogram", str(data), "--out", str(hist)]) == 0
    assert main(["fit", str(hist), "--out", str(fit)]) == 0
    sweep = tmp_path / "sweep.csv"
    assert main(["sweep", "chain-blocks", "--L-list", "300", "--T-list", "2", "--blocks", "2",
                 *common, "--out", str(sweep)]) == 0
    header, row = sweep.read_text().splitlines()
    cell = dict(zip(header.split(","), row.split(",")))
    f = json.loads(fit.read_text())
    assert cell["status"] == "ok"
    assert float(cell["bid"]) == f["d0"]
    assert float(cell["d1"]) == f["d1"]
    assert int(cell["n_bits"]) == 600


def test_sweep_records_failed_cells(tmp_path):
    out = tmp_path / "s.csv"
    code = run("sweep", "ising-square", "--L-list", "4,1", "--T-list", "3", "--seed", 1,
               "--n-samples", 20, "--burn-in", 10, "--out", out)
    assert code == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 2
    assert rows[0].endswith(",ok") and "error" in rows[1]


def test_binarize_sign(tmp_path):
    m = np.array([[-1.0, 0.0, 2.0], [3.0, -0.5, 0.1]])
    src, out = tmp_path / "m.bidf", tmp_path / "b.bidb"
    write_bidf(src, m)
    assert run("binarize", src, "--mode", "sign", "--out", out) == 0
    assert read_bidb(out).unpack().tolist() == [[0, 0, 1], [1, 0, 1]]


def test_binarize_2bit_csv(tmp_path):
    src, out = tmp_path / "m.csv", tmp_path / "b.bidb"
    src.write_text("-2,-0.5\n0.5,2\n")
    assert run("binarize", src, "--mode", "2bit", "--sigma", 1, "--out", out) == 0
    assert read_bidb(out).unpack().tolist() == [[0, 0, 0, 1], [1, 0, 1, 1]]
    m = read_manifest(f"{out}.manifest.json")
    assert m["config"]["thresholds"] == [-1.0, 0.0, 1.0]


def test_binarize_zero_sigma_exit_3(tmp_path):
    src = tmp_path / "m.csv"
    src.write_text("1,1\n1,1\n")
    assert run("binarize", src, "--mode", "2bit", "--out", tmp_path / "b.bidb") == 3


def test_mle_csv(tmp_path, dataset):
    out = tmp_path / "mle.csv"
    assert run("mle", dataset, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r,r_over_N,d_hat,d_hat_over_N,n_A,n_B"
    r = [int(l.split(",")[0]) for l in lines[1:]]
    assert r == sorted(r) and len(r) > 10
