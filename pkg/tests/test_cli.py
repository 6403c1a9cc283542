import json

import numpy as np
import pytest

from wavectf.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from wavectf.io import read_matrix, write_csv, write_matrix
from wavectf.splits import Bundle, desk_config


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--preset", "swell-small", "--out", str(root / "ref"), "--seed", "0",
                 "--public", str(root / "pub")]) == EXIT_OK
    return root


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_is_byte_identical(generated, tmp_path):
    assert main(["gen", "--preset", "swell-small", "--out", str(tmp_path / "again"), "--seed", "0"]) == 0
    for path in sorted((generated / "ref").iterdir()):
        assert (tmp_path / "again" / path.name).read_bytes() == path.read_bytes(), path.name
    assert not Bundle.load(generated / "pub").has_tests


@pytest.mark.parametrize("method", ["zeros", "dmd"])
def test_baseline_is_byte_identical(generated, tmp_path, method):
    outs = []
    for run in range(2):
        out = tmp_path / f"{method}{run}"
        assert main(["baseline", "--method", method, "--bundle", str(generated / "pub"), "--out", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1] and len(outs[0]) == 10


def test_zeros_scores_zero_and_board_renders(generated, tmp_path, capsys):
    sub = tmp_path / "zeros"
    ledger = tmp_path / "ledger.jsonl"
    main(["baseline", "--method", "zeros", "--bundle", str(generated / "pub"), "--out", str(sub)])
    capsys.readouterr()
    code, out, _ = _run(capsys, ["score", "--bundle", str(generated / "ref"), "--manifest",
                                 str(sub / "manifest.json"), "--ledger", str(ledger), "--json"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["report"]["composite"] == pytest.approx(0.0, abs=1e-12)
    code, out, _ = _run(capsys, ["board", "--ledger", str(ledger), "--dataset", "swell-small"])
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("Model") and "zeros" in out
    code, out, _ = _run(capsys, ["board", "--ledger", str(ledger), "--dataset", "swell-small", "--json"])
    assert json.loads(out)["rows"][0]["Model"] == "zeros"


def test_json_output_is_one_document(generated, tmp_path, capsys):
    code, out, _ = _run(capsys, ["baseline", "--method", "average", "--bundle", str(generated / "pub"),
                                 "--out", str(tmp_path / "avg"), "--json"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["method"] == "average" and len(doc["written"]) == 9


def test_public_bundle_cannot_be_scored(generated, tmp_path, capsys):
    sub = tmp_path / "zeros"
    main(["baseline", "--method", "zeros", "--bundle", str(generated / "pub"), "--out", str(sub)])
    code, _, err = _run(capsys, ["score", "--bundle", str(generated / "pub"), "--manifest",
                                 str(sub / "manifest.json")])
    assert code == EXIT_RUNTIME and "referee bundle required" in err


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["gen", "--preset", "nope", "--out", "x"],
                                  ["tune", "--method", "dmd", "--task", "E1"],
                                  ["board", "--ledger", "l", "--dataset", "d", "--view", "worst"],
                                  ["gen", "--preset", "swell-small", "--out", "x", "--workers", "0"]])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_runtime_errors_exit_two(generated, tmp_path, capsys):
    code, _, err = _run(capsys, ["baseline", "--method", "nonesuch", "--bundle", str(generated / "pub"),
                                 "--out", str(tmp_path / "o")])
    assert code == EXIT_RUNTIME and "unknown method" in err
    code, _, _ = _run(capsys, ["score", "--bundle", str(generated / "ref"), "--manifest",
                               str(tmp_path / "missing.json")])
    assert code == EXIT_RUNTIME


def test_bundle_falls_back_to_env(generated, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CTF_DATA_DIR", str(generated / "pub"))
    assert main(["baseline", "--method", "zeros", "--out", str(tmp_path / "z")]) == EXIT_OK
    monkeypatch.setenv("CTF_DATA_DIR", str(generated))
    assert main(["baseline", "--method", "zeros", "--bundle", "pub", "--out", str(tmp_path / "z2")]) == EXIT_OK
    monkeypatch.delenv("CTF_DATA_DIR")
    assert main(["baseline", "--method", "zeros", "--out", str(tmp_path / "z3")]) == EXIT_USAGE


def test_tune_is_byte_identical(generated, tmp_path, capsys):
    runs = []
    for run in range(2):
        out = tmp_path / f"t{run}"
        code = main(["tune", "--method", "hodmd", "--bundle", str(generated / "pub"), "--task", "E1",
                     "--trials", "4", "--rungs", "2", "--seed", "7", "--out", str(out)])
        assert code == EXIT_OK
        runs.append(((out / "trials.jsonl").read_bytes(), (out / "best.json").read_bytes()))
        assert (out / "timings.jsonl").exists()
    assert runs[0] == runs[1]
    trials = [json.loads(line) for line in runs[0][0].decode().splitlines()]
    assert len(trials) == 4 and all("seconds" not in t for t in trials)


def test_tune_with_custom_space(generated, tmp_path):
    space = tmp_path / "space.yaml"
    space.write_text("rank:\n  type: randint\n  min: 1\n  max: 4\n")
    assert main(["tune", "--method", "dmd", "--bundle", str(generated / "pub"), "--task", "E9",
                 "--space", str(space), "--trials", "3", "--out", str(tmp_path / "t")]) == EXIT_OK
    best = json.loads((tmp_path / "t" / "best.json").read_text())
    assert 1 <= best["best_params"]["rank"] <= 3


def test_baseline_config_overrides(generated, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("params:\n  rank: 2\ntasks:\n  X1pred:\n    rank: 1\n")
    assert main(["baseline", "--method", "dmd", "--bundle", str(generated / "pub"), "--out", str(tmp_path / "o"),
                 "--config", str(cfg)]) == EXIT_OK


@pytest.mark.parametrize("fmt", ["ctfw", "csv"])
def test_split_from_sources(tmp_path, rng, fmt):
    cfg = desk_config("mine", n=210, m=16, M=16)
    (tmp_path / "cfg.json").write_text(cfg.to_json())
    writer = write_matrix if fmt == "ctfw" else write_csv
    paths = []
    for i in range(6):
        path = tmp_path / f"traj{i}.{fmt}"
        writer(rng.standard_normal((96, 210)), path)
        paths.append(str(path))
    argv = ["split", "--source", paths[0], "--family", *paths[1:], "--config", str(tmp_path / "cfg.json"),
            "--out", str(tmp_path / "b"), "--public", str(tmp_path / "p")]
    assert main(argv) == EXIT_OK
    bundle = Bundle.load(tmp_path / "b")
    source = read_matrix(paths[0]) if fmt == "ctfw" else np.loadtxt(paths[0], delimiter=",", ndmin=2)
    np.testing.assert_allclose(bundle.train("X1train"), source[:64], rtol=0, atol=0 if fmt == "ctfw" else 1e-15)
    assert main(argv[:-4] + ["--out", str(tmp_path / "b2"), "--seed", "3"]) == EXIT_OK
    assert not np.array_equal(Bundle.load(tmp_path / "b2").train("X2train"), bundle.train("X2train"))


def test_split_rejects_unknown_config(tmp_path):
    path = tmp_path / "s.ctfw"
    write_matrix(np.ones((4, 4)), path)
    assert main(["split", "--source", str(path), "--family", *[str(path)] * 5, "--config", "nope",
                 "--out", str(tmp_path / "o")]) == EXIT_USAGE
