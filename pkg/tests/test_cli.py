"""End-to-end CLI behavior, exercised in process through main()."""

import json

import numpy as np
import pytest

import pbcount as pc
from pbcount import cli

TWO_BLOB_BINNED = [0.10779999999999998, 0.49439999999999995, 0.39780000000000004,
                   0.0, 0.0]


@pytest.fixture
def two_blob_file(tmp_path, two_blob):
    path = tmp_path / "two_blob.npy"
    pc.save_volume(two_blob, path)
    return path


@pytest.fixture
def zeros_file(tmp_path):
    path = tmp_path / "zeros.npy"
    pc.save_volume(pc.ProbabilityVolume(np.zeros((4, 6, 6))), path)
    return path


def _run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _run_json(capsys, argv):
    code, out, err = _run(capsys, argv)
    assert code == 0, err
    return json.loads(out)


def test_count_reports_the_exact_distribution(capsys, two_blob_file):
    payload = _run_json(capsys, ["count", str(two_blob_file)])
    assert payload["K"] == 2
    assert payload["pmf"] == pytest.approx(TWO_BLOB_BINNED[:3], abs=1e-12)
    assert payload["binned"] == pytest.approx(TWO_BLOB_BINNED, abs=1e-12)
    assert payload["argmax_count"] == 1
    argmaxes = sorted(r["argmax"] for r in payload["regions"])
    assert argmaxes == [[4, 4], [11, 11]]


def test_count_honors_custom_bins(capsys, two_blob_file):
    payload = _run_json(capsys, ["count", str(two_blob_file), "--bins", "3"])
    assert len(payload["binned"]) == 3
    assert sum(payload["binned"]) == pytest.approx(1.0, abs=1e-12)


def test_count_of_an_empty_volume(capsys, zeros_file):
    payload = _run_json(capsys, ["count", str(zeros_file)])
    assert payload["K"] == 0
    assert payload["pmf"] == [1.0]
    assert payload["argmax_count"] == 0
    assert payload["regions"] == []


def test_count_csv_emits_one_row_per_count(capsys, two_blob_file):
    code, out, err = _run(capsys, ["count", str(two_blob_file), "--format", "csv"])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "count,probability"
    assert len(lines) == 4  # header + counts 0..2


def test_missing_volume_is_an_input_error(capsys, tmp_path):
    code, out, err = _run(capsys, ["count", str(tmp_path / "nope.npy")])
    assert code == 2
    assert "UnreadableFile" in err
    assert out == ""


def test_out_of_range_values_are_an_input_error(capsys, tmp_path):
    path = tmp_path / "bad.npy"
    np.save(path, np.full((2, 2), 1.5))
    code, _, err = _run(capsys, ["count", str(path)])
    assert code == 2
    assert "ValueOutOfRange" in err


def test_bad_connectivity_is_rejected_by_the_parser(capsys, two_blob_file):
    code, _, _ = _run(capsys, ["count", str(two_blob_file), "--connectivity", "12"])
    assert code == 2


def test_cc_count_tracks_the_threshold(capsys, two_blob_file, zeros_file):
    for tau, expected in (("0.5", 2), ("0.6", 1), ("0.95", 0)):
        payload = _run_json(capsys, ["cc-count", str(two_blob_file), "--tau", tau])
        assert payload["count"] == expected
    assert _run_json(capsys, ["cc-count", str(zeros_file)])["count"] == 0


def _binary_corpus(tmp_path):
    records = []
    for k in range(4):
        data = np.zeros((4, 24, 24))
        for j in range(k):
            data[1:3, 6 * j + 1:6 * j + 3, 1:3] = 1.0
        path = tmp_path / f"bin{k}.npy"
        pc.save_volume(pc.ProbabilityVolume(data), path)
        records.append(pc.EvalRecord(volume_path=path, count_label=k))
    return pc.write_manifest(records, tmp_path / "manifest.jsonl")


def test_eval_is_perfect_on_binary_volumes(capsys, tmp_path):
    manifest = _binary_corpus(tmp_path)
    pb = _run_json(capsys, ["eval", str(manifest), "--tau", "0.5"])
    cc = _run_json(capsys, ["eval", str(manifest), "--tau", "0.5", "--method", "cc"])
    assert pb["accuracy"] == 1.0
    assert cc["accuracy"] == 1.0
    assert pb["confusion"] == cc["confusion"]
    assert pb["method"] == "pb" and cc["method"] == "cc"


def test_eval_of_an_empty_manifest_is_an_input_error(capsys, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    code, _, err = _run(capsys, ["eval", str(empty)])
    assert code == 2
    assert "EmptyInput" in err


def test_sweep_defaults_to_csv_and_can_plot(capsys, tmp_path):
    manifest = _binary_corpus(tmp_path)
    svg_path = tmp_path / "sweep.svg"
    code, out, err = _run(capsys, ["sweep", str(manifest), "--plot", str(svg_path)])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "method,tau,accuracy,macro_precision,macro_recall,macro_f1,n"
    assert len(lines) == 19  # header + 9 taus x 2 methods
    svg = svg_path.read_text(encoding="utf-8")
    assert svg.startswith("<svg")
    assert "polyline" in svg
    assert str(svg_path) in err


def test_sweep_json_format_is_available(capsys, tmp_path):
    manifest = _binary_corpus(tmp_path)
    rows = _run_json(capsys, ["sweep", str(manifest), "--taus", "0.3,0.7",
                              "--format", "json"])
    assert isinstance(rows, list) and len(rows) == 4
    assert all(row["accuracy"] == 1.0 for row in rows)


def test_calibrate_count_level_on_degenerate_predictions(capsys, tmp_path):
    manifest = _binary_corpus(tmp_path)
    payload = _run_json(capsys, ["calibrate", str(manifest), "--tau", "0.5"])
    assert payload["level"] == "count"
    assert payload["ece"] == 0.0
    assert payload["mce"] == 0.0


def test_calibrate_voxel_level(capsys, tmp_path):
    vol = np.full((2, 50), 0.9)
    mask = np.ones((2, 50), dtype=bool)
    vpath, mpath = tmp_path / "v.npy", tmp_path / "m.npy"
    pc.save_volume(pc.ProbabilityVolume(vol), vpath)
    pc.save_mask(pc.BinaryMask(mask), mpath)
    manifest = pc.write_manifest(
        [pc.EvalRecord(volume_path=vpath, count_label=0, mask_path=mpath)],
        tmp_path / "m.jsonl")
    payload = _run_json(capsys, ["calibrate", str(manifest), "--level", "voxel"])
    assert payload["level"] == "voxel"
    assert payload["ece"] == pytest.approx(0.1, abs=1e-12)


def test_grad_check_command_confirms_the_gradient(capsys, two_blob_file):
    payload = _run_json(capsys, ["grad-check", str(two_blob_file), "--count", "2"])
    assert payload["max_rel_err"] < 1e-8
    assert {row["region"] for row in payload["regions"]} == {0, 1}


def test_fit_command_descends_the_count_loss(capsys, two_blob_file):
    payload = _run_json(capsys, ["fit", str(two_blob_file), "--target", "2",
                                 "--steps", "30"])
    assert len(payload["objective_trajectory"]) == 31
    assert payload["final_objective"] < payload["initial_objective"]
    assert payload["final_argmax_count"] == 2


def test_synth_then_eval_round_trip(capsys, tmp_path):
    out_dir = tmp_path / "corpus"
    payload = _run_json(capsys, ["synth", str(out_dir), "--n", "2",
                                 "--shape", "16,32,32"])
    assert payload["n"] == 2
    manifest = payload["manifest"]
    assert len((out_dir / "manifest.jsonl").read_text().strip().split("\n")) == 2
    result = _run_json(capsys, ["eval", manifest])
    assert result["n"] == 2
    assert 0.0 <= result["accuracy"] <= 1.0


def test_mc_entropy_from_a_comma_list(capsys):
    payload = _run_json(capsys, ["mc-entropy", "1,1,2,2"])
    assert payload["binned"] == [0.0, 0.5, 0.5, 0.0, 0.0]
    assert payload["entropy"] == pytest.approx(np.log(2.0), abs=1e-15)
    assert payload["argmax_bin"] == 1
    assert payload["n"] == 4


def test_mc_entropy_reads_count_files(capsys, tmp_path):
    path = tmp_path / "counts.txt"
    path.write_text("1 1\n2 2\n", encoding="utf-8")
    payload = _run_json(capsys, ["mc-entropy", str(path)])
    assert payload["binned"] == [0.0, 0.5, 0.5, 0.0, 0.0]


def test_mc_entropy_rejects_garbage(capsys):
    code, _, err = _run(capsys, ["mc-entropy", "a,b"])
    assert code == 2


def test_thread_count_never_changes_the_report(capsys, tmp_path, monkeypatch):
    manifest = _binary_corpus(tmp_path)
    monkeypatch.setenv("PBCOUNT_THREADS", "1")
    _, out_single, _ = _run(capsys, ["sweep", str(manifest)])
    monkeypatch.setenv("PBCOUNT_THREADS", "4")
    _, out_pooled, _ = _run(capsys, ["sweep", str(manifest)])
    assert out_pooled == out_single


def test_bad_thread_environment_is_an_input_error(capsys, tmp_path, monkeypatch):
    manifest = _binary_corpus(tmp_path)
    monkeypatch.setenv("PBCOUNT_THREADS", "abc")
    code, _, err = _run(capsys, ["eval", str(manifest)])
    assert code == 2
    assert "PBCOUNT_THREADS" in err


def test_repeated_runs_are_byte_identical(capsys, two_blob_file):
    _, first, _ = _run(capsys, ["count", str(two_blob_file)])
    _, second, _ = _run(capsys, ["count", str(two_blob_file)])
    assert second == first


def test_out_redirects_the_report(capsys, two_blob_file, tmp_path):
    report = tmp_path / "report.json"
    code, out, err = _run(capsys, ["count", str(two_blob_file), "--out", str(report)])
    assert code == 0
    assert out == ""
    assert str(report) in err
    assert json.loads(report.read_text(encoding="utf-8"))["K"] == 2


def test_assumption_violations_exit_with_code_three(capsys, two_blob_file, monkeypatch):
    def explode(path):
        raise pc.AssumptionViolated("planted")
    monkeypatch.setattr(cli, "load_volume", explode)
    code, _, err = _run(capsys, ["count", str(two_blob_file)])
    assert code == 3
    assert "AssumptionViolated" in err


def test_unexpected_failures_exit_with_code_three(capsys, two_blob_file, monkeypatch):
    def explode(path):
        raise RuntimeError("planted")
    monkeypatch.setattr(cli, "load_volume", explode)
    code, _, err = _run(capsys, ["count", str(two_blob_file)])
    assert code == 3
    assert "internal error" in err
