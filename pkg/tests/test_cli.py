import numpy as np
import pytest

from hdnorm import DepthMap, read_pfm, write_mask, write_pfm
from hdnorm.cli import main


@pytest.fixture
def fixture_files(tmp_path):
    gt = DepthMap(np.array([[1.0, 2.0], [4.0, 3.0]]))
    pred = DepthMap(np.array([[1.0, 2.0], [3.0, 4.0]]))
    gp, pp = tmp_path / "gt.pfm", tmp_path / "pred.pfm"
    write_pfm(gt, gp)
    write_pfm(pred, pp)
    return str(pp), str(gp), tmp_path


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_loss_ssi_identical_maps(capsys, fixture_files):
    _, gp, _ = fixture_files
    rc, out, _ = run(capsys, "loss", gp, gp, "--kind", "ssi")
    assert rc == 0
    assert out.splitlines()[0] == "value: 0"


def test_loss_hdn_s_levels1_equals_ssi(capsys, fixture_files):
    pp, gp, _ = fixture_files
    rc1, out1, _ = run(capsys, "loss", pp, gp, "--kind", "ssi")
    rc2, out2, _ = run(capsys, "loss", pp, gp, "--kind", "hdn_s", "--levels", "1")
    assert rc1 == rc2 == 0
    assert out1.splitlines()[0] == out2.splitlines()[0]


def test_loss_with_lambda(capsys, fixture_files):
    pp, gp, _ = fixture_files
    rc, out, _ = run(capsys, "loss", pp, gp, "--kind", "hdn_dr",
                     "--levels", "1,2", "--lambda", "1.0")
    assert rc == 0
    assert out.startswith("value: ")
    assert "level l1:" in out


def test_loss_missing_file_exit2(capsys, tmp_path):
    rc, _, err = run(capsys, "loss", str(tmp_path / "no.pfm"),
                     str(tmp_path / "no.pfm"))
    assert rc == 2
    assert "error:" in err


def test_loss_shape_mismatch_exit2(capsys, fixture_files, tmp_path):
    pp, _, _ = fixture_files
    other = tmp_path / "other.pfm"
    write_pfm(DepthMap(np.ones((1, 3))), other)
    rc, _, err = run(capsys, "loss", pp, str(other))
    assert rc == 2


def test_grad_check_step_zero_exit2(capsys, fixture_files):
    pp, gp, _ = fixture_files
    rc, _, err = run(capsys, "grad-check", pp, gp, "--step", "0")
    assert rc == 2


def test_grad_check_random_fixture_passes(capsys, tmp_path):
    rng = np.random.default_rng(5)
    jitter = lambda: rng.uniform(-0.05, 0.05, (5, 5))
    pred = DepthMap(rng.permutation(np.linspace(1, 10, 25)).reshape(5, 5) + jitter())
    gt = DepthMap(rng.permutation(np.linspace(1, 10, 25)).reshape(5, 5) + jitter())
    write_pfm(gt, tmp_path / "g.pfm")
    write_pfm(pred, tmp_path / "p.pfm")
    rc, out, _ = run(capsys, "grad-check", str(tmp_path / "p.pfm"),
                     str(tmp_path / "g.pfm"), "--kind", "hdn_dr",
                     "--levels", "1,2")
    assert rc == 0
    assert "result: pass" in out


def test_partition_golden_dump(capsys, fixture_files):
    _, gp, _ = fixture_files
    rc, out, _ = run(capsys, "partition", gp, "--kind", "spatial", "--s", "2")
    assert rc == 0
    assert out == "ctx0: 0\nctx1: 1\nctx2: 2\nctx3: 3\n"


def test_partition_stable_across_runs(capsys, fixture_files):
    _, gp, _ = fixture_files
    outs = set()
    for _ in range(3):
        rc, out, _ = run(capsys, "partition", gp, "--kind", "depth_range", "--s", "2")
        assert rc == 0
        outs.add(out)
    assert len(outs) == 1


def test_eval_identical(capsys, fixture_files):
    _, gp, _ = fixture_files
    rc, out, _ = run(capsys, "eval", gp, gp)
    assert rc == 0
    assert "absrel_percent: 0.0" in out
    assert "delta1_percent: 100.0" in out


def test_eval_affine_with_alignment(capsys, fixture_files, tmp_path):
    _, gp, _ = fixture_files
    gt = read_pfm(gp)
    pred = DepthMap(2 * gt.values + 3)
    write_pfm(pred, tmp_path / "aff.pfm")
    rc, out, _ = run(capsys, "eval", str(tmp_path / "aff.pfm"), gp)
    assert rc == 0
    assert "absrel_percent: 0.0" in out
    assert "delta1_percent: 100.0" in out


def test_eval_no_align_hand_fixture(capsys, tmp_path):
    write_pfm(DepthMap(np.array([[1.0, 3.0]])), tmp_path / "p.pfm")
    write_pfm(DepthMap(np.array([[2.0, 2.0]])), tmp_path / "g.pfm")
    rc, out, _ = run(capsys, "eval", str(tmp_path / "p.pfm"),
                     str(tmp_path / "g.pfm"), "--no-align")
    assert rc == 0
    assert "absrel_percent: 50.0" in out


def test_eval_mask_flag(capsys, fixture_files, tmp_path):
    pp, gp, _ = fixture_files
    write_mask(np.array([[True, True], [True, False]]), tmp_path / "m.pgm")
    rc, out, _ = run(capsys, "eval", pp, gp, "--gt-mask", str(tmp_path / "m.pgm"))
    assert rc == 0
    assert "pixels: 3" in out


def test_scatter_stdout(capsys, fixture_files):
    pp, gp, _ = fixture_files
    rc, out, _ = run(capsys, "scatter", pp, gp, "--n", "4")
    assert rc == 0
    assert out.splitlines()[0] == "pred,gt"
    assert len(out.splitlines()) == 5


def test_synth_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.pfm", tmp_path / "b.pfm"
    assert run(capsys, "synth", "--out", str(a))[0] == 0
    assert run(capsys, "synth", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_synth_standard_fixture_golden_checksum(capsys, tmp_path):
    import hashlib
    out = tmp_path / "std.pfm"
    assert run(capsys, "synth", "--out", str(out))[0] == 0
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    # pinned on the first run; catches any drift in the generator
    assert digest == ("e542aeae76175db2c51e72c9d05e0ba9"
                      "25f5376ee3da0cdf04c96ed62dd97f38")


def test_synth_config_file(capsys, tmp_path):
    cfg = tmp_path / "scene.cfg"
    cfg.write_text("height = 8\nwidth = 8\n"
                   "fg_top = 2\nfg_bottom = 6\nfg_left = 2\nfg_right = 6\n"
                   "ridge_amplitude = 0.0  # flat foreground\n")
    out_path = tmp_path / "s.pfm"
    rc, out, _ = run(capsys, "synth", "--config", str(cfg), "--out", str(out_path))
    assert rc == 0
    assert "shape: 8x8" in out
    scene = read_pfm(out_path)
    assert set(np.unique(scene.values)) == {1.0, 10.0}


def test_synth_bad_config_key_exit2(capsys, tmp_path):
    cfg = tmp_path / "scene.cfg"
    cfg.write_text("bogus = 1\n")
    rc, _, err = run(capsys, "synth", "--config", str(cfg),
                     "--out", str(tmp_path / "s.pfm"))
    assert rc == 2
    assert not (tmp_path / "s.pfm").exists()


def test_fit_small(capsys, tmp_path):
    rc, out, _ = run(capsys, "fit", "--height", "16", "--width", "16",
                     "--fg-top", "4", "--fg-bottom", "12",
                     "--fg-left", "4", "--fg-right", "12",
                     "--loss-kind", "hdn_dr", "--levels", "1,2",
                     "--steps", "10", "--step-size", "50",
                     "--out", str(tmp_path / "fit.pfm"))
    assert rc == 0
    assert "final_loss:" in out
    assert (tmp_path / "fit.pfm").exists()


def test_compare_ssi_vs_hdn_dr(capsys, tmp_path):
    rc, out, _ = run(capsys, "compare", "--height", "16", "--width", "16",
                     "--fg-top", "4", "--fg-bottom", "12",
                     "--fg-left", "4", "--fg-right", "12",
                     "--loss", "ssi", "--loss", "hdn_dr:1,2",
                     "--steps", "15", "--step-size", "50",
                     "--csv", str(tmp_path / "rows.csv"))
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].split()[:2] == ["config", "final_loss"]
    assert len(lines) == 3
    csv = (tmp_path / "rows.csv").read_text()
    assert csv.splitlines()[0].startswith("label,")


def test_unknown_command_exit2(capsys):
    assert main(["definitely-not-a-command"]) == 2
