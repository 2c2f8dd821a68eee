import json

import numpy as np
import pytest

from sideband import corpus, rdo
from sideband.cli import main
from sideband.image import ImageFrame, load_pnm, save_pnm


def write_image(path, plane):
    with open(path, "wb") as fh:
        fh.write(save_pnm(ImageFrame((plane,))))


@pytest.fixture
def scene_pnm(tmp_path):
    p = tmp_path / "scene.pnm"
    write_image(p, corpus.scene())
    return str(p)


def run(*argv):
    return main([str(a) for a in argv])


class TestEncode:
    def test_writes_streams_and_manifest(self, tmp_path, scene_pnm):
        prefix = tmp_path / "out"
        assert run("encode", scene_pnm, "--q", 60, "--out-prefix", prefix) == 0
        assert (tmp_path / "out.msrb").exists()
        assert (tmp_path / "out.msrm").exists()
        manifest = json.loads((tmp_path / "out.manifest.json").read_text())
        assert manifest["subcommand"] == "encode"
        base_size = (tmp_path / "out.msrb").stat().st_size
        from sideband.dctcodec import HEADER_BYTES

        assert manifest["results"]["base_bits"] == 8 * (base_size - HEADER_BYTES)
        meta_size = (tmp_path / "out.msrm").stat().st_size
        assert manifest["results"]["meta_bits"] == 8 * meta_size

    def test_meta_none_skips_msrm(self, tmp_path, scene_pnm):
        prefix = tmp_path / "plain"
        assert run("encode", scene_pnm, "--meta", "none", "--out-prefix", prefix) == 0
        assert not (tmp_path / "plain.msrm").exists()
        manifest = json.loads((tmp_path / "plain.manifest.json").read_text())
        assert manifest["results"]["meta_bits"] == 0

    def test_deterministic_rerun(self, tmp_path, scene_pnm):
        prefix = tmp_path / "det"
        run("encode", scene_pnm, "--out-prefix", prefix)
        first = (tmp_path / "det.msrb").read_bytes(), (tmp_path / "det.manifest.json").read_bytes()
        run("encode", scene_pnm, "--out-prefix", prefix)
        second = (tmp_path / "det.msrb").read_bytes(), (tmp_path / "det.manifest.json").read_bytes()
        assert first == second

    def test_grad2_meta(self, tmp_path, scene_pnm):
        prefix = tmp_path / "g2"
        assert run("encode", scene_pnm, "--meta", "grad2", "--out-prefix", prefix) == 0
        assert (tmp_path / "g2.msrm").exists()

    def test_meta_debug_export(self, tmp_path, scene_pnm):
        prefix = tmp_path / "dbg"
        assert run("encode", scene_pnm, "--meta-debug", "--out-prefix", prefix) == 0
        debug = load_pnm((tmp_path / "dbg.meta.pgm").read_bytes())
        assert set(np.unique(debug.planes[0].samples)) <= {0, 255}


class TestReceive:
    def test_high_quality_round_trip(self, tmp_path):
        ref = tmp_path / "gradient.pnm"
        write_image(ref, corpus.gradient())
        prefix = tmp_path / "enc"
        run("encode", ref, "--q", 100, "--meta", "none", "--out-prefix", prefix)
        out = tmp_path / "sr.pnm"
        assert (
            run(
                "receive", prefix.with_suffix(".msrb"), "--regime", "NN",
                "--reconstructor", "bicubic", "--scale", 1, "--ref", ref, "--out", out,
            )
            == 0
        )
        report = json.loads((tmp_path / "sr.report.json").read_text())
        assert report["psnr"] >= 40.0
        assert report["gate"] is None

    def test_pooled_metadata_reexpanded(self, tmp_path, scene_pnm):
        prefix = tmp_path / "pooled"
        run(
            "encode", scene_pnm, "--q", 60, "--scale", 4, "--low", 15, "--high", 35,
            "--pool", 2, "--out-prefix", prefix,
        )
        out = tmp_path / "sr.pnm"
        code = run(
            "receive", prefix.with_suffix(".msrb"), prefix.with_suffix(".msrm"),
            "--regime", "NN", "--scale", 4, "--ref", scene_pnm, "--out", out,
        )
        assert code == 0
        report = json.loads((tmp_path / "sr.report.json").read_text())
        assert report["gate"] is not None

    def test_gated_metadata_path(self, tmp_path, scene_pnm):
        prefix = tmp_path / "enc"
        run("encode", scene_pnm, "--q", 60, "--scale", 4, "--low", 15, "--high", 35, "--out-prefix", prefix)
        out = tmp_path / "sr.pnm"
        code = run(
            "receive", prefix.with_suffix(".msrb"), prefix.with_suffix(".msrm"),
            "--regime", "LN", "--seed", 3, "--scale", 4, "--ref", scene_pnm, "--out", out,
        )
        assert code == 0
        report = json.loads((tmp_path / "sr.report.json").read_text())
        assert report["gate"]["v"] in (0, 1)
        assert 0.0 <= report["gate"]["score"] <= 1.0
        sr = load_pnm((out).read_bytes())
        assert (sr.width, sr.height) == (128, 128)

    def test_seeded_reproducibility(self, tmp_path, scene_pnm):
        prefix = tmp_path / "enc"
        run("encode", scene_pnm, "--q", 50, "--meta", "none", "--out-prefix", prefix)
        out1, out2 = tmp_path / "a.pnm", tmp_path / "b.pnm"
        for out in (out1, out2):
            run(
                "receive", prefix.with_suffix(".msrb"), "--regime", "HN", "--seed", 77,
                "--reconstructor", "bicubic", "--scale", 1, "--out", out,
            )
        assert out1.read_bytes() == out2.read_bytes()

    def test_stage_order_flag_changes_output(self, tmp_path, scene_pnm):
        prefix = tmp_path / "enc"
        run("encode", scene_pnm, "--q", 50, "--meta", "none", "--out-prefix", prefix)
        outs = {}
        for order in ("noise_blur", "blur_noise"):
            out = tmp_path / f"{order}.pnm"
            run(
                "receive", prefix.with_suffix(".msrb"), "--regime", "LN", "--seed", 1,
                "--reconstructor", "bicubic", "--scale", 1, "--out", out, "--order", order,
            )
            outs[order] = out.read_bytes()
        assert outs["noise_blur"] != outs["blur_noise"]

    def test_alpha_flag_changes_output(self, tmp_path, scene_pnm):
        prefix = tmp_path / "enc"
        run("encode", scene_pnm, "--q", 50, "--meta", "none", "--out-prefix", prefix)
        outs = {}
        for alpha in ("0.6", "1.5"):
            out = tmp_path / f"a{alpha}.pnm"
            run(
                "receive", prefix.with_suffix(".msrb"), "--regime", "NN",
                "--reconstructor", "edgeguided", "--scale", 1, "--out", out, "--alpha", alpha,
            )
            outs[alpha] = out.read_bytes()
        assert outs["0.6"] != outs["1.5"]


class TestSweepAndCompare:
    @pytest.fixture
    def small_corpus(self, tmp_path):
        d = tmp_path / "corpus"
        d.mkdir()
        write_image(d / "step.pnm", corpus.step_edge())
        write_image(d / "scene.pnm", corpus.scene())
        return d

    def test_two_point_curve_single_image(self, tmp_path):
        d = tmp_path / "one"
        d.mkdir()
        write_image(d / "scene.pnm", corpus.scene())
        out_dir = tmp_path / "run"
        code = run(
            "sweep", "--corpus", d, "--regimes", "NN", "--qs", "40,80",
            "--meta-levels", 0, "--reconstructors", "bicubic", "--lambda", "1e-6",
            "--scale", 4, "--out", "csv", "--out-dir", out_dir,
        )
        assert code == 0
        curves = rdo.parse((out_dir / "curves.csv").read_bytes(), "csv")
        assert len(curves) == 1
        assert len(curves[0].points) == 2
        assert all(p.meta_bits == 0 for p in curves[0].points)

    def test_full_family_and_replay(self, tmp_path, small_corpus):
        out_dir = tmp_path / "fam"
        args = (
            "sweep", "--corpus", small_corpus, "--regimes", "NN,LN", "--qs", "30,70",
            "--meta-levels", 2, "--reconstructors", "bicubic,edgeguided",
            "--lambda", "1e-6", "--scale", 4, "--out", "csv", "--out-dir", out_dir,
            "--low", 15, "--high", 35, "--workers", 2,
        )
        assert run(*args) == 0
        data1 = (out_dir / "curves.csv").read_bytes()
        curves = rdo.parse(data1, "csv")
        assert len(curves) == 8  # 2 regimes x 2 reconstructors x on/off
        assert run("replay", out_dir / "sweep.manifest.json") == 0
        assert (out_dir / "curves.csv").read_bytes() == data1

    def test_compare_self_is_zero(self, tmp_path, small_corpus):
        out_dir = tmp_path / "cmp"
        run(
            "sweep", "--corpus", small_corpus, "--regimes", "NN", "--qs", "30,60,90",
            "--meta-levels", 0, "--reconstructors", "bicubic", "--lambda", "1e-6",
            "--scale", 4, "--out", "json", "--out-dir", out_dir,
        )
        curve_file = out_dir / "curves.json"
        out = tmp_path / "cmp.json"
        code = run("compare", "--ref", curve_file, "--test", curve_file, "--metric", "psnr", "--out", out)
        assert code == 0
        result = json.loads(out.read_text())
        assert result["bitrate_saving_pct"]["mean"] == 0.0
        assert result["quality_gain"]["mean"] == 0.0

    def test_compare_no_overlap_exit_5(self, tmp_path):
        a = curve_bytes([(100, 30, 0.5), (200, 35, 0.6)])
        b = curve_bytes([(100, 40, 0.8), (200, 45, 0.9)])
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        pa.write_bytes(a)
        pb.write_bytes(b)
        assert run("compare", "--ref", pa, "--test", pb, "--metric", "psnr", "--out", tmp_path / "o.json") == 5


def curve_bytes(points):
    pts = tuple(
        rdo.RatePoint(
            base_bits=float(t), meta_bits=0.0, total_bits=float(t), psnr=float(p),
            ssim=float(s), regime="NN", reconstructor="bicubic", q=50, meta_level=0, tau=0.15,
        )
        for (t, p, s) in points
    )
    return rdo.emit([rdo.RDCurve(method="c", d_kind="mse", lam=0.001, points=pts)], "csv")


class TestVerifyTheorem:
    def test_passes_and_writes_json(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        code = run("verify-theorem", "--samples", 200, "--seed", 4, "--alphabets", "3,3,3", "--out", out)
        assert code == 0
        report = json.loads(out.read_text())
        assert report["passed"] is True
        printed = json.loads(capsys.readouterr().out)
        assert printed["passed"] is True


class TestCorpusCommand:
    def test_materializes_files(self, tmp_path):
        out_dir = tmp_path / "c"
        assert run("corpus", "--out-dir", out_dir) == 0
        names = sorted(p.name for p in out_dir.glob("*.pnm"))
        assert names == sorted(f"{n}.pnm" for n in corpus.bundled())


class TestExitCodes:
    def test_usage_error_is_1(self):
        assert run("encode") == 1
        assert run("frobnicate") == 1

    def test_missing_file_is_2(self, tmp_path):
        assert run("encode", tmp_path / "nope.pnm") == 2

    def test_format_error_is_3(self, tmp_path):
        bad = tmp_path / "bad.pnm"
        bad.write_bytes(b"P7 not a pnm")
        assert run("encode", bad) == 3

    def test_bad_parameter_is_1(self, tmp_path, scene_pnm):
        assert run("encode", scene_pnm, "--q", 400, "--out-prefix", tmp_path / "x") == 1

    def test_replay_detects_changed_input(self, tmp_path, scene_pnm):
        prefix = tmp_path / "enc"
        run("encode", scene_pnm, "--meta", "none", "--out-prefix", prefix)
        write_image(scene_pnm, corpus.blob())
        assert run("replay", tmp_path / "enc.manifest.json") == 4
