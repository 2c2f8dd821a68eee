"""Command-line entry point: encode / receive / sweep / verify-theorem /
compare / corpus / replay, each writing a JSON manifest that fully
reproduces the run.

Exit codes: 0 success, 1 usage/parameter error, 2 I/O error, 3 format
error, 4 internal consistency failure, 5 no curve overlap.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__, bilevel, corpus as corpus_mod, dctcodec, infotheory, rdo
from .channel import degrade, preset
from .edges import (
    CannyParams,
    canny,
    downsample_metadata,
    expand_metadata,
    gradient_2bit,
    to_debug_plane,
)
from .errors import (
    FormatError,
    InternalCheckError,
    NoOverlapError,
    ParameterError,
    SidebandError,
)
from .image import ImageFrame, load_pnm, save_pnm, to_grayscale, resample
from .metrics import psnr, ssim
from .receiver import DEFAULT_TAU, SHARPEN_ALPHA, gate, reconstruct, reconstructor_ids


class UsageError(SidebandError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _write(path: str, data: bytes):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _load_gray(path: str):
    return to_grayscale(load_pnm(_read(path)))


def _parse_int_list(text: str, flag: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise ParameterError(f"{flag} expects a comma-separated integer list, got {text!r}") from None


# ---------------------------------------------------------------------------
# Handlers: each returns (inputs, outputs, results, manifest_path)

def cmd_encode(args):
    hr = _load_gray(args.input)
    prefix = args.out_prefix or os.path.splitext(args.input)[0]
    if hr.width % args.scale or hr.height % args.scale:
        raise ParameterError(f"input {hr.width}x{hr.height} not divisible by scale {args.scale}")
    lr = resample(hr, hr.width // args.scale, hr.height // args.scale, args.kernel) if args.scale > 1 else hr
    stream = dctcodec.base_encode(lr, args.q)
    base_path = prefix + ".msrb"
    _write(base_path, dctcodec.serialize(stream))
    outputs = [base_path]
    results = {"base_bits": dctcodec.rate_of(stream), "meta_bits": 0}
    if args.meta != "none":
        if args.meta == "canny":
            m = canny(hr, CannyParams(args.canny_sigma, args.low, args.high))
        else:
            m = gradient_2bit(hr, args.canny_sigma)
        if args.pool > 1:
            m = downsample_metadata(m, args.pool)
        ms = bilevel.meta_encode(m)
        meta_path = prefix + ".msrm"
        _write(meta_path, bilevel.serialize(ms))
        outputs.append(meta_path)
        results["meta_bits"] = bilevel.meta_rate(ms)
        results["meta_density"] = m.density()
        if args.meta_debug:
            debug_path = prefix + ".meta.pgm"
            _write(debug_path, save_pnm(ImageFrame((to_debug_plane(m),))))
            outputs.append(debug_path)
    results["total_bits"] = results["base_bits"] + results["meta_bits"]
    return [args.input], outputs, results, prefix + ".manifest.json"


def cmd_receive(args):
    stream = dctcodec.deserialize(_read(args.base))
    lq = dctcodec.base_decode(stream)
    degraded = degrade(lq, preset(args.regime), args.seed, order=args.order)
    inputs = [args.base]
    gate_info = None
    m_tilde = None
    meta_bits = 0
    if args.meta:
        ms = bilevel.deserialize(_read(args.meta))
        inputs.append(args.meta)
        m = bilevel.meta_decode(ms)
        meta_bits = bilevel.meta_rate(ms)
        want_w, want_h = args.scale * lq.width, args.scale * lq.height
        if (m.width, m.height) != (want_w, want_h):
            if want_w % m.width == 0 and want_h % m.height == 0 and want_w // m.width == want_h // m.height:
                m = expand_metadata(m, want_w // m.width)
            else:
                raise ParameterError(
                    f"metadata grid {m.width}x{m.height} incompatible with "
                    f"{want_w}x{want_h} output grid"
                )
        decision = gate(degraded, m, args.scale, args.tau)
        gate_info = {"v": decision.v, "score": decision.score, "tau": decision.tau}
        m_tilde = m if decision.v else None
    sr = reconstruct(args.reconstructor, degraded, m_tilde, args.scale, alpha=args.alpha)
    out_path = args.out or os.path.splitext(args.base)[0] + ".sr.pnm"
    _write(out_path, save_pnm(ImageFrame((sr,))))
    results = {
        "gate": gate_info,
        "base_bits": dctcodec.rate_of(stream),
        "meta_bits": meta_bits,
        "psnr": None,
        "ssim": None,
    }
    if args.ref:
        ref = _load_gray(args.ref)
        inputs.append(args.ref)
        results["psnr"] = psnr(sr, ref)
        results["ssim"] = ssim(sr, ref)
    report_path = os.path.splitext(out_path)[0] + ".report.json"
    _write(report_path, _json_bytes(results))
    return inputs, [out_path, report_path], results, os.path.splitext(out_path)[0] + ".manifest.json"


def cmd_sweep(args):
    paths = sorted(
        os.path.join(args.corpus, f) for f in os.listdir(args.corpus) if f.endswith(".pnm")
    )
    if not paths:
        raise ParameterError(f"corpus directory {args.corpus!r} holds no .pnm files")
    frames = [load_pnm(_read(p)) for p in paths]
    regimes = [preset(r) for r in args.regimes.split(",") if r]
    recs = [r for r in args.reconstructors.split(",") if r]
    qs = _parse_int_list(args.qs, "--qs")
    if not regimes or not recs or not qs:
        raise ParameterError("need at least one regime, reconstructor, and quality factor")
    canny_base = CannyParams(args.canny_sigma, args.low, args.high)
    curves = []
    for regime in regimes:
        for rec in recs:
            for levels in ([0, args.meta_levels] if args.meta_levels else [0]):
                curves.append(
                    rdo.build_curve(
                        frames,
                        regime,
                        rec,
                        levels,
                        qs,
                        args.scale,
                        args.seed,
                        lam=getattr(args, "lambda"),
                        d_kind=args.d_kind,
                        tau=args.tau,
                        canny_base=canny_base,
                        sweep_ratio=args.sweep_ratio,
                        kernel=args.kernel,
                        workers=args.workers,
                    )
                )
    out_path = os.path.join(args.out_dir, f"curves.{args.out}")
    _write(out_path, rdo.emit(curves, args.out))
    results = {"curves": [c.method for c in curves], "points": sum(len(c.points) for c in curves)}
    return paths, [out_path], results, os.path.join(args.out_dir, "sweep.manifest.json")


def cmd_verify_theorem(args):
    shape = tuple(_parse_int_list(args.alphabets, "--alphabets"))
    if len(shape) != 3:
        raise ParameterError(f"--alphabets expects three sizes x,y,m, got {args.alphabets!r}")
    report = infotheory.verify_theorem(args.samples, args.seed, shape)
    payload = _json_bytes(report)
    sys.stdout.write(payload.decode())
    _write(args.out, payload)
    if not report["passed"]:
        raise InternalCheckError("theorem verification found a violated inequality")
    return [], [args.out], {"passed": report["passed"]}, args.out + ".manifest.json"


def _pick_curve(path: str, method, role: str):
    fmt = "json" if path.endswith(".json") else "csv"
    curves = rdo.parse(_read(path), fmt)
    if method:
        for c in curves:
            if c.method == method:
                return c
        raise ParameterError(f"{role} file has no curve labeled {method!r}")
    if len(curves) != 1:
        labels = [c.method for c in curves]
        raise ParameterError(f"{role} file holds {len(curves)} curves {labels}; pick one with --{role}-method")
    return curves[0]


def cmd_compare(args):
    ref = _pick_curve(args.ref, args.ref_method, "ref")
    test = _pick_curve(args.test, args.test_method, "test")
    saving = rdo.bitrate_saving_at_matched_quality(ref, test, args.metric, log_rate=args.log_rate)
    gain = rdo.quality_gain_at_matched_rate(ref, test, args.metric, log_rate=args.log_rate)
    results = {
        "metric": args.metric,
        "ref": ref.method,
        "test": test.method,
        "bitrate_saving_pct": {"mean": saving.mean_pct, "max": saving.max_pct},
        "quality_gain": {"mean": gain.mean, "max": gain.max},
    }
    payload = _json_bytes(results)
    sys.stdout.write(payload.decode())
    _write(args.out, payload)
    return [args.ref, args.test], [args.out], results, args.out + ".manifest.json"


def cmd_corpus(args):
    paths = corpus_mod.write_dir(args.out_dir)
    return [], paths, {"images": [os.path.basename(p) for p in paths]}, os.path.join(args.out_dir, "corpus.manifest.json")


HANDLERS = {
    "encode": cmd_encode,
    "receive": cmd_receive,
    "sweep": cmd_sweep,
    "verify-theorem": cmd_verify_theorem,
    "compare": cmd_compare,
    "corpus": cmd_corpus,
}


def _execute(args) -> dict:
    inputs, outputs, results, manifest_path = HANDLERS[args.command](args)
    params = {k: v for k, v in vars(args).items() if k != "command"}
    manifest = {
        "tool": "sideband",
        "version": __version__,
        "subcommand": args.command,
        "params": params,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {p: _sha256(p) for p in outputs},
        "results": results,
    }
    _write(manifest_path, _json_bytes(manifest))
    return manifest


def cmd_replay(args) -> dict:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    sub = manifest["subcommand"]
    if sub not in HANDLERS:
        raise FormatError("subcommand", f"manifest names unknown subcommand {sub!r}")
    for path, digest in manifest["inputs"].items():
        if _sha256(path) != digest:
            raise InternalCheckError(f"input {path} changed since the recorded run")
    ns = argparse.Namespace(command=sub, **manifest["params"])
    redone = _execute(ns)
    for path, digest in manifest["outputs"].items():
        if redone["outputs"].get(path) != digest:
            raise InternalCheckError(f"replay produced different bytes for {path}")
    sys.stdout.write(f"replayed {sub}: {len(redone['outputs'])} outputs byte-identical\n")
    return redone


def _build_parser() -> _Parser:
    parser = _Parser(prog="sideband", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sideband {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="compress an image into base + metadata streams")
    enc.add_argument("input", help="HR reference image (.pnm)")
    enc.add_argument("--q", type=int, default=75, help="quality factor in [1, 100]")
    enc.add_argument("--meta", choices=("none", "canny", "grad2"), default="canny")
    enc.add_argument("--canny-sigma", type=float, default=1.4)
    enc.add_argument("--low", type=float, default=40.0)
    enc.add_argument("--high", type=float, default=100.0)
    enc.add_argument("--pool", type=int, default=1, help="metadata block-pooling factor")
    enc.add_argument("--scale", type=int, default=1, help="downsample factor for the base layer")
    enc.add_argument("--kernel", choices=("bicubic", "nearest"), default="bicubic")
    enc.add_argument("--meta-debug", action="store_true", help="also export the metadata as a viewable .pgm")
    enc.add_argument("--out-prefix", default=None)

    rec = sub.add_parser("receive", help="decode, degrade, gate, reconstruct, measure")
    rec.add_argument("base", help="base-layer stream (.msrb)")
    rec.add_argument("meta", nargs="?", default=None, help="metadata stream (.msrm)")
    rec.add_argument("--regime", choices=("NN", "LN", "HN"), default="NN")
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--reconstructor", choices=reconstructor_ids(), default="edgeguided")
    rec.add_argument("--tau", type=float, default=DEFAULT_TAU)
    rec.add_argument("--scale", type=int, default=1)
    rec.add_argument("--ref", default=None, help="HR reference for metrics (.pnm)")
    rec.add_argument("--out", default=None, help="reconstructed image path (.pnm)")
    rec.add_argument("--order", choices=("noise_blur", "blur_noise"), default="noise_blur",
                     help="degradation stage order (default matches the presets)")
    rec.add_argument("--alpha", type=float, default=SHARPEN_ALPHA,
                     help="edge-directed sharpening strength")

    sw = sub.add_parser("sweep", help="build rate-distortion curves over a corpus")
    sw.add_argument("--corpus", required=True, help="directory of .pnm images")
    sw.add_argument("--regimes", default="NN,LN,HN")
    sw.add_argument("--qs", default="90,70,50,30,10")
    sw.add_argument("--meta-levels", type=int, default=3)
    sw.add_argument("--reconstructors", default="bicubic,edgeguided")
    sw.add_argument("--lambda", type=float, required=True, help="rate weight (distortion per bit)")
    sw.add_argument("--d-kind", choices=rdo.D_KINDS, default="one_minus_ssim")
    sw.add_argument("--out", choices=("csv", "json"), default="csv")
    sw.add_argument("--out-dir", default=".")
    sw.add_argument("--scale", type=int, default=4)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--tau", type=float, default=DEFAULT_TAU)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--kernel", choices=("bicubic", "nearest"), default="bicubic")
    sw.add_argument("--canny-sigma", type=float, default=1.4)
    sw.add_argument("--low", type=float, default=40.0)
    sw.add_argument("--high", type=float, default=100.0)
    sw.add_argument("--sweep-ratio", type=float, default=1.6)

    vt = sub.add_parser("verify-theorem", help="brute-force the entropy-reduction results")
    vt.add_argument("--samples", type=int, default=10000)
    vt.add_argument("--seed", type=int, default=0)
    vt.add_argument("--alphabets", default="4,4,4")
    vt.add_argument("--out", default="verify.json")

    cmp_ = sub.add_parser("compare", help="matched-quality / matched-rate curve comparison")
    cmp_.add_argument("--ref", required=True)
    cmp_.add_argument("--test", required=True)
    cmp_.add_argument("--metric", choices=("psnr", "ssim"), default="psnr")
    cmp_.add_argument("--log-rate", action="store_true", help="interpolate on a log2 rate axis")
    cmp_.add_argument("--ref-method", default=None)
    cmp_.add_argument("--test-method", default=None)
    cmp_.add_argument("--out", default="compare.json")

    cp = sub.add_parser("corpus", help="materialize the bundled synthetic corpus")
    cp.add_argument("--out-dir", default="corpus")

    rp = sub.add_parser("replay", help="re-run a manifest and verify byte-identical outputs")
    rp.add_argument("manifest")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    try:
        if args.command == "replay":
            cmd_replay(args)
        else:
            _execute(args)
        return 0
    except (ParameterError, UsageError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except FormatError as exc:
        sys.stderr.write(f"format error: {exc}\n")
        return 3
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return 2
    except InternalCheckError as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return 4
    except NoOverlapError as exc:
        sys.stderr.write(f"no overlap: {exc}\n")
        return 5


if __name__ == "__main__":
    sys.exit(main())
