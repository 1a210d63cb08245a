"""Acceptance criteria 1-8, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line; the lines are printed together at the
end of the pytest session (see conftest.py) and immediately with ``-s``.
Run stand-alone with ``python3 tests/test_acceptance.py``.
"""
import hashlib
import os
import sys
import time

import numpy as np
import pytest

from fdlpderev import verify
from fdlpderev.cli import main
from fdlpderev.enhancer import EnhancerConfig, init_params
from fdlpderev.enhancer.training import example_loss, train
from fdlpderev.fdlp import EnvelopeMatrix, fdlp_envelopes
from fdlpderev.features import integrate
from fdlpderev.io import read_envelopes, read_features, write_envelopes, write_features
from fdlpderev.synth import bursts, synthetic_pairs

RESULTS = []


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return passed


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_1_numerical_core():
    with Timer() as t:
        res = verify.check_numerical_core(seed=0)
    m = res.measured
    ok = (m["dct_roundtrip"] < 1e-9 and m["levinson_vs_dense"] < 1e-8
          and m["all_pole_vs_direct"] < 1e-10 and t.seconds < 10)
    record(1, "numerical core oracles", ok,
           f"dct {m['dct_roundtrip']:.2e} (<1e-9), levinson {m['levinson_vs_dense']:.2e} (<1e-8), "
           f"all-pole {m['all_pole_vs_direct']:.2e} (<1e-10), {t.seconds:.1f} s (<10 s)")
    assert ok


def test_criterion_2_fdlp_fidelity():
    with Timer() as t:
        res = verify.check_fdlp_fidelity()
    m = res.measured
    ok = res.passed and t.seconds < 30
    record(2, "FDLP fidelity", ok,
           f"AM frequency error {m['am_max_freq_error_hz']:.3f} Hz (<=0.5), tone flatness "
           f"{m['tone_flatness']:.3f} (<1.5), far-band ratio {m['tone_far_band_ratio']:.1e} (<1e-3), "
           f"click spacing error {m['click_spacing_max_error_pts']} pts (<=2), {t.seconds:.1f} s (<30 s)")
    assert ok


def test_criterion_3_envelope_convolution_model():
    with Timer() as t:
        res = verify.check_envelope_convolution(bandwidths=(400.0, 200.0, 100.0), threshold=0.15)
    m = res.measured
    ok = res.passed and t.seconds < 60
    single = ", ".join(f"{e:.3f}" for e in m["single_rir_error"])
    ensemble = ", ".join(f"{e:.3f}" for e in m["ensemble_error"])
    record(3, "envelope convolution model, t60 0.3 s", ok,
           f"errors at 400/200/100 Hz [{single}] (<0.15 for <=200 Hz, monotone={m['monotone']}); "
           f"{m['ensemble_size']}-RIR ensemble [{ensemble}] (reported); {t.seconds:.1f} s (<60 s)")
    assert ok


def test_criterion_4_gradient_check():
    config = EnhancerConfig.preset("desk")
    with Timer() as t:
        errors, redraws = verify.gradient_check(config, entries_per_tensor=12, return_skipped=True)
    worst_name = max(errors, key=errors.get)
    ok = max(errors.values()) < 1e-4 and t.seconds < 300
    record(4, "CLSTM gradient check", ok,
           f"{len(errors)} tensors, max relative error {errors[worst_name]:.2e} ({worst_name}) "
           f"(<1e-4), {redraws} kink redraws, {t.seconds:.1f} s (<300 s)")
    assert ok


def test_criterion_5_training_trend(desk_training):
    # desk_training: 50 synthetic pairs (45 train, 5 validation), 10 epochs, seed 0
    _, result, examples, train_seconds = desk_training
    first, last = result.records[0], result.records[-1]
    trend_ok = len(result.records) == 10 and last.train_loss < first.train_loss \
        and last.val_loss < first.val_loss
    with Timer() as t:
        single = examples[:1]
        overfit_cfg = EnhancerConfig.preset("desk", epochs=200, seed=0)
        start = init_params(overfit_cfg)
        mse0 = example_loss(start, single[0], overfit_cfg).mse
        fit = train(single, [], overfit_cfg, params=start)
        mse1 = example_loss(fit.last_params, single[0], overfit_cfg).mse
    ratio = mse1 / mse0
    total = train_seconds + t.seconds
    ok = trend_ok and ratio <= 0.10 and total < 900
    record(5, "training trend", ok,
           f"train {first.train_loss:.3f} -> {last.train_loss:.3f}, val {first.val_loss:.3f} -> "
           f"{last.val_loss:.3f} (epoch 1 -> 10, both must fall); single-pair MSE "
           f"{mse0:.3f} -> {mse1:.3f} = {100 * ratio:.1f}% of initial (<=10%); {total:.0f} s (<900 s)")
    assert ok


def test_criterion_6_heldout_enhancement(desk_training):
    config, result, _, _ = desk_training
    with Timer() as t:
        examples = verify.heldout_examples(10)
        base, enh, rel = verify.enhancement_metric(result.params, config, examples)
    t60s = [p.rir.spec.t60 for p in synthetic_pairs(10, seed=verify.HELDOUT_SEED)]
    ok = rel >= 0.20 and t.seconds < 300 and min(t60s) >= 0.3 and max(t60s) <= 0.7
    record(6, "held-out enhancement", ok,
           f"log-MSE to clean: reverberant {base:.3f}, enhanced {enh:.3f}, relative reduction "
           f"{100 * rel:.1f}% (>=20%), 10 pairs t60 {min(t60s):.2f}-{max(t60s):.2f} s, "
           f"{t.seconds:.1f} s (<300 s)")
    assert ok


def _tree(root):
    out = {}
    for d, _, files in os.walk(root):
        for f in sorted(files):
            p = os.path.join(d, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = hashlib.sha256(fh.read()).hexdigest()
    return out


def _pipeline(root, workers):
    """simulate -> extract -> train -> enhance -> featurize under one worker count."""
    w = ["--workers", str(workers), "--seed", "3"]
    sim, env, model, enh, feat = (os.path.join(root, d) for d in ("sim", "env", "model", "enh", "feat"))
    codes = [main(["simulate", "--synthetic", "3", "--t60", "0.3", "0.6", "--output", sim, *w])]
    wavs = sorted(os.path.join(sim, "reverb", f) for f in os.listdir(os.path.join(sim, "reverb")))
    codes.append(main(["extract", *wavs, "--output", env, *w]))
    codes.append(main(["train", "--manifest", os.path.join(sim, "manifest.tsv"), "--epochs", "1",
                       "--val-fraction", "0.2", "--output", model, *w]))
    dumps = sorted(os.path.join(env, f) for f in os.listdir(env))
    codes.append(main(["enhance", *dumps, "--checkpoint", os.path.join(model, "enhancer.ckpt"),
                       "--gain-dump", "--output", enh, *w]))
    codes.append(main(["featurize", *dumps, "--output", feat, *w]))
    return codes


def test_criterion_7_identity_and_determinism(tmp_path):
    with Timer() as t:
        # identity: zero final layer makes enhance a byte-level no-op
        zero_dir = tmp_path / "zero"
        src = tmp_path / "in.env"
        sig_env = fdlp_envelopes(bursts(seed=11).samples)
        write_envelopes(src, [sig_env, EnvelopeMatrix(sig_env.values[::-1].copy(), 300)])
        model = tmp_path / "zmodel"
        main(["simulate", "--synthetic", "1", "--t60", "0.3", "--output", str(tmp_path / "zsim")])
        main(["train", "--manifest", str(tmp_path / "zsim" / "manifest.tsv"), "--epochs", "0",
              "--final-init", "zero", "--output", str(model)])
        code = main(["enhance", str(src), "--checkpoint", str(model / "enhancer.ckpt"),
                     "--output", str(zero_dir)])
        identity = code == 0 and (zero_dir / "in.env").read_bytes() == src.read_bytes()

        # determinism across reruns and worker counts
        runs = {}
        for name, workers in (("a", 1), ("b", 1), ("c", 2), ("d", 3)):
            codes = _pipeline(str(tmp_path / name), workers)
            runs[name] = (codes, _tree(str(tmp_path / name)))
        trees = [r[1] for r in runs.values()]
        deterministic = all(r[0] == [0] * 5 for r in runs.values()) and all(tr == trees[0] for tr in trees)
    ok = identity and deterministic
    record(7, "identity and determinism", ok,
           f"zero-final enhance byte-identical={identity}; 5-command pipeline "
           f"({len(trees[0])} files) identical across 2 reruns and 1/2/3 workers={deterministic}; "
           f"{t.seconds:.1f} s")
    assert ok


def test_criterion_8_feature_framing(tmp_path):
    env = fdlp_envelopes(bursts(seed=2).samples)
    feats = integrate(env)
    write_features(feats, tmp_path / "f.feat")
    write_features(feats, tmp_path / "f.csv", "csv")
    write_envelopes(tmp_path / "e.env", [env])
    expected = feats.frames.astype(np.float32).tobytes()
    binary_ok = read_features(tmp_path / "f.feat").frames.tobytes() == expected
    csv_ok = read_features(tmp_path / "f.csv").frames.tobytes() == expected
    env_ok = read_envelopes(tmp_path / "e.env")[0].values.tobytes() == \
        env.values.astype(np.float32).astype(np.float64).tobytes()
    payload = os.path.getsize(tmp_path / "f.feat") - 20
    ok = feats.shape == (198, 36) and binary_ok and csv_ok and env_ok and payload == 198 * 36 * 4
    record(8, "feature framing and file formats", ok,
           f"shape {feats.shape} (198x36), payload {payload} bytes, binary/csv/envelope round trips "
           f"bit-exact={binary_ok}/{csv_ok}/{env_ok}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
