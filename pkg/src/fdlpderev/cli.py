"""Batch command-line front end.

Exit codes: 0 success; 1 some batch items or checks failed; 2 invalid
argument or configuration; 3 I/O or file-format error; 4 numeric failure.
"""
import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import yaml

from .errors import (InvalidArgumentError, NumericOverflowError, NumericalDegeneracyError,
                     RateMismatchError, UnsupportedFormatError)
from .fdlp import FdlpConfig, apply_gain, signal_envelopes
from .features import integrate_segments
from .io import (MANIFEST_FIELDS, ManifestRecord, read_envelopes, read_manifest, read_wav,
                 write_envelopes, write_features, write_manifest, write_wav)

log = logging.getLogger("fdlpderev")

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4

# key -> (type, default); the config file may set any of these, flags override
CONFIG_KEYS = {
    "seed": (int, 0),
    "workers": (int, 1),
    "scale": (str, "desk"),
    "epochs": (int, 10),
    "output": (str, "out"),
    "format": (str, "binary"),
    "gain_dump": (bool, False),
    "inputs": (list, []),
    "clean": (list, []),
    "synthetic": (int, 0),
    "synthetic_seconds": (float, 2.0),
    "t60": (list, [0.3, 0.5, 0.7]),
    "direct_delay": (float, 0.0),
    "tail_level": (float, 0.1),
    "pairing": (str, "exhaustive"),
    "rirs_per_clean": (int, 1),
    "manifest": (str, None),
    "val_fraction": (float, 0.1),
    "learning_rate": (float, None),
    "batch_size": (int, 1),
    "reg_weight": (float, 0.05),
    "final_init": (str, "random"),
    "checkpoint": (str, None),
    "lp_order": (int, 160),
    "sample_rate": (int, 16000),
    "channel": (int, 0),
}


class RunConfig(dict):
    """Validated key set; attribute access for convenience."""

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    def fdlp(self):
        return FdlpConfig(sample_rate=self.sample_rate, lp_order_per_band=self.lp_order)


def _coerce(key, value):
    kind, _ = CONFIG_KEYS[key]
    if value is None:
        return None
    if kind is list:
        return list(value) if isinstance(value, (list, tuple)) else [value]
    if kind is bool:
        if not isinstance(value, bool):
            raise InvalidArgumentError(f"config key {key!r} must be true or false")
        return value
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"config key {key!r}: cannot read {value!r} as {kind.__name__}") from exc


def load_run_config(path=None, overrides=None):
    values = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    if path is not None:
        try:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise InvalidArgumentError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidArgumentError(f"{path}: top level must be a mapping")
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise InvalidArgumentError(f"{path}: unknown config keys {unknown}")
        for k, v in data.items():
            values[k] = _coerce(k, v)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, v)
    cfg = RunConfig(values)
    if cfg.scale not in ("full", "desk"):
        raise InvalidArgumentError(f"scale must be full or desk, got {cfg.scale!r}")
    if cfg.format not in ("binary", "csv"):
        raise InvalidArgumentError(f"format must be binary or csv, got {cfg.format!r}")
    if cfg.workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    if not 0 <= cfg.val_fraction < 1:
        raise InvalidArgumentError("val_fraction must lie in [0, 1)")
    return cfg


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _run_batch(fn, jobs, workers):
    """Ordered results of fn(job); each result is (path, error message or None)."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


class _Guarded:
    """Picklable wrapper turning a per-file exception into an error message."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, job):
        try:
            return self.fn(job), None
        except Exception as exc:  # noqa: BLE001 - isolate per-file failures
            return None, f"{type(exc).__name__}: {exc}"


def _report(results, jobs):
    failed = 0
    for job, (out, err) in zip(jobs, results):
        if err:
            failed += 1
            print(f"FAILED {job[0]}: {err}", file=sys.stderr)
        else:
            print(out)
    if failed:
        print(f"{failed} of {len(jobs)} inputs failed", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


# simulate ----------------------------------------------------------------

def cmd_simulate(cfg):
    from .reverb import RirSpec, make_dataset
    from .synth import KINDS, synth_clean

    out = cfg.output
    os.makedirs(os.path.join(out, "reverb"), exist_ok=True)
    if cfg.clean:
        clean_paths = [os.path.abspath(p) for p in cfg.clean]
        signals = [read_wav(p, cfg.sample_rate, cfg.channel) for p in clean_paths]
    elif cfg.synthetic > 0:
        os.makedirs(os.path.join(out, "clean"), exist_ok=True)
        clean_paths, signals = [], []
        for i in range(cfg.synthetic):
            sig = synth_clean(KINDS[i % len(KINDS)], cfg.seed * 100003 + i,
                              cfg.synthetic_seconds, cfg.sample_rate)
            path = os.path.abspath(os.path.join(out, "clean", f"clean_{i:04d}.wav"))
            write_wav(path, sig, "float32")
            clean_paths.append(path)
            signals.append(sig)
    else:
        raise InvalidArgumentError("simulate needs clean inputs (--clean) or --synthetic N")
    if not cfg.t60:
        raise InvalidArgumentError("simulate needs at least one t60 value")
    specs = [RirSpec(t60=float(t), direct_delay=cfg.direct_delay, seed=cfg.seed * 1000 + j,
                     sample_rate=cfg.sample_rate, tail_level=cfg.tail_level)
             for j, t in enumerate(cfg.t60)]
    pairs = make_dataset(signals, specs, pairing_seed=cfg.seed, pairing=cfg.pairing,
                         rirs_per_clean=cfg.rirs_per_clean)
    manifest = os.path.abspath(os.path.join(out, "manifest.tsv"))
    base = os.path.dirname(manifest)
    records = []
    for k, pair in enumerate(pairs):
        rpath = os.path.join(out, "reverb", f"{_stem(clean_paths[pair.clean_index])}"
                                            f"_rir{pair.rir_index:02d}_{k:04d}.wav")
        write_wav(rpath, pair.reverberant, "float32")
        spec = pair.rir.spec
        records.append(ManifestRecord(os.path.relpath(clean_paths[pair.clean_index], base),
                                      os.path.relpath(os.path.abspath(rpath), base),
                                      spec.t60, spec.direct_delay, spec.seed))
    write_manifest(manifest, records)
    print(f"wrote {len(records)} pairs to {manifest}")
    return EXIT_OK


# extract -----------------------------------------------------------------

def _extract_one(job):
    path, out_dir, sample_rate, lp_order, channel = job
    fdlp = FdlpConfig(sample_rate=sample_rate, lp_order_per_band=lp_order)
    envs = signal_envelopes(read_wav(path, sample_rate, channel), fdlp)
    dest = os.path.join(out_dir, _stem(path) + ".env")
    write_envelopes(dest, envs)
    return dest


def cmd_extract(cfg):
    if not cfg.inputs:
        raise InvalidArgumentError("extract needs input WAV files")
    os.makedirs(cfg.output, exist_ok=True)
    jobs = [(p, cfg.output, cfg.sample_rate, cfg.lp_order, cfg.channel) for p in cfg.inputs]
    return _report(_run_batch(_Guarded(_extract_one), jobs, cfg.workers), jobs)


# train -------------------------------------------------------------------

def enhancer_config(cfg, **extra):
    from .enhancer.config import EnhancerConfig
    overrides = dict(epochs=cfg.epochs, seed=cfg.seed, reg_weight=cfg.reg_weight,
                     batch_size=cfg.batch_size, final_init=cfg.final_init)
    if cfg.learning_rate is not None:
        overrides["learning_rate"] = cfg.learning_rate
    overrides.update(extra)
    return EnhancerConfig.preset(cfg.scale, **overrides)


def cmd_train(cfg):
    from .enhancer.checkpoint import save_checkpoint, write_history
    from .enhancer.network import init_params
    from .enhancer.training import TrainingAborted, examples_from_signals, train

    if not cfg.manifest:
        raise InvalidArgumentError("train needs --manifest")
    records = read_manifest(cfg.manifest)
    fdlp = cfg.fdlp()
    econf = enhancer_config(cfg)
    os.makedirs(cfg.output, exist_ok=True)
    ckpt = os.path.join(cfg.output, "enhancer.ckpt")
    history = os.path.join(cfg.output, "history.txt")
    n_val = int(round(cfg.val_fraction * len(records))) if len(records) > 1 else 0
    train_recs, val_recs = records[:len(records) - n_val], records[len(records) - n_val:]

    def load(recs):
        out = []
        for r in recs:
            out.extend(examples_from_signals(read_wav(r.clean_path, cfg.sample_rate),
                                             read_wav(r.reverb_path, cfg.sample_rate), fdlp))
        return out

    params = init_params(econf)
    if econf.epochs == 0:
        save_checkpoint(ckpt, params, econf, {"epoch": 0})
        write_history(history, [])
        print(f"wrote initial checkpoint {ckpt}")
        return EXIT_OK
    train_ex, val_ex = load(train_recs), load(val_recs)
    print(f"{len(train_ex)} training and {len(val_ex)} validation segments")

    def on_epoch(rec):
        print(f"epoch {rec.epoch:3d}  train {rec.train_loss:.6f}  val {rec.val_loss:.6f}",
              flush=True)

    def on_improve(p, rec):
        save_checkpoint(ckpt, p, econf, {"epoch": rec.epoch})

    try:
        result = train(train_ex, val_ex, econf, fdlp, params, on_epoch=on_epoch,
                       on_improve=on_improve)
    except TrainingAborted as exc:
        save_checkpoint(ckpt, exc.last_good, econf, {"aborted_at_epoch": exc.epoch})
        print(f"training aborted: {exc}; last good parameters in {ckpt}", file=sys.stderr)
        return EXIT_NUMERIC
    write_history(history, result.records)
    save_checkpoint(ckpt, result.params, econf, {"epoch": result.best_epoch})
    print(f"best epoch {result.best_epoch}; checkpoint {ckpt}; history {history}")
    return EXIT_OK


# enhance -----------------------------------------------------------------

def _enhance_one(job):
    from .enhancer.checkpoint import load_checkpoint
    from .enhancer.network import forward
    path, out_dir, ckpt, gain_dump = job
    params, econf, _ = load_checkpoint(ckpt)
    envs = read_envelopes(path)
    enhanced, gains = [], []
    for env in envs:
        if env.values.shape[1] != econf.num_bands:
            raise InvalidArgumentError(f"{path}: envelope has {env.values.shape[1]} bands, "
                                       f"model expects {econf.num_bands}")
        gain = forward(env, params, econf)
        enhanced.append(apply_gain(env, gain))
        gains.append(type(env)(gain.values, env.valid_length))
    dest = os.path.join(out_dir, _stem(path) + ".env")
    write_envelopes(dest, enhanced)
    if gain_dump:
        write_envelopes(os.path.join(out_dir, _stem(path) + ".gain.env"), gains)
    return dest


def cmd_enhance(cfg):
    from .enhancer.checkpoint import load_checkpoint
    if not cfg.checkpoint:
        raise InvalidArgumentError("enhance needs --checkpoint")
    if not cfg.inputs:
        raise InvalidArgumentError("enhance needs input envelope dumps")
    _, econf, _ = load_checkpoint(cfg.checkpoint)
    for p in cfg.inputs:
        try:
            cols = read_envelopes(p)[0].values.shape[1]
        except (OSError, UnsupportedFormatError):
            continue  # reported per file below
        if cols != econf.num_bands:
            raise InvalidArgumentError(f"{p}: envelope has {cols} bands but the checkpoint "
                                       f"expects {econf.num_bands}")
    os.makedirs(cfg.output, exist_ok=True)
    if any(os.path.abspath(os.path.join(cfg.output, _stem(p) + ".env")) == os.path.abspath(p)
           for p in cfg.inputs):
        raise InvalidArgumentError("output would overwrite an input file")
    jobs = [(p, cfg.output, cfg.checkpoint, cfg.gain_dump) for p in cfg.inputs]
    return _report(_run_batch(_Guarded(_enhance_one), jobs, cfg.workers), jobs)


# featurize ---------------------------------------------------------------

def _featurize_one(job):
    path, out_dir, fmt, sample_rate = job
    fdlp = FdlpConfig(sample_rate=sample_rate)
    feats = integrate_segments(read_envelopes(path), fdlp)
    dest = os.path.join(out_dir, _stem(path) + (".csv" if fmt == "csv" else ".feat"))
    write_features(feats, dest, fmt)
    return dest


def cmd_featurize(cfg):
    if not cfg.inputs:
        raise InvalidArgumentError("featurize needs input envelope dumps")
    os.makedirs(cfg.output, exist_ok=True)
    jobs = [(p, cfg.output, cfg.format, cfg.sample_rate) for p in cfg.inputs]
    return _report(_run_batch(_Guarded(_featurize_one), jobs, cfg.workers), jobs)


# verify ------------------------------------------------------------------

def cmd_verify(cfg):
    from . import verify

    checks = [verify.check_numerical_core(cfg.seed), verify.check_fdlp_fidelity(cfg.fdlp()),
              verify.check_envelope_convolution(), verify.check_additivity(),
              verify.check_gradients()]
    if cfg.checkpoint:
        from .enhancer.checkpoint import load_checkpoint
        params, econf, _ = load_checkpoint(cfg.checkpoint)
        checks.append(verify.check_enhancement(params, econf))
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "extract": cmd_extract,
    "train": cmd_train,
    "enhance": cmd_enhance,
    "featurize": cmd_featurize,
    "verify": cmd_verify,
}

HELP = {
    "simulate": "convolve clean audio with synthetic RIRs; writes WAV pairs and a manifest "
                f"(one tab-separated line per pair: {MANIFEST_FIELDS}; paths relative to "
                "the manifest)",
    "extract": "FDLP envelope dumps (FDLPENVL) for WAV inputs",
    "train": "train the gain predictor from a manifest; writes enhancer.ckpt and history.txt",
    "enhance": "apply a trained gain predictor to envelope dumps",
    "featurize": "25 ms / 10 ms log features (FDLPFEAT or CSV) from envelope dumps",
    "verify": "run numerical and model-assumption checks",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with run settings; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--scale", choices=("full", "desk"))
    common.add_argument("--epochs", type=int)
    common.add_argument("--output", help="output directory")
    common.add_argument("--format", choices=("binary", "csv"))
    common.add_argument("--gain-dump", action="store_const", const=True, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fdlpderev", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
        if name in ("extract", "enhance", "featurize"):
            p.add_argument("inputs", nargs="*")
        if name == "simulate":
            p.add_argument("--clean", nargs="+", help="clean WAV inputs")
            p.add_argument("--synthetic", type=int, help="generate N synthetic clean signals")
            p.add_argument("--t60", type=float, nargs="+")
            p.add_argument("--pairing", choices=("exhaustive", "random"))
            p.add_argument("--rirs-per-clean", type=int)
        if name == "train":
            p.add_argument("--manifest")
            p.add_argument("--val-fraction", type=float)
            p.add_argument("--learning-rate", type=float)
            p.add_argument("--final-init", choices=("random", "zero"))
        if name in ("enhance", "verify"):
            p.add_argument("--checkpoint")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items()
                 if k in CONFIG_KEYS and not (k == "inputs" and not v)}
    try:
        cfg = load_run_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except (InvalidArgumentError, RateMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalDegeneracyError, NumericOverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, UnsupportedFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
