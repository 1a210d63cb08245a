"""Train the desk-scale enhancer on synthetic pairs and report the loss
curve, a single-pair overfit run and the held-out log-envelope MSE.

    python3 scripts/train_and_evaluate.py --pairs 50 --epochs 10 --out runs/desk
"""
import argparse
import os
import time

from fdlpderev import verify
from fdlpderev.enhancer import EnhancerConfig, init_params, save_checkpoint
from fdlpderev.enhancer.checkpoint import write_history
from fdlpderev.enhancer.training import example_loss, examples_from_pairs, train
from fdlpderev.synth import synthetic_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--pairs", type=int, default=50)
    ap.add_argument("--val", type=int, default=5, help="pairs held back for validation")
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--data-seed", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scale", default="desk", choices=("desk", "full"))
    ap.add_argument("--overfit-steps", type=int, default=200)
    ap.add_argument("--heldout", type=int, default=10)
    ap.add_argument("--out", default=None, help="directory for checkpoint and history")
    args = ap.parse_args()

    t0 = time.perf_counter()
    examples = examples_from_pairs(synthetic_pairs(args.pairs, seed=args.data_seed))
    n_train = len(examples) - args.val
    config = EnhancerConfig.preset(args.scale, epochs=args.epochs, seed=args.seed)
    print(f"{n_train} train / {args.val} validation segments, {args.scale} model")

    def show(rec):
        print(f"epoch {rec.epoch:3d}  train {rec.train_loss:8.4f}  val {rec.val_loss:8.4f}", flush=True)

    result = train(examples[:n_train], examples[n_train:], config, on_epoch=show)
    print(f"best epoch {result.best_epoch}; {time.perf_counter() - t0:.0f} s")

    base, enh, rel = verify.enhancement_metric(result.params, config,
                                               verify.heldout_examples(args.heldout))
    print(f"held-out log-MSE to clean: reverberant {base:.4f}, enhanced {enh:.4f}, "
          f"reduction {100 * rel:.1f}%")

    if args.overfit_steps:
        one = examples[:1]
        cfg = config.replace(epochs=args.overfit_steps)
        start = init_params(cfg)
        mse0 = example_loss(start, one[0], cfg).mse
        fit = train(one, [], cfg, params=start)
        mse1 = example_loss(fit.last_params, one[0], cfg).mse
        print(f"single-pair overfit: MSE {mse0:.4f} -> {mse1:.4f} ({100 * mse1 / mse0:.1f}%)")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_checkpoint(os.path.join(args.out, "enhancer.ckpt"), result.params, config,
                        {"epoch": result.best_epoch})
        write_history(os.path.join(args.out, "history.txt"), result.records)
        print(f"wrote {args.out}/enhancer.ckpt and history.txt")


if __name__ == "__main__":
    main()
