"""Error of the squared-envelope convolution model and of early/late
additivity, over band widths, T60 values and RIR ensemble sizes.

A single RIR realisation carries random-phase cross terms that do not
average out inside one band; averaging envelopes over independent RIRs shows
how much of the error is that fluctuation.

    python3 scripts/envelope_model_sweep.py --ensemble 1 4 16
"""
import argparse

from fdlpderev.verify import early_late_additivity_error, envelope_convolution_error


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--bandwidths", type=float, nargs="+", default=[400.0, 200.0, 100.0, 50.0])
    ap.add_argument("--t60", type=float, nargs="+", default=[0.3, 0.5])
    ap.add_argument("--ensemble", type=int, nargs="+", default=[1, 4, 16])
    ap.add_argument("--seed-groups", type=int, default=3,
                    help="disjoint seed groups per ensemble size")
    args = ap.parse_args()

    print("convolution model: relative L2 error (fitted scale)")
    print("t60   ens  group  " + "  ".join(f"{b:>6.0f}Hz" for b in args.bandwidths))
    for t60 in args.t60:
        for n in args.ensemble:
            for g in range(args.seed_groups):
                seeds = range(g * n, (g + 1) * n)
                errs = [envelope_convolution_error(b, t60=t60, seeds=seeds)[0] for b in args.bandwidths]
                print(f"{t60:<5} {n:>4} {g:>6}  " + "  ".join(f"{e:8.3f}" for e in errs))

    print("\nearly/late additivity (50 ms boundary): relative L2 error")
    print("t60   ens  group  " + "  ".join(f"{b:>6.0f}Hz" for b in args.bandwidths))
    for t60 in args.t60:
        for n in args.ensemble:
            for g in range(args.seed_groups):
                seeds = range(g * n, (g + 1) * n)
                errs = [early_late_additivity_error(b, t60=t60, seeds=seeds) for b in args.bandwidths]
                print(f"{t60:<5} {n:>4} {g:>6}  " + "  ".join(f"{e:8.3f}" for e in errs))


if __name__ == "__main__":
    main()
