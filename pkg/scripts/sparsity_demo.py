"""DCT coefficients of a 1000-sample speed profile.

Writes ``index,speed,coefficient`` rows and prints how many coefficients
exceed 1% of the largest one.
"""
import argparse

import numpy as np

from cvcs.synthetic import SynthConfig, generate_synthetic_traces
from cvcs.transform import dct_forward, sparsity_count


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=0.01)
    p.add_argument("-o", "--output", default="sparsity.csv")
    args = p.parse_args()

    cfg = SynthConfig(num_trips=1, duration_range_s=(args.length / 10.0, args.length / 10.0), rng_seed=args.seed)
    x = generate_synthetic_traces(cfg)[0].speeds[:args.length]
    alpha = dct_forward(x)
    with open(args.output, "w") as fh:
        fh.write("index,speed,coefficient\n")
        for i, (v, a) in enumerate(zip(x, alpha)):
            fh.write(f"{i},{v!r},{a!r}\n")
    k = sparsity_count(alpha, args.threshold)
    print(f"{k} of {x.size} coefficients exceed {args.threshold:g} x max|alpha| -> {args.output}")


if __name__ == "__main__":
    main()
