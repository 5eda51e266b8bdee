"""Pick desk-scale (n, m, t, r, zeta) for the deletion-robust zero-bit code.

Step 1 measures the per-bit error ``delta`` of the majority code over
``BDC_q o BSC_p``.  Step 2 turns ``delta`` into a parity-check failure rate
``1/2 - (1 - 2 delta)^t / 2`` and chooses the smallest ``r`` (and a ``zeta``)
with a detection margin of ``margin_sigmas`` standard deviations and a
per-decode false-positive bound ``exp(-2 r zeta^2) <= fpr``.  Step 3 (``--verify``)
runs the full code end to end.

    python3 scripts/tune_deletion.py --q 0.3 --p 0.05 --verify
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from prckit import channels, f2, multi, zero


def majority_error(n: int, m: int, channel, trials: int, rng) -> float:
    errs = []
    for _ in range(trials):
        x = f2.random_bits(rng, n)
        y = channels.apply(channel, multi.majenc(x, m, rng), rng)
        errs.append(np.mean(multi.majdec(y, n, rng) != x))
    return float(np.mean(errs))


def choose_code(delta: float, t: int, fpr: float, margin_sigmas: float, max_r: int):
    """Smallest r (and its zeta) meeting the margin and the false-positive bound."""
    mu = zero.expected_unsat_fraction(t, delta)
    sd1 = math.sqrt(mu * (1 - mu))
    for r in range(64, max_r + 1, 16):
        zeta = math.sqrt(math.log(1 / fpr) / (2 * r))
        if zeta >= 0.5:
            continue
        if mu + margin_sigmas * sd1 / math.sqrt(r) < 0.5 - zeta:
            return r, zeta, mu
    return None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--q", type=float, default=0.3, help="deletion rate")
    ap.add_argument("--p", type=float, default=0.05, help="substitution rate (after embedding)")
    ap.add_argument("--ns", default="256,512,1024")
    ap.add_argument("--ms", default="513,1025,2049")
    ap.add_argument("--t", type=int, default=2)
    ap.add_argument("--fpr", type=float, default=1e-9)
    ap.add_argument("--sigmas", type=float, default=4.0)
    ap.add_argument("--trials", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--verify", action="store_true")
    ap.add_argument("--verify-trials", type=int, default=20)
    args = ap.parse_args(argv)

    rng = f2.random_source(args.seed)
    chan = channels.Compose(channels.BDC(args.q), channels.BSC(args.p))
    best = None
    for n in map(int, args.ns.split(",")):
        for m in map(int, args.ms.split(",")):
            t0 = time.time()
            delta = majority_error(n, m, chan, args.trials, rng)
            pick = choose_code(delta, args.t, args.fpr, args.sigmas, max_r=int(0.8 * n))
            print(f"n={n:5d} m={m:5d} delta={delta:.4f} pick={pick} ({time.time() - t0:.1f}s)")
            if pick and (best is None or n * m < best[0] * best[1]):
                best = (n, m, *pick)
    if best is None:
        print("no feasible parameters; widen the grid")
        return 1
    n, m, r, zeta, mu = best
    print(f"chosen: n={n} m={m} t={args.t} r={r} zeta={zeta:.4f} expected unsat fraction {mu:.4f}")
    if args.verify:
        params = zero.PrcParams(n=n, g=min(n, 128), t=args.t, r=r, eta=0.0, zeta=zeta)
        key = multi.DeletionKey(zero.keygen(params, rng), m)
        hits = sum(bool(multi.deletion_decode(key, channels.apply(chan, multi.deletion_encode(key, rng=rng), rng), rng))
                   for _ in range(args.verify_trials))
        print(f"verify: detected {hits}/{args.verify_trials}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
