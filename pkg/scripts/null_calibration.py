"""Calibration on the all-noise twin: permutation p-value uniformity and
chi-square rejection rates at the nominal level."""

import argparse

import numpy as np

from kcausal.causality import ScanSettings, scan_lagged_blocks
from kcausal.kernel import KernelSpec
from kcausal.synth import SynthConfig, generate_null


def ks_uniform(p):
    p = np.sort(np.asarray(p))
    n = p.size
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return max(np.abs(hi - p).max(), np.abs(p - lo).max())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--dims", type=int, default=3)
    ap.add_argument("--method", default="cc", choices=("cc", "kcc", "genvar"))
    ap.add_argument("--permutations", type=int, default=199)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    perm_p = []
    chi_p = []
    for rep in range(args.replicates):
        blocks = generate_null(
            SynthConfig(args.samples, 4, args.dims, args.seed + 10_000 + rep)
        )
        settings = ScanSettings(
            method=args.method, lags=1,
            kernel=KernelSpec(ridge=1e-7, chol_tol=1e-6, max_rank=48),
            n_perm=args.permutations, seed=rep,
        )
        res = scan_lagged_blocks(blocks, settings, pairs=[("Y1", "X")])[0]
        perm_p.append(res.p_perm)
        if res.p_chi2 is not None:
            chi_p.append(res.p_chi2)

    print(f"permutation p-values: KS distance to uniform = {ks_uniform(perm_p):.3f}")
    for alpha in (0.05, 0.01):
        rate = np.mean(np.asarray(perm_p) <= alpha)
        print(f"  rejection rate at {alpha:.0%}: {rate:.1%}")
    if chi_p:
        print(f"chi-square p-values: KS = {ks_uniform(chi_p):.3f}")
        for alpha in (0.05, 0.01):
            print(f"  rejection rate at {alpha:.0%}: {np.mean(np.asarray(chi_p) <= alpha):.1%}")


if __name__ == "__main__":
    main()
