"""How many order splitters does an ACF imply?  A calibration walkthrough.

The observed prefactor of a power-law sign ACF bounds the number of
splitting traders from below: among all intensity mixes with the same
total mass, the evenly-split market minimises the prefactor.  We build a
synthetic market with a known trader count, pretend we only see its ACF,
and recover the bound.
"""

import numpy as np

from lmfsim import (
    calibrate_curve,
    min_splitter_count,
    prefactor_hetero,
    prefactor_homogeneous,
)

MU = 0.8
ALPHA = 1.5


def main():
    lags = np.arange(1, 10_001, dtype=np.float64)

    print(f"total splitter intensity mu = {MU}, length exponent alpha = {ALPHA}")
    print()
    print("homogeneous market, all traders equal:")
    for true_count in (10, 100, 1000):
        c0 = prefactor_homogeneous(MU, true_count, ALPHA)
        report = calibrate_curve(lags, c0 * lags ** -(ALPHA - 1.0), mu=MU)
        print(f"  true M = {true_count:>5} -> prefactor {c0:.5f} "
              f"-> bound {report['min_splitter_count']:9.2f}")

    print()
    print("heterogeneous market, skewed intensities (bound stays below M):")
    rng = np.random.default_rng(5)
    for true_count in (10, 100, 1000):
        lam = rng.dirichlet(np.full(true_count, 0.4)) * MU
        c0 = prefactor_hetero(np.maximum(lam, 1e-15), ALPHA)
        bound = min_splitter_count(MU, ALPHA, c0)
        print(f"  true M = {true_count:>5} -> prefactor {c0:.5f} "
              f"-> bound {bound:9.2f}")

    print()
    print("the bound is what a lag-1e2..1e4 ACF window alone can certify;")
    print("skewed intensity mixes hide traders, so the bound is conservative.")


if __name__ == "__main__":
    main()
