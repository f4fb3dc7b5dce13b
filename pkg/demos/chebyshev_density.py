"""Recover the arcsine law of the Chebyshev-conjugate quadratic map.

q(x) = 2 - x^2 on [-2, 2] is smoothly conjugate to the tent map, so its
physical measure has the closed-form density 1/(pi sqrt(4 - x^2)) and
entropy log 2.  This script tabulates the L1 error of the one-step Ulam
density against the exact law as the grid is refined — the inverse
square-root singularities at the endpoints make this the slowest-converging
density in the built-in family, roughly O(bins^-0.44).

Equivalent CLI run: ``srblab density --config <cfg>`` with family=quadratic.
"""

import math

import numpy as np

import srblab as sl


def exact_density(grid: sl.Grid1D) -> sl.GridDensity:
    """L1 projection of 1/(pi sqrt(4 - x^2)) onto the grid."""
    cdf = np.arcsin(np.clip(grid.edges / 2.0, -1.0, 1.0)) / math.pi
    return sl.GridDensity(grid=grid, values=np.diff(cdf) / grid.widths,
                          provenance="normalized")


def main() -> None:
    m = sl.make_map("quadratic")
    print("bins      L1 vs arcsine law    h_pesin")
    for k in range(12, 16):
        mu = sl.stationary_density(sl.one_step_ulam(m, 2**k))
        l1 = sl.l1_distance(mu, exact_density(mu.grid))
        h = sl.entropy_pesin(m, mu)
        print(f"2^{k}      {l1:.6f}             {h:.6f}")
    print(f"target                         {math.log(2):.6f}")

    h_lya, se = sl.entropy_lyapunov(m, 64, 100_000, seed=0)
    print(f"orbit-exponent route: {h_lya:.8f} (se {se:.1e}); near-critical "
          f"starts are resampled, never silently clipped")


if __name__ == "__main__":
    main()
