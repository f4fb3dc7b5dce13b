"""Profile how fast non-uniform expansion kicks in for a cylinder map.

The skew product (theta, x) -> (16 theta mod 1, a0 + 0.01 sin(2 pi theta)
- x^2) is expanding on average but has a critical curve at x = 0, so some
orbits take a long time before their averaged expansion clears the lambda
threshold or their averaged recurrence clears epsilon.  The tail profile
records the fraction of sampled points still slow at each horizon n; its
decay is fitted against C n^-gamma and C exp(-gamma sqrt(n)) and the model
with the smaller residual is preferred.  Uniformly expanding maps produce
the empty profile and no fit, as the doubling-map control run shows.

Outputs land in demo_out/viana/ (tail.csv and tail.svg).
Equivalent CLI run: ``srblab tail --config <cfg>``.
"""

import srblab as sl


def main() -> None:
    control = sl.ExperimentConfig(family="doubling", tail_lam=0.6,
                                  tail_n_max=60, tail_sample_size=2000,
                                  seed=0, out_dir="demo_out/doubling")
    run = sl.run_tail(control)
    print(f"doubling control: max slow fraction "
          f"{run.profile.frac_union.max():.3f}, preferred model: {run.preferred}")

    cfg = sl.ExperimentConfig(family="viana",
                              map_params={"alpha": 0.01, "d": 16},
                              tail_lam=0.3, tail_eps=0.075, tail_delta=1e-6,
                              tail_n_max=200, tail_sample_size=10_000,
                              seed=0, out_dir="demo_out/viana")
    run = sl.run_tail(cfg)
    prof = run.profile
    print(f"cylinder map: slow fraction {prof.frac_union[0]:.4f} at n=1, "
          f"{prof.frac_union[-1]:.4f} at n={prof.n[-1]}")
    for model, fit in run.fits.items():
        if isinstance(fit, str):
            print(f"  {model}: {fit}")
        else:
            print(f"  {model}: gamma={fit.gamma:.4f} C={fit.C:.2f} "
                  f"residual={fit.residual:.3f}")
    print(f"preferred: {run.preferred}")
    print(f"wrote {run.csv_path} and {run.svg_path}")


if __name__ == "__main__":
    main()
