"""Recover interaction supports with the penalized least-squares fit.

Fits one class of a scenario at growing sample sizes and shows the EBIC
trace, the chosen penalty, and how the recovered support converges to the
truth (the library's analogue of the paper-style support heat maps).
"""

import numpy as np

import sparsehawkes as sh
from sparsehawkes.lasso import fit_class, support_of


def ascii_support(A, active="#", inactive="."):
    return "\n".join("".join(active if v else inactive for v in row) for row in (A != 0))


def main():
    mix = sh.make_scenario(sh.ScenarioSpec(name="scenario1", M=10, seed=0))
    truth = mix.params[0]
    print("true support (class 1):")
    print(ascii_support(truth.A))

    for n in (100, 500, 1000):
        train = sh.sample_dataset(mix, n, 777)
        class1 = [s.path for s in train if s.label == 1]
        fit = fit_class(class1, mix.kernel, M=10)
        d_h = sh.hamming_distance(truth.A, fit.theta_hat.A)
        d_2 = sh.l2_distance(truth.A, fit.theta_hat.A)
        print(f"\nn = {n} ({len(class1)} class-1 paths): kappa_hat = {fit.kappa_hat:.4f}, "
              f"d_H = {d_h:.3f}, d_l2 = {d_2:.3f}")
        print(ascii_support(fit.theta_hat.A))

    # the EBIC trace behind the last selection
    print("\nEBIC trace (kappa, criterion, support size), every 5th grid point:")
    for kappa, crit, size in fit.ebic_trace[::5]:
        marker = "  <- chosen" if abs(kappa - fit.kappa_hat) < 1e-12 else ""
        print(f"  kappa {kappa:8.4f}  ebic {crit:12.2f}  |S| {size:3d}{marker}")


if __name__ == "__main__":
    main()
