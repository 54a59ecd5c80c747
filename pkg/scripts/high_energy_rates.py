"""E(lam) = |S^lam_{sigma lam}(X) - S_+(X)| for rational fields with several decay orders mu.

Writes results/high_energy_rates.csv and a log-log plot. The fitted slopes are
compared with the rate -(mu - 1); for mu = 2 an odd-part cancellation makes the
observed decay close to lam^-2.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hoscat.classflow import PhasePoint  # noqa: E402
from hoscat.fields import make_field  # noqa: E402
from hoscat.scattering import high_energy_limit  # noqa: E402


def main(argv=None):
    ap = argparse.ArgumentParser(description="high-energy convergence rates")
    ap.add_argument("--mu", type=float, nargs="+", default=[1.5, 2.0, 2.5, 3.0])
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--x", type=float, default=0.3)
    ap.add_argument("--xi", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=np.pi / 2)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[4, 8, 16, 32, 64, 128, 256])
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    X = PhasePoint(np.array([args.x]), np.array([args.xi]))
    fig, ax = plt.subplots(figsize=(5.5, 4))
    with open(out / "high_energy_rates.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mu", "lambda", "error", "local_slope"])
        for mu in args.mu:
            field = make_field("rational", 1, c=args.c, mu=mu)
            tab = high_energy_limit(field, args.sigma, X, args.lambdas)
            local = np.diff(np.log(tab.errors)) / np.diff(np.log(tab.lambdas))
            for i, (lam, err) in enumerate(zip(tab.lambdas, tab.errors)):
                w.writerow([mu, lam, f"{err:.12g}", f"{local[i - 1]:.4f}" if i else ""])
            print(f"mu={mu:<4} fitted slope {tab.slope:+.3f}  last local slope {local[-1]:+.3f}"
                  f"  rate -(mu-1) = {-(mu - 1):+.2f}")
            ax.loglog(tab.lambdas, tab.errors, "o-", label=f"mu = {mu:g}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("E(lambda)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "high_energy_rates.png", dpi=120)
    print(f"wrote {out / 'high_energy_rates.csv'} and {out / 'high_energy_rates.png'}")


if __name__ == "__main__":
    main()
