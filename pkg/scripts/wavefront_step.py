"""FBI magnitude of a tapered step at several h, and decay exponents along xi = 1.

The jump at x = 0 shows up as a slowly decaying ridge (exponent near 1/2); points
away from the jump decay faster than any threshold we fit.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hoscat.classflow import PhasePoint  # noqa: E402
from hoscat.harness.scenarios import step_function  # noqa: E402
from hoscat.wavefront import DEFAULT_H, PhaseGrid, decay_exponent, fbi_transform  # noqa: E402


def main(argv=None):
    ap = argparse.ArgumentParser(description="wavefront of a step function")
    ap.add_argument("--h", type=float, nargs="+", default=[1 / 16, 1 / 64, 1 / 256])
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    u = step_function()
    region = PhaseGrid((-1.0, 1.5), (0.25, 2.0), (126, 88))
    fig, axes = plt.subplots(1, len(args.h), figsize=(4 * len(args.h), 3.4), squeeze=False)
    for ax, h in zip(axes[0], args.h):
        mag = fbi_transform(u, h, region, normalization="peak", check_margin=False)
        im = ax.imshow(np.log10(mag.T + 1e-16), origin="lower", aspect="auto", vmin=-8, vmax=0,
                       extent=(*region.x_range, *region.xi_range))
        ax.set_title(f"log10 |T_h u|, h = 1/{round(1 / h)}")
        ax.set_xlabel("x")
    axes[0][0].set_ylabel("xi")
    fig.colorbar(im, ax=axes[0].tolist())
    fig.savefig(out / "wavefront_step.png", dpi=110, bbox_inches="tight")

    print("  x     slope   residual  class")
    for x in (-0.75, -0.25, 0.0, 0.25, 0.75, 1.0):
        fit = decay_exponent(u, PhasePoint([x], [1.0]), DEFAULT_H)
        print(f"{x:5.2f}  {fit.slope:7.3f}  {fit.residual:8.4f}  {fit.classify()}")
    print(f"wrote {out / 'wavefront_step.png'}")


if __name__ == "__main__":
    main()
