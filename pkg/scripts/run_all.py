"""Run every registered scenario (or the ones named) and write artifacts under results/.

    python3 scripts/run_all.py                      # everything
    python3 scripts/run_all.py h0_identities wf_calibration --plots
"""

import argparse
import sys
from pathlib import Path

from hoscat.harness import list_scenarios, make_config, run_scenario


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="scenario names (default: all)")
    ap.add_argument("--out", default="results", help="output root")
    ap.add_argument("--plots", action="store_true", help="render PNGs next to the CSVs")
    args = ap.parse_args(argv)

    names = args.names or [name for name, _ in list_scenarios()]
    rows = []
    for name in names:
        out = Path(args.out) / name
        out.mkdir(parents=True, exist_ok=True)
        cfg = make_config(name, {"scenario": name, "plots": args.plots})
        summary = run_scenario(cfg, out_dir=out)
        print(summary.report(), flush=True)
        rows.append((name, summary.passed, summary.wall_time))

    print("\nscenario                  result  seconds")
    for name, ok, wall in rows:
        print(f"{name:<25} {'PASS' if ok else 'FAIL':<7} {wall:7.1f}")
    return 0 if all(ok for _, ok, _ in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
