"""Acceptance criteria, each run through the scenario harness at its stated tolerance.

One PASS/FAIL line per criterion is printed at the end of the pytest session
(and by running this file directly).
"""

from dataclasses import dataclass

import pytest

from hoscat.harness import run_scenario


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    scenarios: tuple
    budget: float  # seconds, summed over the scenarios


CRITERIA = (
    Criterion(1, "flat flow equals exact rotation, energy drift, symplectic defect",
              ("flow_flat_exact",), 30.0),
    Criterion(2, "momentum-scaling identities for flows and scattering evolutions",
              ("scaling_identities",), 120.0),
    Criterion(3, "linear escape bound on the bump, violation on the trapped ring",
              ("lemma21_escape",), 120.0),
    Criterion(4, "high-energy convergence with log-log slope in [-1.3, -0.7] for mu = 2",
              ("thm24_high_energy",), 180.0),
    Criterion(5, "scattering maps: flat identity, energy identity, inverse round trip",
              ("scattering_identities",), 300.0),
    Criterion(6, "exact oscillator: period, parity, Fourier, partial parity",
              ("h0_identities",), 60.0),
    Criterion(7, "exact conjugation of a Weyl operator on the flat oscillator",
              ("egorov_flat_exact",), 300.0),
    Criterion(8, "packet peak tracks the inverse scattering prediction at t0 = +-pi/2",
              ("thm11_forward", "thm11_backward"), 300.0),
    Criterion(9, "recurrence at t = pi: flat antipode and perturbed prediction",
              ("thm13_recurrence_flat", "thm13_recurrence"), 300.0),
    Criterion(10, "wavefront calibration: Gaussian smooth, step in_WF at the jump",
              ("wf_calibration",), 300.0),
)

RESULTS: dict = {}


def evaluate(crit: Criterion) -> tuple[bool, str]:
    summaries = [run_scenario(name) for name in crit.scenarios]
    wall = sum(s.wall_time for s in summaries)
    in_budget = wall <= crit.budget
    ok = in_budget and all(s.passed for s in summaries)
    detail = []
    for s in summaries:
        if s.error:
            detail.append(f"{s.scenario} error: {s.error.splitlines()[0]}")
        for c in s.criteria:
            if not c.passed:
                detail.append(f"{s.scenario} {c.line()}")
    if not in_budget:
        detail.append(f"runtime {wall:.1f} s exceeds {crit.budget:.0f} s")
    tag = "PASS" if ok else "FAIL"
    line = f"{tag} criterion {crit.number:2d}: {crit.title} ({wall:.1f} s)"
    if detail:
        line += "\n      " + "\n      ".join(detail)
    RESULTS[crit.number] = line
    return ok, line


@pytest.mark.acceptance
@pytest.mark.parametrize("crit", CRITERIA, ids=lambda c: f"criterion_{c.number:02d}")
def test_criterion(crit):
    ok, line = evaluate(crit)
    print(line)
    assert ok, line


if __name__ == "__main__":
    import sys
    results = [evaluate(c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
