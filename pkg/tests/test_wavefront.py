import csv

import numpy as np
import pytest

from hoscat.classflow import PhasePoint
from hoscat.errors import InputError
from hoscat.harness.scenarios import gaussian_function, h_subsequences, step_function
from hoscat.quantum import SpatialGrid, WaveFunction, coherent_state, propagate_H0_exact
from hoscat.wavefront import (DEFAULT_H, FLOOR, PhaseBump, PhaseGrid, box_norm, classify_slope,
                              decay_exponent, detect_peak, dual_coherent_state, fbi_points,
                              fbi_transform, fbi_values, fit_decay, rotated_norm,
                              rotated_symbol_test, wf_detect)

GRID = SpatialGrid((8.0,), (2048,))
H4 = (1 / 8, 1 / 16, 1 / 32, 1 / 64)


def test_coherent_peak_is_one():
    h = 1 / 16
    u = coherent_state(GRID, h, [0.5], [1.0])
    T = fbi_transform(u, h, PhaseGrid((0.0, 1.0), (0.5, 1.5), (11, 11)), "peak")
    assert T.max() == pytest.approx(1.0, abs=1e-6)
    assert np.unravel_index(T.argmax(), T.shape) == (5, 5)


@pytest.mark.parametrize("dx,dxi", [(0.3, 0.0), (0.0, 0.4), (0.2, -0.3)])
def test_gaussian_overlap_off_peak(dx, dxi):
    h = 1 / 16
    u = coherent_state(GRID, h, [0.5], [1.0])
    T = abs(fbi_values(u, h, [0.5 + dx], [1.0 + dxi], "peak")[0, 0])
    d2 = dx * dx + dxi * dxi
    # |<coherent(X), coherent(Y)>| = exp(-|X - Y|^2 / (4h))
    assert T == pytest.approx(np.exp(-d2 / (4 * h)), rel=1e-6)


def test_zero_function():
    u = WaveFunction(GRID, np.zeros(GRID.N))
    assert not np.any(fbi_transform(u, 0.1, PhaseGrid((-1, 1), (-1, 1), (5, 5))))


def test_isometry():
    h = 1 / 8
    g = SpatialGrid((6.0,), (512,))
    u = coherent_state(g, h, [0.3], [0.4]).with_values(
        coherent_state(g, h, [0.3], [0.4]).values + 0.5 * coherent_state(g, h, [-1.0], [-0.6]).values)
    grid = PhaseGrid((-4.0, 4.0), (-3.0, 3.0), (321, 241))
    T = fbi_transform(u, h, grid)
    mass = np.sum(T**2) * (grid.xs[1] - grid.xs[0]) * (grid.xis[1] - grid.xis[0])
    assert np.sqrt(mass) == pytest.approx(u.norm(), abs=1e-6)


def test_translation_covariance():
    h = 1 / 16
    u = coherent_state(GRID, h, [0.0], [0.7])
    k = 64
    shift = k * GRID.dx[0]
    v = u.with_values(np.roll(u.values, k))
    xs = np.linspace(-1, 1, 9)
    xis = np.linspace(0.2, 1.2, 7)
    a = np.abs(fbi_values(u, h, xs, xis))
    b = np.abs(fbi_values(v, h, xs + shift, xis))
    assert np.max(np.abs(a - b)) <= 1e-12


def test_modulation_covariance():
    h = 1 / 16
    u = coherent_state(GRID, h, [0.2], [0.3])
    eta = 0.5
    x = GRID.axes[0]
    v = u.with_values(u.values * np.exp(1j * eta * x / h))
    xs = np.linspace(-0.5, 0.8, 7)
    xis = np.linspace(-0.2, 0.9, 12)
    a = np.abs(fbi_values(u, h, xs, xis))
    b = np.abs(fbi_values(v, h, xs, xis + eta))
    assert np.max(np.abs(a - b)) <= 1e-12


def test_fbi_points_match_lattice_and_two_dimensions():
    h = 1 / 16
    u = coherent_state(GRID, h, [0.5], [1.0])
    lat = fbi_values(u, h, [0.4], [0.9])[0, 0]
    assert fbi_points(u, h, [PhasePoint([0.4], [0.9])])[0] == pytest.approx(lat, abs=1e-12)
    g2 = SpatialGrid((6.0, 6.0), (128, 128))
    v = coherent_state(g2, 0.25, [0.5, -0.5], [0.25, 0.5])
    peak = fbi_points(v, 0.25, [PhasePoint([0.5, -0.5], [0.25, 0.5])], "peak")[0]
    assert abs(peak) == pytest.approx(1.0, abs=1e-6)


def test_margin_check():
    with pytest.raises(InputError):
        fbi_transform(coherent_state(GRID, 0.1, [0.0], [0.0]), 0.1, PhaseGrid((-7.9, 0), (0, 1)))


def test_decay_calibration_cases():
    gauss, step = gaussian_function(), step_function()
    fg = decay_exponent(gauss, PhasePoint([0.0], [1.0]))
    assert fg.slope >= 4 and fg.classify() == "smooth"
    fs = decay_exponent(step, PhasePoint([0.0], [1.0]))
    assert fs.slope == pytest.approx(0.5, abs=0.15) and fs.classify() == "in_WF"
    ff = decay_exponent(step, PhasePoint([1.0], [1.0]))
    assert ff.slope >= 4 and ff.classify() == "smooth"


def test_thresholds_hold_down_to_small_h():
    gauss, step = gaussian_function(), step_function()
    hs = [2.0**-k for k in range(3, 9)]
    for seq in h_subsequences(hs):
        assert decay_exponent(gauss, PhasePoint([0.0], [1.0]), seq).classify() == "smooth"
        assert decay_exponent(step, PhasePoint([0.0], [1.0]), seq).classify() == "in_WF"


def test_step_slope_against_direct_quadrature():
    # independent oracle: trapezoid sum of the wave-packet integral on a finer grid
    step = step_function()
    h = 1 / 32
    y = np.linspace(-1.0, 1.0, 400001)
    integrand = np.exp(-1j * y / h - y**2 / (2 * h)) * (y > 0)
    direct = abs(np.trapezoid(integrand, y)) * (np.pi * h) ** -0.25
    assert abs(fbi_values(step, h, [0.0], [1.0], "peak")[0, 0]) == pytest.approx(direct, rel=1e-4)


def test_floor_limited_is_smooth():
    fit = fit_decay([0.1, 0.05, 0.025, 0.0125], [1e-3, 1e-17, 1e-20, 0.0])
    assert fit.floor_limited and fit.classify() == "smooth"
    assert classify_slope(2.0, 0.0) == "inconclusive"
    assert classify_slope(1.0, 0.5) == "inconclusive"


def test_h_sequence_validation():
    u = gaussian_function()
    with pytest.raises(InputError):
        decay_exponent(u, PhasePoint([0.0], [1.0]), (1 / 8, 1 / 16, 1 / 32))
    with pytest.raises(InputError):
        decay_exponent(u, PhasePoint([0.0], [1.0]), (1 / 8, 1 / 16, 1 / 24, 1 / 64))


def _coherent_family(x0, xi0):
    def family(h):
        return coherent_state(SpatialGrid((4.0,), (4096,)), h, [x0], [xi0])
    return family


def test_wf_detect_coherent_family():
    fam = _coherent_family(0.5, 1.0)
    rep = wf_detect(fam, PhaseGrid((-0.5, 1.5), (0.0, 2.0), (9, 9)), H4)
    X = PhasePoint([0.5], [1.0])
    assert rep.peak.distance(X) <= np.sqrt(min(H4))
    hits = rep.in_wf()
    centroid = PhasePoint([np.mean([p.x[0] for p in hits])], [np.mean([p.xi[0] for p in hits])])
    assert centroid.distance(X) <= np.sqrt(min(H4))
    corners = [p for p in rep.points if p.distance(X) > 1.3]
    assert corners and not any(p in hits for p in corners)
    assert "proxy" in rep.note


def test_wf_detect_gaussian_has_no_wavefront():
    # the box of half-width 0.25 must stay clear of the zero frequency
    rep = wf_detect(gaussian_function(), PhaseGrid((-1.0, 1.0), (1.0, 2.0), (5, 5)), H4)
    assert not rep.in_wf()


def test_wf_detect_parity():
    fam = _coherent_family(0.5, 1.0)

    def flipped(h):
        return fam(h).reflected()

    region = PhaseGrid((-1.0, 1.0), (-1.25, 1.25), (9, 11))
    a = wf_detect(fam, region, H4)
    b = wf_detect(flipped, region, H4)
    flip_a = {(round(-p.x[0], 9), round(-p.xi[0], 9)) for p in a.in_wf()}
    got_b = {(round(p.x[0], 9), round(p.xi[0], 9)) for p in b.in_wf()}
    assert flip_a == got_b and got_b
    assert b.peak.distance(a.peak.antipode()) <= 1e-6


def test_report_csv(tmp_path):
    rep = wf_detect(_coherent_family(0.0, 1.0), PhaseGrid((-0.5, 0.5), (0.5, 1.5), (3, 3)), H4)
    path = tmp_path / "wf.csv"
    rep.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1].startswith("# h_sequence=")
    rows = list(csv.reader(lines[2:]))
    assert rows[0] == ["x0", "xi0", "exponent", "residual", "classification"]
    assert len(rows) == 10 and {r[4] for r in rows[1:]} <= {"in_WF", "smooth", "inconclusive"}


def test_detect_peak():
    h = 1 / 32
    u = coherent_state(GRID, h, [0.37], [-0.81])
    P = detect_peak(u, h, PhasePoint([0.0], [0.0]))
    assert P.distance(PhasePoint([0.37], [-0.81])) <= 1e-3


def test_phase_bump():
    a = PhaseBump(PhasePoint([0.0], [1.0]), radius=0.5)
    assert a(0.0, 1.0) == 1.0 and a(0.5, 1.0) == 0.0 and a(0.0, 1.6) == 0.0
    assert a(0.45, 1.0) < 1e-10
    p = PhaseBump(PhasePoint([0.0], [1.0]), radius=0.5, profile="plateau")
    assert p(0.2, 1.0) == 1.0 and p(0.0, 1.5) == 0.0
    with pytest.raises(InputError):
        PhaseBump(PhasePoint([0.0], [1.0]), profile="cone")


def test_rotated_at_time_zero_is_plain_test():
    h = 1 / 16
    u = coherent_state(GRID, h, [0.3], [0.5])
    a = PhaseBump(PhasePoint([0.3], [0.5]))
    from hoscat.quantum import apply_weyl
    plain = apply_weyl(a, h, u, x_support=(-0.2, 0.8)).norm()
    assert plain > 0.05
    assert rotated_norm(u, a, 0.0, h) == pytest.approx(plain, rel=1e-10)


def test_rotated_at_pi_negates_the_symbol():
    fam = _coherent_family(0.3, 0.5)
    on = rotated_symbol_test(fam, PhaseBump(PhasePoint([-0.3], [-0.5])), np.pi, H4)
    plain = rotated_symbol_test(fam, PhaseBump(PhasePoint([0.3], [0.5])), 0.0, H4)
    assert on.classify() == plain.classify() == "in_WF"
    assert on.slope == pytest.approx(plain.slope, abs=1e-6)


def test_rotated_symbol_agrees_with_propagated_detection():
    x0, xi0 = 0.4, 0.6

    def fam(h):
        return dual_coherent_state(SpatialGrid((96.0,), (8192,)), h, x0, xi0)

    def evolved(h):
        return propagate_H0_exact(1.0, np.pi / 2, fam(h))

    target = PhasePoint([xi0], [-x0])
    far = PhasePoint([xi0 + 1.0], [-x0])
    for point, expected in ((target, "in_WF"), (far, "smooth")):
        fit = rotated_symbol_test(fam, PhaseBump(point), np.pi / 2, H4)
        region = PhaseGrid((point.x[0] - 0.05, point.x[0] + 0.05),
                           (point.xi[0] - 0.05, point.xi[0] + 0.05), (1, 1))
        rep = wf_detect(evolved, region, H4)
        assert fit.classify() == expected
        assert rep.classification[0] == expected
